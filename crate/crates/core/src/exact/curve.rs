use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    /// First occurrence from a stationary start.
    Hitting,
    /// First occurrence given the word at the origin.
    Return,
}

/// Tabulated `t ↦ P(τ > t)` (hitting) or `t ↦ P_A(τ > t)` (return).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub law: LawKind,
    /// `values[t] = P(τ > t)`, `t = 0..=t_max`.
    pub values: Vec<f64>,
    /// `masses[t] = P(τ = t)` accumulated directly from absorbed mass
    /// (`masses[0] = 0`).
    pub masses: Vec<f64>,
    /// Hazard `P(τ = T+1 | τ > T)` at the last tabulated time; the tail is
    /// geometric with ratio `1 - tail_rate`.
    pub tail_rate: Option<f64>,
    /// Whether the hazard had stabilized when tabulation stopped.
    pub tail_converged: bool,
    pub pattern: String,
    pub source: String,
}

impl SurvivalCurve {
    pub fn t_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, t: usize) -> Option<f64> {
        self.values.get(t).copied()
    }

    /// `t,value` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        write_rows("t", &self.values)
    }

    /// Reads back the `t,value` table written by [`SurvivalCurve::to_csv`].
    pub fn values_from_csv(text: &str) -> Result<Vec<f64>> {
        read_rows(text, "t")
    }
}

/// Exact sojourn law `p_k = P_A(S_A = k)`, `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournPmf {
    pub probabilities: Vec<f64>,
    /// `P_A(S_A > k_max)`.
    pub tail: f64,
    pub pattern: String,
    pub source: String,
}

impl SojournPmf {
    pub fn k_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn to_csv(&self) -> String {
        write_rows("k", &self.probabilities)
    }

    /// `E_A[S_A^β]` over the tabulated range; the tail mass sits beyond `k_max`
    /// and is reported separately.
    pub fn moment(&self, beta: f64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, p)| (k as f64).powf(beta) * p)
            .sum()
    }
}

pub(crate) fn write_rows(index: &str, values: &[f64]) -> String {
    let mut out = format!("{index},value\n");
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{v:.16e}").expect("writing to a String cannot fail");
    }
    out
}

pub(crate) fn read_rows(text: &str, index: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != format!("{index},value") {
        return argument(format!("unexpected CSV header {header:?}"));
    }
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        let (i, v) = line
            .split_once(',')
            .ok_or_else(|| crate::Error::Argument(format!("malformed CSV row {line:?}")))?;
        if i.trim().parse::<usize>().ok() != Some(row) {
            return argument(format!("CSV row {row} has index {i:?}"));
        }
        let v = v
            .trim()
            .parse::<f64>()
            .map_err(|e| crate::Error::Argument(format!("bad value {v:?}: {e}")))?;
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(values in prop::collection::vec(0.0f64..=1.0, 1..50)) {
            let text = write_rows("t", &values);
            let back = read_rows(&text, "t").unwrap();
            prop_assert_eq!(back.len(), values.len());
            for (a, b) in back.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_malformed_csv() {
        assert!(read_rows("k,value\n0,1\n", "t").is_err());
        assert!(read_rows("t,value\n1,0.5\n", "t").is_err());
        assert!(read_rows("t,value\n0,abc\n", "t").is_err());
    }
}
