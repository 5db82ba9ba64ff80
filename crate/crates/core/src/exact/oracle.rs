//! Enumeration oracle: exact laws from the cylinder probabilities of words
//! up to length `L`, with occurrences found by direct symbol comparison.
//!
//! The enumeration walks the tree of prefixes and stops a branch as soon as
//! the quantity of interest is decided; the branch then contributes its
//! prefix probability, which equals the total probability of its length-`L`
//! extensions.

use serde::Serialize;

use crate::alphabet::Symbol;
use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::source::SourceModel;

/// Largest `|alphabet|^L` the oracle accepts.
pub const MAX_WORDS: u64 = 1 << 24;

#[derive(Debug, Clone, Serialize)]
pub struct OracleLaws {
    /// `P(τ > t)` for `t = 0..=L-n`.
    pub hitting_survival: Vec<f64>,
    /// `P_A(τ > t)` for `t = 0..=L-n`.
    pub return_survival: Vec<f64>,
    /// `P_A(τ = t)` for `t = 0..=L-n` (entry 0 is zero).
    pub return_masses: Vec<f64>,
    /// `P_A(S_A = k)` for every `k` decided within the horizon.
    pub sojourn: Vec<f64>,
}

pub fn brute_force_oracle(
    source: &SourceModel,
    pattern: &Pattern,
    length: usize,
) -> Result<OracleLaws> {
    let k = source.alphabet().len() as u64;
    let n = pattern.len();
    let feasible = (k as f64).powi(length as i32) <= MAX_WORDS as f64;
    if !feasible {
        return Err(Error::Guard(format!(
            "{k}^{length} words exceeds the enumeration limit 2^24"
        )));
    }
    if length < n {
        return Err(Error::Argument(format!(
            "horizon {length} shorter than the pattern ({n})"
        )));
    }
    let word = pattern.symbols();
    let horizon = length - n;
    let p_a = source.cylinder_probability(word)?;

    let mut oracle = Walk {
        source,
        word,
        length,
        masses: vec![0.0; horizon + 1],
        undecided: 0.0,
    };
    oracle.first_occurrence(&mut Vec::with_capacity(length))?;
    let hitting_survival = survival_from_masses(&oracle.masses, oracle.undecided);

    oracle.masses.iter_mut().for_each(|m| *m = 0.0);
    oracle.undecided = 0.0;
    oracle.first_occurrence(&mut word.to_vec())?;
    let return_masses: Vec<f64> = oracle.masses.iter().map(|m| m / p_a).collect();
    let return_survival = survival_from_masses(&return_masses, oracle.undecided / p_a);

    let period = pattern.analyze().principal_period;
    let decided = horizon / period;
    let mut sojourn = vec![0.0; decided];
    oracle.run_length(&mut word.to_vec(), period, &mut sojourn)?;
    sojourn.iter_mut().for_each(|p| *p /= p_a);

    Ok(OracleLaws {
        hitting_survival,
        return_survival,
        return_masses,
        sojourn,
    })
}

fn survival_from_masses(masses: &[f64], undecided: f64) -> Vec<f64> {
    // P(τ > t) = Σ_{k > t} P(τ = k) + P(τ beyond horizon)
    let mut out = vec![0.0; masses.len()];
    let mut acc = undecided;
    for t in (0..masses.len()).rev() {
        out[t] = acc;
        acc += masses[t];
    }
    out
}

struct Walk<'a> {
    source: &'a SourceModel,
    word: &'a [Symbol],
    length: usize,
    masses: Vec<f64>,
    undecided: f64,
}

impl Walk<'_> {
    fn occurs_at(&self, prefix: &[Symbol], start: usize) -> bool {
        prefix.len() >= start + self.word.len()
            && &prefix[start..start + self.word.len()] == self.word
    }

    fn first_occurrence(&mut self, prefix: &mut Vec<Symbol>) -> Result<()> {
        let n = self.word.len();
        if prefix.len() > n {
            let start = prefix.len() - n;
            if self.occurs_at(prefix, start) {
                self.masses[start] += self.source.cylinder_probability(prefix)?;
                return Ok(());
            }
        }
        if prefix.len() == self.length {
            self.undecided += self.source.cylinder_probability(prefix)?;
            return Ok(());
        }
        for x in self.source.alphabet().symbols() {
            prefix.push(x);
            self.first_occurrence(prefix)?;
            prefix.pop();
        }
        Ok(())
    }

    fn run_length(
        &mut self,
        prefix: &mut Vec<Symbol>,
        period: usize,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.word.len();
        if prefix.len() > n && (prefix.len() - n) % period == 0 {
            let j = (prefix.len() - n) / period;
            if !self.occurs_at(prefix, j * period) {
                out[j - 1] += self.source.cylinder_probability(prefix)?;
                return Ok(());
            }
        }
        if prefix.len() == self.length {
            return Ok(());
        }
        for x in self.source.alphabet().symbols() {
            prefix.push(x);
            self.run_length(prefix, period, out)?;
            prefix.pop();
        }
        Ok(())
    }
}
