use serde::Serialize;

use super::SurvivalCurve;
use crate::error::{argument, Result};

const TAIL_TOL: f64 = 1e-9;
const MAX_TAIL_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    /// Contribution of the extrapolated geometric tail beyond the table.
    pub tail: f64,
    /// Set when the tail could not be trusted to `1e-9`.
    pub truncated: bool,
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `E[(p_a τ)^β]` from a tabulated survival curve.
///
/// Uses summation by parts, `E[g(τ)] = Σ_t P(τ > t) (g(t+1) - g(t))`, over
/// the table and a geometric tail `P(τ > T + m) = P(τ > T) λ^m` beyond it,
/// with `1 - λ` the curve's final hazard.
pub fn moments_from_survival(curve: &SurvivalCurve, beta: f64, p_a: f64) -> Result<MomentEstimate> {
    if !(beta > 0.0) {
        return argument(format!("moment order must be positive, got {beta}"));
    }
    if !(p_a > 0.0 && p_a <= 1.0) {
        return argument(format!("P(A) must be in (0,1], got {p_a}"));
    }
    let g = |t: f64| (p_a * t).powf(beta);
    let s = &curve.values;
    let t_end = s.len() - 1;
    let mut acc = CompensatedSum::default();
    for (t, &st) in s.iter().enumerate().take(t_end) {
        let t = t as f64;
        acc.add(st * (g(t + 1.0) - g(t)));
    }
    let s_end = s[t_end];
    if s_end == 0.0 {
        return Ok(MomentEstimate {
            value: acc.value(),
            tail: 0.0,
            truncated: false,
        });
    }
    let rate = curve
        .tail_rate
        .or_else(|| (t_end >= 1 && s[t_end - 1] > 0.0).then(|| 1.0 - s_end / s[t_end - 1]));
    let Some(rate) = rate.filter(|&r| r > 0.0 && r <= 1.0) else {
        return Ok(MomentEstimate {
            value: acc.value(),
            tail: f64::INFINITY,
            truncated: true,
        });
    };
    let (excess, complete) = geometric_excess(t_end as f64, rate, beta);
    let tail = s_end * p_a.powf(beta) * excess;
    acc.add(tail);
    let value = acc.value();
    let truncated = !complete || (!curve.tail_converged && tail > TAIL_TOL * value.max(1e-300));
    Ok(MomentEstimate {
        value,
        tail,
        truncated,
    })
}

/// `E[(T + G)^β] - T^β` for `G` geometric on `{1, 2, …}` with success
/// probability `rate`. Exact for integer `β` via Eulerian polynomials.
fn geometric_excess(t: f64, rate: f64, beta: f64) -> (f64, bool) {
    let lambda = 1.0 - rate;
    if beta.fract() == 0.0 && beta <= 64.0 {
        let b = beta as usize;
        let mut total = 0.0;
        let mut binom = 1.0;
        for k in 1..=b {
            binom *= (b + 1 - k) as f64 / k as f64;
            total += binom * t.powi((b - k) as i32) * geometric_raw_moment(k, lambda, rate);
        }
        return (total, true);
    }
    let mut acc = CompensatedSum::default();
    let mut weight = rate;
    let base = t.powf(beta);
    for m in 1..=MAX_TAIL_TERMS {
        let term = weight * ((t + m as f64).powf(beta) - base);
        acc.add(term);
        if term < 1e-18 * acc.value() && weight < 1e-18 {
            return (acc.value(), true);
        }
        weight *= lambda;
    }
    (acc.value(), false)
}

/// `E[G^k] = A_k(λ) / (1-λ)^k` with `A_k` the Eulerian polynomial.
fn geometric_raw_moment(k: usize, lambda: f64, rate: f64) -> f64 {
    // row k of the Eulerian triangle
    let mut row = vec![1.0f64];
    for n in 2..=k {
        let mut next = vec![0.0; n];
        for (j, slot) in next.iter_mut().enumerate() {
            let left = if j > 0 {
                row[j - 1] * (n - j) as f64
            } else {
                0.0
            };
            let right = row.get(j).map_or(0.0, |&r| r * (j + 1) as f64);
            *slot = left + right;
        }
        row = next;
    }
    let poly = row.iter().rev().fold(0.0, |acc, &c| acc * lambda + c);
    poly / rate.powi(k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::LawKind;

    fn curve(values: Vec<f64>, rate: Option<f64>) -> SurvivalCurve {
        let masses = std::iter::once(0.0)
            .chain(values.windows(2).map(|w| w[0] - w[1]))
            .collect();
        SurvivalCurve {
            law: LawKind::Hitting,
            values,
            masses,
            tail_rate: rate,
            tail_converged: true,
            pattern: "a".into(),
            source: "test".into(),
        }
    }

    #[test]
    fn eulerian_moments_match_direct_sums() {
        for &lambda in &[0.1f64, 0.5, 0.9] {
            for k in 1..=5 {
                let direct: f64 = (1..20_000)
                    .map(|m| (1.0 - lambda) * lambda.powi(m - 1) * (m as f64).powi(k as i32))
                    .sum();
                let closed = geometric_raw_moment(k, lambda, 1.0 - lambda);
                assert!((direct - closed).abs() < 1e-9 * closed, "λ={lambda} k={k}");
            }
        }
    }

    #[test]
    fn geometric_law_first_two_moments() {
        // τ geometric with P(τ > t) = (1/2)^t: E τ = 2, E τ² = 6
        let c = curve((0..=10).map(|t| 0.5f64.powi(t)).collect(), Some(0.5));
        let m1 = moments_from_survival(&c, 1.0, 1.0).unwrap();
        let m2 = moments_from_survival(&c, 2.0, 1.0).unwrap();
        assert!((m1.value - 2.0).abs() < 1e-14);
        assert!((m2.value - 6.0).abs() < 1e-13);
        let rescaled = moments_from_survival(&c, 1.0, 0.5).unwrap();
        assert!((rescaled.value - 1.0).abs() < 1e-15);
        assert!(!m1.truncated);
    }

    #[test]
    fn fractional_order_uses_series() {
        let c = curve((0..=5).map(|t| 0.5f64.powi(t)).collect(), Some(0.5));
        let m = moments_from_survival(&c, 0.5, 1.0).unwrap();
        let direct: f64 = (1..200).map(|t| 0.5f64.powi(t) * (t as f64).sqrt()).sum();
        assert!((m.value - direct).abs() < 1e-12);
    }

    #[test]
    fn flags_untrusted_tails() {
        let mut c = curve(vec![1.0, 0.9, 0.8], None);
        c.tail_converged = false;
        let m = moments_from_survival(&c, 1.0, 0.1).unwrap();
        assert!(m.truncated);
        assert!(moments_from_survival(&c, 0.0, 0.1).is_err());
        assert!(moments_from_survival(&c, 1.0, 0.0).is_err());
    }
}
