//! Renewal-type source: a hidden counter chain on `{0, …, N_max}` that climbs
//! `j → j+1` with probability `q_j` and resets `j → 0` otherwise, observed
//! through `Y = 1{X ≠ 0}`. The counter is forced to reset from `N_max`.

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{model, Result};

/// Sequence `δ(m)`, `m ≥ 1`, controlling the all-ones marginals `e^{-m+δ(m)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delta {
    /// `δ(m) = c`.
    Constant(f64),
    /// `δ(m) = c / m`.
    Inverse(f64),
    /// `δ(m) = values[m - 1]`.
    Values(Vec<f64>),
}

impl Delta {
    pub fn at(&self, m: usize) -> Option<f64> {
        match self {
            Delta::Constant(c) => Some(*c),
            Delta::Inverse(c) => Some(c / m as f64),
            Delta::Values(v) => m.checked_sub(1).and_then(|i| v.get(i)).copied(),
        }
    }

    /// Limit of `δ(m+1) - δ(m)`; zero for every convergent `δ`.
    pub fn difference_limit(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RenewalSource {
    alphabet: Alphabet,
    q: Vec<f64>,
    n_max: usize,
    hidden_stationary: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<Delta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_from: Option<usize>,
}

impl RenewalSource {
    /// `q[j]` is the climb probability out of counter value `j`, for
    /// `j < n_max`; extra entries are ignored.
    pub fn new(alphabet: Alphabet, q: Vec<f64>, n_max: usize) -> Result<Self> {
        if alphabet.len() != 2 {
            return model("renewal source needs a two-symbol alphabet (reset, nonzero)");
        }
        if n_max < 1 {
            return model("n_max must be at least 1");
        }
        if q.len() < n_max {
            return model(format!("need {n_max} climb probabilities, got {}", q.len()));
        }
        let q: Vec<f64> = q[..n_max].to_vec();
        if let Some(j) = q.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
            return model(format!("q_{j} = {} is not in (0,1)", q[j]));
        }
        let mut weights = Vec::with_capacity(n_max + 1);
        let mut w = 1.0;
        weights.push(w);
        for &p in &q {
            w *= p;
            weights.push(w);
        }
        let z: f64 = weights.iter().sum();
        let hidden_stationary = weights.into_iter().map(|w| w / z).collect();
        Ok(RenewalSource {
            alphabet,
            q,
            n_max,
            hidden_stationary,
            delta: None,
            fit_from: None,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn hidden_stationary(&self) -> &[f64] {
        &self.hidden_stationary
    }

    pub fn delta(&self) -> Option<&Delta> {
        self.delta.as_ref()
    }

    /// Stationary mass of the truncation state `N_max`: the per-step chance
    /// that the truncated chain departs from the untruncated one.
    pub fn truncation_error(&self) -> f64 {
        self.hidden_stationary[self.n_max]
    }

    /// Climb probability out of counter value `j` (`0` at the cap).
    pub fn climb(&self, j: usize) -> f64 {
        if j < self.n_max {
            self.q[j]
        } else {
            0.0
        }
    }

    /// Hidden transition matrix, `(n_max + 1)²` entries.
    pub fn hidden_transition(&self) -> Vec<Vec<f64>> {
        let size = self.n_max + 1;
        (0..size)
            .map(|j| {
                let mut row = vec![0.0; size];
                let c = self.climb(j);
                row[0] = 1.0 - c;
                if j < self.n_max {
                    row[j + 1] = c;
                }
                row
            })
            .collect()
    }

    /// Target all-ones marginal `e^{-m+δ(m)}`, when built from a `δ` sequence.
    pub fn target_ones_marginal(&self, m: usize) -> Option<f64> {
        let d = self.delta.as_ref()?.at(m)?;
        Some((-(m as f64) + d).exp())
    }
}

/// Builds a renewal source whose all-ones marginals are `e^{-m+δ(m)}` for
/// every `m ≥ fit_from`.
///
/// Writing `P_m` for the all-ones marginal of length `m` (`P_0 = 1`) and
/// `D_m = P_m - P_{m+1}`, the stationary counter chain satisfies
/// `q_m = D_{m+1} / D_m`. Marginals below `fit_from` are free; they are
/// filled in with a geometric run of differences `D_m = D_a g^{a-m}` whose
/// ratio `g > 1` is found by bisection so that the run sums to `1 - P_a`.
pub fn renewal_from_delta(
    alphabet: Alphabet,
    delta: Delta,
    fit_from: usize,
    n_max: usize,
) -> Result<RenewalSource> {
    let a = fit_from.max(1);
    if n_max < a + 2 {
        return model(format!(
            "n_max = {n_max} leaves no room to fit from m = {a}"
        ));
    }
    let target = |m: usize| -> Result<f64> {
        delta
            .at(m)
            .map(|d| (-(m as f64) + d).exp())
            .ok_or_else(|| crate::Error::Model(format!("δ({m}) is not defined")))
    };
    for m in a..=n_max {
        let step = delta.at(m + 1).zip(delta.at(m)).map(|(x, y)| (x - y).abs());
        if let Some(s) = step {
            if s >= 1.0 {
                return model(format!("|δ({}) - δ({m})| = {s} is not below 1", m + 1));
            }
        }
    }

    // marginals P_0..=P_{n_max+1}
    let mut p = vec![f64::NAN; n_max + 2];
    p[0] = 1.0;
    for (m, slot) in p.iter_mut().enumerate().skip(a) {
        *slot = target(m)?;
    }
    if p[a] >= 1.0 {
        return model(format!(
            "target marginal at m = {a} is not below 1 (q_0 would leave (0,1))"
        ));
    }
    if a > 1 {
        let d_a = p[a] - p[a + 1];
        let mass = 1.0 - p[a];
        let run = |g: f64| (1..=a).map(|j| d_a * g.powi(j as i32)).sum::<f64>();
        if d_a <= 0.0 || run(1.0) >= mass {
            return model(format!(
                "no decreasing fill-in below m = {a}; first failing index 0"
            ));
        }
        let (mut lo, mut hi) = (1.0, 2.0);
        while run(hi) < mass {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if run(mid) < mass {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g = 0.5 * (lo + hi);
        for m in (1..a).rev() {
            let d = d_a * g.powi((a - m) as i32);
            p[m] = p[m + 1] + d;
        }
    }

    let q: Vec<f64> = (0..n_max)
        .map(|m| (p[m + 1] - p[m + 2]) / (p[m] - p[m + 1]))
        .collect();
    if let Some(j) = q.iter().position(|&x| !(x > 0.0 && x < 1.0)) {
        return model(format!("fitted q_{j} = {} leaves (0,1)", q[j]));
    }
    let mut source = RenewalSource::new(alphabet, q, n_max)?;
    source.delta = Some(delta);
    source.fit_from = Some(a);
    Ok(source)
}
