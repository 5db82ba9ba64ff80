//! Approximating laws and their explicit error envelopes.
//!
//! The return law is approximated by a mixture of a point mass at the period
//! and an exponential tail, `1{t < o_A} + 1{t ≥ o_A} ζ_A e^{-ζ_A P(A)(t - o_A)}`,
//! with error at most `54 ε(A) f(A,t)`. The sojourn law is approximated by a
//! geometric law with parameter `ρ(A)`.

mod battery;
mod bounds;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{argument, model, Result};
use crate::exact::ExactEngine;
use crate::pattern::{OverlapStructure, Pattern};
use crate::source::{MixingProfile, SourceModel};

pub use battery::{default_grid, mixture_threshold, sort_reports, verify_pair, BatteryOptions};
pub use bounds::{
    equivalence_report, geometric_sojourn_check, kac_check, mixture_envelope_check, product_bound,
    return_vs_hitting_check, secondary_returns_check, sojourn_moment_check, BoundPoint,
    BoundReport, EquivalenceReport, GridValues, ProductBound, MARGIN_TOL,
};

/// Constant in front of the mixture-law envelope.
pub const MIXTURE_ENVELOPE_CONSTANT: f64 = 54.0;
/// Multiple of `ε(A)` subtracted from `ζ_A` in the envelope's decay rate.
pub const ENVELOPE_RATE_SHIFT: f64 = 16.0;

/// Number of `ρ_i` computed by default.
pub const DEFAULT_RHO_TERMS: usize = 64;

/// Parameters of the approximations for one (source, word) pair.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryParams {
    pub pattern: String,
    pub source: String,
    #[serde(rename = "P_A")]
    pub p_a: f64,
    pub n: usize,
    #[serde(rename = "o_A")]
    pub o_a: usize,
    #[serde(rename = "n_A")]
    pub n_a: usize,
    #[serde(rename = "r_A")]
    pub r_a: usize,
    pub structure: OverlapStructure,
    pub zeta: f64,
    pub rho_seq: Vec<f64>,
    pub rho_limit: f64,
    /// Whether `rho_limit` comes from the source family's closed form rather
    /// than the last computed `ρ_i`.
    pub rho_limit_closed_form: bool,
    pub d_seq: Vec<f64>,
    pub d_bar: f64,
    #[serde(rename = "c_A")]
    pub c_a: f64,
    pub epsilon: f64,
    pub epsilon_argmin: usize,
    /// `P(A^{(w)})` for `w = 0..=n_A`.
    pub suffix_probabilities: Vec<f64>,
    pub phi: MixingProfile,
    /// Per-step truncation error of a renewal source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_error: Option<f64>,
}

impl TheoryParams {
    pub fn compute(source: &SourceModel, pattern: &Pattern, rho_terms: usize) -> Result<Self> {
        let engine = ExactEngine::new(source, pattern)?;
        Self::from_engine(source, &engine, rho_terms)
    }

    pub fn from_engine(
        source: &SourceModel,
        engine: &ExactEngine,
        rho_terms: usize,
    ) -> Result<Self> {
        let pattern = engine.pattern();
        let structure = engine.structure().clone();
        let n_a = structure.n_a;
        let suffix_probabilities = (0..=n_a)
            .map(|w| source.cylinder_probability(pattern.suffix(w)?))
            .collect::<Result<Vec<f64>>>()?;
        let phi = source.phi_profile(n_a);
        let (epsilon, epsilon_argmin) = epsilon(&structure, &suffix_probabilities, &phi)?;
        let rho_terms = match source {
            // past half the cap the truncated chain visibly bends the runs
            SourceModel::Renewal(r) => rho_terms
                .min((r.n_max() / 2).saturating_sub(structure.n) / structure.principal_period),
            _ => rho_terms,
        };
        let rho_seq = engine.rho_sequence(rho_terms.max(1))?;
        let closed = source.rho_limit_closed_form(pattern);
        let rho_limit = closed.unwrap_or(*rho_seq.last().expect("at least one term"));
        let d_seq: Vec<f64> = rho_seq.iter().map(|r| (r - rho_limit).abs()).collect();
        let d_bar = d_seq.iter().copied().fold(0.0, f64::max);
        let c_a = rho_seq.iter().copied().fold(rho_limit, f64::max);
        let truncation_error = match source {
            SourceModel::Renewal(r) => Some(r.truncation_error()),
            _ => None,
        };
        Ok(TheoryParams {
            pattern: pattern.to_string(),
            source: source.describe(),
            p_a: engine.p_a(),
            n: structure.n,
            o_a: structure.principal_period,
            n_a,
            r_a: structure.r_a,
            zeta: engine.zeta(),
            rho_seq,
            rho_limit,
            rho_limit_closed_form: closed.is_some(),
            d_seq,
            d_bar,
            c_a,
            epsilon,
            epsilon_argmin,
            suffix_probabilities,
            phi,
            truncation_error,
            structure,
        })
    }

    /// `d_i`, `i ≥ 1`; indices past the computed range are treated as 0
    /// (`d_i → 0`).
    pub fn d(&self, i: usize) -> f64 {
        self.d_seq.get(i - 1).copied().unwrap_or(0.0)
    }

    /// `ε*(A) = max(ε(A), (n P(A))^β)`.
    pub fn epsilon_star(&self, beta: f64) -> f64 {
        self.epsilon.max((self.n as f64 * self.p_a).powf(beta))
    }
}

/// `ε(A) = min_{0 ≤ w ≤ n_A} [(2n + o_A) P(A^{(w)}) + φ(n_A - w)]`, with the
/// minimizing `w` (the smallest one on ties).
pub fn epsilon(
    structure: &OverlapStructure,
    suffix_prob: &[f64],
    phi: &MixingProfile,
) -> Result<(f64, usize)> {
    let n_a = structure.n_a;
    if suffix_prob.len() <= n_a {
        return argument(format!(
            "need P(A^(w)) for w = 0..={n_a}, got {} values",
            suffix_prob.len()
        ));
    }
    let weight = (2 * structure.n + structure.principal_period) as f64;
    let mut best = (f64::INFINITY, 0);
    for (w, &p) in suffix_prob.iter().enumerate().take(n_a + 1) {
        let value = weight * p + phi.phi(n_a - w);
        if value < best.0 {
            best = (value, w);
        }
    }
    Ok(best)
}

/// `1{t < o_A} + 1{t ≥ o_A} ζ e^{-ζ P(A) (t - o_A)}`.
pub fn mixture_survival(t: f64, o_a: usize, zeta: f64, p_a: f64) -> f64 {
    let o = o_a as f64;
    if t < o {
        1.0
    } else {
        zeta * (-zeta * p_a * (t - o)).exp()
    }
}

/// `f(A,t) = P(A) t e^{-(ζ - 16ε) P(A) t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeValue {
    pub f: f64,
    /// `ζ - 16ε ≤ 0`: the exponential factor no longer decays.
    pub vacuous: bool,
}

pub fn envelope_f(t: f64, p_a: f64, zeta: f64, eps: f64) -> EnvelopeValue {
    let rate = zeta - ENVELOPE_RATE_SHIFT * eps;
    EnvelopeValue {
        f: p_a * t * (-rate * p_a * t).exp(),
        vacuous: rate <= 0.0,
    }
}

/// Maximizer `t* = 1 / ((ζ - 16ε) P(A))` of `f(A,·)` and its value
/// `e^{-1} / (ζ - 16ε)`; `None` when the envelope is vacuous.
pub fn envelope_peak(p_a: f64, zeta: f64, eps: f64) -> Option<(f64, f64)> {
    let rate = zeta - ENVELOPE_RATE_SHIFT * eps;
    (rate > 0.0).then(|| (1.0 / (rate * p_a), (-1.0f64).exp() / rate))
}

/// `Γ(β + 1) / ζ^{β - 1}`.
pub fn moment_approx(beta: f64, zeta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return argument(format!("β must be positive, got {beta}"));
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return model(format!("ζ must be in (0,1], got {zeta}"));
    }
    Ok(gamma(beta + 1.0) / zeta.powf(beta - 1.0))
}

/// `ε* C β e^{2ε(β+1)/ζ} / ζ² · Γ(β+1) / ζ^{β-1}`.
pub fn kac_error_envelope(beta: f64, params: &TheoryParams, c: f64) -> Result<f64> {
    let zeta = params.zeta;
    let approx = moment_approx(beta, zeta)?;
    Ok(
        params.epsilon_star(beta) * c * beta * (2.0 * params.epsilon * (beta + 1.0) / zeta).exp()
            / (zeta * zeta)
            * approx,
    )
}

/// `(1 - ρ) ρ^k`.
pub fn geometric_pmf(k: usize, rho: f64) -> f64 {
    (1.0 - rho) * rho.powi(k as i32)
}

/// `E[Y^β]` for `Y` geometric on `{0, 1, …}` with `P(Y = k) = (1-ρ)ρ^k`,
/// summed until the remaining tail is negligible.
pub fn geometric_moment(beta: f64, rho: f64) -> f64 {
    power_series(beta, rho) * (1.0 - rho)
}

/// `Σ_{k ≥ 1} k^β x^k`, summed until the remaining tail is below `1e-17`
/// (relative) past the peak of the terms.
pub(crate) fn power_series(beta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    assert!(x < 1.0, "power series diverges at x = {x}");
    let peak = if x < 1.0 {
        beta / -x.ln()
    } else {
        f64::INFINITY
    };
    let mut total = 0.0;
    let mut k = 1usize;
    loop {
        let term = (k as f64).powf(beta) * x.powi(k as i32);
        total += term;
        // past the peak the terms shrink geometrically, so the remaining tail
        // is at most term · x / (1 - x) once the ratio drops below x^{1/2}
        if k as f64 > 2.0 * peak + 1.0 {
            let tail = term * x.sqrt() / (1.0 - x.sqrt());
            if tail <= 1e-17 * total.max(1e-300) || term == 0.0 {
                break;
            }
        }
        k += 1;
    }
    total
}

/// `Γ(β + 2) / (-ln c)^{β + 2}`: closed-form approximation of `Σ k^{β+1} c^k`.
pub fn gamma_series_approx(beta: f64, c: f64) -> f64 {
    gamma(beta + 2.0) / (-c.ln()).powf(beta + 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::source::IidSource;

    fn structure(s: &str) -> (Pattern, OverlapStructure) {
        let p = Pattern::parse(s, &Alphabet::from_chars("ab").unwrap()).unwrap();
        let st = p.analyze();
        (p, st)
    }

    fn iid_profile(len: usize) -> MixingProfile {
        let mut v = vec![0.0; len + 1];
        v[0] = 1.0;
        MixingProfile::from_values(v).unwrap()
    }

    #[test]
    fn epsilon_of_aaa_under_fair_coin() {
        // candidates 7, 7/2, 7/4, 7/8 + 1
        let (_, st) = structure("aaa");
        let probs = [1.0, 0.5, 0.25, 0.125];
        let (eps, w) = epsilon(&st, &probs, &iid_profile(3)).unwrap();
        assert_eq!(w, 2);
        assert!((eps - 1.75).abs() < 1e-15);
    }

    #[test]
    fn epsilon_of_long_run() {
        let (_, st) = structure(&"a".repeat(20));
        let probs: Vec<f64> = (0..=20).map(|w| 0.5f64.powi(w)).collect();
        let (eps, w) = epsilon(&st, &probs, &iid_profile(20)).unwrap();
        assert_eq!(w, 19);
        assert!((eps - 41.0 * 2f64.powi(-19)).abs() < 1e-18);
        for (w, p) in probs.iter().enumerate() {
            assert!(eps <= 41.0 * p + if w == 20 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn epsilon_shrinks_with_length() {
        let src: SourceModel = IidSource::bernoulli(Alphabet::from_chars("ab").unwrap(), 0.5)
            .unwrap()
            .into();
        let mut last = f64::INFINITY;
        for n in 4..=24 {
            let (p, _) = structure(&"ab".repeat(n / 2 + 1)[..n]);
            let params = TheoryParams::compute(&src, &p, 4).unwrap();
            assert!(params.epsilon < last);
            last = params.epsilon;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn mixture_basics() {
        assert_eq!(mixture_survival(2.0, 3, 0.4, 0.01), 1.0);
        assert_eq!(mixture_survival(6.0, 6, 63.0 / 64.0, 1e-4), 63.0 / 64.0);
        let pure = mixture_survival(10.0, 4, 1.0, 0.1);
        assert!((pure - (-0.6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn envelope_basics() {
        assert_eq!(envelope_f(0.0, 0.01, 0.5, 0.001).f, 0.0);
        assert!(envelope_f(5.0, 0.01, 0.5, 0.04).vacuous);
        assert!(!envelope_f(5.0, 0.01, 0.5, 0.01).vacuous);
        let (t_star, peak) = envelope_peak(0.01, 0.5, 0.01).unwrap();
        let at_peak = envelope_f(t_star, 0.01, 0.5, 0.01).f;
        assert!((at_peak - peak).abs() < 1e-14);
        for dt in [-5.0, -1.0, 1.0, 5.0] {
            assert!(envelope_f(t_star + dt, 0.01, 0.5, 0.01).f <= at_peak);
        }
    }

    #[test]
    fn moment_approximants() {
        assert!((moment_approx(1.0, 0.37).unwrap() - 1.0).abs() < 1e-12);
        assert!((moment_approx(2.0, 0.5).unwrap() - 4.0).abs() < 1e-12);
        assert!((moment_approx(3.0, 1.0).unwrap() - 6.0).abs() < 1e-10);
        assert!(moment_approx(2.0, 0.0).is_err());
        assert!(moment_approx(0.0, 0.5).is_err());
    }

    #[test]
    fn geometric_helpers() {
        assert_eq!(geometric_pmf(0, 0.0), 1.0);
        assert_eq!(geometric_pmf(3, 0.0), 0.0);
        // E Y = ρ/(1-ρ), E Y² = ρ(1+ρ)/(1-ρ)²
        assert!((geometric_moment(1.0, 0.5) - 1.0).abs() < 1e-11);
        assert!((geometric_moment(2.0, 0.3) - 0.3 * 1.3 / 0.49).abs() < 1e-11);
        // Σ k c^k = c/(1-c)^2
        assert!((power_series(1.0, 0.9) - 90.0).abs() < 1e-9);
        let approx = gamma_series_approx(1.0, 0.99);
        let exact = power_series(2.0, 0.99);
        assert!((approx / exact - 1.0).abs() < 0.02);
    }
}
