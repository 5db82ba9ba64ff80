use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    envelope_f, gamma_series_approx, geometric_moment, geometric_pmf, kac_error_envelope,
    mixture_survival, moment_approx, power_series, TheoryParams, ENVELOPE_RATE_SHIFT,
    MIXTURE_ENVELOPE_CONSTANT,
};
use crate::error::{argument, Result};
use crate::exact::{ExactEngine, LawKind, SojournPmf, SurvivalCurve};

/// Margins at or above this count as satisfied.
pub const MARGIN_TOL: f64 = -1e-12;

/// One evaluation of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    /// Time `t`, index `k` or `i` at which both sides were evaluated.
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl BoundPoint {
    pub fn new(at: f64, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        BoundPoint {
            at,
            lhs,
            rhs,
            margin,
            pass: margin >= MARGIN_TOL,
        }
    }
}

/// Verification record of one inequality over a range of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub pattern: String,
    pub source: String,
    /// Both sides at the point of smallest margin.
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    /// True but uninformative: the right side exceeds every possible left
    /// side, or the envelope's hypotheses fail.
    pub vacuous: bool,
    /// Whether a failure counts against the battery; checks whose constants
    /// are left open are reported only.
    pub asserted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<BoundPoint>,
}

impl BoundReport {
    fn from_points(
        name: &str,
        params: &TheoryParams,
        points: Vec<BoundPoint>,
        vacuous_above: f64,
        extra: &[(&str, f64)],
    ) -> Self {
        let worst = points
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .cloned()
            .unwrap_or_else(|| BoundPoint::new(f64::NAN, 0.0, 0.0));
        let pass = points.iter().all(|p| p.pass);
        let vacuous = !points.is_empty() && points.iter().all(|p| p.rhs > vacuous_above);
        let mut echoed = BTreeMap::new();
        echoed.insert("P_A".to_string(), params.p_a);
        echoed.insert("zeta".to_string(), params.zeta);
        echoed.insert("epsilon".to_string(), params.epsilon);
        for (k, v) in extra {
            echoed.insert((*k).to_string(), *v);
        }
        BoundReport {
            name: name.to_string(),
            pattern: params.pattern.clone(),
            source: params.source.clone(),
            lhs: worst.lhs,
            rhs: worst.rhs,
            margin: worst.margin,
            pass,
            vacuous,
            asserted: true,
            at: worst.at.is_finite().then_some(worst.at),
            params: echoed,
            points,
        }
    }

    fn reported_only(mut self) -> Self {
        self.asserted = false;
        self
    }

    /// A failure that should fail the battery.
    pub fn is_failure(&self) -> bool {
        self.asserted && !self.vacuous && !self.pass
    }

    /// Fixed-column text row; see [`BoundReport::table_header`].
    pub fn table_row(&self) -> String {
        let status = match (self.pass, self.vacuous, self.asserted) {
            (true, true, _) => "pass*",
            (true, false, _) => "pass",
            (false, _, true) => "FAIL",
            (false, _, false) => "fail~",
        };
        let beta = self
            .params
            .get("beta")
            .map_or(String::new(), |b| format!("β={b}"));
        format!(
            "{:<24} {:<6} {:<24} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
            self.name,
            beta,
            truncate(&self.pattern, 24),
            self.lhs,
            self.rhs,
            self.margin,
            status
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<24} {:<6} {:<24} {:>12} {:>12} {:>12} {:>6}",
            "check", "param", "pattern", "lhs", "rhs", "margin", "status"
        )
    }
}

fn truncate(s: &str, width: usize) -> String {
    if s.chars().count() <= width {
        s.to_string()
    } else {
        let head: String = s.chars().take(width - 1).collect();
        format!("{head}…")
    }
}

/// Survival values on a set of times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridValues {
    pub law: LawKind,
    pub times: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridValues {
    pub fn from_curve(curve: &SurvivalCurve, times: &[usize]) -> Result<Self> {
        let values = times
            .iter()
            .map(|&t| {
                curve.at(t).ok_or_else(|| {
                    crate::Error::Argument(format!(
                        "curve ends at {} but the grid needs t = {t}",
                        curve.t_max()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(GridValues {
            law: curve.law,
            times: times.to_vec(),
            values,
        })
    }

    pub fn from_engine(engine: &ExactEngine, law: LawKind, times: &[usize]) -> Self {
        GridValues {
            law,
            times: times.to_vec(),
            values: engine.survival_at(law, times),
        }
    }
}

/// `|P_A(τ > t) - mixture(t)| ≤ 54 ε f(A,t)` on the grid.
pub fn mixture_envelope_check(exact: &GridValues, params: &TheoryParams) -> BoundReport {
    let rate_vacuous = params.zeta - ENVELOPE_RATE_SHIFT * params.epsilon <= 0.0;
    let points = exact
        .times
        .iter()
        .zip(&exact.values)
        .map(|(&t, &s)| {
            let t = t as f64;
            let mix = mixture_survival(t, params.o_a, params.zeta, params.p_a);
            let f = envelope_f(t, params.p_a, params.zeta, params.epsilon).f;
            BoundPoint::new(
                t,
                (s - mix).abs(),
                MIXTURE_ENVELOPE_CONSTANT * params.epsilon * f,
            )
        })
        .collect();
    let mut report = BoundReport::from_points("mixture_envelope", params, points, 1.0, &[]);
    report.vacuous |= rate_vacuous;
    report
}

/// `P_A(τ ∈ R(A)) ≤ ε(A)`. The curve must reach `t = n`.
pub fn secondary_returns_check(
    params: &TheoryParams,
    exact: &SurvivalCurve,
) -> Result<BoundReport> {
    if exact.law != LawKind::Return || exact.t_max() < params.n {
        return argument("needs the return curve up to t = n");
    }
    let lhs: f64 = params
        .structure
        .secondary_set
        .iter()
        .map(|&t| exact.masses[t])
        .sum();
    let points = vec![BoundPoint::new(params.n_a as f64, lhs, params.epsilon)];
    Ok(BoundReport::from_points(
        "secondary_returns",
        params,
        points,
        1.0,
        &[],
    ))
}

/// `|P_A(τ > i) - ζ P(τ > i)| ≤ 2ε` for every shared `i ≥ o_A`.
pub fn return_vs_hitting_check(
    params: &TheoryParams,
    ret: &GridValues,
    hit: &GridValues,
) -> BoundReport {
    let points = shared(ret, hit)
        .filter(|(t, _, _)| *t >= params.o_a)
        .map(|(t, r, h)| {
            BoundPoint::new(t as f64, (r - params.zeta * h).abs(), 2.0 * params.epsilon)
        })
        .collect();
    BoundReport::from_points("return_vs_hitting", params, points, 1.0, &[])
}

fn shared<'a>(
    ret: &'a GridValues,
    hit: &'a GridValues,
) -> impl Iterator<Item = (usize, f64, f64)> + 'a {
    let hits: BTreeMap<usize, f64> = hit
        .times
        .iter()
        .copied()
        .zip(hit.values.iter().copied())
        .collect();
    ret.times
        .iter()
        .zip(&ret.values)
        .filter_map(move |(&t, &r)| hits.get(&t).map(|&h| (t, r, h)))
}

/// The four distances of the exponential-law equivalence, each against
/// `C ε f(A,t)` (resp. `C ε`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub reports: Vec<BoundReport>,
    /// All four hold or all four fail.
    pub co_occur: bool,
}

pub fn equivalence_report(
    params: &TheoryParams,
    ret: &GridValues,
    hit: &GridValues,
    c: f64,
) -> EquivalenceReport {
    let extra = [("C", c)];
    let env =
        |t: f64| c * params.epsilon * envelope_f(t, params.p_a, params.zeta, params.epsilon).f;
    let expo = |t: f64| (-params.p_a * t).exp();
    let rows: Vec<(usize, f64, f64)> = shared(ret, hit).filter(|(t, _, _)| *t > 0).collect();
    let build = |name: &str, dist: &dyn Fn(f64, f64, f64) -> f64| {
        let points = rows
            .iter()
            .map(|&(t, r, h)| {
                let t = t as f64;
                BoundPoint::new(t, dist(t, r, h), env(t))
            })
            .collect();
        BoundReport::from_points(name, params, points, 1.0, &extra).reported_only()
    };
    let a = build("exponential_return", &|t, r, _| (r - expo(t)).abs());
    let b = build("return_equals_hitting", &|_, r, h| (r - h).abs());
    let cc = build("exponential_hitting", &|t, _, h| (h - expo(t)).abs());
    let d = BoundReport::from_points(
        "zeta_near_one",
        params,
        vec![BoundPoint::new(
            0.0,
            (params.zeta - 1.0).abs(),
            c * params.epsilon,
        )],
        f64::INFINITY,
        &extra,
    )
    .reported_only();
    let reports = vec![a, b, cc, d];
    let co_occur = reports.iter().all(|r| r.pass) || reports.iter().all(|r| !r.pass);
    EquivalenceReport { reports, co_occur }
}

/// `|P(A)^β E_A[τ^β] - Γ(β+1)/ζ^{β-1}|` against the moment envelope with
/// constant `c`.
pub fn kac_check(
    beta: f64,
    params: &TheoryParams,
    rescaled_moment: f64,
    c: f64,
) -> Result<BoundReport> {
    let approx = moment_approx(beta, params.zeta)?;
    let rhs = kac_error_envelope(beta, params, c)?;
    let points = vec![BoundPoint::new(beta, (rescaled_moment - approx).abs(), rhs)];
    let extra = [
        ("beta", beta),
        ("C", c),
        ("moment", rescaled_moment),
        ("approximation", approx),
    ];
    Ok(BoundReport::from_points(
        "moment_approximation",
        params,
        points,
        f64::INFINITY,
        &extra,
    )
    .reported_only())
}

/// Both geometric-law envelopes for `k = 0..=k_max`, with `k_max` limited to
/// the computed `d_i`.
pub fn geometric_sojourn_check(exact: &SojournPmf, params: &TheoryParams) -> Vec<BoundReport> {
    let k_max = exact.k_max().min(params.d_seq.len() - 1);
    let c = params.c_a;
    let mut sharp = Vec::with_capacity(k_max + 1);
    let mut coarse = Vec::with_capacity(k_max + 1);
    let mut d_sum = 0.0;
    for k in 0..=k_max {
        d_sum += params.d(k + 1);
        let lhs = (exact.probabilities[k] - geometric_pmf(k, params.rho_limit)).abs();
        let ck = c.powi(k as i32);
        sharp.push(BoundPoint::new(k as f64, lhs, ck * d_sum));
        coarse.push(BoundPoint::new(
            k as f64,
            lhs,
            ck * (k + 1) as f64 * params.d_bar,
        ));
    }
    let extra = [
        ("rho", params.rho_limit),
        ("c_A", c),
        ("d_bar", params.d_bar),
    ];
    vec![
        BoundReport::from_points("geometric_sojourn_sharp", params, sharp, 1.0, &extra),
        BoundReport::from_points("geometric_sojourn_coarse", params, coarse, 1.0, &extra),
    ]
}

/// `|E_A[S^β] - E[Y^β]| ≤ 2 d̄ Σ_k k^{β+1} c^k`, with the Gamma-function
/// approximation of the series echoed.
pub fn sojourn_moment_check(
    beta: f64,
    exact: &SojournPmf,
    params: &TheoryParams,
) -> Result<BoundReport> {
    if !(beta > 0.0) {
        return argument(format!("β must be positive, got {beta}"));
    }
    let c = params.c_a;
    let exact_moment = exact.moment(beta);
    let geometric = geometric_moment(beta, params.rho_limit);
    let (series, gamma_form) = if c < 1.0 {
        (
            power_series(beta + 1.0, c),
            if c > 0.0 {
                gamma_series_approx(beta, c)
            } else {
                0.0
            },
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let rhs = 2.0 * params.d_bar * series;
    let points = vec![BoundPoint::new(beta, (exact_moment - geometric).abs(), rhs)];
    let extra = [
        ("beta", beta),
        ("exact_moment", exact_moment),
        ("geometric_moment", geometric),
        ("series", series),
        ("gamma_approximation", gamma_form),
        ("pmf_tail", exact.tail),
    ];
    Ok(BoundReport::from_points(
        "geometric_sojourn_moment",
        params,
        points,
        f64::INFINITY,
        &extra,
    ))
}

/// Both sides of the product bound for one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductBound {
    pub lhs: f64,
    pub sharp: f64,
    pub coarse: f64,
}

impl ProductBound {
    pub fn holds(&self) -> bool {
        self.sharp - self.lhs >= MARGIN_TOL && self.coarse - self.sharp >= MARGIN_TOL
    }
}

/// `|Π l_i - l^k| ≤ c^{k-1} Σ d_i ≤ k c^{k-1} d̄` with `c = max(l, sup l_i)`.
pub fn product_bound(l_seq: &[f64], l: f64, d_seq: &[f64]) -> Result<ProductBound> {
    let k = l_seq.len();
    if k == 0 || d_seq.len() != k {
        return argument(format!(
            "need equally long, non-empty sequences (got {k} and {})",
            d_seq.len()
        ));
    }
    let unit = |x: f64| (0.0..1.0).contains(&x);
    if !unit(l) || !l_seq.iter().copied().all(unit) {
        return argument("every l and l_i must lie in [0,1)");
    }
    if let Some(i) = (0..k).find(|&i| (l_seq[i] - l).abs() > d_seq[i] + 1e-15) {
        return argument(format!("|l_{} - l| exceeds d_{}", i + 1, i + 1));
    }
    let c = l_seq.iter().copied().fold(l, f64::max);
    let product: f64 = l_seq.iter().product();
    let ck = c.powi(k as i32 - 1);
    let d_bar = d_seq.iter().copied().fold(0.0, f64::max);
    Ok(ProductBound {
        lhs: (product - l.powi(k as i32)).abs(),
        sharp: ck * d_seq.iter().sum::<f64>(),
        coarse: k as f64 * ck * d_bar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::pattern::Pattern;
    use crate::source::{IidSource, SourceModel};
    use proptest::prelude::*;

    fn fair() -> (SourceModel, Alphabet) {
        let ab = Alphabet::from_chars("ab").unwrap();
        (IidSource::bernoulli(ab.clone(), 0.5).unwrap().into(), ab)
    }

    #[test]
    fn secondary_returns_of_worked_example() {
        let (src, ab) = fair();
        let p = Pattern::parse("aaaabbaaaabbaaa", &ab).unwrap();
        let engine = ExactEngine::new(&src, &p).unwrap();
        let params = TheoryParams::from_engine(&src, &engine, 8).unwrap();
        let report = secondary_returns_check(&params, &engine.return_survival(p.len())).unwrap();
        let expected = 2f64.powi(-13) + 2f64.powi(-14);
        assert!((report.lhs - expected).abs() < 1e-15);
        assert!(report.pass);
    }

    #[test]
    fn below_the_period_margin_is_the_envelope() {
        let (src, ab) = fair();
        let p = Pattern::parse("abab", &ab).unwrap();
        let engine = ExactEngine::new(&src, &p).unwrap();
        let params = TheoryParams::from_engine(&src, &engine, 8).unwrap();
        let grid = GridValues::from_engine(&engine, LawKind::Return, &[0, 1]);
        let report = mixture_envelope_check(&grid, &params);
        for point in &report.points {
            assert_eq!(point.lhs, 0.0);
        }
    }

    #[test]
    fn memoryless_sojourn_has_zero_lhs() {
        let (src, ab) = fair();
        let p = Pattern::parse("aa", &ab).unwrap();
        let engine = ExactEngine::new(&src, &p).unwrap();
        let params = TheoryParams::from_engine(&src, &engine, 64).unwrap();
        let pmf = engine.sojourn_pmf(63).unwrap();
        for r in geometric_sojourn_check(&pmf, &params) {
            assert!(r.pass && r.lhs < 1e-15, "{r:?}");
        }
        let m = sojourn_moment_check(1.0, &pmf, &params).unwrap();
        assert!((m.params["exact_moment"] - 1.0).abs() < 1e-12);
        assert!(m.pass);
    }

    #[test]
    fn product_bound_edge_cases() {
        let b = product_bound(&[0.3; 5], 0.3, &[0.0; 5]).unwrap();
        assert_eq!(b.lhs, 0.0);
        let b = product_bound(&[0.4], 0.3, &[0.1]).unwrap();
        assert!((b.lhs - 0.1).abs() < 1e-15 && (b.sharp - 0.1).abs() < 1e-15);
        assert!(product_bound(&[1.0], 0.3, &[0.7]).is_err());
        assert!(product_bound(&[0.5], 0.3, &[0.1]).is_err());
        assert!(product_bound(&[], 0.3, &[]).is_err());
    }

    proptest! {
        #[test]
        fn product_bound_holds(
            l in 0.0f64..0.999,
            seq in prop::collection::vec((0.0f64..0.999, 0.0f64..1.0), 1..=50),
        ) {
            let l_seq: Vec<f64> = seq.iter().map(|p| p.0).collect();
            let d_seq: Vec<f64> = seq.iter().map(|(li, slack)| (li - l).abs() * (1.0 + slack)).collect();
            let b = product_bound(&l_seq, l, &d_seq).unwrap();
            prop_assert!(b.holds(), "{:?}", b);
        }
    }
}
