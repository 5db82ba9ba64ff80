use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{
    equivalence_report, geometric_sojourn_check, kac_check, mixture_envelope_check,
    return_vs_hitting_check, secondary_returns_check, sojourn_moment_check, BoundReport,
    GridValues,
};
use super::{TheoryParams, DEFAULT_RHO_TERMS};
use crate::error::Result;
use crate::exact::{ExactEngine, LawKind};
use crate::pattern::Pattern;
use crate::source::SourceModel;

/// Sojourn tail mass below which the moment sums are taken as complete.
const SOJOURN_TAIL_TOL: f64 = 1e-16;
const MAX_SOJOURN_TERMS: usize = 200_000;

#[derive(Debug, Clone, Serialize)]
pub struct BatteryOptions {
    /// Constant of the moment and equivalence envelopes.
    pub c: f64,
    /// The time grid reaches `horizon / P(A)`.
    pub horizon: f64,
    pub betas: Vec<f64>,
    pub rho_terms: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            c: 1.0,
            horizon: 20.0,
            betas: vec![1.0, 2.0],
            rho_terms: DEFAULT_RHO_TERMS,
        }
    }
}

/// Integers up to `2n`, the doubling times `o_A 2^k` up to `1/P(A)`, and
/// `⌊j / (8 P(A))⌋` for `j = 1..=8·horizon`.
pub fn default_grid(o_a: usize, n: usize, p_a: f64, horizon: f64) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..=2 * n).collect();
    let scale = 1.0 / p_a;
    let mut t = o_a.max(1);
    while (t as f64) <= scale {
        grid.push(t);
        t *= 2;
    }
    let steps = (8.0 * horizon).round() as usize;
    grid.extend((1..=steps).map(|j| (j as f64 * scale / 8.0).floor() as usize));
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Every check for one (source, word) pair, sorted by name then parameter.
pub fn verify_pair(
    source: &SourceModel,
    pattern: &Pattern,
    options: &BatteryOptions,
) -> Result<Vec<BoundReport>> {
    let engine = ExactEngine::new(source, pattern)?;
    let params = TheoryParams::from_engine(source, &engine, options.rho_terms)?;
    let grid = default_grid(params.o_a, params.n, params.p_a, options.horizon);
    let (ret, hit) = rayon::join(
        || GridValues::from_engine(&engine, LawKind::Return, &grid),
        || GridValues::from_engine(&engine, LawKind::Hitting, &grid),
    );

    let mut reports = vec![
        mixture_envelope_check(&ret, &params),
        secondary_returns_check(&params, &engine.return_survival(params.n))?,
        return_vs_hitting_check(&params, &ret, &hit),
    ];
    reports.extend(equivalence_report(&params, &ret, &hit, options.c).reports);

    let moments = options
        .betas
        .par_iter()
        .map(|&beta| {
            let m = engine.rescaled_moment(LawKind::Return, beta)?;
            kac_check(beta, &params, m.value, options.c)
        })
        .collect::<Result<Vec<_>>>()?;
    reports.extend(moments);

    let k_max = sojourn_terms(params.c_a).max(options.rho_terms) - 1;
    let pmf = engine.sojourn_pmf(k_max)?;
    reports.extend(geometric_sojourn_check(&pmf, &params));
    for &beta in &options.betas {
        reports.push(sojourn_moment_check(beta, &pmf, &params)?);
    }
    sort_reports(&mut reports);
    Ok(reports)
}

/// Number of sojourn terms after which `c^k` is negligible.
fn sojourn_terms(c: f64) -> usize {
    if c <= 0.0 {
        return 1;
    }
    if c >= 1.0 {
        return MAX_SOJOURN_TERMS;
    }
    let k = (SOJOURN_TAIL_TOL.ln() / c.ln()).ceil() as usize;
    (2 * k + 16).min(MAX_SOJOURN_TERMS)
}

pub fn sort_reports(reports: &mut [BoundReport]) {
    reports.sort_by(|a, b| {
        a.name
            .cmp(&b.name)
            .then_with(|| a.pattern.cmp(&b.pattern))
            .then_with(|| {
                let beta = |r: &BoundReport| r.params.get("beta").copied().unwrap_or(0.0);
                beta(a).total_cmp(&beta(b))
            })
    });
}

/// Smallest `n` in `lengths` from which the mixture envelope holds for every
/// longer word of the family (`None` when it fails at the largest length).
pub fn mixture_threshold(
    source: &SourceModel,
    family: impl Fn(usize) -> Result<Pattern> + Sync,
    lengths: std::ops::RangeInclusive<usize>,
    horizon: f64,
) -> Result<Option<usize>> {
    let outcomes = lengths
        .clone()
        .into_par_iter()
        .map(|n| {
            let pattern = family(n)?;
            let engine = ExactEngine::new(source, &pattern)?;
            let params = TheoryParams::from_engine(source, &engine, 2)?;
            let grid = default_grid(params.o_a, params.n, params.p_a, horizon);
            let ret = GridValues::from_engine(&engine, LawKind::Return, &grid);
            Ok((n, mixture_envelope_check(&ret, &params).pass))
        })
        .collect::<Result<Vec<(usize, bool)>>>()?;
    let mut threshold = None;
    for (n, pass) in outcomes.into_iter().rev() {
        if !pass {
            break;
        }
        threshold = Some(n);
    }
    Ok(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::source::IidSource;

    #[test]
    fn grid_covers_plateau_and_tail() {
        let grid = default_grid(1, 4, 1.0 / 16.0, 20.0);
        assert_eq!(&grid[..9], &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(*grid.last().unwrap(), 320);
        assert!(grid.contains(&16));
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fair_coin_run_battery_is_clean() {
        let ab = Alphabet::from_chars("ab").unwrap();
        let src: SourceModel = IidSource::bernoulli(ab.clone(), 0.5).unwrap().into();
        let p = Pattern::parse(&"a".repeat(12), &ab).unwrap();
        let reports = verify_pair(&src, &p, &BatteryOptions::default()).unwrap();
        let failures: Vec<String> = reports
            .iter()
            .filter(|r| r.is_failure())
            .map(|r| r.table_row())
            .collect();
        assert!(failures.is_empty(), "{failures:#?}");
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
}
