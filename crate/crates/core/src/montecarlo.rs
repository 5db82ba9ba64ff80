//! Sampled estimates of the hitting, return and sojourn laws.
//!
//! Hitting times come from independent stationary starts. Return times and
//! sojourns come from scanning long stationary trajectories: every occurrence
//! start is followed by the gap to the next start (a return-time sample) and
//! by the number of further occurrences spaced exactly `o_A` apart (a sojourn
//! sample). Random numbers are drawn from counter-based ChaCha substreams
//! keyed by block index, so the counts do not depend on thread scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::automaton::MatchingAutomaton;
use crate::error::{argument, Result};
use crate::pattern::Pattern;
use crate::source::SourceModel;

/// Fresh starts simulated per random substream.
const HITTING_BLOCK: usize = 4096;
/// Substream offset separating trajectory segments from hitting blocks.
const SEGMENT_STREAMS: u64 = 1 << 40;
/// Counts below which bands use exact binomial quantiles.
const EXACT_BAND_BELOW: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    FreshStartHitting,
    OccurrenceGapReturn,
    OccurrenceRunSojourn,
}

/// Counts of sampled values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub kind: EstimatorKind,
    /// Sampled value (time or run length) to count.
    pub counts: BTreeMap<usize, u64>,
    /// Samples beyond the horizon (hitting only).
    pub censored: u64,
    /// Total sample size: counted plus censored.
    pub samples: u64,
    /// Occurrences whose gap or run was cut by the end of a trajectory.
    pub dropped: u64,
    /// Return gaps below `n` at shifts where the word cannot overlap itself.
    pub forbidden_gaps: u64,
    /// Return gaps at interior overlaps: possible, but outside `{o_A} ∪ R(A)`.
    pub interior_gaps: u64,
    pub seed: u64,
    pub workers: usize,
    pub pattern: String,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl EmpiricalLaw {
    fn new(
        kind: EstimatorKind,
        seed: u64,
        workers: usize,
        pattern: &Pattern,
        source: &SourceModel,
    ) -> Self {
        EmpiricalLaw {
            kind,
            counts: BTreeMap::new(),
            censored: 0,
            samples: 0,
            dropped: 0,
            forbidden_gaps: 0,
            interior_gaps: 0,
            seed,
            workers,
            pattern: pattern.to_string(),
            source: source.describe(),
            warning: None,
        }
    }

    fn merge(&mut self, other: &EmpiricalLaw) {
        for (&v, &c) in &other.counts {
            *self.counts.entry(v).or_insert(0) += c;
        }
        self.censored += other.censored;
        self.samples += other.samples;
        self.dropped += other.dropped;
        self.forbidden_gaps += other.forbidden_gaps;
        self.interior_gaps += other.interior_gaps;
    }

    fn record(&mut self, value: usize) {
        *self.counts.entry(value).or_insert(0) += 1;
        self.samples += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    /// Samples with value in `(lo, hi]`; `hi = None` includes censored ones.
    pub fn count_between(&self, lo: usize, hi: Option<usize>) -> u64 {
        match hi {
            Some(hi) => self.counts.range(lo + 1..=hi).map(|(_, c)| c).sum(),
            None => self.counts.range(lo + 1..).map(|(_, c)| c).sum::<u64>() + self.censored,
        }
    }

    /// Empirical mean of the uncensored samples.
    pub fn mean(&self) -> f64 {
        let counted: u64 = self.counts.values().sum();
        if counted == 0 {
            return f64::NAN;
        }
        let total: f64 = self.counts.iter().map(|(&v, &c)| v as f64 * c as f64).sum();
        total / counted as f64
    }

    /// `bin,count,estimate,lo,hi` rows, one per observed value plus a
    /// `censored` row when the horizon cut samples.
    pub fn to_csv(&self, level: f64) -> String {
        let mut out = String::from("bin,count,estimate,lo,hi\n");
        let mut row = |bin: &str, count: u64| {
            let (lo, hi) = confidence_band(count, self.samples, level);
            let estimate = count as f64 / self.samples.max(1) as f64;
            writeln!(out, "{bin},{count},{estimate:.16e},{lo:.16e},{hi:.16e}")
                .expect("String write");
        };
        for (&v, &c) in &self.counts {
            row(&v.to_string(), c);
        }
        if self.censored > 0 {
            row("censored", self.censored);
        }
        out
    }
}

/// Sampling configuration shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplingPlan {
    pub seed: u64,
    /// Number of trajectory segments (and rayon tasks) for return sampling.
    pub workers: usize,
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// First occurrence start in `[1, horizon]` from `samples` independent
/// stationary starts.
pub fn estimate_hitting(
    source: &SourceModel,
    pattern: &Pattern,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<EmpiricalLaw> {
    if samples == 0 || horizon == 0 {
        return argument("need at least one sample and a positive horizon");
    }
    check_alphabet(source, pattern)?;
    let automaton = MatchingAutomaton::new(pattern);
    let sampler = source.sampler();
    let n = pattern.len();
    let blocks = samples.div_ceil(HITTING_BLOCK);
    let parts: Vec<EmpiricalLaw> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let mut law =
                EmpiricalLaw::new(EstimatorKind::FreshStartHitting, seed, 1, pattern, source);
            let size = HITTING_BLOCK.min(samples - b * HITTING_BLOCK);
            for _ in 0..size {
                let mut memory = sampler.initial_memory(&mut rng);
                let mut state = 0;
                let mut hit = None;
                for i in 0..horizon + n {
                    state = automaton.step(state, sampler.step(&mut memory, &mut rng));
                    if state == n && i + 1 > n {
                        hit = Some(i + 1 - n);
                        break;
                    }
                }
                match hit {
                    Some(t) => law.record(t),
                    None => {
                        law.censored += 1;
                        law.samples += 1;
                    }
                }
            }
            law
        })
        .collect();
    let mut law = EmpiricalLaw::new(EstimatorKind::FreshStartHitting, seed, 1, pattern, source);
    parts.iter().for_each(|p| law.merge(p));
    Ok(law)
}

/// Return gaps and sojourn runs from `workers` independent stationary
/// trajectories of total length `trajectory_length`.
pub fn estimate_return_and_sojourn(
    source: &SourceModel,
    pattern: &Pattern,
    trajectory_length: usize,
    plan: SamplingPlan,
) -> Result<(EmpiricalLaw, EmpiricalLaw)> {
    if plan.workers == 0 {
        return argument("need at least one worker");
    }
    check_alphabet(source, pattern)?;
    let structure = pattern.analyze();
    let n = pattern.len();
    let period = structure.principal_period;
    let allowed: Vec<bool> = (0..n)
        .map(|g| g == period || structure.secondary_set.contains(&g))
        .collect();
    let interior: Vec<bool> = (0..n)
        .map(|g| structure.interior_overlaps.contains(&g))
        .collect();
    let automaton = MatchingAutomaton::new(pattern);
    let sampler = source.sampler();
    let segment = trajectory_length / plan.workers;
    let parts: Vec<(EmpiricalLaw, EmpiricalLaw)> = (0..plan.workers)
        .into_par_iter()
        .map(|w| {
            let mut rng = substream(plan.seed, SEGMENT_STREAMS + w as u64);
            let len = if w + 1 == plan.workers {
                trajectory_length - segment * w
            } else {
                segment
            };
            let mut memory = sampler.initial_memory(&mut rng);
            let mut state = 0;
            let mut starts = Vec::new();
            for i in 0..len {
                state = automaton.step(state, sampler.step(&mut memory, &mut rng));
                if state == n {
                    starts.push(i + 1 - n);
                }
            }
            let mut ret = EmpiricalLaw::new(
                EstimatorKind::OccurrenceGapReturn,
                plan.seed,
                plan.workers,
                pattern,
                source,
            );
            let mut soj = EmpiricalLaw::new(
                EstimatorKind::OccurrenceRunSojourn,
                plan.seed,
                plan.workers,
                pattern,
                source,
            );
            for pair in starts.windows(2) {
                let gap = pair[1] - pair[0];
                if gap < n && interior[gap] {
                    ret.interior_gaps += 1;
                } else if gap < n && !allowed[gap] {
                    ret.forbidden_gaps += 1;
                }
                ret.record(gap);
            }
            ret.dropped += u64::from(!starts.is_empty());
            // runs, from the last occurrence backwards; a run whose next
            // o_A-shifted copy would end past the segment is undecided
            let mut run: Option<usize> = None;
            for (j, &s) in starts.iter().enumerate().rev() {
                let next_is_copy = starts.get(j + 1) == Some(&(s + period));
                run = match (next_is_copy, run) {
                    (true, Some(r)) => Some(r + 1),
                    (true, None) => None,
                    (false, _) if s + period + n > len => None,
                    (false, _) => Some(0),
                };
                match run {
                    Some(r) => soj.record(r),
                    None => soj.dropped += 1,
                }
            }
            (ret, soj)
        })
        .collect();
    let mut ret = EmpiricalLaw::new(
        EstimatorKind::OccurrenceGapReturn,
        plan.seed,
        plan.workers,
        pattern,
        source,
    );
    let mut soj = EmpiricalLaw::new(
        EstimatorKind::OccurrenceRunSojourn,
        plan.seed,
        plan.workers,
        pattern,
        source,
    );
    for (r, s) in &parts {
        ret.merge(r);
        soj.merge(s);
    }
    let p_a = source.cylinder_probability(pattern.symbols())?;
    if (segment as f64) < 100.0 * n as f64 / p_a {
        let warning = format!(
            "segments of {segment} symbols are short compared with n/P(A) = {:.3e}",
            n as f64 / p_a
        );
        ret.warning = Some(warning.clone());
        soj.warning = Some(warning);
    }
    if ret.is_empty() {
        ret.warning = Some("no return gaps observed".into());
    }
    if soj.is_empty() {
        soj.warning = Some("no sojourn runs observed".into());
    }
    Ok((ret, soj))
}

fn check_alphabet(source: &SourceModel, pattern: &Pattern) -> Result<()> {
    if source.alphabet() != pattern.alphabet() {
        return argument("pattern and source use different alphabets");
    }
    Ok(())
}

/// Two-sided interval for a binomial proportion `count / samples` at
/// `level`: normal approximation, or Clopper–Pearson quantiles when either
/// the count or its complement is below 30.
pub fn confidence_band(count: u64, samples: u64, level: f64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - level;
    let (c, n) = (count as f64, samples as f64);
    if count < EXACT_BAND_BELOW || samples - count < EXACT_BAND_BELOW {
        let lo = if count == 0 {
            0.0
        } else {
            Beta::new(c, n - c + 1.0)
                .expect("positive shapes")
                .inverse_cdf(alpha / 2.0)
        };
        let hi = if count == samples {
            1.0
        } else {
            Beta::new(c + 1.0, n - c)
                .expect("positive shapes")
                .inverse_cdf(1.0 - alpha / 2.0)
        };
        return (lo, hi);
    }
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let p = c / n;
    let half = z * (p * (1.0 - p) / n).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// One bin of a sampled law next to its exact probability: `(lo, hi]` for
/// survival cuts, the single value `lo = hi` for point masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinCheck {
    pub lo: usize,
    /// `None`: open-ended bin, censored samples included.
    pub hi: Option<usize>,
    pub count: u64,
    pub expected: f64,
    pub exact: f64,
    pub band: (f64, f64),
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Consistency {
    pub level: f64,
    pub bins: Vec<BinCheck>,
    /// Bins whose expected count reaches the threshold.
    pub eligible: usize,
    pub inside: usize,
}

impl Consistency {
    /// Fraction of eligible bins whose band covers the exact value.
    pub fn coverage(&self) -> f64 {
        if self.eligible == 0 {
            f64::NAN
        } else {
            self.inside as f64 / self.eligible as f64
        }
    }
}

/// Compares a sampled law with exact survival values on consecutive cuts:
/// bin `(c_j, c_{j+1}]` has probability `S(c_j) - S(c_{j+1})` and the last
/// bin `(c_last, ∞)` has `S(c_last)`. Bins with fewer than `min_expected`
/// expected samples are listed but not counted.
pub fn consistency(
    law: &EmpiricalLaw,
    cuts: &[usize],
    survival: &[f64],
    level: f64,
    min_expected: f64,
) -> Result<Consistency> {
    if cuts.len() != survival.len() || cuts.is_empty() {
        return argument("need one survival value per cut");
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return argument("cuts must increase");
    }
    let n = law.samples as f64;
    let mut bins = Vec::with_capacity(cuts.len());
    for j in 0..cuts.len() {
        let (hi, exact) = match cuts.get(j + 1) {
            Some(&c) => (Some(c), survival[j] - survival[j + 1]),
            None => (None, survival[j]),
        };
        let count = law.count_between(cuts[j], hi);
        let band = confidence_band(count, law.samples, level);
        bins.push(BinCheck {
            lo: cuts[j],
            hi,
            count,
            expected: n * exact,
            exact,
            band,
            inside: band.0 <= exact && exact <= band.1,
        });
    }
    let eligible: Vec<&BinCheck> = bins.iter().filter(|b| b.expected >= min_expected).collect();
    Ok(Consistency {
        level,
        eligible: eligible.len(),
        inside: eligible.iter().filter(|b| b.inside).count(),
        bins,
    })
}

/// Compares a sampled law on `{0, 1, …}` with exact point masses: one bin
/// per value below `pmf.len()` and one for the rest, of mass `tail`.
pub fn consistency_pmf(
    law: &EmpiricalLaw,
    pmf: &[f64],
    tail: f64,
    level: f64,
    min_expected: f64,
) -> Consistency {
    let n = law.samples as f64;
    let bins: Vec<BinCheck> = pmf
        .iter()
        .enumerate()
        .map(|(k, &exact)| (k, Some(k), exact))
        .chain(std::iter::once((pmf.len(), None, tail)))
        .map(|(lo, hi, exact)| {
            let count = match hi {
                Some(k) => law.counts.get(&k).copied().unwrap_or(0),
                None => law.counts.range(lo..).map(|(_, c)| c).sum::<u64>() + law.censored,
            };
            let band = confidence_band(count, law.samples, level);
            BinCheck {
                lo,
                hi,
                count,
                expected: n * exact,
                exact,
                band,
                inside: band.0 <= exact && exact <= band.1,
            }
        })
        .collect();
    let eligible: Vec<&BinCheck> = bins.iter().filter(|b| b.expected >= min_expected).collect();
    Consistency {
        level,
        eligible: eligible.len(),
        inside: eligible.iter().filter(|b| b.inside).count(),
        bins,
    }
}

/// Cuts for `consistency` from `base`, merging neighbours until every bin
/// but the last carries at least `min_mass` probability.
pub fn merge_cuts(base: &[usize], survival: &[f64], min_mass: f64) -> (Vec<usize>, Vec<f64>) {
    let mut cuts = Vec::new();
    let mut values = Vec::new();
    for (&c, &s) in base.iter().zip(survival) {
        if values.last().is_none_or(|&last: &f64| last - s >= min_mass) {
            cuts.push(c);
            values.push(s);
        }
    }
    (cuts, values)
}
