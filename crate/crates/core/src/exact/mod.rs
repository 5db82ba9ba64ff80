//! Exact hitting, return and sojourn laws.
//!
//! The joint state is (matching-automaton state, source memory). Transitions
//! that complete an occurrence are removed from the step operator, so it is
//! sub-stochastic and the mass left after `t` steps is the survival
//! probability at `t`. For the hitting law the first `n` symbols are read
//! without absorption (an occurrence starting at position 0 does not count);
//! for the return law the chain starts as if the word had just been read:
//! automaton in state `border(n) = n - o_A`, memory conditioned on the word.

mod curve;
mod moments;
pub mod oracle;

use crate::alphabet::Symbol;
use crate::automaton::MatchingAutomaton;
use crate::error::{argument, model, Result};
use crate::pattern::{OverlapStructure, Pattern};
use crate::source::{EmissionKernel, SourceModel};

pub use curve::{LawKind, SojournPmf, SurvivalCurve};
pub use moments::{moments_from_survival, MomentEstimate};

/// Hazard must move by less than this (relative) over `HAZARD_WINDOW` steps
/// before the tail is treated as geometric.
const HAZARD_TOL: f64 = 1e-11;
const HAZARD_WINDOW: usize = 64;

/// Exact laws for one (source, word) pair.
#[derive(Debug, Clone)]
pub struct ExactEngine {
    pattern: Pattern,
    structure: OverlapStructure,
    automaton: MatchingAutomaton,
    kernel: EmissionKernel,
    source_desc: String,
    p_a: f64,
    /// Memory law given the word at the origin.
    conditioned_memory: Vec<f64>,
}

impl ExactEngine {
    pub fn new(source: &SourceModel, pattern: &Pattern) -> Result<Self> {
        if source.alphabet() != pattern.alphabet() {
            return argument(format!(
                "pattern alphabet {} differs from source alphabet {}",
                pattern.alphabet(),
                source.alphabet()
            ));
        }
        let kernel = source.kernel();
        let (conditioned_memory, p_a) = kernel.condition_on(pattern.symbols());
        if p_a <= 0.0 {
            return model(format!("pattern {pattern} has probability zero"));
        }
        Ok(ExactEngine {
            structure: pattern.analyze(),
            automaton: MatchingAutomaton::new(pattern),
            pattern: pattern.clone(),
            kernel,
            source_desc: source.describe(),
            p_a,
            conditioned_memory,
        })
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn structure(&self) -> &OverlapStructure {
        &self.structure
    }

    pub fn p_a(&self) -> f64 {
        self.p_a
    }

    fn initial_state(&self, law: LawKind) -> Vec<f64> {
        let n = self.pattern.len();
        let mem = self.kernel.memory_size();
        let mut v = vec![0.0; n * mem];
        match law {
            LawKind::Return => {
                let s = self.structure.border_of_full_match();
                v[s * mem..(s + 1) * mem].copy_from_slice(&self.conditioned_memory);
            }
            LawKind::Hitting => {
                v[..mem].copy_from_slice(self.kernel.initial());
                for _ in 0..n {
                    let mut next = vec![0.0; v.len()];
                    self.step(&v, &mut next, false);
                    v = next;
                }
            }
        }
        v
    }

    /// One step of the product chain. With `absorb`, mass completing an
    /// occurrence is removed and returned; otherwise it continues from the
    /// border of the full match.
    fn step(&self, v: &[f64], out: &mut [f64], absorb: bool) -> f64 {
        let n = self.pattern.len();
        let mem = self.kernel.memory_size();
        let restart = self.structure.border_of_full_match();
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut hit = 0.0;
        for s in 0..n {
            let row = &v[s * mem..(s + 1) * mem];
            for (m, &mass) in row.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for x in 0..self.kernel.alphabet_len() {
                    let x = x as Symbol;
                    let mut target = self.automaton.step(s, x);
                    let moves = self.kernel.moves(m, x);
                    if target == n {
                        if absorb {
                            hit += moves.iter().map(|&(_, p)| mass * p).sum::<f64>();
                            continue;
                        }
                        target = restart;
                    }
                    let base = target * mem;
                    for &(to, p) in moves {
                        out[base + to] += mass * p;
                    }
                }
            }
        }
        hit
    }

    /// Runs the absorbing chain for `horizon` steps, calling
    /// `observe(t, survival, hit_mass)` after each step `t = 1..=horizon`.
    /// Stops early (returning the last step) if `observe` returns false.
    pub(crate) fn run<F>(&self, law: LawKind, horizon: usize, mut observe: F) -> usize
    where
        F: FnMut(usize, f64, f64) -> bool,
    {
        let mut v = self.initial_state(law);
        let mut next = vec![0.0; v.len()];
        for t in 1..=horizon {
            let hit = self.step(&v, &mut next, true);
            std::mem::swap(&mut v, &mut next);
            let survival: f64 = v.iter().sum();
            if !observe(t, survival, hit) {
                return t;
            }
        }
        horizon
    }

    fn survival(&self, law: LawKind, t_max: usize) -> SurvivalCurve {
        let mut values = vec![1.0];
        let mut masses = vec![0.0];
        self.run(law, t_max, |_, s, h| {
            values.push(s);
            masses.push(h);
            true
        });
        let tail_rate = hazard(&values, &masses, values.len() - 1);
        SurvivalCurve {
            law,
            values,
            masses,
            tail_rate,
            tail_converged: false,
            pattern: self.pattern.to_string(),
            source: self.source_desc.clone(),
        }
    }

    /// `P(τ_A > t)` for `t = 0..=t_max` from a stationary start.
    pub fn hitting_survival(&self, t_max: usize) -> SurvivalCurve {
        self.survival(LawKind::Hitting, t_max)
    }

    /// `P_A(τ_A > t)` for `t = 0..=t_max`.
    pub fn return_survival(&self, t_max: usize) -> SurvivalCurve {
        self.survival(LawKind::Return, t_max)
    }

    /// Survival at arbitrary times without storing the whole curve.
    pub fn survival_at(&self, law: LawKind, times: &[usize]) -> Vec<f64> {
        let horizon = times.iter().copied().max().unwrap_or(0);
        let mut table = vec![f64::NAN; horizon + 1];
        let wanted = {
            let mut w = vec![false; horizon + 1];
            times.iter().for_each(|&t| w[t] = true);
            w
        };
        table[0] = 1.0;
        self.run(law, horizon, |t, s, _| {
            if wanted[t] {
                table[t] = s;
            }
            true
        });
        times.iter().map(|&t| table[t]).collect()
    }

    /// Tabulates until the hazard has stabilized (the tail is then geometric
    /// with the spectral radius of the step operator) or `cap` steps.
    pub fn survival_to_tail(&self, law: LawKind, cap: usize) -> SurvivalCurve {
        let mut values = vec![1.0];
        let mut masses = vec![0.0];
        let mut hazards: Vec<f64> = vec![0.0];
        let min_steps = 4 * self.pattern.len() + HAZARD_WINDOW;
        let mut converged = false;
        self.run(law, cap, |t, s, h| {
            let prev = *values.last().expect("non-empty");
            values.push(s);
            masses.push(h);
            hazards.push(if prev > 0.0 { h / prev } else { 0.0 });
            if s <= 1e-300 {
                converged = true;
                return false;
            }
            if t >= min_steps {
                let now = hazards[t];
                let before = hazards[t - HAZARD_WINDOW];
                if (now - before).abs() <= HAZARD_TOL * now {
                    converged = true;
                    return false;
                }
            }
            true
        });
        let tail_rate = hazard(&values, &masses, values.len() - 1);
        SurvivalCurve {
            law,
            values,
            masses,
            tail_rate,
            tail_converged: converged,
            pattern: self.pattern.to_string(),
            source: self.source_desc.clone(),
        }
    }

    /// `E_A[(P(A) τ_A)^β]` (return) or `E[(P(A) τ_A)^β]` (hitting).
    pub fn rescaled_moment(&self, law: LawKind, beta: f64) -> Result<MomentEstimate> {
        let curve = self.survival_to_tail(law, 1 << 30);
        moments_from_survival(&curve, beta, self.p_a)
    }

    /// `ζ_A = P_A(τ_A > o_A)`.
    pub fn zeta(&self) -> f64 {
        let o = self.structure.principal_period;
        self.return_survival(o).values[o]
    }

    /// `ζ_A` through the cylinder ratio `1 - P(A ∩ T^{-o_A}A) / P(A)`.
    pub fn zeta_by_cylinders(&self) -> f64 {
        let doubled = self.kernel.word_probability(&self.pattern.repeated(2));
        1.0 - doubled / self.p_a
    }

    /// `ρ_i = P(C_{i+1}) / P(C_i)` for `i = 1..=i_max`, where `C_i` is the
    /// cylinder of `i` consecutive `o_A`-spaced occurrences. Once some
    /// `P(C_{i+1})` vanishes every later term is 0.
    pub fn rho_sequence(&self, i_max: usize) -> Result<Vec<f64>> {
        if i_max == 0 {
            return argument("i_max must be at least 1");
        }
        let block = self
            .pattern
            .suffix(self.structure.principal_period)
            .expect("period never exceeds length");
        let mut alpha = self.conditioned_memory.clone();
        let mut rho = Vec::with_capacity(i_max);
        for _ in 1..=i_max {
            let extended = block.iter().fold(alpha, |a, &x| self.kernel.advance(&a, x));
            let r: f64 = extended.iter().sum();
            if r <= 0.0 {
                // no further copy can follow: the run ends surely from here
                rho.resize(i_max, 0.0);
                break;
            }
            rho.push(r);
            alpha = extended.into_iter().map(|a| a / r).collect();
        }
        Ok(rho)
    }

    /// `P_A(S_A = k) = (1 - ρ_{k+1}) Π_{i ≤ k} ρ_i` for `k = 0..=k_max`.
    pub fn sojourn_pmf(&self, k_max: usize) -> Result<SojournPmf> {
        let rho = self.rho_sequence(k_max + 1)?;
        Ok(sojourn_from_rho(
            &rho,
            k_max,
            self.pattern.to_string(),
            self.source_desc.clone(),
        ))
    }
}

pub(crate) fn sojourn_from_rho(
    rho: &[f64],
    k_max: usize,
    pattern: String,
    source: String,
) -> SojournPmf {
    let mut run = 1.0;
    let mut probabilities = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        probabilities.push((1.0 - rho[k]) * run);
        run *= rho[k];
    }
    SojournPmf {
        probabilities,
        tail: run,
        pattern,
        source,
    }
}

fn hazard(values: &[f64], masses: &[f64], t: usize) -> Option<f64> {
    (t >= 1 && values[t - 1] > 0.0).then(|| masses[t] / values[t - 1])
}

pub fn hitting_survival(
    source: &SourceModel,
    pattern: &Pattern,
    t_max: usize,
) -> Result<SurvivalCurve> {
    Ok(ExactEngine::new(source, pattern)?.hitting_survival(t_max))
}

pub fn return_survival(
    source: &SourceModel,
    pattern: &Pattern,
    t_max: usize,
) -> Result<SurvivalCurve> {
    Ok(ExactEngine::new(source, pattern)?.return_survival(t_max))
}

pub fn zeta(source: &SourceModel, pattern: &Pattern) -> Result<f64> {
    Ok(ExactEngine::new(source, pattern)?.zeta())
}

pub fn rho_sequence(source: &SourceModel, pattern: &Pattern, i_max: usize) -> Result<Vec<f64>> {
    ExactEngine::new(source, pattern)?.rho_sequence(i_max)
}

pub fn sojourn_pmf(source: &SourceModel, pattern: &Pattern, k_max: usize) -> Result<SojournPmf> {
    ExactEngine::new(source, pattern)?.sojourn_pmf(k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::source::{IidSource, MarkovSource};

    fn ab() -> Alphabet {
        Alphabet::from_chars("ab").unwrap()
    }

    fn coin(theta: f64) -> SourceModel {
        IidSource::bernoulli(ab(), theta).unwrap().into()
    }

    fn pat(s: &str) -> Pattern {
        Pattern::parse(s, &ab()).unwrap()
    }

    #[test]
    fn single_symbol_hitting_is_geometric() {
        let c = hitting_survival(&coin(0.5), &pat("a"), 20).unwrap();
        for t in 0..=20 {
            assert!((c.values[t] - 0.5f64.powi(t as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn double_a_hitting_counts_fibonacci_words() {
        // length-3 binary words with no "aa": 5 of 8
        let c = hitting_survival(&coin(0.5), &pat("aa"), 2).unwrap();
        assert_eq!(c.values[0], 1.0);
        assert!((c.values[2] - 5.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn return_law_small_cases() {
        let c = return_survival(&coin(0.5), &pat("aa"), 1).unwrap();
        assert_eq!(c.values[0], 1.0);
        assert!((c.values[1] - 0.5).abs() < 1e-15);

        let e = ExactEngine::new(&coin(0.5), &pat("aaaabbaaaabbaaa")).unwrap();
        let c = e.return_survival(6);
        assert!((c.masses[6] - 2f64.powi(-6)).abs() < 1e-16);
        assert!((e.zeta() - 63.0 / 64.0).abs() < 1e-15);
        assert!((e.zeta_by_cylinders() - 63.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn zeta_of_runs_is_one_half() {
        for n in 1..=10 {
            let z = zeta(&coin(0.5), &pat(&"a".repeat(n))).unwrap();
            assert!((z - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_matches_closed_forms() {
        let src = coin(0.3);
        for w in ["aaa", "aba", "abaab", "bbab"] {
            let p = pat(w);
            let rho = rho_sequence(&src, &p, 6).unwrap();
            let closed = src.rho_limit_closed_form(&p).unwrap();
            assert!(rho.iter().all(|r| (r - closed).abs() < 1e-14), "{w}");
        }
        let markov: SourceModel = MarkovSource::new(ab(), vec![vec![0.7, 0.3], vec![0.4, 0.6]])
            .unwrap()
            .into();
        for w in ["aab", "abab", "bbb", "abba"] {
            let p = pat(w);
            let rho = rho_sequence(&markov, &p, 6).unwrap();
            let closed = markov.rho_limit_closed_form(&p).unwrap();
            assert!(rho.iter().all(|r| (r - closed).abs() < 1e-14), "{w}");
            let e = ExactEngine::new(&markov, &p).unwrap();
            assert!((rho[0] - (1.0 - e.zeta())).abs() < 1e-12);
        }
    }

    #[test]
    fn sojourn_pmf_fair_coin_double_a() {
        let pmf = sojourn_pmf(&coin(0.5), &pat("aa"), 12).unwrap();
        for (k, p) in pmf.probabilities.iter().enumerate() {
            assert!((p - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
        let total: f64 = pmf.probabilities.iter().sum::<f64>() + pmf.tail;
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_mismatched_alphabets() {
        let other = Pattern::parse("xy", &Alphabet::from_chars("xy").unwrap()).unwrap();
        assert!(ExactEngine::new(&coin(0.5), &other).is_err());
        assert!(rho_sequence(&coin(0.5), &pat("ab"), 0).is_err());
    }

    #[test]
    fn survival_at_matches_dense_curve() {
        let e = ExactEngine::new(&coin(0.4), &pat("abab")).unwrap();
        let dense = e.return_survival(200);
        let picked = e.survival_at(LawKind::Return, &[0, 3, 77, 200, 5]);
        for (t, v) in [0, 3, 77, 200, 5].iter().zip(picked) {
            assert_eq!(dense.values[*t], v);
        }
    }
}
