//! Stationary sources: i.i.d., finite Markov, and renewal-type hidden chains.

mod kernel;
mod markov;
mod renewal;
mod spec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{argument, model, Result};

pub use kernel::EmissionKernel;
pub(crate) use kernel::KernelSampler;
pub use markov::{stationary_law, MarkovSource};
pub use renewal::{renewal_from_delta, Delta, RenewalSource};
pub use spec::SourceSpec;

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct IidSource {
    alphabet: Alphabet,
    weights: Vec<f64>,
}

impl IidSource {
    pub fn new(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != alphabet.len() {
            return model(format!(
                "{} weights for an alphabet of {} symbols",
                weights.len(),
                alphabet.len()
            ));
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0 && w <= 1.0)) {
            return model(format!(
                "weight of {:?} must be in (0,1], got {}",
                alphabet.name(i as Symbol),
                weights[i]
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return model(format!("weights sum to {sum}"));
        }
        Ok(IidSource { alphabet, weights })
    }

    /// Two-symbol source with `P(first symbol) = theta`.
    pub fn bernoulli(alphabet: Alphabet, theta: f64) -> Result<Self> {
        IidSource::new(alphabet, vec![theta, 1.0 - theta])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
}

/// Any of the supported stationary sources.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceModel {
    Iid(IidSource),
    Markov(MarkovSource),
    Renewal(RenewalSource),
}

impl From<IidSource> for SourceModel {
    fn from(s: IidSource) -> Self {
        SourceModel::Iid(s)
    }
}

impl From<MarkovSource> for SourceModel {
    fn from(s: MarkovSource) -> Self {
        SourceModel::Markov(s)
    }
}

impl From<RenewalSource> for SourceModel {
    fn from(s: RenewalSource) -> Self {
        SourceModel::Renewal(s)
    }
}

impl SourceModel {
    pub fn alphabet(&self) -> &Alphabet {
        match self {
            SourceModel::Iid(s) => s.alphabet(),
            SourceModel::Markov(s) => s.alphabet(),
            SourceModel::Renewal(s) => s.alphabet(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SourceModel::Iid(_) => "iid",
            SourceModel::Markov(_) => "markov",
            SourceModel::Renewal(_) => "renewal",
        }
    }

    /// Short human-readable descriptor used in reports.
    pub fn describe(&self) -> String {
        match self {
            SourceModel::Iid(s) => format!("iid{:?}", s.weights()),
            SourceModel::Markov(s) => format!("markov{:?}", s.transition()),
            SourceModel::Renewal(s) => match s.delta() {
                Some(d) => format!("renewal(delta={d:?}, n_max={})", s.n_max()),
                None => format!("renewal(n_max={})", s.n_max()),
            },
        }
    }

    /// The source as a hidden chain emitting one symbol per step.
    pub fn kernel(&self) -> EmissionKernel {
        match self {
            SourceModel::Iid(s) => {
                let moves = s.weights().iter().map(|&w| vec![(0, w)]).collect();
                EmissionKernel::new(s.weights().len(), vec![1.0], moves)
            }
            SourceModel::Markov(s) => {
                // memory is the previous symbol; starting it from π makes the
                // first emitted symbol π-distributed too
                let k = s.alphabet().len();
                let mut moves = Vec::with_capacity(k * k);
                for prev in 0..k {
                    for x in 0..k {
                        moves.push(vec![(x, s.transition()[prev][x])]);
                    }
                }
                EmissionKernel::new(k, s.stationary().to_vec(), moves)
            }
            SourceModel::Renewal(s) => {
                // memory is the hidden counter at the previous step; the
                // emitted symbol reports whether the new counter is nonzero
                let mut moves = Vec::with_capacity(2 * (s.n_max() + 1));
                for j in 0..=s.n_max() {
                    let c = s.climb(j);
                    moves.push(vec![(0, 1.0 - c)]);
                    moves.push(if j < s.n_max() {
                        vec![(j + 1, c)]
                    } else {
                        vec![]
                    });
                }
                EmissionKernel::new(2, s.hidden_stationary().to_vec(), moves)
            }
        }
    }

    fn check_word(&self, word: &[Symbol]) -> Result<()> {
        let k = self.alphabet().len();
        match word.iter().find(|&&s| s as usize >= k) {
            Some(s) => argument(format!(
                "symbol index {s} not in alphabet {}",
                self.alphabet()
            )),
            None => Ok(()),
        }
    }

    /// Stationary probability of the cylinder `{X_0 … X_{len-1} = word}`.
    /// The empty word has probability 1.
    pub fn cylinder_probability(&self, word: &[Symbol]) -> Result<f64> {
        self.check_word(word)?;
        Ok(match self {
            SourceModel::Iid(s) => word.iter().map(|&x| s.weights()[x as usize]).product(),
            SourceModel::Markov(s) => s.word_probability(word),
            SourceModel::Renewal(_) => self.kernel().word_probability(word),
        })
    }

    /// Upper bound on the φ-mixing coefficients for gaps `0..=max_lag`.
    pub fn phi_profile(&self, max_lag: usize) -> MixingProfile {
        let values = match self {
            SourceModel::Iid(_) => {
                let mut v = vec![0.0; max_lag + 1];
                v[0] = 1.0;
                v
            }
            SourceModel::Markov(s) => {
                markov::tv_mixing_profile(s.transition(), s.stationary(), max_lag)
            }
            SourceModel::Renewal(s) => {
                markov::tv_mixing_profile(&s.hidden_transition(), s.hidden_stationary(), max_lag)
            }
        };
        MixingProfile { values }
    }

    /// Stationary sample of `length` symbols.
    pub fn sample_path<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Vec<Symbol> {
        let sampler = self.kernel().sampler();
        let mut memory = sampler.initial_memory(rng);
        (0..length)
            .map(|_| sampler.step(&mut memory, rng))
            .collect()
    }

    pub(crate) fn sampler(&self) -> KernelSampler {
        self.kernel().sampler()
    }

    /// Closed-form limit of the repetition probabilities `ρ_i` for `word`,
    /// where the source family provides one.
    pub fn rho_limit_closed_form(&self, word: &crate::Pattern) -> Option<f64> {
        let structure = word.analyze();
        let period_tail = word.suffix(structure.principal_period).ok()?;
        match self {
            SourceModel::Iid(_) => self.cylinder_probability(period_tail).ok(),
            SourceModel::Markov(s) => {
                let a = word.symbols();
                // each extra copy appends the last o_A symbols right after
                // a_{n-1} (which equals a_{n-o-1} whenever o_A < n)
                let mut prev = a[a.len() - 1];
                let mut rho = 1.0;
                for &x in period_tail {
                    rho *= s.p(prev, x);
                    prev = x;
                }
                Some(rho)
            }
            SourceModel::Renewal(s) => {
                let all_ones = word.symbols().iter().all(|&x| x == 1);
                (all_ones && s.delta().is_some())
                    .then(|| (-1.0 + s.delta().map_or(0.0, Delta::difference_limit)).exp())
            }
        }
    }
}

/// φ-mixing profile `ℓ ↦ φ(ℓ)`, non-increasing, with `φ(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    values: Vec<f64>,
}

impl MixingProfile {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values[0] != 1.0 {
            return argument("mixing profile must start with φ(0) = 1");
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return argument("mixing coefficients must lie in [0,1]");
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return argument("mixing profile must be non-increasing");
        }
        Ok(MixingProfile { values })
    }

    /// `φ(lag)`; lags past the tabulated range reuse the last value, which is
    /// an upper bound since the profile is non-increasing.
    pub fn phi(&self, lag: usize) -> f64 {
        self.values
            .get(lag)
            .or_else(|| self.values.last())
            .copied()
            .unwrap_or(1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
