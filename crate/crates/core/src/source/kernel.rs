use rand::Rng;

use crate::alphabet::Symbol;

/// A source written as a hidden chain that emits one symbol per step.
///
/// `initial` is the law of the hidden memory just before the first emitted
/// symbol; from memory `m`, symbol `x` is emitted while moving to `m'` with
/// probability `moves(m, x)[m']`. Every source in this crate is stationary
/// in this form: the emitted process started from `initial` has the same law
/// at every offset.
#[derive(Debug, Clone)]
pub struct EmissionKernel {
    alphabet_len: usize,
    initial: Vec<f64>,
    moves: Vec<Vec<(usize, f64)>>,
}

impl EmissionKernel {
    pub(crate) fn new(
        alphabet_len: usize,
        initial: Vec<f64>,
        moves: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        debug_assert_eq!(moves.len(), initial.len() * alphabet_len);
        EmissionKernel {
            alphabet_len,
            initial,
            moves,
        }
    }

    pub fn memory_size(&self) -> usize {
        self.initial.len()
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    #[inline]
    pub fn moves(&self, memory: usize, symbol: Symbol) -> &[(usize, f64)] {
        &self.moves[memory * self.alphabet_len + symbol as usize]
    }

    /// One forward-filter step: unnormalized memory law after also emitting `symbol`.
    pub fn advance(&self, alpha: &[f64], symbol: Symbol) -> Vec<f64> {
        let mut next = vec![0.0; alpha.len()];
        for (m, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &(to, p) in self.moves(m, symbol) {
                next[to] += a * p;
            }
        }
        next
    }

    /// Unnormalized memory law after emitting `word` from the stationary start.
    pub fn forward(&self, word: &[Symbol]) -> Vec<f64> {
        word.iter()
            .fold(self.initial.clone(), |alpha, &x| self.advance(&alpha, x))
    }

    pub fn word_probability(&self, word: &[Symbol]) -> f64 {
        self.forward(word).iter().sum()
    }

    /// Hidden memory law conditioned on having just emitted `word`, together
    /// with the word's probability.
    pub fn condition_on(&self, word: &[Symbol]) -> (Vec<f64>, f64) {
        let mut alpha = self.forward(word);
        let total: f64 = alpha.iter().sum();
        if total > 0.0 {
            alpha.iter_mut().for_each(|a| *a /= total);
        }
        (alpha, total)
    }

    pub(crate) fn sampler(&self) -> KernelSampler {
        let mut offsets = Vec::with_capacity(self.memory_size() + 1);
        let mut branches = Vec::new();
        for m in 0..self.memory_size() {
            offsets.push(branches.len());
            let mut acc = 0.0;
            for x in 0..self.alphabet_len {
                for &(to, p) in self.moves(m, x as Symbol) {
                    acc += p;
                    branches.push((acc, x as Symbol, to));
                }
            }
        }
        offsets.push(branches.len());
        let mut acc = 0.0;
        let initial_cdf = self
            .initial
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        KernelSampler {
            offsets,
            branches,
            initial_cdf,
        }
    }
}

/// Inverse-CDF sampler over the flattened branches of a kernel.
#[derive(Debug, Clone)]
pub(crate) struct KernelSampler {
    offsets: Vec<usize>,
    branches: Vec<(f64, Symbol, usize)>,
    initial_cdf: Vec<f64>,
}

impl KernelSampler {
    pub fn initial_memory<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.initial_cdf, rng.random::<f64>())
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, memory: &mut usize, rng: &mut R) -> Symbol {
        let branches = &self.branches[self.offsets[*memory]..self.offsets[*memory + 1]];
        let total = branches.last().map_or(1.0, |b| b.0);
        let u = rng.random::<f64>() * total;
        let i = branches
            .partition_point(|b| b.0 <= u)
            .min(branches.len() - 1);
        let (_, x, to) = branches[i];
        *memory = to;
        x
    }
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let total = cdf.last().copied().unwrap_or(1.0);
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}
