//! Self-overlap structure of a word.
//!
//! A word `A = a_0 … a_{n-1}` overlaps itself at shift `k` when
//! `a_{i+k} = a_i` for every `0 ≤ i < n - k`. The smallest such shift is the
//! principal period `o_A`; its multiples up to `⌊n/o_A⌋·o_A` are the principal
//! periods, and the remaining overlap shifts strictly between
//! `⌊n/o_A⌋·o_A` and `n` are the secondary periods `R(A)`.
//!
//! Overlap shifts are exactly `n - b` for `b` running over the border chain of
//! the word, so everything here is derived from the border (failure) array in
//! linear time.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{argument, Result};

/// A non-empty word over a declared alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    symbols: Vec<Symbol>,
    alphabet: Alphabet,
}

impl Pattern {
    pub fn new(symbols: Vec<Symbol>, alphabet: Alphabet) -> Result<Self> {
        if symbols.is_empty() {
            return argument("pattern must have at least one symbol");
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= alphabet.len()) {
            return argument(format!("symbol index {s} outside alphabet {alphabet}"));
        }
        Ok(Pattern { symbols, alphabet })
    }

    /// Parses a literal (plain string or JSON array of names) against `alphabet`.
    pub fn parse(literal: &str, alphabet: &Alphabet) -> Result<Self> {
        Pattern::new(alphabet.parse_word(literal)?, alphabet.clone())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Whether a copy of the word shifted right by `k` agrees with the word on
    /// their common coordinates. Always true for `k = n`.
    pub fn overlap_compatible(&self, k: usize) -> Result<bool> {
        let n = self.len();
        if k == 0 || k > n {
            return argument(format!("shift {k} outside 1..={n}"));
        }
        Ok(self.symbols[k..] == self.symbols[..n - k])
    }

    /// The last `w` symbols. `w = 0` gives the empty word.
    pub fn suffix(&self, w: usize) -> Result<&[Symbol]> {
        let n = self.len();
        if w > n {
            return argument(format!("suffix length {w} exceeds pattern length {n}"));
        }
        Ok(&self.symbols[n - w..])
    }

    /// Border array: `border[i]` is the length of the longest proper border
    /// of the prefix of length `i`, for `i = 0..=n` (`border[0] = 0`).
    pub fn borders(&self) -> Vec<usize> {
        border_array(&self.symbols)
    }

    pub fn analyze(&self) -> OverlapStructure {
        OverlapStructure::from_borders(&self.borders())
    }

    /// The word extended by `reps - 1` further copies of its last `o_A`
    /// symbols: the cylinder of `reps` consecutive `o_A`-spaced occurrences.
    pub fn repeated(&self, reps: usize) -> Vec<Symbol> {
        let n = self.len();
        let period = self.analyze().principal_period;
        let tail = &self.symbols[n - period..];
        let mut word = self.symbols.clone();
        for _ in 1..reps {
            word.extend_from_slice(tail);
        }
        word
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.alphabet.render(&self.symbols))
    }
}

pub(crate) fn border_array(word: &[Symbol]) -> Vec<usize> {
    let n = word.len();
    let mut border = vec![0usize; n + 1];
    let mut b = 0usize;
    for i in 1..n {
        while b > 0 && word[i] != word[b] {
            b = border[b];
        }
        if word[i] == word[b] {
            b += 1;
        }
        border[i + 1] = b;
    }
    border
}

/// Principal and secondary periods of a word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapStructure {
    pub n: usize,
    #[serde(rename = "o_A")]
    pub principal_period: usize,
    pub q: usize,
    pub rest: usize,
    pub principal_set: Vec<usize>,
    #[serde(rename = "R_A")]
    pub secondary_set: Vec<usize>,
    #[serde(rename = "r_A")]
    pub r_a: usize,
    #[serde(rename = "n_A")]
    pub n_a: usize,
    /// Overlap shifts in `(o_A, ⌊n/o_A⌋·o_A)` that are not multiples of
    /// `o_A`. They lie outside both period sets yet admit returns; e.g.
    /// "abaaba" has periods 3 and 5 with `⌊n/o_A⌋·o_A = 6`.
    pub interior_overlaps: Vec<usize>,
}

impl OverlapStructure {
    fn from_borders(border: &[usize]) -> Self {
        let n = border.len() - 1;
        // every overlap shift below n is n - b for b on the border chain
        let mut shifts = Vec::new();
        let mut b = border[n];
        while b > 0 {
            shifts.push(n - b);
            b = border[b];
        }
        let principal_period = n - border[n];
        let q = n / principal_period;
        let qo = q * principal_period;
        shifts.sort_unstable();
        let secondary_set: Vec<usize> = shifts.iter().copied().filter(|&k| k > qo).collect();
        let interior_overlaps = shifts
            .iter()
            .copied()
            .filter(|&k| k < qo && k % principal_period != 0)
            .collect();
        let n_a = secondary_set.first().copied().unwrap_or(n);
        OverlapStructure {
            n,
            principal_period,
            q,
            rest: n - qo,
            principal_set: (1..=q).map(|j| j * principal_period).collect(),
            r_a: secondary_set.len(),
            secondary_set,
            n_a,
            interior_overlaps,
        }
    }

    /// Shifts `k < n` named by the period sets as possible first returns:
    /// `o_A` and `R(A)`.
    pub fn allowed_short_returns(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.principal_period)
            .filter(move |&o| o < self.n)
            .chain(self.secondary_set.iter().copied())
    }

    /// Every shift `k < n` at which a first return can occur: the above plus
    /// the interior overlaps.
    pub fn possible_short_returns(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .allowed_short_returns()
            .chain(self.interior_overlaps.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }

    pub fn border_of_full_match(&self) -> usize {
        self.n - self.principal_period
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> Pattern {
        Pattern::parse(s, &Alphabet::from_chars("ab").unwrap()).unwrap()
    }

    // O(n^2) reference: compare shifted copies symbol by symbol.
    fn naive(p: &Pattern) -> (usize, Vec<usize>, usize) {
        let a = p.symbols();
        let n = a.len();
        let fits = |k: usize| (0..n - k).all(|i| a[i + k] == a[i]);
        let o = (1..=n).find(|&k| fits(k)).unwrap();
        let qo = (n / o) * o;
        let r: Vec<usize> = (qo + 1..n).filter(|&k| fits(k)).collect();
        let n_a = r.first().copied().unwrap_or(n);
        (o, r, n_a)
    }

    fn all_words(n: usize) -> impl Iterator<Item = Pattern> {
        let ab = Alphabet::from_chars("ab").unwrap();
        (0u32..1 << n).map(move |bits| {
            let s = (0..n).map(|i| ((bits >> i) & 1) as Symbol).collect();
            Pattern::new(s, ab.clone()).unwrap()
        })
    }

    #[test]
    fn worked_example() {
        let a = pat("aaaabbaaaabbaaa");
        assert!(a.overlap_compatible(6).unwrap());
        for k in 1..=5 {
            assert!(!a.overlap_compatible(k).unwrap());
        }
        assert!(a.overlap_compatible(15).unwrap());
        let s = a.analyze();
        assert_eq!(s.principal_period, 6);
        assert_eq!(s.secondary_set, vec![13, 14]);
        assert_eq!(s.r_a, 2);
        assert_eq!(s.n_a, 13);
        assert_eq!(s.q, 2);
        assert_eq!(s.rest, 3);
        assert_eq!(s.principal_set, vec![6, 12]);
        let suffix13 = a.suffix(13).unwrap();
        assert_eq!(a.alphabet().render(suffix13), "aabbaaaabbaaa");
        assert_eq!(a.borders()[15], 9);
    }

    #[test]
    fn small_cases() {
        let s = pat("aaaaaaa").analyze();
        assert_eq!((s.principal_period, s.n_a), (1, 7));
        assert!(s.secondary_set.is_empty());

        let s = pat("aba").analyze();
        assert_eq!((s.principal_period, s.n_a), (2, 3));
        assert!(s.secondary_set.is_empty());

        let s = pat("ab").analyze();
        assert_eq!((s.principal_period, s.n_a), (2, 2));
        assert!(s.interior_overlaps.is_empty());

        let s = pat("abaaba").analyze();
        assert_eq!((s.principal_period, s.q, s.n_a), (3, 2, 6));
        assert!(s.secondary_set.is_empty());
        assert_eq!(s.interior_overlaps, vec![5]);
        assert_eq!(s.possible_short_returns(), vec![3, 5]);
        assert_eq!(pat("aa").borders()[2], 1);
    }

    #[test]
    fn argument_errors() {
        let a = pat("abab");
        assert!(a.overlap_compatible(0).is_err());
        assert!(a.overlap_compatible(5).is_err());
        assert!(a.suffix(5).is_err());
        assert!(a.suffix(0).unwrap().is_empty());
        assert_eq!(a.suffix(4).unwrap(), a.symbols());
    }

    #[test]
    fn repeated_builds_overlapped_extension() {
        let a = pat("aaaabbaaaabbaaa");
        assert_eq!(a.alphabet().render(&a.repeated(2)), "aaaabbaaaabbaaaabbaaa");
        assert_eq!(a.repeated(1), a.symbols());
    }

    #[test]
    fn exhaustive_against_naive_oracle() {
        for n in 1..=12 {
            for p in all_words(n) {
                let s = p.analyze();
                let (o, r, n_a) = naive(&p);
                assert_eq!(s.principal_period, o, "{p}");
                assert_eq!(s.secondary_set, r, "{p}");
                assert_eq!(s.n_a, n_a, "{p}");
                let qo = s.q * o;
                let interior: Vec<usize> = (o + 1..qo)
                    .filter(|&k| k % o != 0 && p.overlap_compatible(k).unwrap())
                    .collect();
                assert_eq!(s.interior_overlaps, interior, "{p}");
                assert!(interior.iter().all(|&k| k > n - o), "{p}");
                assert_eq!(p.borders()[n] + s.principal_period, n);
                assert!(2 * s.r_a < n, "r_A < n/2 fails for {p}");
                assert!(2 * s.n_a > n, "n_A > n/2 fails for {p}");
                assert!(s.principal_set.iter().all(|k| k % o == 0));
                assert_eq!(o == n, (1..n).all(|k| !p.overlap_compatible(k).unwrap()));
            }
        }
    }

    // Two occurrences at secondary shifts i < j would be |i - j| < o_A apart,
    // so their cylinders must clash on some coordinate.
    #[test]
    fn secondary_occurrences_are_mutually_exclusive() {
        for n in 2..=12 {
            for p in all_words(n) {
                let s = p.analyze();
                let a = p.symbols();
                for (x, &i) in s.secondary_set.iter().enumerate() {
                    for &j in &s.secondary_set[x + 1..] {
                        assert!(j - i < s.principal_period);
                        // A at i and A at j both fixed on coordinates j..i+n
                        let clash = (j..i + n).any(|c| a[c - i] != a[c - j]);
                        assert!(clash, "{p}: shifts {i} and {j} are compatible");
                    }
                }
            }
        }
    }
}
