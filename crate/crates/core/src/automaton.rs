//! Deterministic matching automaton for a single word.
//!
//! State `s` is the length of the longest suffix of the text read so far that
//! is a prefix of the word; state `n` means a full occurrence just ended.

use crate::alphabet::Symbol;
use crate::pattern::Pattern;

#[derive(Debug, Clone)]
pub struct MatchingAutomaton {
    n: usize,
    alphabet_len: usize,
    border: Vec<usize>,
    table: Vec<usize>,
}

impl MatchingAutomaton {
    pub fn new(pattern: &Pattern) -> Self {
        let n = pattern.len();
        let k = pattern.alphabet().len();
        let word = pattern.symbols();
        let border = pattern.borders();
        let mut table = vec![0usize; (n + 1) * k];
        for s in 0..=n {
            for x in 0..k {
                table[s * k + x] = if s < n && word[s] as usize == x {
                    s + 1
                } else if s == 0 {
                    0
                } else {
                    table[border[s] * k + x]
                };
            }
        }
        MatchingAutomaton {
            n,
            alphabet_len: k,
            border,
            table,
        }
    }

    pub fn accept_state(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.n + 1
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    pub fn border(&self, state: usize) -> usize {
        self.border[state]
    }

    #[inline]
    pub fn step(&self, state: usize, symbol: Symbol) -> usize {
        self.table[state * self.alphabet_len + symbol as usize]
    }

    /// Start positions of all (possibly overlapping) occurrences in `text`.
    pub fn find_all<'a>(&'a self, text: &'a [Symbol]) -> impl Iterator<Item = usize> + 'a {
        let mut state = 0;
        text.iter().enumerate().filter_map(move |(i, &x)| {
            state = self.step(state, x);
            (state == self.n).then(|| i + 1 - self.n)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;

    fn automaton(s: &str) -> MatchingAutomaton {
        MatchingAutomaton::new(&Pattern::parse(s, &Alphabet::from_chars("ab").unwrap()).unwrap())
    }

    #[test]
    fn direct_transitions() {
        let m = automaton("ab");
        assert_eq!(m.step(0, 1), 0);
        assert_eq!(m.step(0, 0), 1);
        assert_eq!(m.step(1, 1), 2);
        assert_eq!(m.accept_state(), 2);
        assert_eq!(automaton("aa").border(2), 1);
        assert_eq!(automaton("aaaabbaaaabbaaa").border(15), 9);
    }

    #[test]
    fn finds_overlapping_occurrences() {
        let m = automaton("aba");
        let text = Alphabet::from_chars("ab")
            .unwrap()
            .parse_word("ababababb")
            .unwrap();
        assert_eq!(m.find_all(&text).collect::<Vec<_>>(), vec![0, 2, 4]);
    }

    #[test]
    fn agrees_with_naive_search() {
        let ab = Alphabet::from_chars("ab").unwrap();
        let text: Vec<Symbol> = (0..400u32)
            .map(|i| ((i * 7 + i / 3) % 5 % 2) as Symbol)
            .collect();
        for bits in 0u32..64 {
            for n in 1..=6 {
                let word: Vec<Symbol> = (0..n).map(|i| ((bits >> i) & 1) as Symbol).collect();
                let m = MatchingAutomaton::new(&Pattern::new(word.clone(), ab.clone()).unwrap());
                let naive: Vec<usize> = (0..=text.len() - n)
                    .filter(|&p| text[p..p + n] == word[..])
                    .collect();
                assert_eq!(m.find_all(&text).collect::<Vec<_>>(), naive);
            }
        }
    }
}
