use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

/// Index of a symbol inside its [`Alphabet`].
pub type Symbol = u8;

/// A finite, ordered set of opaque symbol names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return argument("alphabet must contain at least one symbol");
        }
        if names.len() > Symbol::MAX as usize + 1 {
            return argument(format!("alphabet too large ({} symbols)", names.len()));
        }
        for (i, a) in names.iter().enumerate() {
            if a.is_empty() {
                return argument("alphabet symbols must be non-empty");
            }
            if names[..i].contains(a) {
                return argument(format!("duplicate alphabet symbol {a:?}"));
            }
        }
        Ok(Alphabet { names })
    }

    /// Alphabet made of the given characters, in order.
    pub fn from_chars(chars: &str) -> Result<Self> {
        Alphabet::new(chars.chars().map(String::from))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.names.len()).map(|s| s as Symbol)
    }

    pub fn index_of(&self, name: &str) -> Option<Symbol> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as Symbol)
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.names[s as usize]
    }

    /// True when every symbol name is a single character, so words can be
    /// written as plain strings.
    pub fn is_single_char(&self) -> bool {
        self.names.iter().all(|n| n.chars().count() == 1)
    }

    /// Parses a word literal: either a string of single-character symbols or
    /// a JSON array of symbol names.
    pub fn parse_word(&self, literal: &str) -> Result<Vec<Symbol>> {
        let trimmed = literal.trim();
        if trimmed.starts_with('[') {
            let names: Vec<String> = serde_json::from_str(trimmed)
                .map_err(|e| crate::Error::Argument(format!("bad word literal: {e}")))?;
            return names
                .iter()
                .map(|n| {
                    self.index_of(n).ok_or_else(|| {
                        crate::Error::Argument(format!("symbol {n:?} not in alphabet"))
                    })
                })
                .collect();
        }
        literal
            .chars()
            .map(|c| {
                let mut buf = [0u8; 4];
                self.index_of(c.encode_utf8(&mut buf))
                    .ok_or_else(|| crate::Error::Argument(format!("symbol {c:?} not in alphabet")))
            })
            .collect()
    }

    pub fn render(&self, word: &[Symbol]) -> String {
        if self.is_single_char() {
            word.iter().map(|&s| self.name(s)).collect()
        } else {
            let names: Vec<&str> = word.iter().map(|&s| self.name(s)).collect();
            serde_json::to_string(&names).expect("string array serializes")
        }
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = crate::Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Alphabet::new(names)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.names
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(","))
    }
}
