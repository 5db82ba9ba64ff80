use serde::{Deserialize, Serialize};

use super::{renewal_from_delta, Delta, IidSource, MarkovSource, RenewalSource, SourceModel};
use crate::alphabet::Alphabet;
use crate::error::{model, Result};

/// On-disk description of a source.
///
/// ```json
/// { "kind": "iid", "alphabet": ["a", "b"], "weights": [0.5, 0.5] }
/// { "kind": "markov", "alphabet": ["a", "b"], "transition": [[0.9, 0.1], [0.1, 0.9]] }
/// { "kind": "renewal", "alphabet": ["0", "1"], "q": [0.4, 0.4], "n_max": 2 }
/// { "kind": "renewal", "alphabet": ["0", "1"], "delta": {"inverse": 1.0}, "fit_from": 2, "n_max": 64 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    Iid {
        alphabet: Vec<String>,
        weights: Vec<f64>,
    },
    Markov {
        alphabet: Vec<String>,
        transition: Vec<Vec<f64>>,
    },
    Renewal {
        #[serde(default = "default_renewal_alphabet")]
        alphabet: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<Delta>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fit_from: Option<usize>,
        n_max: usize,
    },
}

fn default_renewal_alphabet() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

impl SourceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<SourceModel> {
        Ok(match self {
            SourceSpec::Iid { alphabet, weights } => {
                IidSource::new(Alphabet::new(alphabet.clone())?, weights.clone())?.into()
            }
            SourceSpec::Markov {
                alphabet,
                transition,
            } => MarkovSource::new(Alphabet::new(alphabet.clone())?, transition.clone())?.into(),
            SourceSpec::Renewal {
                alphabet,
                q,
                delta,
                fit_from,
                n_max,
            } => {
                let alphabet = Alphabet::new(alphabet.clone())?;
                match (q, delta) {
                    (Some(q), None) => RenewalSource::new(alphabet, q.clone(), *n_max)?.into(),
                    (None, Some(d)) => {
                        renewal_from_delta(alphabet, d.clone(), fit_from.unwrap_or(1), *n_max)?
                            .into()
                    }
                    _ => return model("renewal source needs exactly one of \"q\" or \"delta\""),
                }
            }
        })
    }
}
