//! Built-in battery: the worked examples and reference sources.

use retlaw_core::source::{renewal_from_delta, Delta};
use retlaw_core::theory::{
    mixture_threshold, sort_reports, verify_pair, BatteryOptions, BoundReport,
};
use retlaw_core::{Alphabet, IidSource, MarkovSource, Pattern, SourceModel};
use serde::Serialize;

use crate::CliResult;

/// Longest word of the single-symbol family scanned for the mixture threshold.
const THRESHOLD_MAX_LEN: usize = 20;

#[derive(Debug, Serialize)]
pub struct ExampleBattery {
    pub reports: Vec<BoundReport>,
    /// Smallest run length from which the mixture envelope holds for every
    /// longer all-`a` word under the fair coin.
    pub fair_coin_run_threshold: Option<usize>,
}

impl ExampleBattery {
    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| r.is_failure()).count()
    }
}

fn ab() -> Alphabet {
    Alphabet::from_chars("ab").expect("two distinct symbols")
}

/// Sources and words of the battery.
pub fn cases() -> CliResult<Vec<(SourceModel, Vec<&'static str>)>> {
    let fair: SourceModel = IidSource::bernoulli(ab(), 0.5)?.into();
    let biased: SourceModel = IidSource::bernoulli(ab(), 0.3)?.into();
    let markov: SourceModel = MarkovSource::new(ab(), vec![vec![0.7, 0.3], vec![0.4, 0.6]])?.into();
    let zero_one = Alphabet::new(["0", "1"])?;
    let renewal: SourceModel = renewal_from_delta(zero_one, Delta::Inverse(1.0), 2, 64)?.into();
    Ok(vec![
        (
            fair,
            vec![
                "aaaabbaaaabbaaa",
                "aaaaaaaaaaaa",
                "aaaaaaaaaaaaaaaa",
                "abaabaab",
                "abbabaab",
            ],
        ),
        (biased, vec!["abaab", "bbbbbbbb", "abbabbab"]),
        (markov, vec!["abaab", "aaaaaaaa"]),
        (renewal, vec!["11111111"]),
    ])
}

pub fn reference_battery(options: &BatteryOptions) -> CliResult<ExampleBattery> {
    let mut reports = Vec::new();
    for (source, words) in cases()? {
        for w in words {
            let pattern = Pattern::parse(w, source.alphabet())?;
            reports.extend(verify_pair(&source, &pattern, options)?);
        }
    }
    sort_reports(&mut reports);
    let fair: SourceModel = IidSource::bernoulli(ab(), 0.5)?.into();
    let run = |n: usize| Pattern::new(vec![0; n], ab());
    let fair_coin_run_threshold =
        mixture_threshold(&fair, run, 1..=THRESHOLD_MAX_LEN, options.horizon)?;
    Ok(ExampleBattery {
        reports,
        fair_coin_run_threshold,
    })
}
