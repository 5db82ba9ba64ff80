use std::fmt::Write as _;

use retlaw_core::exact::{ExactEngine, LawKind};
use retlaw_core::montecarlo::{
    consistency, consistency_pmf, estimate_hitting, estimate_return_and_sojourn, merge_cuts,
    Consistency, EmpiricalLaw, SamplingPlan,
};
use retlaw_core::theory::{
    default_grid, kac_error_envelope, moment_approx, verify_pair, BatteryOptions, BoundReport,
    TheoryParams,
};
use retlaw_core::{Alphabet, OverlapStructure, Pattern, SourceModel, SourceSpec};
use serde::Serialize;

use crate::output::{to_json, Output};
use crate::{
    examples, Cli, CliError, CliResult, ExactArgs, Format, MomentsArgs, SimulateArgs, TheoryArgs,
    VerifyArgs,
};

/// Expected count from which a simulated bin is compared with its band.
const MIN_EXPECTED: f64 = 100.0;

fn load_source(cli: &Cli) -> CliResult<SourceModel> {
    let spec = cli
        .source
        .as_deref()
        .ok_or_else(|| CliError::Usage("this command needs --source".into()))?;
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec)
            .map_err(|e| CliError::Usage(format!("cannot read source spec {spec}: {e}")))?
    };
    Ok(SourceSpec::from_json(&text)?.build()?)
}

fn parse_patterns(cli: &Cli, alphabet: &Alphabet) -> CliResult<Vec<Pattern>> {
    if cli.patterns.is_empty() {
        return Err(CliError::Usage("at least one --pattern is required".into()));
    }
    cli.patterns
        .iter()
        .map(|p| Pattern::parse(p, alphabet).map_err(CliError::from))
        .collect()
}

fn single_pattern(cli: &Cli, alphabet: &Alphabet) -> CliResult<Pattern> {
    let mut patterns = parse_patterns(cli, alphabet)?;
    if patterns.len() > 1 {
        return Err(CliError::Usage(
            "this command takes a single --pattern".into(),
        ));
    }
    Ok(patterns.remove(0))
}

/// Single-character symbols of the literal, in order of first appearance
/// sorted by character.
fn inferred_alphabet(literal: &str) -> CliResult<Alphabet> {
    let mut chars: Vec<char> = literal.chars().collect();
    chars.sort_unstable();
    chars.dedup();
    let names: String = chars.into_iter().collect();
    Ok(Alphabet::from_chars(&names)?)
}

#[derive(Serialize)]
struct Analysis {
    pattern: String,
    #[serde(flatten)]
    structure: OverlapStructure,
    /// The last `n_A` symbols.
    suffix_n_a: String,
}

pub fn analyze(cli: &Cli, out: &mut Output) -> CliResult<()> {
    let rows = if cli.source.is_some() {
        let source = load_source(cli)?;
        parse_patterns(cli, source.alphabet())?
    } else {
        if cli.patterns.is_empty() {
            return Err(CliError::Usage("at least one --pattern is required".into()));
        }
        cli.patterns
            .iter()
            .map(|p| Ok(Pattern::parse(p, &inferred_alphabet(p)?)?))
            .collect::<CliResult<Vec<_>>>()?
    }
    .iter()
    .map(|p| {
        let structure = p.analyze();
        let suffix = p.suffix(structure.n_a).expect("n_A never exceeds n");
        Analysis {
            pattern: p.to_string(),
            suffix_n_a: p.alphabet().render(suffix),
            structure,
        }
    })
    .collect::<Vec<_>>();
    match cli.format.unwrap_or(Format::Json) {
        Format::Json if rows.len() == 1 => out.primary("analyze.json", &to_json(&rows[0])),
        Format::Json => out.primary("analyze.json", &to_json(&rows)),
        Format::Csv => {
            let join = |v: &[usize]| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let mut csv =
                String::from("pattern,n,o_A,q,rest,principal_set,R_A,r_A,n_A,suffix_n_A\n");
            for r in &rows {
                let s = &r.structure;
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.pattern,
                    s.n,
                    s.principal_period,
                    s.q,
                    s.rest,
                    join(&s.principal_set),
                    join(&s.secondary_set),
                    s.r_a,
                    s.n_a,
                    r.suffix_n_a
                )
                .expect("String write");
            }
            out.primary("analyze.csv", &csv)
        }
    }
}

pub fn exact(cli: &Cli, args: &ExactArgs, out: &mut Output) -> CliResult<()> {
    let source = load_source(cli)?;
    let pattern = single_pattern(cli, source.alphabet())?;
    let engine = ExactEngine::new(&source, &pattern)?;
    let format = cli.format.unwrap_or(Format::Csv);
    let name = args.law.name();
    match args.law.kind() {
        Some(kind) => {
            let curve = match kind {
                LawKind::Hitting => engine.hitting_survival(args.t_max),
                LawKind::Return => engine.return_survival(args.t_max),
            };
            match format {
                Format::Csv => out.primary(&format!("exact-{name}.csv"), &curve.to_csv()),
                Format::Json => out.primary(&format!("exact-{name}.json"), &to_json(&curve)),
            }
        }
        None => {
            let pmf = engine.sojourn_pmf(args.t_max)?;
            match format {
                Format::Csv => out.primary("exact-sojourn.csv", &pmf.to_csv()),
                Format::Json => out.primary("exact-sojourn.json", &to_json(&pmf)),
            }
        }
    }
}

pub fn theory(cli: &Cli, args: &TheoryArgs, out: &mut Output) -> CliResult<()> {
    if cli.format == Some(Format::Csv) {
        return Err(CliError::Usage(
            "theory parameters are reported as JSON only".into(),
        ));
    }
    let source = load_source(cli)?;
    let params = parse_patterns(cli, source.alphabet())?
        .iter()
        .map(|p| TheoryParams::compute(&source, p, args.rho_terms).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    if params.len() == 1 {
        out.primary("theory.json", &to_json(&params[0]))
    } else {
        out.primary("theory.json", &to_json(&params))
    }
}

pub fn verify(cli: &Cli, args: &VerifyArgs, out: &mut Output) -> CliResult<()> {
    let options = BatteryOptions {
        c: args.c,
        horizon: args.horizon,
        betas: args.betas.clone(),
        ..BatteryOptions::default()
    };
    if args.battery.is_some() {
        let battery = examples::reference_battery(&options)?;
        out.primary("verify.json", &to_json(&battery))?;
        out.secondary("verify.txt", &report_table(&battery.reports))?;
        let failures = battery.failures();
        return if failures == 0 {
            Ok(())
        } else {
            Err(CliError::ChecksFailed(failures))
        };
    }
    let source = load_source(cli)?;
    let mut reports = Vec::new();
    for p in parse_patterns(cli, source.alphabet())? {
        reports.extend(verify_pair(&source, &p, &options)?);
    }
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => {
            out.primary("verify.json", &to_json(&reports))?;
            out.secondary("verify.txt", &report_table(&reports))?;
        }
        Format::Csv => out.primary("verify.csv", &report_csv(&reports))?,
    }
    let failures = reports.iter().filter(|r| r.is_failure()).count();
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failures))
    }
}

pub(crate) fn report_table(reports: &[BoundReport]) -> String {
    let mut text = BoundReport::table_header();
    text.push('\n');
    for r in reports {
        text.push_str(&r.table_row());
        text.push('\n');
    }
    text
}

fn report_csv(reports: &[BoundReport]) -> String {
    let mut csv = String::from("name,pattern,beta,lhs,rhs,margin,pass,vacuous,asserted\n");
    for r in reports {
        let beta = r
            .params
            .get("beta")
            .map_or(String::new(), |b| b.to_string());
        writeln!(
            csv,
            "{},{},{},{:.16e},{:.16e},{:.16e},{},{},{}",
            r.name, r.pattern, beta, r.lhs, r.rhs, r.margin, r.pass, r.vacuous, r.asserted
        )
        .expect("String write");
    }
    csv
}

#[derive(Serialize)]
struct LawSummary<'a> {
    kind: &'a retlaw_core::montecarlo::EstimatorKind,
    samples: u64,
    censored: u64,
    dropped: u64,
    forbidden_gaps: u64,
    interior_gaps: u64,
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: &'a Option<String>,
    eligible_bins: usize,
    bins_inside_band: usize,
    coverage: Option<f64>,
}

impl<'a> LawSummary<'a> {
    fn new(law: &'a EmpiricalLaw, check: &Consistency) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        LawSummary {
            kind: &law.kind,
            samples: law.samples,
            censored: law.censored,
            dropped: law.dropped,
            forbidden_gaps: law.forbidden_gaps,
            interior_gaps: law.interior_gaps,
            mean: finite(law.mean()),
            warning: &law.warning,
            eligible_bins: check.eligible,
            bins_inside_band: check.inside,
            coverage: finite(check.coverage()),
        }
    }
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    pattern: String,
    source: String,
    seed: u64,
    workers: usize,
    level: f64,
    horizon: usize,
    trajectory_length: usize,
    hitting: LawSummary<'a>,
    #[serde(rename = "return")]
    return_law: LawSummary<'a>,
    sojourn: LawSummary<'a>,
}

pub fn simulate(cli: &Cli, args: &SimulateArgs, out: &mut Output) -> CliResult<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must be in (0,1), got {}",
            args.level
        )));
    }
    let source = load_source(cli)?;
    let pattern = single_pattern(cli, source.alphabet())?;
    let engine = ExactEngine::new(&source, &pattern)?;
    let p_a = engine.p_a();
    let structure = engine.structure();
    let horizon = args.horizon.unwrap_or_else(|| (20.0 / p_a).ceil() as usize);

    let hitting = estimate_hitting(&source, &pattern, args.samples, horizon, cli.seed)?;
    let plan = SamplingPlan {
        seed: cli.seed,
        workers: args.workers,
    };
    let (ret, soj) = estimate_return_and_sojourn(&source, &pattern, args.trajectory_length, plan)?;

    let min_mass = |law: &EmpiricalLaw| MIN_EXPECTED / law.samples.max(1) as f64;
    let mut cuts: Vec<usize> = default_grid(structure.principal_period, structure.n, p_a, 20.0)
        .into_iter()
        .filter(|&t| t < horizon)
        .collect();
    cuts.push(horizon);
    let hit_surv = engine.survival_at(LawKind::Hitting, &cuts);
    let (hc, hs) = merge_cuts(&cuts, &hit_surv, min_mass(&hitting));
    let hit_check = consistency(&hitting, &hc, &hs, args.level, MIN_EXPECTED)?;

    let ret_cuts = default_grid(structure.principal_period, structure.n, p_a, 20.0);
    let ret_surv = engine.survival_at(LawKind::Return, &ret_cuts);
    let (rc, rs) = merge_cuts(&ret_cuts, &ret_surv, min_mass(&ret));
    let ret_check = consistency(&ret, &rc, &rs, args.level, MIN_EXPECTED)?;

    let k_max = soj.counts.keys().next_back().copied().unwrap_or(0).max(16);
    let pmf = engine.sojourn_pmf(k_max)?;
    let soj_check = consistency_pmf(&soj, &pmf.probabilities, pmf.tail, args.level, MIN_EXPECTED);

    let summary = SimulationSummary {
        pattern: pattern.to_string(),
        source: source.describe(),
        seed: cli.seed,
        workers: args.workers,
        level: args.level,
        horizon,
        trajectory_length: args.trajectory_length,
        hitting: LawSummary::new(&hitting, &hit_check),
        return_law: LawSummary::new(&ret, &ret_check),
        sojourn: LawSummary::new(&soj, &soj_check),
    };
    out.primary("simulate.json", &to_json(&summary))?;
    out.secondary("simulate-hitting.csv", &hitting.to_csv(args.level))?;
    out.secondary("simulate-return.csv", &ret.to_csv(args.level))?;
    out.secondary("simulate-sojourn.csv", &soj.to_csv(args.level))?;
    out.secondary(
        "simulate-bins.json",
        &to_json(&[
            ("hitting", &hit_check),
            ("return", &ret_check),
            ("sojourn", &soj_check),
        ]),
    )
}

#[derive(Serialize)]
struct MomentRow {
    pattern: String,
    beta: f64,
    moment: f64,
    approximation: f64,
    difference: f64,
    envelope: f64,
    zeta: f64,
    epsilon: f64,
    truncated: bool,
}

pub fn moments(cli: &Cli, args: &MomentsArgs, out: &mut Output) -> CliResult<()> {
    let source = load_source(cli)?;
    let mut rows = Vec::new();
    for p in parse_patterns(cli, source.alphabet())? {
        let engine = ExactEngine::new(&source, &p)?;
        let params =
            TheoryParams::from_engine(&source, &engine, retlaw_core::theory::DEFAULT_RHO_TERMS)?;
        for &beta in &args.betas {
            let m = engine.rescaled_moment(LawKind::Return, beta)?;
            let approximation = moment_approx(beta, params.zeta)?;
            rows.push(MomentRow {
                pattern: p.to_string(),
                beta,
                moment: m.value,
                approximation,
                difference: (m.value - approximation).abs(),
                envelope: kac_error_envelope(beta, &params, args.c)?,
                zeta: params.zeta,
                epsilon: params.epsilon,
                truncated: m.truncated,
            });
        }
    }
    match cli.format.unwrap_or(Format::Csv) {
        Format::Json => out.primary("moments.json", &to_json(&rows)),
        Format::Csv => {
            let mut csv = String::from(
                "pattern,beta,moment,approximation,difference,envelope,zeta,epsilon,truncated\n",
            );
            for r in &rows {
                writeln!(
                    csv,
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    r.pattern,
                    r.beta,
                    r.moment,
                    r.approximation,
                    r.difference,
                    r.envelope,
                    r.zeta,
                    r.epsilon,
                    r.truncated
                )
                .expect("String write");
            }
            out.primary("moments.csv", &csv)
        }
    }
}
