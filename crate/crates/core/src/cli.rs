//! Command-line front end. Exit codes: 0 success, 1 partial or failed
//! analysis, 2 invalid input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agreement::{analyze_agreement, OverallKappaMode};
use crate::did::{cohorts_from_dataset, did_estimate_with, did_with_error_rates, DidPanel, EraWeighting};
use crate::error::{Error, Result};
use crate::estimation::{bias_factor_report, binomial_ci, CiMethod, Factor};
use crate::hypothesis::{one_sample_location_test, one_way_anova, two_sample_t, ChiSquareOptions, TwoSampleVariant};
use crate::model::{validate_dataset, ErrorReference, IncompletePolicy, ReviewDataset};
use crate::report::{
    canonicalize, chi_square_by_question, default_bias_factors, emit_report, error_extrapolation, format_number as num,
    ingest_csv_path, is_outcome_panel, read_ground_truth_path, read_outcome_panel, run_audit, team_comparison, to_json,
    write_ground_truth_csv, write_records_csv, AuditOptions, ReportFormat, Section,
};
use crate::simulator::{inject_review_change, simulate_panel, ReviewChangeDesign, SimulationConfig};
use crate::special::Tail;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "review-audit",
    version,
    about = "Statistics for auditing manual review processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fleiss kappa per question, overall kappa and disagreement ranking.
    Agreement(AgreementArgs),
    /// Chi-square test of each question's answers against the classification.
    Chisq(ChisqArgs),
    /// z/t tests on inline samples, or per-team error rates of a review file.
    Ttest(TtestArgs),
    /// One-way ANOVA on inline groups, or per-team error rates of a review file.
    Anova(AnovaArgs),
    /// Binomial confidence interval on an error rate.
    Ci(CiArgs),
    /// OLS and logistic models of the classification on rubric answers.
    Regress(RegressArgs),
    /// Difference-in-differences around a review-process change.
    Did(DidArgs),
    /// Generate a synthetic review panel.
    Simulate(SimulateArgs),
    /// Run the full audit pipeline.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KappaModeArg {
    Pooled,
    Mean,
}

impl From<KappaModeArg> for OverallKappaMode {
    fn from(m: KappaModeArg) -> Self {
        match m {
            KappaModeArg::Pooled => OverallKappaMode::Pooled,
            KappaModeArg::Mean => OverallKappaMode::MeanOfQuestions,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CiMethodArg {
    ClopperPearson,
    Wilson,
}

impl From<CiMethodArg> for CiMethod {
    fn from(m: CiMethodArg) -> Self {
        match m {
            CiMethodArg::ClopperPearson => CiMethod::ClopperPearson,
            CiMethodArg::Wilson => CiMethod::Wilson,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Drop,
    Strict,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TailArg {
    TwoSided,
    Upper,
    Lower,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::TwoSided => Tail::TwoSided,
            TailArg::Upper => Tail::Upper,
            TailArg::Lower => Tail::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Welch,
    Pooled,
}

impl From<VariantArg> for TwoSampleVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Welch => TwoSampleVariant::Welch,
            VariantArg::Pooled => TwoSampleVariant::Pooled,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightingArg {
    Observation,
    PeriodBalanced,
}

impl From<WeightingArg> for EraWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Observation => EraWeighting::Observation,
            WeightingArg::PeriodBalanced => EraWeighting::PeriodBalanced,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReviewInput {
    /// Long-format review CSV.
    #[arg(long)]
    input: PathBuf,
    /// What to do with incomplete (product, question) cells.
    #[arg(long, value_enum, default_value = "drop")]
    policy: PolicyArg,
}

impl ReviewInput {
    fn load(&self) -> Result<ReviewDataset> {
        let policy = match self.policy {
            PolicyArg::Drop => IncompletePolicy::Drop,
            PolicyArg::Strict => IncompletePolicy::Strict,
        };
        validate_dataset(ingest_csv_path(&self.input)?, policy)
    }
}

#[derive(Debug, Args)]
struct AgreementArgs {
    #[command(flatten)]
    input: ReviewInput,
    #[arg(long, value_enum, default_value = "pooled")]
    overall_kappa: KappaModeArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct ChisqArgs {
    #[command(flatten)]
    input: ReviewInput,
    /// Test only this question.
    #[arg(long)]
    question: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Continuity correction on 2×2 tables.
    #[arg(long)]
    yates: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct TtestArgs {
    /// Review CSV with a team column; compares two teams' error rates.
    #[arg(long, conflicts_with_all = ["a", "sample"])]
    input: Option<PathBuf>,
    /// Ground-truth CSV (product_id, classification); defaults to consensus.
    #[arg(long, requires = "input")]
    ground_truth: Option<PathBuf>,
    /// First sample, comma separated.
    #[arg(long, requires = "b", value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Second sample, comma separated.
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<f64>>,
    /// One-sample data, comma separated.
    #[arg(long, requires = "mu0", value_delimiter = ',', conflicts_with = "a")]
    sample: Option<Vec<f64>>,
    #[arg(long)]
    mu0: Option<f64>,
    /// Known standard deviation; switches the one-sample test to z.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "welch")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "two-sided")]
    tail: TailArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct AnovaArgs {
    /// Review CSV with a team column; compares teams' error rates.
    #[arg(long, conflicts_with = "group")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    ground_truth: Option<PathBuf>,
    /// One group, comma separated; repeat per group.
    #[arg(long)]
    group: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct CiArgs {
    /// Review CSV; intervals on the error rate overall and per reviewer.
    #[arg(long, conflicts_with_all = ["errors", "n"])]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    ground_truth: Option<PathBuf>,
    /// Number of errors observed.
    #[arg(long, requires = "n")]
    errors: Option<u64>,
    /// Number of reviews.
    #[arg(long, requires = "errors")]
    n: Option<u64>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_enum, default_value = "clopper-pearson")]
    ci_method: CiMethodArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct RegressArgs {
    #[command(flatten)]
    input: ReviewInput,
    /// Questions to use as factors, comma separated. Defaults to every
    /// question with two or more observed answers.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<String>>,
    /// Add the team as a factor.
    #[arg(long)]
    team: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct DidArgs {
    /// Review CSV with group and period columns, or a panel with columns
    /// group, period, outcome.
    #[arg(long)]
    input: PathBuf,
    /// First post-change period.
    #[arg(long)]
    change_period: i64,
    /// Ground truth for review input; defaults to consensus.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "observation")]
    weighting: WeightingArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML simulation config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Review CSV destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the true classifications.
    #[arg(long)]
    ground_truth_output: Option<PathBuf>,
    /// Products per control cohort when the config has a treatment block.
    /// Defaults to n_products.
    #[arg(long)]
    control_products: Option<usize>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    input: ReviewInput,
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// First post-change period; enables the DiD section.
    #[arg(long)]
    change_period: Option<i64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "pooled")]
    overall_kappa: KappaModeArg,
    #[arg(long, value_enum, default_value = "clopper-pearson")]
    ci_method: CiMethodArg,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    yates: bool,
    /// Bias-factor questions, comma separated.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<String>>,
    #[command(flatten)]
    out: Output,
}

/// Maps an error to its exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Empty(_)
        | Error::EmptyIdentifier { .. }
        | Error::DuplicateRating { .. }
        | Error::IncompleteCell { .. }
        | Error::UndeclaredCategory { .. }
        | Error::UnknownQuestion(_)
        | Error::InvalidConfig(_)
        | Error::MissingColumn(_)
        | Error::BadRow { .. }
        | Error::Io(_)
        | Error::InvalidAlpha(_)
        | Error::InvalidPanel(_)
        | Error::MissingGroundTruth(_) => EXIT_INVALID_INPUT,
        _ => EXIT_PARTIAL,
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit<T: Serialize + serde::de::DeserializeOwned>(
    out: &Output,
    value: &T,
    text: impl FnOnce(&T) -> String,
) -> Result<()> {
    let value = canonicalize(value)?;
    let rendered = match out.format {
        FormatArg::Json => to_json(&value),
        FormatArg::Text => text(&value),
    };
    write_out(out.output.as_deref(), &rendered)
}

fn json_text<T: Serialize>(value: &T) -> String {
    to_json(value)
}

fn reference(ground_truth: Option<&Path>) -> Result<ErrorReference> {
    Ok(match ground_truth {
        Some(p) => ErrorReference::GroundTruth(read_ground_truth_path(p)?),
        None => ErrorReference::Consensus,
    })
}

fn load_plain(path: &Path) -> Result<ReviewDataset> {
    validate_dataset(ingest_csv_path(path)?, IncompletePolicy::Drop)
}

fn section_result<T>(section: Section<T>) -> Result<T> {
    match section {
        Section::Ok(v) => Ok(v),
        Section::Skipped(reason) => Err(Error::InvalidSample(reason)),
        Section::Error(e) => Err(Error::InvalidSample(e)),
    }
}

fn run_command(command: Command) -> Result<i32> {
    match command {
        Command::Agreement(args) => {
            let ds = args.input.load()?;
            let report = analyze_agreement(&ds, args.overall_kappa.into())?;
            emit(&args.out, &report, |r| {
                let mut s = String::from("disagreement ranking (lowest kappa first):\n");
                for q in &r.disagreement_ranking {
                    match r.per_question_kappa.get(q) {
                        Some(k) => s.push_str(&format!("  {q}: {}\n", num(k.kappa))),
                        None => s.push_str(&format!("  {q}: undefined\n")),
                    }
                }
                s.push_str(&format!("overall kappa: {}\n", num(r.overall_kappa.kappa)));
                s
            })?;
            Ok(EXIT_OK)
        }
        Command::Chisq(args) => {
            let ds = args.input.load()?;
            if let Some(q) = &args.question {
                if !ds.questions().contains(q) {
                    return Err(Error::UnknownQuestion(q.clone()));
                }
            }
            let mut results = chi_square_by_question(
                &ds,
                ChiSquareOptions {
                    alpha: args.alpha,
                    yates: args.yates,
                },
            );
            if let Some(q) = &args.question {
                results.retain(|k, _| k == q);
            }
            let partial = results.values().any(Section::is_error);
            emit(&args.out, &results, |r| {
                let mut s = String::new();
                for (q, sec) in r {
                    match sec {
                        Section::Ok(t) => s.push_str(&format!(
                            "{q}: chi2={} p={} reject={}\n",
                            num(t.statistic),
                            num(t.p_value),
                            t.reject_null
                        )),
                        Section::Skipped(e) | Section::Error(e) => s.push_str(&format!("{q}: error: {e}\n")),
                    }
                }
                s
            })?;
            Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Ttest(args) => {
            let result = if let Some(input) = &args.input {
                let ds = load_plain(input)?;
                let team = section_result(team_comparison(
                    &ds,
                    &reference(args.ground_truth.as_deref())?,
                    args.variant.into(),
                    args.alpha,
                ))?;
                if team.teams.len() != 2 {
                    return Err(Error::InvalidSample(format!(
                        "t test needs exactly two teams, found {}; use anova",
                        team.teams.len()
                    )));
                }
                team.test
            } else if let (Some(a), Some(b)) = (&args.a, &args.b) {
                two_sample_t(a, b, args.variant.into(), args.tail.into(), args.alpha)?
            } else if let (Some(sample), Some(mu0)) = (&args.sample, args.mu0) {
                one_sample_location_test(sample, mu0, args.tail.into(), args.sigma, args.alpha)?
            } else {
                return Err(Error::InvalidSample("give --input, --a/--b, or --sample/--mu0".into()));
            };
            emit(&args.out, &result, |t| {
                format!(
                    "{}: statistic={} p={} reject={}\n",
                    crate::report::test_name(t.test_kind),
                    num(t.statistic),
                    num(t.p_value),
                    t.reject_null
                )
            })?;
            Ok(EXIT_OK)
        }
        Command::Anova(args) => {
            let (test, decomposition) = if let Some(input) = &args.input {
                let ds = load_plain(input)?;
                let reference = reference(args.ground_truth.as_deref())?;
                let units = crate::model::unit_errors(&ds, &reference)?;
                let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
                for (u, wrong) in units {
                    if let Some(t) = u.team {
                        groups.entry(t).or_default().push(if wrong { 1.0 } else { 0.0 });
                    }
                }
                let groups: Vec<Vec<f64>> = groups.into_values().collect();
                one_way_anova(&groups, args.alpha)?
            } else {
                let groups = args
                    .group
                    .iter()
                    .map(|g| {
                        g.split(',')
                            .map(|x| {
                                x.trim()
                                    .parse::<f64>()
                                    .map_err(|_| Error::InvalidSample(format!("`{x}` is not a number")))
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                one_way_anova(&groups, args.alpha)?
            };
            #[derive(Serialize, serde::Deserialize)]
            struct Anova {
                test: crate::hypothesis::TestResult,
                decomposition: crate::hypothesis::AnovaDecomposition,
            }
            emit(&args.out, &Anova { test, decomposition }, |a| {
                format!(
                    "F={} df=({}, {}) p={} reject={}\nSSTr={} SSE={}\n",
                    num(a.test.statistic),
                    a.decomposition.v1,
                    a.decomposition.v2,
                    num(a.test.p_value),
                    a.test.reject_null,
                    num(a.decomposition.ss_treatment),
                    num(a.decomposition.ss_error)
                )
            })?;
            Ok(EXIT_OK)
        }
        Command::Ci(args) => {
            if let Some(input) = &args.input {
                let ds = load_plain(input)?;
                let result = error_extrapolation(
                    &ds,
                    &reference(args.ground_truth.as_deref())?,
                    args.level,
                    args.ci_method.into(),
                )?;
                emit(&args.out, &result, |e| {
                    let mut s = format!(
                        "overall: {} [{}, {}]\n",
                        num(e.overall.estimate()),
                        num(e.overall.lower),
                        num(e.overall.upper)
                    );
                    for (r, ci) in &e.per_reviewer {
                        s.push_str(&format!(
                            "{r}: {} [{}, {}]\n",
                            num(ci.estimate()),
                            num(ci.lower),
                            num(ci.upper)
                        ));
                    }
                    s
                })?;
            } else if let (Some(x), Some(n)) = (args.errors, args.n) {
                let ci = binomial_ci(x, n, args.level, args.ci_method.into())?;
                emit(&args.out, &ci, |c| {
                    format!("{}/{}: [{}, {}]\n", c.x, c.n, num(c.lower), num(c.upper))
                })?;
            } else {
                return Err(Error::InvalidSample("give --input or --errors/--n".into()));
            }
            Ok(EXIT_OK)
        }
        Command::Regress(args) => {
            let ds = args.input.load()?;
            let mut factors: Vec<Factor> = match &args.factors {
                Some(qs) => qs.iter().cloned().map(Factor::Question).collect(),
                None => default_bias_factors(&ds),
            };
            if args.team {
                factors.push(Factor::Team);
            }
            let report = bias_factor_report(&ds, &factors)?;
            emit(&args.out, &report, json_text)?;
            Ok(EXIT_OK)
        }
        Command::Did(args) => {
            let peek = fs::File::open(&args.input).map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
            let result = if is_outcome_panel(peek)? {
                let file =
                    fs::File::open(&args.input).map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
                let panel = DidPanel::new(read_outcome_panel(file)?, args.change_period)?;
                did_estimate_with(&panel, args.weighting.into())?
            } else {
                let ds = load_plain(&args.input)?;
                let truth = match &args.ground_truth {
                    Some(p) => read_ground_truth_path(p)?,
                    None => ds.consensus_classifications(),
                };
                let mut r = did_with_error_rates(&cohorts_from_dataset(&ds)?, &truth, args.change_period)?;
                if !matches!(args.weighting, WeightingArg::Observation) {
                    // one observation per cohort, so both weightings agree
                    r.weighting = args.weighting.into();
                }
                r
            };
            emit(&args.out, &result, |d| {
                let mut s = format!("effect: {}\n", num(d.effect));
                for (name, pts) in [
                    ("treated", &d.treated_series),
                    ("control", &d.control_series),
                    ("counterfactual", &d.counterfactual),
                ] {
                    s.push_str(&format!("{name} series (period, value):\n"));
                    for p in pts {
                        s.push_str(&format!("  ({}, {})\n", p.period, num(p.value)));
                    }
                }
                s
            })?;
            Ok(EXIT_OK)
        }
        Command::Simulate(args) => {
            let text =
                fs::read_to_string(&args.config).map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))?;
            let mut config = SimulationConfig::from_toml(&text)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            let (records, truth) = match config.treatment {
                Some(t) => {
                    let design = ReviewChangeDesign::two_period(
                        args.control_products.unwrap_or(config.n_products),
                        t.change_period,
                    );
                    let panel = inject_review_change(&config, &design)?;
                    let records = panel
                        .cohorts
                        .iter()
                        .flat_map(|c| c.dataset.records().iter().cloned())
                        .collect::<Vec<_>>();
                    (records, panel.ground_truth)
                }
                None => {
                    let panel = simulate_panel(&config)?;
                    (panel.dataset.records().to_vec(), panel.ground_truth)
                }
            };
            let mut buf = Vec::new();
            write_records_csv(&records, &mut buf)?;
            write_out(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
            if let Some(path) = &args.ground_truth_output {
                let mut buf = Vec::new();
                write_ground_truth_csv(&truth, &mut buf)?;
                write_out(Some(path), &String::from_utf8_lossy(&buf))?;
            }
            Ok(EXIT_OK)
        }
        Command::Audit(args) => {
            let ds = args.input.load()?;
            let options = AuditOptions {
                alpha: args.alpha,
                overall_kappa: args.overall_kappa.into(),
                ci_method: args.ci_method.into(),
                ci_level: args.level,
                yates: args.yates,
                change_period: args.change_period,
                bias_factors: args.factors.clone(),
                ground_truth: args.ground_truth.as_deref().map(read_ground_truth_path).transpose()?,
                ..AuditOptions::default()
            };
            let report = run_audit(&ds, &options)?;
            let format = match args.out.format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Text => ReportFormat::Text,
            };
            write_out(args.out.output.as_deref(), &emit_report(&report, format))?;
            Ok(if report.is_partial() { EXIT_PARTIAL } else { EXIT_OK })
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
