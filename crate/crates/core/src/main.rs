//! `faircrowd`: aggregate crowdsourced binary labels and post-process them
//! for demographic parity.
//!
//! Exit codes: 0 on success, 1 on I/O or data errors (and on violated checks
//! in `verify-theory`), 2 on usage errors such as a missing flag or a method
//! that needs ground truth it was not given.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faircrowd::aggregate::Source;
use faircrowd::baseline::post_td;
use faircrowd::data::{load_csv, LoadedData, Scenario};
use faircrowd::error::Error;
use faircrowd::experiments::{
    aggregate_with, convergence, tradeoff, verify_theory, write_convergence_csv,
    write_theory_csv, write_tradeoff_csv, ConvergenceConfig, Fairifier, TradeoffConfig,
    TradeoffData,
};
use faircrowd::fair::{apply, fairify, write_predictions_csv, FairConfig};
use faircrowd::metrics::{dp_gap, dp_gap_hard, f1_accuracy, write_report, FairnessReport, ReportRow};
use faircrowd::Result;

#[derive(Parser)]
#[command(
    name = "faircrowd",
    version,
    about = "Crowdsourced binary-label aggregation with demographic-parity post-processing",
    propagate_version = true
)]
struct Cli {
    /// Master seed; every stochastic step derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output CSV path.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate votes into per-task posterior probabilities.
    Aggregate(AggregateArgs),
    /// Fit the optimal ε-fair randomized classifier and sample its labels.
    Fairify(FairifyArgs),
    /// Repair parity by flipping labels near the group rates (baseline).
    PostTd(PostTdArgs),
    /// Sweep aggregator parity-gap convergence on synthetic crowds.
    Convergence(ConvergenceArgs),
    /// Sweep the fairness/accuracy tradeoff across parity budgets.
    Tradeoff(TradeoffArgs),
    /// Run every numeric guarantee check and write one row per check.
    VerifyTheory(VerifyTheoryArgs),
}

/// The three input files describing a dataset.
#[derive(Args)]
struct DatasetArgs {
    /// Votes CSV (`task_id,annotator_id,label`).
    #[arg(long, value_name = "PATH")]
    votes: PathBuf,

    /// Protected-group CSV (`task_id,a`).
    #[arg(long, value_name = "PATH")]
    groups: PathBuf,

    /// Ground-truth CSV (`task_id,y`); required by `--method bayes` and for
    /// accuracy columns.
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

impl DatasetArgs {
    fn load(&self) -> Result<LoadedData> {
        load_csv(&self.votes, &self.groups, self.truth.as_deref())
    }
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    data: DatasetArgs,

    /// Aggregation method: mv, bayes, or ds.
    #[arg(long, default_value_t = Source::MajorityVote)]
    method: Source,
}

#[derive(Args)]
struct FairifyArgs {
    #[command(flatten)]
    data: DatasetArgs,

    /// Aggregation method feeding the classifier: mv, bayes, or ds.
    #[arg(long, default_value_t = Source::MajorityVote)]
    method: Source,

    /// Demographic-parity budget ε ∈ [0, 1].
    #[arg(long)]
    epsilon: f64,

    /// Optional path for the fitted classifier's parameters.
    #[arg(long, value_name = "PATH")]
    classifier_out: Option<PathBuf>,
}

#[derive(Args)]
struct PostTdArgs {
    #[command(flatten)]
    data: DatasetArgs,

    /// Aggregation method feeding the baseline: mv, bayes, or ds.
    #[arg(long, default_value_t = Source::MajorityVote)]
    method: Source,

    /// Demographic-parity budget ε ∈ [0, 1].
    #[arg(long)]
    epsilon: f64,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Annotator-skill scenario: competent, adversarial, or uninformative.
    #[arg(long)]
    scenario: Scenario,

    /// Crowd sizes to sweep, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 8, 10, 15, 20, 40])]
    r_list: Vec<usize>,

    /// Tasks per generated dataset.
    #[arg(long, default_value_t = 10_000)]
    n_tasks: usize,

    /// Monte-Carlo repetitions per crowd size.
    #[arg(long, default_value_t = 20)]
    mc_reps: usize,
}

#[derive(Args)]
struct TradeoffArgs {
    /// Votes CSV; omit all three file flags to use the built-in synthetic
    /// benchmark dataset instead.
    #[arg(long, value_name = "PATH")]
    votes: Option<PathBuf>,

    /// Protected-group CSV.
    #[arg(long, value_name = "PATH")]
    groups: Option<PathBuf>,

    /// Ground-truth CSV (needed to score F1).
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,

    /// Parity budgets ε, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.2])]
    epsilons: Vec<f64>,

    /// Aggregation methods, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [Source::MajorityVote, Source::Bayes, Source::DawidSkene]
    )]
    methods: Vec<Source>,

    /// Post-processors to compare: fc, post_td.
    #[arg(long, value_delimiter = ',', default_values_t = Fairifier::all())]
    fairifiers: Vec<Fairifier>,

    /// Independent resamples to average over.
    #[arg(long, default_value_t = 10)]
    resamples: usize,

    /// Fraction of tasks held out for evaluation.
    #[arg(long, default_value_t = 0.6)]
    test_fraction: f64,
}

#[derive(Args)]
struct VerifyTheoryArgs {
    /// Tasks per generated dataset in the Monte-Carlo bound checks.
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::TruthRequired(_) | Error::InvalidConfig(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Aggregate(args) => cmd_aggregate(cli.out, args),
        Command::Fairify(args) => cmd_fairify(cli.seed, cli.out, args),
        Command::PostTd(args) => cmd_post_td(cli.seed, cli.out, args),
        Command::Convergence(args) => cmd_convergence(cli.seed, cli.out, args),
        Command::Tradeoff(args) => cmd_tradeoff(cli.seed, cli.out, args),
        Command::VerifyTheory(args) => cmd_verify_theory(cli.seed, cli.out, args),
    }
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf> {
    out.ok_or_else(|| Error::InvalidConfig("--out <PATH> is required".into()))
}

/// Fills the accuracy columns of a report when ground truth is available.
fn with_accuracy(
    mut report: FairnessReport,
    labels: &[bool],
    truth: Option<&[bool]>,
) -> Result<FairnessReport> {
    if let Some(truth) = truth {
        let (f1, accuracy) = f1_accuracy(labels, truth)?;
        report.f1 = Some(f1);
        report.accuracy = Some(accuracy);
    }
    Ok(report)
}

fn cmd_aggregate(out: Option<PathBuf>, args: AggregateArgs) -> Result<ExitCode> {
    let out = require_out(out)?;
    let data = args.data.load()?;
    let posterior = aggregate_with(args.method, &data.matrix, &data.groups)?;
    posterior.write_csv(&out, &data.task_ids)?;

    let hard = posterior.harden();
    let report =
        with_accuracy(dp_gap_hard(&hard, &data.groups)?, &hard, data.groups.truth())?;
    write_report(std::io::stdout(), &[ReportRow::new(args.method.as_str(), &report)])?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fairify(seed: u64, out: Option<PathBuf>, args: FairifyArgs) -> Result<ExitCode> {
    let out = require_out(out)?;
    let data = args.data.load()?;
    let posterior = aggregate_with(args.method, &data.matrix, &data.groups)?;
    let fit = fairify(&posterior, &data.groups, &FairConfig::new(args.epsilon)?)?;
    if fit.classifier.at_boundary {
        eprintln!(
            "warning: the penalty minimizer landed on the search boundary \
             (|beta| near {}); the reported classifier may be suboptimal",
            fit.classifier.beta_star.abs()
        );
    }

    let (q, labels) = apply(&fit.classifier, &fit.posteriors, &data.groups, seed)?;
    write_predictions_csv(&out, &data.task_ids, &q, &labels)?;
    if let Some(path) = &args.classifier_out {
        fit.classifier.write_csv(path)?;
    }

    let report = with_accuracy(dp_gap(&q, &data.groups)?, &labels, data.groups.truth())?;
    let mut row = ReportRow::new(format!("fc_{}", args.method.as_str()), &report);
    row.epsilon = Some(args.epsilon);
    row.seed = Some(seed);
    write_report(std::io::stdout(), &[row])?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_post_td(seed: u64, out: Option<PathBuf>, args: PostTdArgs) -> Result<ExitCode> {
    let out = require_out(out)?;
    let data = args.data.load()?;
    let posterior = aggregate_with(args.method, &data.matrix, &data.groups)?;
    let labels = post_td(&posterior.harden(), &data.groups, args.epsilon, seed)?;
    let q: Vec<f64> = labels.iter().map(|&b| f64::from(u8::from(b))).collect();
    write_predictions_csv(&out, &data.task_ids, &q, &labels)?;

    let report =
        with_accuracy(dp_gap_hard(&labels, &data.groups)?, &labels, data.groups.truth())?;
    let mut row = ReportRow::new(format!("post_td_{}", args.method.as_str()), &report);
    row.epsilon = Some(args.epsilon);
    row.seed = Some(seed);
    write_report(std::io::stdout(), &[row])?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_convergence(seed: u64, out: Option<PathBuf>, args: ConvergenceArgs) -> Result<ExitCode> {
    let out = require_out(out)?;
    let cfg = ConvergenceConfig {
        scenario: args.scenario,
        r_list: args.r_list,
        n_tasks: args.n_tasks,
        mc_reps: args.mc_reps,
        seed,
    };
    let rows = convergence(&cfg)?;
    write_convergence_csv(&out, &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_tradeoff(seed: u64, out: Option<PathBuf>, args: TradeoffArgs) -> Result<ExitCode> {
    let out = require_out(out)?;
    let cfg = TradeoffConfig {
        epsilons: args.epsilons,
        methods: args.methods,
        fairifiers: args.fairifiers,
        resamples: args.resamples,
        test_fraction: args.test_fraction,
        seed,
    };
    let rows = match (&args.votes, &args.groups, &args.truth) {
        (Some(votes), Some(groups), Some(truth)) => {
            let data = load_csv(votes, groups, Some(truth))?;
            tradeoff(&cfg, TradeoffData::Fixed(&data.matrix, &data.groups))?
        }
        (None, None, None) => tradeoff(&cfg, TradeoffData::Synthetic)?,
        _ => {
            return Err(Error::InvalidConfig(
                "--votes, --groups, and --truth must be given together \
                 (or all omitted to use the built-in synthetic benchmark)"
                    .into(),
            ))
        }
    };
    write_tradeoff_csv(&out, &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_theory(seed: u64, out: Option<PathBuf>, args: VerifyTheoryArgs) -> Result<ExitCode> {
    let out = require_out(out)?;
    let rows = verify_theory(seed, args.mc_samples)?;
    write_theory_csv(&out, &rows)?;
    let violated: Vec<_> = rows.iter().filter(|r| !r.holds).collect();
    for row in &violated {
        eprintln!("violated: {} (lhs {}, rhs {})", row.check_name, row.lhs, row.rhs);
    }
    println!("{} checks, {} violated", rows.len(), violated.len());
    Ok(if violated.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
