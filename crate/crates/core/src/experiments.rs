//! Seeded experiment drivers behind the CLI: the aggregator-convergence
//! sweep, the fairness/accuracy tradeoff, and the theory-verification suite.
//!
//! Every driver is a pure function of its configuration (seeds included):
//! repeat runs produce byte-identical CSV files. Monte-Carlo repetitions and
//! resamples run in parallel on independent RNG substreams, and rows are
//! assembled in a fixed order regardless of completion order.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::aggregate::{
    bayes_posterior, dawid_skene, estimate_confusion, majority_vote, DawidSkeneOptions,
    PosteriorTable, Source,
};
use crate::baseline::post_td;
use crate::data::{
    generate_synthetic, train_test_split, GroupAssignment, LabelMatrix, Scenario, SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::fair::{apply, fairify, FairConfig};
use crate::metrics::{dp_gap, dp_gap_hard, f1_accuracy};
use crate::rng::{derive_seed, stream_rng};
use crate::theory::{
    baillon_eta, bayes_exponent, divergence_condition_check, dp_bound_check, mv_exponent,
    mv_strict_tail, mv_tail_derivative, poisson_binomial_pmf, small_crowd_bound_exact,
    BoundAggregator, CrowdPartition,
};

/// Seed-derivation tags keeping the experiment's independent randomness
/// sources (data, splits, classifier sampling, baseline flips, theory draws)
/// on disjoint streams.
const TAG_DATA: u64 = 1;
const TAG_SPLIT: u64 = 2;
const TAG_APPLY: u64 = 3;
const TAG_FLIP: u64 = 4;
const TAG_THEORY: u64 = 5;

/// The canonical aggregator order used by every sweep.
const METHODS: [Source; 3] = [Source::MajorityVote, Source::Bayes, Source::DawidSkene];

/// Runs one aggregator on a vote matrix. Posterior weighting estimates its
/// confusion model from ground truth with Laplace smoothing 1, so it needs
/// truth; the other two work unsupervised.
pub fn aggregate_with(
    method: Source,
    m: &LabelMatrix,
    g: &GroupAssignment,
) -> Result<PosteriorTable> {
    match method {
        Source::MajorityVote => Ok(majority_vote(m)),
        Source::Bayes => {
            let cm = estimate_confusion(m, g, 1.0)?;
            bayes_posterior(m, g, &cm)
        }
        Source::DawidSkene => Ok(dawid_skene(m, g, &DawidSkeneOptions::default())?.posterior),
    }
}

/// Sample mean and (n−1)-normalized standard deviation; a single observation
/// reports deviation 0.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

// ---------------------------------------------------------------------------
// Convergence sweep
// ---------------------------------------------------------------------------

/// Configuration of the convergence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceConfig {
    pub scenario: Scenario,
    /// Crowd sizes to sweep (full panel: every annotator labels every task).
    pub r_list: Vec<usize>,
    /// Tasks per generated dataset.
    pub n_tasks: usize,
    /// Monte-Carlo repetitions per crowd size.
    pub mc_reps: usize,
    pub seed: u64,
}

impl ConvergenceConfig {
    /// The standard sweep: R ∈ {3, 5, 8, 10, 15, 20, 40}, 10⁴ tasks,
    /// 20 repetitions.
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self { scenario, r_list: vec![3, 5, 8, 10, 15, 20, 40], n_tasks: 10_000, mc_reps: 20, seed }
    }
}

/// One (crowd size, aggregator) cell of the convergence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub scenario: String,
    pub r: usize,
    pub method: String,
    pub mc_reps: usize,
    /// Mean over repetitions of gap(aggregated labels) − gap(true labels).
    pub mean_diff: f64,
    /// Sample standard deviation of the same difference.
    pub std_diff: f64,
}

/// Measures how fast each aggregator's parity gap converges to the ground
/// truth's parity gap as the crowd grows: for every crowd size and every
/// aggregator, the signed difference gap(Ŷ) − gap(Y) is averaged over
/// `mc_reps` freshly generated datasets. All three aggregators score the
/// same datasets, so differences between methods are paired.
pub fn convergence(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>> {
    if cfg.mc_reps == 0 {
        return Err(Error::InvalidConfig("mc_reps must be at least 1".into()));
    }
    if cfg.r_list.is_empty() {
        return Err(Error::InvalidConfig("r_list must name at least one crowd size".into()));
    }

    let mut rows = Vec::with_capacity(cfg.r_list.len() * METHODS.len());
    for &r in &cfg.r_list {
        let diffs: Vec<[f64; 3]> = (0..cfg.mc_reps)
            .into_par_iter()
            .map(|rep| -> Result<[f64; 3]> {
                let data_seed = derive_seed(cfg.seed, r as u64, rep as u64);
                let syn = cfg.scenario.full_panel_config(cfg.n_tasks, r, data_seed);
                let (m, g, _) = generate_synthetic(&syn)?;
                let truth_gap =
                    dp_gap_hard(g.truth().expect("synthetic data carries truth"), &g)?.dp_gap;
                let mut out = [0.0f64; 3];
                for (i, method) in METHODS.into_iter().enumerate() {
                    let pred = aggregate_with(method, &m, &g)?.harden();
                    out[i] = dp_gap_hard(&pred, &g)?.dp_gap - truth_gap;
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (i, method) in METHODS.into_iter().enumerate() {
            let per_rep: Vec<f64> = diffs.iter().map(|d| d[i]).collect();
            let (mean_diff, std_diff) = mean_std(&per_rep);
            rows.push(ConvergenceRow {
                scenario: cfg.scenario.as_str().to_string(),
                r,
                method: method.as_str().to_string(),
                mc_reps: cfg.mc_reps,
                mean_diff,
                std_diff,
            });
        }
    }
    Ok(rows)
}

/// Writes convergence rows as CSV
/// `scenario,r,method,mc_reps,mean_diff,std_diff`.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["scenario", "r", "method", "mc_reps", "mean_diff", "std_diff"])?;
    for row in rows {
        out.write_record([
            row.scenario.clone(),
            row.r.to_string(),
            row.method.clone(),
            row.mc_reps.to_string(),
            row.mean_diff.to_string(),
            row.std_diff.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Fairness/accuracy tradeoff
// ---------------------------------------------------------------------------

/// Which parity post-processor the tradeoff applies on top of an aggregator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fairifier {
    /// The randomized threshold classifier ([`fairify`]).
    Fc,
    /// The label-massaging baseline ([`post_td`]).
    PostTd,
}

impl Fairifier {
    /// Stable lowercase name for CLI and CSV use.
    pub fn as_str(self) -> &'static str {
        match self {
            Fairifier::Fc => "fc",
            Fairifier::PostTd => "post_td",
        }
    }

    /// Both post-processors, in canonical order.
    pub fn all() -> [Fairifier; 2] {
        [Fairifier::Fc, Fairifier::PostTd]
    }
}

impl std::fmt::Display for Fairifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Fairifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fc" => Ok(Fairifier::Fc),
            "post_td" => Ok(Fairifier::PostTd),
            other => Err(Error::InvalidConfig(format!(
                "unknown fairifier `{other}` (expected fc or post_td)"
            ))),
        }
    }
}

/// Configuration of the tradeoff experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffConfig {
    pub epsilons: Vec<f64>,
    pub methods: Vec<Source>,
    pub fairifiers: Vec<Fairifier>,
    pub resamples: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl TradeoffConfig {
    /// The standard grid: ε ∈ {0.01, 0.05, 0.1, 0.2}, all aggregators, both
    /// post-processors, 10 resamples, 60% held out for evaluation.
    pub fn new(seed: u64) -> Self {
        Self {
            epsilons: vec![0.01, 0.05, 0.1, 0.2],
            methods: METHODS.to_vec(),
            fairifiers: Fairifier::all().to_vec(),
            resamples: 10,
            test_fraction: 0.6,
            seed,
        }
    }
}

/// The synthetic dataset the tradeoff experiment regenerates per resample:
/// 2000 tasks, P(A=1) = 0.6, class priors (0.4, 0.6), and 5 votes per task
/// from a pool of 100 competent annotators.
pub fn tradeoff_dataset_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_tasks: 2000,
        pool_size: 100,
        votes_per_task: 5,
        p_group1: 0.6,
        p_pos: [0.4, 0.6],
        skill_range: Scenario::Competent.skill_range(),
        seed,
    }
}

/// Data source for [`tradeoff`]: regenerate the synthetic dataset per
/// resample, or reuse one fixed dataset (resamples then differ only in the
/// evaluation split and sampling randomness).
#[derive(Clone, Copy, Debug)]
pub enum TradeoffData<'a> {
    Synthetic,
    Fixed(&'a LabelMatrix, &'a GroupAssignment),
}

/// One (aggregator, post-processor, ε) cell of the tradeoff experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffRow {
    pub method: String,
    pub fairifier: String,
    pub epsilon: f64,
    pub resamples: usize,
    /// Mean demographic-parity gap on the held-out tasks, in expectation
    /// over the classifier's randomization.
    pub mean_dp_gap: f64,
    pub std_dp_gap: f64,
    /// Mean F1 of one sampled hard labeling on the held-out tasks.
    pub mean_f1: f64,
    pub std_f1: f64,
}

/// Sweeps the fairness budget: per resample, aggregate once on the full vote
/// set (aggregation is transductive — it never sees ground truth except for
/// the posterior-weighting method's confusion fit), post-process at each ε,
/// and score parity and F1 on the held-out split only. Reported rows are
/// means and deviations over resamples.
pub fn tradeoff(cfg: &TradeoffConfig, data: TradeoffData<'_>) -> Result<Vec<TradeoffRow>> {
    if cfg.resamples == 0 {
        return Err(Error::InvalidConfig("resamples must be at least 1".into()));
    }

    let cells = cfg.methods.len() * cfg.fairifiers.len() * cfg.epsilons.len();
    let per_resample: Vec<Vec<(f64, f64)>> = (0..cfg.resamples)
        .into_par_iter()
        .map(|k| -> Result<Vec<(f64, f64)>> {
            let generated;
            let (m, g): (&LabelMatrix, &GroupAssignment) = match data {
                TradeoffData::Synthetic => {
                    let data_seed = derive_seed(cfg.seed, TAG_DATA, k as u64);
                    generated = generate_synthetic(&tradeoff_dataset_config(data_seed))?;
                    (&generated.0, &generated.1)
                }
                TradeoffData::Fixed(m, g) => (m, g),
            };
            let (_, test) = train_test_split(
                g.n_tasks(),
                cfg.test_fraction,
                derive_seed(cfg.seed, TAG_SPLIT, k as u64),
            )?;

            let mut out = Vec::with_capacity(cells);
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let posterior = aggregate_with(method, m, g)?;
                for &fairifier in &cfg.fairifiers {
                    for (ei, &epsilon) in cfg.epsilons.iter().enumerate() {
                        let cell_tag = (mi * cfg.epsilons.len() + ei) as u64;
                        let (q, labels) = match fairifier {
                            Fairifier::Fc => {
                                let fit = fairify(&posterior, g, &FairConfig::new(epsilon)?)?;
                                let sample_seed = derive_seed(
                                    derive_seed(cfg.seed, TAG_APPLY, k as u64),
                                    cell_tag,
                                    0,
                                );
                                apply(&fit.classifier, &fit.posteriors, g, sample_seed)?
                            }
                            Fairifier::PostTd => {
                                let flip_seed = derive_seed(
                                    derive_seed(cfg.seed, TAG_FLIP, k as u64),
                                    cell_tag,
                                    0,
                                );
                                let labels =
                                    post_td(&posterior.harden(), g, epsilon, flip_seed)?;
                                let q = labels
                                    .iter()
                                    .map(|&b| f64::from(u8::from(b)))
                                    .collect::<Vec<f64>>();
                                (q, labels)
                            }
                        };
                        out.push(eval_on(&test, &q, &labels, g)?);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells);
    let mut slot = 0usize;
    for &method in &cfg.methods {
        for &fairifier in &cfg.fairifiers {
            for &epsilon in &cfg.epsilons {
                let dps: Vec<f64> = per_resample.iter().map(|v| v[slot].0).collect();
                let f1s: Vec<f64> = per_resample.iter().map(|v| v[slot].1).collect();
                let (mean_dp_gap, std_dp_gap) = mean_std(&dps);
                let (mean_f1, std_f1) = mean_std(&f1s);
                rows.push(TradeoffRow {
                    method: method.as_str().to_string(),
                    fairifier: fairifier.as_str().to_string(),
                    epsilon,
                    resamples: cfg.resamples,
                    mean_dp_gap,
                    std_dp_gap,
                    mean_f1,
                    std_f1,
                });
                slot += 1;
            }
        }
    }
    Ok(rows)
}

/// Scores predictions on a subset of tasks: expected demographic-parity gap
/// of the positive probabilities, and F1 of the hard labels against truth.
fn eval_on(
    idx: &[usize],
    q: &[f64],
    labels: &[bool],
    g: &GroupAssignment,
) -> Result<(f64, f64)> {
    let truth = g.require_truth("the tradeoff experiment scores F1 on held-out tasks")?;
    let sub_g = GroupAssignment::new(idx.iter().map(|&t| g.group(t)).collect(), None)?;
    let sub_q: Vec<f64> = idx.iter().map(|&t| q[t]).collect();
    let sub_labels: Vec<bool> = idx.iter().map(|&t| labels[t]).collect();
    let sub_truth: Vec<bool> = idx.iter().map(|&t| truth[t]).collect();
    let dp = dp_gap(&sub_q, &sub_g)?.dp_gap;
    let (f1, _) = f1_accuracy(&sub_labels, &sub_truth)?;
    Ok((dp, f1))
}

/// Writes tradeoff rows as CSV `method,fairifier,epsilon,resamples,
/// mean_dp_gap,std_dp_gap,mean_f1,std_f1`.
pub fn write_tradeoff_csv(path: &Path, rows: &[TradeoffRow]) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record([
        "method",
        "fairifier",
        "epsilon",
        "resamples",
        "mean_dp_gap",
        "std_dp_gap",
        "mean_f1",
        "std_f1",
    ])?;
    for row in rows {
        out.write_record([
            row.method.clone(),
            row.fairifier.clone(),
            row.epsilon.to_string(),
            row.resamples.to_string(),
            row.mean_dp_gap.to_string(),
            row.std_dp_gap.to_string(),
            row.mean_f1.to_string(),
            row.std_f1.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Theory verification
// ---------------------------------------------------------------------------

/// One numeric guarantee check: `holds` asserts `lhs` against `rhs` with the
/// check's own semantics (at most a Monte-Carlo or floating-point tolerance).
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryRow {
    pub check_name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn row(check_name: &str, lhs: f64, rhs: f64, holds: bool) -> TheoryRow {
    TheoryRow { check_name: check_name.to_string(), lhs, rhs, holds }
}

/// Runs the full numeric verification suite over the theory module:
/// the sup-pmf constant and its uniform bound, the vote-tail derivative, the
/// error-exponent ordering, the exact parity-gap fixture, the
/// prediction-vs-truth parity bound on all three scenarios (at `mc_samples`
/// tasks per dataset), the small-crowd parity bound, and the divergence
/// regime arithmetic. Deterministic given `seed`.
pub fn verify_theory(seed: u64, mc_samples: usize) -> Result<Vec<TheoryRow>> {
    let eta = baillon_eta();
    let mut rows = Vec::new();

    rows.push(row("baillon_eta", eta, 0.4688, (0.4687..=0.4689).contains(&eta)));

    // Uniform pmf bound: max_k pmf(k) · √V never exceeds η.
    {
        let mut rng = stream_rng(derive_seed(seed, TAG_THEORY, 1), 0);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let r = rng.random_range(3..=30usize);
            let l: Vec<f64> = (0..r).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect();
            let pmf = poisson_binomial_pmf(&l)?;
            let max_pmf = pmf.iter().cloned().fold(0.0f64, f64::max);
            let v: f64 = l.iter().map(|&p| p * (1.0 - p)).sum();
            worst = worst.max(max_pmf * v.sqrt());
        }
        rows.push(row("pmf_uniform_bound", worst, eta, worst <= eta + 1e-12));
    }

    // Analytic tail derivative vs central finite differences.
    {
        let mut rng = stream_rng(derive_seed(seed, TAG_THEORY, 2), 0);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let r = rng.random_range(3..=12usize);
            let l: Vec<f64> = (0..r).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect();
            let idx = rng.random_range(0..r);
            let analytic = mv_tail_derivative(&l, idx)?;
            let mut lp = l.clone();
            lp[idx] += h;
            let mut lm = l;
            lm[idx] -= h;
            let fd = (mv_strict_tail(&lp)? - mv_strict_tail(&lm)?) / (2.0 * h);
            worst = worst.max((analytic - fd).abs());
        }
        rows.push(row("mv_tail_derivative_vs_finite_difference", worst, 1e-6, worst <= 1e-6));
    }

    // The optimal aggregator's error exponent dominates majority vote's.
    {
        let mut rng = stream_rng(derive_seed(seed, TAG_THEORY, 3), 0);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..100 {
            let r = rng.random_range(2..=15usize);
            let p: Vec<f64> = (0..r).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect();
            worst = worst.max(mv_exponent(&p)? - bayes_exponent(&p)?);
        }
        rows.push(row("mv_exponent_below_bayes_exponent", worst, 1e-9, worst <= 1e-9));
    }

    // Homogeneous crowds: the two exponents coincide.
    {
        let mut worst = 0.0f64;
        for p in [0.55, 0.65, 0.75, 0.85, 0.95] {
            let crowd = vec![p; 9];
            worst = worst.max((mv_exponent(&crowd)? - bayes_exponent(&crowd)?).abs());
        }
        rows.push(row("homogeneous_exponents_match", worst, 1e-8, worst <= 1e-8));
    }

    // Exact parity-gap arithmetic on a dyadic-weight population: group rates
    // 0.65 and 0.35, gap 0.30 to full precision.
    {
        let mut pred = Vec::new();
        let mut grp = Vec::new();
        for (count, p, a) in [(6, 0.8, 1u8), (2, 0.2, 1), (2, 0.8, 0), (6, 0.2, 0)] {
            for _ in 0..count {
                pred.push(p);
                grp.push(a);
            }
        }
        let gap = dp_gap(&pred, &GroupAssignment::new(grp, None)?)?.dp_gap;
        rows.push(row("dp_gap_weighted_fixture", gap, 0.3, (gap - 0.3).abs() <= 1e-12));
    }

    // Prediction-vs-truth parity bound, both aggregators, all scenarios.
    let mut cells = Vec::new();
    for (si, scenario) in Scenario::all().into_iter().enumerate() {
        for r in [3usize, 10, 40] {
            cells.push((si, scenario, r));
        }
    }
    let bound_rows: Vec<Vec<TheoryRow>> = cells
        .par_iter()
        .map(|&(si, scenario, r)| -> Result<Vec<TheoryRow>> {
            let cfg = scenario.full_panel_config(
                mc_samples,
                r,
                derive_seed(seed, 10 + si as u64, r as u64),
            );
            let mut out = Vec::with_capacity(2);
            for agg in [BoundAggregator::MajorityVote, BoundAggregator::Bayes] {
                let report = dp_bound_check(&cfg, agg)?;
                out.push(row(
                    &format!("dp_bound_{}_{}_r{r}", scenario.as_str(), agg.as_str()),
                    report.lhs,
                    report.rhs + 3.0 * report.se,
                    report.holds,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    rows.extend(bound_rows.into_iter().flatten());

    // Small-crowd parity bound on random vote marginals.
    for r in [3usize, 7, 15] {
        let mut rng = stream_rng(derive_seed(seed, TAG_THEORY, 20 + r as u64), 0);
        let mut l0 = Vec::with_capacity(r);
        let mut l1 = Vec::with_capacity(r);
        for _ in 0..r {
            let base = 0.3 + 0.4 * rng.random::<f64>();
            l0.push(base);
            l1.push((base + 0.2 * (rng.random::<f64>() - 0.5)).clamp(0.05, 0.95));
        }
        let report = small_crowd_bound_exact(&l0, &l1)?;
        rows.push(row(
            &format!("small_crowd_bound_r{r}"),
            report.observed_gap,
            report.bound,
            report.holds,
        ));
    }
    // Degenerate marginals: zero vote variance makes the bound infinite and
    // vacuously true.
    {
        let report = small_crowd_bound_exact(&[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0])?;
        rows.push(row(
            "small_crowd_bound_degenerate",
            report.observed_gap,
            report.bound,
            report.holds,
        ));
    }

    // Divergence-regime arithmetic: the surrogate condition against hand
    // computation.
    for (name, g1, g2, r, c, expected) in [
        ("divergence_strong_majority", 19usize, 0usize, 20usize, 0.0, true),
        ("divergence_weak_majority", 10, 0, 20, 0.0, false),
        ("divergence_weak_info_only", 0, 10, 10, 0.4, false),
    ] {
        let partition = CrowdPartition::new(g1, g2, r, 0.1, 0.1, c)?;
        let value = (g1 as f64 / r as f64) * 1.2 + 2.0 * c * g2 as f64 / r as f64;
        rows.push(row(name, value, 1.0, divergence_condition_check(&partition) == expected));
    }

    Ok(rows)
}

/// Writes theory rows as CSV `check_name,lhs,rhs,holds`.
pub fn write_theory_csv(path: &Path, rows: &[TheoryRow]) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["check_name", "lhs", "rhs", "holds"])?;
    for row in rows {
        out.write_record([
            row.check_name.clone(),
            row.lhs.to_string(),
            row.rhs.to_string(),
            row.holds.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
