//! Group-level guarantees: the prediction-vs-truth parity bound driven by
//! error exponents, the small-crowd parity bound driven by the universal
//! pmf constant, and the crowd-partition divergence condition.

use std::sync::OnceLock;

use crate::aggregate::{bayes_posterior, majority_vote, ConfusionModel};
use crate::data::{generate_synthetic, GroupAssignment, LabelMatrix, SyntheticConfig};
use crate::error::{Error, Result};
use crate::metrics::dp_gap_hard;
use crate::theory::{baillon_eta, bayes_exponent, mv_exponent, poisson_binomial_pmf};

/// Aggregators covered by the error-exponent machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundAggregator {
    MajorityVote,
    Bayes,
}

impl BoundAggregator {
    /// Stable lowercase name for CLI and CSV use.
    pub fn as_str(self) -> &'static str {
        match self {
            BoundAggregator::MajorityVote => "mv",
            BoundAggregator::Bayes => "bayes",
        }
    }
}

impl std::str::FromStr for BoundAggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mv" => Ok(BoundAggregator::MajorityVote),
            "bayes" => Ok(BoundAggregator::Bayes),
            other => Err(Error::InvalidConfig(format!(
                "unknown aggregator `{other}` for the parity bound (expected mv or bayes)"
            ))),
        }
    }
}

/// Outcome of one prediction-vs-truth parity comparison.
#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    /// |gap(predictions) − gap(truth)|, estimated over the sampled tasks.
    pub lhs: f64,
    /// Σ over groups of e^{−R·K(group)} with the aggregator's exponent K.
    pub rhs: f64,
    /// Standard error of the signed group-difference estimator that
    /// dominates `lhs`.
    pub se: f64,
    /// `lhs ≤ rhs + 3·se`.
    pub holds: bool,
}

/// Checks that the parity gap of aggregated predictions tracks the parity
/// gap of the ground truth: `|gap(Ŷ) − gap(Y)| ≤ Σ_a e^{−R·K(a)}` up to
/// Monte-Carlo tolerance (three standard errors).
///
/// The config must be a full panel (`votes_per_task == pool_size`) so every
/// task is labeled by the same crowd of R annotators, matching the setting
/// in which the exponents are derived. The Bayes variant aggregates with the
/// generator's true skills and per-group class priors, so the exponent's
/// optimality premise actually holds. An infinite exponent contributes
/// exactly 0 to the right-hand side; perfect crowds therefore run under
/// majority vote (whose finite scan-capped exponent still drives the
/// right-hand side below 1e−12), while Bayes rejects the degenerate
/// confusion entries such crowds produce.
pub fn dp_bound_check(cfg: &SyntheticConfig, aggregator: BoundAggregator) -> Result<BoundReport> {
    if cfg.votes_per_task != cfg.pool_size {
        return Err(Error::InvalidConfig(format!(
            "the parity bound needs a full panel: votes_per_task ({}) must equal pool_size ({})",
            cfg.votes_per_task, cfg.pool_size
        )));
    }
    let (matrix, groups, skills) = generate_synthetic(cfg)?;
    let truth = groups.require_truth("the prediction-vs-truth parity check")?;

    let pred = match aggregator {
        BoundAggregator::MajorityVote => majority_vote(&matrix).harden(),
        BoundAggregator::Bayes => {
            let cm = ConfusionModel::from_skills(&skills.skills, cfg.p_pos)?;
            bayes_posterior(&matrix, &groups, &cm)?.harden()
        }
    };

    let gap_pred = dp_gap_hard(&pred, &groups)?.dp_gap;
    let gap_truth = dp_gap_hard(truth, &groups)?.dp_gap;
    let lhs = (gap_pred - gap_truth).abs();
    let se = disagreement_se(&pred, truth, &groups);

    let r = cfg.pool_size;
    let mut rhs = 0.0;
    for a in 0..2u8 {
        let group_skills: Vec<f64> = (0..r).map(|i| skills.skill(i, a)).collect();
        let exponent = match aggregator {
            BoundAggregator::MajorityVote => mv_exponent(&group_skills)?,
            BoundAggregator::Bayes => bayes_exponent(&group_skills)?,
        };
        rhs += (-(r as f64) * exponent).exp();
    }

    Ok(BoundReport { lhs, rhs, se, holds: lhs <= rhs + 3.0 * se })
}

/// Standard error of D̂ = mean₁(ŷ − y) − mean₀(ŷ − y). By the reverse
/// triangle inequality |gap(Ŷ) − gap(Y)| ≤ |D̂|, so this is the right noise
/// scale for the check's tolerance.
fn disagreement_se(pred: &[bool], truth: &[bool], g: &GroupAssignment) -> f64 {
    let d: Vec<f64> = pred
        .iter()
        .zip(truth)
        .map(|(&p, &y)| f64::from(u8::from(p)) - f64::from(u8::from(y)))
        .collect();
    let mut n = [0usize; 2];
    let mut sum = [0.0f64; 2];
    for (t, &dt) in d.iter().enumerate() {
        let a = g.group(t) as usize;
        n[a] += 1;
        sum[a] += dt;
    }
    let mut var_over_n = 0.0;
    for a in 0..2 {
        if n[a] < 2 {
            continue;
        }
        let mean = sum[a] / n[a] as f64;
        let ss: f64 = d
            .iter()
            .enumerate()
            .filter(|(t, _)| g.group(*t) as usize == a)
            .map(|(_, &dt)| (dt - mean) * (dt - mean))
            .sum();
        var_over_n += ss / (n[a] - 1) as f64 / n[a] as f64;
    }
    var_over_n.sqrt()
}

/// Outcome of one small-crowd parity comparison.
#[derive(Clone, Copy, Debug)]
pub struct SmallCrowdReport {
    /// η/√(min over groups of leave-one-out vote variance) times the summed
    /// per-annotator parity gaps; infinite when that variance vanishes.
    pub bound: f64,
    /// Demographic-parity gap of majority vote.
    pub observed_gap: f64,
    /// `observed_gap ≤ bound` (vacuously true for an infinite bound).
    pub holds: bool,
}

fn eta() -> f64 {
    static ETA: OnceLock<f64> = OnceLock::new();
    *ETA.get_or_init(baillon_eta)
}

/// `bound = η/√(min_a V(a)) · Σ_r |l_r(1) − l_r(0)|` from vote marginals
/// `l[r][a]`, where `V(a)` is the most conservative leave-one-out Bernoulli
/// variance sum `min_r Σ_{i≠r} l_i(a)(1 − l_i(a))`.
fn marginal_bound(l: &[[f64; 2]]) -> f64 {
    let mut v_min = f64::INFINITY;
    for a in 0..2 {
        let vars: Vec<f64> = l.iter().map(|lr| lr[a] * (1.0 - lr[a])).collect();
        let total: f64 = vars.iter().sum();
        let max_var = vars.iter().cloned().fold(0.0f64, f64::max);
        v_min = v_min.min(total - max_var);
    }
    if v_min <= 0.0 {
        return f64::INFINITY;
    }
    let gap_sum: f64 = l.iter().map(|lr| (lr[1] - lr[0]).abs()).sum();
    eta() / v_min.sqrt() * gap_sum
}

/// Checks that majority vote's parity gap is controlled by the annotators'
/// own parity gaps: `gap(MV) ≤ η/√(min_a V(a)) · Σ_r gap(annotator r)`.
///
/// Vote marginals `l_r(a)` are estimated from the matrix, so every annotator
/// must have at least one vote in each group.
pub fn small_crowd_bound(m: &LabelMatrix, g: &GroupAssignment) -> Result<SmallCrowdReport> {
    let mut ones = vec![[0usize; 2]; m.n_annotators()];
    let mut counts = vec![[0usize; 2]; m.n_annotators()];
    for (t, task) in m.tasks().enumerate() {
        let a = g.group(t) as usize;
        for v in task {
            counts[v.annotator][a] += 1;
            ones[v.annotator][a] += usize::from(v.label);
        }
    }
    let mut marginals = Vec::with_capacity(m.n_annotators());
    for r in 0..m.n_annotators() {
        if counts[r][0] == 0 || counts[r][1] == 0 {
            return Err(Error::InvalidConfig(format!(
                "annotator {r} has no votes in group {}; per-group vote marginals are required",
                if counts[r][0] == 0 { 0 } else { 1 }
            )));
        }
        marginals.push([
            ones[r][0] as f64 / counts[r][0] as f64,
            ones[r][1] as f64 / counts[r][1] as f64,
        ]);
    }

    let bound = marginal_bound(&marginals);
    let observed_gap = dp_gap_hard(&majority_vote(m).harden(), g)?.dp_gap;
    Ok(SmallCrowdReport { bound, observed_gap, holds: observed_gap <= bound + 1e-12 })
}

/// Population-level variant of [`small_crowd_bound`]: both sides are
/// computed exactly from per-group vote marginals, with majority-vote rates
/// taken as the upper tail of each group's Poisson binomial at the
/// tie-goes-positive threshold ⌈R/2⌉.
pub fn small_crowd_bound_exact(l0: &[f64], l1: &[f64]) -> Result<SmallCrowdReport> {
    if l0.len() != l1.len() {
        return Err(Error::LengthMismatch(format!(
            "{} group-0 marginals vs {} group-1 marginals",
            l0.len(),
            l1.len()
        )));
    }
    let r = l0.len();
    let threshold = r.div_ceil(2);
    let rate = |l: &[f64]| -> Result<f64> {
        let pmf = poisson_binomial_pmf(l)?;
        Ok(pmf[threshold..].iter().sum())
    };
    let observed_gap = (rate(l1)? - rate(l0)?).abs();

    let marginals: Vec<[f64; 2]> = l0.iter().zip(l1).map(|(&a, &b)| [a, b]).collect();
    let bound = marginal_bound(&marginals);
    Ok(SmallCrowdReport { bound, observed_gap, holds: observed_gap <= bound + 1e-12 })
}

/// A three-way crowd split for the divergence regime annotation: `g1` strong
/// annotators with skill margin `epsilon_margin` above chance, `g2` weakly
/// informative annotators with log-odds level `c`, and the remainder with
/// margin at least `epsilon_prime` below ½ in absolute informativeness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrowdPartition {
    pub g1: usize,
    pub g2: usize,
    pub r: usize,
    pub epsilon_margin: f64,
    pub epsilon_prime: f64,
    pub c: f64,
}

impl CrowdPartition {
    /// Validates the partition: `g1 + g2 ≤ r`, margins in (0, ½), and
    /// `c ∈ [0, ½)`.
    pub fn new(
        g1: usize,
        g2: usize,
        r: usize,
        epsilon_margin: f64,
        epsilon_prime: f64,
        c: f64,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidConfig("crowd size r must be positive".into()));
        }
        if g1 + g2 > r {
            return Err(Error::InvalidConfig(format!(
                "partition sizes g1 + g2 = {} exceed the crowd size {r}",
                g1 + g2
            )));
        }
        for (name, value) in [("epsilon_margin", epsilon_margin), ("epsilon_prime", epsilon_prime)]
        {
            if !(value > 0.0 && value < 0.5) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {value} must lie strictly inside (0, 0.5)"
                )));
            }
        }
        if !(0.0..0.5).contains(&c) {
            return Err(Error::InvalidConfig(format!("c = {c} must lie in [0, 0.5)")));
        }
        Ok(CrowdPartition { g1, g2, r, epsilon_margin, epsilon_prime, c })
    }
}

/// Finite-crowd surrogate for the posterior log-odds divergence regime:
/// `(g1/R)·(1 + 2·epsilon_margin) + 2·c·g2/R > 1`. With `c = 0` this reduces
/// to `g1/R > 1/(1 + 2·epsilon_margin)`: enough confidently-skilled
/// annotators guarantee the aggregate concentrates.
pub fn divergence_condition_check(p: &CrowdPartition) -> bool {
    let r = p.r as f64;
    (p.g1 as f64 / r) * (1.0 + 2.0 * p.epsilon_margin) + 2.0 * p.c * p.g2 as f64 / r > 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Scenario;

    fn perfect_panel(n_tasks: usize, r: usize, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_tasks,
            pool_size: r,
            votes_per_task: r,
            p_group1: 0.5,
            p_pos: [0.5, 0.5],
            skill_range: [[1.0, 1.0], [1.0, 1.0]],
            seed,
        }
    }

    #[test]
    fn perfect_annotators_drive_both_sides_to_zero() {
        let report =
            dp_bound_check(&perfect_panel(400, 5, 11), BoundAggregator::MajorityVote).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert!(report.rhs < 1e-12, "rhs = {}", report.rhs);
        assert!(report.holds);
    }

    #[test]
    fn competent_crowd_satisfies_the_bound_at_r_15() {
        let cfg = Scenario::Competent.full_panel_config(20_000, 15, 19);
        for aggregator in [BoundAggregator::MajorityVote, BoundAggregator::Bayes] {
            let report = dp_bound_check(&cfg, aggregator).unwrap();
            assert!(
                report.holds,
                "{} violated: lhs {} rhs {} se {}",
                aggregator.as_str(),
                report.lhs,
                report.rhs,
                report.se
            );
            assert!(report.rhs.is_finite());
        }
    }

    #[test]
    fn adversarial_majority_vote_bound_is_vacuous_but_holds() {
        let cfg = Scenario::Adversarial.full_panel_config(5_000, 9, 23);
        let report = dp_bound_check(&cfg, BoundAggregator::MajorityVote).unwrap();
        // Near-zero exponents per group push the right side toward 1 + 1 = 2.
        assert!(report.rhs > 1.5, "rhs = {}", report.rhs);
        assert!(report.rhs <= 2.0 + 1e-9);
        assert!(report.holds);
    }

    #[test]
    fn bound_check_is_deterministic_in_the_seed() {
        let cfg = Scenario::Competent.full_panel_config(2_000, 7, 5);
        let x = dp_bound_check(&cfg, BoundAggregator::Bayes).unwrap();
        let y = dp_bound_check(&cfg, BoundAggregator::Bayes).unwrap();
        assert_eq!(x.lhs, y.lhs);
        assert_eq!(x.rhs, y.rhs);
        assert_eq!(x.se, y.se);
    }

    #[test]
    fn sparse_panels_are_rejected() {
        let mut cfg = Scenario::Competent.full_panel_config(100, 5, 1);
        cfg.votes_per_task = 3;
        assert!(matches!(
            dp_bound_check(&cfg, BoundAggregator::MajorityVote),
            Err(Error::InvalidConfig(_))
        ));
    }

    fn full_matrix(votes: &[&[bool]]) -> LabelMatrix {
        let triples = votes.iter().enumerate().flat_map(|(t, task)| {
            task.iter().enumerate().map(move |(r, &v)| (t, r, v)).collect::<Vec<_>>()
        });
        LabelMatrix::from_votes(votes.len(), votes[0].len(), triples).unwrap()
    }

    #[test]
    fn identical_marginals_give_zero_bound_and_zero_gap() {
        // Both groups see the same two vote patterns, so l_r(0) = l_r(1).
        let m = full_matrix(&[
            &[true, false, true],
            &[false, true, true],
            &[true, false, true],
            &[false, true, true],
        ]);
        let g = GroupAssignment::new(vec![0, 0, 1, 1], None).unwrap();
        let report = small_crowd_bound(&m, &g).unwrap();
        assert_eq!(report.bound, 0.0);
        assert_eq!(report.observed_gap, 0.0);
        assert!(report.holds);
    }

    #[test]
    fn degenerate_votes_give_an_infinite_bound() {
        let m = full_matrix(&[&[true, true], &[true, true]]);
        let g = GroupAssignment::new(vec![0, 1], None).unwrap();
        let report = small_crowd_bound(&m, &g).unwrap();
        assert!(report.bound.is_infinite());
        assert_eq!(report.observed_gap, 0.0);
        assert!(report.holds);
    }

    #[test]
    fn annotator_missing_from_a_group_is_rejected() {
        // Annotator 1 only ever votes on group-0 tasks.
        let m = LabelMatrix::from_votes(
            2,
            2,
            vec![(0usize, 0usize, true), (0, 1, true), (1, 0, false)],
        )
        .unwrap();
        let g = GroupAssignment::new(vec![0, 1], None).unwrap();
        assert!(matches!(small_crowd_bound(&m, &g), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn empirical_bound_holds_on_a_competent_panel() {
        let cfg = Scenario::Competent.full_panel_config(4_000, 7, 31);
        let (m, g, _) = generate_synthetic(&cfg).unwrap();
        let report = small_crowd_bound(&m, &g).unwrap();
        assert!(report.holds, "gap {} bound {}", report.observed_gap, report.bound);
        assert!(report.bound > 0.0);
    }

    #[test]
    fn exact_rates_count_ties_as_positive() {
        // R = 2: a (½,½) crowd reaches S ≥ 1 with probability ¾; a perfect
        // always-positive crowd with probability 1.
        let report = small_crowd_bound_exact(&[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert!((report.observed_gap - 0.25).abs() < 1e-12);
        assert!(report.bound.is_infinite()); // group 1 has zero vote variance
        assert!(report.holds);
    }

    #[test]
    fn exact_population_bound_holds_on_random_instances() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(99, 0);
        for _ in 0..2_000 {
            let r = rng.random_range(3usize..=15);
            let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
                (0..r).map(|_| 0.02 + 0.96 * rng.random::<f64>()).collect()
            };
            let l0 = draw(&mut rng);
            let l1 = draw(&mut rng);
            let report = small_crowd_bound_exact(&l0, &l1).unwrap();
            assert!(
                report.holds,
                "gap {} exceeds bound {} for l0 = {l0:?}, l1 = {l1:?}",
                report.observed_gap, report.bound
            );
        }
    }

    #[test]
    fn mismatched_marginal_lengths_are_rejected() {
        assert!(matches!(
            small_crowd_bound_exact(&[0.5], &[0.5, 0.5]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn divergence_condition_matches_hand_arithmetic() {
        // 0.95 · 1.2 = 1.14 > 1.
        let strong = CrowdPartition::new(19, 0, 20, 0.1, 0.1, 0.0).unwrap();
        assert!(divergence_condition_check(&strong));
        // 0.5 · 1.2 = 0.6 < 1.
        let weak = CrowdPartition::new(10, 0, 20, 0.1, 0.1, 0.0).unwrap();
        assert!(!divergence_condition_check(&weak));
        // Pure noise-group crowd: 2 · 0.4 · 1 = 0.8 < 1.
        let noisy = CrowdPartition::new(0, 10, 10, 0.1, 0.1, 0.4).unwrap();
        assert!(!divergence_condition_check(&noisy));
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        assert!(CrowdPartition::new(6, 5, 10, 0.1, 0.1, 0.0).is_err()); // g1+g2 > r
        assert!(CrowdPartition::new(1, 1, 10, 0.6, 0.1, 0.0).is_err()); // margin ≥ ½
        assert!(CrowdPartition::new(1, 1, 10, 0.1, 0.1, 0.5).is_err()); // c = ½
        assert!(CrowdPartition::new(1, 1, 0, 0.1, 0.1, 0.0).is_err()); // empty crowd
    }
}
