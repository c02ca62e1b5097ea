//! One-coin EM skill estimation (Dawid–Skene style), conditioned on the
//! protected group.
//!
//! The model: annotator r votes the true class with probability
//! `skill[r][a]` in group a, independently across votes; the class prior is
//! per-group. EM alternates a posterior pass over tasks (E) with closed-form
//! re-estimation of skills and priors from the soft labels (M) for a fixed
//! number of rounds, with no early stopping.

use crate::aggregate::{bayes_posterior, ConfusionModel, PosteriorTable, Source};
use crate::data::{check_aligned, GroupAssignment, LabelMatrix};
use crate::error::{Error, Result};

/// Parameter clamp keeping skills and priors strictly inside (0, 1) so
/// log-odds stay finite.
const KAPPA: f64 = 1e-6;

/// Options for [`dawid_skene`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DawidSkeneOptions {
    /// Number of EM rounds, run exactly (no convergence test).
    pub iters: usize,
    /// Initial skill for every (annotator, group) pair.
    pub init_skill: f64,
    /// Keep the class priors fixed at ½ instead of re-estimating them in the
    /// M-step.
    pub freeze_prior: bool,
}

impl Default for DawidSkeneOptions {
    fn default() -> Self {
        Self { iters: 20, init_skill: 0.7, freeze_prior: false }
    }
}

/// Result of an EM run.
#[derive(Clone, Debug)]
pub struct DawidSkeneFit {
    /// Soft labels from the final E-step.
    pub posterior: PosteriorTable,
    /// One-coin confusion model holding the final skills and priors.
    pub confusion: ConfusionModel,
    /// Observed-data log-likelihood of the parameters at initialization and
    /// after each M-step (`iters + 1` entries, non-decreasing).
    pub log_likelihood: Vec<f64>,
}

/// Runs one-coin EM and returns the final soft labels, the fitted model, and
/// the log-likelihood trace.
///
/// The returned posterior is the E-step under the parameters entering the
/// final round, i.e. the soft labels the last M-step was computed from.
/// Annotators with no votes in a group keep their current skill for that
/// group; an empty group keeps its current prior.
pub fn dawid_skene(
    m: &LabelMatrix,
    g: &GroupAssignment,
    opts: &DawidSkeneOptions,
) -> Result<DawidSkeneFit> {
    check_aligned(m, g)?;
    if opts.iters == 0 {
        return Err(Error::InvalidConfig("EM needs at least one iteration".into()));
    }
    if !(opts.init_skill > 0.0 && opts.init_skill < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "init_skill must lie strictly between 0 and 1, got {}",
            opts.init_skill
        )));
    }

    let clamp = |p: f64| p.clamp(KAPPA, 1.0 - KAPPA);
    let mut skills = vec![[clamp(opts.init_skill); 2]; m.n_annotators()];
    let mut priors = [0.5f64; 2];
    let mut trace = Vec::with_capacity(opts.iters + 1);
    trace.push(observed_log_likelihood(m, g, &skills, priors)?);

    let mut q: Vec<f64> = Vec::new();
    for _ in 0..opts.iters {
        // E-step: soft labels under the current parameters.
        let cm = ConfusionModel::from_skills(&skills, priors)?;
        q = bayes_posterior(m, g, &cm)?.phi1;

        // M-step: per-(annotator, group) expected correctness, and per-group
        // mean soft label as the prior.
        let mut agree = vec![[0.0f64; 2]; m.n_annotators()];
        let mut count = vec![[0usize; 2]; m.n_annotators()];
        let mut q_sum = [0.0f64; 2];
        let mut n_group = [0usize; 2];
        for (t, task) in m.tasks().enumerate() {
            let a = g.group(t) as usize;
            q_sum[a] += q[t];
            n_group[a] += 1;
            for v in task {
                // Expected indicator of "vote equals truth" under q_t.
                agree[v.annotator][a] += if v.label { q[t] } else { 1.0 - q[t] };
                count[v.annotator][a] += 1;
            }
        }
        for r in 0..m.n_annotators() {
            for a in 0..2 {
                if count[r][a] > 0 {
                    skills[r][a] = clamp(agree[r][a] / count[r][a] as f64);
                }
            }
        }
        if !opts.freeze_prior {
            for a in 0..2 {
                if n_group[a] > 0 {
                    priors[a] = clamp(q_sum[a] / n_group[a] as f64);
                }
            }
        }

        trace.push(observed_log_likelihood(m, g, &skills, priors)?);
    }

    let confusion = ConfusionModel::from_skills(&skills, priors)?;
    Ok(DawidSkeneFit {
        posterior: PosteriorTable { phi1: q, source: Source::DawidSkene },
        confusion,
        log_likelihood: trace,
    })
}

/// Observed-data log-likelihood of a one-coin parameterization:
/// `Σ_t ln Σ_y P(y | a_t) Π_{r voted t} P(vote | y)`, computed stably in log
/// space.
pub fn observed_log_likelihood(
    m: &LabelMatrix,
    g: &GroupAssignment,
    skills: &[[f64; 2]],
    priors: [f64; 2],
) -> Result<f64> {
    check_aligned(m, g)?;
    for (a, &p) in priors.iter().enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::DegeneratePrior { group: a as u8, prior: p });
        }
    }
    let mut total = 0.0;
    for (t, task) in m.tasks().enumerate() {
        let a = g.group(t) as usize;
        let mut log_joint = [(1.0 - priors[a]).ln(), priors[a].ln()];
        for v in task {
            let p = skills[v.annotator][a];
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::DegenerateConfusion { annotator: v.annotator, group: a as u8 });
            }
            // Under y = 1 the vote is correct iff it is 1; under y = 0 iff 0.
            log_joint[1] += if v.label { p.ln() } else { (1.0 - p).ln() };
            log_joint[0] += if v.label { (1.0 - p).ln() } else { p.ln() };
        }
        let hi = log_joint[0].max(log_joint[1]);
        let lo = log_joint[0].min(log_joint[1]);
        total += hi + (lo - hi).exp().ln_1p();
    }
    Ok(total)
}
