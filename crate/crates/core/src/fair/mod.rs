//! Optimal ε-fair randomized post-processing of posterior tables.
//!
//! Given per-task posterior probabilities and a protected-group assignment,
//! [`fairify`] builds the randomized group-threshold classifier with the
//! smallest expected 0-1 risk among classifiers whose demographic-parity gap
//! is at most ε. The construction has three steps:
//!
//! 1. [`preprocess_posteriors`] spreads the upper tail of the posterior
//!    distribution so threshold crossings are well separated,
//! 2. [`minimize_m`] picks a dual weight β* by minimizing the smoothed
//!    penalized risk `M̂(β) = L̂(β) + ε·|β|`, which shifts each group's
//!    decision threshold to `τ_a = (π̂_a + s_a·β*)/(2·π̂_a)`,
//! 3. [`solve_omega`] picks per-group randomization weights ω_a that spend
//!    the probability mass sitting exactly on the thresholds so the achieved
//!    gap lands on the ε budget.

mod objective;
mod omega;
mod preprocess;

pub use objective::{l_exact, l_hat, minimize_m, BetaSearch};
pub use omega::{solve_omega, OmegaSolution};
pub use preprocess::preprocess_posteriors;

use std::path::Path;

use rand::Rng;

use crate::aggregate::PosteriorTable;
use crate::data::GroupAssignment;
use crate::error::{Error, Result};
use crate::rng::task_rng;

/// Tuning knobs for [`fairify`]. `new` fills every field except the fairness
/// budget with the standard defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FairConfig {
    /// Demographic-parity budget ε ≥ 0.
    pub epsilon: f64,
    /// Softmax temperature of the smoothed risk (default 1e−4).
    pub softmax_c: f64,
    /// Half-width of the threshold-equality band (default 1e−5; 0 makes the
    /// classifier fully deterministic).
    pub delta: f64,
    /// Width of the preprocessed upper tail [1 − α, 1] (default 0.04).
    pub alpha: f64,
    /// Half-width B of the β search interval [−B, B] (default 2).
    pub beta_bound: f64,
    /// Grid points per ω axis (default 101).
    pub omega_grid: usize,
}

impl FairConfig {
    /// Default configuration at fairness budget `epsilon`.
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = FairConfig {
            epsilon,
            softmax_c: 1e-4,
            delta: 1e-5,
            alpha: 0.04,
            beta_bound: 2.0,
            omega_grid: 101,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects out-of-range fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {} must be a finite value >= 0",
                self.epsilon
            )));
        }
        if !(self.softmax_c > 0.0 && self.softmax_c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "softmax_c = {} must be a finite value > 0",
                self.softmax_c
            )));
        }
        if !(self.delta >= 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "delta = {} must lie in [0, 0.5)",
                self.delta
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha = {} must lie in [0, 1)", self.alpha)));
        }
        if !(self.beta_bound > 0.0 && self.beta_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta_bound = {} must be a finite value > 0",
                self.beta_bound
            )));
        }
        if self.omega_grid < 2 {
            return Err(Error::InvalidConfig(format!(
                "omega_grid = {} must be at least 2",
                self.omega_grid
            )));
        }
        Ok(())
    }
}

/// Position of a posterior relative to its group's randomization band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Zone {
    Below,
    Band,
    Above,
}

/// Decision zone of a posterior against threshold `tau` with half-width
/// `delta`. Zones are half-open — Above means `phi1 ≥ τ + δ`, Below means
/// `phi1 < τ − δ`, and the band is `[τ − δ, τ + δ)` — so that `delta = 0`
/// degenerates to the deterministic tie-goes-positive rule `phi1 ≥ τ` with
/// an empty band.
pub(crate) fn zone(phi1: f64, tau: f64, delta: f64) -> Zone {
    if phi1 >= tau + delta {
        Zone::Above
    } else if phi1 < tau - delta {
        Zone::Below
    } else {
        Zone::Band
    }
}

/// Per-group thresholds `τ_a = (π̂_a + s_a·β)/(2·π̂_a)` with `s_a = 2a − 1`.
/// At β = 0 both thresholds are exactly ½.
pub(crate) fn thresholds(beta: f64, pi_hat: [f64; 2]) -> [f64; 2] {
    let mut tau = [0.0f64; 2];
    for (a, slot) in tau.iter_mut().enumerate() {
        let s = 2.0 * a as f64 - 1.0;
        *slot = (pi_hat[a] + s * beta) / (2.0 * pi_hat[a]);
    }
    tau
}

/// A fitted randomized group-threshold classifier: predict 1 above the
/// group's threshold band, 0 below it, and flip a coin with the group's
/// weight inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedClassifier {
    /// The dual weight selected by the β search (0 means the fairness
    /// constraint was inactive and the classifier is the plug-in rule).
    pub beta_star: f64,
    /// Per-group decision thresholds.
    pub tau: [f64; 2],
    /// Per-group randomization weights on the threshold band, each in [0,1].
    pub omega: [f64; 2],
    /// Band half-width δ.
    pub delta: f64,
    /// Estimated group marginals π̂_a = N_a/(N₀+N₁).
    pub pi_hat: [f64; 2],
    /// Gap left between the best achievable parity and the target when the
    /// band mass was too coarse to hit it exactly (0 on the usual path).
    pub residual: f64,
    /// The β search ended on the ±B boundary, so `beta_bound` was likely
    /// too small.
    pub at_boundary: bool,
}

impl RandomizedClassifier {
    /// Decision zone of a posterior for group `a`.
    pub fn zone(&self, phi1: f64, a: u8) -> Zone {
        zone(phi1, self.tau[a as usize], self.delta)
    }

    /// Probability of predicting 1 for a task with posterior `phi1` in
    /// group `a`.
    pub fn q(&self, phi1: f64, a: u8) -> f64 {
        match self.zone(phi1, a) {
            Zone::Above => 1.0,
            Zone::Below => 0.0,
            Zone::Band => self.omega[a as usize],
        }
    }

    /// Writes the classifier as CSV `a,tau,omega,pi_hat,beta_star,delta`
    /// (one row per group; the scalar columns repeat).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = csv::Writer::from_path(path)?;
        out.write_record(["a", "tau", "omega", "pi_hat", "beta_star", "delta"])?;
        for a in 0..2 {
            out.write_record([
                a.to_string(),
                self.tau[a].to_string(),
                self.omega[a].to_string(),
                self.pi_hat[a].to_string(),
                self.beta_star.to_string(),
                self.delta.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A fitted classifier together with the preprocessed posterior table it is
/// calibrated against. [`apply`] must receive these posteriors — the
/// thresholds are meaningless against the raw input table.
#[derive(Clone, Debug, PartialEq)]
pub struct FairifyResult {
    pub classifier: RandomizedClassifier,
    pub posteriors: PosteriorTable,
}

/// Fits the optimal ε-fair randomized classifier on a posterior table:
/// preprocesses the upper tail, estimates the group marginals, minimizes the
/// penalized risk over β, snaps the minimizer to the exact objective's
/// nearest kink, and solves for the randomization weights.
pub fn fairify(
    p: &PosteriorTable,
    g: &GroupAssignment,
    cfg: &FairConfig,
) -> Result<FairifyResult> {
    cfg.validate()?;
    if p.n_tasks() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "{} posterior entries for {} tasks",
            p.n_tasks(),
            g.n_tasks()
        )));
    }
    g.require_both_groups()?;

    let pre = preprocess_posteriors(p, cfg.alpha)?;
    let sizes = g.group_sizes();
    let n = (sizes[0] + sizes[1]) as f64;
    let pi_hat = [sizes[0] as f64 / n, sizes[1] as f64 / n];

    let search = minimize_m(&pre, g, pi_hat, cfg)?;
    let beta_star = objective::snap_to_kink(search.beta_star, &pre, g, pi_hat, cfg)?;
    let tau = thresholds(beta_star, pi_hat);
    let sol = solve_omega(beta_star, &pre, g, pi_hat, cfg)?;

    Ok(FairifyResult {
        classifier: RandomizedClassifier {
            beta_star,
            tau,
            omega: sol.omega,
            delta: cfg.delta,
            pi_hat,
            residual: sol.residual,
            at_boundary: search.at_boundary,
        },
        posteriors: pre,
    })
}

/// Evaluates the classifier on every task: returns the per-task positive
/// probabilities q and one hard labeling sampled from them (independent
/// Bernoulli draws on per-task substreams of `seed`). Tasks with q = 0 or
/// q = 1 are deterministic regardless of the seed.
pub fn apply(
    rc: &RandomizedClassifier,
    p: &PosteriorTable,
    g: &GroupAssignment,
    seed: u64,
) -> Result<(Vec<f64>, Vec<bool>)> {
    if p.n_tasks() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "{} posterior entries for {} tasks",
            p.n_tasks(),
            g.n_tasks()
        )));
    }
    let q: Vec<f64> = p.phi1.iter().enumerate().map(|(t, &phi)| rc.q(phi, g.group(t))).collect();
    let labels = q
        .iter()
        .enumerate()
        .map(|(t, &qt)| task_rng(seed, t).random::<f64>() < qt)
        .collect();
    Ok((q, labels))
}

/// Writes per-task randomized predictions as CSV `task_id,q,label`.
pub fn write_predictions_csv(
    path: &Path,
    task_ids: &[String],
    q: &[f64],
    labels: &[bool],
) -> Result<()> {
    if task_ids.len() != q.len() || q.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} task ids, {} probabilities, {} labels",
            task_ids.len(),
            q.len(),
            labels.len()
        )));
    }
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["task_id", "q", "label"])?;
    for (t, id) in task_ids.iter().enumerate() {
        out.write_record([id.as_str(), &q[t].to_string(), if labels[t] { "1" } else { "0" }])?;
    }
    out.flush()?;
    Ok(())
}
