//! The 1-D penalized-risk objective whose minimizer sets the group
//! thresholds.
//!
//! Each task in group a contributes the better of its two class scores
//! `v_k = π̂_a·Φ̂_k − (β/2)·s_a·s_k` (signs s = 2·{a,k} − 1): the fairness
//! weight β makes predicting 1 cheaper in one group and dearer in the other.
//! `L̂` smooths the per-item maximum with a softmax so the β search sees a
//! smooth function; `l_exact` keeps the hard maximum, which is the true
//! piecewise-linear objective.

use crate::aggregate::PosteriorTable;
use crate::data::GroupAssignment;
use crate::error::{Error, Result};
use crate::fair::FairConfig;
use crate::opt::grid_then_golden;

fn group_mean_sum(
    beta: f64,
    p: &PosteriorTable,
    g: &GroupAssignment,
    pi_hat: [f64; 2],
    combine: &dyn Fn(f64, f64) -> f64,
) -> Result<f64> {
    if p.n_tasks() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "{} posterior entries for {} tasks",
            p.n_tasks(),
            g.n_tasks()
        )));
    }
    g.require_both_groups()?;
    let sizes = g.group_sizes();
    let mut sum = [0.0f64; 2];
    for (t, &phi) in p.phi1.iter().enumerate() {
        let a = g.group(t) as usize;
        let s = 2.0 * a as f64 - 1.0;
        let shift = 0.5 * beta * s;
        // v_k = π̂_a·Φ̂_k − (β/2)·s_a·s_k with s_0 = −1, s_1 = +1.
        let v0 = pi_hat[a] * (1.0 - phi) + shift;
        let v1 = pi_hat[a] * phi - shift;
        sum[a] += combine(v0, v1);
    }
    Ok(sum[0] / sizes[0] as f64 + sum[1] / sizes[1] as f64)
}

/// Softmax-weighted average of two values at temperature `c`: a smooth
/// approximation of the maximum from below, with bias at most ≈ 0.2785·c
/// (the maximum of d·σ(−d/c) over the value gap d).
fn soft_max(v0: f64, v1: f64, c: f64) -> f64 {
    let m = v0.max(v1);
    let e0 = ((v0 - m) / c).exp();
    let e1 = ((v1 - m) / c).exp();
    (e0 * v0 + e1 * v1) / (e0 + e1)
}

/// Smoothed risk surrogate `L̂(β)`: the sum over groups of the group mean of
/// softmax-smoothed per-item score maxima.
pub fn l_hat(
    beta: f64,
    p: &PosteriorTable,
    g: &GroupAssignment,
    pi_hat: [f64; 2],
    c: f64,
) -> Result<f64> {
    group_mean_sum(beta, p, g, pi_hat, &|v0, v1| soft_max(v0, v1, c))
}

/// Hard-max counterpart of [`l_hat`]: the exact piecewise-linear objective.
pub fn l_exact(beta: f64, p: &PosteriorTable, g: &GroupAssignment, pi_hat: [f64; 2]) -> Result<f64> {
    group_mean_sum(beta, p, g, pi_hat, &f64::max)
}

/// Result of the β search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSearch {
    /// Selected minimizer of `M̂(β) = L̂(β) + ε·|β|` (exactly 0 when the
    /// minimum there is indistinguishable from the global one).
    pub beta_star: f64,
    /// Objective value at `beta_star`.
    pub m_at_star: f64,
    /// Objective value at 0, the plug-in classifier.
    pub m_at_zero: f64,
    /// The minimizer landed on the ±`beta_bound` boundary.
    pub at_boundary: bool,
}

/// Minimizes `M̂(β) = L̂(β) + ε·|β|` over [−B, B]: a 401-point uniform grid
/// (which contains 0 exactly) picks the best bracket, golden-section search
/// refines it to width 1e−8, plateau ties within 1e−12 resolve toward the
/// smallest |β|, and a minimizer whose value is within 1e−10 of `M̂(0)`
/// snaps to exactly 0 — the constraint is then considered inactive and the
/// plug-in classifier is recovered.
pub fn minimize_m(
    p: &PosteriorTable,
    g: &GroupAssignment,
    pi_hat: [f64; 2],
    cfg: &FairConfig,
) -> Result<BetaSearch> {
    cfg.validate()?;
    // First call validates the inputs once; the search closure can then
    // unwrap freely on the same data.
    let m_at_zero = l_hat(0.0, p, g, pi_hat, cfg.softmax_c)?;

    const HALF_POINTS: i64 = 200; // 401 grid points including exact 0
    let b = cfg.beta_bound;
    let grid: Vec<f64> =
        (-HALF_POINTS..=HALF_POINTS).map(|i| i as f64 * b / HALF_POINTS as f64).collect();
    let mut objective = |beta: f64| {
        l_hat(beta, p, g, pi_hat, cfg.softmax_c).expect("inputs were validated above")
            + cfg.epsilon * beta.abs()
    };
    let (found, value) = grid_then_golden(&mut objective, &grid, 1e-8, 1e-12, f64::abs);

    let (beta_star, m_at_star) =
        if (value - m_at_zero).abs() < 1e-10 { (0.0, m_at_zero) } else { (found, value) };
    let at_boundary = b - beta_star.abs() <= 1e-6;
    Ok(BetaSearch { beta_star, m_at_star, m_at_zero, at_boundary })
}

/// Snaps a nonzero β to the best nearby kink of the exact objective.
///
/// The exact objective is piecewise linear with kinks where an item's two
/// scores tie: `β = s_a·π̂_a·(2·Φ̂₁ − 1)`. Its minima sit on kinks, but the
/// softmax smoothing biases the located minimizer off them by O(c) — enough
/// to push the kink item strictly to one side of the threshold band, which
/// would strand the randomization weights with nothing to randomize. Snap:
/// evaluate the exact objective at every kink within max(20·c, 1e−9) of the
/// candidate and keep the argmin (ties toward smallest |β|; the candidate
/// itself competes).
pub(super) fn snap_to_kink(
    beta: f64,
    p: &PosteriorTable,
    g: &GroupAssignment,
    pi_hat: [f64; 2],
    cfg: &FairConfig,
) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let radius = (20.0 * cfg.softmax_c).max(1e-9);
    let exact_m =
        |b: f64| -> Result<f64> { Ok(l_exact(b, p, g, pi_hat)? + cfg.epsilon * b.abs()) };
    let mut best = beta;
    let mut best_value = exact_m(beta)?;
    for (t, &phi) in p.phi1.iter().enumerate() {
        let a = g.group(t) as usize;
        let s = 2.0 * a as f64 - 1.0;
        let kink = s * pi_hat[a] * (2.0 * phi - 1.0);
        if (kink - beta).abs() > radius {
            continue;
        }
        let v = exact_m(kink)?;
        if v < best_value - 1e-12 || (v <= best_value + 1e-12 && kink.abs() < best.abs()) {
            best = kink;
            best_value = v;
        }
    }
    Ok(best)
}
