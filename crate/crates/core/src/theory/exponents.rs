//! Error exponents: the rate constants in the exponential decay of an
//! aggregator's conditional error probability as the crowd grows.

use crate::error::{Error, Result};
use crate::opt::golden_min;

fn validate_skills(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidConfig("need at least one skill".into()));
    }
    for &pi in p {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::InvalidConfig(format!("skill {pi} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Error exponent of posterior-weighted aggregation over a crowd with skills
/// `p`: the mean of `−ln(2√(p_i(1 − p_i)))`.
///
/// A perfectly informative skill (0 or 1) contributes `+∞`, making the whole
/// exponent infinite — the error probability is exactly zero at any crowd
/// size, and `e^{−R·∞}` evaluates to exactly 0 downstream. A skill of ½
/// contributes 0.
pub fn bayes_exponent(p: &[f64]) -> Result<f64> {
    validate_skills(p)?;
    let mut sum = 0.0f64;
    for &pi in p {
        if pi == 0.0 || pi == 1.0 {
            return Ok(f64::INFINITY);
        }
        sum += -(2.0 * (pi * (1.0 - pi)).sqrt()).ln();
    }
    Ok(sum / p.len() as f64)
}

/// Chernoff-style error exponent of majority vote over a crowd with skills
/// `p`: `−min_{t ∈ (0,1]} (1/R) Σ_i ln(p_i t + (1 − p_i)/t)`.
///
/// The minimization runs a 200-point log-spaced scan of `[1e−6, 1]` followed
/// by golden-section refinement of the best bracket. For a homogeneous crowd
/// the optimum is `t* = √((1−p)/p)` capped at 1, which the tests use as a
/// closed-form cross-check.
pub fn mv_exponent(p: &[f64]) -> Result<f64> {
    validate_skills(p)?;
    let r = p.len() as f64;
    let objective = |t: f64| -> f64 {
        let mut sum = 0.0;
        for &pi in p {
            sum += (pi * t + (1.0 - pi) / t).ln();
        }
        sum / r
    };

    const T_MIN: f64 = 1e-6;
    const SCAN: usize = 200;
    // Log-spaced scan points from T_MIN to 1.
    let step = (1.0f64 / T_MIN).ln() / (SCAN - 1) as f64;
    let grid: Vec<f64> = (0..SCAN).map(|i| T_MIN * (step * i as f64).exp()).collect();
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let v = objective(t);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut f = objective;
    let (_, refined) = golden_min(&mut f, lo, hi, 1e-12);
    let min_val = refined.min(best_val);
    // The exponent is the negated minimum; clip the tiny negative zero that
    // the t = 1 endpoint can produce for uninformative crowds.
    Ok(if min_val == 0.0 { 0.0 } else { -min_val })
}
