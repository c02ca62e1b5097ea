//! Upper-tail spreading of posterior tables.

use crate::aggregate::PosteriorTable;
use crate::error::{Error, Result};

/// Remaps the posteriors in the upper tail [1 − α, 1] onto an even grid:
/// the k-th smallest tail value (stable ascending order, 1-based rank k
/// among m tail values) becomes k/m, so the largest becomes exactly 1 and
/// crossings inside the tail are separated by 1/m. Values below 1 − α and
/// empty tails are left untouched.
///
/// Aggregators can emit posteriors arbitrarily close together near 1, where
/// a shifted threshold would otherwise cross many items at once; spreading
/// the tail makes the downstream threshold search stable. Only the upper
/// tail is remapped — the construction thresholds on the probability of the
/// positive class, so only crossings near 1 need separating.
pub fn preprocess_posteriors(p: &PosteriorTable, alpha: f64) -> Result<PosteriorTable> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let cutoff = 1.0 - alpha;
    let mut tail: Vec<usize> =
        (0..p.phi1.len()).filter(|&t| p.phi1[t] >= cutoff).collect();
    if tail.is_empty() {
        return Ok(p.clone());
    }
    // Stable sort: equal posteriors keep their task order, so ranks are
    // deterministic.
    tail.sort_by(|&i, &j| p.phi1[i].partial_cmp(&p.phi1[j]).expect("posteriors are not NaN"));

    let mut phi1 = p.phi1.clone();
    let m = tail.len() as f64;
    for (rank0, &t) in tail.iter().enumerate() {
        phi1[t] = (rank0 + 1) as f64 / m;
    }
    Ok(PosteriorTable { phi1, source: p.source })
}
