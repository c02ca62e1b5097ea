//! Majority vote: the equal-weight aggregator.

use crate::aggregate::{PosteriorTable, Source};
use crate::data::LabelMatrix;

/// Fraction of positive votes per task. Hardening the result applies the
/// "at least half" rule, so an even split predicts 1.
pub fn majority_vote(m: &LabelMatrix) -> PosteriorTable {
    let phi1 = m
        .tasks()
        .map(|task| {
            let ones = task.iter().filter(|v| v.label).count();
            ones as f64 / task.len() as f64
        })
        .collect();
    PosteriorTable { phi1, source: Source::MajorityVote }
}
