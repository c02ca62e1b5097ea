//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by data loading, validation, and estimation routines.
#[derive(Error, Debug)]
#[non_exhaustive]
pub enum Error {
    /// Underlying I/O failure while reading or writing files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV transport (unbalanced quotes, wrong field counts, ...).
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A CSV file did not start with the expected header row.
    #[error("{file}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        file: String,
        expected: &'static str,
        found: String,
    },

    /// A CSV record failed validation (bad label, conflicting duplicate, ...).
    #[error("{file}: line {line}: {message}")]
    BadRecord {
        file: String,
        line: u64,
        message: String,
    },

    /// The same annotator voted twice on the same task.
    #[error("duplicate vote by annotator `{annotator_id}` on task `{task_id}`")]
    DuplicateVote {
        task_id: String,
        annotator_id: String,
    },

    /// A voted-on task has no protected-group row.
    #[error("task `{task_id}` appears in the votes file but not in the groups file")]
    MissingGroup { task_id: String },

    /// Ground truth was supplied but does not cover a voted-on task.
    #[error("task `{task_id}` has no ground-truth row")]
    MissingTruth { task_id: String },

    /// A task carries no votes at all.
    #[error("task {task_id} has no votes")]
    EmptyTask { task_id: String },

    /// An operation that compares the two protected groups found one empty.
    #[error("group {group} contains no tasks")]
    EmptyGroup { group: u8 },

    /// A parameter is outside its admissible range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation needs ground-truth labels that were not provided.
    #[error("ground truth required: {0}")]
    TruthRequired(String),

    /// A confusion-matrix cell has no observations and no smoothing.
    #[error(
        "no votes observed for annotator {annotator} in group {group} with true class {class}; \
         use smoothing > 0"
    )]
    EmptyCell {
        annotator: usize,
        group: u8,
        class: u8,
    },

    /// A class prior of exactly 0 or 1 makes the posterior degenerate.
    #[error(
        "class prior for group {group} is {prior}; posterior weighting needs a prior strictly \
         inside (0, 1)"
    )]
    DegeneratePrior { group: u8, prior: f64 },

    /// A confusion probability of exactly 0 or 1 makes the log-odds infinite.
    #[error(
        "annotator {annotator} has a confusion probability of exactly 0 or 1 for group {group}; \
         posterior weighting needs probabilities strictly inside (0, 1)"
    )]
    DegenerateConfusion { annotator: usize, group: u8 },

    /// Two per-task slices that must align have different lengths.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
