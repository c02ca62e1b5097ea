//! Vote matrices, group assignments, and dataset generation/loading.
//!
//! The canonical in-memory representation is a sparse [`LabelMatrix`] (a list
//! of votes per task) paired with a [`GroupAssignment`] giving each task's
//! protected-group value and, optionally, its ground-truth label.

mod csv_io;
mod split;
mod synthetic;

pub use csv_io::{load_csv, save_csv, LoadedData};
pub use split::train_test_split;
pub use synthetic::{generate_synthetic, Scenario, SkillProfile, SyntheticConfig};

use crate::error::{Error, Result};

/// One annotator's vote on one task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vote {
    /// Annotator index in `0..n_annotators`.
    pub annotator: usize,
    /// The submitted binary label (`true` = class 1).
    pub label: bool,
}

/// Sparse task-by-annotator vote matrix.
///
/// Invariants enforced at construction: every task holds at least one vote,
/// at most one vote per (task, annotator) pair, and all annotator indices lie
/// in `0..n_annotators`. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMatrix {
    n_annotators: usize,
    votes: Vec<Vec<Vote>>,
}

impl LabelMatrix {
    /// Builds a matrix from `(task, annotator, label)` triples.
    ///
    /// Vote order within a task follows the iteration order of `votes`.
    pub fn from_votes<I>(n_tasks: usize, n_annotators: usize, votes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, bool)>,
    {
        if n_tasks == 0 {
            return Err(Error::InvalidConfig("a label matrix needs at least one task".into()));
        }
        let mut by_task: Vec<Vec<Vote>> = vec![Vec::new(); n_tasks];
        for (task, annotator, label) in votes {
            if task >= n_tasks {
                return Err(Error::InvalidConfig(format!(
                    "vote references task index {task}, but n_tasks = {n_tasks}"
                )));
            }
            if annotator >= n_annotators {
                return Err(Error::InvalidConfig(format!(
                    "vote references annotator index {annotator}, but n_annotators = {n_annotators}"
                )));
            }
            if by_task[task].iter().any(|v| v.annotator == annotator) {
                return Err(Error::DuplicateVote {
                    task_id: task.to_string(),
                    annotator_id: annotator.to_string(),
                });
            }
            by_task[task].push(Vote { annotator, label });
        }
        if let Some(empty) = by_task.iter().position(Vec::is_empty) {
            return Err(Error::EmptyTask { task_id: empty.to_string() });
        }
        Ok(Self { n_annotators, votes: by_task })
    }

    /// Number of tasks.
    pub fn n_tasks(&self) -> usize {
        self.votes.len()
    }

    /// Number of annotators (the index space; some may have no votes).
    pub fn n_annotators(&self) -> usize {
        self.n_annotators
    }

    /// The votes on task `task`, in insertion order.
    pub fn task_votes(&self, task: usize) -> &[Vote] {
        &self.votes[task]
    }

    /// Iterates over tasks as vote slices, in task order.
    pub fn tasks(&self) -> impl Iterator<Item = &[Vote]> {
        self.votes.iter().map(Vec::as_slice)
    }

    /// Total number of votes across all tasks.
    pub fn n_votes(&self) -> usize {
        self.votes.iter().map(Vec::len).sum()
    }
}

/// Per-task protected-group assignment (a ∈ {0, 1}) with optional per-task
/// ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAssignment {
    group: Vec<u8>,
    truth: Option<Vec<bool>>,
}

impl GroupAssignment {
    /// Builds an assignment; group values must be 0 or 1 and `truth`, when
    /// present, must align with `group`.
    pub fn new(group: Vec<u8>, truth: Option<Vec<bool>>) -> Result<Self> {
        if group.is_empty() {
            return Err(Error::InvalidConfig("a group assignment needs at least one task".into()));
        }
        if let Some(bad) = group.iter().position(|&a| a > 1) {
            return Err(Error::InvalidConfig(format!(
                "group value {} at task index {bad} is not 0 or 1",
                group[bad]
            )));
        }
        if let Some(t) = &truth {
            if t.len() != group.len() {
                return Err(Error::LengthMismatch(format!(
                    "truth has {} entries but groups have {}",
                    t.len(),
                    group.len()
                )));
            }
        }
        Ok(Self { group, truth })
    }

    /// Number of tasks.
    pub fn n_tasks(&self) -> usize {
        self.group.len()
    }

    /// The group of task `task`.
    pub fn group(&self, task: usize) -> u8 {
        self.group[task]
    }

    /// All group values, indexed by task.
    pub fn groups(&self) -> &[u8] {
        &self.group
    }

    /// Ground-truth labels, if present.
    pub fn truth(&self) -> Option<&[bool]> {
        self.truth.as_deref()
    }

    /// Ground truth or an error naming the operation that needs it.
    pub fn require_truth(&self, what: &str) -> Result<&[bool]> {
        self.truth().ok_or_else(|| Error::TruthRequired(what.into()))
    }

    /// Task counts per group, indexed by group value.
    pub fn group_sizes(&self) -> [usize; 2] {
        let n1 = self.group.iter().filter(|&&a| a == 1).count();
        [self.group.len() - n1, n1]
    }

    /// Errors unless both groups contain at least one task.
    pub fn require_both_groups(&self) -> Result<()> {
        let sizes = self.group_sizes();
        for a in 0..2u8 {
            if sizes[a as usize] == 0 {
                return Err(Error::EmptyGroup { group: a });
            }
        }
        Ok(())
    }
}

/// Errors unless the matrix and assignment describe the same task list.
pub fn check_aligned(m: &LabelMatrix, g: &GroupAssignment) -> Result<()> {
    if m.n_tasks() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "label matrix has {} tasks but group assignment has {}",
            m.n_tasks(),
            g.n_tasks()
        )));
    }
    Ok(())
}
