//! Synthetic crowdsourcing data with group-conditional annotator skills.
//!
//! Generation model, per task: draw the protected group `a`, then the true
//! label `y` given `a`, select a fixed-size subset of the annotator pool
//! uniformly without replacement, and let each selected annotator report `y`
//! with probability equal to its skill for group `a` (one-coin noise), else
//! `1 - y`.
//!
//! Skills are drawn once per (annotator, group) pair from a uniform interval
//! on the dedicated global RNG stream; each task consumes its own RNG
//! substream, so generating a longer dataset with the same seed reproduces
//! the shorter dataset's tasks bit-for-bit.

use rand::seq::index::sample;
use rand::Rng;

use crate::data::{GroupAssignment, LabelMatrix};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, task_rng, GLOBAL_STREAM};

/// Configuration for [`generate_synthetic`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticConfig {
    /// Number of tasks to generate.
    pub n_tasks: usize,
    /// Total number of annotators in the pool.
    pub pool_size: usize,
    /// Number of distinct annotators sampled per task.
    pub votes_per_task: usize,
    /// P(A = 1).
    pub p_group1: f64,
    /// P(Y = 1 | A = a), indexed by a.
    pub p_pos: [f64; 2],
    /// Uniform skill interval `[lo, hi]` per group, indexed by a.
    pub skill_range: [[f64; 2]; 2],
    /// Top-level seed; all draws derive from it.
    pub seed: u64,
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 {
            return Err(Error::InvalidConfig("n_tasks must be at least 1".into()));
        }
        if self.votes_per_task == 0 || self.votes_per_task > self.pool_size {
            return Err(Error::InvalidConfig(format!(
                "votes_per_task must satisfy 1 <= v <= pool_size, got v = {}, pool = {}",
                self.votes_per_task, self.pool_size
            )));
        }
        for p in [self.p_group1, self.p_pos[0], self.p_pos[1]] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("probability {p} outside [0, 1]")));
            }
        }
        for range in self.skill_range {
            let [lo, hi] = range;
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "skill interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
                )));
            }
        }
        Ok(())
    }
}

/// True group-conditional skills of a generated annotator pool:
/// `skills[r][a]` = P(vote of annotator r = Y | A = a).
#[derive(Clone, Debug, PartialEq)]
pub struct SkillProfile {
    pub skills: Vec<[f64; 2]>,
}

impl SkillProfile {
    /// Number of annotators in the pool.
    pub fn n_annotators(&self) -> usize {
        self.skills.len()
    }

    /// Skill of annotator `r` for group `a`.
    pub fn skill(&self, r: usize, a: u8) -> f64 {
        self.skills[r][a as usize]
    }
}

/// The three synthetic skill regimes used throughout the experiments:
/// competent crowds (skills well above chance, group 1 slightly stronger),
/// adversarial crowds (skills mostly below chance), and uninformative crowds
/// (skills pinned to a narrow band around ½).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Competent,
    Adversarial,
    Uninformative,
}

impl Scenario {
    /// The per-group uniform skill intervals defining the regime.
    pub fn skill_range(self) -> [[f64; 2]; 2] {
        match self {
            Scenario::Competent => [[0.5, 1.0], [0.6, 1.0]],
            Scenario::Adversarial => [[0.2, 0.6], [0.1, 0.6]],
            Scenario::Uninformative => [[0.49, 0.51], [0.49, 0.51]],
        }
    }

    /// Balanced-group, balanced-class configuration in which every annotator
    /// labels every task (pool size = votes per task = `r`).
    pub fn full_panel_config(self, n_tasks: usize, r: usize, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_tasks,
            pool_size: r,
            votes_per_task: r,
            p_group1: 0.5,
            p_pos: [0.5, 0.5],
            skill_range: self.skill_range(),
            seed,
        }
    }

    /// Stable lowercase name for CLI and CSV use.
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Competent => "competent",
            Scenario::Adversarial => "adversarial",
            Scenario::Uninformative => "uninformative",
        }
    }

    /// All three regimes, in canonical order.
    pub fn all() -> [Scenario; 3] {
        [Scenario::Competent, Scenario::Adversarial, Scenario::Uninformative]
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "competent" => Ok(Scenario::Competent),
            "adversarial" => Ok(Scenario::Adversarial),
            "uninformative" => Ok(Scenario::Uninformative),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario `{other}` (expected competent, adversarial, or uninformative)"
            ))),
        }
    }
}

/// Generates a synthetic dataset under `cfg`. Identical configs (including
/// the seed) produce bit-identical output.
///
/// Per-task draw order on the task's substream: group, truth, annotator
/// subset, then one correctness coin per selected annotator in ascending
/// annotator order.
pub fn generate_synthetic(
    cfg: &SyntheticConfig,
) -> Result<(LabelMatrix, GroupAssignment, SkillProfile)> {
    cfg.validate()?;

    let mut skill_rng = stream_rng(cfg.seed, GLOBAL_STREAM);
    let mut skills = Vec::with_capacity(cfg.pool_size);
    for _ in 0..cfg.pool_size {
        let mut per_group = [0.0; 2];
        for (a, slot) in per_group.iter_mut().enumerate() {
            let [lo, hi] = cfg.skill_range[a];
            *slot = lo + (hi - lo) * skill_rng.random::<f64>();
        }
        skills.push(per_group);
    }

    let mut groups = Vec::with_capacity(cfg.n_tasks);
    let mut truth = Vec::with_capacity(cfg.n_tasks);
    let mut votes: Vec<(usize, usize, bool)> = Vec::with_capacity(cfg.n_tasks * cfg.votes_per_task);
    for t in 0..cfg.n_tasks {
        let mut rng = task_rng(cfg.seed, t);
        let a: u8 = u8::from(rng.random::<f64>() < cfg.p_group1);
        let y = rng.random::<f64>() < cfg.p_pos[a as usize];
        let mut chosen = sample(&mut rng, cfg.pool_size, cfg.votes_per_task).into_vec();
        chosen.sort_unstable();
        for r in chosen {
            let correct = rng.random::<f64>() < skills[r][a as usize];
            votes.push((t, r, if correct { y } else { !y }));
        }
        groups.push(a);
        truth.push(y);
    }

    let matrix = LabelMatrix::from_votes(cfg.n_tasks, cfg.pool_size, votes)?;
    let assignment = GroupAssignment::new(groups, Some(truth))?;
    Ok((matrix, assignment, SkillProfile { skills }))
}
