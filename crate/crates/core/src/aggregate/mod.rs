//! Label aggregation: from noisy votes to per-task posterior estimates.

mod bayes;
mod confusion;
mod dawid_skene;
mod majority;

pub use bayes::bayes_posterior;
pub use confusion::{estimate_confusion, ConfusionModel};
pub use dawid_skene::{dawid_skene, DawidSkeneFit, DawidSkeneOptions};
pub use majority::majority_vote;

use std::path::Path;

use crate::error::Result;

/// Which aggregator produced a posterior table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    MajorityVote,
    Bayes,
    DawidSkene,
}

impl Source {
    /// Stable lowercase name for CLI and CSV use.
    pub fn as_str(self) -> &'static str {
        match self {
            Source::MajorityVote => "mv",
            Source::Bayes => "bayes",
            Source::DawidSkene => "ds",
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mv" => Ok(Source::MajorityVote),
            "bayes" => Ok(Source::Bayes),
            "ds" => Ok(Source::DawidSkene),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown aggregation method `{other}` (expected mv, bayes, or ds)"
            ))),
        }
    }
}

/// Per-task estimates of P(Y = 1 | votes, group). The probability of class 0
/// is `1 - phi1` by definition.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorTable {
    /// P̂(Y = 1 | ·) per task, each in [0, 1].
    pub phi1: Vec<f64>,
    /// The aggregator that produced the table.
    pub source: Source,
}

impl PosteriorTable {
    /// Number of tasks covered.
    pub fn n_tasks(&self) -> usize {
        self.phi1.len()
    }

    /// Hard labels under the posterior-majority rule: 1 iff phi1 ≥ ½ (ties
    /// predict 1).
    pub fn harden(&self) -> Vec<bool> {
        self.phi1.iter().map(|&p| p >= 0.5).collect()
    }

    /// Writes the table as CSV `task_id,phi1,label,source`, with hard labels
    /// from [`PosteriorTable::harden`].
    pub fn write_csv(&self, path: &Path, task_ids: &[String]) -> Result<()> {
        if task_ids.len() != self.n_tasks() {
            return Err(crate::error::Error::LengthMismatch(format!(
                "{} task ids for {} posterior entries",
                task_ids.len(),
                self.n_tasks()
            )));
        }
        let mut out = csv::Writer::from_path(path)?;
        out.write_record(["task_id", "phi1", "label", "source"])?;
        let labels = self.harden();
        for (t, id) in task_ids.iter().enumerate() {
            out.write_record([
                id.as_str(),
                &self.phi1[t].to_string(),
                if labels[t] { "1" } else { "0" },
                self.source.as_str(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harden_uses_ties_to_one_rule() {
        let table = PosteriorTable { phi1: vec![0.5, 0.4999, 1.0, 0.0], source: Source::MajorityVote };
        assert_eq!(table.harden(), vec![true, false, true, false]);
    }

    #[test]
    fn source_names_round_trip() {
        for s in [Source::MajorityVote, Source::Bayes, Source::DawidSkene] {
            assert_eq!(s.as_str().parse::<Source>().unwrap(), s);
        }
        assert!("em".parse::<Source>().is_err());
    }

    #[test]
    fn csv_export_writes_one_row_per_task() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posteriors.csv");
        let table = PosteriorTable { phi1: vec![2.0 / 3.0, 0.25], source: Source::Bayes };
        table.write_csv(&path, &["t1".into(), "t2".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "task_id,phi1,label,source");
        assert_eq!(lines.next().unwrap(), format!("t1,{},1,bayes", 2.0 / 3.0));
        assert_eq!(lines.next().unwrap(), "t2,0.25,0,bayes");
    }
}
