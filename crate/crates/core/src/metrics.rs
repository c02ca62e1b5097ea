//! Fairness and accuracy measurement for hard and randomized predictions.

use std::io::Write as IoWrite;
use std::path::Path;

use crate::data::{check_aligned, GroupAssignment, LabelMatrix};
use crate::error::{Error, Result};

/// Group positive-prediction rates with optional accuracy metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FairnessReport {
    /// Mean positive-prediction probability per group, indexed by a.
    pub rate: [f64; 2],
    /// |rate\[1\] − rate\[0\]| ∈ [0, 1].
    pub dp_gap: f64,
    /// Binary F1 with positive class 1; absent without ground truth.
    pub f1: Option<f64>,
    /// Fraction of correct predictions; absent without ground truth.
    pub accuracy: Option<f64>,
}

/// Demographic-parity gap of per-task positive probabilities (hard labels are
/// the 0/1 special case). Probabilities are averaged exactly, so randomized
/// classifiers are evaluated in expectation without sampling.
pub fn dp_gap(pred: &[f64], g: &GroupAssignment) -> Result<FairnessReport> {
    if pred.len() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} tasks",
            pred.len(),
            g.n_tasks()
        )));
    }
    g.require_both_groups()?;
    let mut sum = [0.0f64; 2];
    let sizes = g.group_sizes();
    for (t, &p) in pred.iter().enumerate() {
        sum[g.group(t) as usize] += p;
    }
    let rate = [sum[0] / sizes[0] as f64, sum[1] / sizes[1] as f64];
    Ok(FairnessReport { rate, dp_gap: (rate[1] - rate[0]).abs(), f1: None, accuracy: None })
}

/// [`dp_gap`] over hard labels.
pub fn dp_gap_hard(pred: &[bool], g: &GroupAssignment) -> Result<FairnessReport> {
    let probs: Vec<f64> = pred.iter().map(|&b| f64::from(u8::from(b))).collect();
    dp_gap(&probs, g)
}

/// Standard binary F1 (positive class 1; 0 when precision + recall is 0) and
/// plain accuracy.
pub fn f1_accuracy(pred: &[bool], truth: &[bool]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig("cannot score an empty prediction list".into()));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut correct = 0usize;
    for (&p, &y) in pred.iter().zip(truth) {
        correct += usize::from(p == y);
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
    Ok((f1, correct as f64 / pred.len() as f64))
}

/// Per-annotator demographic-parity gap of the raw votes:
/// |mean(votes of r in group 1) − mean(votes of r in group 0)|.
///
/// Annotators with no votes in one of the groups get `None` instead of an
/// error, since real vote matrices are sparse.
pub fn annotator_dp_gaps(m: &LabelMatrix, g: &GroupAssignment) -> Result<Vec<Option<f64>>> {
    check_aligned(m, g)?;
    let mut ones = vec![[0usize; 2]; m.n_annotators()];
    let mut counts = vec![[0usize; 2]; m.n_annotators()];
    for (t, task) in m.tasks().enumerate() {
        let a = g.group(t) as usize;
        for v in task {
            counts[v.annotator][a] += 1;
            ones[v.annotator][a] += usize::from(v.label);
        }
    }
    Ok((0..m.n_annotators())
        .map(|r| {
            if counts[r][0] == 0 || counts[r][1] == 0 {
                None
            } else {
                let rate0 = ones[r][0] as f64 / counts[r][0] as f64;
                let rate1 = ones[r][1] as f64 / counts[r][1] as f64;
                Some((rate1 - rate0).abs())
            }
        })
        .collect())
}

/// One summary row of an evaluation run, as written to report CSVs.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub epsilon: Option<f64>,
    pub dp_gap: f64,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub seed: Option<u64>,
}

impl ReportRow {
    /// Builds a row from a report, with empty cells for absent metrics.
    pub fn new(method: impl Into<String>, report: &FairnessReport) -> Self {
        Self {
            method: method.into(),
            epsilon: None,
            dp_gap: report.dp_gap,
            f1: report.f1,
            accuracy: report.accuracy,
            seed: None,
        }
    }
}

fn opt_num<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes report rows as CSV (`method,epsilon,dp_gap,f1,accuracy,seed`) to
/// any writer; absent values become empty cells.
pub fn write_report<W: IoWrite>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["method", "epsilon", "dp_gap", "f1", "accuracy", "seed"])?;
    for row in rows {
        out.write_record([
            row.method.clone(),
            opt_num(row.epsilon),
            row.dp_gap.to_string(),
            opt_num(row.f1),
            opt_num(row.accuracy),
            opt_num(row.seed),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// [`write_report`] to a file path.
pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    write_report(std::fs::File::create(path)?, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn groups(bits: &[u8]) -> GroupAssignment {
        GroupAssignment::new(bits.to_vec(), None).unwrap()
    }

    #[test]
    fn all_ones_has_zero_gap() {
        let g = groups(&[0, 1, 0, 1]);
        let report = dp_gap_hard(&[true, true, true, true], &g).unwrap();
        assert_eq!(report.dp_gap, 0.0);
        assert_eq!(report.rate, [1.0, 1.0]);
    }

    #[test]
    fn single_task_per_group_extremes() {
        let g = groups(&[1, 0]);
        let report = dp_gap_hard(&[true, false], &g).unwrap();
        assert_eq!(report.dp_gap, 1.0);
    }

    /// A two-group population where group 1 splits 3:1 between cells with
    /// positive rates 0.8 and 0.2, and group 0 splits 1:3 between the same
    /// cells, has group rates (0.65, 0.35) and gap 0.30. Encoding each cell
    /// with exact task multiplicities (multiples of 4) keeps every mean a
    /// dyadic rational, so the gap is exact to full precision.
    #[test]
    fn weighted_population_gap_is_exact() {
        let mut pred = Vec::new();
        let mut grp = Vec::new();
        // group 1: 6 tasks at 0.8, 2 tasks at 0.2 -> rate 0.65
        for _ in 0..6 {
            pred.push(0.8);
            grp.push(1);
        }
        for _ in 0..2 {
            pred.push(0.2);
            grp.push(1);
        }
        // group 0: 2 tasks at 0.8, 6 tasks at 0.2 -> rate 0.35
        for _ in 0..2 {
            pred.push(0.8);
            grp.push(0);
        }
        for _ in 0..6 {
            pred.push(0.2);
            grp.push(0);
        }
        let report = dp_gap(&pred, &groups(&grp)).unwrap();
        assert!((report.dp_gap - 0.30).abs() <= 1e-12, "gap {} != 0.30", report.dp_gap);
        assert!((report.rate[1] - 0.65).abs() <= 1e-12);
        assert!((report.rate[0] - 0.35).abs() <= 1e-12);
    }

    #[test]
    fn gap_is_symmetric_under_group_relabeling() {
        let pred = [0.9, 0.1, 0.4, 0.8, 0.3];
        let g = groups(&[0, 1, 1, 0, 1]);
        let swapped = groups(&[1, 0, 0, 1, 0]);
        let a = dp_gap(&pred, &g).unwrap();
        let b = dp_gap(&pred, &swapped).unwrap();
        assert_abs_diff_eq!(a.dp_gap, b.dp_gap, epsilon = 1e-15);
        assert_eq!(a.rate[0], b.rate[1]);
        assert_eq!(a.rate[1], b.rate[0]);
    }

    #[test]
    fn empty_group_is_an_error() {
        let g = groups(&[1, 1]);
        assert!(matches!(dp_gap(&[0.5, 0.5], &g), Err(Error::EmptyGroup { group: 0 })));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = groups(&[0, 1]);
        assert!(matches!(dp_gap(&[0.5], &g), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn f1_and_accuracy_basics() {
        let truth = [true, false, true, false];
        assert_eq!(f1_accuracy(&truth, &truth).unwrap(), (1.0, 1.0));
        let flipped: Vec<bool> = truth.iter().map(|&b| !b).collect();
        let (f1, acc) = f1_accuracy(&flipped, &truth).unwrap();
        assert_eq!(f1, 0.0);
        assert_eq!(acc, 0.0);
        // TP = 2, FP = 1, FN = 1 -> F1 = 2/3.
        let pred = [true, true, true, false, false];
        let y = [true, true, false, true, false];
        let (f1, acc) = f1_accuracy(&pred, &y).unwrap();
        assert_abs_diff_eq!(f1, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(acc, 0.6, epsilon = 1e-15);
        // No positive predictions and no positive truth -> F1 defined as 0.
        let (f1, _) = f1_accuracy(&[false, false], &[false, false]).unwrap();
        assert_eq!(f1, 0.0);
    }

    #[test]
    fn annotator_gaps_report_absent_groups_as_none() {
        // Annotator 0 votes in both groups (rates 1 and 0); annotator 1 only
        // in group 1.
        let m = LabelMatrix::from_votes(
            3,
            2,
            vec![(0, 0, true), (1, 0, false), (0, 1, true), (2, 1, false)],
        )
        .unwrap();
        let g = groups(&[1, 0, 1]);
        let gaps = annotator_dp_gaps(&m, &g).unwrap();
        assert_eq!(gaps.len(), 2);
        assert_abs_diff_eq!(gaps[0].unwrap(), 1.0, epsilon = 1e-15);
        assert!(gaps[1].is_none());
    }

    #[test]
    fn annotator_gap_matches_rate_arithmetic() {
        // Annotator with vote rate 0.7 in group 1 (7 of 10) and 0.4 in group
        // 0 (4 of 10) -> gap 0.3.
        let mut votes = Vec::new();
        let mut grp = Vec::new();
        for t in 0..10 {
            votes.push((t, 0, t < 7));
            grp.push(1u8);
        }
        for t in 10..20 {
            votes.push((t, 0, t < 14));
            grp.push(0u8);
        }
        let m = LabelMatrix::from_votes(20, 1, votes).unwrap();
        let gaps = annotator_dp_gaps(&m, &groups(&grp)).unwrap();
        assert_abs_diff_eq!(gaps[0].unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn report_rows_serialize_with_empty_optionals() {
        let rows = vec![
            ReportRow {
                method: "mv".into(),
                epsilon: Some(0.05),
                dp_gap: 0.125,
                f1: Some(0.5),
                accuracy: Some(0.75),
                seed: Some(7),
            },
            ReportRow {
                method: "bayes".into(),
                epsilon: None,
                dp_gap: 0.25,
                f1: None,
                accuracy: None,
                seed: None,
            },
        ];
        let mut buf = Vec::new();
        write_report(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "method,epsilon,dp_gap,f1,accuracy,seed");
        assert_eq!(lines.next().unwrap(), "mv,0.05,0.125,0.5,0.75,7");
        assert_eq!(lines.next().unwrap(), "bayes,,0.25,,,");
    }
}
