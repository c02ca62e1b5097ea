//! Group-conditional annotator confusion models.

use crate::data::{check_aligned, GroupAssignment, LabelMatrix};
use crate::error::{Error, Result};

/// Per-annotator, per-group confusion probabilities with group class priors.
///
/// `prob(r, a, y, k)` = P(annotator r votes k | true class y, group a). Rows
/// over k sum to 1 for every (r, a, y). In one-coin models the diagonal is a
/// single skill per (r, a): P(vote = truth) regardless of the true class.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionModel {
    /// `table[r][a][y][k]`.
    table: Vec<[[[f64; 2]; 2]; 2]>,
    /// P(Y = 1 | A = a).
    prior: [f64; 2],
    one_coin: bool,
}

impl ConfusionModel {
    /// Builds a model from full per-annotator tables. Each `table[r][a][y]`
    /// row must sum to 1 (tolerance 1e-9) with entries in [0, 1].
    pub fn from_tables(table: Vec<[[[f64; 2]; 2]; 2]>, prior: [f64; 2]) -> Result<Self> {
        for (r, per_annotator) in table.iter().enumerate() {
            for (a, per_group) in per_annotator.iter().enumerate() {
                for (y, row) in per_group.iter().enumerate() {
                    for &p in row {
                        if !(0.0..=1.0).contains(&p) {
                            return Err(Error::InvalidConfig(format!(
                                "confusion probability {p} for annotator {r}, group {a}, class {y} \
                                 outside [0, 1]"
                            )));
                        }
                    }
                    if (row[0] + row[1] - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidConfig(format!(
                            "confusion row for annotator {r}, group {a}, class {y} sums to {}",
                            row[0] + row[1]
                        )));
                    }
                }
            }
        }
        for (a, &p) in prior.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "class prior {p} for group {a} outside [0, 1]"
                )));
            }
        }
        Ok(Self { table, prior, one_coin: false })
    }

    /// Builds a one-coin model: annotator r votes the true class with
    /// probability `skills[r][a]` in group a, on either class.
    pub fn from_skills(skills: &[[f64; 2]], prior: [f64; 2]) -> Result<Self> {
        let table = skills
            .iter()
            .enumerate()
            .map(|(r, per_group)| {
                let mut cell = [[[0.0; 2]; 2]; 2];
                for (a, &p) in per_group.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidConfig(format!(
                            "skill {p} for annotator {r}, group {a} outside [0, 1]"
                        )));
                    }
                    for y in 0..2 {
                        cell[a][y][y] = p;
                        cell[a][y][1 - y] = 1.0 - p;
                    }
                }
                Ok(cell)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::from_tables(table, prior)?;
        model.one_coin = true;
        Ok(model)
    }

    /// Number of annotators covered.
    pub fn n_annotators(&self) -> usize {
        self.table.len()
    }

    /// P(annotator `r` votes `k` | true class `y`, group `a`).
    pub fn prob(&self, r: usize, a: u8, y: u8, k: u8) -> f64 {
        self.table[r][a as usize][y as usize][k as usize]
    }

    /// P(vote = truth) for annotator `r` in group `a`; in a one-coin model
    /// this is the single skill parameter (both diagonal entries coincide).
    pub fn skill(&self, r: usize, a: u8) -> f64 {
        self.table[r][a as usize][1][1]
    }

    /// P(Y = 1 | A = a).
    pub fn prior(&self, a: u8) -> f64 {
        self.prior[a as usize]
    }

    /// Whether the model was built with a single accuracy per (r, a).
    pub fn is_one_coin(&self) -> bool {
        self.one_coin
    }
}

/// Estimates a full confusion model by counting against ground truth, with
/// additive (Laplace) smoothing.
///
/// `prob(r,a,y,1) = (count(vote=1, Y=y, A=a, by r) + smoothing) /
/// (count(Y=y, A=a, voted by r) + 2·smoothing)`; the class prior is the raw
/// truth frequency per group. With `smoothing = 0`, any (r, a, y) cell in
/// which `r` cast no votes is an error.
pub fn estimate_confusion(
    m: &LabelMatrix,
    g: &GroupAssignment,
    smoothing: f64,
) -> Result<ConfusionModel> {
    check_aligned(m, g)?;
    let truth = g.require_truth("confusion estimation counts votes against ground truth")?;
    g.require_both_groups()?;
    if !(smoothing >= 0.0) {
        return Err(Error::InvalidConfig(format!("smoothing must be ≥ 0, got {smoothing}")));
    }

    let mut ones = vec![[[0usize; 2]; 2]; m.n_annotators()];
    let mut totals = vec![[[0usize; 2]; 2]; m.n_annotators()];
    for (t, task) in m.tasks().enumerate() {
        let a = g.group(t) as usize;
        let y = usize::from(truth[t]);
        for v in task {
            totals[v.annotator][a][y] += 1;
            ones[v.annotator][a][y] += usize::from(v.label);
        }
    }

    let mut table = vec![[[[0.0; 2]; 2]; 2]; m.n_annotators()];
    for r in 0..m.n_annotators() {
        for a in 0..2 {
            for y in 0..2 {
                let n = totals[r][a][y] as f64;
                if n == 0.0 && smoothing == 0.0 {
                    return Err(Error::EmptyCell { annotator: r, group: a as u8, class: y as u8 });
                }
                let p1 = (ones[r][a][y] as f64 + smoothing) / (n + 2.0 * smoothing);
                table[r][a][y][1] = p1;
                table[r][a][y][0] = 1.0 - p1;
            }
        }
    }

    let sizes = g.group_sizes();
    let mut pos = [0usize; 2];
    for (t, &y) in truth.iter().enumerate() {
        pos[g.group(t) as usize] += usize::from(y);
    }
    let prior = [pos[0] as f64 / sizes[0] as f64, pos[1] as f64 / sizes[1] as f64];
    ConfusionModel::from_tables(table, prior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// 4 tasks in group 0 with truth 1; annotator 0 votes 1 on three of them.
    /// Plus one group-1 task voted on both classes' worth of cells via a
    /// second annotator so every cell is populated for annotator 0 where
    /// needed.
    fn counting_fixture() -> (LabelMatrix, GroupAssignment) {
        // tasks 0..4: group 0, truth 1, annotator 0 votes 1,1,1,0
        // tasks 4..6: group 0, truth 0, annotator 0 votes 0,1
        // tasks 6..8: group 1, truth 1 and 0, annotator 0 votes 1, 0
        let votes = vec![
            (0, 0, true),
            (1, 0, true),
            (2, 0, true),
            (3, 0, false),
            (4, 0, false),
            (5, 0, true),
            (6, 0, true),
            (7, 0, false),
        ];
        let m = LabelMatrix::from_votes(8, 1, votes).unwrap();
        let g = GroupAssignment::new(
            vec![0, 0, 0, 0, 0, 0, 1, 1],
            Some(vec![true, true, true, true, false, false, true, false]),
        )
        .unwrap();
        (m, g)
    }

    #[test]
    fn raw_counting_matches_fractions() {
        let (m, g) = counting_fixture();
        let cm = estimate_confusion(&m, &g, 0.0).unwrap();
        // 3 correct of 4 on (Y=1, A=0).
        assert_abs_diff_eq!(cm.prob(0, 0, 1, 1), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(cm.prob(0, 0, 1, 0), 0.25, epsilon = 1e-15);
        // 1 of 2 votes were 1 on (Y=0, A=0).
        assert_abs_diff_eq!(cm.prob(0, 0, 0, 1), 0.5, epsilon = 1e-15);
        // priors: group 0 has 4 positives of 6; group 1 has 1 of 2.
        assert_abs_diff_eq!(cm.prior(0), 4.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cm.prior(1), 0.5, epsilon = 1e-15);
        assert!(!cm.is_one_coin());
    }

    #[test]
    fn perfect_annotator_without_smoothing_hits_probability_one() {
        // Annotator 0 votes the truth everywhere; all four (a, y) cells
        // populated.
        let votes = vec![(0, 0, true), (1, 0, false), (2, 0, true), (3, 0, false)];
        let m = LabelMatrix::from_votes(4, 1, votes).unwrap();
        let g = GroupAssignment::new(
            vec![0, 0, 1, 1],
            Some(vec![true, false, true, false]),
        )
        .unwrap();
        let cm = estimate_confusion(&m, &g, 0.0).unwrap();
        for a in 0..2 {
            for y in 0..2 {
                assert_eq!(cm.prob(0, a, y, y), 1.0);
            }
        }
    }

    #[test]
    fn empty_cell_with_laplace_smoothing_defaults_to_half() {
        // Annotator 1 never votes on a (Y=1, A=1) task.
        let votes = vec![(0, 0, true), (1, 0, false), (1, 1, false), (2, 0, true), (3, 0, false)];
        let m = LabelMatrix::from_votes(4, 2, votes).unwrap();
        let g = GroupAssignment::new(
            vec![0, 0, 1, 1],
            Some(vec![true, false, true, false]),
        )
        .unwrap();
        let cm = estimate_confusion(&m, &g, 1.0).unwrap();
        assert_abs_diff_eq!(cm.prob(1, 1, 1, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn empty_cell_without_smoothing_is_an_error() {
        let votes = vec![(0, 0, true), (1, 0, false), (1, 1, false), (2, 0, true), (3, 0, false)];
        let m = LabelMatrix::from_votes(4, 2, votes).unwrap();
        let g = GroupAssignment::new(
            vec![0, 0, 1, 1],
            Some(vec![true, false, true, false]),
        )
        .unwrap();
        let err = estimate_confusion(&m, &g, 0.0).unwrap_err();
        assert!(matches!(err, Error::EmptyCell { annotator: 1, .. }));
    }

    #[test]
    fn truth_is_required() {
        let m = LabelMatrix::from_votes(2, 1, vec![(0, 0, true), (1, 0, false)]).unwrap();
        let g = GroupAssignment::new(vec![0, 1], None).unwrap();
        assert!(matches!(estimate_confusion(&m, &g, 1.0), Err(Error::TruthRequired(_))));
    }

    #[test]
    fn rows_sum_to_one_on_synthetic_data() {
        use crate::data::{generate_synthetic, Scenario, SyntheticConfig};
        let cfg = SyntheticConfig {
            n_tasks: 300,
            pool_size: 8,
            votes_per_task: 4,
            p_group1: 0.5,
            p_pos: [0.6, 0.4],
            skill_range: Scenario::Competent.skill_range(),
            seed: 3,
        };
        let (m, g, _) = generate_synthetic(&cfg).unwrap();
        let cm = estimate_confusion(&m, &g, 1.0).unwrap();
        for r in 0..m.n_annotators() {
            for a in 0..2u8 {
                for y in 0..2u8 {
                    let sum = cm.prob(r, a, y, 0) + cm.prob(r, a, y, 1);
                    assert!((sum - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_coin_construction_is_symmetric() {
        let cm = ConfusionModel::from_skills(&[[0.9, 0.8]], [0.5, 0.5]).unwrap();
        assert!(cm.is_one_coin());
        assert_eq!(cm.prob(0, 0, 1, 1), 0.9);
        assert_eq!(cm.prob(0, 0, 0, 0), 0.9);
        assert_eq!(cm.prob(0, 0, 1, 0), 1.0 - 0.9);
        assert_eq!(cm.skill(0, 1), 0.8);
    }

    #[test]
    fn invalid_rows_are_rejected() {
        let bad = vec![[[[0.7, 0.7], [0.3, 0.7]], [[0.5, 0.5], [0.5, 0.5]]]];
        assert!(ConfusionModel::from_tables(bad, [0.5, 0.5]).is_err());
        assert!(ConfusionModel::from_skills(&[[1.2, 0.5]], [0.5, 0.5]).is_err());
    }
}
