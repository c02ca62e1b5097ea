//! Posterior-weighted aggregation under a confusion model.

use crate::aggregate::{ConfusionModel, PosteriorTable, Source};
use crate::data::{check_aligned, GroupAssignment, LabelMatrix};
use crate::error::{Error, Result};

/// P̂(Y = 1 | observed votes, group) per task.
///
/// Computed in log space: the posterior odds against class 1 are
/// `(1 − prior)/prior · Π_r P(vote_r | Y=0) / P(vote_r | Y=1)`, with the
/// product running only over the annotators who actually voted on the task.
/// The result is `1 / (1 + odds_against)`.
///
/// Requires interior probabilities: a prior of exactly 0 or 1, or a used
/// confusion entry of exactly 0 or 1, makes the log-odds infinite and is
/// rejected.
pub fn bayes_posterior(
    m: &LabelMatrix,
    g: &GroupAssignment,
    cm: &ConfusionModel,
) -> Result<PosteriorTable> {
    check_aligned(m, g)?;
    if cm.n_annotators() < m.n_annotators() {
        return Err(Error::LengthMismatch(format!(
            "confusion model covers {} annotators but the matrix has {}",
            cm.n_annotators(),
            m.n_annotators()
        )));
    }

    let mut log_prior_odds_against = [0.0f64; 2];
    for a in 0..2u8 {
        let prior = cm.prior(a);
        if prior <= 0.0 || prior >= 1.0 {
            // Only reject groups that actually occur; checked lazily below.
            log_prior_odds_against[a as usize] = f64::NAN;
        } else {
            log_prior_odds_against[a as usize] = ((1.0 - prior) / prior).ln();
        }
    }

    let mut phi1 = Vec::with_capacity(m.n_tasks());
    for (t, task) in m.tasks().enumerate() {
        let a = g.group(t);
        let base = log_prior_odds_against[a as usize];
        if base.is_nan() {
            return Err(Error::DegeneratePrior { group: a, prior: cm.prior(a) });
        }
        let mut log_odds_against = base;
        for v in task {
            let k = u8::from(v.label);
            let under_one = cm.prob(v.annotator, a, 1, k);
            let under_zero = cm.prob(v.annotator, a, 0, k);
            if under_one <= 0.0
                || under_one >= 1.0
                || under_zero <= 0.0
                || under_zero >= 1.0
            {
                return Err(Error::DegenerateConfusion { annotator: v.annotator, group: a });
            }
            log_odds_against += under_zero.ln() - under_one.ln();
        }
        phi1.push(1.0 / (1.0 + log_odds_against.exp()));
    }
    Ok(PosteriorTable { phi1, source: Source::Bayes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single_group(n: usize) -> GroupAssignment {
        GroupAssignment::new(vec![0; n], None).unwrap()
    }

    /// Brute-force oracle: P(Y=1 | votes) = P(Y=1, votes) / P(votes), with
    /// the joint computed as prior × product of per-vote confusion entries.
    /// Works for any vote pattern and any (possibly two-coin) model.
    fn enumeration_posterior(
        votes: &[(usize, bool)],
        a: u8,
        cm: &ConfusionModel,
    ) -> f64 {
        let mut joint = [0.0f64; 2];
        for y in 0..2u8 {
            let mut p = if y == 1 { cm.prior(a) } else { 1.0 - cm.prior(a) };
            for &(r, label) in votes {
                p *= cm.prob(r, a, y, u8::from(label));
            }
            joint[y as usize] = p;
        }
        joint[1] / (joint[0] + joint[1])
    }

    #[test]
    fn single_annotator_recovers_its_skill() {
        let cm = ConfusionModel::from_skills(&[[0.9, 0.9]], [0.5, 0.5]).unwrap();
        let m = LabelMatrix::from_votes(1, 1, vec![(0, 0, true)]).unwrap();
        let p = bayes_posterior(&m, &single_group(1), &cm).unwrap();
        assert_abs_diff_eq!(p.phi1[0], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn equal_skills_opposite_votes_cancel() {
        let cm = ConfusionModel::from_skills(&[[0.8, 0.8], [0.8, 0.8]], [0.5, 0.5]).unwrap();
        let m = LabelMatrix::from_votes(1, 2, vec![(0, 0, true), (0, 1, false)]).unwrap();
        let p = bayes_posterior(&m, &single_group(1), &cm).unwrap();
        assert_abs_diff_eq!(p.phi1[0], 0.5, epsilon = 1e-12);
    }

    /// Three annotators with skills (0.9, 0.8, 0.6) voting (1, 1, 0) under a
    /// flat prior. The odds in favor of class 1 are
    /// (0.9/0.1)·(0.8/0.2)·(0.4/0.6) = 24, so the posterior is 24/25 = 0.96.
    /// The enumeration oracle is the authority; the closed-form constant is
    /// frozen from it.
    #[test]
    fn three_annotator_fixture_matches_enumeration_oracle() {
        let cm =
            ConfusionModel::from_skills(&[[0.9, 0.9], [0.8, 0.8], [0.6, 0.6]], [0.5, 0.5]).unwrap();
        let votes = [(0usize, true), (1usize, true), (2usize, false)];
        let oracle = enumeration_posterior(&votes, 0, &cm);
        assert_abs_diff_eq!(oracle, 0.96, epsilon = 1e-12);

        let m = LabelMatrix::from_votes(
            1,
            3,
            votes.iter().map(|&(r, label)| (0, r, label)),
        )
        .unwrap();
        let p = bayes_posterior(&m, &single_group(1), &cm).unwrap();
        assert_abs_diff_eq!(p.phi1[0], oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi1[0], 0.96, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_prior_is_rejected_only_when_used() {
        let cm = ConfusionModel::from_skills(&[[0.9, 0.9]], [1.0, 0.5]).unwrap();
        let m = LabelMatrix::from_votes(1, 1, vec![(0, 0, true)]).unwrap();
        // Group 0 has the degenerate prior and is used -> error.
        let err = bayes_posterior(&m, &single_group(1), &cm).unwrap_err();
        assert!(matches!(err, Error::DegeneratePrior { group: 0, .. }));
        // Only group 1 used -> fine.
        let g1 = GroupAssignment::new(vec![1], None).unwrap();
        assert!(bayes_posterior(&m, &g1, &cm).is_ok());
    }

    #[test]
    fn degenerate_confusion_entry_is_rejected() {
        let cm = ConfusionModel::from_skills(&[[1.0, 0.9]], [0.5, 0.5]).unwrap();
        let m = LabelMatrix::from_votes(1, 1, vec![(0, 0, true)]).unwrap();
        let err = bayes_posterior(&m, &single_group(1), &cm).unwrap_err();
        assert!(matches!(err, Error::DegenerateConfusion { annotator: 0, group: 0 }));
    }

    #[test]
    fn product_runs_only_over_observed_votes() {
        // Second annotator exists in the model but did not vote; its skill
        // must not influence the posterior.
        let cm_a =
            ConfusionModel::from_skills(&[[0.9, 0.9], [0.99, 0.99]], [0.5, 0.5]).unwrap();
        let cm_b =
            ConfusionModel::from_skills(&[[0.9, 0.9], [0.51, 0.51]], [0.5, 0.5]).unwrap();
        let m = LabelMatrix::from_votes(1, 2, vec![(0, 0, true)]).unwrap();
        let pa = bayes_posterior(&m, &single_group(1), &cm_a).unwrap();
        let pb = bayes_posterior(&m, &single_group(1), &cm_b).unwrap();
        assert_eq!(pa.phi1, pb.phi1);
    }

    proptest! {
        /// Log-space aggregation equals the brute-force joint-probability
        /// oracle on random small instances, including two-coin models and
        /// partial vote patterns.
        #[test]
        fn matches_enumeration_on_random_instances(
            seed in 0u64..500,
            n_annotators in 1usize..5,
        ) {
            use rand::Rng;
            let mut rng = crate::rng::stream_rng(seed, 0);
            let mut tables = Vec::new();
            for _ in 0..n_annotators {
                let mut cell = [[[0.0; 2]; 2]; 2];
                for a in 0..2 {
                    for y in 0..2 {
                        let p1 = 0.05 + 0.9 * rng.random::<f64>();
                        cell[a][y][1] = p1;
                        cell[a][y][0] = 1.0 - p1;
                    }
                }
                tables.push(cell);
            }
            let prior = [
                0.05 + 0.9 * rng.random::<f64>(),
                0.05 + 0.9 * rng.random::<f64>(),
            ];
            let cm = ConfusionModel::from_tables(tables, prior).unwrap();

            let a: u8 = u8::from(rng.random::<f64>() < 0.5);
            // Random non-empty subset of annotators votes.
            let votes: Vec<(usize, bool)> = (0..n_annotators)
                .filter_map(|r| {
                    if rng.random::<f64>() < 0.7 {
                        Some((r, rng.random::<f64>() < 0.5))
                    } else {
                        None
                    }
                })
                .collect();
            prop_assume!(!votes.is_empty());

            let oracle = enumeration_posterior(&votes, a, &cm);
            let m = LabelMatrix::from_votes(
                1,
                n_annotators,
                votes.iter().map(|&(r, label)| (0, r, label)),
            )
            .unwrap();
            let g = GroupAssignment::new(vec![a], None).unwrap();
            let p = bayes_posterior(&m, &g, &cm).unwrap();
            prop_assert!((p.phi1[0] - oracle).abs() <= 1e-12);
        }
    }
}
