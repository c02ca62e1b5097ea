//! Exact Poisson-binomial computations: the distribution of a sum of
//! independent, non-identical Bernoulli variables, which governs majority
//! vote tails.

use crate::error::{Error, Result};

fn validate_probs(l: &[f64]) -> Result<()> {
    if l.is_empty() {
        return Err(Error::InvalidConfig("need at least one success probability".into()));
    }
    for &p in l {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("success probability {p} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Exact pmf of `S = Σ_i Bernoulli(l[i])` over `{0, ..., R}` by the standard
/// O(R²) convolution dynamic program. The result sums to 1 up to 1e-12.
pub fn poisson_binomial_pmf(l: &[f64]) -> Result<Vec<f64>> {
    validate_probs(l)?;
    let mut pmf = vec![0.0f64; l.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in l.iter().enumerate() {
        for k in (0..=i + 1).rev() {
            let carried = if k > 0 { pmf[k - 1] * p } else { 0.0 };
            pmf[k] = pmf[k] * (1.0 - p) + carried;
        }
    }
    Ok(pmf)
}

/// Strict-majority mass `P(S > R/2)` of the Poisson binomial with parameters
/// `l` (R = `l.len()`).
pub fn mv_strict_tail(l: &[f64]) -> Result<f64> {
    let pmf = poisson_binomial_pmf(l)?;
    let r = l.len();
    // Smallest integer strictly above R/2: R/2 + 1 for even R, (R+1)/2 odd.
    let first = r / 2 + 1;
    Ok(pmf[first..].iter().sum())
}

/// Sensitivity of the strict-majority tail `F = P(S > R/2)` in the r-th
/// success probability: `∂F/∂l_r = P(Σ_{s≠r} = floor(R/2))`, the leave-one-out
/// pmf at the pivotal count.
pub fn mv_tail_derivative(l: &[f64], r: usize) -> Result<f64> {
    validate_probs(l)?;
    if r >= l.len() {
        return Err(Error::InvalidConfig(format!(
            "annotator index {r} out of range for {} marginals",
            l.len()
        )));
    }
    if l.len() == 1 {
        // F = l_0 once S > 1/2 means S = 1; the empty leave-one-out sum is 0
        // with probability 1, and floor(1/2) = 0.
        return Ok(1.0);
    }
    let rest: Vec<f64> = l
        .iter()
        .enumerate()
        .filter_map(|(s, &p)| (s != r).then_some(p))
        .collect();
    let pmf = poisson_binomial_pmf(&rest)?;
    Ok(pmf[l.len() / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exhaustive oracle: walk all 2^R outcomes, accumulating each outcome's
    /// probability into its sum-of-successes bucket.
    fn enumeration_pmf(l: &[f64]) -> Vec<f64> {
        let r = l.len();
        let mut pmf = vec![0.0f64; r + 1];
        for mask in 0u32..(1 << r) {
            let mut p = 1.0;
            let mut ones = 0usize;
            for (i, &li) in l.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    p *= li;
                    ones += 1;
                } else {
                    p *= 1.0 - li;
                }
            }
            pmf[ones] += p;
        }
        pmf
    }

    #[test]
    fn fair_coins_give_binomial_eighths() {
        let pmf = poisson_binomial_pmf(&[0.5, 0.5, 0.5]).unwrap();
        let expected = [0.125, 0.375, 0.375, 0.125];
        for (got, want) in pmf.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn degenerate_probabilities_give_point_mass() {
        let pmf = poisson_binomial_pmf(&[1.0, 1.0]).unwrap();
        assert_eq!(pmf, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn two_variable_expansion_matches_hand_arithmetic() {
        let pmf = poisson_binomial_pmf(&[0.2, 0.7]).unwrap();
        assert_abs_diff_eq!(pmf[0], 0.8 * 0.3, epsilon = 1e-15); // 0.24
        assert_abs_diff_eq!(pmf[1], 0.2 * 0.3 + 0.8 * 0.7, epsilon = 1e-15); // 0.62
        assert_abs_diff_eq!(pmf[2], 0.2 * 0.7, epsilon = 1e-15); // 0.14
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(poisson_binomial_pmf(&[]).is_err());
        assert!(poisson_binomial_pmf(&[1.1]).is_err());
        assert!(poisson_binomial_pmf(&[-0.1]).is_err());
    }

    #[test]
    fn matches_enumeration_on_random_instances() {
        let mut rng = crate::rng::stream_rng(2024, 0);
        for _ in 0..100 {
            let r = rng.random_range(1..=12);
            let l: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
            let fast = poisson_binomial_pmf(&l).unwrap();
            let slow = enumeration_pmf(&l);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12, "pmf mismatch: {a} vs {b}");
            }
            let total: f64 = fast.iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_fair_coins_pivotal_mass_is_half() {
        // R = 3, leave out the first: P(two fair coins sum to 1) = 1/2.
        let d = mv_tail_derivative(&[0.5, 0.5, 0.5], 0).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn pivotal_mass_of_degenerate_pair_is_zero() {
        // Leave out the third: Y1 + Y2 = 2 always, never floor(3/2) = 1.
        let d = mv_tail_derivative(&[1.0, 1.0, 0.3], 2).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn derivative_index_validation() {
        assert!(mv_tail_derivative(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn strict_tail_threshold_is_strict() {
        // R = 2: S > 1 means S = 2 only.
        let t = mv_strict_tail(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(t, 0.25, epsilon = 1e-15);
        // R = 3: S > 1.5 means S ∈ {2, 3}: 3/8 + 1/8.
        let t = mv_strict_tail(&[0.5, 0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-15);
    }

    proptest! {
        /// The analytic tail sensitivity equals the central finite difference
        /// of F. F is multilinear in each coordinate, so the central
        /// difference is exact up to floating-point noise.
        #[test]
        fn derivative_matches_finite_difference(seed in 0u64..300) {
            let mut rng = crate::rng::stream_rng(seed, 1);
            let r_total = rng.random_range(2usize..=15);
            let l: Vec<f64> = (0..r_total)
                .map(|_| 0.01 + 0.98 * rng.random::<f64>())
                .collect();
            let r = rng.random_range(0..r_total);
            let analytic = mv_tail_derivative(&l, r).unwrap();

            let h = 1e-6;
            let mut plus = l.clone();
            plus[r] = (l[r] + h).min(1.0);
            let mut minus = l.clone();
            minus[r] = (l[r] - h).max(0.0);
            let fd = (mv_strict_tail(&plus).unwrap() - mv_strict_tail(&minus).unwrap())
                / (plus[r] - minus[r]);
            prop_assert!((analytic - fd).abs() <= 1e-6, "analytic {analytic} vs fd {fd}");
        }
    }
}
