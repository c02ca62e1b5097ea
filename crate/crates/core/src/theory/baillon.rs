//! The sharp universal constant bounding any Poisson-binomial pmf value by
//! η/σ, where σ is the distribution's standard deviation.

use crate::opt::golden_min;

/// The objective `h(λ) = √(2λ) · e^{−2λ} · Σ_k (λ^k / k!)²`, whose maximum
/// over λ ≥ 0 is the constant. The series is summed with a running term
/// ratio (`t_k = t_{k−1} · (λ/k)²`) and truncated once the remaining tail is
/// below 1e−16 of the partial sum, far inside the 1e−14 accuracy target.
pub fn baillon_h(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 1u32;
    loop {
        let ratio = lambda / f64::from(k);
        term *= ratio * ratio;
        sum += term;
        k += 1;
        // Once the ratio drops below 1, the tail is geometric-dominated:
        // remaining mass < term · r²/(1 − r²) with r = λ/k < 1.
        if ratio < 0.9 && term < 1e-16 * sum {
            break;
        }
        debug_assert!(k < 10_000, "series failed to converge at lambda = {lambda}");
    }
    (2.0 * lambda).sqrt() * (-2.0 * lambda).exp() * sum
}

/// The maximum of [`baillon_h`] over λ, ≈ 0.4688: a 200-point scan of
/// [1e−6, 10] followed by golden-section refinement.
///
/// Sanity anchors: h vanishes as λ → 0 (the √(2λ) factor) and decays toward
/// the asymptote 1/√(2π) ≈ 0.3989 from its single interior maximum.
pub fn baillon_eta() -> f64 {
    const LO: f64 = 1e-6;
    const HI: f64 = 10.0;
    const SCAN: usize = 200;
    let step = (HI - LO) / (SCAN - 1) as f64;
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..SCAN {
        let v = baillon_h(LO + step * i as f64);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = LO + step * best.saturating_sub(1) as f64;
    let hi = LO + step * ((best + 1).min(SCAN - 1)) as f64;
    let mut neg = |lambda: f64| -baillon_h(lambda);
    let (_, neg_max) = golden_min(&mut neg, lo, hi, 1e-10);
    (-neg_max).max(best_val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_matches_the_known_constant() {
        let eta = baillon_eta();
        assert!((0.4687..=0.4689).contains(&eta), "eta = {eta}");
    }

    #[test]
    fn h_vanishes_at_the_origin() {
        assert_eq!(baillon_h(0.0), 0.0);
        assert!(baillon_h(1e-6) < 0.01);
    }

    #[test]
    fn h_decays_past_the_maximum_toward_the_asymptote() {
        let eta = baillon_eta();
        let at_ten = baillon_h(10.0);
        assert!(at_ten < eta);
        // Large-λ limit is 1/√(2π) ≈ 0.39894; h(10) should sit near it.
        let asymptote = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((at_ten - asymptote).abs() < 0.01, "h(10) = {at_ten}");
    }

    #[test]
    fn series_is_stable_at_large_lambda() {
        // e^{-2λ}·Σ(λ^k/k!)² stays bounded; no overflow or NaN.
        let v = baillon_h(50.0);
        assert!(v.is_finite());
        let asymptote = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - asymptote).abs() < 0.002, "h(50) = {v}");
    }

    /// η/σ uniformly bounds every pmf value of random Poisson binomials.
    #[test]
    fn eta_over_sigma_bounds_all_pmf_values() {
        use crate::theory::poisson_binomial_pmf;
        use rand::Rng;
        let eta = baillon_eta();
        let mut rng = crate::rng::stream_rng(77, 0);
        for _ in 0..10_000 {
            let r = rng.random_range(1usize..=30);
            let l: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
            let variance: f64 = l.iter().map(|p| p * (1.0 - p)).sum();
            if variance == 0.0 {
                continue; // bound is vacuous (infinite) for degenerate sums
            }
            let bound = eta / variance.sqrt();
            let pmf = poisson_binomial_pmf(&l).unwrap();
            let max = pmf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(
                max <= bound + 1e-12,
                "sup pmf {max} exceeds eta/sigma = {bound} for l = {l:?}"
            );
        }
    }
}
