//! Randomization weights for the threshold bands.
//!
//! After the β search fixes the per-group thresholds, every task sits in one
//! of three zones: above its group's band (always predicted 1), below it
//! (always 0), or inside it. The expected positive rate of group `a` is then
//!
//! ```text
//! rate_a(ω_a) = (#above_a + ω_a · #band_a) / N_a
//! ```
//!
//! and [`solve_omega`] picks the pair ω = (ω₀, ω₁) that lands the signed gap
//! `rate₁ − rate₀` on the fairness budget: at `+ε` when β* > 0 (group 1's
//! threshold was raised, so the unconstrained gap pointed that way), at `−ε`
//! when β* < 0, and anywhere inside `[−ε, ε]` when β* = 0.

use crate::aggregate::PosteriorTable;
use crate::data::GroupAssignment;
use crate::error::{Error, Result};

use super::{thresholds, zone, FairConfig, Zone};

/// Distance ties within this window are broken by randomization mass instead
/// of floating-point noise. Kept absolute (rather than scaled with the grid
/// pitch) so a coarse grid cannot admit genuinely worse pairs.
const DISTANCE_TIE_TOL: f64 = 1e-9;

/// Mass (ω₀ + ω₁) ties within this window are broken lexicographically.
const MASS_TIE_TOL: f64 = 1e-12;

/// Outcome of the randomization-weight search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaSolution {
    /// Per-group probability of predicting 1 inside the threshold band.
    pub omega: [f64; 2],
    /// Distance between the achieved parity gap and its target — 0 whenever
    /// the band mass suffices to hit the budget exactly, positive when the
    /// bands are empty or the grid too coarse.
    pub residual: f64,
}

/// Solves for the band randomization weights given the selected dual weight
/// `beta_star`.
///
/// Two exact shortcuts come first: if β* = 0 and the unbiased coin
/// ω = (½, ½) already satisfies |gap| ≤ ε, it is returned as-is (preferring
/// the symmetric coin over spending less mass); if both bands are empty, ω
/// is irrelevant and (0, 0) is returned with the unreachable distance as the
/// residual. Otherwise the weights are scanned over a uniform
/// `omega_grid × omega_grid` lattice on [0, 1]²: among the pairs whose gap
/// distance ties with the minimum (within [`DISTANCE_TIE_TOL`]), the one
/// spending the least total randomization mass wins, with mass ties broken
/// towards small ω₀ then small ω₁. The returned residual is the picked
/// pair's own distance.
pub fn solve_omega(
    beta_star: f64,
    p: &PosteriorTable,
    g: &GroupAssignment,
    pi_hat: [f64; 2],
    cfg: &FairConfig,
) -> Result<OmegaSolution> {
    cfg.validate()?;
    if p.n_tasks() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "{} posterior entries for {} tasks",
            p.n_tasks(),
            g.n_tasks()
        )));
    }
    g.require_both_groups()?;

    let tau = thresholds(beta_star, pi_hat);
    let mut n = [0usize; 2];
    let mut above = [0usize; 2];
    let mut band = [0usize; 2];
    for (t, &phi) in p.phi1.iter().enumerate() {
        let a = g.group(t) as usize;
        n[a] += 1;
        match zone(phi, tau[a], cfg.delta) {
            Zone::Above => above[a] += 1,
            Zone::Band => band[a] += 1,
            Zone::Below => {}
        }
    }

    let gap = |w: [f64; 2]| -> f64 {
        let rate = |a: usize| (above[a] as f64 + w[a] * band[a] as f64) / n[a] as f64;
        rate(1) - rate(0)
    };
    let distance = |gap: f64| -> f64 {
        if beta_star > 0.0 {
            (gap - cfg.epsilon).abs()
        } else if beta_star < 0.0 {
            (gap + cfg.epsilon).abs()
        } else {
            (gap.abs() - cfg.epsilon).max(0.0)
        }
    };

    if beta_star == 0.0 && distance(gap([0.5, 0.5])) == 0.0 {
        return Ok(OmegaSolution { omega: [0.5, 0.5], residual: 0.0 });
    }
    if band == [0, 0] {
        return Ok(OmegaSolution { omega: [0.0, 0.0], residual: distance(gap([0.0, 0.0])) });
    }

    let pts = cfg.omega_grid;
    let value = |i: usize| i as f64 / (pts - 1) as f64;

    // Pass 1: the exact minimum distance over the lattice.
    let mut best = f64::INFINITY;
    for i in 0..pts {
        for j in 0..pts {
            let d = distance(gap([value(i), value(j)]));
            if d < best {
                best = d;
            }
        }
    }

    // Pass 2: among near-minimal pairs (scanned in lexicographic order),
    // keep the first one per mass window, so mass ties resolve towards
    // small ω₀ then small ω₁.
    let mut picked = [0.0f64; 2];
    let mut picked_mass = f64::INFINITY;
    let mut picked_d = f64::INFINITY;
    for i in 0..pts {
        for j in 0..pts {
            let w = [value(i), value(j)];
            let d = distance(gap(w));
            if d > best + DISTANCE_TIE_TOL {
                continue;
            }
            let mass = w[0] + w[1];
            if mass < picked_mass - MASS_TIE_TOL {
                picked = w;
                picked_mass = mass;
                picked_d = d;
            }
        }
    }
    Ok(OmegaSolution { omega: picked, residual: picked_d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::Source;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn table(phi1: Vec<f64>) -> PosteriorTable {
        PosteriorTable { phi1, source: Source::MajorityVote }
    }

    fn groups(g: Vec<u8>) -> GroupAssignment {
        GroupAssignment::new(g, None).unwrap()
    }

    #[test]
    fn band_mass_lands_the_gap_exactly_on_the_budget() {
        // β* = 0.1 with π̂ = (½, ½) puts the thresholds at (0.4, 0.6).
        // Group 1 has one task above (0.9) and one on the band (0.6);
        // group 0 has one above (0.45) and one below (0.1). The gap is
        // ω₁/2, so ω₁ = ½ hits the target ε = 0.25 exactly, and every ω₀
        // ties — the mass tiebreak must zero it out.
        let p = table(vec![0.45, 0.1, 0.9, 0.6]);
        let g = groups(vec![0, 0, 1, 1]);
        let cfg = FairConfig::new(0.25).unwrap();
        let sol = solve_omega(0.1, &p, &g, [0.5, 0.5], &cfg).unwrap();
        assert_eq!(sol.omega, [0.0, 0.5]);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn feasible_plug_in_rule_keeps_the_unbiased_coin() {
        // β* = 0 and the coin ω = (½, ½) already satisfies the budget:
        // the symmetric coin must win even though ω = (0, 0) spends less
        // randomization mass.
        let p = table(vec![0.5, 0.9, 0.1]);
        let g = groups(vec![1, 1, 0]);
        let cfg = FairConfig::new(0.8).unwrap();
        let sol = solve_omega(0.0, &p, &g, [1.0 / 3.0, 2.0 / 3.0], &cfg).unwrap();
        assert_eq!(sol.omega, [0.5, 0.5]);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn empty_bands_report_the_unreachable_distance() {
        // No posterior sits on either threshold, so no choice of ω moves
        // the gap: rates are (0.5, 1.0), the gap 0.5 overshoots ε = 0.1 by
        // 0.4, and that distance is surfaced as the residual.
        let p = table(vec![0.9, 0.9, 0.1, 0.9]);
        let g = groups(vec![1, 1, 0, 0]);
        let cfg = FairConfig::new(0.1).unwrap();
        let sol = solve_omega(0.0, &p, &g, [0.5, 0.5], &cfg).unwrap();
        assert_eq!(sol.omega, [0.0, 0.0]);
        assert_eq!(sol.residual, 0.4);
    }

    #[test]
    fn coarse_grid_minimizes_and_reports_the_residual() {
        // With a two-point grid the achievable gaps are {0, 0.5}; the
        // target 0.2 (β* > 0) is unreachable and ω₁ = 0 is the closer end.
        let p = table(vec![0.45, 0.1, 0.9, 0.6]);
        let g = groups(vec![0, 0, 1, 1]);
        let mut cfg = FairConfig::new(0.2).unwrap();
        cfg.omega_grid = 2;
        let sol = solve_omega(0.1, &p, &g, [0.5, 0.5], &cfg).unwrap();
        assert_eq!(sol.omega, [0.0, 0.0]);
        assert_eq!(sol.residual, 0.2);
    }

    #[test]
    fn minimal_mass_breaks_distance_ties() {
        // Both groups sit entirely on their bands, so the gap is ω₁ − ω₀
        // and the whole line ω₁ − ω₀ = ε reaches the target. The least
        // total mass on that line is (0, ε).
        let p = table(vec![0.6, 0.6, 0.4, 0.4]);
        let g = groups(vec![1, 1, 0, 0]);
        let cfg = FairConfig::new(0.2).unwrap();
        let sol = solve_omega(0.1, &p, &g, [0.5, 0.5], &cfg).unwrap();
        assert_eq!(sol.omega, [0.0, 0.2]);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn exhaustive_scan_agrees_on_random_instances() {
        let mut rng = stream_rng(13, 0);
        for trial in 0..100 {
            let n0 = rng.random_range(1..=8usize);
            let n1 = rng.random_range(1..=8usize);
            let beta_star = if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(-0.3..0.3)
            };
            let epsilon = if trial % 7 == 0 { 0.0 } else { rng.random_range(0.0..0.4) };
            let pts = [2usize, 3, 11, 101][trial % 4];
            let mut cfg = FairConfig::new(epsilon).unwrap();
            cfg.omega_grid = pts;

            let pi_hat =
                [n0 as f64 / (n0 + n1) as f64, n1 as f64 / (n0 + n1) as f64];
            let tau = thresholds(beta_star, pi_hat);
            let mut phi = Vec::new();
            let mut gvec = Vec::new();
            for a in 0..2u8 {
                for _ in 0..if a == 0 { n0 } else { n1 } {
                    // Land some posteriors inside the band on purpose.
                    let x = if rng.random_bool(0.4) {
                        (tau[a as usize] + cfg.delta * rng.random_range(-0.9..0.9))
                            .clamp(0.0, 1.0)
                    } else {
                        rng.random::<f64>()
                    };
                    phi.push(x);
                    gvec.push(a);
                }
            }
            let p = table(phi.clone());
            let g = groups(gvec.clone());

            let sol = solve_omega(beta_star, &p, &g, pi_hat, &cfg).unwrap();
            let again = solve_omega(beta_star, &p, &g, pi_hat, &cfg).unwrap();
            assert_eq!(sol, again, "trial {trial}: nondeterministic");

            // Independent re-count with explicitly written zone logic.
            let mut n = [0usize; 2];
            let mut above = [0usize; 2];
            let mut band = [0usize; 2];
            for (t, &x) in phi.iter().enumerate() {
                let a = gvec[t] as usize;
                n[a] += 1;
                if x >= tau[a] + cfg.delta {
                    above[a] += 1;
                } else if x >= tau[a] - cfg.delta {
                    band[a] += 1;
                }
            }
            let gap = |w: [f64; 2]| {
                (above[1] as f64 + w[1] * band[1] as f64) / n[1] as f64
                    - (above[0] as f64 + w[0] * band[0] as f64) / n[0] as f64
            };
            let dist = |gp: f64| {
                if beta_star > 0.0 {
                    (gp - epsilon).abs()
                } else if beta_star < 0.0 {
                    (gp + epsilon).abs()
                } else {
                    (gp.abs() - epsilon).max(0.0)
                }
            };

            if beta_star == 0.0 && dist(gap([0.5, 0.5])) == 0.0 {
                assert_eq!(sol.omega, [0.5, 0.5], "trial {trial}: feasible coin");
                assert_eq!(sol.residual, 0.0);
                continue;
            }
            if band == [0, 0] {
                assert_eq!(sol.omega, [0.0, 0.0], "trial {trial}: empty bands");
                assert_eq!(sol.residual, dist(gap([0.0, 0.0])));
                continue;
            }

            let value = |i: usize| i as f64 / (pts - 1) as f64;
            let mut lattice_best = f64::INFINITY;
            for i in 0..pts {
                for j in 0..pts {
                    lattice_best = lattice_best.min(dist(gap([value(i), value(j)])));
                }
            }
            // The picked pair is on the lattice and near-minimal.
            assert!(
                sol.omega
                    .iter()
                    .all(|&w| (0..pts).any(|i| value(i) == w)),
                "trial {trial}: {:?} is off the lattice",
                sol.omega
            );
            assert!(
                sol.residual >= lattice_best - 1e-15
                    && sol.residual <= lattice_best + DISTANCE_TIE_TOL + 1e-15,
                "trial {trial}: residual {} vs lattice best {lattice_best}",
                sol.residual
            );
            assert!(
                (dist(gap(sol.omega)) - sol.residual).abs() <= 1e-12,
                "trial {trial}: residual does not match the picked pair"
            );
            // No admitted pair spends meaningfully less mass.
            let mass = sol.omega[0] + sol.omega[1];
            for i in 0..pts {
                for j in 0..pts {
                    let w = [value(i), value(j)];
                    if dist(gap(w)) <= lattice_best + DISTANCE_TIE_TOL {
                        assert!(
                            w[0] + w[1] >= mass - MASS_TIE_TOL - 1e-15,
                            "trial {trial}: {w:?} beats {:?} on mass",
                            sol.omega
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let p = table(vec![0.5]);
        let g = groups(vec![0, 1]);
        let cfg = FairConfig::new(0.1).unwrap();
        assert!(matches!(
            solve_omega(0.0, &p, &g, [0.5, 0.5], &cfg),
            Err(Error::LengthMismatch(_))
        ));
    }
}
