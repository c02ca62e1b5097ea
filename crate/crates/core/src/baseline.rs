//! Label-massaging parity repair, used as a comparison baseline.
//!
//! [`post_td`] takes hard predictions (no posterior scores) and flips just
//! enough of them to bring the demographic-parity gap under a budget ε. It
//! demotes (1 → 0) uniformly at random in the group with the higher positive
//! rate and promotes (0 → 1) uniformly at random in the other group,
//! alternating the two so the overall positive rate stays roughly constant.

use rand::seq::index::sample;

use crate::data::GroupAssignment;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Outcome of one alternating flip schedule, tracked on counts only.
#[derive(Clone, Copy, Debug)]
struct Schedule {
    satisfied: bool,
    flips: usize,
    demotions: usize,
    promotions: usize,
    /// |gap| at the returned state (the first satisfying state, or the
    /// closest-visited state when no prefix satisfies the budget).
    miss: f64,
}

/// Walks one alternating schedule: check the gap, flip one item on the due
/// side (falling through to the other side when one runs out), repeat. Stops
/// at the first state with |gap| ≤ ε; if none exists, reports the visited
/// state with the smallest |gap| (earliest on ties).
fn simulate(
    demote_first: bool,
    pos_f: usize,
    n_f: usize,
    pos_d: usize,
    n_d: usize,
    epsilon: f64,
) -> Schedule {
    let gap =
        |d: usize, p: usize| (pos_f - d) as f64 / n_f as f64 - (pos_d + p) as f64 / n_d as f64;
    let neg_d = n_d - pos_d;
    let (mut d, mut p) = (0usize, 0usize);
    let mut demote_turn = demote_first;
    let mut best = Schedule {
        satisfied: false,
        flips: 0,
        demotions: 0,
        promotions: 0,
        miss: gap(0, 0).abs(),
    };
    loop {
        let cur = gap(d, p);
        if cur.abs() <= epsilon {
            return Schedule {
                satisfied: true,
                flips: d + p,
                demotions: d,
                promotions: p,
                miss: cur.abs(),
            };
        }
        if cur.abs() < best.miss {
            best = Schedule {
                satisfied: false,
                flips: d + p,
                demotions: d,
                promotions: p,
                miss: cur.abs(),
            };
        }
        let can_demote = d < pos_f;
        let can_promote = p < neg_d;
        if !can_demote && !can_promote {
            return best;
        }
        if (demote_turn && can_demote) || !can_promote {
            d += 1;
        } else {
            p += 1;
        }
        demote_turn = !demote_turn;
    }
}

/// Flips predictions until the demographic-parity gap is at most `epsilon`.
///
/// The group with the higher positive rate is demoted, the other promoted, in
/// alternation. Both phase-orderings (demote-first and promote-first) are
/// simulated on counts; the one that satisfies the budget with fewer flips
/// wins (demote-first on ties). If neither ordering can land inside the
/// budget — the per-flip granularity 1/N_a can jump across a narrow [−ε, ε]
/// window — the closest visited state is kept, which still leaves the gap
/// within ε + 1/min(N₀, N₁). The concrete items to flip are then drawn
/// uniformly without replacement (demotions sampled before promotions), so
/// the output is a pure function of `(pred, g, epsilon, seed)`.
///
/// A gap already within the budget returns the input unchanged.
pub fn post_td(pred: &[bool], g: &GroupAssignment, epsilon: f64, seed: u64) -> Result<Vec<bool>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon = {epsilon} must be a finite value >= 0"
        )));
    }
    if pred.len() != g.n_tasks() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} tasks",
            pred.len(),
            g.n_tasks()
        )));
    }
    g.require_both_groups()?;

    let sizes = g.group_sizes();
    let mut pos = [0usize; 2];
    for (t, &y) in pred.iter().enumerate() {
        if y {
            pos[g.group(t) as usize] += 1;
        }
    }
    let rate = [pos[0] as f64 / sizes[0] as f64, pos[1] as f64 / sizes[1] as f64];
    let favored: usize = usize::from(rate[1] > rate[0]);
    let disfavored = 1 - favored;
    if rate[favored] - rate[disfavored] <= epsilon {
        return Ok(pred.to_vec());
    }

    let demote_first = simulate(
        true,
        pos[favored],
        sizes[favored],
        pos[disfavored],
        sizes[disfavored],
        epsilon,
    );
    let promote_first = simulate(
        false,
        pos[favored],
        sizes[favored],
        pos[disfavored],
        sizes[disfavored],
        epsilon,
    );
    let chosen = match (demote_first.satisfied, promote_first.satisfied) {
        (true, false) => demote_first,
        (false, true) => promote_first,
        (true, true) => {
            if promote_first.flips < demote_first.flips {
                promote_first
            } else {
                demote_first
            }
        }
        (false, false) => {
            if promote_first.miss < demote_first.miss
                || (promote_first.miss == demote_first.miss
                    && promote_first.flips < demote_first.flips)
            {
                promote_first
            } else {
                demote_first
            }
        }
    };

    let demotable: Vec<usize> = (0..pred.len())
        .filter(|&t| g.group(t) as usize == favored && pred[t])
        .collect();
    let promotable: Vec<usize> = (0..pred.len())
        .filter(|&t| g.group(t) as usize == disfavored && !pred[t])
        .collect();
    let mut rng = stream_rng(seed, 0);
    let mut out = pred.to_vec();
    for i in sample(&mut rng, demotable.len(), chosen.demotions) {
        out[demotable[i]] = false;
    }
    for i in sample(&mut rng, promotable.len(), chosen.promotions) {
        out[promotable[i]] = true;
    }
    Ok(out)
}
