//! Small univariate optimization helpers shared across modules.

/// Inverse golden ratio, the interval-reduction factor of golden-section
/// search.
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[a, b]` down to interval width
/// `xtol`. Returns the interval midpoint and its value. Assumes `f` is
/// unimodal on the bracket; on plateaus it settles somewhere on the plateau.
pub(crate) fn golden_min(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    debug_assert!(b >= a);
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - INVPHI * (hi - lo);
    let mut d = lo + INVPHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > xtol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INVPHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INVPHI * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    (x, fx)
}

/// Scans `f` over `grid`, golden-refines inside the bracket around the best
/// grid point, and returns the best evaluated candidate overall.
///
/// Candidates within `tie_tol` of the minimum count as tied; among ties the
/// one minimizing `tiebreak` wins. Ranking the refined point against the best
/// grid point (instead of trusting refinement unconditionally) keeps results
/// stable on plateaus and at kinks, where golden section can drift a hair off
/// a grid point that is exactly optimal.
pub(crate) fn grid_then_golden(
    f: &mut impl FnMut(f64) -> f64,
    grid: &[f64],
    xtol: f64,
    tie_tol: f64,
    tiebreak: impl Fn(f64) -> f64,
) -> (f64, f64) {
    assert!(grid.len() >= 2, "need at least two grid points to bracket");
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();

    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] - tie_tol
            || (v <= values[best] + tie_tol && tiebreak(grid[i]) < tiebreak(grid[best]))
        {
            best = i;
        }
    }

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (x_ref, v_ref) = golden_min(f, lo, hi, xtol);

    let (mut x_star, mut v_star) = (grid[best], values[best]);
    if v_ref < v_star - tie_tol || (v_ref <= v_star + tie_tol && tiebreak(x_ref) < tiebreak(x_star))
    {
        x_star = x_ref;
        v_star = v_ref;
    }
    (x_star, v_star)
}
