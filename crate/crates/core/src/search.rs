//! One-dimensional search primitives shared by the solvers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Number of points in the coarse unimodality pre-scan.
pub const PRESCAN_POINTS: usize = 1024;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `xtol` or after `max_iter`
/// contractions. Returns the best evaluated abscissa and its value.
pub fn golden_section_max<F>(f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (b - a) > xtol && iter < max_iter {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        iter += 1;
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(x1, f1), (x2, f2), (mid, fm)]
        .into_iter()
        .fold((mid, fm), |best, c| if c.1 > best.1 { c } else { best })
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (zero counts as either).
/// Returns the midpoint-refined root once `|f| <= ftol`, the bracket is
/// narrower than `xtol`, or `max_iter` halvings are spent.
pub fn bisect_root<F>(f: F, mut lo: f64, mut hi: f64, ftol: f64, xtol: f64, max_iter: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let lo_negative = flo < 0.0;
    let mut best = (lo, flo.abs());
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm.abs() < best.1 {
            best = (mid, fm.abs());
        }
        if fm.abs() <= ftol || (hi - lo).abs() <= xtol {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.0
}

/// Counts sign changes in the discrete differences of `values`, ignoring
/// steps smaller than `floor` in magnitude.
pub fn slope_sign_changes(values: &[f64], floor: f64) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= floor {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            changes += 1;
        }
        last = s;
    }
    changes
}

/// Evaluates `f` on an evenly spaced pre-scan grid and fails if the profile
/// has more than two slope sign changes.
pub fn check_unimodal<F>(f: F, a: f64, b: f64, what: &'static str) -> Result<()>
where
    F: Fn(f64) -> f64,
{
    let n = PRESCAN_POINTS;
    let values: Vec<f64> = (0..n)
        .map(|i| f(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let changes = slope_sign_changes(&values, 1e-13 * scale);
    if changes > 2 {
        return Err(Error::NotUnimodal {
            what,
            sign_changes: changes,
        });
    }
    Ok(())
}
