//! Geometry of Eve's constraint level set `{(x, y) : D_E(x, y) = alpha}`.
//!
//! Slope and curvature come from differentiating `D_E` implicitly along the
//! level set; the numerical trace exists to check those closed forms and to
//! export plot data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roc::{bsc_transform, kl_bernoulli, BscChannel, OperatingPoint, PROB_EPS};
use crate::search::bisect_root;

/// `|y_e - x_e|` below this is treated as the singular diagonal.
pub const DIAGONAL_GUARD: f64 = 1e-12;
/// Bound on `|D_E - alpha|` for every traced point.
pub const TRACE_TOL: f64 = 1e-10;
const TRACE_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub op: OperatingPoint,
    pub eve_op: OperatingPoint,
    pub slope: f64,
    pub curvature: f64,
    pub d_e: f64,
}

/// Terms of `d^2 D / dx^2` along the constraint, with `D` the sensor-side
/// divergence: `T1 s^2 - 2 T2 s + T3`, where `T2` vanishes identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCertificate {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub second_derivative: f64,
}

fn clamp_open(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn eve_coords(op: OperatingPoint, eve: BscChannel) -> Result<(f64, f64)> {
    let e = bsc_transform(op, eve);
    if (e.pd - e.pfa).abs() < DIAGONAL_GUARD {
        return Err(Error::Singular {
            pfa: op.pfa,
            pd: op.pd,
        });
    }
    Ok((clamp_open(e.pfa), clamp_open(e.pd)))
}

/// `dy/dx` of the level set through `op`: the divided difference of `ln`
/// between the two likelihood ratios at Eve.
pub fn constraint_slope(op: OperatingPoint, eve: BscChannel) -> Result<f64> {
    let (xe, ye) = eve_coords(op, eve)?;
    let d = ye - xe;
    let log_gap = (d / (1.0 - ye)).ln_1p() - (-d / ye).ln_1p();
    let ratio_gap = d / (ye * (1.0 - ye));
    Ok(log_gap / ratio_gap)
}

/// `d^2y/dx^2` of the level set through `op`, given the slope there.
pub fn constraint_curvature(op: OperatingPoint, eve: BscChannel, slope: f64) -> Result<f64> {
    let (xe, ye) = eve_coords(op, eve)?;
    let a = (1.0 - xe) / ((1.0 - ye) * (1.0 - ye)) + xe / (ye * ye);
    let b = 1.0 / ye + 1.0 / (1.0 - ye);
    let c = 1.0 / xe + 1.0 / (1.0 - xe);
    let ratio_gap = (ye - xe) / (ye * (1.0 - ye));
    let scale = 1.0 - 2.0 * eve.crossover();
    Ok(scale * (-a * slope * slope + 2.0 * b * slope - c) / ratio_gap)
}

/// Likelihood-ratio bounds `(x_e / y_e, (1 - x_e) / (1 - y_e))` on the
/// level-set slope.
///
/// These hold around the anti-diagonal `x_e + y_e = 1` but are not a true
/// sandwich: the slope is the reciprocal of the logarithmic mean of the two
/// ratios, which leaves this interval in parts of the square. [`reciprocal_slope_bounds`] gives
/// the interval that always contains it.
pub fn slope_bounds(op: OperatingPoint, eve: BscChannel) -> Result<(f64, f64)> {
    op.require_design_region()?;
    let e = bsc_transform(op, eve);
    if e.pfa == e.pd {
        return Ok((1.0, 1.0));
    }
    let (xe, ye) = (clamp_open(e.pfa), clamp_open(e.pd));
    Ok((xe / ye, (1.0 - xe) / (1.0 - ye)))
}

/// `((1 - y_e) / (1 - x_e), y_e / x_e)`: reciprocals of the two likelihood
/// ratios, which bracket the reciprocal of their logarithmic mean.
pub fn reciprocal_slope_bounds(op: OperatingPoint, eve: BscChannel) -> Result<(f64, f64)> {
    let (l, u) = slope_bounds(op, eve)?;
    Ok((1.0 / u, 1.0 / l))
}

fn eve_kld(x: f64, y: f64, eve: BscChannel) -> f64 {
    kl_bernoulli(eve.apply(x), eve.apply(y))
}

/// Solves `D_E(x, y) = alpha` for `y` in `[x, 1]`, bisecting to machine
/// resolution. `None` when the level is out of reach at this abscissa.
pub fn solve_level_pd(x: f64, alpha_tilde: f64, eve: BscChannel) -> Option<f64> {
    let g = |y: f64| eve_kld(x, y, eve) - alpha_tilde;
    if g(1.0) < 0.0 {
        return None;
    }
    let y = bisect_root(g, x, 1.0, 0.0, 0.0, TRACE_MAX_ITER);
    (g(y).abs() <= TRACE_TOL).then_some(y)
}

fn boundary_point(x: f64, y: f64, eve: BscChannel) -> Result<BoundaryPoint> {
    let op = OperatingPoint::from_parts(x, y);
    let slope = constraint_slope(op, eve)?;
    let curvature = constraint_curvature(op, eve, slope)?;
    let eve_op = bsc_transform(op, eve);
    Ok(BoundaryPoint {
        op,
        eve_op,
        slope,
        curvature,
        d_e: kl_bernoulli(eve_op.pfa, eve_op.pd),
    })
}

fn check_alpha(alpha_tilde: f64) -> Result<()> {
    if !(alpha_tilde > 0.0 && alpha_tilde.is_finite()) {
        return Err(Error::arg("alpha_tilde", format!("must be positive, got {alpha_tilde}")));
    }
    Ok(())
}

/// Traces the upper branch of the level set at the given abscissae.
/// Abscissae where the level is unreachable are dropped.
pub fn trace_constraint_curve_at(
    alpha_tilde: f64,
    eve: BscChannel,
    xs: &[f64],
) -> Result<Vec<BoundaryPoint>> {
    check_alpha(alpha_tilde)?;
    let solved: Vec<Result<Option<BoundaryPoint>>> = xs
        .par_iter()
        .map(|&x| match solve_level_pd(x, alpha_tilde, eve) {
            Some(y) => boundary_point(x, y, eve).map(Some),
            None => Ok(None),
        })
        .collect();
    solved.into_iter().filter_map(Result::transpose).collect()
}

/// Traces `n_points` of the level set on an even grid spanning the feasible
/// false-alarm range `(0, x_max)`, where `x_max` is the largest abscissa at
/// which `D_E = alpha` is still attainable.
pub fn trace_constraint_curve(
    alpha_tilde: f64,
    eve: BscChannel,
    n_points: usize,
) -> Result<Vec<BoundaryPoint>> {
    check_alpha(alpha_tilde)?;
    if n_points < 2 {
        return Err(Error::arg("n_points", "need at least two points"));
    }
    let reach = |x: f64| eve_kld(x, 1.0, eve) - alpha_tilde;
    if reach(0.0) < 0.0 {
        return Ok(Vec::new());
    }
    let x_max = bisect_root(reach, 0.0, 1.0, 0.0, 0.0, TRACE_MAX_ITER);
    let xs: Vec<f64> = (0..n_points)
        .map(|k| x_max * (k + 1) as f64 / (n_points + 1) as f64)
        .collect();
    trace_constraint_curve_at(alpha_tilde, eve, &xs)
}

/// Second derivative of the sensor divergence along Eve's constraint through
/// `op`, split into its closed-form terms.
pub fn convexity_certificate(op: OperatingPoint, eve: BscChannel) -> Result<ConvexityCertificate> {
    let rho = eve.crossover();
    if !(rho > 0.0) {
        return Err(Error::Domain("certificate needs a noisy eavesdropper channel (rho > 0)".into()));
    }
    let (x, y) = (op.pfa, op.pd);
    if !(y > x) || x <= 0.0 || y >= 1.0 {
        return Err(Error::Domain(format!(
            "certificate needs 0 < pfa < pd < 1, got ({x}, {y})"
        )));
    }
    let slope = constraint_slope(op, eve)?;
    let (xh, yh) = (eve.apply(x), eve.apply(y));
    let r = yh * (1.0 - yh) / (y * (1.0 - y));
    let k = rho * (1.0 - rho);

    let t1 = k * (y - x) * (2.0 * y - 1.0) / (y * y * (1.0 - y) * (1.0 - y) * yh * (1.0 - yh));
    let t2 = (1.0 / y + 1.0 / (1.0 - y)) - r * (1.0 / yh + 1.0 / (1.0 - yh));
    let t3 = k * (y - x) * (1.0 - x - y) / (y * (1.0 - y) * x * (1.0 - x) * xh * (1.0 - xh));
    let t4 = (2.0 * y - 1.0) / (y * yh * (1.0 - y) * (1.0 - yh)) * slope * slope
        + (1.0 - x - y) / (x * xh * (1.0 - x) * (1.0 - xh));
    let second_derivative = k * (y - x) / (y * (1.0 - y)) * t4;
    Ok(ConvexityCertificate {
        t1,
        t2,
        t3,
        t4,
        second_derivative,
    })
}

/// Cells of the ROC partition used in the convexity argument. Boundaries are
/// shared between neighbouring cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RocRegion {
    /// `y <= 1/2` and `x + y <= 1`
    R1,
    /// `y >= 1/2` and `x + y <= 1`
    R2,
    /// `y >= 1/2` and `x + y >= 1`
    R3,
}

impl RocRegion {
    pub fn contains(self, op: OperatingPoint) -> bool {
        let (x, y) = (op.pfa, op.pd);
        match self {
            RocRegion::R1 => y <= 0.5 && x + y <= 1.0,
            RocRegion::R2 => y >= 0.5 && x + y <= 1.0,
            RocRegion::R3 => y >= 0.5 && x + y >= 1.0,
        }
    }

    pub fn containing(op: OperatingPoint) -> Vec<RocRegion> {
        [RocRegion::R1, RocRegion::R2, RocRegion::R3]
            .into_iter()
            .filter(|r| r.contains(op))
            .collect()
    }
}
