//! Constrained likelihood-ratio threshold design for a single sensor.
//!
//! The optimal quantizer under `D_E <= alpha` is an LRT. Along the LRT curve
//! `h(lambda) = D_E(lambda) - alpha` is unimodal with negative tails, so the
//! constraint boundary meets the curve at most twice. When the unconstrained
//! optimum violates the budget, the best design is whichever crossing gives
//! the larger `D_FC`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{sensor_kld_unconstrained_max, ObservationModel, GOLDEN_MAX_ITER, GOLDEN_XTOL};
use crate::roc::{bsc_transform, kl_divergence, site_divergences, OperatingPoint, SensorSite};
use crate::search::{bisect_root, check_unimodal, golden_section_max};

/// Roots are accepted once `|h| <= ROOT_FTOL`.
pub const ROOT_FTOL: f64 = 1e-12;
pub const ROOT_MAX_ITER: usize = 200;
/// `D_FC` differences below this count as ties between the two crossings.
pub const TIE_TOL: f64 = 1e-12;
/// A peak of `h` within this distance of zero is a tangency.
const TANGENCY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerDesign {
    #[serde(with = "crate::serde_ext")]
    pub lambda: f64,
    pub op: OperatingPoint,
    pub d_sensor: f64,
    pub d_fc: f64,
    pub d_eve: f64,
    /// Whether Eve's budget is active at the optimum.
    pub binding: bool,
    /// Budget the design was solved against; `inf` for unconstrained designs.
    #[serde(with = "crate::serde_ext")]
    pub alpha_tilde: f64,
}

impl QuantizerDesign {
    fn at_threshold<M: ObservationModel>(
        site: &SensorSite<M>,
        lambda: f64,
        alpha_tilde: f64,
        binding: bool,
    ) -> Self {
        let op = site.model.threshold_to_op(lambda);
        let (d_fc, d_eve) = site_divergences(op, site);
        Self {
            lambda,
            op,
            d_sensor: kl_divergence(op),
            d_fc,
            d_eve,
            binding,
            alpha_tilde,
        }
    }

    /// The `alpha = 0` design: threshold at `+inf`, operating point `(0, 0)`.
    pub fn blind() -> Self {
        Self {
            lambda: f64::INFINITY,
            op: OperatingPoint { pfa: 0.0, pd: 0.0 },
            d_sensor: 0.0,
            d_fc: 0.0,
            d_eve: 0.0,
            binding: true,
            alpha_tilde: 0.0,
        }
    }

    pub fn is_blind(&self) -> bool {
        self.op.pfa == self.op.pd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub alpha_tilde: f64,
    pub d_fc_max: f64,
    pub design: QuantizerDesign,
}

fn eve_kld<M: ObservationModel>(site: &SensorSite<M>, lambda: f64) -> f64 {
    kl_divergence(bsc_transform(site.model.threshold_to_op(lambda), site.eve_channel))
}

fn fc_kld<M: ObservationModel>(site: &SensorSite<M>, lambda: f64) -> f64 {
    kl_divergence(bsc_transform(site.model.threshold_to_op(lambda), site.fc_channel))
}

/// `h(lambda) = D_E(lambda) - alpha_tilde`.
pub fn eval_h<M: ObservationModel>(site: &SensorSite<M>, lambda: f64, alpha_tilde: f64) -> f64 {
    eve_kld(site, lambda) - alpha_tilde
}

/// Location and value of the maximum of `h` over the threshold bracket.
pub fn find_h_peak<M: ObservationModel>(site: &SensorSite<M>, alpha_tilde: f64) -> Result<(f64, f64)> {
    let (lo, hi) = site.model.threshold_bracket();
    let d_e = |l| eve_kld(site, l);
    check_unimodal(d_e, lo, hi, "h(lambda)")?;
    let (lambda, d) = golden_section_max(d_e, lo, hi, GOLDEN_XTOL, GOLDEN_MAX_ITER);
    Ok((lambda, d - alpha_tilde))
}

/// Largest Eve divergence reachable along the LRT curve.
pub fn alpha_max<M: ObservationModel>(site: &SensorSite<M>) -> Result<f64> {
    find_h_peak(site, 0.0).map(|(_, h)| h)
}

/// Thresholds where the LRT curve crosses `D_E = alpha_tilde`: none when the
/// budget exceeds every reachable `D_E`, one at a tangency, otherwise two in
/// ascending order.
pub fn find_constraint_roots<M: ObservationModel>(
    site: &SensorSite<M>,
    alpha_tilde: f64,
) -> Result<Vec<f64>> {
    if !(alpha_tilde > 0.0 && alpha_tilde.is_finite()) {
        return Err(Error::arg("alpha_tilde", format!("must be positive, got {alpha_tilde}")));
    }
    let (peak, h_peak) = find_h_peak(site, alpha_tilde)?;
    if h_peak < -TANGENCY_TOL {
        return Ok(Vec::new());
    }
    if h_peak <= TANGENCY_TOL {
        return Ok(vec![peak]);
    }
    let h = |l| eval_h(site, l, alpha_tilde);
    let (mut lo, mut hi) = site.model.threshold_bracket();
    // Tiny budgets put the crossings beyond the standard bracket.
    let width = hi - lo;
    for _ in 0..64 {
        if h(lo) < 0.0 {
            break;
        }
        lo -= width;
    }
    for _ in 0..64 {
        if h(hi) < 0.0 {
            break;
        }
        hi += width;
    }
    let left = bisect_root(h, lo, peak, ROOT_FTOL, 0.0, ROOT_MAX_ITER);
    let right = bisect_root(h, peak, hi, ROOT_FTOL, 0.0, ROOT_MAX_ITER);
    Ok(vec![left, right])
}

/// Best design with no eavesdropper constraint.
pub fn unconstrained_design<M: ObservationModel>(site: &SensorSite<M>) -> Result<QuantizerDesign> {
    let (lambda, _) = sensor_kld_unconstrained_max(&site.model, site.fc_channel)?;
    let mut design = QuantizerDesign::at_threshold(site, lambda, f64::INFINITY, false);
    design.alpha_tilde = f64::INFINITY;
    Ok(design)
}

/// Maximizes `D_FC` over the LRT family subject to `D_E <= alpha_tilde`.
pub fn design_quantizer<M: ObservationModel>(
    site: &SensorSite<M>,
    alpha_tilde: f64,
) -> Result<QuantizerDesign> {
    if !(alpha_tilde >= 0.0) {
        return Err(Error::arg("alpha_tilde", format!("must be nonnegative, got {alpha_tilde}")));
    }
    if alpha_tilde == 0.0 {
        return Ok(QuantizerDesign::blind());
    }
    let free = unconstrained_design(site)?;
    if free.d_eve <= alpha_tilde {
        return Ok(QuantizerDesign {
            alpha_tilde,
            ..free
        });
    }
    let roots = find_constraint_roots(site, alpha_tilde)?;
    let lambda = match roots.as_slice() {
        [only] => *only,
        [left, right] => {
            let (dl, dr) = (fc_kld(site, *left), fc_kld(site, *right));
            if dl > dr + TIE_TOL {
                *left
            } else {
                *right
            }
        }
        _ => {
            // D_E at the free optimum exceeds the budget, so h peaks above zero.
            unreachable!("binding budget without a crossing")
        }
    };
    Ok(QuantizerDesign::at_threshold(site, lambda, alpha_tilde, true))
}

/// Best `D_FC` as a function of the per-sensor Eve budget.
pub fn tradeoff_curve<M: ObservationModel>(
    site: &SensorSite<M>,
    alphas: &[f64],
) -> Result<Vec<TradeoffPoint>> {
    if alphas.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::arg("alphas", "sweep grid must be ascending"));
    }
    alphas
        .par_iter()
        .map(|&a| {
            design_quantizer(site, a).map(|design| TradeoffPoint {
                alpha_tilde: a,
                d_fc_max: design.d_fc,
                design,
            })
        })
        .collect()
}
