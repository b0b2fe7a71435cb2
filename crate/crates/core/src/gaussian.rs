//! Shift-in-mean Gaussian observation model.
//!
//! Under H0 a sensor sees `N(0, sigma^2)`, under H1 `N(theta, sigma^2)`. A
//! likelihood-ratio quantizer is a threshold `lambda` on the raw observation,
//! giving `pfa = Q(lambda / sigma)` and `pd = Q((lambda - theta) / sigma)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roc::{bsc_transform, kl_divergence, BscChannel, OperatingPoint};
use crate::search::{check_unimodal, golden_section_max};

/// False-alarm range used to bracket every threshold search.
pub const BRACKET_PFA: f64 = 1e-9;
/// Absolute threshold tolerance for golden-section searches.
pub const GOLDEN_XTOL: f64 = 1e-10;
pub const GOLDEN_MAX_ITER: usize = 300;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal upper-tail probability.
pub fn q_function(z: f64) -> f64 {
    0.5 * libm::erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `ln Q(z)`, finite for every finite `z`.
pub fn ln_q_function(z: f64) -> f64 {
    if z < -1.0 {
        (-q_function(-z)).ln_1p()
    } else if z < 36.0 {
        q_function(z).ln()
    } else {
        // Asymptotic series for the Mills ratio.
        let r = 1.0 / (z * z);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
        -0.5 * z * z - z.ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Lower-tail quantile approximation (Acklam), relative error ~1e-9.
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse of [`q_function`] on the open interval `(0, 1)`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("q_inverse needs 0 < p < 1, got {p}")));
    }
    if p > 0.5 {
        // 1 - p is exact here
        return Ok(-q_inverse(1.0 - p)?);
    }
    let mut z = -acklam_quantile(p);
    let ln_p = p.ln();
    // Newton on ln Q(z) = ln p; the log form keeps deep tails well conditioned.
    for _ in 0..4 {
        let lq = ln_q_function(z);
        let step = (lq - ln_p) * (lq - ln_std_normal_pdf(z)).exp();
        z += step;
        if step.abs() <= 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    Ok(z)
}

fn ln_std_normal_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// A sensor observation model whose likelihood-ratio quantizers are
/// parameterized by a scalar threshold with decreasing `pfa` and `pd`.
pub trait ObservationModel: Sync {
    fn threshold_to_op(&self, lambda: f64) -> OperatingPoint;

    /// Detection probability of the LRT with false alarm `pfa`.
    fn lrt_curve(&self, pfa: f64) -> Result<f64>;

    /// Threshold interval on which `pfa` spans `[BRACKET_PFA, 1 - BRACKET_PFA]`.
    fn threshold_bracket(&self) -> (f64, f64);
}

#[derive(Deserialize)]
struct RawGaussian {
    theta: f64,
    sigma: f64,
}

/// AWGN shift-in-mean model with signal amplitude `theta` and noise std `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussian")]
pub struct GaussianSensorModel {
    theta: f64,
    sigma: f64,
}

impl TryFrom<RawGaussian> for GaussianSensorModel {
    type Error = Error;

    fn try_from(raw: RawGaussian) -> Result<Self> {
        GaussianSensorModel::new(raw.theta, raw.sigma)
    }
}

impl GaussianSensorModel {
    pub fn new(theta: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma must be positive, got {sigma}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidModel(format!("theta must be positive, got {theta}")));
        }
        Ok(Self { theta, sigma })
    }

    /// Unit-variance model with the given SNR `theta / sigma`.
    pub fn with_snr(snr: f64) -> Result<Self> {
        Self::new(snr, 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn snr(&self) -> f64 {
        self.theta / self.sigma
    }
}

impl ObservationModel for GaussianSensorModel {
    fn threshold_to_op(&self, lambda: f64) -> OperatingPoint {
        threshold_to_op(self, lambda)
    }

    fn lrt_curve(&self, pfa: f64) -> Result<f64> {
        lrt_curve(self, pfa)
    }

    fn threshold_bracket(&self) -> (f64, f64) {
        let z = q_inverse(BRACKET_PFA).expect("bracket pfa is in (0, 1)");
        (-self.sigma * z, self.sigma * z)
    }
}

/// `(Q(lambda / sigma), Q((lambda - theta) / sigma))`.
pub fn threshold_to_op(model: &GaussianSensorModel, lambda: f64) -> OperatingPoint {
    OperatingPoint::from_parts(
        q_function(lambda / model.sigma),
        q_function((lambda - model.theta) / model.sigma),
    )
}

/// `Q(Q^{-1}(pfa) - snr)`: the ROC of the Gaussian LRT.
pub fn gaussian_lrt_curve(snr: f64, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Domain(format!("lrt_curve needs 0 < pfa < 1, got {pfa}")));
    }
    Ok(q_function(q_inverse(pfa)? - snr))
}

pub fn lrt_curve(model: &GaussianSensorModel, pfa: f64) -> Result<f64> {
    gaussian_lrt_curve(model.snr(), pfa)
}

/// Maximizes `D_FC` along the model's LRT curve with no eavesdropper
/// constraint. Returns `(lambda_star, d_fc_star)`.
pub fn sensor_kld_unconstrained_max<M: ObservationModel>(
    model: &M,
    fc: BscChannel,
) -> Result<(f64, f64)> {
    let f = |lambda: f64| kl_divergence(bsc_transform(model.threshold_to_op(lambda), fc));
    let (lo, hi) = model.threshold_bracket();
    check_unimodal(f, lo, hi, "D_FC along the LRT curve")?;
    Ok(golden_section_max(f, lo, hi, GOLDEN_XTOL, GOLDEN_MAX_ITER))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_pdf(z: f64) -> f64 {
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn erfc_oracle_q(z: f64) -> f64 {
        // Independent series/continued-fraction free path: integrate the
        // density with composite Simpson on [z, z + 40].
        let n = 200_000;
        let h = 40.0 / n as f64;
        let mut s = normal_pdf(z) + normal_pdf(z + 40.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(z + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn q_basic_values() {
        assert_eq!(q_function(0.0), 0.5);
        let q38 = q_function(38.0);
        assert!((0.0..1e-300).contains(&q38));
        for &z in &[0.3, 1.0, 2.5, 7.9, -3.0] {
            assert!((q_function(z) + q_function(-z) - 1.0).abs() <= 1e-15);
        }
        assert_eq!(q_function(f64::INFINITY), 0.0);
        assert_eq!(q_function(f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn q_matches_quadrature() {
        for &z in &[-2.0, -0.5, 0.5, 1.0, 3.0, 6.0] {
            let want = erfc_oracle_q(z);
            assert!(((q_function(z) - want) / want).abs() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn q_is_monotone() {
        let mut prev = 1.0;
        for i in 0..2000 {
            let z = -10.0 + i as f64 * 0.01;
            let q = q_function(z);
            assert!(q <= prev);
            prev = q;
        }
    }

    #[test]
    fn ln_q_continuity_and_tail() {
        for &z in &[-5.0, -1.0, 0.0, 2.0, 20.0, 35.9] {
            assert!((ln_q_function(z) - q_function(z).ln()).abs() < 1e-12 * q_function(z).ln().abs().max(1.0));
        }
        let a = ln_q_function(36.0 - 1e-9);
        let b = ln_q_function(36.0);
        assert!((a - b).abs() < 1e-6);
        assert!(ln_q_function(100.0).is_finite());
    }

    #[test]
    fn q_inverse_round_trips() {
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        assert!((q_inverse(q_function(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((q_inverse(q_function(-2.5)).unwrap() + 2.5).abs() < 1e-12);
        for &p in &[1e-300, 1e-100, 1e-12, 1e-9, 0.001, 0.02, 0.3, 0.7, 0.99, 1.0 - 1e-9] {
            let z = q_inverse(p).unwrap();
            assert!(((q_function(z) - p) / p).abs() < 1e-12, "p={p}");
        }
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let m = GaussianSensorModel::new(1.0, 1.0).unwrap();
        let op = threshold_to_op(&m, 0.5);
        assert!((op.pfa - 0.308538).abs() < 1e-6 && (op.pd - 0.691462).abs() < 1e-6);
        assert!((op.pfa - erfc_oracle_q(0.5)).abs() < 1e-12);
        assert_eq!(threshold_to_op(&m, f64::INFINITY), OperatingPoint::new(0.0, 0.0).unwrap());
        assert_eq!(threshold_to_op(&m, f64::NEG_INFINITY), OperatingPoint::new(1.0, 1.0).unwrap());
    }

    #[test]
    fn lrt_curve_examples() {
        let m = GaussianSensorModel::new(1.0, 1.0).unwrap();
        assert!((lrt_curve(&m, 0.308538).unwrap() - 0.691462).abs() < 1e-6);
        assert!((lrt_curve(&m, 0.5).unwrap() - 0.841345).abs() < 1e-6);
        assert!((lrt_curve(&m, 0.5).unwrap() - erfc_oracle_q(-1.0)).abs() < 1e-12);
        for &x in &[0.01, 0.3, 0.77] {
            assert!((gaussian_lrt_curve(0.0, x).unwrap() - x).abs() < 1e-15);
        }
        assert!(lrt_curve(&m, 0.0).is_err());
        assert!(lrt_curve(&m, 1.0).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(GaussianSensorModel::new(1.0, 0.0).is_err());
        assert!(GaussianSensorModel::new(0.0, 1.0).is_err());
        assert!(GaussianSensorModel::new(f64::NAN, 1.0).is_err());
        let m: GaussianSensorModel = serde_json::from_str(r#"{"theta":2,"sigma":4}"#).unwrap();
        assert_eq!(m.snr(), 0.5);
        assert!(serde_json::from_str::<GaussianSensorModel>(r#"{"theta":2,"sigma":-1}"#).is_err());
    }

    #[test]
    fn bracket_matches_pfa_range() {
        let m = GaussianSensorModel::new(1.0, 2.0).unwrap();
        let (lo, hi) = m.threshold_bracket();
        assert!((threshold_to_op(&m, hi).pfa - BRACKET_PFA).abs() < 1e-20);
        assert!((threshold_to_op(&m, lo).pfa - (1.0 - BRACKET_PFA)).abs() < 1e-15);
    }
}
