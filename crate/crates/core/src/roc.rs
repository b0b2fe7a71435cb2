//! ROC-space algebra for binary quantizers.
//!
//! An [`OperatingPoint`] is the `(pfa, pd)` pair of a one-bit quantizer. A
//! binary symmetric channel maps it affinely toward `(1/2, 1/2)`, and the
//! Kullback-Leibler divergence of the two induced Bernoulli laws (in nats) is
//! the per-symbol miss exponent at the receiver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianSensorModel;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logarithms.
pub const PROB_EPS: f64 = 1e-12;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// `(false alarm, detection)` probabilities of a binary quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub pfa: f64,
    pub pd: f64,
}

impl OperatingPoint {
    pub fn new(pfa: f64, pd: f64) -> Result<Self> {
        check_probability("pfa", pfa)?;
        check_probability("pd", pd)?;
        Ok(Self { pfa, pd })
    }

    /// Construct without validation; callers guarantee both coordinates are
    /// already probabilities (up to rounding, which is clamped away).
    pub(crate) fn from_parts(pfa: f64, pd: f64) -> Self {
        Self {
            pfa: pfa.clamp(0.0, 1.0),
            pd: pd.clamp(0.0, 1.0),
        }
    }

    /// Design-facing check: the point must sit on or above the diagonal.
    pub fn require_design_region(&self) -> Result<()> {
        if self.pd < self.pfa {
            return Err(Error::Domain(format!(
                "operating point ({}, {}) lies below the diagonal",
                self.pfa, self.pd
            )));
        }
        Ok(())
    }

    pub fn is_diagonal(&self) -> bool {
        self.pd == self.pfa
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

/// Binary symmetric channel with crossover probability in `[0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BscChannel {
    crossover: f64,
}

impl BscChannel {
    pub const IDEAL: BscChannel = BscChannel { crossover: 0.0 };

    pub fn new(crossover: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&crossover) {
            return Err(Error::InvalidCrossover(crossover));
        }
        Ok(Self { crossover })
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    /// `p -> rho + (1 - 2 rho) p`, applied to a single probability.
    #[inline]
    pub fn apply(&self, p: f64) -> f64 {
        let rho = self.crossover;
        (rho + (1.0 - 2.0 * rho) * p).clamp(0.0, 1.0)
    }
}

impl TryFrom<f64> for BscChannel {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        BscChannel::new(value)
    }
}

impl From<BscChannel> for f64 {
    fn from(ch: BscChannel) -> f64 {
        ch.crossover
    }
}

/// One sensor together with its channels to the fusion center and to Eve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSite<M = GaussianSensorModel> {
    pub model: M,
    pub fc_channel: BscChannel,
    pub eve_channel: BscChannel,
}

impl<M> SensorSite<M> {
    pub fn new(model: M, fc_channel: BscChannel, eve_channel: BscChannel) -> Self {
        Self {
            model,
            fc_channel,
            eve_channel,
        }
    }
}

/// `p * (r - 1 - ln r)` with `r = q / p`: one outcome's share of the KL sum,
/// written so every share is nonnegative and accurate near `q == p`.
#[inline]
fn kl_term(p: f64, q: f64) -> f64 {
    let u = (q - p) / p;
    let phi = if u.abs() < 0.1 {
        // u - ln(1 + u) = sum_{k>=2} (-1)^k u^k / k
        let mut acc = 0.0;
        let mut pow = u * u;
        let mut k = 2.0;
        while k < 20.0 {
            acc += pow / k;
            pow *= -u;
            k += 1.0;
        }
        acc
    } else {
        u - u.ln_1p()
    };
    p * phi.max(0.0)
}

/// KL divergence `x ln(x/y) + (1-x) ln((1-x)/(1-y))` on raw probabilities.
#[inline]
pub fn kl_bernoulli(x: f64, y: f64) -> f64 {
    let x = x.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let y = y.clamp(PROB_EPS, 1.0 - PROB_EPS);
    kl_term(x, y) + kl_term(1.0 - x, 1.0 - y)
}

/// Divergence (nats) of the H0 output law from the H1 output law of `op`.
pub fn kl_divergence(op: OperatingPoint) -> f64 {
    kl_bernoulli(op.pfa, op.pd)
}

pub fn bsc_transform(op: OperatingPoint, ch: BscChannel) -> OperatingPoint {
    OperatingPoint::from_parts(ch.apply(op.pfa), ch.apply(op.pd))
}

/// `(D_FC, D_E)` contributed by a sensor operating at `op`.
pub fn site_divergences<M>(op: OperatingPoint, site: &SensorSite<M>) -> (f64, f64) {
    (
        kl_divergence(bsc_transform(op, site.fc_channel)),
        kl_divergence(bsc_transform(op, site.eve_channel)),
    )
}

/// Operating point of the randomized quantizer that uses `points[i]` with
/// probability `weights[i]`.
pub fn mix_quantizers(points: &[OperatingPoint], weights: &[f64]) -> Result<OperatingPoint> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch(points.len(), weights.len()));
    }
    if points.is_empty() {
        return Err(Error::arg("points", "at least one quantizer is required"));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::WeightSum(sum));
    }
    let (pfa, pd) = points
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(a, b), (p, w)| (a + w * p.pfa, b + w * p.pd));
    Ok(OperatingPoint::from_parts(pfa, pd))
}

/// Partial derivative of the divergence in `pd` at fixed `pfa`:
/// `(1-x)/(1-y) - x/y`. Nonnegative above the diagonal, so optimal designs
/// sit on the upper boundary of the achievable region.
pub fn kl_gradient_pd(op: OperatingPoint) -> f64 {
    let x = op.pfa.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let y = op.pd.clamp(PROB_EPS, 1.0 - PROB_EPS);
    (y - x) / (y * (1.0 - y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(x: f64, y: f64) -> OperatingPoint {
        OperatingPoint::new(x, y).unwrap()
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_divergence(op(0.5, 0.5)), 0.0);
        assert!((kl_divergence(op(0.25, 0.75)) - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((kl_divergence(op(0.1, 0.9)) - 0.8 * 9f64.ln()).abs() < 1e-14);
        assert!((kl_divergence(op(0.25, 0.75)) - 0.549306).abs() < 1e-6);
        assert!((kl_divergence(op(0.1, 0.9)) - 1.757780).abs() < 1e-6);
    }

    #[test]
    fn kl_corners_are_finite() {
        assert_eq!(kl_divergence(op(0.0, 0.0)), 0.0);
        assert_eq!(kl_divergence(op(1.0, 1.0)), 0.0);
        let d = kl_divergence(op(0.0, 1.0));
        assert!(d.is_finite() && d > 20.0);
    }

    #[test]
    fn kl_matches_naive_formula_away_from_diagonal() {
        for &(x, y) in &[(0.3f64, 0.7f64), (0.01, 0.2), (0.6, 0.95), (0.9, 0.1)] {
            let naive = x * (x / y).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln();
            assert!((kl_divergence(op(x, y)) - naive).abs() < 1e-14, "{x} {y}");
        }
    }

    #[test]
    fn kl_near_diagonal_is_quadratic() {
        let (x, d) = (0.3, 1e-7);
        let exact = d * d / (2.0 * x * (1.0 - x));
        let got = kl_divergence(op(x, x + d));
        assert!((got - exact).abs() / exact < 1e-5);
    }

    #[test]
    fn nan_rejected() {
        assert!(OperatingPoint::new(f64::NAN, 0.5).is_err());
        assert!(OperatingPoint::new(0.5, 1.5).is_err());
    }

    #[test]
    fn transform_examples() {
        let a = op(0.2, 0.8);
        assert_eq!(bsc_transform(a, BscChannel::IDEAL), a);
        let b = bsc_transform(a, BscChannel::new(0.1).unwrap());
        assert!((b.pfa - 0.26).abs() < 1e-15 && (b.pd - 0.74).abs() < 1e-15);
        let c = bsc_transform(a, BscChannel::new(0.4999999).unwrap());
        assert!((c.pfa - 0.5).abs() < 1e-6 && (c.pd - 0.5).abs() < 1e-6);
    }

    #[test]
    fn channel_range() {
        assert!(BscChannel::new(0.5).is_err());
        assert!(BscChannel::new(-0.01).is_err());
        assert!(BscChannel::new(f64::NAN).is_err());
        assert!(BscChannel::new(0.0).is_ok());
        assert!(serde_json::from_str::<BscChannel>("0.7").is_err());
    }

    #[test]
    fn site_divergence_examples() {
        let model = GaussianSensorModel::new(1.0, 1.0).unwrap();
        let site = |f, e| {
            SensorSite::new(model, BscChannel::new(f).unwrap(), BscChannel::new(e).unwrap())
        };
        assert_eq!(site_divergences(op(0.5, 0.5), &site(0.2, 0.3)), (0.0, 0.0));
        let (f, e) = site_divergences(op(0.25, 0.75), &site(0.0, 0.0));
        assert!((f - 0.549306).abs() < 1e-6 && (e - 0.549306).abs() < 1e-6);
        let (f, e) = site_divergences(op(0.25, 0.75), &site(0.0, 0.1));
        assert!((f - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((e - 0.4 * (7.0f64 / 3.0).ln()).abs() < 1e-14);
        assert!((e - 0.338919).abs() < 1e-6);
    }

    #[test]
    fn mix_examples() {
        let m = mix_quantizers(&[op(0.2, 0.6)], &[1.0]).unwrap();
        assert_eq!(m, op(0.2, 0.6));
        let m = mix_quantizers(&[op(0.0, 0.0), op(1.0, 1.0)], &[0.5, 0.5]).unwrap();
        assert_eq!(m, op(0.5, 0.5));
        let m = mix_quantizers(&[op(0.1, 0.5), op(0.3, 0.9)], &[0.25, 0.75]).unwrap();
        assert!((m.pfa - 0.25).abs() < 1e-15 && (m.pd - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mix_errors() {
        assert_eq!(
            mix_quantizers(&[op(0.1, 0.2)], &[0.5, 0.5]),
            Err(Error::LengthMismatch(1, 2))
        );
        assert!(matches!(
            mix_quantizers(&[op(0.1, 0.2), op(0.2, 0.3)], &[0.5, 0.6]),
            Err(Error::WeightSum(_))
        ));
        assert!(matches!(
            mix_quantizers(&[op(0.1, 0.2), op(0.2, 0.3)], &[1.5, -0.5]),
            Err(Error::WeightSum(_))
        ));
        assert!(mix_quantizers(&[], &[]).is_err());
    }

    #[test]
    fn design_region() {
        assert!(op(0.6, 0.4).require_design_region().is_err());
        assert!(op(0.4, 0.4).require_design_region().is_ok());
        // algebra still works below the diagonal
        let d = kl_divergence(op(0.7, 0.3));
        assert!(d > 0.0);
    }
}
