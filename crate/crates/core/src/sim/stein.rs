//! Exact Neyman–Pearson miss probabilities for a window of i.i.d. bits.
//!
//! With per-bit probabilities `x` under H0 and `y > x` under H1, the ones
//! count `K` is sufficient and the likelihood ratio is increasing in `K`, so
//! the optimal test rejects H0 for large `K` with a randomized boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roc::OperatingPoint;

/// Default false-alarm level for exponent checks.
pub const DEFAULT_DELTA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentCurvePoint {
    pub window: u64,
    /// Natural log of the miss probability at this window.
    pub log_miss: f64,
    /// `-log_miss / window`.
    pub exponent: f64,
    /// `(ln q_T - ln q_2T) / T`.
    pub local_slope: f64,
}

impl ExponentCurvePoint {
    pub fn miss(&self) -> f64 {
        self.log_miss.exp()
    }
}

/// Randomized threshold test on the ones count: decide H1 when `K > k_star`,
/// and with probability `gamma` when `K == k_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpTest {
    pub window: u64,
    pub k_star: u64,
    pub gamma: f64,
    pub log_miss: f64,
    pub log_false_alarm: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log binomial pmf over `k = 0..=n`, normalized in log space.
pub fn log_binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let nf = n as f64;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_n = libm::lgamma(nf + 1.0);
    let raw: Vec<f64> = (0..=n)
        .map(|k| {
            let kf = k as f64;
            ln_n - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0) + kf * lp + (nf - kf) * lq
        })
        .collect();
    let total = raw.iter().copied().fold(f64::NEG_INFINITY, log_add);
    raw.into_iter().map(|v| v - total).collect()
}

fn check_inputs(op: OperatingPoint, window: u64, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::arg("delta", format!("must lie in (0, 0.5), got {delta}")));
    }
    if window == 0 {
        return Err(Error::arg("window", "must be at least 1"));
    }
    let inside = |p: f64| p > 0.0 && p < 1.0;
    if !inside(op.pfa) || !inside(op.pd) {
        return Err(Error::Domain(format!(
            "operating point ({}, {}) must lie strictly inside the unit square",
            op.pfa, op.pd
        )));
    }
    if op.pd < op.pfa {
        return Err(Error::Domain(format!(
            "detection probability {} is below false alarm {}",
            op.pd, op.pfa
        )));
    }
    Ok(())
}

/// Most powerful level-`delta` test for `window` bits from `op`.
pub fn np_test(op: OperatingPoint, window: u64, delta: f64) -> Result<NpTest> {
    check_inputs(op, window, delta)?;
    if op.pd == op.pfa {
        // No information: every test at level delta misses with 1 - delta.
        return Ok(NpTest {
            window,
            k_star: window,
            gamma: delta,
            log_miss: (-delta).ln_1p(),
            log_false_alarm: delta.ln(),
        });
    }
    let l0 = log_binomial_pmf(window, op.pfa);
    let l1 = log_binomial_pmf(window, op.pd);
    let n = window as usize;
    let ln_delta = delta.ln();

    // upper[k] = ln P0(K > k)
    let mut upper = vec![f64::NEG_INFINITY; n + 1];
    for k in (0..n).rev() {
        upper[k] = log_add(upper[k + 1], l0[k + 1]);
    }
    let k_star = (0..=n).find(|&k| upper[k] <= ln_delta).unwrap_or(n);
    let slack = delta - upper[k_star].exp();
    let gamma = if slack <= 0.0 {
        0.0
    } else {
        (slack.ln() - l0[k_star]).exp().min(1.0)
    };

    let below = l1[..k_star].iter().copied().fold(f64::NEG_INFINITY, log_add);
    let tie = if gamma >= 1.0 {
        f64::NEG_INFINITY
    } else {
        l1[k_star] + (-gamma).ln_1p()
    };
    let log_miss = log_add(below, tie);
    let fa_tie = if gamma > 0.0 {
        l0[k_star] + gamma.ln()
    } else {
        f64::NEG_INFINITY
    };
    Ok(NpTest {
        window,
        k_star: k_star as u64,
        gamma,
        log_miss,
        log_false_alarm: log_add(upper[k_star], fa_tie),
    })
}

/// Miss exponent at `window` and the local slope between `window` and
/// `2 * window`.
pub fn exact_np_miss(op: OperatingPoint, window: u64, delta: f64) -> Result<ExponentCurvePoint> {
    let t = np_test(op, window, delta)?;
    let t2 = np_test(op, 2 * window, delta)?;
    let w = window as f64;
    Ok(ExponentCurvePoint {
        window,
        log_miss: t.log_miss,
        exponent: -t.log_miss / w,
        local_slope: (t.log_miss - t2.log_miss) / w,
    })
}

pub fn stein_curve(op: OperatingPoint, windows: &[u64], delta: f64) -> Result<Vec<ExponentCurvePoint>> {
    if windows.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("windows", "must be strictly ascending"));
    }
    windows.iter().map(|&t| exact_np_miss(op, t, delta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roc::kl_divergence;

    fn op(x: f64, y: f64) -> OperatingPoint {
        OperatingPoint::new(x, y).unwrap()
    }

    /// Independent oracle: binomial pmf by the multiplicative recurrence,
    /// then the randomized test by direct summation in probability space.
    fn direct_miss(x: f64, y: f64, n: u64, delta: f64) -> f64 {
        let pmf = |p: f64| {
            let mut v = vec![(1.0 - p).powi(n as i32)];
            for k in 1..=n {
                let prev = v[k as usize - 1];
                v.push(prev * (n - k + 1) as f64 / k as f64 * p / (1.0 - p));
            }
            v
        };
        let (p0, p1) = (pmf(x), pmf(y));
        let mut tail = 0.0;
        let mut k = n as usize;
        loop {
            if tail + p0[k] > delta {
                break;
            }
            tail += p0[k];
            if k == 0 {
                break;
            }
            k -= 1;
        }
        let gamma = (delta - tail) / p0[k];
        p1[..k].iter().sum::<f64>() + (1.0 - gamma) * p1[k]
    }

    #[test]
    fn single_bit_examples() {
        let t = np_test(op(0.3, 0.7), 1, 0.3).unwrap();
        assert_eq!(t.k_star, 0);
        assert!(t.gamma.abs() < 1e-12);
        assert!((t.log_miss.exp() - 0.3).abs() < 1e-12);
        let t = np_test(op(0.3, 0.7), 1, 0.15).unwrap();
        assert_eq!(t.k_star, 1);
        assert!((t.gamma - 0.5).abs() < 1e-12);
        assert!((t.log_miss.exp() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn false_alarm_is_exact() {
        for (x, y, n) in [(0.3, 0.7, 10), (0.1, 0.2, 400), (0.42, 0.78, 2000), (0.01, 0.5, 50)] {
            let t = np_test(op(x, y), n, 0.01).unwrap();
            assert!((t.log_false_alarm - 0.01f64.ln()).abs() < 1e-12, "{x} {y} {n}");
        }
    }

    #[test]
    fn matches_direct_summation() {
        for (x, y, n) in [(0.3, 0.7, 50), (0.308538, 0.691462, 200), (0.2, 0.4, 100), (0.417, 0.785, 400)] {
            let got = np_test(op(x, y), n, 0.01).unwrap().log_miss.exp();
            let want = direct_miss(x, y, n, 0.01);
            assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn long_windows_stay_finite() {
        let t = np_test(op(0.3, 0.7), 10_000, 0.01).unwrap();
        assert!(t.log_miss.is_finite() && t.log_miss < -1000.0);
    }

    #[test]
    fn exponent_approaches_kld() {
        let p = op(0.308538, 0.691462);
        let d = kl_divergence(p);
        let pt = exact_np_miss(p, 200, 0.01).unwrap();
        let at400 = exact_np_miss(p, 400, 0.01).unwrap();
        assert!(at400.exponent > pt.exponent);
        assert!(at400.exponent < d);
        // The finite-window slope at T = 200 still carries a sqrt(T) correction
        // of roughly 16% here; it tightens as T grows.
        let rel = |s: f64| ((s - d) / d).abs();
        assert!(rel(pt.local_slope) < 0.17);
        let far = exact_np_miss(p, 3200, 0.01).unwrap();
        assert!(rel(far.local_slope) < rel(pt.local_slope));
        assert!(rel(far.local_slope) < 0.07);
    }

    #[test]
    fn stein_curve_trends() {
        let p = op(0.3, 0.7);
        let d = kl_divergence(p);
        let c = stein_curve(p, &[50, 100, 200, 400], 0.01).unwrap();
        for w in c.windows(2) {
            assert!(w[1].exponent >= w[0].exponent - 1e-6);
            assert!((w[1].local_slope - d).abs() < (w[0].local_slope - d).abs());
        }
        let diag = stein_curve(op(0.4, 0.4), &[50, 100, 200, 400], 0.01).unwrap();
        assert!(diag.iter().all(|p| p.exponent.abs() < 1e-3 && p.local_slope.abs() < 1e-4));
        assert!(stein_curve(p, &[100, 50], 0.01).is_err());
    }

    #[test]
    fn delta_sensitivity() {
        let p = op(0.3, 0.7);
        let a = exact_np_miss(p, 400, 0.01).unwrap().exponent;
        let b = exact_np_miss(p, 400, 0.02).unwrap().exponent;
        assert!(((a - b) / a).abs() < 0.05);
    }

    #[test]
    fn domain_errors() {
        assert!(np_test(op(0.0, 0.5), 10, 0.01).is_err());
        assert!(np_test(op(0.5, 1.0), 10, 0.01).is_err());
        assert!(np_test(op(0.7, 0.3), 10, 0.01).is_err());
        assert!(np_test(op(0.3, 0.7), 0, 0.01).is_err());
        assert!(np_test(op(0.3, 0.7), 10, 0.5).is_err());
        assert!(np_test(op(0.3, 0.7), 10, 0.0).is_err());
    }
}
