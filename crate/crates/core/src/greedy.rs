//! Greedy Eve-budget allocation across a heterogeneous sensor network.
//!
//! Sensors are ranked by the quality ratio `k_i = D*_FC / D*_E` of their
//! unconstrained optimum. The budget is spent in that order: each sensor runs
//! unconstrained while the remainder covers its leakage, the first sensor it
//! cannot cover gets the remainder as a constrained design, and the rest sleep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianSensorModel, ObservationModel};
use crate::roc::{site_divergences, BscChannel, SensorSite};
use crate::solver::{design_quantizer, unconstrained_design, QuantizerDesign};

/// Remainders at or below this many nats are treated as exhausted.
pub const BUDGET_EPS: f64 = 1e-9;
/// Leakage below this makes the quality ratio infinite.
pub const EVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig<M = GaussianSensorModel> {
    pub sites: Vec<SensorSite<M>>,
    pub alpha_total: f64,
    #[serde(default)]
    pub benchmark_ideal_fc: bool,
}

impl<M> NetworkConfig<M> {
    pub fn new(sites: Vec<SensorSite<M>>, alpha_total: f64, benchmark_ideal_fc: bool) -> Result<Self> {
        let cfg = Self {
            sites,
            alpha_total,
            benchmark_ideal_fc,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(Error::arg("sites", "network needs at least one sensor"));
        }
        if !(self.alpha_total >= 0.0) {
            return Err(Error::arg(
                "alpha_total",
                format!("must be nonnegative, got {}", self.alpha_total),
            ));
        }
        Ok(())
    }
}

/// Per-sensor outcome of the allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorAllocation {
    pub index: usize,
    pub alpha_i: f64,
    pub design: QuantizerDesign,
    pub active: bool,
    #[serde(with = "crate::serde_ext")]
    pub quality: f64,
    pub d_fc_star: f64,
    pub d_eve_star: f64,
}

/// Totals obtained when every FC channel is made ideal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealFcBenchmark {
    /// Greedy allocation rerun with `rho_fc = 0` at every site.
    pub d_fc: f64,
    pub d_eve: f64,
    /// The allocated designs scored as if the FC channels were ideal.
    pub same_design_d_fc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// Sensors in processing order (nonincreasing quality).
    pub per_sensor: Vec<SensorAllocation>,
    pub total_d_fc: f64,
    pub total_d_eve: f64,
    pub active_count: usize,
    pub benchmark: Option<IdealFcBenchmark>,
}

impl AllocationResult {
    pub fn alpha_sum(&self) -> f64 {
        self.per_sensor.iter().map(|s| s.alpha_i).sum()
    }

    /// Allocation entries sorted back into site order.
    pub fn by_index(&self) -> Vec<SensorAllocation> {
        let mut v = self.per_sensor.clone();
        v.sort_by_key(|s| s.index);
        v
    }
}

/// `(D*_FC, D*_E, lambda*)` at the FC-optimal threshold with no Eve budget.
pub fn unconstrained_optimum<M: ObservationModel>(site: &SensorSite<M>) -> Result<(f64, f64, f64)> {
    let d = unconstrained_design(site)?;
    Ok((d.d_fc, d.d_eve, d.lambda))
}

fn ratio(d_fc: f64, d_eve: f64) -> f64 {
    if d_eve < EVE_FLOOR {
        f64::INFINITY
    } else {
        d_fc / d_eve
    }
}

pub fn quality_ratio<M: ObservationModel>(site: &SensorSite<M>) -> Result<f64> {
    let (f, e, _) = unconstrained_optimum(site)?;
    Ok(ratio(f, e))
}

fn annotate<T>(index: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Sensor {
        index,
        source: Box::new(e),
    })
}

fn sleeping(index: usize, quality: f64, free: &QuantizerDesign) -> SensorAllocation {
    SensorAllocation {
        index,
        alpha_i: 0.0,
        design: QuantizerDesign::blind(),
        active: false,
        quality,
        d_fc_star: free.d_fc,
        d_eve_star: free.d_eve,
    }
}

fn free_designs<M: ObservationModel + Send>(sites: &[SensorSite<M>]) -> Result<Vec<QuantizerDesign>> {
    sites
        .par_iter()
        .enumerate()
        .map(|(i, s)| annotate(i, unconstrained_design(s)))
        .collect()
}

fn run_greedy<M: ObservationModel>(
    sites: &[SensorSite<M>],
    free: &[QuantizerDesign],
    alpha_total: f64,
) -> Result<Vec<SensorAllocation>> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    let quality: Vec<f64> = free.iter().map(|d| ratio(d.d_fc, d.d_eve)).collect();
    order.sort_by(|&a, &b| quality[b].total_cmp(&quality[a]).then(a.cmp(&b)));

    let mut remaining = alpha_total;
    let mut out = Vec::with_capacity(sites.len());
    for i in order {
        let f = &free[i];
        if remaining <= BUDGET_EPS {
            out.push(sleeping(i, quality[i], f));
            continue;
        }
        let (alpha_i, design) = if remaining >= f.d_eve {
            let d = QuantizerDesign {
                alpha_tilde: f.d_eve,
                ..*f
            };
            (f.d_eve, d)
        } else {
            (remaining, annotate(i, design_quantizer(&sites[i], remaining))?)
        };
        remaining = (remaining - alpha_i).max(0.0);
        out.push(SensorAllocation {
            index: i,
            alpha_i,
            design,
            active: true,
            quality: quality[i],
            d_fc_star: f.d_fc,
            d_eve_star: f.d_eve,
        });
    }
    Ok(out)
}

fn totals(per_sensor: &[SensorAllocation]) -> (f64, f64, usize) {
    per_sensor
        .iter()
        .filter(|s| s.active)
        .fold((0.0, 0.0, 0), |(f, e, n), s| (f + s.design.d_fc, e + s.design.d_eve, n + 1))
}

fn with_ideal_fc<M: Clone>(site: &SensorSite<M>) -> SensorSite<M> {
    SensorSite {
        fc_channel: BscChannel::IDEAL,
        ..site.clone()
    }
}

/// Runs the greedy allocation over the whole network.
pub fn allocate<M: ObservationModel + Clone + Send>(config: &NetworkConfig<M>) -> Result<AllocationResult> {
    config.validate()?;
    let per_sensor = run_greedy(&config.sites, &free_designs(&config.sites)?, config.alpha_total)?;
    let (total_d_fc, total_d_eve, active_count) = totals(&per_sensor);

    let benchmark = if config.benchmark_ideal_fc {
        let ideal: Vec<SensorSite<M>> = config.sites.iter().map(with_ideal_fc).collect();
        let rerun = run_greedy(&ideal, &free_designs(&ideal)?, config.alpha_total)?;
        let (d_fc, d_eve, _) = totals(&rerun);
        let same_design_d_fc = per_sensor
            .iter()
            .filter(|s| s.active)
            .map(|s| site_divergences(s.design.op, &ideal[s.index]).0)
            .sum();
        Some(IdealFcBenchmark {
            d_fc,
            d_eve,
            same_design_d_fc,
        })
    } else {
        None
    };

    Ok(AllocationResult {
        per_sensor,
        total_d_fc,
        total_d_eve,
        active_count,
        benchmark,
    })
}

/// Network totals for the first `n` sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub total_d_fc: f64,
    pub total_d_eve: f64,
    pub active_count: usize,
}

/// Allocates over each prefix `sites[..n]` for `n` in `ns`.
pub fn growth_curve<M: ObservationModel + Send>(
    sites: &[SensorSite<M>],
    alpha_total: f64,
    ns: &[usize],
) -> Result<Vec<GrowthPoint>> {
    if !(alpha_total >= 0.0) {
        return Err(Error::arg("alpha_total", format!("must be nonnegative, got {alpha_total}")));
    }
    if let Some(&n) = ns.iter().find(|&&n| n == 0 || n > sites.len()) {
        return Err(Error::arg("n", format!("prefix size {n} outside 1..={}", sites.len())));
    }
    let free = free_designs(sites)?;
    ns.par_iter()
        .map(|&n| {
            let per = run_greedy(&sites[..n], &free[..n], alpha_total)?;
            let (total_d_fc, total_d_eve, active_count) = totals(&per);
            Ok(GrowthPoint {
                n,
                total_d_fc,
                total_d_eve,
                active_count,
            })
        })
        .collect()
}

/// Distribution of randomly drawn sites: common SNR, uniform crossovers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteDistribution {
    pub snr: f64,
    pub rho_fc_max: f64,
    pub rho_eve_max: f64,
}

impl Default for SiteDistribution {
    fn default() -> Self {
        Self {
            snr: 1.0,
            rho_fc_max: 0.01,
            rho_eve_max: 0.1,
        }
    }
}

impl SiteDistribution {
    pub fn validate(&self) -> Result<()> {
        GaussianSensorModel::with_snr(self.snr).map_err(|_| {
            Error::arg("snr", format!("must be positive and finite, got {}", self.snr))
        })?;
        for (name, v) in [("rho_fc_max", self.rho_fc_max), ("rho_eve_max", self.rho_eve_max)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(Error::arg(name, format!("must lie in [0, 0.5], got {v}")));
            }
        }
        Ok(())
    }
}

/// Draws `n` sites from `dist`. Sites are drawn sequentially from a single
/// stream, so the first `m` sites for a seed do not depend on `n`.
pub fn random_sites(n: usize, dist: SiteDistribution, seed: u64) -> Result<Vec<SensorSite>> {
    dist.validate()?;
    let model = GaussianSensorModel::with_snr(dist.snr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = |max: f64| max.min(0.5 - f64::EPSILON);
    (0..n)
        .map(|_| {
            let fc = rng.random::<f64>() * upper(dist.rho_fc_max);
            let eve = rng.random::<f64>() * upper(dist.rho_eve_max);
            Ok(SensorSite::new(model, BscChannel::new(fc)?, BscChannel::new(eve)?))
        })
        .collect()
}
