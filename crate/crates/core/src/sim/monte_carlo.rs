//! Seeded Monte Carlo of the sensor, channel and fusion pipeline.
//!
//! Every trial owns a ChaCha stream selected by `(seed, purpose, trial)`, so
//! results do not depend on how rayon splits the work. Fusion uses the
//! log-likelihood-ratio sum over all received bits, computed from per-sensor
//! ones counts so equal count vectors give bit-equal statistics. Thresholds
//! are calibrated on a separate H0 stream and randomized at ties; estimates
//! use the conditional decision probability at ties instead of a coin.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian::GaussianSensorModel;
use crate::greedy::{AllocationResult, NetworkConfig};
use crate::roc::{bsc_transform, BscChannel, OperatingPoint};

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOptions {
    pub window: u64,
    pub trials: u64,
    /// H0 trials used to set the fusion threshold; `None` means ten times
    /// `trials`.
    pub calibration_trials: Option<u64>,
    pub fa_target: f64,
    pub seed: u64,
}

impl MonteCarloOptions {
    pub fn new(window: u64, trials: u64, seed: u64) -> Self {
        Self {
            window,
            trials,
            calibration_trials: None,
            fa_target: super::stein::DEFAULT_DELTA,
            seed,
        }
    }

    fn calibration(&self) -> u64 {
        self.calibration_trials.unwrap_or(self.trials.saturating_mul(10))
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::arg("window", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::arg("trials", "must be at least 1"));
        }
        if self.calibration() == 0 {
            return Err(Error::arg("calibration_trials", "must be at least 1"));
        }
        if !(self.fa_target > 0.0 && self.fa_target < 1.0) {
            return Err(Error::arg(
                "fa_target",
                format!("must lie in (0, 1), got {}", self.fa_target),
            ));
        }
        Ok(())
    }
}

/// Threshold with randomization: decide H1 above `threshold`, and with
/// probability `randomization` exactly at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionRule {
    pub threshold: f64,
    pub randomization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_tally(t: Tally, rule: FusionRule, n: u64, miss: bool) -> Self {
        let g = rule.randomization;
        let hits = if miss {
            t.below as f64 + (1.0 - g) * t.tie as f64
        } else {
            t.above as f64 + g * t.tie as f64
        };
        let value = hits / n as f64;
        Self {
            value,
            std_error: (value * (1.0 - value) / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub fc_miss: Estimate,
    pub fc_false_alarm: Estimate,
    pub eve_miss: Estimate,
    pub eve_false_alarm: Estimate,
    pub fc_rule: FusionRule,
    pub eve_rule: FusionRule,
    pub options: MonteCarloOptions,
    pub calibration_trials: u64,
    /// SHA-256 of the canonical JSON of network, designs and options.
    pub config_hash: String,
}

/// Bits of one trial, sensor-major: entry `i * window + t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub hypothesis: Hypothesis,
    pub sensor_bits: Vec<bool>,
    pub fc_bits: Vec<bool>,
    pub eve_bits: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    model: GaussianSensorModel,
    lambda: f64,
    fc: BscChannel,
    eve: BscChannel,
    fc_w: (f64, f64),
    eve_w: (f64, f64),
}

fn llr_weights(op: OperatingPoint) -> (f64, f64) {
    // Designs on the diagonal carry no information; keep their weight exactly 0.
    if op.pfa == op.pd {
        return (0.0, 0.0);
    }
    ((op.pd / op.pfa).ln(), ((1.0 - op.pd) / (1.0 - op.pfa)).ln())
}

fn links(config: &NetworkConfig, designs: &AllocationResult) -> Result<Vec<Link>> {
    config.validate()?;
    let n = config.sites.len();
    if designs.per_sensor.len() != n {
        return Err(Error::LengthMismatch(n, designs.per_sensor.len()));
    }
    let by_index = designs.by_index();
    by_index
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if a.index != i {
                return Err(Error::arg("designs", format!("no design for sensor {i}")));
            }
            let site = &config.sites[i];
            let op = a.design.op;
            Ok(Link {
                model: site.model,
                lambda: a.design.lambda,
                fc: site.fc_channel,
                eve: site.eve_channel,
                fc_w: llr_weights(bsc_transform(op, site.fc_channel)),
                eve_w: llr_weights(bsc_transform(op, site.eve_channel)),
            })
        })
        .collect()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Calibration = 1,
    EstimateH0 = 2,
    EstimateH1 = 3,
}

fn trial_rng(seed: u64, purpose: Purpose, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(purpose as u64)));
    rng.set_stream(trial);
    rng
}

/// Draws one trial, reporting `(sensor, u, v, w)` per bit in sensor-major order.
fn draw_trial(
    rng: &mut ChaCha8Rng,
    links: &[Link],
    window: u64,
    hyp: Hypothesis,
    mut sink: impl FnMut(usize, bool, bool, bool),
) {
    for (i, l) in links.iter().enumerate() {
        let mean = match hyp {
            Hypothesis::H0 => 0.0,
            Hypothesis::H1 => l.model.theta(),
        };
        for _ in 0..window {
            let z: f64 = rng.sample(StandardNormal);
            let u = mean + l.model.sigma() * z > l.lambda;
            let v = u ^ rng.random_bool(l.fc.crossover());
            let w = u ^ rng.random_bool(l.eve.crossover());
            sink(i, u, v, w);
        }
    }
}

fn statistic(counts: &[u64], window: u64, weights: impl Fn(usize) -> (f64, f64)) -> f64 {
    let s = counts.iter().enumerate().fold(0.0, |acc, (i, &k)| {
        let (a, b) = weights(i);
        acc + k as f64 * a + (window - k) as f64 * b
    });
    s + 0.0
}

fn trial_statistics(links: &[Link], window: u64, seed: u64, purpose: Purpose, trial: u64) -> (f64, f64) {
    let hyp = match purpose {
        Purpose::EstimateH1 => Hypothesis::H1,
        _ => Hypothesis::H0,
    };
    let mut rng = trial_rng(seed, purpose, trial);
    let mut fc = vec![0u64; links.len()];
    let mut eve = vec![0u64; links.len()];
    draw_trial(&mut rng, links, window, hyp, |i, _, v, w| {
        fc[i] += v as u64;
        eve[i] += w as u64;
    });
    (
        statistic(&fc, window, |i| links[i].fc_w),
        statistic(&eve, window, |i| links[i].eve_w),
    )
}

/// Reproduces the bit streams of one estimation trial.
pub fn trial_record(
    config: &NetworkConfig,
    designs: &AllocationResult,
    window: u64,
    seed: u64,
    hypothesis: Hypothesis,
    trial: u64,
) -> Result<TrialRecord> {
    let links = links(config, designs)?;
    let purpose = match hypothesis {
        Hypothesis::H0 => Purpose::EstimateH0,
        Hypothesis::H1 => Purpose::EstimateH1,
    };
    let mut rng = trial_rng(seed, purpose, trial);
    let cap = links.len() * window as usize;
    let mut rec = TrialRecord {
        hypothesis,
        sensor_bits: Vec::with_capacity(cap),
        fc_bits: Vec::with_capacity(cap),
        eve_bits: Vec::with_capacity(cap),
    };
    draw_trial(&mut rng, &links, window, hypothesis, |_, u, v, w| {
        rec.sensor_bits.push(u);
        rec.fc_bits.push(v);
        rec.eve_bits.push(w);
    });
    Ok(rec)
}

#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

type Histogram = BTreeMap<Key, u64>;

fn merge(mut a: Histogram, b: Histogram) -> Histogram {
    for (k, n) in b {
        *a.entry(k).or_insert(0) += n;
    }
    a
}

fn chunks(n: u64) -> impl ParallelIterator<Item = std::ops::Range<u64>> {
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n))
}

fn calibrate(hist: &Histogram, n: u64, fa: f64) -> FusionRule {
    let target = fa * n as f64;
    let mut above = 0u64;
    for (k, &count) in hist.iter().rev() {
        if (above + count) as f64 >= target {
            return FusionRule {
                threshold: k.0,
                randomization: ((target - above as f64) / count as f64).clamp(0.0, 1.0),
            };
        }
        above += count;
    }
    // fa < 1 guarantees the loop returns for a nonempty histogram.
    FusionRule {
        threshold: f64::NEG_INFINITY,
        randomization: 1.0,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    below: u64,
    tie: u64,
    above: u64,
}

impl Tally {
    fn add(mut self, s: f64, rule: FusionRule) -> Self {
        match s.total_cmp(&rule.threshold) {
            std::cmp::Ordering::Less => self.below += 1,
            std::cmp::Ordering::Equal => self.tie += 1,
            std::cmp::Ordering::Greater => self.above += 1,
        }
        self
    }

    fn plus(self, o: Self) -> Self {
        Self {
            below: self.below + o.below,
            tie: self.tie + o.tie,
            above: self.above + o.above,
        }
    }
}

fn tally(
    links: &[Link],
    opts: &MonteCarloOptions,
    purpose: Purpose,
    fc_rule: FusionRule,
    eve_rule: FusionRule,
) -> (Tally, Tally) {
    chunks(opts.trials)
        .map(|r| {
            r.fold((Tally::default(), Tally::default()), |(f, e), t| {
                let (sf, se) = trial_statistics(links, opts.window, opts.seed, purpose, t);
                (f.add(sf, fc_rule), e.add(se, eve_rule))
            })
        })
        .reduce(
            || (Tally::default(), Tally::default()),
            |a, b| (a.0.plus(b.0), a.1.plus(b.1)),
        )
}

/// SHA-256 over the canonical JSON of the simulation inputs.
pub fn config_hash(config: &NetworkConfig, designs: &AllocationResult, opts: &MonteCarloOptions) -> String {
    let doc = serde_json::json!({
        "network": config,
        "designs": designs,
        "options": opts,
    });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

/// Estimates miss and false-alarm probabilities of the NP-calibrated
/// fusion rule at the FC and at Eve.
pub fn simulate_monte_carlo(
    config: &NetworkConfig,
    designs: &AllocationResult,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloSummary> {
    opts.validate()?;
    let links = links(config, designs)?;
    let n_cal = opts.calibration();

    let (fc_hist, eve_hist) = chunks(n_cal)
        .map(|r| {
            r.fold((Histogram::new(), Histogram::new()), |(mut f, mut e), t| {
                let (sf, se) = trial_statistics(&links, opts.window, opts.seed, Purpose::Calibration, t);
                *f.entry(Key(sf)).or_insert(0) += 1;
                *e.entry(Key(se)).or_insert(0) += 1;
                (f, e)
            })
        })
        .reduce(
            || (Histogram::new(), Histogram::new()),
            |a, b| (merge(a.0, b.0), merge(a.1, b.1)),
        );
    let fc_rule = calibrate(&fc_hist, n_cal, opts.fa_target);
    let eve_rule = calibrate(&eve_hist, n_cal, opts.fa_target);

    let (fc0, eve0) = tally(&links, opts, Purpose::EstimateH0, fc_rule, eve_rule);
    let (fc1, eve1) = tally(&links, opts, Purpose::EstimateH1, fc_rule, eve_rule);
    let n = opts.trials;
    Ok(MonteCarloSummary {
        fc_miss: Estimate::from_tally(fc1, fc_rule, n, true),
        fc_false_alarm: Estimate::from_tally(fc0, fc_rule, n, false),
        eve_miss: Estimate::from_tally(eve1, eve_rule, n, true),
        eve_false_alarm: Estimate::from_tally(eve0, eve_rule, n, false),
        fc_rule,
        eve_rule,
        options: *opts,
        calibration_trials: n_cal,
        config_hash: config_hash(config, designs, opts),
    })
}
