use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use secquant::boundary::trace_constraint_curve;
use secquant::export;
use secquant::greedy::{growth_curve, random_sites, SiteDistribution};
use secquant::roc::bsc_transform;
use secquant::sim::monte_carlo::{simulate_monte_carlo, MonteCarloOptions, MonteCarloSummary};
use secquant::sim::{np_test, stein_curve, ExponentCurvePoint};
use secquant::solver::{alpha_max, eval_h, tradeoff_curve, unconstrained_design};
use secquant::{
    allocate, design_quantizer, AllocationResult, BscChannel, GaussianSensorModel, NetworkConfig, ObservationModel,
    OperatingPoint, QuantizerDesign, SensorAllocation, SensorSite,
};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{sibling, Artifact};

const UNITS: &str = "nats";

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SiteArgs {
    /// Signal amplitude under H1.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Shorthand for `theta = snr, sigma = 1`.
    #[arg(long)]
    pub snr: Option<f64>,
    /// FC channel crossover probability (default 0).
    #[arg(long)]
    pub rho_fc: Option<f64>,
    /// Eve channel crossover probability.
    #[arg(long)]
    pub rho_eve: Option<f64>,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn channel(name: &str, v: f64) -> CliResult<BscChannel> {
    BscChannel::new(v).map_err(|_| CliError::Validation(format!("`{name}` must lie in [0, 0.5), got {v}")))
}

impl SiteArgs {
    fn model(&self) -> CliResult<GaussianSensorModel> {
        let model = match (self.theta, self.sigma, self.snr) {
            (None, None, Some(snr)) => GaussianSensorModel::with_snr(positive("snr", snr)?),
            (Some(_), _, Some(_)) | (_, Some(_), Some(_)) => {
                return Err(CliError::Validation("give either `snr` or `theta` and `sigma`, not both".into()))
            }
            (None, _, None) => return Err(CliError::missing("theta")),
            (Some(_), None, None) => return Err(CliError::missing("sigma")),
            (Some(t), Some(s), None) => GaussianSensorModel::new(positive("theta", t)?, positive("sigma", s)?),
        };
        Ok(model?)
    }

    fn site(&self) -> CliResult<SensorSite> {
        let model = self.model()?;
        let fc = channel("rho_fc", self.rho_fc.unwrap_or(0.0))?;
        let eve = channel("rho_eve", self.rho_eve.ok_or_else(|| CliError::missing("rho_eve"))?)?;
        Ok(SensorSite::new(model, fc, eve))
    }
}

/// Flat JSON form of a single-sensor design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignArtifact {
    pub kind: String,
    pub units: String,
    pub site: SensorSite,
    #[serde(with = "secquant::serde_ext")]
    pub lambda: f64,
    pub pfa: f64,
    pub pd: f64,
    pub d_sensor: f64,
    pub d_fc: f64,
    pub d_eve: f64,
    pub binding: bool,
    #[serde(with = "secquant::serde_ext")]
    pub alpha_tilde: f64,
}

impl DesignArtifact {
    fn new(site: SensorSite, d: &QuantizerDesign) -> Self {
        Self {
            kind: "design".into(),
            units: UNITS.into(),
            site,
            lambda: d.lambda,
            pfa: d.op.pfa,
            pd: d.op.pd,
            d_sensor: d.d_sensor,
            d_fc: d.d_fc,
            d_eve: d.d_eve,
            binding: d.binding,
            alpha_tilde: d.alpha_tilde,
        }
    }

    fn design(&self) -> CliResult<QuantizerDesign> {
        let op = OperatingPoint::new(self.pfa, self.pd)?;
        Ok(QuantizerDesign {
            lambda: self.lambda,
            op,
            d_sensor: self.d_sensor,
            d_fc: self.d_fc,
            d_eve: self.d_eve,
            binding: self.binding,
            alpha_tilde: self.alpha_tilde,
        })
    }
}

fn warn_if_blind(d: &QuantizerDesign) {
    if d.is_blind() {
        eprintln!("warning: blind design: the budget forces zero divergence at the fusion center");
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct DesignArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub site: SiteArgs,
    /// Per-sensor Eve budget in nats; omit for the unconstrained design.
    #[arg(long)]
    pub alpha_tilde: Option<f64>,
    /// Also write `h(lambda)` on this many thresholds to `<stem>.h_trace.csv`.
    #[arg(long)]
    pub h_trace_points: Option<usize>,
}

const DESIGN_CSV_HEADER: &str = "lambda,pfa,pd,d_sensor,d_fc,d_eve,binding,alpha_tilde";

pub fn design(cfg: &RunConfig, flags: &DesignArgs) -> CliResult<Vec<Artifact>> {
    let p: DesignArgs = cfg.params(flags)?;
    let site = p.site.site()?;
    let d = match p.alpha_tilde {
        Some(a) if !(a >= 0.0) => {
            return Err(CliError::Validation(format!("`alpha_tilde` must be nonnegative, got {a}")))
        }
        Some(a) => design_quantizer(&site, a)?,
        None => unconstrained_design(&site)?,
    };
    warn_if_blind(&d);
    let (out, format) = cfg.globals.output("design.json", Format::Json);
    let doc = DesignArtifact::new(site, &d);
    let mut files = vec![match format {
        Format::Json => Artifact::json(out.clone(), &doc),
        Format::Csv => Artifact::text(
            out.clone(),
            format!(
                "{DESIGN_CSV_HEADER}\n{},{},{},{},{},{},{},{}\n",
                d.lambda, d.op.pfa, d.op.pd, d.d_sensor, d.d_fc, d.d_eve, d.binding, d.alpha_tilde
            ),
        ),
    }];
    if let Some(n) = p.h_trace_points {
        if n < 2 {
            return Err(CliError::Validation("`h_trace_points` must be at least 2".into()));
        }
        let alpha = p.alpha_tilde.unwrap_or(0.0);
        let (lo, hi) = site.model.threshold_bracket();
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let l = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (l, eval_h(&site, l, alpha))
            })
            .collect();
        files.push(Artifact::text(sibling(&out, "h_trace.csv"), export::h_trace_csv(&pts)));
    }
    Ok(files)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct TradeoffArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub site: SiteArgs,
    /// Explicit ascending budget grid.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Evenly spaced grid from 0 to `alpha_max_factor` times the peak Eve divergence.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub alpha_max_factor: Option<f64>,
}

#[derive(Serialize)]
struct TradeoffDoc<'a> {
    kind: &'static str,
    units: &'static str,
    site: SensorSite,
    alpha_max: f64,
    points: &'a [secquant::TradeoffPoint],
}

pub fn tradeoff(cfg: &RunConfig, flags: &TradeoffArgs) -> CliResult<Vec<Artifact>> {
    let p: TradeoffArgs = cfg.params(flags)?;
    let site = p.site.site()?;
    let amax = alpha_max(&site)?;
    let alphas = match (&p.alphas, p.points) {
        (Some(a), None) => a.clone(),
        (None, Some(n)) => {
            if n < 2 {
                return Err(CliError::Validation("`points` must be at least 2".into()));
            }
            let top = positive("alpha_max_factor", p.alpha_max_factor.unwrap_or(1.2))? * amax;
            (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
        }
        (Some(_), Some(_)) => return Err(CliError::Validation("give either `alphas` or `points`, not both".into())),
        (None, None) => return Err(CliError::missing("alphas")),
    };
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0)) {
        return Err(CliError::Validation(format!("`alphas` entries must be nonnegative, got {a}")));
    }
    let curve = tradeoff_curve(&site, &alphas)?;
    let (out, format) = cfg.globals.output("tradeoff.csv", Format::Csv);
    let doc = TradeoffDoc {
        kind: "tradeoff",
        units: UNITS,
        site,
        alpha_max: amax,
        points: &curve,
    };
    Ok(vec![match format {
        Format::Csv => Artifact::text(out, export::tradeoff_csv(&curve)),
        Format::Json => Artifact::json(out, &doc),
    }])
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GreedyArgs {
    /// Number of randomly drawn sensors.
    #[arg(long)]
    pub n: Option<usize>,
    /// Total Eve budget in nats.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Common SNR of the drawn sensors (default 1).
    #[arg(long)]
    pub snr: Option<f64>,
    /// FC crossovers are drawn from U(0, rho_fc_max) (default 0.01).
    #[arg(long)]
    pub rho_fc_max: Option<f64>,
    /// Eve crossovers are drawn from U(0, rho_eve_max) (default 0.1).
    #[arg(long)]
    pub rho_eve_max: Option<f64>,
    /// Also report totals with ideal FC channels.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub benchmark: Option<bool>,
    /// Network sizes for the growth curve written to `<stem>.growth.csv`.
    #[arg(long, value_delimiter = ',')]
    pub sweep_n: Option<Vec<usize>>,
    /// Explicit sites (config only); replaces random drawing.
    #[arg(skip)]
    pub sites: Option<Vec<SensorSite>>,
}

/// Full record of a greedy run; `verify` reads it back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationArtifact {
    pub kind: String,
    pub units: String,
    pub seed: Option<u64>,
    pub distribution: Option<SiteDistribution>,
    pub network: NetworkConfig,
    pub allocation: AllocationResult,
}

pub fn greedy(cfg: &RunConfig, flags: &GreedyArgs) -> CliResult<Vec<Artifact>> {
    let p: GreedyArgs = cfg.params(flags)?;
    let alpha = p.alpha.ok_or_else(|| CliError::missing("alpha"))?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(CliError::Validation(format!("`alpha` must be nonnegative, got {alpha}")));
    }
    let (sites, distribution) = match p.sites {
        Some(sites) => {
            if p.n.is_some_and(|n| n != sites.len()) {
                return Err(CliError::Validation("`n` disagrees with the number of `sites`".into()));
            }
            (sites, None)
        }
        None => {
            let n = p.n.ok_or_else(|| CliError::missing("n"))?;
            let seed = cfg.globals.seed.ok_or_else(|| CliError::missing("seed"))?;
            let dist = SiteDistribution {
                snr: p.snr.unwrap_or(1.0),
                rho_fc_max: p.rho_fc_max.unwrap_or(0.01),
                rho_eve_max: p.rho_eve_max.unwrap_or(0.1),
            };
            (random_sites(n, dist, seed)?, Some(dist))
        }
    };
    let network = NetworkConfig::new(sites, alpha, p.benchmark.unwrap_or(false))?;
    let result = allocate(&network)?;
    if result.active_count == 0 {
        eprintln!("warning: blind network: every sensor sleeps");
    }

    let (out, format) = cfg.globals.output("allocation.csv", Format::Csv);
    let doc = AllocationArtifact {
        kind: "allocation".into(),
        units: UNITS.into(),
        seed: distribution.and(cfg.globals.seed),
        distribution,
        network,
        allocation: result,
    };
    let mut files = vec![
        match format {
            Format::Csv => Artifact::text(out.clone(), export::allocation_csv(&doc.allocation)),
            Format::Json => Artifact::json(out.clone(), &doc),
        },
        Artifact::json(sibling(&out, "summary.json"), &doc),
    ];
    if let Some(ns) = &p.sweep_n {
        let growth = growth_curve(&doc.network.sites, alpha, ns)?;
        files.push(Artifact::text(sibling(&out, "growth.csv"), export::growth_csv(&growth)));
    }
    Ok(files)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct TraceArgs {
    /// Eve channel crossover probability.
    #[arg(long)]
    pub rho_eve: Option<f64>,
    /// Level of Eve's divergence to trace, in nats.
    #[arg(long)]
    pub alpha_tilde: Option<f64>,
    /// Number of interior points (default 200).
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Serialize)]
struct TraceDoc<'a> {
    kind: &'static str,
    units: &'static str,
    rho_eve: f64,
    alpha_tilde: f64,
    points: &'a [secquant::boundary::BoundaryPoint],
}

pub fn trace_boundary(cfg: &RunConfig, flags: &TraceArgs) -> CliResult<Vec<Artifact>> {
    let p: TraceArgs = cfg.params(flags)?;
    let rho = p.rho_eve.ok_or_else(|| CliError::missing("rho_eve"))?;
    let eve = channel("rho_eve", rho)?;
    let alpha = positive("alpha_tilde", p.alpha_tilde.ok_or_else(|| CliError::missing("alpha_tilde"))?)?;
    let pts = trace_constraint_curve(alpha, eve, p.points.unwrap_or(200))?;
    if pts.is_empty() {
        eprintln!("warning: level {alpha} is not reachable above the diagonal; the trace is empty");
    }
    let (out, format) = cfg.globals.output("boundary.csv", Format::Csv);
    Ok(vec![match format {
        Format::Csv => Artifact::text(out, export::trace_csv(&pts)),
        Format::Json => Artifact::json(
            out,
            &TraceDoc {
                kind: "trace",
                units: UNITS,
                rho_eve: rho,
                alpha_tilde: alpha,
                points: &pts,
            },
        ),
    }])
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Design or allocation JSON written by `design` or `greedy`.
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    /// Observation windows for the exact exponent curve (default 50,100,200,400).
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<u64>>,
    /// False-alarm level (default 0.01).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Allowed relative gap between the last local slope and the target (default 0.15).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Monte Carlo trials; enables the simulation check.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Window used by the simulation (default 20).
    #[arg(long)]
    pub mc_window: Option<u64>,
    /// H0 trials for threshold calibration (default 10 x trials).
    #[arg(long)]
    pub calibration_trials: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteinReport {
    pub target_kld: f64,
    pub points: Vec<ExponentCurvePoint>,
    pub final_local_slope: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub summary: MonteCarloSummary,
    pub empirical_exponent: f64,
    /// Exact miss probability for single-sensor artifacts.
    pub exact_fc_miss: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub kind: &'static str,
    pub units: &'static str,
    pub artifact: PathBuf,
    pub no_information: bool,
    pub stein: Option<SteinReport>,
    pub simulation: Option<SimulationReport>,
    pub pass: bool,
}

enum Loaded {
    Design(DesignArtifact),
    Allocation(AllocationArtifact),
}

fn load_artifact(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::artifact(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))?;
    let kind = v.get("kind").and_then(Value::as_str).map(str::to_owned);
    match kind.as_deref() {
        Some("design") => serde_json::from_value(v).map(Loaded::Design),
        Some("allocation") => serde_json::from_value(v).map(Loaded::Allocation),
        _ => return Err(CliError::artifact(path, "not a design or allocation artifact")),
    }
    .map_err(|e| CliError::artifact(path, e))
}

fn single_site(site: SensorSite, design: QuantizerDesign) -> CliResult<(NetworkConfig, AllocationResult)> {
    let network = NetworkConfig::new(vec![site], design.alpha_tilde.max(design.d_eve), false)?;
    let (d_fc, d_eve) = secquant::roc::site_divergences(design.op, &site);
    let alloc = AllocationResult {
        per_sensor: vec![SensorAllocation {
            index: 0,
            alpha_i: design.d_eve,
            design,
            active: !design.is_blind(),
            quality: if d_eve > 0.0 { d_fc / d_eve } else { f64::INFINITY },
            d_fc_star: d_fc,
            d_eve_star: d_eve,
        }],
        total_d_fc: d_fc,
        total_d_eve: d_eve,
        active_count: usize::from(!design.is_blind()),
        benchmark: None,
    };
    Ok((network, alloc))
}

pub fn verify(cfg: &RunConfig, flags: &VerifyArgs) -> CliResult<(VerifyReport, Vec<Artifact>)> {
    let p: VerifyArgs = cfg.params(flags)?;
    let path = p.artifact.clone().ok_or_else(|| CliError::missing("artifact"))?;
    let delta = p.delta.unwrap_or(0.01);
    if !(delta > 0.0 && delta < 0.5) {
        return Err(CliError::Validation(format!("`delta` must lie in (0, 0.5), got {delta}")));
    }
    let tolerance = positive("tolerance", p.tolerance.unwrap_or(0.15))?;
    let windows = p.windows.clone().unwrap_or_else(|| vec![50, 100, 200, 400]);
    if windows.is_empty() || windows.contains(&0) {
        return Err(CliError::Validation("`windows` must be nonempty and positive".into()));
    }
    let loaded = load_artifact(&path)?;

    let (network, alloc, single_fc_op) = match &loaded {
        Loaded::Design(doc) => {
            let d = doc.design()?;
            let (net, alloc) = single_site(doc.site, d)?;
            (net, alloc, Some(bsc_transform(d.op, doc.site.fc_channel)))
        }
        Loaded::Allocation(doc) => {
            doc.network.validate()?;
            (doc.network.clone(), doc.allocation.clone(), None)
        }
    };
    let target = alloc.total_d_fc;
    let no_information = alloc.per_sensor.iter().all(|s| {
        let site = &network.sites[s.index];
        let op = bsc_transform(s.design.op, site.fc_channel);
        op.pfa == op.pd
    });

    let stein = match single_fc_op {
        Some(op) => {
            // Every diagonal point yields the same chance-level test.
            let op = if no_information { OperatingPoint::new(0.5, 0.5)? } else { op };
            let points = stein_curve(op, &windows, delta)?;
            let last = points.last().expect("windows nonempty").local_slope;
            let gap = if no_information { last.abs() } else { ((last - target) / target).abs() };
            Some(SteinReport {
                target_kld: target,
                final_local_slope: last,
                relative_gap: gap,
                tolerance,
                pass: gap <= tolerance,
                points,
            })
        }
        None => None,
    };

    let simulation = match p.trials {
        Some(trials) => {
            let seed = cfg.globals.seed.ok_or_else(|| CliError::missing("seed"))?;
            let opts = MonteCarloOptions {
                window: p.mc_window.unwrap_or(20),
                trials,
                calibration_trials: p.calibration_trials,
                fa_target: delta,
                seed,
            };
            let summary = simulate_monte_carlo(&network, &alloc, &opts)?;
            let exact = match single_fc_op {
                Some(op) if !no_information => Some(np_test(op, opts.window, delta)?.log_miss.exp()),
                Some(_) => Some(1.0 - delta),
                None => None,
            };
            let fc = summary.fc_miss;
            let fa = summary.fc_false_alarm;
            let within = |v: f64, e: secquant::sim::monte_carlo::Estimate| {
                (e.value - v).abs() <= 3.0 * e.std_error.max(1.0 / trials as f64)
            };
            let pass = within(delta, fa) && exact.is_none_or(|m| within(m, fc));
            Some(SimulationReport {
                empirical_exponent: -fc.value.ln() / opts.window as f64,
                exact_fc_miss: exact,
                pass,
                summary,
            })
        }
        None => None,
    };
    if stein.is_none() && simulation.is_none() {
        return Err(CliError::Validation(
            "allocation artifacts need `trials` (and `seed`) for the simulation check".into(),
        ));
    }

    let pass = stein.as_ref().is_none_or(|s| s.pass) && simulation.as_ref().is_none_or(|s| s.pass);
    let report = VerifyReport {
        kind: "verify",
        units: UNITS,
        artifact: path,
        no_information,
        pass,
        stein,
        simulation,
    };
    let mut files = Vec::new();
    if let Some(out) = &cfg.globals.out {
        files.push(Artifact::json(out.clone(), &report));
        if let Some(s) = &report.stein {
            files.push(Artifact::text(
                sibling(out, "stein.csv"),
                export::stein_csv(&s.points, s.target_kld),
            ));
        }
    }
    Ok((report, files))
}
