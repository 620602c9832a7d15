//! Monte Carlo harness: ratio means and RMSEs of every estimator against
//! the known truth of each benchmark process, as a function of `k_n`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::comparators::{blocks_theta, hsing_pi, runs_theta, two_scale_threshold, TwoScaleSpec};
use crate::compound::{empirical_compound, profile_from_ranked};
use crate::error::{Error, Result};
use crate::extremal::{theta1, theta2, theta3};
use crate::panjer::{panjer_invert, smooth_cluster_pmf_from, smooth_theta1_from};
use crate::series::{make_layout, RankedBlocks, TimeSeries};
use crate::simulate::{reference_truth, replication_rng, sample_path, GroundTruth, Process, ProcessKind};

/// Estimators compared by the harness, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorId {
    PiHat,
    PiSmooth,
    HsingPi,
    Theta1,
    Theta2,
    Theta3,
    Theta1Smooth,
    BlocksTheta,
    RunsTheta,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 9] = [
        EstimatorId::PiHat,
        EstimatorId::PiSmooth,
        EstimatorId::HsingPi,
        EstimatorId::Theta1,
        EstimatorId::Theta2,
        EstimatorId::Theta3,
        EstimatorId::Theta1Smooth,
        EstimatorId::BlocksTheta,
        EstimatorId::RunsTheta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorId::PiHat => "pi_hat",
            EstimatorId::PiSmooth => "pi_smooth",
            EstimatorId::HsingPi => "hsing_pi",
            EstimatorId::Theta1 => "theta1",
            EstimatorId::Theta2 => "theta2",
            EstimatorId::Theta3 => "theta3",
            EstimatorId::Theta1Smooth => "theta1_smooth",
            EstimatorId::BlocksTheta => "blocks_theta",
            EstimatorId::RunsTheta => "runs_theta",
        }
    }

    pub fn estimates_pi(self) -> bool {
        matches!(self, EstimatorId::PiHat | EstimatorId::PiSmooth | EstimatorId::HsingPi)
    }
}

/// Estimators from the comparison study that are not available here; their
/// columns are reported as not implemented.
pub const NOT_IMPLEMENTED: [&str; 2] = ["ferro_pi", "ferro_segers_theta"];

/// Cluster sizes whose probability ratios are tracked.
pub const TRACKED_SIZES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub processes: Vec<Process>,
    pub n: usize,
    pub replications: usize,
    pub k_grid: Vec<usize>,
    pub tau: f64,
    pub m: usize,
    pub sigma: f64,
    pub phi: f64,
    pub master_seed: u64,
    pub burn_in: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            processes: [ProcessKind::SquaredArch1, ProcessKind::MaxAr1, ProcessKind::Ar1Uniform]
                .into_iter()
                .map(ProcessKind::default_process)
                .collect(),
            n: 2000,
            replications: 500,
            k_grid: (50..=250).step_by(10).collect(),
            tau: 1.0,
            m: 8,
            sigma: 0.7,
            phi: 1.3,
            master_seed: 0,
            burn_in: crate::simulate::DEFAULT_BURN_IN,
        }
    }
}

fn parse_value<V: std::str::FromStr>(key: &str, value: &str, line: usize, path: &Path) -> Result<V> {
    value.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid value {value:?} for {key}"),
    })
}

/// Parses `a:b:step` (inclusive) or a comma separated list.
fn parse_grid(value: &str) -> Option<Vec<usize>> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let (a, b, step): (usize, usize, usize) =
            (parts[0].parse().ok()?, parts[1].parse().ok()?, parts[2].parse().ok()?);
        if step == 0 || a > b {
            return None;
        }
        return Some((a..=b).step_by(step).collect());
    }
    value
        .split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<Vec<usize>>>()
        .filter(|v| !v.is_empty())
}

impl ExperimentConfig {
    /// Reads `key = value` lines; `#` starts a comment. Unlisted keys keep
    /// their defaults.
    ///
    /// Keys: `processes`, `n`, `replications`, `k_grid`, `tau`, `m`,
    /// `sigma`, `phi`, `master_seed`, `burn_in`, `arch_eta`,
    /// `arch_lambda`, `max_ar1_theta`, `ar1_r`.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut kinds: Vec<ProcessKind> = cfg.processes.iter().map(Process::kind).collect();
        let (mut eta, mut lambda) = (crate::simulate::ARCH_ETA, crate::simulate::ARCH_LAMBDA);
        let mut theta = crate::simulate::MAX_AR1_THETA;
        let mut r = crate::simulate::AR1_UNIFORM_R;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("expected key = value, got {line:?}"),
                })?;
            match key {
                "processes" => {
                    kinds = value
                        .split(',')
                        .map(|s| s.trim().parse::<ProcessKind>())
                        .collect::<Result<_>>()
                        .map_err(|e| Error::Parse {
                            path: path.to_path_buf(),
                            line: line_no,
                            message: e.to_string(),
                        })?
                }
                "n" => cfg.n = parse_value(key, value, line_no, path)?,
                "replications" => cfg.replications = parse_value(key, value, line_no, path)?,
                "k_grid" => {
                    cfg.k_grid = parse_grid(value).ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("k_grid must be start:end:step or a list, got {value:?}"),
                    })?
                }
                "tau" => cfg.tau = parse_value(key, value, line_no, path)?,
                "m" => cfg.m = parse_value(key, value, line_no, path)?,
                "sigma" => cfg.sigma = parse_value(key, value, line_no, path)?,
                "phi" => cfg.phi = parse_value(key, value, line_no, path)?,
                "master_seed" => cfg.master_seed = parse_value(key, value, line_no, path)?,
                "burn_in" => cfg.burn_in = parse_value(key, value, line_no, path)?,
                "arch_eta" => eta = parse_value(key, value, line_no, path)?,
                "arch_lambda" => lambda = parse_value(key, value, line_no, path)?,
                "max_ar1_theta" => theta = parse_value(key, value, line_no, path)?,
                "ar1_r" => r = parse_value(key, value, line_no, path)?,
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        cfg.processes = kinds
            .into_iter()
            .map(|k| match k {
                ProcessKind::SquaredArch1 => Process::SquaredArch1 { eta, lambda },
                ProcessKind::MaxAr1 => Process::MaxAr1 { theta },
                ProcessKind::Ar1Uniform => Process::Ar1Uniform { r },
                ProcessKind::IidGaussian => Process::IidGaussian,
            })
            .collect();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.processes.is_empty() {
            return Err(Error::invalid("at least one process is required"));
        }
        for p in &self.processes {
            reference_truth(p)?;
        }
        if self.n == 0 || self.replications == 0 {
            return Err(Error::invalid("n and replications must be positive"));
        }
        if self.k_grid.is_empty() {
            return Err(Error::invalid("k_grid must not be empty"));
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k == 0 || k > self.n) {
            return Err(Error::invalid(format!("k_n = {k} must lie in 1..={}", self.n)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau must be positive"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma < self.phi && self.phi.is_finite()) {
            return Err(Error::invalid("smoothing window needs 0 < sigma < phi"));
        }
        Ok(())
    }
}

/// Aggregate of one (process, estimator, quantity, k_n) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCell {
    pub process: ProcessKind,
    pub estimator: EstimatorId,
    /// `pi1`..`pi5` or `theta`.
    pub quantity: String,
    pub k_n: usize,
    pub mean_ratio: f64,
    pub rmse_ratio: f64,
    pub failures: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RatioTable {
    pub cells: Vec<RatioCell>,
}

impl RatioTable {
    pub fn cell(&self, process: ProcessKind, estimator: EstimatorId, quantity: &str, k_n: usize) -> Option<&RatioCell> {
        self.cells
            .iter()
            .find(|c| c.process == process && c.estimator == estimator && c.quantity == quantity && c.k_n == k_n)
    }

    pub const HEADER: &'static str = "process,estimator,quantity,k_n,mean_ratio,rmse_ratio,failures";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.cells.len() + 1));
        out.push_str(Self::HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.process.name(),
                c.estimator.name(),
                c.quantity,
                c.k_n,
                c.mean_ratio,
                c.rmse_ratio,
                c.failures
            );
        }
        out
    }
}

/// Writes the table as CSV with LF line endings.
pub fn emit_table(table: &RatioTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_csv()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Raw estimates of one estimator at one `k_n`: `pi(1..)` or `[theta]`.
type Estimates = Option<Vec<f64>>;

/// All estimates of one replication: `[k index][estimator]`.
type ReplicationEstimates = Vec<[Estimates; 9]>;

/// Evaluates every estimator on `series` for one block count.
pub fn estimates_at(
    series: &TimeSeries<f64>,
    block_count: usize,
    tau: f64,
    m: usize,
    sigma: f64,
    phi: f64,
) -> Result<[Option<Vec<f64>>; 9]> {
    let layout = make_layout(series.len(), block_count)?;
    let ranked = RankedBlocks::new(series, layout)?;
    let counts = ranked.counts_at(tau)?;
    let p = empirical_compound(&counts, block_count)?;
    let pi = panjer_invert(&p, m).ok();
    let profile = profile_from_ranked(&ranked, sigma, phi).ok();
    let two_scale = TwoScaleSpec::benchmark(block_count, layout.block_length);

    let pi_hat = pi.as_ref().map(|pi| pi.probs().to_vec());
    let pi_smooth = profile
        .as_ref()
        .and_then(|prof| smooth_cluster_pmf_from(prof, m).ok())
        .map(|s| s.value.probs().to_vec());
    let hsing = hsing_pi(series, block_count, tau, &two_scale, m)
        .ok()
        .map(|pi| pi.probs().to_vec());
    let t1 = theta1(&p).ok();
    let t2 = pi.as_ref().and_then(|pi| theta2(pi, m).ok());
    let t3 = pi.as_ref().and_then(|pi| theta3(&p, pi, m, tau).ok());
    let t1s = profile.as_ref().and_then(|prof| smooth_theta1_from(prof).ok()).map(|s| s.value);
    let bt = blocks_theta(series, block_count, tau, &two_scale).ok();
    let rt = two_scale_threshold(series, tau, two_scale.s_ratio)
        .and_then(|u| runs_theta(series, u, two_scale.run_length))
        .ok();
    let one = |v: Option<f64>| v.map(|x| vec![x]);
    Ok([
        pi_hat,
        pi_smooth,
        hsing,
        one(t1),
        one(t2),
        one(t3),
        one(t1s),
        one(bt),
        one(rt),
    ])
}

/// Stream index of replication `rep` of the `process_index`-th process.
pub fn stream_index(process_index: usize, rep: usize) -> u64 {
    ((process_index as u64) << 32) | rep as u64
}

fn run_replication(cfg: &ExperimentConfig, process_index: usize, rep: usize) -> Result<ReplicationEstimates> {
    let process = &cfg.processes[process_index];
    let mut rng = replication_rng(cfg.master_seed, stream_index(process_index, rep));
    let series = TimeSeries::new(sample_path(process, cfg.n, cfg.burn_in, &mut rng)?)?;
    cfg.k_grid
        .iter()
        .map(|&k| estimates_at(&series, k, cfg.tau, cfg.m, cfg.sigma, cfg.phi))
        .collect()
}

fn quantities(estimator: EstimatorId, truth: &GroundTruth, m: usize) -> Vec<(String, usize, f64)> {
    if estimator.estimates_pi() {
        (1..=TRACKED_SIZES.min(m))
            .filter(|&j| truth.pi.prob(j) > 0.0)
            .map(|j| (format!("pi{j}"), j - 1, truth.pi.prob(j)))
            .collect()
    } else {
        vec![("theta".to_string(), 0, truth.theta)]
    }
}

/// Aggregates per-replication estimates into ratio cells, summing in
/// replication order.
pub fn aggregate(
    process: ProcessKind,
    truth: &GroundTruth,
    cfg: &ExperimentConfig,
    reps: &[ReplicationEstimates],
) -> Vec<RatioCell> {
    let mut cells = Vec::new();
    for (e_idx, estimator) in EstimatorId::ALL.into_iter().enumerate() {
        for (quantity, offset, target) in quantities(estimator, truth, cfg.m) {
            for (k_idx, &k_n) in cfg.k_grid.iter().enumerate() {
                let (mut sum, mut sq, mut ok, mut failed) = (0.0, 0.0, 0usize, 0usize);
                for rep in reps {
                    match rep[k_idx][e_idx].as_ref().and_then(|v| v.get(offset)) {
                        Some(&est) => {
                            let ratio = est / target;
                            sum += ratio;
                            sq += (ratio - 1.0) * (ratio - 1.0);
                            ok += 1;
                        }
                        None => failed += 1,
                    }
                }
                let (mean_ratio, rmse_ratio) = if ok > 0 {
                    (sum / ok as f64, (sq / ok as f64).sqrt())
                } else {
                    (f64::NAN, f64::NAN)
                };
                cells.push(RatioCell {
                    process,
                    estimator,
                    quantity: quantity.clone(),
                    k_n,
                    mean_ratio,
                    rmse_ratio,
                    failures: failed,
                    successes: ok,
                });
            }
        }
    }
    cells
}

/// Runs the study on a pool of `workers` threads (0 uses the rayon
/// default). The result does not depend on the number of workers.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<RatioTable> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let mut cells = Vec::new();
    for (p_idx, process) in cfg.processes.iter().enumerate() {
        let truth = reference_truth(process)?;
        let reps: Vec<ReplicationEstimates> = pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|rep| run_replication(cfg, p_idx, rep))
                .collect::<Result<_>>()
        })?;
        cells.extend(aggregate(process.kind(), &truth, cfg, &reps));
    }
    Ok(RatioTable { cells })
}
