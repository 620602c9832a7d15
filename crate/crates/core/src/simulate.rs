//! Generators for the benchmark processes, with reproducible seeding.
//!
//! Random streams come from ChaCha20: the 64-bit seed keys the generator
//! and the replication index selects the stream, so replication `i` of a
//! run draws the same numbers whether it is computed alone, serially or on
//! a thread pool. Gaussians use the ziggurat sampler of `rand_distr`;
//! uniforms on the open interval use `rand_distr::Open01`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::panjer::ClusterSizePmf;
use crate::series::TimeSeries;

pub const ARCH_ETA: f64 = 2e-5;
pub const ARCH_LAMBDA: f64 = 0.5;
pub const MAX_AR1_THETA: f64 = 0.5;
pub const AR1_UNIFORM_R: u32 = 4;
pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProcessKind {
    SquaredArch1,
    MaxAr1,
    Ar1Uniform,
    IidGaussian,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 4] = [
        ProcessKind::SquaredArch1,
        ProcessKind::MaxAr1,
        ProcessKind::Ar1Uniform,
        ProcessKind::IidGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::SquaredArch1 => "squared_arch1",
            ProcessKind::MaxAr1 => "max_ar1",
            ProcessKind::Ar1Uniform => "ar1_uniform",
            ProcessKind::IidGaussian => "iid_gaussian",
        }
    }

    /// The process with its benchmark parameters.
    pub fn default_process(self) -> Process {
        match self {
            ProcessKind::SquaredArch1 => Process::SquaredArch1 {
                eta: ARCH_ETA,
                lambda: ARCH_LAMBDA,
            },
            ProcessKind::MaxAr1 => Process::MaxAr1 {
                theta: MAX_AR1_THETA,
            },
            ProcessKind::Ar1Uniform => Process::Ar1Uniform { r: AR1_UNIFORM_R },
            ProcessKind::IidGaussian => Process::IidGaussian,
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProcessKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown process kind {s:?}")))
    }
}

/// A parameterised stationary process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    /// `X_n = (eta + lambda X_{n-1}) Z_n^2`, `Z_n` standard Gaussian.
    SquaredArch1 { eta: f64, lambda: f64 },
    /// `X_n = max((1 - theta) X_{n-1}, W_n)`, `W_n` unit Fréchet.
    MaxAr1 { theta: f64 },
    /// `X_n = X_{n-1} / r + eps_n`, `eps_n` uniform on `{0, 1/r, ..., (r-1)/r}`.
    Ar1Uniform { r: u32 },
    IidGaussian,
}

impl Process {
    pub fn kind(&self) -> ProcessKind {
        match self {
            Process::SquaredArch1 { .. } => ProcessKind::SquaredArch1,
            Process::MaxAr1 { .. } => ProcessKind::MaxAr1,
            Process::Ar1Uniform { .. } => ProcessKind::Ar1Uniform,
            Process::IidGaussian => ProcessKind::IidGaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Process::SquaredArch1 { eta, lambda } => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::invalid(format!("eta must be positive, got {eta}")));
                }
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
                }
            }
            Process::MaxAr1 { theta } => {
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(Error::invalid(format!("theta must lie in (0, 1), got {theta}")));
                }
            }
            Process::Ar1Uniform { r } => {
                if r < 2 {
                    return Err(Error::invalid(format!("r must be at least 2, got {r}")));
                }
            }
            Process::IidGaussian => {}
        }
        Ok(())
    }

    /// `key=value` description used in series file headers.
    pub fn describe(&self) -> String {
        match *self {
            Process::SquaredArch1 { eta, lambda } => {
                format!("kind=squared_arch1 eta={eta} lambda={lambda}")
            }
            Process::MaxAr1 { theta } => format!("kind=max_ar1 theta={theta}"),
            Process::Ar1Uniform { r } => format!("kind=ar1_uniform r={r}"),
            Process::IidGaussian => "kind=iid_gaussian".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub process: Process,
    pub n: usize,
    pub seed: u64,
    /// Discarded initial steps; only used by the squared ARCH(1) chain.
    pub burn_in: usize,
}

impl ProcessSpec {
    pub fn new(process: Process, n: usize, seed: u64) -> Self {
        Self {
            process,
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

/// Generator for replication `index` of a run keyed by `master_seed`.
pub fn replication_rng(master_seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn unit_frechet<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -1.0 / u.ln()
}

/// Max-AR(1) path from its Fréchet innovations; the first value starts
/// the chain at `W_1 / theta`, which has the stationary law.
pub fn max_ar1_path(theta: f64, innovations: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(innovations.len());
    let mut prev = f64::NAN;
    for (i, &w) in innovations.iter().enumerate() {
        let x = if i == 0 { w / theta } else { ((1.0 - theta) * prev).max(w) };
        out.push(x);
        prev = x;
    }
    out
}

/// AR(1) path with uniform marginal from its start value and the
/// innovations `eps_2, eps_3, ...`.
pub fn ar1_uniform_path(r: u32, start: f64, innovations: &[f64]) -> Vec<f64> {
    let inv = 1.0 / f64::from(r);
    let mut out = Vec::with_capacity(innovations.len() + 1);
    out.push(start);
    let mut prev = start;
    for &eps in innovations {
        prev = inv * prev + eps;
        out.push(prev);
    }
    out
}

pub fn squared_arch1_step(eta: f64, lambda: f64, prev: f64, z: f64) -> f64 {
    (eta + lambda * prev) * z * z
}

/// Draws `n` observations of `process` from `rng`.
pub fn sample_path<R: Rng + ?Sized>(
    process: &Process,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    process.validate()?;
    if n == 0 {
        return Err(Error::invalid("series length n must be positive"));
    }
    let values = match *process {
        Process::SquaredArch1 { eta, lambda } => {
            // E[Z^2] = 1, so eta / (1 - lambda) is the stationary mean
            let mut x = eta / (1.0 - lambda);
            for _ in 0..burn_in {
                x = squared_arch1_step(eta, lambda, x, rng.sample(StandardNormal));
            }
            (0..n)
                .map(|_| {
                    x = squared_arch1_step(eta, lambda, x, rng.sample(StandardNormal));
                    x
                })
                .collect()
        }
        Process::MaxAr1 { theta } => {
            let w: Vec<f64> = (0..n).map(|_| unit_frechet(rng)).collect();
            max_ar1_path(theta, &w)
        }
        Process::Ar1Uniform { r } => {
            let start: f64 = rng.sample(Open01);
            let eps: Vec<f64> = (1..n)
                .map(|_| f64::from(rng.random_range(0..r)) / f64::from(r))
                .collect();
            ar1_uniform_path(r, start, &eps)
        }
        Process::IidGaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
    };
    Ok(values)
}

/// Simulates the series described by `spec` on stream 0 of its seed.
pub fn simulate(spec: &ProcessSpec) -> Result<TimeSeries<f64>> {
    let mut rng = replication_rng(spec.seed, 0);
    let values = sample_path(&spec.process, spec.n, spec.burn_in, &mut rng)?;
    let mut header = format!("{} n={} seed={}", spec.process.describe(), spec.n, spec.seed);
    if let Process::SquaredArch1 { .. } = spec.process {
        header.push_str(&format!(" burn_in={}", spec.burn_in));
    }
    Ok(TimeSeries::new(values)?.with_metadata(vec![header]))
}

/// Extremal index and cluster size probabilities `pi(1..=5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta: f64,
    pub pi: ClusterSizePmf<f64>,
}

fn truth(theta: f64, pi: Vec<f64>) -> GroundTruth {
    GroundTruth {
        theta,
        pi: ClusterSizePmf::new(pi).expect("published values form a sub-probability"),
    }
}

/// Published values for the benchmark parameterisations, as printed
/// (three or four decimals).
pub fn ground_truth(kind: ProcessKind) -> GroundTruth {
    match kind {
        ProcessKind::SquaredArch1 => truth(0.727, vec![0.751, 0.168, 0.055, 0.014, 0.008]),
        ProcessKind::MaxAr1 => truth(0.5, vec![0.5, 0.25, 0.125, 0.0625, 0.031]),
        ProcessKind::Ar1Uniform => truth(0.75, vec![0.75, 0.1875, 0.0469, 0.0117, 0.0029]),
        ProcessKind::IidGaussian => GroundTruth {
            theta: 1.0,
            pi: ClusterSizePmf::point_mass(1),
        },
    }
}

/// Truth used for ratios: exact geometric laws where they are known in
/// closed form, the published simulation values for squared ARCH(1).
pub fn reference_truth(process: &Process) -> Result<GroundTruth> {
    process.validate()?;
    Ok(match *process {
        Process::SquaredArch1 { eta, lambda } => {
            if eta != ARCH_ETA || lambda != ARCH_LAMBDA {
                return Err(Error::invalid(
                    "cluster size law of squared ARCH(1) is only tabulated for eta = 2e-5, lambda = 0.5",
                ));
            }
            ground_truth(ProcessKind::SquaredArch1)
        }
        Process::MaxAr1 { theta } => GroundTruth {
            theta,
            pi: ClusterSizePmf::geometric(1.0 - theta, 5),
        },
        Process::Ar1Uniform { r } => {
            let q = 1.0 / f64::from(r);
            GroundTruth {
                theta: 1.0 - q,
                pi: ClusterSizePmf::geometric(q, 5),
            }
        }
        Process::IidGaussian => ground_truth(ProcessKind::IidGaussian),
    })
}
