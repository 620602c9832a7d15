//! Blocks estimators of the limiting cluster size distribution and the
//! extremal index of a stationary sequence.
//!
//! The pipeline partitions the observations into `k_n` blocks of length
//! `r_n`, counts per-block exceedances of an order-statistic threshold,
//! forms the empirical compound distribution of those counts and inverts
//! the Panjer recursion to recover the cluster size probabilities. The
//! extremal index is estimated from the same quantities.
//!
//! Estimation code is generic over the floating point type (see
//! [`Scalar`]); the aliases at the bottom of this file fix it to `f64`.
//! Simulation and the Monte Carlo harness work in `f64`.

pub mod comparators;
pub mod compound;
pub mod error;
pub mod experiment;
pub mod extremal;
pub mod panjer;
pub mod scalar;
pub mod series;
pub mod simulate;

pub use comparators::{blocks_theta, hsing_pi, runs_theta, two_scale_threshold, TwoScaleSpec};
pub use compound::{compound_profile, empirical_compound, CompoundPmf, CompoundProfile, ProfilePiece};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{emit_table, run_experiment, EstimatorId, ExperimentConfig, RatioCell, RatioTable};

pub use extremal::{
    full_report, theta1, theta1_avar, theta2, theta3, EstimatorFailure, ExtremalIndexReport,
};
pub use panjer::{
    panjer_forward, panjer_invert, panjer_invert_raw, smooth_cluster_pmf, smooth_theta1,
    ClusterSizePmf, CompoundPoissonSpec, ForwardPmf, Smoothed,
};
pub use scalar::Scalar;
pub use series::{
    count_exceedances, make_layout, order_statistic_threshold, BlockLayout, ExceedanceCounts,
    RankedBlocks, TimeSeries,
};
pub use simulate::{ground_truth, simulate, GroundTruth, Process, ProcessKind, ProcessSpec};

/// Observed series in double precision.
pub type Series64 = TimeSeries<f64>;
/// Per-block exceedance counts with an `f64` threshold.
pub type Counts64 = ExceedanceCounts<f64>;
/// Compound pmf in double precision.
pub type Compound64 = CompoundPmf<f64>;
/// Cluster size pmf in double precision.
pub type ClusterSizes64 = ClusterSizePmf<f64>;
/// Extremal index report in double precision.
pub type Report64 = ExtremalIndexReport<f64>;

/// Single-precision counterparts.
pub type Series32 = TimeSeries<f32>;
pub type Compound32 = CompoundPmf<f32>;
pub type ClusterSizes32 = ClusterSizePmf<f32>;
