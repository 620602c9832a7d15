//! Extremal index estimators built on the compound and cluster size pmfs.

use serde::Serialize;

use crate::compound::{empirical_compound, CompoundPmf};
use crate::error::{Error, ErrorKind, Result};
use crate::panjer::{panjer_invert, ClusterSizePmf};
use crate::scalar::Scalar;
use crate::series::{count_exceedances, make_layout, TimeSeries};

/// `-ln p(0) / tau`.
pub fn theta1<T: Scalar>(p: &CompoundPmf<T>) -> Result<T> {
    let p0 = p.p0();
    if !(p0 > T::zero() && p0 < T::one()) {
        return Err(Error::DegenerateCompound {
            p0: p0.to_f64_lossy(),
        });
    }
    Ok(-p0.ln() / p.tau)
}

/// Reciprocal of the truncated mean cluster size, `1 / sum_{j<=m} j pi(j)`.
pub fn theta2<T: Scalar>(pi: &ClusterSizePmf<T>, m: usize) -> Result<T> {
    let mean = pi.moment(1, m);
    if !(mean > T::zero()) {
        return Err(Error::EmptyClusterMoment { order: 1, m });
    }
    Ok(mean.recip())
}

/// Variance-matching estimator
/// `sum_{j=0}^{m} (j - tau)^2 p(j) / (tau sum_{j=1}^{m} j^2 pi(j))`.
pub fn theta3<T: Scalar>(p: &CompoundPmf<T>, pi: &ClusterSizePmf<T>, m: usize, tau: T) -> Result<T> {
    let second = pi.moment(2, m);
    if !(second > T::zero()) {
        return Err(Error::EmptyClusterMoment { order: 2, m });
    }
    let spread: T = (0..=m)
        .map(|j| {
            let d = T::of_usize(j) - tau;
            d * d * p.prob(j)
        })
        .sum();
    Ok(spread / (tau * second))
}

/// Plug-in asymptotic variance of `sqrt(k_n) (theta1 - theta)`:
/// `tau^-2 (exp(theta tau) - 2 theta tau - 1 + theta^3 tau sum_j j^2 pi(j))`,
/// with the sum truncated at `pi.m_max()`.
pub fn theta1_avar<T: Scalar>(theta: T, pi: &ClusterSizePmf<T>, tau: T) -> T {
    let x = theta * tau;
    let two = T::of_f64(2.0);
    let second = pi.moment(2, pi.m_max());
    // exp_m1 keeps precision for small theta tau
    (x.exp_m1() - two * x + theta.powi(3) * tau * second) / (tau * tau)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorFailure {
    pub estimator: String,
    pub kind: ErrorKind,
    pub message: String,
}

impl EstimatorFailure {
    pub fn new(estimator: &str, err: &Error) -> Self {
        Self {
            estimator: estimator.to_string(),
            kind: err.kind(),
            message: err.to_string(),
        }
    }
}

/// Pointwise extremal index estimates at one level. Estimators that could
/// not be evaluated are `None` and listed in `errors`. The variance
/// plug-in is floored at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalIndexReport<T> {
    pub theta1: Option<T>,
    pub theta2: Option<T>,
    pub theta3: Option<T>,
    pub m: usize,
    pub tau: T,
    pub theta1_avar: Option<T>,
    pub errors: Vec<EstimatorFailure>,
}

impl<T: Scalar> ExtremalIndexReport<T> {
    /// Evaluates every estimator from an already computed compound pmf and
    /// (possibly failed) cluster size estimate.
    pub fn from_parts(
        p: &CompoundPmf<T>,
        pi: &Result<ClusterSizePmf<T>>,
        m: usize,
    ) -> Self {
        let mut errors = Vec::new();
        let mut keep = |name: &str, r: Result<T>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(EstimatorFailure::new(name, &e));
                None
            }
        };
        let t1 = keep("theta1", theta1(p));
        let (t2, t3, avar) = match pi {
            Ok(pi) => (
                keep("theta2", theta2(pi, m)),
                keep("theta3", theta3(p, pi, m, p.tau)),
                t1.map(|t| theta1_avar(t, pi, p.tau).max(T::zero())),
            ),
            Err(e) => {
                for name in ["theta2", "theta3"] {
                    errors.push(EstimatorFailure::new(name, e));
                }
                (None, None, None)
            }
        };
        if avar.is_none() {
            let cause = match (t1, pi) {
                (None, _) => "theta1 undefined",
                _ => "cluster size estimate undefined",
            };
            errors.push(EstimatorFailure {
                estimator: "theta1_avar".into(),
                kind: pi.as_ref().err().map_or(ErrorKind::DegenerateCompound, Error::kind),
                message: cause.into(),
            });
        }
        Self {
            theta1: t1,
            theta2: t2,
            theta3: t3,
            m,
            tau: p.tau,
            theta1_avar: avar,
            errors,
        }
    }
}

/// Counts, compound pmf, clipped cluster size pmf (`m_max = m`) and all
/// extremal index estimates at level `tau`.
///
/// Layout and threshold problems are returned as errors; estimator
/// failures are recorded in the report.
pub fn full_report<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    tau: T,
    m: usize,
) -> Result<ExtremalIndexReport<T>> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let layout = make_layout(series.len(), block_count)?;
    let counts = count_exceedances(series, &layout, tau)?;
    let p = empirical_compound(&counts, block_count)?;
    let pi = panjer_invert(&p, m);
    Ok(ExtremalIndexReport::from_parts(&p, &pi, m))
}
