//! Reference blocks and runs estimators based on a second threshold
//! sequence `u_{s_n}(tau)`, estimated by `X_{n - floor(n tau / s_n) : n}`.

use crate::error::{Error, Result};
use crate::panjer::ClusterSizePmf;
use crate::scalar::Scalar;
use crate::series::{make_layout, TimeSeries};

/// Second scale of the two-sequence estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoScaleSpec<T> {
    /// `n / s_n`.
    pub s_ratio: T,
    /// Look-ahead `p` of the runs estimator.
    pub run_length: usize,
}

impl<T: Scalar> TwoScaleSpec<T> {
    pub fn new(s_ratio: T, run_length: usize) -> Result<Self> {
        if !(s_ratio > T::zero()) || !s_ratio.is_finite() {
            return Err(Error::invalid(format!("n / s_n must be positive, got {s_ratio}")));
        }
        if run_length == 0 {
            return Err(Error::invalid("run length p must be at least 1"));
        }
        Ok(Self {
            s_ratio,
            run_length,
        })
    }

    /// `n / s_n = k_n / 2` and `p = max(1, floor(r_n / 6))`.
    pub fn benchmark(block_count: usize, block_length: usize) -> Self {
        Self {
            s_ratio: T::of_usize(block_count) / T::of_f64(2.0),
            run_length: (block_length / 6).max(1),
        }
    }
}

/// `X_{n - floor(tau s_ratio) : n}` over the whole series.
pub fn two_scale_threshold<T: Scalar>(series: &TimeSeries<T>, tau: T, s_ratio: T) -> Result<T> {
    let n = series.len();
    let rank = (tau * s_ratio).floor().to_usize().unwrap_or(usize::MAX);
    if rank == 0 || rank >= n {
        return Err(Error::ThresholdOutOfRange { rank, available: n });
    }
    let mut all = series.values().to_vec();
    let (_, nth, _) = all.select_nth_unstable_by(n - rank - 1, |a, b| {
        a.partial_cmp(b).expect("series values are finite")
    });
    Ok(*nth)
}

fn block_counts<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    tau: T,
    two_scale: &TwoScaleSpec<T>,
) -> Result<Vec<usize>> {
    let layout = make_layout(series.len(), block_count)?;
    let u = two_scale_threshold(series, tau, two_scale.s_ratio)?;
    Ok(series.values()[..layout.used()]
        .chunks_exact(layout.block_length)
        .map(|b| b.iter().filter(|&&x| x > u).count())
        .collect())
}

/// Share of occupied blocks holding exactly `m` exceedances, for
/// `m = 1..=max(m_max, largest count)`.
pub fn hsing_pi<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    tau: T,
    two_scale: &TwoScaleSpec<T>,
    m_max: usize,
) -> Result<ClusterSizePmf<T>> {
    let counts = block_counts(series, block_count, tau, two_scale)?;
    let occupied = counts.iter().filter(|&&c| c > 0).count();
    if occupied == 0 {
        return Err(Error::NoClusters);
    }
    let len = counts.iter().copied().max().unwrap_or(0).max(m_max).max(1);
    let mut tally = vec![0usize; len];
    for &c in counts.iter().filter(|&&c| c > 0) {
        tally[c - 1] += 1;
    }
    let denom = T::of_usize(occupied);
    ClusterSizePmf::new(tally.into_iter().map(|t| T::of_usize(t) / denom).collect())
}

/// Occupied blocks divided by the number of exceedances.
pub fn blocks_theta<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    tau: T,
    two_scale: &TwoScaleSpec<T>,
) -> Result<T> {
    let counts = block_counts(series, block_count, tau, two_scale)?;
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoClusters);
    }
    let occupied = counts.iter().filter(|&&c| c > 0).count();
    Ok(T::of_usize(occupied) / T::of_usize(total))
}

/// Fraction of exceedances of `threshold` followed by `run_length`
/// non-exceedances. Exceedances too close to the end of the series for a
/// full look-ahead window are left out of both counts.
pub fn runs_theta<T: Scalar>(series: &TimeSeries<T>, threshold: T, run_length: usize) -> Result<T> {
    if run_length == 0 {
        return Err(Error::invalid("run length p must be at least 1"));
    }
    let x = series.values();
    if x.len() <= run_length {
        return Err(Error::NoClusters);
    }
    let mut eligible = 0usize;
    let mut ending = 0usize;
    for i in 0..x.len() - run_length {
        if x[i] > threshold {
            eligible += 1;
            if x[i + 1..=i + run_length].iter().all(|&v| v <= threshold) {
                ending += 1;
            }
        }
    }
    if eligible == 0 {
        return Err(Error::NoClusters);
    }
    Ok(T::of_usize(ending) / T::of_usize(eligible))
}
