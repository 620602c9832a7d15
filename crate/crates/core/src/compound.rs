//! Empirical compound distribution of per-block exceedance counts and its
//! step-function structure in the level `tau`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{exceedance_rank, Scalar};
use crate::series::{make_layout, ExceedanceCounts, RankedBlocks, TimeSeries};

/// Probabilities `p(0..=M)` of the number of exceedances in a block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundPmf<T> {
    pub tau: T,
    pub probs: Vec<T>,
}

impl<T: Scalar> CompoundPmf<T> {
    pub fn new(tau: T, probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("compound pmf needs at least p(0)"));
        }
        if probs.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::invalid("compound pmf entries must lie in [0, 1]"));
        }
        Ok(Self { tau, probs })
    }

    /// `p(m)`, zero beyond the stored support.
    pub fn prob(&self, m: usize) -> T {
        self.probs.get(m).copied().unwrap_or_else(T::zero)
    }

    pub fn support_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn p0(&self) -> T {
        self.probs[0]
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }
}

/// `p(m) = #{j : counts[j] = m} / k_n`.
pub fn empirical_compound<T: Scalar>(
    counts: &ExceedanceCounts<T>,
    block_count: usize,
) -> Result<CompoundPmf<T>> {
    if counts.counts.len() != block_count || block_count == 0 {
        return Err(Error::invalid(format!(
            "expected {block_count} block counts, got {}",
            counts.counts.len()
        )));
    }
    Ok(CompoundPmf {
        tau: counts.tau,
        probs: pmf_from_counts(&counts.counts),
    })
}

pub(crate) fn pmf_from_counts<T: Scalar>(counts: &[usize]) -> Vec<T> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut tally = vec![0usize; max + 1];
    for &c in counts {
        tally[c] += 1;
    }
    let k = T::of_usize(counts.len());
    tally.into_iter().map(|t| T::of_usize(t) / k).collect()
}

/// A maximal interval of levels on which `floor(k_n tau)` is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePiece<T> {
    /// Left end, `max(sigma, rank / k_n)`.
    pub lo: T,
    /// Right end, `min(phi, (rank + 1) / k_n)`.
    pub hi: T,
    pub rank: usize,
    pub threshold: T,
    pub pmf: CompoundPmf<T>,
}

impl<T: Scalar> ProfilePiece<T> {
    pub fn length(&self) -> T {
        self.hi - self.lo
    }
}

/// The empirical compound pmf as a piecewise constant function of `tau`
/// over `[sigma, phi]`.
///
/// Pieces are `[rank/k_n, (rank+1)/k_n)` clipped to the window, so that a
/// lookup at any `tau` reproduces the pointwise estimate exactly.
#[derive(Debug, Clone)]
pub struct CompoundProfile<T> {
    pub sigma: T,
    pub phi: T,
    pub block_count: usize,
    pub pieces: Vec<ProfilePiece<T>>,
}

impl<T: Scalar> CompoundProfile<T> {
    /// Interior levels `j / k_n` in `(sigma, phi]` where the pmf may jump.
    pub fn breakpoints(&self) -> Vec<T> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    pub fn piece_at(&self, tau: T) -> Option<&ProfilePiece<T>> {
        if tau < self.sigma || tau > self.phi {
            return None;
        }
        let rank = exceedance_rank(self.block_count, tau);
        let first = self.pieces.first()?.rank;
        self.pieces.get(rank.checked_sub(first)?)
    }

    /// The pmf at `tau`, with its level set to `tau`.
    pub fn at(&self, tau: T) -> Option<CompoundPmf<T>> {
        self.piece_at(tau).map(|p| CompoundPmf {
            tau,
            probs: p.pmf.probs.clone(),
        })
    }
}

pub(crate) fn check_window<T: Scalar>(sigma: T, phi: T) -> Result<()> {
    if !(sigma > T::zero()) || !(sigma < phi) || !phi.is_finite() {
        return Err(Error::invalid(format!(
            "smoothing window needs 0 < sigma < phi, got sigma = {sigma}, phi = {phi}"
        )));
    }
    Ok(())
}

pub(crate) fn profile_from_ranked<T: Scalar>(
    ranked: &RankedBlocks<T>,
    sigma: T,
    phi: T,
) -> Result<CompoundProfile<T>> {
    check_window(sigma, phi)?;
    let k = ranked.layout().block_count;
    let kf = T::of_usize(k);
    let lo_rank = exceedance_rank(k, sigma);
    let hi_rank = exceedance_rank(k, phi);
    let mut pieces = Vec::with_capacity(hi_rank - lo_rank + 1);
    ranked.sweep(lo_rank..=hi_rank, |rank, threshold, counts| {
        let lo = sigma.max(T::of_usize(rank) / kf);
        let hi = phi.min(T::of_usize(rank + 1) / kf);
        pieces.push(ProfilePiece {
            lo,
            hi,
            rank,
            threshold,
            pmf: CompoundPmf {
                tau: lo,
                probs: pmf_from_counts(counts),
            },
        });
    })?;
    Ok(CompoundProfile {
        sigma,
        phi,
        block_count: k,
        pieces,
    })
}

/// Empirical compound pmf for every level in `[sigma, phi]`, computed from
/// one sort of the used observations.
pub fn compound_profile<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    sigma: T,
    phi: T,
) -> Result<CompoundProfile<T>> {
    check_window(sigma, phi)?;
    let layout = make_layout(series.len(), block_count)?;
    let ranked = RankedBlocks::new(series, layout)?;
    profile_from_ranked(&ranked, sigma, phi)
}
