//! Forward and inverse Panjer recursion for the compound Poisson law of
//! the block exceedance count, and exact smoothing over the level.

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::compound::{compound_profile, CompoundPmf, CompoundProfile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Cluster size probabilities `pi(1..=m_max)`; may be a sub-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSizePmf<T> {
    probs: Vec<T>,
    /// Sizes `m` (1-based) at which the inverse recursion was clipped.
    clipped_at: Vec<usize>,
}

impl<T: Scalar> ClusterSizePmf<T> {
    /// `probs[0]` is `pi(1)`.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("cluster size pmf needs m_max >= 1"));
        }
        if probs.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::invalid("cluster size probabilities must lie in [0, 1]"));
        }
        let total: T = probs.iter().copied().sum();
        if total > T::one() + mass_tolerance::<T>() {
            return Err(Error::invalid(format!(
                "cluster size probabilities sum to {total} > 1"
            )));
        }
        Ok(Self {
            probs,
            clipped_at: Vec::new(),
        })
    }

    /// Point mass at cluster size `size`.
    pub fn point_mass(size: usize) -> Self {
        assert!(size >= 1, "cluster sizes start at 1");
        let mut probs = vec![T::zero(); size];
        probs[size - 1] = T::one();
        Self {
            probs,
            clipped_at: Vec::new(),
        }
    }

    /// `pi(j) = (1 - q) q^(j-1)` for `j <= m_max`.
    pub fn geometric(q: T, m_max: usize) -> Self {
        let probs = (0..m_max)
            .map(|j| (T::one() - q) * q.powi(j as i32))
            .collect();
        Self {
            probs,
            clipped_at: Vec::new(),
        }
    }

    pub fn m_max(&self) -> usize {
        self.probs.len()
    }

    /// `pi(m)` for `m >= 1`, zero outside `1..=m_max`.
    pub fn prob(&self, m: usize) -> T {
        if m == 0 {
            return T::zero();
        }
        self.probs.get(m - 1).copied().unwrap_or_else(T::zero)
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn clipped_at(&self) -> &[usize] {
        &self.clipped_at
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }

    /// `sum_{j <= m} j^order pi(j)`.
    pub fn moment(&self, order: u32, m: usize) -> T {
        (1..=m.min(self.m_max()))
            .map(|j| T::of_usize(j).powi(order as i32) * self.probs[j - 1])
            .sum()
    }
}

impl<T: Scalar> Serialize for ClusterSizePmf<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ClusterSizePmf", 3)?;
        s.serialize_field("m_max", &self.m_max())?;
        s.serialize_field("pi", &self.probs)?;
        s.serialize_field("clipped_at", &self.clipped_at)?;
        s.end()
    }
}

fn mass_tolerance<T: Scalar>() -> T {
    T::of_f64(1e-12).max(T::epsilon() * T::of_f64(16.0))
}

/// Compound Poisson law: Poisson(`theta * tau`) many clusters with sizes
/// drawn from `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonSpec<T> {
    pub theta: T,
    pub tau: T,
    pub pi: ClusterSizePmf<T>,
}

impl<T: Scalar> CompoundPoissonSpec<T> {
    pub fn new(theta: T, tau: T, pi: ClusterSizePmf<T>) -> Result<Self> {
        if !(theta > T::zero() && theta <= T::one()) {
            return Err(Error::invalid(format!("theta must lie in (0, 1], got {theta}")));
        }
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        if (pi.total() - T::one()).abs() > mass_tolerance::<T>() {
            return Err(Error::invalid(format!(
                "cluster size law must sum to 1, got {}",
                pi.total()
            )));
        }
        Ok(Self { theta, tau, pi })
    }
}

/// Forward recursion output: `p(0..=M)` and the mass `P(N > M)` left out.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPmf<T> {
    pub pmf: CompoundPmf<T>,
    pub truncation_mass: T,
}

/// Truncation point used when none is given: `max(40, 10 m_max)`.
pub fn default_truncation(m_max: usize) -> usize {
    (10 * m_max).max(40)
}

/// Panjer recursion `p(0) = exp(-theta tau)`,
/// `p(m) = (theta tau / m) sum_{j=1}^{m} j pi(j) p(m - j)`.
pub fn panjer_forward<T: Scalar>(spec: &CompoundPoissonSpec<T>, support_max: usize) -> ForwardPmf<T> {
    let rate = spec.theta * spec.tau;
    let mut p = Vec::with_capacity(support_max + 1);
    p.push((-rate).exp());
    for m in 1..=support_max {
        let acc: T = (1..=m.min(spec.pi.m_max()))
            .map(|j| T::of_usize(j) * spec.pi.prob(j) * p[m - j])
            .sum();
        p.push(rate / T::of_usize(m) * acc);
    }
    let truncation_mass = (T::one() - p.iter().copied().sum::<T>()).max(T::zero());
    ForwardPmf {
        pmf: CompoundPmf {
            tau: spec.tau,
            probs: p,
        },
        truncation_mass,
    }
}

fn log_p0<T: Scalar>(p: &CompoundPmf<T>) -> Result<(T, T)> {
    let p0 = p.p0();
    if !(p0 > T::zero() && p0 < T::one()) {
        return Err(Error::DegenerateCompound {
            p0: p0.to_f64_lossy(),
        });
    }
    Ok((p0, p0.ln()))
}

/// Runs the inverse recursion, returning the raw values `chi(m)` and the
/// clipped estimates that feed the convolution.
fn invert<T: Scalar>(p: &CompoundPmf<T>, m_max: usize) -> Result<(Vec<T>, ClusterSizePmf<T>)> {
    if m_max == 0 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    let (p0, ln_p0) = log_p0(p)?;
    let denom = ln_p0 * p0;
    let mut raw = Vec::with_capacity(m_max);
    let mut clipped: Vec<T> = Vec::with_capacity(m_max);
    let mut clipped_at = Vec::new();
    let mut cumulative = T::zero();
    for m in 1..=m_max {
        let conv: T = (1..m)
            .map(|j| T::of_usize(j) * clipped[j - 1] * p.prob(m - j))
            .sum();
        let chi = -(p.prob(m) + ln_p0 / T::of_usize(m) * conv) / denom;
        let room = (T::one() - cumulative).max(T::zero());
        let value = chi.min(room).max(T::zero());
        if value != chi {
            clipped_at.push(m);
        }
        raw.push(chi);
        clipped.push(value);
        cumulative += value;
    }
    Ok((
        raw,
        ClusterSizePmf {
            probs: clipped,
            clipped_at,
        },
    ))
}

/// Unclipped inverse recursion values `chi(1..=m_max)`. The convolution
/// term uses the clipped estimates of the smaller sizes.
pub fn panjer_invert_raw<T: Scalar>(p: &CompoundPmf<T>, m_max: usize) -> Result<Vec<T>> {
    invert(p, m_max).map(|(raw, _)| raw)
}

/// Cluster size estimates `max(0, min(chi(m), 1 - sum_{j<m} pi(j)))`.
pub fn panjer_invert<T: Scalar>(p: &CompoundPmf<T>, m_max: usize) -> Result<ClusterSizePmf<T>> {
    invert(p, m_max).map(|(_, pi)| pi)
}

/// A level-averaged estimate, with the part of the window that had to be
/// left out because the compound pmf was degenerate there.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed<T, V> {
    pub value: V,
    pub sigma: T,
    pub phi: T,
    pub included_length: T,
    pub excluded: Vec<(T, T)>,
}

/// Averages `f` over the pieces of `profile`, skipping degenerate pieces.
fn average_over<T: Scalar, V>(
    profile: &CompoundProfile<T>,
    mut piece_integral: impl FnMut(&CompoundPmf<T>, T, T) -> Result<V>,
    mut accumulate: impl FnMut(V),
) -> Result<(T, Vec<(T, T)>)> {
    let mut included = T::zero();
    let mut excluded = Vec::new();
    let mut any = false;
    for piece in &profile.pieces {
        match piece_integral(&piece.pmf, piece.lo, piece.hi) {
            Ok(v) => {
                accumulate(v);
                included += piece.length();
                any = true;
            }
            Err(Error::DegenerateCompound { .. }) => excluded.push((piece.lo, piece.hi)),
            Err(e) => return Err(e),
        }
    }
    if !any || !(included > T::zero()) {
        return Err(Error::DegenerateCompound {
            p0: profile
                .pieces
                .first()
                .map(|p| p.pmf.p0().to_f64_lossy())
                .unwrap_or(f64::NAN),
        });
    }
    Ok((included, excluded))
}

/// Exact level average of the cluster size estimates over a precomputed
/// profile.
pub fn smooth_cluster_pmf_from<T: Scalar>(
    profile: &CompoundProfile<T>,
    m_max: usize,
) -> Result<Smoothed<T, ClusterSizePmf<T>>> {
    let mut sums = vec![T::zero(); m_max];
    let (included, excluded) = average_over(
        profile,
        |pmf, lo, hi| Ok((panjer_invert(pmf, m_max)?, hi - lo)),
        |(pi, len): (ClusterSizePmf<T>, T)| {
            for (s, &v) in sums.iter_mut().zip(pi.probs()) {
                *s += len * v;
            }
        },
    )?;
    let probs = sums
        .into_iter()
        .map(|s| (s / included).min(T::one()).max(T::zero()))
        .collect();
    Ok(Smoothed {
        value: ClusterSizePmf {
            probs,
            clipped_at: Vec::new(),
        },
        sigma: profile.sigma,
        phi: profile.phi,
        included_length: included,
        excluded,
    })
}

/// `(phi - sigma)^-1 * integral of pi_hat^(tau)(m) over [sigma, phi]`, computed
/// exactly as a length-weighted sum over the constant pieces.
pub fn smooth_cluster_pmf<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    sigma: T,
    phi: T,
    m_max: usize,
) -> Result<Smoothed<T, ClusterSizePmf<T>>> {
    let profile = compound_profile(series, block_count, sigma, phi)?;
    smooth_cluster_pmf_from(&profile, m_max)
}

/// Exact level average of `-ln p(0) / tau` over a precomputed profile.
pub fn smooth_theta1_from<T: Scalar>(profile: &CompoundProfile<T>) -> Result<Smoothed<T, T>> {
    let mut total = T::zero();
    let (included, excluded) = average_over(
        profile,
        |pmf, lo, hi| {
            let (_, ln_p0) = log_p0(pmf)?;
            // integral of c / tau is c ln(hi / lo)
            Ok(-ln_p0 * (hi / lo).ln())
        },
        |v| total += v,
    )?;
    Ok(Smoothed {
        value: total / included,
        sigma: profile.sigma,
        phi: profile.phi,
        included_length: included,
        excluded,
    })
}

/// Level-averaged first extremal index estimator.
pub fn smooth_theta1<T: Scalar>(
    series: &TimeSeries<T>,
    block_count: usize,
    sigma: T,
    phi: T,
) -> Result<Smoothed<T, T>> {
    let profile = compound_profile(series, block_count, sigma, phi)?;
    smooth_theta1_from(&profile)
}
