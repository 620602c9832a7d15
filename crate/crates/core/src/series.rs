//! Observed series, the blocks partition and per-block exceedance counts.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{exceedance_rank, Scalar};

/// Ordered finite observations, with free-form provenance lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
    metadata: Vec<String>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Rejects empty input and any NaN or infinite value.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("series must contain at least one value"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "series value at index {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self {
            values,
            metadata: Vec::new(),
        })
    }

    pub fn with_metadata(mut self, metadata: Vec<String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn metadata(&self) -> &[String] {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `f` elementwise; the result must stay finite.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Ok(Self::new(self.values.iter().map(|&v| f(v)).collect())?
            .with_metadata(self.metadata.clone()))
    }

    /// Parses the one-number-per-line text format. Lines starting with `#`
    /// are kept as metadata (without the marker); blank lines are skipped.
    pub fn parse_text(text: &str, origin: &Path) -> Result<Self> {
        let mut values = Vec::new();
        let mut metadata = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                metadata.push(rest.trim().to_string());
                continue;
            }
            let v: T = line.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("not a number: {line:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: format!("non-finite value: {line:?}"),
                });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 0,
                message: "no observations".into(),
            });
        }
        Ok(Self::new(values)?.with_metadata(metadata))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_text(&text, path)
    }

    /// Text form: one `# ` line per metadata entry, then one value per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        for m in &self.metadata {
            let _ = writeln!(out, "# {m}");
        }
        for v in &self.values {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Partition of `1..=n` into `block_count` blocks of `block_length`
/// observations; the trailing `remainder` observations are not used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_length: usize,
    pub block_count: usize,
    pub remainder: usize,
}

impl BlockLayout {
    /// Number of observations that take part in estimation, `k_n * r_n`.
    pub fn used(&self) -> usize {
        self.block_length * self.block_count
    }
}

/// Builds the layout with `k_n` blocks of length `floor(n / k_n)`.
pub fn make_layout(n: usize, block_count: usize) -> Result<BlockLayout> {
    if block_count == 0 {
        return Err(Error::invalid("block count k_n must be positive"));
    }
    if block_count > n {
        return Err(Error::invalid(format!(
            "block count k_n = {block_count} exceeds series length n = {n}"
        )));
    }
    let block_length = n / block_count;
    Ok(BlockLayout {
        block_length,
        block_count,
        remainder: n - block_length * block_count,
    })
}

/// Exceedance counts per block at the threshold for level `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceCounts<T> {
    pub counts: Vec<usize>,
    pub threshold: T,
    pub tau: T,
}

impl<T> ExceedanceCounts<T> {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn cmp_total<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("series values are finite")
}

fn check_layout<T: Scalar>(series: &TimeSeries<T>, layout: &BlockLayout) -> Result<()> {
    if layout.block_count == 0 || layout.block_length == 0 || layout.used() > series.len() {
        return Err(Error::invalid(format!(
            "layout {}x{} does not fit a series of length {}",
            layout.block_count,
            layout.block_length,
            series.len()
        )));
    }
    Ok(())
}

fn check_tau<T: Scalar>(tau: T) -> Result<()> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::invalid(format!("tau must be positive and finite, got {tau}")));
    }
    Ok(())
}

/// The `(k_n r_n - floor(k_n tau))`-th smallest of the first `k_n r_n`
/// observations.
pub fn order_statistic_threshold<T: Scalar>(
    series: &TimeSeries<T>,
    layout: &BlockLayout,
    tau: T,
) -> Result<T> {
    check_layout(series, layout)?;
    check_tau(tau)?;
    let used = layout.used();
    let rank = exceedance_rank(layout.block_count, tau);
    if rank >= used {
        return Err(Error::ThresholdOutOfRange {
            rank,
            available: used,
        });
    }
    let mut prefix = series.values()[..used].to_vec();
    let (_, nth, _) = prefix.select_nth_unstable_by(used - rank - 1, cmp_total);
    Ok(*nth)
}

/// Number of observations strictly above the order-statistic threshold in
/// each of the `k_n` blocks.
pub fn count_exceedances<T: Scalar>(
    series: &TimeSeries<T>,
    layout: &BlockLayout,
    tau: T,
) -> Result<ExceedanceCounts<T>> {
    let threshold = order_statistic_threshold(series, layout, tau)?;
    let counts = series.values()[..layout.used()]
        .chunks_exact(layout.block_length)
        .map(|block| block.iter().filter(|&&x| x > threshold).count())
        .collect();
    Ok(ExceedanceCounts {
        counts,
        threshold,
        tau,
    })
}

/// The used prefix of a series sorted in decreasing order, each value
/// tagged with its block. Lets the counts be evaluated for many levels
/// after a single sort.
#[derive(Debug, Clone)]
pub struct RankedBlocks<T> {
    layout: BlockLayout,
    desc: Vec<(T, usize)>,
}

impl<T: Scalar> RankedBlocks<T> {
    pub fn new(series: &TimeSeries<T>, layout: BlockLayout) -> Result<Self> {
        check_layout(series, &layout)?;
        let mut desc: Vec<(T, usize)> = series.values()[..layout.used()]
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i / layout.block_length))
            .collect();
        desc.sort_by(|a, b| cmp_total(&b.0, &a.0));
        Ok(Self { layout, desc })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Threshold for integer rank `floor(k_n tau) = rank`.
    pub fn threshold(&self, rank: usize) -> Result<T> {
        self.desc
            .get(rank)
            .map(|e| e.0)
            .ok_or(Error::ThresholdOutOfRange {
                rank,
                available: self.desc.len(),
            })
    }

    /// Counts for every rank in `ranks`, in increasing order. `visit`
    /// receives the rank, its threshold and the per-block counts.
    pub fn sweep(
        &self,
        ranks: std::ops::RangeInclusive<usize>,
        mut visit: impl FnMut(usize, T, &[usize]),
    ) -> Result<()> {
        let (lo, hi) = (*ranks.start(), *ranks.end());
        if hi >= self.desc.len() {
            return Err(Error::ThresholdOutOfRange {
                rank: hi,
                available: self.desc.len(),
            });
        }
        let mut counts = vec![0usize; self.layout.block_count];
        let mut taken = 0;
        for rank in lo..=hi {
            let threshold = self.desc[rank].0;
            while taken < self.desc.len() && self.desc[taken].0 > threshold {
                counts[self.desc[taken].1] += 1;
                taken += 1;
            }
            visit(rank, threshold, &counts);
        }
        Ok(())
    }

    pub fn counts_at(&self, tau: T) -> Result<ExceedanceCounts<T>> {
        check_tau(tau)?;
        let rank = exceedance_rank(self.layout.block_count, tau);
        let mut out = None;
        self.sweep(rank..=rank, |_, threshold, counts| {
            out = Some(ExceedanceCounts {
                counts: counts.to_vec(),
                threshold,
                tau,
            })
        })?;
        Ok(out.expect("sweep visits its only rank"))
    }
}
