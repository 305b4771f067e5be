//! Nonparametric bootstrap over an opaque statistic.
//!
//! For b = 1..B a sample of n observations is drawn with replacement from the
//! data and the statistic is evaluated on it; the B values form the sampling
//! distribution. Draw b uses substream `b` of the configured stream, so the
//! values do not depend on how the evaluations are scheduled.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::SeededStream;
use crate::error::{Error, Result};
use crate::stats;

const RESAMPLE_KEY: u64 = 0;
const STATISTIC_KEY: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap samples, B.
    pub resamples: usize,
    pub stream: SeededStream,
}

impl BootstrapConfig {
    pub fn new(resamples: usize, stream: SeededStream) -> Self {
        Self { resamples, stream }
    }
}

/// Context passed to a statistic alongside its bootstrap sample.
#[derive(Clone, Copy, Debug)]
pub struct Replicate {
    /// Zero-based replicate index b.
    pub index: usize,
    /// A stream reserved for the statistic itself (e.g. to seed a training
    /// run), independent of the resampling draws.
    pub stream: SeededStream,
}

/// Indices of bootstrap sample `b`: n uniform draws from `0..n`.
pub fn resample_indices(n: usize, stream: SeededStream, b: usize) -> Vec<usize> {
    let mut rng = stream.substream(b as u64).substream(RESAMPLE_KEY).rng();
    (0..n).map(|_| rng.below(n)).collect()
}

/// Runs the bootstrap with a statistic of any output type. Replicates are
/// evaluated in parallel on the current rayon pool; the output is in
/// replicate order.
pub fn bootstrap_with<T, S, F>(data: &[T], statistic: F, cfg: &BootstrapConfig) -> Result<Vec<S>>
where
    T: Clone + Sync,
    S: Send,
    F: Fn(&[T], Replicate) -> Result<S> + Sync,
{
    if data.is_empty() {
        return Err(Error::Domain("bootstrap needs at least one observation".into()));
    }
    if cfg.resamples == 0 {
        return Err(Error::Domain("bootstrap size B must be at least 1".into()));
    }
    (0..cfg.resamples)
        .into_par_iter()
        .map(|b| {
            let sample: Vec<T> = resample_indices(data.len(), cfg.stream, b)
                .into_iter()
                .map(|i| data[i].clone())
                .collect();
            let rep = Replicate {
                index: b,
                stream: cfg.stream.substream(b as u64).substream(STATISTIC_KEY),
            };
            statistic(&sample, rep).map_err(|e| e.within(format_args!("bootstrap replicate {b}")))
        })
        .collect()
}

/// Bootstrap of a real-valued statistic.
pub fn bootstrap<T, F>(data: &[T], statistic: F, cfg: &BootstrapConfig) -> Result<SamplingDistribution>
where
    T: Clone + Sync,
    F: Fn(&[T]) -> f64 + Sync,
{
    let values = bootstrap_with(data, |s, _| Ok(statistic(s)), cfg)?;
    SamplingDistribution::new(values)
}

/// Collated statistic values `T_b` with descriptive statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    pub values: Vec<f64>,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// `None` when B = 1.
    pub std: Option<f64>,
    pub median: f64,
    /// Midpoint of the fullest Freedman-Diaconis histogram bin.
    pub mode: f64,
    pub min: f64,
    pub max: f64,
    /// Percentiles at 2.5, 5, 25, 50, 75, 95 and 97.5 %.
    pub percentiles: Vec<(f64, f64)>,
}

const REPORTED_PERCENTILES: [f64; 7] = [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975];

impl SamplingDistribution {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientSample("empty sampling distribution".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("sampling distribution contains non-finite values".into()));
        }
        let sorted = stats::sorted(&values);
        let q = |p| stats::quantile_sorted(&sorted, p).expect("non-empty");
        let summary = Summary {
            count: values.len(),
            mean: stats::mean(&values).expect("non-empty"),
            std: stats::std_dev(&values),
            median: q(0.5),
            mode: Histogram::freedman_diaconis(&values).mode(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            percentiles: REPORTED_PERCENTILES.iter().map(|&p| (p, q(p))).collect(),
        };
        Ok(Self { values, summary })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn histogram(&self) -> Histogram {
        Histogram::freedman_diaconis(&self.values)
    }

    /// One value per row under a `value` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "value")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Mean, standard deviation and central percentile interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub mean: f64,
    pub std: f64,
    pub coverage: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Percentile interval `[q((1−c)/2), q(1−(1−c)/2)]` with linear-interpolation
/// quantiles, plus mean and standard deviation.
pub fn summarize(dist: &SamplingDistribution, coverage: f64) -> Result<IntervalSummary> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Error::Domain(format!("coverage {coverage} outside [0, 1]")));
    }
    let std = dist.summary.std.ok_or_else(|| {
        Error::InsufficientSample("standard deviation needs at least 2 bootstrap values".into())
    })?;
    let sorted = stats::sorted(&dist.values);
    let tail = (1.0 - coverage) / 2.0;
    Ok(IntervalSummary {
        mean: dist.summary.mean,
        std,
        coverage,
        lower: stats::quantile_sorted(&sorted, tail).expect("non-empty"),
        upper: stats::quantile_sorted(&sorted, 1.0 - tail).expect("non-empty"),
    })
}

/// Equal-width histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bin width `2·IQR·n^(−1/3)`. Falls back to a single bin when the data
    /// have no spread and to Sturges' rule when the IQR is zero but the range
    /// is not.
    pub fn freedman_diaconis(values: &[f64]) -> Self {
        let sorted = stats::sorted(values);
        let (min, max) = match (sorted.first(), sorted.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => {
                return Self {
                    edges: vec![0.0, 0.0],
                    counts: vec![0],
                }
            }
        };
        let range = max - min;
        if range == 0.0 {
            return Self {
                edges: vec![min, max],
                counts: vec![values.len()],
            };
        }
        let iqr = stats::quantile_sorted(&sorted, 0.75).unwrap() - stats::quantile_sorted(&sorted, 0.25).unwrap();
        let n = values.len() as f64;
        let bins = if iqr > 0.0 {
            (range / (2.0 * iqr * n.powf(-1.0 / 3.0))).ceil() as usize
        } else {
            n.log2().ceil() as usize + 1
        };
        Self::with_bins(values, min, max, bins.clamp(1, 1000))
    }

    pub fn with_bins(values: &[f64], min: f64, max: f64, bins: usize) -> Self {
        let width = (max - min) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|k| if k == bins { max } else { min + k as f64 * width })
            .collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            if v < min || v > max {
                continue;
            }
            let mut k = (((v - min) / width) as usize).min(bins - 1);
            while k > 0 && v < edges[k] {
                k -= 1;
            }
            while k + 1 < bins && v >= edges[k + 1] {
                k += 1;
            }
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn mode(&self) -> f64 {
        let (k, _) = self
            .counts
            .iter()
            .enumerate()
            .fold((0, 0), |best, (k, &c)| if c > best.1 { (k, c) } else { best });
        0.5 * (self.edges[k] + self.edges[k + 1])
    }
}
