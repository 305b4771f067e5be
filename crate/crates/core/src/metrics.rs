//! Discrepancy measures between discrete distributions and per-class
//! classifier performance measures.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

/// Probability masses over a finite ordered support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    masses: Vec<f64>,
    base: LogBase,
}

impl DiscreteDistribution {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Domain("empty support".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::Domain(format!("mass {m} is not a finite non-negative number")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { masses, base: LogBase::Two })
    }

    pub fn with_base(mut self, base: LogBase) -> Self {
        self.base = base;
        self
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn base(&self) -> LogBase {
        self.base
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

fn same_support(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<()> {
    if q.len() != p.len() {
        return Err(Error::SupportMismatch { left: q.len(), right: p.len() });
    }
    Ok(())
}

fn kl(q: &[f64], p: &[f64], base: LogBase) -> Result<f64> {
    let mut sum = 0.0;
    for (i, (&qi, &pi)) in q.iter().zip(p).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::DivergenceInfinite { index: i });
        }
        sum += qi * base.log(qi / pi);
    }
    // rounding can push an exact zero slightly negative
    Ok(sum.max(0.0))
}

/// KL(q‖p) = Σ q log(q/p), in the base of `q`. Terms with q = 0 contribute 0.
pub fn kl_divergence(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64> {
    same_support(q, p)?;
    kl(&q.masses, &p.masses, q.base)
}

/// Jensen–Shannon distance √(½KL(q‖m) + ½KL(p‖m)), m = (q + p)/2, base 2.
/// Lies in [0, 1] and is a metric.
pub fn js_distance(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64> {
    same_support(q, p)?;
    let m: Vec<f64> = q.masses.iter().zip(&p.masses).map(|(a, b)| 0.5 * (a + b)).collect();
    // m > 0 wherever q or p is, so neither term can diverge
    let d = 0.5 * kl(&q.masses, &m, LogBase::Two)? + 0.5 * kl(&p.masses, &m, LogBase::Two)?;
    Ok(d.sqrt().min(1.0))
}

/// Posterior ∝ likelihood × prior.
pub fn bayes_update(prior: &DiscreteDistribution, likelihood: &[f64]) -> Result<DiscreteDistribution> {
    if likelihood.len() != prior.len() {
        return Err(Error::SupportMismatch { left: prior.len(), right: likelihood.len() });
    }
    if let Some(l) = likelihood.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Domain(format!("likelihood {l} is not a finite non-negative number")));
    }
    let joint: Vec<f64> = prior.masses.iter().zip(likelihood).map(|(p, l)| p * l).collect();
    let evidence: f64 = joint.iter().sum();
    if evidence <= 0.0 {
        return Err(Error::ConditioningOnNull);
    }
    Ok(DiscreteDistribution {
        masses: joint.into_iter().map(|j| j / evidence).collect(),
        base: prior.base,
    })
}

/// K×K counts; rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::Domain("confusion matrix needs at least one class".into()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(Error::Shape { expected: k, got: row.len() });
        }
        Ok(Self { counts })
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::new(vec![vec![0; k]; k])
    }

    pub fn from_predictions(k: usize, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape { expected: truth.len(), got: predicted.len() });
        }
        let mut cm = Self::zeros(k)?;
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.classes();
        if truth >= k || predicted >= k {
            return Err(Error::Domain(format!("class label out of range 0..{k}: ({truth}, {predicted})")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, k: usize) -> u64 {
        self.counts[k][k]
    }

    pub fn false_positives(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum::<u64>() - self.counts[k][k]
    }

    pub fn false_negatives(&self, k: usize) -> u64 {
        self.counts[k].iter().sum::<u64>() - self.counts[k][k]
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| (0..self.classes()).map(|k| self.counts[k][k]).sum::<u64>() as f64 / total as f64)
    }

    /// CSV with a `true` column followed by one column per predicted class.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let head: Vec<String> = (0..self.classes()).map(|k| k.to_string()).collect();
        writeln!(w, "true,{}", head.join(","))?;
        for (k, row) in self.counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{k},{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let bad = |msg: String| Error::Format(format!("confusion matrix CSV: {msg}"));
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty input".into()))??;
        let k = header.split(',').count().saturating_sub(1);
        let mut counts = Vec::with_capacity(k);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<u64> = line
                .split(',')
                .skip(1)
                .map(|c| c.trim().parse().map_err(|e| bad(format!("row {i}: {e}"))))
                .collect::<Result<_>>()?;
            counts.push(row);
        }
        if counts.len() != k {
            return Err(bad(format!("{} rows for {k} classes", counts.len())));
        }
        Self::new(counts)
    }
}

fn ratio(num: u64, den: u64, metric: &'static str, class: usize) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedMetric { metric, class })
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// TP / (TP + FP).
pub fn precision(cm: &ConfusionMatrix, k: usize) -> Result<f64> {
    let tp = cm.true_positives(k);
    ratio(tp, tp + cm.false_positives(k), "precision", k)
}

/// TP / (TP + FN).
pub fn recall(cm: &ConfusionMatrix, k: usize) -> Result<f64> {
    let tp = cm.true_positives(k);
    ratio(tp, tp + cm.false_negatives(k), "recall", k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and their harmonic mean for class `k`.
pub fn precision_recall_f1(cm: &ConfusionMatrix, k: usize) -> Result<Prf> {
    if k >= cm.classes() {
        return Err(Error::Domain(format!("class {k} out of range 0..{}", cm.classes())));
    }
    let p = precision(cm, k)?;
    let r = recall(cm, k)?;
    if p + r == 0.0 {
        return Err(Error::UndefinedMetric { metric: "f1", class: k });
    }
    Ok(Prf {
        precision: p,
        recall: r,
        f1: 2.0 * p * r / (p + r),
    })
}

/// Per-class measures with undefined values left empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.classes())
        .map(|k| {
            let precision = precision(cm, k).ok();
            let recall = recall(cm, k).ok();
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                _ => None,
            };
            ClassMetrics { class: k, precision, recall, f1 }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Unweighted mean of the per-class precisions.
    #[default]
    Macro,
    /// Pooled ΣTP / Σ(TP + FP).
    Micro,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragePrecision {
    pub value: f64,
    pub averaging: Averaging,
    /// Classes with no predictions, whose precision is undefined.
    pub excluded: Vec<usize>,
}

pub fn average_precision(cm: &ConfusionMatrix, averaging: Averaging) -> Result<AveragePrecision> {
    let mut excluded = Vec::new();
    let mut defined = Vec::new();
    for k in 0..cm.classes() {
        match precision(cm, k) {
            Ok(p) => defined.push(p),
            Err(_) => excluded.push(k),
        }
    }
    if defined.is_empty() {
        return Err(Error::NoDefinedPrecision);
    }
    let value = match averaging {
        Averaging::Macro => defined.iter().sum::<f64>() / defined.len() as f64,
        Averaging::Micro => cm.accuracy().expect("some class has predictions"),
    };
    Ok(AveragePrecision { value, averaging, excluded })
}
