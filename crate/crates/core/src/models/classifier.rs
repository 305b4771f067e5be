//! A small fully connected image classifier: inputs → ReLU hidden layer →
//! softmax class layer, trained by minibatch SGD on the cross-entropy loss.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::idx::Dataset;
use crate::dist::SeededStream;
use crate::error::{Error, Result};
use crate::metrics::{average_precision, class_metrics, Averaging, ConfusionMatrix};
use crate::resampling::{bootstrap_with, BootstrapConfig};

pub const INPUTS: usize = 28 * 28;
pub const HIDDEN: usize = 10;
pub const CLASSES: usize = 10;

/// Weights are row-major: `w1[h * inputs + i]`, `w2[c * hidden + h]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Classifier {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

struct Forward {
    z1: Vec<f64>,
    a1: Vec<f64>,
    p: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the first maximum.
pub fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

impl Classifier {
    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            inputs,
            hidden,
            classes,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; classes * hidden],
            b2: vec![0.0; classes],
        }
    }

    /// Weights and biases uniform on ±1/√fan_in.
    pub fn random(inputs: usize, hidden: usize, classes: usize, stream: SeededStream) -> Self {
        let mut rng = stream.rng();
        let mut c = Self::zeros(inputs, hidden, classes);
        let (s1, s2) = (1.0 / (inputs as f64).sqrt(), 1.0 / (hidden as f64).sqrt());
        for (v, s) in c
            .w1
            .iter_mut()
            .chain(c.b1.iter_mut())
            .map(|v| (v, s1))
            .chain(c.w2.iter_mut().chain(c.b2.iter_mut()).map(|v| (v, s2)))
        {
            *v = s * (2.0 * rng.open01() - 1.0);
        }
        c
    }

    pub fn num_parameters(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All parameters in the order w1, b1, w2, b2.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2].into_iter().flatten().copied().collect()
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(Error::Shape { expected: self.num_parameters(), got: flat.len() });
        }
        let mut it = flat.iter().copied();
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.iter_mut().for_each(|x| *x = it.next().expect("length checked"));
        }
        Ok(())
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let z1: Vec<f64> = (0..self.hidden)
            .map(|h| self.b1[h] + dot(&self.w1[h * self.inputs..(h + 1) * self.inputs], x))
            .collect();
        let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
        let z2: Vec<f64> = (0..self.classes)
            .map(|c| self.b2[c] + dot(&self.w2[c * self.hidden..(c + 1) * self.hidden], &a1))
            .collect();
        Forward { z1, a1, p: softmax(&z2) }
    }

    fn check_image(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs {
            return Err(Error::Shape { expected: self.inputs, got: x.len() });
        }
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_image(x)?;
        let a1: Vec<f64> = (0..self.hidden)
            .map(|h| (self.b1[h] + dot(&self.w1[h * self.inputs..(h + 1) * self.inputs], x)).max(0.0))
            .collect();
        Ok((0..self.classes)
            .map(|c| self.b2[c] + dot(&self.w2[c * self.hidden..(c + 1) * self.hidden], &a1))
            .collect())
    }

    /// Predicted label and class probabilities.
    pub fn classify(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        self.check_image(x)?;
        let p = self.forward(x).p;
        Ok((argmax(&p), p))
    }

    /// Cross-entropy −ln p(label | x).
    pub fn loss(&self, x: &[f64], label: usize) -> Result<f64> {
        self.check_image(x)?;
        Ok(-self.forward(x).p[label].ln())
    }

    /// Adds the loss gradient at (x, label) into `grad` (same shape as
    /// `self`) and returns the loss.
    pub fn accumulate_gradient(&self, x: &[f64], label: usize, grad: &mut Classifier) -> f64 {
        let f = self.forward(x);
        let mut dz2 = f.p.clone();
        dz2[label] -= 1.0;
        let mut dz1 = vec![0.0; self.hidden];
        for c in 0..self.classes {
            grad.b2[c] += dz2[c];
            for h in 0..self.hidden {
                grad.w2[c * self.hidden + h] += dz2[c] * f.a1[h];
                dz1[h] += self.w2[c * self.hidden + h] * dz2[c];
            }
        }
        for h in 0..self.hidden {
            if f.z1[h] <= 0.0 {
                continue;
            }
            grad.b1[h] += dz1[h];
            let row = &mut grad.w1[h * self.inputs..(h + 1) * self.inputs];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g += dz1[h] * xi;
            }
        }
        -f.p[label].ln()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(Error::at_path(path))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::at_path(path))?;
        let c: Classifier = serde_json::from_str(&text)?;
        let want = Classifier::zeros(c.inputs, c.hidden, c.classes);
        for (name, got, expected) in [
            ("w1", c.w1.len(), want.w1.len()),
            ("b1", c.b1.len(), want.b1.len()),
            ("w2", c.w2.len(), want.w2.len()),
            ("b2", c.b2.len(), want.b2.len()),
        ] {
            if got != expected {
                return Err(Error::Format(format!("weights file: `{name}` has {got} values, expected {expected}")));
            }
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Domain("epochs, learning rate and batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub classifier: Classifier,
    /// Mean training loss after each epoch.
    pub epoch_loss: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Trains with the stream of `cfg.seed`.
pub fn train_classifier(data: &Dataset, cfg: &TrainConfig) -> Result<Trained> {
    train_with_stream(data, cfg, SeededStream::new(cfg.seed))
}

/// Trains a `image size → 10 → 10` network. Initialization draws from
/// substream 0, the shuffle of epoch e from substream e + 1. Runs on the
/// calling thread.
pub fn train_with_stream(data: &Dataset, cfg: &TrainConfig, stream: SeededStream) -> Result<Trained> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    if let Some(&l) = data.labels().iter().find(|&&l| usize::from(l) >= CLASSES) {
        return Err(Error::Consistency(format!("label {l} outside 0..{CLASSES}")));
    }
    let mut warnings = Vec::new();
    let mut seen = [false; CLASSES];
    data.labels().iter().for_each(|&l| seen[usize::from(l)] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        warnings.push("training data contains a single class".to_string());
    }

    let n = data.len();
    let images: Vec<Vec<f64>> = (0..n).map(|i| data.image(i)).collect();
    let labels: Vec<usize> = (0..n).map(|i| data.label(i)).collect();
    let mut net = Classifier::random(data.image_size(), HIDDEN, CLASSES, stream.substream(0));
    let mut grad = Classifier::zeros(net.inputs, net.hidden, net.classes);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let order = stream.substream(epoch as u64 + 1).rng().permutation(n);
        for batch in order.chunks(cfg.batch_size) {
            for v in [&mut grad.w1, &mut grad.b1, &mut grad.w2, &mut grad.b2] {
                v.fill(0.0);
            }
            for &i in batch {
                net.accumulate_gradient(&images[i], labels[i], &mut grad);
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (p, g) in [
                (&mut net.w1, &grad.w1),
                (&mut net.b1, &grad.b1),
                (&mut net.w2, &grad.w2),
                (&mut net.b2, &grad.b2),
            ] {
                p.iter_mut().zip(g).for_each(|(p, g)| *p -= step * g);
            }
        }
        let total: f64 = images.iter().zip(&labels).map(|(x, &y)| -net.forward(x).p[y].ln()).sum();
        epoch_loss.push(total / n as f64);
    }
    Ok(Trained { classifier: net, epoch_loss, warnings })
}

/// Confusion matrix of the classifier's predictions on `data`.
pub fn evaluate(net: &Classifier, data: &Dataset) -> Result<ConfusionMatrix> {
    if data.image_size() != net.inputs {
        return Err(Error::Shape { expected: net.inputs, got: data.image_size() });
    }
    let predicted: Vec<usize> = (0..data.len())
        .into_par_iter()
        .map(|i| argmax(&net.forward(&data.image(i)).p))
        .collect();
    let truth: Vec<usize> = (0..data.len()).map(|i| data.label(i)).collect();
    ConfusionMatrix::from_predictions(net.classes, &truth, &predicted)
}

/// Precision measures of one trained classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSample {
    pub macro_precision: f64,
    /// Per-class precision; `None` where the class was never predicted.
    pub per_class: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
}

impl PrecisionSample {
    pub fn of(cm: &ConfusionMatrix) -> Result<Self> {
        let avg = average_precision(cm, Averaging::Macro)?;
        Ok(Self {
            macro_precision: avg.value,
            per_class: class_metrics(cm).into_iter().map(|m| m.precision).collect(),
            excluded: avg.excluded,
        })
    }
}

/// Bootstrap of classifier precision: each replicate resamples the training
/// rows with replacement, retrains with the replicate's own stream, and
/// scores on the fixed test set.
pub fn bootstrap_precision(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    boot: &BootstrapConfig,
) -> Result<Vec<PrecisionSample>> {
    let rows: Vec<usize> = (0..train.len()).collect();
    bootstrap_with(
        &rows,
        |sample, rep| {
            let trained = train_with_stream(&train.select(sample), cfg, rep.stream)?;
            PrecisionSample::of(&evaluate(&trained.classifier, test)?)
        },
        boot,
    )
}
