//! Bootstrap of classifier precision: resample the 6000 training images
//! with replacement, retrain, score on the test set, B times.
//!
//! cargo run --release --example mnist_bootstrap [-- <B> <mnist dir>]

use std::path::PathBuf;

use uqflow::dist::SeededStream;
use uqflow::models::{bootstrap_precision, load_idx, TrainConfig};
use uqflow::resampling::{summarize, BootstrapConfig, SamplingDistribution};

fn main() -> uqflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let b: usize = args.next().map_or(10, |s| s.parse().expect("B must be an integer"));
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist")));

    let train = load_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte"))?;
    let test = load_idx(&dir.join("t10k-images-idx3-ubyte"), &dir.join("t10k-labels-idx1-ubyte"))?;
    let subset = train.random_subset(6000, SeededStream::new(1))?;

    let samples = bootstrap_precision(&subset, &test, &TrainConfig::default(), &BootstrapConfig::new(b, SeededStream::new(2)))?;
    let dist = SamplingDistribution::new(samples.iter().map(|s| s.macro_precision).collect())?;
    let ci = summarize(&dist, 0.95)?;
    println!(
        "B = {b}: macro precision mean {:.4}, range [{:.4}, {:.4}], 95% interval [{:.4}, {:.4}]",
        ci.mean, dist.summary.min, dist.summary.max, ci.lower, ci.upper
    );
    for k in 0..10 {
        let v: Vec<f64> = samples.iter().filter_map(|s| s.per_class[k]).collect();
        let m = v.iter().sum::<f64>() / v.len().max(1) as f64;
        println!("digit {k}: mean precision {m:.4} over {} replicates", v.len());
    }
    Ok(())
}
