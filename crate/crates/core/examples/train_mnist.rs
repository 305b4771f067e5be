//! Trains the 784-10-10 digit classifier on 6000 random MNIST training
//! images and reports per-class precision on the 10000-image test set.
//!
//! cargo run --release --example train_mnist [-- <mnist dir> <seed>]

use std::path::PathBuf;
use std::time::Instant;

use uqflow::dist::SeededStream;
use uqflow::metrics::{average_precision, class_metrics, Averaging};
use uqflow::models::{evaluate, load_idx, train_classifier, TrainConfig};

fn main() -> uqflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist")));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));

    let train = load_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte"))?;
    let test = load_idx(&dir.join("t10k-images-idx3-ubyte"), &dir.join("t10k-labels-idx1-ubyte"))?;
    println!("loaded {} training and {} test images", train.len(), test.len());

    let subset = train.random_subset(6000, SeededStream::with_index(seed, 1))?;
    let start = Instant::now();
    let trained = train_classifier(&subset, &TrainConfig { seed, ..Default::default() })?;
    println!("trained in {:.2?}; loss per epoch {:.4?}", start.elapsed(), trained.epoch_loss);

    let cm = evaluate(&trained.classifier, &test)?;
    for m in class_metrics(&cm) {
        println!("digit {}: precision {:?}", m.class, m.precision);
    }
    println!("macro precision {:.4}", average_precision(&cm, Averaging::Macro)?.value);
    Ok(())
}
