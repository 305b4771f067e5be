//! Bootstrap of a sample median with a 95 % percentile interval and a
//! Freedman–Diaconis histogram of the replicates.

use uqflow::dist::{sample, DistributionSpec, SeededStream};
use uqflow::resampling::{bootstrap, summarize, BootstrapConfig};
use uqflow::stats;

fn main() -> uqflow::Result<()> {
    let data = sample(&DistributionSpec::Weibull { scale: 2.0, shape: 1.5 }, SeededStream::new(3), 80)?;
    let median = |s: &[f64]| stats::median_sorted(&stats::sorted(s)).unwrap();

    let dist = bootstrap(&data, median, &BootstrapConfig::new(2000, SeededStream::new(4)))?;
    let ci = summarize(&dist, 0.95)?;
    println!("sample median {:.4}", median(&data));
    println!("bootstrap: mean {:.4}, std {:.4}, 95% interval [{:.4}, {:.4}]", ci.mean, ci.std, ci.lower, ci.upper);

    let hist = dist.histogram();
    let peak = *hist.counts.iter().max().unwrap_or(&1);
    for (i, c) in hist.counts.iter().enumerate() {
        println!("{:>8.4} {}", hist.edges[i], "#".repeat(c * 50 / peak));
    }
    Ok(())
}
