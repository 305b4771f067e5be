//! Latin hypercube vs plain Monte Carlo on the wind-speed characterization:
//! spread of the sample mean over repeated designs, then one LHS design as
//! CSV on stdout.
//!
//! cargo run --example latin_hypercube [-- <n>]

use uqflow::dist::{DerivedFormula, DistributionSpec, SeededStream, UncertainParameter};
use uqflow::sampling::{latin_hypercube, monte_carlo};
use uqflow::stats;

fn main() -> uqflow::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("n must be an integer"));
    let params = vec![
        UncertainParameter::aleatory("Ubar", DistributionSpec::Weibull { scale: 2.0, shape: 1.5 })?,
        UncertainParameter::aleatory(
            "Z",
            DistributionSpec::TruncatedNormal { mu: 0.0, sigma: 1.0, lower: -2.7, upper: f64::INFINITY },
        )?,
        UncertainParameter::derived("TI", DerivedFormula::TurbulenceIntensity { z: "Z".into(), ubar: "Ubar".into() })?,
    ];

    let mut lhs_means = Vec::new();
    let mut mc_means = Vec::new();
    for r in 0..500 {
        let s = SeededStream::with_index(1, r);
        lhs_means.push(stats::mean(latin_hypercube(&params, n, s)?.column("Ubar").unwrap()).unwrap());
        mc_means.push(stats::mean(monte_carlo(&params, n, s)?.column("Ubar").unwrap()).unwrap());
    }
    eprintln!("std of the Ubar sample mean over 500 designs of n = {n}:");
    eprintln!("  monte carlo     {:.5}", stats::std_dev(&mc_means).unwrap());
    eprintln!("  latin hypercube {:.5}", stats::std_dev(&lhs_means).unwrap());

    latin_hypercube(&params, n, SeededStream::new(1))?.write_csv(std::io::stdout().lock())
}
