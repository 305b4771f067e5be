//! Progressive Latin hypercube on Q = Ubar²: the design doubles until the
//! relative change of the mean and the variance decrease both drop below
//! 1 %.

use uqflow::dist::{DistributionSpec, SeededStream, UncertainParameter};
use uqflow::sampling::{progressive_lhs, ProgressiveConfig};

fn main() -> uqflow::Result<()> {
    let ubar = UncertainParameter::aleatory("Ubar", DistributionSpec::Weibull { scale: 2.0, shape: 1.5 })?;
    let run = progressive_lhs(|x| Ok(x[0] * x[0]), &[ubar], &ProgressiveConfig::default(), SeededStream::new(7))?;

    println!("{:>6} {:>10} {:>10} {:>12} {:>12}", "n", "mean", "variance", "mean crit", "var crit");
    for it in &run.report.iterations {
        match &it.check {
            Some(c) => println!(
                "{:>6} {:>10.5} {:>10.5} {:>12.2e} {:>12.2e}",
                it.n, it.mean, it.variance, c.mean_criterion, c.variance_criterion
            ),
            None => println!("{:>6} {:>10.5} {:>10.5}", it.n, it.mean, it.variance),
        }
    }
    // 4·Γ(7/3)
    println!("converged: {}; exact mean 4.76256", run.report.converged);
    Ok(())
}
