//! Nested aleatory/epistemic propagation through the dispersion surrogate:
//! one CDF per Monin-Obukhov length on a 5-level grid, the p-box around
//! them, and the expanded uncertainty interval. Writes horsetail.svg.
//!
//! cargo run --release --example nested_pbox [-- <svg path>]

use uqflow::dist::{DerivedFormula, DistributionSpec, SeededStream, UncertainParameter};
use uqflow::models::{eval_dispersion, DispersionInputs};
use uqflow::propagation::{expanded_uncertainty, nested_propagate, pbox, InnerLoop, StudySpec};
use uqflow::report::plot::horsetail_svg;

fn main() -> uqflow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "horsetail.svg".into());
    let mut spec = StudySpec::new(
        "d_lfl",
        vec![
            UncertainParameter::aleatory("Ubar", DistributionSpec::Weibull { scale: 2.0, shape: 1.5 })?,
            UncertainParameter::aleatory(
                "Z",
                DistributionSpec::TruncatedNormal { mu: 0.0, sigma: 1.0, lower: -2.7, upper: f64::INFINITY },
            )?,
            UncertainParameter::derived("TI", DerivedFormula::TurbulenceIntensity { z: "Z".into(), ubar: "Ubar".into() })?,
        ],
        vec![UncertainParameter::epistemic("L", 10.0, 50.0)?],
    );
    spec.inner = InnerLoop::Fixed { n: 59 };

    let model = |x: &[f64], e: &[f64]| eval_dispersion(&DispersionInputs { ubar: x[0], ti: x[2], l: e[0] });
    let ensemble = nested_propagate(&model, &spec, SeededStream::new(20240501))?;
    for m in &ensemble.members {
        println!("L = {:>4}: mean {:>7.2}, std {:>6.2}", m.epistemic[0], m.mean, m.std_dev().unwrap_or(0.0));
    }
    let pb = pbox(&ensemble)?;
    let (lo, hi) = pb.quantile_interval(0.95);
    println!("95th percentile lies in [{lo:.2}, {hi:.2}]");
    let u = expanded_uncertainty(&ensemble, 2.0, 0.0625)?;
    println!("expanded uncertainty (k = 2, U_num = 0.0625): [{:.2}, {:.2}]", u.lb, u.ub);

    let members: Vec<Vec<f64>> = ensemble.members.iter().map(|m| m.cdf.values().to_vec()).collect();
    if let Some(svg) = horsetail_svg("d_lfl (m)", &members, &pb) {
        std::fs::write(&out, svg)?;
        println!("wrote {out}");
    }
    Ok(())
}
