//! Runs the bundled dispersion study end to end (screening, progressive
//! nested propagation, p-box, optimization of the mean over L, grid
//! convergence, expanded uncertainty) and redraws its figures.
//!
//! cargo run --release --example dispersion_study [-- <out dir>]

use std::path::{Path, PathBuf};

use uqflow::report::{check_manifest, plot_report, run_study, RunOptions};

fn main() -> uqflow::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let out = std::env::args().nth(1).map_or_else(|| root.join("out/dispersion"), PathBuf::from);
    let report = run_study(&root.join("configs/dispersion.json"), &out, &RunOptions::default())?;

    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(s) = &report.screening {
        for i in &s.inputs {
            println!("screening {:<5} mu* {:>8.3} sigma {:>8.3} {:?}", i.name, i.mu_star, i.sigma, i.class);
        }
    }
    let p = report.propagation.as_ref().expect("propagation block");
    for m in &p.members {
        println!("L = {:?}: n = {}, mean {:.2}", m.epistemic, m.n, m.mean);
    }
    if let Some(e) = &p.expanded {
        println!("expanded uncertainty [{:.2}, {:.2}]", e.lb, e.ub);
    }

    let (redrawn, _) = plot_report(&out, &out)?;
    println!("redrew {redrawn:?}; manifest problems: {:?}", check_manifest(&out)?);
    println!("report in {}", out.display());
    Ok(())
}
