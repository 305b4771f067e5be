//! Grid convergence index of the discretized dispersion surrogate at its
//! reference point, on three grids refined by 2.

use uqflow::models::{eval_dispersion, eval_dispersion_discretized, DispersionInputs};
use uqflow::verification::{gci, GridStudy};

fn main() -> uqflow::Result<()> {
    let x = DispersionInputs { ubar: 2.0, ti: 0.3, l: 30.0 };
    let h = [0.4, 0.2, 0.1];
    let f = [
        eval_dispersion_discretized(&x, h[0])?,
        eval_dispersion_discretized(&x, h[1])?,
        eval_dispersion_discretized(&x, h[2])?,
    ];
    let g = gci(&GridStudy::new(h, f)?, 1.25)?;
    println!("f = {f:?}");
    println!("observed order      {:.6}", g.p_observed);
    println!("extrapolated value  {:.6} (exact {})", g.f_extrapolated, eval_dispersion(&x)?);
    println!("GCI (fine grid)     {:.3e}", g.gci_relative.unwrap_or(f64::NAN));
    println!("U_num               {:.6}", g.u_num);
    Ok(())
}
