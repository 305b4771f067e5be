//! Synthetic stand-in for a CFD dispersion study.
//!
//! D = D₀·(U₀/Ū)^α·(TI₀/TI)^β·(1 + γ·ln(L/L₀)): distance to the lower
//! flammability limit shrinks with wind speed and turbulence and grows
//! mildly with the Monin–Obukhov length. The constants put the reference
//! point (Ū, TI, L) = (2, 0.3, 30) at exactly 150 m. It is not a physical
//! model; it only has the qualitative trends a real study would show.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Range of the Monin–Obukhov length covered by the study.
pub const L_RANGE: (f64, f64) = (10.0, 50.0);

/// Discretization-error coefficient of the gridded variant (m per unit h²).
pub const GRID_ERROR_COEFFICIENT: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionInputs {
    /// Mean wind speed (m/s).
    pub ubar: f64,
    /// Turbulence intensity.
    pub ti: f64,
    /// Monin–Obukhov length (m).
    pub l: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConstants {
    pub d0: f64,
    pub u0: f64,
    pub ti0: f64,
    pub l0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for DispersionConstants {
    fn default() -> Self {
        Self {
            d0: 150.0,
            u0: 2.0,
            ti0: 0.3,
            l0: 30.0,
            alpha: 0.4,
            beta: 0.6,
            gamma: 0.15,
        }
    }
}

impl DispersionInputs {
    fn check(&self) -> Result<()> {
        if !(self.ubar.is_finite() && self.ubar > 0.0) {
            return Err(Error::Domain(format!("wind speed must be positive, got {}", self.ubar)));
        }
        if !(self.ti.is_finite() && self.ti > 0.0) {
            return Err(Error::Domain(format!("turbulence intensity must be positive, got {}", self.ti)));
        }
        if !(L_RANGE.0..=L_RANGE.1).contains(&self.l) {
            return Err(Error::Domain(format!(
                "Monin-Obukhov length {} outside [{}, {}]",
                self.l, L_RANGE.0, L_RANGE.1
            )));
        }
        Ok(())
    }
}

impl DispersionConstants {
    pub fn eval(&self, x: &DispersionInputs) -> Result<f64> {
        x.check()?;
        Ok(self.d0
            * (self.u0 / x.ubar).powf(self.alpha)
            * (self.ti0 / x.ti).powf(self.beta)
            * (1.0 + self.gamma * (x.l / self.l0).ln()))
    }
}

/// Distance to the lower flammability limit (m) with the default constants.
pub fn eval_dispersion(x: &DispersionInputs) -> Result<f64> {
    DispersionConstants::default().eval(x)
}

/// The surrogate as a "simulation" on a grid of nominal size h: exact value
/// plus a second-order discretization error C·h².
pub fn eval_dispersion_discretized(x: &DispersionInputs, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("grid size must be positive, got {h}")));
    }
    Ok(eval_dispersion(x)? + GRID_ERROR_COEFFICIENT * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::{gci, GridStudy};

    const REF: DispersionInputs = DispersionInputs { ubar: 2.0, ti: 0.3, l: 30.0 };

    #[test]
    fn reference_point() {
        assert_eq!(eval_dispersion(&REF).unwrap(), 150.0);
    }

    #[test]
    fn doubling_wind_speed() {
        let d = eval_dispersion(&DispersionInputs { ubar: 4.0, ..REF }).unwrap();
        assert!((d / 150.0 - 2f64.powf(-0.4)).abs() < 1e-15);
        assert!((d / 150.0 - 0.7579).abs() < 1e-4);
    }

    #[test]
    fn monotone_sweeps() {
        let sweep = |f: &dyn Fn(f64) -> DispersionInputs, lo: f64, hi: f64| -> Vec<f64> {
            (0..1000)
                .map(|i| eval_dispersion(&f(lo + (hi - lo) * i as f64 / 999.0)).unwrap())
                .collect()
        };
        let u = sweep(&|v| DispersionInputs { ubar: v, ..REF }, 0.1, 10.0);
        let t = sweep(&|v| DispersionInputs { ti: v, ..REF }, 0.05, 1.0);
        let l = sweep(&|v| DispersionInputs { l: v, ..REF }, 10.0, 50.0);
        assert!(u.windows(2).all(|w| w[1] < w[0]));
        assert!(t.windows(2).all(|w| w[1] < w[0]));
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!(u.iter().chain(&t).chain(&l).all(|&d| d > 0.0));
    }

    #[test]
    fn domain_errors() {
        assert!(eval_dispersion(&DispersionInputs { ubar: 0.0, ..REF }).is_err());
        assert!(eval_dispersion(&DispersionInputs { ti: -0.1, ..REF }).is_err());
        assert!(eval_dispersion(&DispersionInputs { l: 60.0, ..REF }).is_err());
        assert!(eval_dispersion_discretized(&REF, 0.0).is_err());
    }

    #[test]
    fn discretized_variant_converges_at_second_order() {
        let x = DispersionInputs { ubar: 1.7, ti: 0.22, l: 18.0 };
        let exact = eval_dispersion(&x).unwrap();
        assert!((eval_dispersion_discretized(&x, 1e-9).unwrap() - exact).abs() < 1e-12);
        let h = [0.4, 0.2, 0.1];
        let f = h.map(|h| eval_dispersion_discretized(&x, h).unwrap());
        let g = gci(&GridStudy::new(h, f).unwrap(), 1.25).unwrap();
        assert!((g.p_observed - 2.0).abs() < 1e-9);
        assert!((g.f_extrapolated - exact).abs() < 1e-9 * exact);
    }
}
