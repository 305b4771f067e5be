//! Numerical uncertainty from a three-grid refinement study (grid
//! convergence index) and the diffraction-limited point-response width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Factor of safety for a three-grid study with observed order.
pub const DEFAULT_FACTOR_OF_SAFETY: f64 = 1.25;

/// Three grid sizes, coarse to fine, with their QOI values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridStudy {
    pub h: [f64; 3],
    pub f: [f64; 3],
}

impl GridStudy {
    pub fn new(h: [f64; 3], f: [f64; 3]) -> Result<Self> {
        let s = Self { h, f };
        s.refinement_ratio()?;
        Ok(s)
    }

    /// The constant ratio h₁/h₂ = h₂/h₃.
    pub fn refinement_ratio(&self) -> Result<f64> {
        let [h1, h2, h3] = self.h;
        if !self.h.iter().chain(&self.f).all(|v| v.is_finite()) {
            return Err(Error::GridStudy("grid sizes and values must be finite".into()));
        }
        if !(h1 > h2 && h2 > h3 && h3 > 0.0) {
            return Err(Error::GridStudy(format!("grid sizes must be positive and strictly decreasing, got {:?}", self.h)));
        }
        let (r21, r32) = (h1 / h2, h2 / h3);
        if (r21 - r32).abs() > 1e-9 * r21 {
            return Err(Error::GridStudy(format!("refinement ratios differ: {r21} vs {r32}")));
        }
        Ok(r21)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GciResult {
    pub p_observed: f64,
    pub f_extrapolated: f64,
    /// |(f₂ − f₃)/f₃|; absent when f₃ = 0.
    pub relative_error_fine: Option<f64>,
    /// Fs·relative_error/(rᵖ − 1); absent when f₃ = 0.
    pub gci_relative: Option<f64>,
    /// Numerical uncertainty in QOI units.
    pub u_num: f64,
    pub factor_of_safety: f64,
    pub refinement_ratio: f64,
}

/// Richardson extrapolation and grid convergence index.
pub fn gci(study: &GridStudy, factor_of_safety: f64) -> Result<GciResult> {
    if !(factor_of_safety.is_finite() && factor_of_safety > 0.0) {
        return Err(Error::Domain(format!("factor of safety must be positive, got {factor_of_safety}")));
    }
    let r = study.refinement_ratio()?;
    let [f1, f2, f3] = study.f;
    let (d21, d32) = (f1 - f2, f2 - f3);
    if d32 == 0.0 {
        return Err(Error::ZeroDifference);
    }
    if d21 == 0.0 || d21.signum() != d32.signum() {
        return Err(Error::NonMonotoneConvergence { d21, d32 });
    }
    let p = (d21 / d32).ln() / r.ln();
    let denom = r.powf(p) - 1.0;
    let relative_error_fine = (f3 != 0.0).then(|| (d32 / f3).abs());
    Ok(GciResult {
        p_observed: p,
        f_extrapolated: f3 + (f3 - f2) / denom,
        relative_error_fine,
        gci_relative: relative_error_fine.map(|e| factor_of_safety * e / denom),
        // Fs·|(f₂−f₃)/f₃|/(rᵖ−1)·|f₃| without the round trip through f₃
        u_num: factor_of_safety * d32.abs() / denom,
        factor_of_safety,
        refinement_ratio: r,
    })
}

/// Optics parameters: magnification, wavelength (m), object distance (m)
/// and effective aperture radius (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrfParams {
    pub magnification: f64,
    pub wavelength: f64,
    pub object_distance: f64,
    pub aperture_radius: f64,
}

/// Nominal point-response width d = 1.22·M·λ/(s_o·a).
pub fn prf_width(p: &PrfParams) -> Result<f64> {
    let all = [p.magnification, p.wavelength, p.object_distance, p.aperture_radius];
    if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::Domain(format!("optics parameters must be positive: {p:?}")));
    }
    Ok(1.22 * p.magnification * p.wavelength / (p.object_distance * p.aperture_radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, h: [f64; 3]) -> GridStudy {
        GridStudy::new(h, h.map(f)).unwrap()
    }

    #[test]
    fn quadratic_series() {
        let s = series(|h| 10.0 + h * h, [1.0, 0.5, 0.25]);
        let g = gci(&s, DEFAULT_FACTOR_OF_SAFETY).unwrap();
        assert_eq!(g.p_observed, 2.0);
        assert_eq!(g.f_extrapolated, 10.0);
        // 1.25 · (0.1875/10.0625)/3 · 10.0625
        assert!((g.u_num - 0.078125).abs() < 1e-15);
        assert!((g.gci_relative.unwrap() - 1.25 * (0.1875 / 10.0625) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_series() {
        let g = gci(&series(|h| 10.0 + h.powi(3), [1.0, 0.5, 0.25]), 1.25).unwrap();
        assert!((g.p_observed - 3.0).abs() < 1e-9);
    }

    #[test]
    fn u_num_linear_in_factor_of_safety() {
        let s = series(|h| 3.0 - 2.0 * h.powf(1.5), [0.9, 0.6, 0.4]);
        let a = gci(&s, 1.0).unwrap().u_num;
        let b = gci(&s, 3.0).unwrap().u_num;
        assert!((b - 3.0 * a).abs() < 1e-15);
    }

    #[test]
    fn failure_modes() {
        let osc = GridStudy::new([1.0, 0.5, 0.25], [1.0, 2.0, 1.5]).unwrap();
        assert!(matches!(gci(&osc, 1.25), Err(Error::NonMonotoneConvergence { .. })));
        let flat = GridStudy::new([1.0, 0.5, 0.25], [1.0, 2.0, 2.0]).unwrap();
        assert!(matches!(gci(&flat, 1.25), Err(Error::ZeroDifference)));
        assert!(GridStudy::new([1.0, 0.5, 0.2], [0.0; 3]).is_err());
        assert!(GridStudy::new([0.25, 0.5, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn zero_fine_value_uses_absolute_form() {
        // h² − 1/16: the fine value is exactly zero
        let z = gci(&series(|h| h * h - 0.0625, [1.0, 0.5, 0.25]), 1.25).unwrap();
        assert_eq!(z.p_observed, 2.0);
        assert_eq!(z.relative_error_fine, None);
        assert_eq!(z.gci_relative, None);
        assert!((z.u_num - 1.25 * 0.1875 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn prf_examples() {
        let base = PrfParams {
            magnification: 1.0,
            wavelength: 5e-7,
            object_distance: 0.5,
            aperture_radius: 0.01,
        };
        let d = prf_width(&base).unwrap();
        assert!((d - 1.22e-4).abs() < 1e-18);
        let far = PrfParams { object_distance: 1.0, ..base };
        assert!((prf_width(&far).unwrap() - d / 2.0).abs() < 1e-18);
        let zoom = PrfParams { magnification: 2.0, ..base };
        assert!((prf_width(&zoom).unwrap() - 2.0 * d).abs() < 1e-18);
        assert!(prf_width(&PrfParams { wavelength: 0.0, ..base }).is_err());
    }
}
