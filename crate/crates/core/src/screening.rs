//! Morris one-at-a-time screening.
//!
//! A trajectory starts at a random point of the `levels`-level grid on
//! [0, 1]^d and moves every coordinate exactly once, in random order, by ±Δ.
//! The elementary effect of input i along a trajectory is the scaled change
//! of the response across its move. Per input, μ is the mean effect, μ* the
//! mean absolute effect and σ the standard deviation of the effects.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::SeededStream;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// d + 1 points in normalized coordinates.
    pub points: Vec<Vec<f64>>,
    /// `moves[k] = (i, up)`: point k+1 differs from point k in coordinate i,
    /// by +Δ when `up`, −Δ otherwise.
    pub moves: Vec<(usize, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoatDesign {
    pub dim: usize,
    pub levels: usize,
    pub delta: f64,
    pub trajectories: Vec<Trajectory>,
}

impl MoatDesign {
    pub fn evaluations(&self) -> usize {
        self.trajectories.len() * (self.dim + 1)
    }
}

/// Random trajectory design with Δ = levels / (2 (levels − 1)).
pub fn moat_design(dim: usize, trajectories: usize, levels: usize, stream: SeededStream) -> Result<MoatDesign> {
    if levels < 4 || levels % 2 != 0 {
        return Err(Error::Design(format!("grid levels must be even and >= 4, got {levels}")));
    }
    if dim == 0 {
        return Err(Error::Design("input dimension must be at least 1".into()));
    }
    if trajectories == 0 {
        return Err(Error::Design("at least one trajectory is required".into()));
    }
    let jump = levels / 2;
    let top = (levels - 1) as f64;
    let trajectories = (0..trajectories)
        .map(|t| {
            let mut rng = stream.substream(t as u64).rng();
            // a coordinate moving up starts in the lower half of the grid, one
            // moving down in the upper half, so the move stays on the grid
            let up: Vec<bool> = (0..dim).map(|_| rng.below(2) == 0).collect();
            let mut level: Vec<usize> = up
                .iter()
                .map(|&u| if u { rng.below(jump) } else { jump + rng.below(jump) })
                .collect();
            let order = rng.permutation(dim);
            let to_point = |lv: &[usize]| lv.iter().map(|&l| l as f64 / top).collect::<Vec<f64>>();
            let mut points = vec![to_point(&level)];
            let mut moves = Vec::with_capacity(dim);
            for &i in &order {
                if up[i] {
                    level[i] += jump;
                } else {
                    level[i] -= jump;
                }
                points.push(to_point(&level));
                moves.push((i, up[i]));
            }
            Trajectory { points, moves }
        })
        .collect();
    Ok(MoatDesign {
        dim,
        levels,
        delta: jump as f64 / top,
        trajectories,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEffects {
    pub name: String,
    pub mu: f64,
    pub mu_star: f64,
    pub sigma: f64,
    pub effects: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectsTable {
    pub inputs: Vec<InputEffects>,
}

/// Elementary effects of `model` over the hyper-rectangle `ranges`
/// (normalized design points are mapped affinely into it).
///
/// Effects are `(f(x ± Δ·span_i·e_i) − f(x)) / (±Δ)`, i.e. in units of the
/// response per normalized input, which makes them invariant to rescaling an
/// input's range.
pub fn elementary_effects<F>(model: F, design: &MoatDesign, names: &[String], ranges: &[(f64, f64)]) -> Result<EffectsTable>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if ranges.len() != design.dim || names.len() != design.dim {
        return Err(Error::Shape {
            expected: design.dim,
            got: ranges.len().min(names.len()),
        });
    }
    if design.trajectories.len() < 2 {
        return Err(Error::InsufficientSample("effect statistics need at least 2 trajectories".into()));
    }
    if let Some((lo, hi)) = ranges.iter().find(|(lo, hi)| !(lo < hi)) {
        return Err(Error::Domain(format!("empty parameter range [{lo}, {hi}]")));
    }
    let to_physical = |x: &[f64]| -> Vec<f64> {
        x.iter().zip(ranges).map(|(&u, &(lo, hi))| lo + u * (hi - lo)).collect()
    };
    let responses: Vec<Vec<f64>> = design
        .trajectories
        .par_iter()
        .map(|t| {
            t.points
                .iter()
                .map(|x| {
                    let phys = to_physical(x);
                    model(&phys).map_err(|e| Error::eval(format!("design point {phys:?}"), e))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut per_input = vec![Vec::with_capacity(design.trajectories.len()); design.dim];
    for (t, y) in design.trajectories.iter().zip(&responses) {
        for (k, &(i, up)) in t.moves.iter().enumerate() {
            let step = if up { design.delta } else { -design.delta };
            per_input[i].push((y[k + 1] - y[k]) / step);
        }
    }
    let inputs = per_input
        .into_iter()
        .zip(names)
        .map(|(effects, name)| {
            let abs: Vec<f64> = effects.iter().map(|e| e.abs()).collect();
            InputEffects {
                name: name.clone(),
                mu: stats::mean(&effects).expect("r >= 2"),
                mu_star: stats::mean(&abs).expect("r >= 2"),
                sigma: stats::std_dev(&effects).expect("r >= 2"),
                effects,
            }
        })
        .collect();
    Ok(EffectsTable { inputs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningClass {
    Negligible,
    LinearAdditive,
    NonlinearInteraction,
}

impl ScreeningClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Negligible => "negligible",
            Self::LinearAdditive => "linear_additive",
            Self::NonlinearInteraction => "nonlinear_interaction",
        }
    }
}

/// μ* cutoff below which an input is negligible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegligibleCutoff {
    Absolute(f64),
    /// Fraction of the largest μ* in the table.
    RelativeToMax(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub negligible_mu_star: NegligibleCutoff,
    pub sigma_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            negligible_mu_star: NegligibleCutoff::RelativeToMax(0.01),
            sigma_ratio: 0.1,
        }
    }
}

/// μ* below the cutoff → negligible; otherwise σ/μ* below `sigma_ratio` →
/// linear and additive; otherwise nonlinear or interacting.
pub fn classify(table: &EffectsTable, thresholds: &Thresholds) -> Result<Vec<ScreeningClass>> {
    let cutoff = match thresholds.negligible_mu_star {
        NegligibleCutoff::Absolute(c) => c,
        NegligibleCutoff::RelativeToMax(f) => {
            f * table.inputs.iter().map(|e| e.mu_star).fold(0.0, f64::max)
        }
    };
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let cutoff_ok = match thresholds.negligible_mu_star {
        NegligibleCutoff::Absolute(c) | NegligibleCutoff::RelativeToMax(c) => positive(c),
    };
    if !cutoff_ok || !positive(thresholds.sigma_ratio) {
        return Err(Error::Domain("screening thresholds must be positive".into()));
    }
    table
        .inputs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if e.mu_star == 0.0 && e.sigma > 0.0 {
                return Err(Error::InconsistentEffects { input: i, sigma: e.sigma });
            }
            Ok(if e.mu_star == 0.0 || e.mu_star < cutoff {
                ScreeningClass::Negligible
            } else if e.sigma / e.mu_star < thresholds.sigma_ratio {
                ScreeningClass::LinearAdditive
            } else {
                ScreeningClass::NonlinearInteraction
            })
        })
        .collect()
}

impl EffectsTable {
    /// `input,mu,mu_star,sigma,class` rows.
    pub fn write_csv<W: Write>(&self, classes: &[ScreeningClass], mut w: W) -> Result<()> {
        writeln!(w, "input,mu,mu_star,sigma,class")?;
        for (e, c) in self.inputs.iter().zip(classes) {
            writeln!(w, "{},{},{},{},{}", e.name, e.mu, e.mu_star, e.sigma, c.as_str())?;
        }
        Ok(())
    }
}
