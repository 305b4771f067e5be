//! Nested mixed aleatory–epistemic propagation.
//!
//! The outer loop walks the epistemic box; at every outer point the inner
//! loop samples the aleatory inputs and collects a QOI distribution. The
//! result is an unweighted ensemble of empirical CDFs (a "horsetail"), whose
//! outline is the p-box, and an expanded-uncertainty interval combining the
//! ensemble spread with the numerical uncertainty.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, ParameterSpec, SeededStream, UncertainParameter};
use crate::error::{Error, Result};
use crate::sampling::{self, ConvergenceReport, ProgressiveConfig};
use crate::stats;

/// A model of the study: QOI from one row of aleatory values (in the order
/// of the study's aleatory list, derived parameters included) and one
/// epistemic point.
pub trait StudyModel: Sync {
    fn evaluate(&self, aleatory: &[f64], epistemic: &[f64]) -> Result<f64>;
}

impl<F> StudyModel for F
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    fn evaluate(&self, aleatory: &[f64], epistemic: &[f64]) -> Result<f64> {
        self(aleatory, epistemic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InnerLoop {
    Progressive(ProgressiveConfig),
    Fixed { n: usize },
}

impl Default for InnerLoop {
    fn default() -> Self {
        InnerLoop::Progressive(ProgressiveConfig::default())
    }
}

/// Levels of the full-factorial outer grid: one count for every dimension
/// or one per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridLevels {
    Uniform(usize),
    PerDimension(Vec<usize>),
}

impl Default for GridLevels {
    fn default() -> Self {
        GridLevels::Uniform(5)
    }
}

impl GridLevels {
    fn resolve(&self, dim: usize) -> Result<Vec<usize>> {
        let levels = match self {
            GridLevels::Uniform(l) => vec![*l; dim],
            GridLevels::PerDimension(v) if v.len() == dim => v.clone(),
            GridLevels::PerDimension(v) => return Err(Error::Shape { expected: dim, got: v.len() }),
        };
        if levels.contains(&0) {
            return Err(Error::Domain("grid levels must be at least 1".into()));
        }
        Ok(levels)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub qoi_name: String,
    /// May be empty, in which case each outer point is evaluated once.
    pub aleatory: Vec<UncertainParameter>,
    /// Interval parameters only; may be empty.
    pub epistemic: Vec<UncertainParameter>,
    pub inner: InnerLoop,
    pub outer: GridLevels,
    /// Numerical uncertainty in QOI units.
    pub u_num: f64,
    /// Coverage factor.
    pub k: f64,
}

impl StudySpec {
    pub fn new(qoi_name: impl Into<String>, aleatory: Vec<UncertainParameter>, epistemic: Vec<UncertainParameter>) -> Self {
        Self {
            qoi_name: qoi_name.into(),
            aleatory,
            epistemic,
            inner: InnerLoop::default(),
            outer: GridLevels::default(),
            u_num: 0.0,
            k: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.aleatory.iter().find(|p| p.is_epistemic()) {
            return Err(Error::Taxonomy(format!("`{}` is epistemic but listed as aleatory", p.name)));
        }
        let mut all = self.aleatory.clone();
        all.extend(self.epistemic.iter().cloned());
        crate::dist::check_unique_names(&all)?;
        for p in &self.epistemic {
            match &p.spec {
                ParameterSpec::Distribution(d @ DistributionSpec::Interval { .. }) => d.validate()?,
                _ => {
                    return Err(Error::Taxonomy(format!(
                        "outer-loop parameter `{}` must be an interval",
                        p.name
                    )));
                }
            }
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::Domain(format!("coverage factor must be positive, got {}", self.k)));
        }
        if !(self.u_num.is_finite() && self.u_num >= 0.0) {
            return Err(Error::Domain(format!("numerical uncertainty must be non-negative, got {}", self.u_num)));
        }
        match &self.inner {
            InnerLoop::Progressive(cfg) => cfg.validate(),
            InnerLoop::Fixed { n: 0 } => Err(Error::Domain("inner sample size must be at least 1".into())),
            InnerLoop::Fixed { .. } => Ok(()),
        }
    }

    pub fn epistemic_names(&self) -> Vec<String> {
        self.epistemic.iter().map(|p| p.name.clone()).collect()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.epistemic.iter().map(|p| p.spec.distribution().expect("validated").support()).collect()
    }

    /// Full-factorial outer points, first dimension varying slowest. A
    /// dimension with one level sits at its midpoint.
    pub fn outer_points(&self) -> Result<Vec<Vec<f64>>> {
        grid_points(&self.bounds(), &self.outer.resolve(self.epistemic.len())?)
    }
}

fn grid_points(bounds: &[(f64, f64)], levels: &[usize]) -> Result<Vec<Vec<f64>>> {
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .zip(levels)
        .map(|(&(lo, hi), &l)| {
            if l == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..l).map(|i| lo + (hi - lo) * i as f64 / (l - 1) as f64).collect()
            }
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Step-function CDF of a set of realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCDF {
    sorted: Vec<f64>,
}

impl EmpiricalCDF {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empirical CDF of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("empirical CDF of NaN values".into()));
        }
        Ok(Self { sorted: stats::sorted(values) })
    }

    /// Fraction of realizations ≤ x.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest realization whose CDF value reaches p.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let i = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[i - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub epistemic: Vec<f64>,
    pub cdf: EmpiricalCDF,
    pub mean: f64,
    /// Unbiased variance; absent for a single realization.
    pub variance: Option<f64>,
    /// Convergence history when the inner loop is progressive.
    pub convergence: Option<ConvergenceReport>,
}

impl Member {
    fn new(epistemic: Vec<f64>, qoi: &[f64], convergence: Option<ConvergenceReport>) -> Result<Self> {
        Ok(Self {
            epistemic,
            cdf: EmpiricalCDF::new(qoi)?,
            mean: stats::mean(qoi).expect("non-empty"),
            variance: stats::variance(qoi),
            convergence,
        })
    }

    pub fn std_dev(&self) -> Option<f64> {
        self.variance.map(f64::sqrt)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CDFEnsemble {
    pub qoi_name: String,
    pub epistemic_names: Vec<String>,
    pub members: Vec<Member>,
}

impl CDFEnsemble {
    /// Long format: `member,q,F` with one row per realization.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "member,q,F")?;
        for (m, member) in self.members.iter().enumerate() {
            let n = member.cdf.len() as f64;
            for (i, q) in member.cdf.values().iter().enumerate() {
                writeln!(w, "{m},{q},{}", (i + 1) as f64 / n)?;
            }
        }
        Ok(())
    }
}

struct InnerRun {
    qoi: Vec<f64>,
    convergence: Option<ConvergenceReport>,
}

fn run_inner<M: StudyModel + ?Sized>(model: &M, spec: &StudySpec, point: &[f64], stream: SeededStream) -> Result<InnerRun> {
    let f = |row: &[f64]| model.evaluate(row, point);
    if spec.aleatory.is_empty() {
        // nothing to sample: a single deterministic evaluation
        let q = f(&[]).map_err(|e| e.within("deterministic evaluation"))?;
        return Ok(InnerRun { qoi: vec![q], convergence: None });
    }
    match &spec.inner {
        InnerLoop::Fixed { n } => {
            let samples = sampling::latin_hypercube(&spec.aleatory, *n, stream)?;
            let qoi = sampling::evaluate_rows(&f, &samples, 0..*n)?;
            Ok(InnerRun { qoi, convergence: None })
        }
        InnerLoop::Progressive(cfg) => {
            let run = sampling::progressive_lhs(f, &spec.aleatory, cfg, stream)?;
            Ok(InnerRun {
                qoi: run.qoi,
                convergence: Some(run.report),
            })
        }
    }
}

fn describe(names: &[String], point: &[f64]) -> String {
    let parts: Vec<String> = names.iter().zip(point).map(|(n, v)| format!("{n}={v}")).collect();
    parts.join(", ")
}

/// Runs the two loops. Outer point j draws its inner sample from substream
/// j, so adding outer points never changes existing members; outer points
/// run concurrently and are assembled in grid order.
pub fn nested_propagate<M: StudyModel + ?Sized>(model: &M, spec: &StudySpec, stream: SeededStream) -> Result<CDFEnsemble> {
    spec.validate()?;
    let names = spec.epistemic_names();
    let points = spec.outer_points()?;
    let members = points
        .into_par_iter()
        .enumerate()
        .map(|(j, point)| {
            let run = run_inner(model, spec, &point, stream.substream(j as u64))
                .map_err(|e| e.within(format_args!("outer point {j} ({})", describe(&names, &point))))?;
            Member::new(point, &run.qoi, run.convergence)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CDFEnsemble {
        qoi_name: spec.qoi_name.clone(),
        epistemic_names: names,
        members,
    })
}

/// Outline of an ensemble over the union of all realizations. `upper` is the
/// pointwise maximum of the member CDFs (the left envelope), `lower` the
/// minimum (the right envelope).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PBox {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn pbox(ensemble: &CDFEnsemble) -> Result<PBox> {
    if ensemble.members.is_empty() {
        return Err(Error::Domain("p-box of an empty ensemble".into()));
    }
    let mut grid: Vec<f64> = ensemble.members.iter().flat_map(|m| m.cdf.values().iter().copied()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (lower, upper) = grid
        .iter()
        .map(|&x| {
            ensemble
                .members
                .iter()
                .map(|m| m.cdf.eval(x))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)))
        })
        .unzip();
    Ok(PBox { grid, lower, upper })
}

impl PBox {
    /// (lower, upper) CDF bounds at x.
    pub fn bounds_at(&self, x: f64) -> (f64, f64) {
        match self.grid.partition_point(|&g| g <= x) {
            0 => (0.0, 0.0),
            i => (self.lower[i - 1], self.upper[i - 1]),
        }
    }

    /// Interval of QOI values at which the envelopes first reach
    /// probability p.
    pub fn quantile_interval(&self, p: f64) -> (f64, f64) {
        let first = |cdf: &[f64]| {
            let i = cdf.partition_point(|&f| f < p).min(self.grid.len() - 1);
            self.grid[i]
        };
        (first(&self.upper), first(&self.lower))
    }

    /// `q,lower,upper` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "q,lower,upper")?;
        for ((q, lo), hi) in self.grid.iter().zip(&self.lower).zip(&self.upper) {
            writeln!(w, "{q},{lo},{hi}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedUncertainty {
    pub lb: f64,
    pub ub: f64,
    pub k: f64,
    pub u_num: f64,
}

/// [min(E − kσ) − U_num, max(E + kσ) + U_num] over the ensemble members.
pub fn expanded_uncertainty(ensemble: &CDFEnsemble, k: f64, u_num: f64) -> Result<ExpandedUncertainty> {
    if !(k.is_finite() && k >= 0.0 && u_num.is_finite() && u_num >= 0.0) {
        return Err(Error::Domain(format!("need k >= 0 and U_num >= 0, got k = {k}, U_num = {u_num}")));
    }
    if ensemble.members.is_empty() {
        return Err(Error::Domain("expanded uncertainty of an empty ensemble".into()));
    }
    let mut lb = f64::INFINITY;
    let mut ub = f64::NEG_INFINITY;
    for (j, m) in ensemble.members.iter().enumerate() {
        let s = m.std_dev().ok_or_else(|| {
            Error::InsufficientSample(format!("member {j} has a single realization; its standard deviation is undefined"))
        })?;
        lb = lb.min(m.mean - k * s);
        ub = ub.max(m.mean + k * s);
    }
    Ok(ExpandedUncertainty {
        lb: lb - u_num,
        ub: ub + u_num,
        k,
        u_num,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Min,
    #[default]
    Max,
}

/// Inner-loop statistic being optimized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    Mean,
    StdDev,
    /// Type-7 quantile of the inner realizations.
    Quantile(f64),
}

impl Statistic {
    fn of(self, qoi: &[f64]) -> Result<f64> {
        match self {
            Statistic::Mean => stats::mean(qoi).ok_or_else(|| Error::InsufficientSample("empty inner sample".into())),
            Statistic::StdDev => stats::std_dev(qoi)
                .ok_or_else(|| Error::InsufficientSample("standard deviation needs 2 realizations".into())),
            Statistic::Quantile(p) => stats::quantile_sorted(&stats::sorted(qoi), p)
                .ok_or_else(|| Error::Domain(format!("quantile level {p} outside [0, 1]"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSettings {
    pub objective: Objective,
    pub statistic: Statistic,
    /// Seed grid levels per dimension.
    pub grid_levels: usize,
    /// Number of best grid points refined by pattern search.
    pub starts: usize,
    /// Initial compass step as a fraction of each range.
    pub initial_step: f64,
    /// Stop once every step is below this fraction of its range.
    pub tolerance: f64,
    /// Budget of inner-loop runs, grid included.
    pub max_evaluations: usize,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        Self {
            objective: Objective::Max,
            statistic: Statistic::Mean,
            grid_levels: 5,
            starts: 3,
            initial_step: 0.125,
            tolerance: 1e-3,
            max_evaluations: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Best point of the seed grid, for reference.
    pub grid_point: Vec<f64>,
    pub grid_value: f64,
    pub evaluations: usize,
}

/// Searches the epistemic box for the extremum of an inner-loop statistic.
///
/// The full-factorial seed grid is evaluated first; the best `starts` grid
/// points are then refined by compass search (move to an improving
/// neighbour at ±step along one axis, otherwise halve the steps). Every
/// candidate's inner loop uses the same stream, so comparisons are free of
/// sampling noise between candidates. The result is never worse than the
/// best grid point.
pub fn optimize_epistemic<M: StudyModel + ?Sized>(
    model: &M,
    spec: &StudySpec,
    settings: &OptimizeSettings,
    stream: SeededStream,
) -> Result<Optimum> {
    spec.validate()?;
    if spec.epistemic.is_empty() {
        return Err(Error::NothingToOptimize);
    }
    if settings.grid_levels == 0 || settings.starts == 0 {
        return Err(Error::Domain("grid_levels and starts must be at least 1".into()));
    }
    if !(settings.initial_step > 0.0 && settings.tolerance > 0.0) {
        return Err(Error::Domain("step and tolerance must be positive".into()));
    }
    let names = spec.epistemic_names();
    let bounds = spec.bounds();
    let inner_stream = stream.substream(0);
    let sign = match settings.objective {
        Objective::Max => 1.0,
        Objective::Min => -1.0,
    };
    let score = |point: &[f64]| -> Result<f64> {
        let run = run_inner(model, spec, point, inner_stream)
            .map_err(|e| e.within(format_args!("epistemic point ({})", describe(&names, point))))?;
        settings.statistic.of(&run.qoi)
    };

    let grid = grid_points(&bounds, &vec![settings.grid_levels; bounds.len()])?;
    let values = grid.par_iter().map(|p| score(p)).collect::<Result<Vec<f64>>>()?;
    let key = |p: &[f64]| p.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let mut cache: HashMap<Vec<u64>, f64> = grid.iter().zip(&values).map(|(p, &v)| (key(p), v)).collect();
    let mut evaluations = grid.len();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    // stable, so ties keep grid order
    order.sort_by(|&a, &b| (sign * values[b]).total_cmp(&(sign * values[a])));
    let (grid_point, grid_value) = (grid[order[0]].clone(), values[order[0]]);
    let mut best = (grid_point.clone(), grid_value);

    for &start in order.iter().take(settings.starts) {
        let mut x = grid[start].clone();
        let mut fx = values[start];
        let mut steps: Vec<f64> = bounds.iter().map(|(lo, hi)| settings.initial_step * (hi - lo)).collect();
        let done = |steps: &[f64]| steps.iter().zip(&bounds).all(|(s, (lo, hi))| *s < settings.tolerance * (hi - lo));
        while !done(&steps) && evaluations < settings.max_evaluations {
            let mut moved = false;
            'axes: for i in 0..x.len() {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] = (x[i] + dir * steps[i]).clamp(bounds[i].0, bounds[i].1);
                    if y[i] == x[i] {
                        continue;
                    }
                    let fy = match cache.get(&key(&y)) {
                        Some(&v) => v,
                        None => {
                            if evaluations >= settings.max_evaluations {
                                break 'axes;
                            }
                            let v = score(&y)?;
                            evaluations += 1;
                            cache.insert(key(&y), v);
                            v
                        }
                    };
                    if sign * fy > sign * fx {
                        x = y;
                        fx = fy;
                        moved = true;
                        break 'axes;
                    }
                }
            }
            if !moved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        if sign * fx > sign * best.1 {
            best = (x, fx);
        }
    }
    Ok(Optimum {
        point: best.0,
        value: best.1,
        grid_point,
        grid_value,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec as D;

    fn normal(name: &str, mu: f64, sigma: f64) -> UncertainParameter {
        UncertainParameter::aleatory(name, D::Normal { mu, sigma }).unwrap()
    }

    fn interval(name: &str, lo: f64, hi: f64) -> UncertainParameter {
        UncertainParameter::epistemic(name, lo, hi).unwrap()
    }

    fn fixed(spec: StudySpec, n: usize) -> StudySpec {
        StudySpec {
            inner: InnerLoop::Fixed { n },
            ..spec
        }
    }

    fn member(values: &[f64]) -> Member {
        Member::new(vec![], values, None).unwrap()
    }

    fn ensemble(members: Vec<Member>) -> CDFEnsemble {
        CDFEnsemble {
            qoi_name: "q".into(),
            epistemic_names: vec![],
            members,
        }
    }

    #[test]
    fn pure_aleatory_study_has_one_member() {
        let spec = fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![]), 20);
        let e = nested_propagate(&|a: &[f64], _: &[f64]| Ok(a[0]), &spec, SeededStream::new(1)).unwrap();
        assert_eq!(e.members.len(), 1);
        assert_eq!(e.members[0].cdf.len(), 20);
    }

    #[test]
    fn deterministic_in_epistemic_model() {
        let spec = StudySpec {
            outer: GridLevels::Uniform(3),
            ..fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("L", 10.0, 50.0)]), 10)
        };
        let e = nested_propagate(&|_: &[f64], l: &[f64]| Ok(l[0]), &spec, SeededStream::new(2)).unwrap();
        let at: Vec<f64> = e.members.iter().map(|m| m.epistemic[0]).collect();
        assert_eq!(at, vec![10.0, 30.0, 50.0]);
        for m in &e.members {
            assert!(m.cdf.values().iter().all(|&v| v == m.epistemic[0]));
            assert_eq!(m.variance, Some(0.0));
        }
        let p = pbox(&e).unwrap();
        assert_eq!(p.quantile_interval(0.5), (10.0, 50.0));
    }

    #[test]
    fn outer_grid_is_full_factorial() {
        let spec = StudySpec {
            outer: GridLevels::PerDimension(vec![2, 3]),
            ..StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("x", 0.0, 1.0), interval("y", 0.0, 2.0)])
        };
        let pts = spec.outer_points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[2], vec![0.0, 2.0]);
        assert_eq!(pts[5], vec![1.0, 2.0]);
    }

    #[test]
    fn adding_outer_points_keeps_members() {
        let base = fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("L", 0.0, 1.0)]), 15);
        let model = |a: &[f64], l: &[f64]| Ok(a[0] + l[0]);
        let two = nested_propagate(&model, &StudySpec { outer: GridLevels::Uniform(2), ..base.clone() }, SeededStream::new(3)).unwrap();
        let three = nested_propagate(&model, &StudySpec { outer: GridLevels::Uniform(3), ..base }, SeededStream::new(3)).unwrap();
        // member 0 sits at L = 0 in both grids and uses substream 0
        assert_eq!(two.members[0], three.members[0]);
    }

    #[test]
    fn progressive_inner_loop_records_convergence() {
        let spec = StudySpec::new("q", vec![normal("a", 5.0, 1.0)], vec![interval("L", 0.0, 1.0)]);
        let spec = StudySpec { outer: GridLevels::Uniform(2), ..spec };
        let e = nested_propagate(&|a: &[f64], l: &[f64]| Ok(a[0] + l[0]), &spec, SeededStream::new(4)).unwrap();
        for m in &e.members {
            let c = m.convergence.as_ref().unwrap();
            assert_eq!(c.final_n(), m.cdf.len());
            assert!(c.iterations[0].n == 59);
        }
    }

    #[test]
    fn failure_reports_both_loops() {
        let spec = fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("L", 0.0, 1.0)]), 5);
        let model = |_: &[f64], l: &[f64]| if l[0] > 0.6 { Err(Error::Domain("too big".into())) } else { Ok(0.0) };
        match nested_propagate(&model, &spec, SeededStream::new(5)) {
            Err(Error::Evaluation { context, .. }) => {
                assert!(context.contains("outer point 3 (L=0.75)"), "{context}");
                assert!(context.contains("row "), "{context}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interval_in_aleatory_list_is_rejected() {
        let spec = StudySpec::new("q", vec![interval("L", 0.0, 1.0)], vec![]);
        assert!(matches!(spec.validate(), Err(Error::Taxonomy(_))));
        let spec = StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![normal("b", 0.0, 1.0)]);
        assert!(matches!(spec.validate(), Err(Error::Taxonomy(_))));
    }

    #[test]
    fn no_aleatory_inputs_evaluates_once_per_point() {
        let spec = StudySpec { outer: GridLevels::Uniform(2), ..StudySpec::new("q", vec![], vec![interval("L", 1.0, 2.0)]) };
        let e = nested_propagate(&|a: &[f64], l: &[f64]| Ok(a.len() as f64 + l[0]), &spec, SeededStream::new(9)).unwrap();
        let values: Vec<&[f64]> = e.members.iter().map(|m| m.cdf.values()).collect();
        assert_eq!(values, vec![&[1.0][..], &[2.0][..]]);
        assert!(matches!(expanded_uncertainty(&e, 2.0, 0.0), Err(Error::InsufficientSample(_))));
    }

    #[test]
    fn empirical_cdf_steps() {
        let c = EmpiricalCDF::new(&[3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.eval(2.0), 0.75);
        assert_eq!(c.eval(3.0), 1.0);
        assert_eq!(c.quantile(0.5), 2.0);
        assert_eq!(c.quantile(0.0), 1.0);
        assert_eq!(c.quantile(1.0), 3.0);
    }

    #[test]
    fn single_member_pbox_is_the_member() {
        let e = ensemble(vec![member(&[1.0, 2.0, 3.0])]);
        let p = pbox(&e).unwrap();
        assert_eq!(p.lower, p.upper);
        assert_eq!(p.upper, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn pbox_envelopes_bound_members() {
        let e = ensemble(vec![member(&[1.0, 4.0, 6.0]), member(&[2.0, 3.0]), member(&[0.5, 5.0, 7.0, 8.0])]);
        let p = pbox(&e).unwrap();
        for (i, &x) in p.grid.iter().enumerate() {
            assert!(p.upper[i] >= p.lower[i]);
            for m in &e.members {
                let f = m.cdf.eval(x);
                assert!(p.lower[i] <= f && f <= p.upper[i]);
            }
            assert_eq!(p.bounds_at(x), (p.lower[i], p.upper[i]));
        }
        assert_eq!(p.bounds_at(0.0), (0.0, 0.0));
    }

    #[test]
    fn expanded_uncertainty_examples() {
        // E = 10, σ = 1 and E = 12, σ = 1.5 from symmetric pairs
        let e = ensemble(vec![
            member(&[10.0 - 0.5f64.sqrt(), 10.0 + 0.5f64.sqrt()]),
            member(&[12.0 - 1.125f64.sqrt(), 12.0 + 1.125f64.sqrt()]),
        ]);
        let u = expanded_uncertainty(&e, 2.0, 0.5).unwrap();
        assert!((u.lb - 7.5).abs() < 1e-12 && (u.ub - 15.5).abs() < 1e-12);
        let one = ensemble(vec![member(&[1.0, 3.0])]);
        let s = 2f64.sqrt();
        let u = expanded_uncertainty(&one, 2.0, 0.0).unwrap();
        assert!((u.lb - (2.0 - 2.0 * s)).abs() < 1e-12 && (u.ub - (2.0 + 2.0 * s)).abs() < 1e-12);
        let u = expanded_uncertainty(&one, 0.0, 0.0).unwrap();
        assert_eq!((u.lb, u.ub), (2.0, 2.0));
        assert!(matches!(
            expanded_uncertainty(&ensemble(vec![member(&[1.0])]), 2.0, 0.0),
            Err(Error::InsufficientSample(_))
        ));
    }

    #[test]
    fn optimizer_finds_monotone_endpoint() {
        let spec = fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("L", 10.0, 50.0)]), 10);
        let model = |a: &[f64], l: &[f64]| Ok(0.01 * a[0] + l[0].sqrt());
        let o = optimize_epistemic(&model, &spec, &OptimizeSettings::default(), SeededStream::new(6)).unwrap();
        assert_eq!(o.point, vec![50.0]);
        assert!(o.value >= o.grid_value);
        let min = OptimizeSettings { objective: Objective::Min, ..Default::default() };
        assert_eq!(optimize_epistemic(&model, &spec, &min, SeededStream::new(6)).unwrap().point, vec![10.0]);
    }

    #[test]
    fn optimizer_refines_interior_optimum() {
        let spec = fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("x", 0.0, 1.0)]), 4);
        // peak at 0.37, between grid points 0.25 and 0.5
        let model = |_: &[f64], x: &[f64]| Ok(-(x[0] - 0.37).powi(2));
        let o = optimize_epistemic(&model, &spec, &OptimizeSettings::default(), SeededStream::new(7)).unwrap();
        assert!((o.point[0] - 0.37).abs() < 2e-3, "{:?}", o.point);
        assert!(o.value > o.grid_value);
    }

    #[test]
    fn optimizer_corner_and_constant() {
        let spec = fixed(
            StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![interval("x", 0.0, 1.0), interval("y", -1.0, 1.0)]),
            4,
        );
        let sep = |_: &[f64], e: &[f64]| Ok(e[0] - 2.0 * e[1]);
        let o = optimize_epistemic(&sep, &spec, &OptimizeSettings::default(), SeededStream::new(8)).unwrap();
        assert_eq!(o.point, vec![1.0, -1.0]);
        let flat = |_: &[f64], _: &[f64]| Ok(7.0);
        assert_eq!(optimize_epistemic(&flat, &spec, &OptimizeSettings::default(), SeededStream::new(8)).unwrap().value, 7.0);
        let none = fixed(StudySpec::new("q", vec![normal("a", 0.0, 1.0)], vec![]), 4);
        assert!(matches!(
            optimize_epistemic(&flat, &none, &OptimizeSettings::default(), SeededStream::new(8)),
            Err(Error::NothingToOptimize)
        ));
    }

    #[test]
    fn ensemble_csv_long_format() {
        let e = ensemble(vec![member(&[2.0, 1.0]), member(&[3.0])]);
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "member,q,F\n0,1,0.5\n0,2,1\n1,3,1\n");
    }
}
