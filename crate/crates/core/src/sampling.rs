//! Monte Carlo and Latin hypercube designs, and progressive Latin hypercube
//! refinement driven by mean/variance convergence criteria.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{quantile_unchecked, DerivedFormula, DistributionSpec, ParameterSpec, SeededStream, UncertainParameter};
use crate::error::{Error, Result};
use crate::stats;

/// An n × d design: one named column of realizations per parameter, in
/// parameter order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Shape {
                expected: names.len(),
                got: columns.len(),
            });
        }
        if let Some(first) = columns.first() {
            if let Some(bad) = columns.iter().find(|c| c.len() != first.len()) {
                return Err(Error::Shape {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(Self { names, columns })
    }

    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|j| self.columns[j].as_slice())
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    /// CSV with a header row of parameter names. Values use Rust's shortest
    /// round-trip float formatting, so reading back is lossless.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.names.join(","))?;
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            for (j, c) in self.columns.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write!(line, "{}", c[i]).expect("write to String");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format("empty sample CSV".into()))?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() {
                return Err(Error::Format(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 1,
                    names.len(),
                    fields.len()
                )));
            }
            for (c, f) in columns.iter_mut().zip(fields) {
                c.push(
                    f.trim()
                        .parse()
                        .map_err(|e| Error::Format(format!("row {}: {f:?}: {e}", lineno + 1)))?,
                );
            }
        }
        Self::new(names, columns)
    }
}

/// The sampled and derived columns of a parameter list, resolved once.
struct Plan {
    names: Vec<String>,
    /// `Some(spec)` for sampled columns, `None` for derived ones.
    sampled: Vec<Option<DistributionSpec>>,
    derived: Vec<(usize, DerivedFormula, Vec<usize>)>,
}

impl Plan {
    fn new(params: &[UncertainParameter]) -> Result<Self> {
        crate::dist::check_unique_names(params)?;
        let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
        let mut sampled = Vec::with_capacity(params.len());
        let mut derived = Vec::new();
        for (j, p) in params.iter().enumerate() {
            match &p.spec {
                ParameterSpec::Distribution(d) if d.is_epistemic() => {
                    return Err(Error::Taxonomy(format!(
                        "`{}` is epistemic; sampling designs take aleatory parameters only",
                        p.name
                    )));
                }
                ParameterSpec::Distribution(d) => {
                    d.validate()?;
                    sampled.push(Some(d.clone()));
                }
                ParameterSpec::Derived(f) => {
                    let inputs = f
                        .inputs()
                        .into_iter()
                        .map(|name| {
                            params
                                .iter()
                                .position(|q| q.name == name && !q.is_derived())
                                .ok_or_else(|| {
                                    Error::Taxonomy(format!(
                                        "`{}` derives from `{name}`, which is not a sampled parameter",
                                        p.name
                                    ))
                                })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    sampled.push(None);
                    derived.push((j, f.clone(), inputs));
                }
            }
        }
        Ok(Self { names, sampled, derived })
    }

    /// Maps unit-hypercube coordinates (one vector per sampled column, in
    /// `sampled` order) to a sample matrix.
    fn realize(&self, unit: &[Vec<f64>], n: usize) -> Result<SampleMatrix> {
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); self.names.len()];
        let mut k = 0;
        for (j, spec) in self.sampled.iter().enumerate() {
            if let Some(spec) = spec {
                columns[j] = unit[k].iter().map(|&u| quantile_unchecked(spec, u)).collect();
                k += 1;
            }
        }
        for (j, formula, inputs) in &self.derived {
            let mut col = Vec::with_capacity(n);
            let mut args = vec![0.0; inputs.len()];
            for i in 0..n {
                for (a, &src) in args.iter_mut().zip(inputs) {
                    *a = columns[src][i];
                }
                col.push(formula.evaluate(&args)?);
            }
            columns[*j] = col;
        }
        SampleMatrix::new(self.names.clone(), columns)
    }

    /// Stream key of each sampled column: its index in the parameter list.
    fn sampled_keys(&self) -> Vec<u64> {
        self.sampled
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .map(|(j, _)| j as u64)
            .collect()
    }
}

/// Plain Monte Carlo: column j holds i.i.d. draws from parameter j, taken from
/// substream `j` of `stream`. Derived parameters are computed row-wise.
pub fn monte_carlo(params: &[UncertainParameter], n: usize, stream: SeededStream) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let plan = Plan::new(params)?;
    let unit: Vec<Vec<f64>> = plan
        .sampled_keys()
        .into_iter()
        .map(|j| stream.substream(j).uniforms(n))
        .collect();
    plan.realize(&unit, n)
}

/// Latin hypercube: in every sampled column each probability stratum
/// `[k/n, (k+1)/n)` holds exactly one realization, strata are paired across
/// columns by independent random permutations, and the in-stratum position is
/// uniformly jittered.
pub fn latin_hypercube(params: &[UncertainParameter], n: usize, stream: SeededStream) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let plan = Plan::new(params)?;
    let design = UnitLhs::new(&plan.sampled_keys(), n, stream);
    plan.realize(&design.columns, n)
}

const PERMUTATION_KEY: u64 = 0;
const JITTER_KEY: u64 = 1;

/// Latin hypercube in unit probability coordinates, refinable by doubling.
#[derive(Clone, Debug)]
struct UnitLhs {
    strata: usize,
    keys: Vec<u64>,
    columns: Vec<Vec<f64>>,
}

impl UnitLhs {
    fn new(keys: &[u64], n: usize, stream: SeededStream) -> Self {
        let columns = keys
            .iter()
            .map(|&key| {
                let col = stream.substream(key);
                let perm = col.substream(PERMUTATION_KEY).rng().permutation(n);
                let mut jitter = col.substream(JITTER_KEY).rng();
                perm.iter().map(|&k| place(k, n, jitter.open01())).collect()
            })
            .collect();
        Self {
            strata: n,
            keys: keys.to_vec(),
            columns,
        }
    }

    /// Doubles the strata count and appends one point per newly empty fine
    /// stratum. Old points are kept, so the result is again a Latin
    /// hypercube of twice the size. Returns the index of the first new row.
    fn refine(&mut self, stream: SeededStream) -> usize {
        let old_n = self.columns.first().map_or(self.strata, Vec::len);
        let fine = self.strata * 2;
        for (col, &key) in self.columns.iter_mut().zip(&self.keys) {
            let mut occupied = vec![false; fine];
            for &u in col.iter() {
                occupied[stratum_of(u, fine)] = true;
            }
            let empty: Vec<usize> = (0..fine).filter(|&k| !occupied[k]).collect();
            debug_assert_eq!(empty.len(), fine - old_n);
            let sub = stream.substream(key);
            let perm = sub.substream(PERMUTATION_KEY).rng().permutation(empty.len());
            let mut jitter = sub.substream(JITTER_KEY).rng();
            col.extend(perm.iter().map(|&m| place(empty[m], fine, jitter.open01())));
        }
        self.strata = fine;
        old_n
    }
}

fn stratum_bounds(k: usize, n: usize) -> (f64, f64) {
    (k as f64 / n as f64, (k + 1) as f64 / n as f64)
}

fn place(k: usize, n: usize, v: f64) -> f64 {
    let (lo, hi) = stratum_bounds(k, n);
    let u = lo + v * (hi - lo);
    if u >= hi {
        hi.next_down()
    } else {
        u.max(f64::MIN_POSITIVE)
    }
}

/// Index k with `k/n <= u < (k+1)/n`, using the same float bounds as [`place`].
pub(crate) fn stratum_of(u: f64, n: usize) -> usize {
    let mut k = ((u * n as f64) as usize).min(n - 1);
    while k > 0 && u < stratum_bounds(k, n).0 {
        k -= 1;
    }
    while k + 1 < n && u >= stratum_bounds(k, n).1 {
        k += 1;
    }
    k
}

/// What to do when a criterion's denominator vanishes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDenominator {
    /// Fall back to the absolute change `|Δ| <= ε` when the previous value
    /// is below 1e-12 in magnitude; the report marks the rule used.
    #[default]
    Absolute,
    /// Report a criterion-undefined error.
    Error,
}

const ZERO_THRESHOLD: f64 = 1e-12;

/// Stopping rule for [`progressive_lhs`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProgressiveConfig {
    /// First design size. 59 is the Wilks size for a 95 % one-sided bound on
    /// a single QOI.
    pub initial_n: usize,
    /// Relative tolerance on the mean.
    pub eps_mean: f64,
    /// Relative tolerance on the variance decrease.
    pub eps_variance: f64,
    /// The design doubles each iteration and stops before exceeding this.
    pub max_n: usize,
    pub zero_denominator: ZeroDenominator,
}

impl Default for ProgressiveConfig {
    fn default() -> Self {
        Self {
            initial_n: 59,
            eps_mean: 0.01,
            eps_variance: 0.01,
            max_n: 59 << 8,
            zero_denominator: ZeroDenominator::Absolute,
        }
    }
}

impl ProgressiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_n < 2 {
            return Err(Error::Domain("initial_n must be at least 2".into()));
        }
        if !(self.eps_mean > 0.0) || !(self.eps_variance > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if self.max_n < self.initial_n {
            return Err(Error::Domain("max_n must be >= initial_n".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Result<Self> {
        match (stats::mean(xs), stats::variance(xs)) {
            (Some(mean), Some(variance)) => Ok(Self { mean, variance }),
            _ => Err(Error::InsufficientSample(format!(
                "moments need at least 2 realizations, got {}",
                xs.len()
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionRule {
    Relative,
    Absolute,
}

/// Left-hand sides of the mean and variance criteria for one pair of
/// iterations, and whether both are satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub converged: bool,
    /// `|(E_i − E_{i−1}) / E_{i−1}|`, or `|E_i − E_{i−1}|` under the absolute rule.
    pub mean_criterion: f64,
    /// `(Var_{i−1} − Var_i) / Var_{i−1}`, signed; `|Var_i − Var_{i−1}|`
    /// under the absolute rule.
    pub variance_criterion: f64,
    pub mean_rule: CriterionRule,
    pub variance_rule: CriterionRule,
    /// The variance grew; the signed variance criterion is then negative and
    /// trivially satisfied.
    pub variance_increased: bool,
}

/// Both convergence criteria, strict about zero denominators.
pub fn check_convergence(prev: Moments, curr: Moments, eps_mean: f64, eps_variance: f64) -> Result<ConvergenceCheck> {
    check_convergence_with(prev, curr, eps_mean, eps_variance, ZeroDenominator::Error)
}

pub fn check_convergence_with(
    prev: Moments,
    curr: Moments,
    eps_mean: f64,
    eps_variance: f64,
    policy: ZeroDenominator,
) -> Result<ConvergenceCheck> {
    let (mean_criterion, mean_rule) = if prev.mean.abs() < ZERO_THRESHOLD {
        match policy {
            ZeroDenominator::Error => {
                return Err(Error::CriterionUndefined("previous mean is zero".into()));
            }
            ZeroDenominator::Absolute => ((curr.mean - prev.mean).abs(), CriterionRule::Absolute),
        }
    } else {
        (((curr.mean - prev.mean) / prev.mean).abs(), CriterionRule::Relative)
    };
    let (variance_criterion, variance_rule) = if prev.variance.abs() < ZERO_THRESHOLD {
        match policy {
            ZeroDenominator::Error => {
                return Err(Error::CriterionUndefined("previous variance is zero".into()));
            }
            ZeroDenominator::Absolute => ((curr.variance - prev.variance).abs(), CriterionRule::Absolute),
        }
    } else {
        ((prev.variance - curr.variance) / prev.variance, CriterionRule::Relative)
    };
    Ok(ConvergenceCheck {
        converged: mean_criterion <= eps_mean && variance_criterion <= eps_variance,
        mean_criterion,
        variance_criterion,
        mean_rule,
        variance_rule,
        variance_increased: curr.variance > prev.variance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// `None` on the first iteration.
    pub check: Option<ConvergenceCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: Vec<Iteration>,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn final_n(&self) -> usize {
        self.iterations.last().map_or(0, |it| it.n)
    }
}

/// Output of [`progressive_lhs`]: the cumulative design, the QOI of each
/// row, and the iteration history.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgressiveRun {
    pub samples: SampleMatrix,
    pub qoi: Vec<f64>,
    pub report: ConvergenceReport,
}

/// Progressive Latin hypercube sampling.
///
/// Starts with an `initial_n` design and doubles it by stratum refinement
/// (each old point keeps its place; new points fill the fine strata left
/// empty) until the mean and variance criteria both hold or the next design
/// would exceed `max_n`. Only new rows are evaluated, so the number of model
/// calls equals the final design size. Rows are evaluated in parallel on the
/// current rayon pool and collected in row order.
pub fn progressive_lhs<F>(
    model: F,
    params: &[UncertainParameter],
    cfg: &ProgressiveConfig,
    stream: SeededStream,
) -> Result<ProgressiveRun>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let plan = Plan::new(params)?;
    let keys = plan.sampled_keys();
    if keys.is_empty() {
        return Err(Error::Domain("progressive sampling needs at least one sampled parameter".into()));
    }
    let mut design = UnitLhs::new(&keys, cfg.initial_n, stream);
    let mut qoi: Vec<f64> = Vec::new();
    let mut iterations: Vec<Iteration> = Vec::new();
    let mut converged = false;
    let mut level = 0u64;
    let mut first_new = 0;

    loop {
        let n = design.columns[0].len();
        let samples = plan.realize(&design.columns, n)?;
        qoi.extend(evaluate_rows(&model, &samples, first_new..n)?);
        let moments = Moments::of(&qoi)?;
        let check = match iterations.last() {
            None => None,
            Some(prev) => Some(check_convergence_with(
                Moments {
                    mean: prev.mean,
                    variance: prev.variance,
                },
                moments,
                cfg.eps_mean,
                cfg.eps_variance,
                cfg.zero_denominator,
            )?),
        };
        iterations.push(Iteration {
            n,
            mean: moments.mean,
            variance: moments.variance,
            check,
        });
        if check.is_some_and(|c| c.converged) {
            converged = true;
        }
        if converged || n * 2 > cfg.max_n {
            return Ok(ProgressiveRun {
                samples,
                qoi,
                report: ConvergenceReport { iterations, converged },
            });
        }
        level += 1;
        first_new = design.refine(stream.substream(u64::MAX - level));
    }
}

pub(crate) fn evaluate_rows<F>(model: &F, samples: &SampleMatrix, rows: std::ops::Range<usize>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    rows.into_par_iter()
        .map(|i| {
            let row = samples.row(i);
            model(&row).map_err(|e| e.within(format_args!("row {i}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{derive_ti, DistributionSpec as D, UncertainParameter as P};

    fn uniform01(name: &str) -> P {
        P::aleatory(name, D::Uniform { lo: 0.0, hi: 1.0 }).unwrap()
    }

    fn wind() -> P {
        P::aleatory("Ubar", D::Weibull { scale: 2.0, shape: 1.5 }).unwrap()
    }

    fn wind_and_ti() -> Vec<P> {
        vec![
            wind(),
            P::aleatory(
                "Z",
                D::TruncatedNormal {
                    mu: 0.0,
                    sigma: 1.0,
                    lower: -2.7,
                    upper: f64::INFINITY,
                },
            )
            .unwrap(),
            P::derived(
                "TI",
                DerivedFormula::TurbulenceIntensity {
                    z: "Z".into(),
                    ubar: "Ubar".into(),
                },
            )
            .unwrap(),
        ]
    }

    #[test]
    fn mc_uniform_mean() {
        let m = monte_carlo(&[uniform01("x")], 100_000, SeededStream::new(1)).unwrap();
        let mean = stats::mean(m.column("x").unwrap()).unwrap();
        assert!((mean - 0.5).abs() < 0.005);
    }

    #[test]
    fn mc_wind_and_derived_ti() {
        let m = monte_carlo(&wind_and_ti(), 59, SeededStream::new(7)).unwrap();
        assert_eq!(m.n(), 59);
        assert_eq!(m.names(), ["Ubar", "Z", "TI"]);
        for row in m.rows() {
            assert_eq!(row[2], derive_ti(row[1], row[0]).unwrap());
            assert!(row[2] > 0.09);
        }
    }

    #[test]
    fn single_row_design() {
        let m = monte_carlo(&[uniform01("x")], 1, SeededStream::new(1)).unwrap();
        assert_eq!(m.n(), 1);
        let m = latin_hypercube(&[uniform01("x")], 1, SeededStream::new(1)).unwrap();
        assert_eq!(m.n(), 1);
    }

    #[test]
    fn epistemic_parameters_are_rejected() {
        let l = P::epistemic("L", 10.0, 50.0).unwrap();
        assert!(matches!(monte_carlo(&[l.clone()], 5, SeededStream::new(1)), Err(Error::Taxonomy(_))));
        assert!(matches!(latin_hypercube(&[l], 5, SeededStream::new(1)), Err(Error::Taxonomy(_))));
    }

    #[test]
    fn lhs_uniform_one_per_decile() {
        let m = latin_hypercube(&[uniform01("x")], 10, SeededStream::new(3)).unwrap();
        let xs = stats::sorted(m.column("x").unwrap());
        for (k, x) in xs.iter().enumerate() {
            assert!(*x >= k as f64 / 10.0 && *x < (k + 1) as f64 / 10.0, "{k}: {x}");
        }
    }

    #[test]
    fn lhs_weibull_quarters() {
        let spec = D::Weibull { scale: 2.0, shape: 1.5 };
        let m = latin_hypercube(&[wind()], 4, SeededStream::new(4)).unwrap();
        let mut quarters: Vec<usize> = m
            .column("Ubar")
            .unwrap()
            .iter()
            .map(|&x| (crate::dist::cdf(&spec, x).unwrap() * 4.0).floor() as usize)
            .collect();
        quarters.sort_unstable();
        assert_eq!(quarters, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lhs_two_columns_each_stratified() {
        let m = latin_hypercube(&[uniform01("a"), uniform01("b")], 100, SeededStream::new(5)).unwrap();
        for c in m.columns() {
            let mut seen = [false; 100];
            for &u in c {
                let k = stratum_of(u, 100);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        // pairing differs from the identity: columns are not co-sorted
        let a = m.column("a").unwrap();
        let b = m.column("b").unwrap();
        let same_order = (0..100).all(|i| stratum_of(a[i], 100) == stratum_of(b[i], 100));
        assert!(!same_order);
    }

    #[test]
    fn refinement_keeps_latin_property() {
        let keys = [0u64, 1, 2];
        let mut d = UnitLhs::new(&keys, 59, SeededStream::new(11));
        for level in 1..=4 {
            let old: Vec<Vec<f64>> = d.columns.clone();
            let first = d.refine(SeededStream::new(11).substream(u64::MAX - level));
            let n = d.columns[0].len();
            assert_eq!(n, 59 << level);
            assert_eq!(first, n / 2);
            for (c, o) in d.columns.iter().zip(&old) {
                assert_eq!(&c[..first], &o[..]);
                let mut seen = vec![false; n];
                for &u in c {
                    let k = stratum_of(u, n);
                    assert!(!seen[k], "level {level}: stratum {k} twice");
                    seen[k] = true;
                }
            }
        }
    }

    #[test]
    fn convergence_arithmetic() {
        let prev = Moments { mean: 100.0, variance: 10.0 };
        let c = check_convergence(prev, Moments { mean: 100.5, variance: 9.95 }, 0.01, 0.01).unwrap();
        assert!(c.converged);
        assert!((c.mean_criterion - 0.005).abs() < 1e-12);
        assert!((c.variance_criterion - 0.005).abs() < 1e-12);

        let c = check_convergence(prev, Moments { mean: 103.0, variance: 9.0 }, 0.01, 0.5).unwrap();
        assert!(!c.converged);
        assert!((c.mean_criterion - 0.03).abs() < 1e-12);

        let c = check_convergence(prev, Moments { mean: 100.0, variance: 12.0 }, 0.01, 0.01).unwrap();
        assert!((c.variance_criterion + 0.2).abs() < 1e-12);
        assert!(c.converged);
        assert!(c.variance_increased);
    }

    #[test]
    fn zero_denominators() {
        let zero_mean = Moments { mean: 0.0, variance: 1.0 };
        let curr = Moments { mean: 0.001, variance: 1.0 };
        assert!(matches!(
            check_convergence(zero_mean, curr, 0.01, 0.01),
            Err(Error::CriterionUndefined(_))
        ));
        let zero_var = Moments { mean: 1.0, variance: 0.0 };
        assert!(matches!(
            check_convergence(zero_var, zero_var, 0.01, 0.01),
            Err(Error::CriterionUndefined(_))
        ));
        let c = check_convergence_with(zero_mean, curr, 0.01, 0.01, ZeroDenominator::Absolute).unwrap();
        assert_eq!(c.mean_rule, CriterionRule::Absolute);
        assert!(c.converged);
    }

    #[test]
    fn constant_model_converges_on_second_iteration() {
        let run = progressive_lhs(|_| Ok(5.0), &[wind()], &ProgressiveConfig::default(), SeededStream::new(1)).unwrap();
        assert!(run.report.converged);
        assert_eq!(run.report.iterations.len(), 2);
        let check = run.report.iterations[1].check.unwrap();
        assert_eq!(check.mean_criterion, 0.0);
        assert_eq!(check.variance_rule, CriterionRule::Absolute);
        assert_eq!(run.qoi.len(), 118);
    }

    #[test]
    fn constant_model_strict_policy_errors() {
        let cfg = ProgressiveConfig {
            zero_denominator: ZeroDenominator::Error,
            ..Default::default()
        };
        let r = progressive_lhs(|_| Ok(5.0), &[wind()], &cfg, SeededStream::new(1));
        assert!(matches!(r, Err(Error::CriterionUndefined(_))));
    }

    #[test]
    fn progressive_counts_model_calls() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = AtomicUsize::new(0);
        let cfg = ProgressiveConfig {
            eps_mean: 1e-9,
            eps_variance: 1e-9,
            max_n: 59 * 8,
            ..Default::default()
        };
        let run = progressive_lhs(
            |row| {
                calls.fetch_add(1, Ordering::Relaxed);
                Ok(row[0] * row[0])
            },
            &[wind()],
            &cfg,
            SeededStream::new(2),
        )
        .unwrap();
        assert!(!run.report.converged);
        let ns: Vec<usize> = run.report.iterations.iter().map(|i| i.n).collect();
        assert_eq!(ns, vec![59, 118, 236, 472]);
        assert_eq!(calls.load(Ordering::Relaxed), 472);
        assert_eq!(run.samples.n(), 472);
    }

    #[test]
    fn model_errors_carry_the_row() {
        let r = progressive_lhs(
            |row| if row[0] > 3.0 { Err(Error::Domain("too windy".into())) } else { Ok(row[0]) },
            &[wind()],
            &ProgressiveConfig::default(),
            SeededStream::new(2),
        );
        match r {
            Err(Error::Evaluation { context, .. }) => assert!(context.starts_with("row ")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = latin_hypercube(&wind_and_ti(), 17, SeededStream::new(8)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"Ubar,Z,TI\n"));
        assert_eq!(SampleMatrix::read_csv(&buf[..]).unwrap(), m);
    }
}
