use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{train_config, LoadedConfig, ModelConfig, StudyConfig};
use super::manifest::{write_manifest, MANIFEST_FILE};
use super::plot;
use super::*;
use crate::dist::{quantile, ParameterSpec, SeededStream, UncertainParameter};
use crate::error::{Error, Result};
use crate::metrics::{average_precision, class_metrics, Averaging};
use crate::models::{self, DispersionConstants, DispersionInputs, ExternalModel, PrecisionSample};
use crate::propagation::{self, CDFEnsemble, StudyModel, StudySpec};
use crate::resampling::{summarize, BootstrapConfig, Histogram, SamplingDistribution};
use crate::screening::{classify, elementary_effects, moat_design};
use crate::verification::gci;

pub const REPORT_FILE: &str = "report.json";
pub const FAILED_MARKER: &str = "FAILED";

// stream index of each stochastic step under the master seed
const STREAM_SCREENING: u64 = 1;
const STREAM_PROPAGATION: u64 = 2;
const STREAM_OPTIMIZATION: u64 = 3;
const STREAM_SUBSET: u64 = 4;
const STREAM_BASELINE: u64 = 5;
const STREAM_BOOTSTRAP: u64 = 6;

// central range used to screen unbounded aleatory inputs
const SCREENING_TAIL: f64 = 0.005;

/// Which artifact families to write. `report.json` and the manifest are
/// always written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true, svg: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the config's seed.
    pub seed: Option<u64>,
    pub formats: Formats,
}

fn is_artifact(name: &str) -> bool {
    name == FAILED_MARKER || [".json", ".csv", ".svg"].iter().any(|ext| name.ends_with(ext))
}

/// Creates the output directory, or clears a previous run's artifacts from
/// it. A non-empty directory that does not look like an earlier output is
/// refused rather than cleaned.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    if !dir.exists() {
        return std::fs::create_dir_all(dir).map_err(Error::at_path(dir));
    }
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(Error::at_path(dir))? {
        let entry = entry?;
        names.push((entry.file_name().to_string_lossy().into_owned(), entry.file_type()?.is_file()));
    }
    if names.is_empty() {
        return Ok(());
    }
    let previous = names.iter().any(|(n, _)| n == MANIFEST_FILE || n == FAILED_MARKER || n == REPORT_FILE);
    if let Some((n, _)) = names.iter().find(|(n, file)| !file || !is_artifact(n)) {
        return Err(Error::Domain(format!(
            "output directory {} holds `{n}`, which is not a study artifact; choose an empty directory",
            dir.display()
        )));
    }
    if !previous {
        return Err(Error::Domain(format!(
            "output directory {} is not empty and holds no previous report",
            dir.display()
        )));
    }
    for (n, _) in names {
        let p = dir.join(n);
        std::fs::remove_file(&p).map_err(Error::at_path(&p))?;
    }
    Ok(())
}

/// Loads, checks and runs a study into `out`.
pub fn run_study(config: &Path, out: &Path, opts: &RunOptions) -> Result<StudyReport> {
    let loaded = load_config(config)?;
    prepare_output_dir(out)?;
    run_loaded(&loaded, out, opts)
}

/// Runs an already loaded study into a prepared directory. On failure a
/// `FAILED` marker holding the error is written next to whatever artifacts
/// were completed.
pub fn run_loaded(loaded: &LoadedConfig, out: &Path, opts: &RunOptions) -> Result<StudyReport> {
    let mut sink = Sink { dir: out, files: Vec::new() };
    match execute(loaded, opts, &mut sink) {
        Ok(report) => Ok(report),
        Err(e) => {
            let p = out.join(FAILED_MARKER);
            let _ = std::fs::write(&p, format!("{e}\n"));
            Err(e)
        }
    }
}

struct Sink<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, bytes).map_err(Error::at_path(&p))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn tag<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn model_kind(m: &ModelConfig) -> &'static str {
    match m {
        ModelConfig::Dispersion { .. } => "dispersion",
        ModelConfig::Classification { .. } => "classification",
        ModelConfig::External { .. } => "external",
        ModelConfig::Custom { .. } => "custom",
    }
}

fn execute(loaded: &LoadedConfig, opts: &RunOptions, sink: &mut Sink) -> Result<StudyReport> {
    let cfg = &loaded.config;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut report = StudyReport {
        tool: TOOL_NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_file: loaded.file_name.clone(),
        config_sha256: loaded.sha256.clone(),
        seed,
        qoi: cfg.qoi.clone(),
        model: model_kind(&cfg.model).into(),
        warnings: Vec::new(),
        characterization: characterize(cfg),
        screening: None,
        propagation: None,
        verification: None,
        classification: None,
        files: Vec::new(),
    };
    if opts.formats.csv {
        sink.with("characterization.csv", |w| write_characterization(&report.characterization, w))?;
    }

    match &cfg.model {
        ModelConfig::Classification { .. } => classification_study(loaded, seed, opts, sink, &mut report)?,
        _ => response_study(loaded, seed, opts, sink, &mut report)?,
    }

    if opts.formats.svg {
        let (svgs, warnings) = render_plots(&report);
        report.warnings.extend(warnings);
        for (name, svg) in svgs {
            sink.write(&name, svg.as_bytes())?;
        }
    }
    let mut files = sink.files.clone();
    files.sort();
    report.files = files;
    sink.json(REPORT_FILE, &report)?;
    write_manifest(sink.dir)?;
    Ok(report)
}

fn characterize(cfg: &StudyConfig) -> Vec<CharacterizedParameter> {
    let finite = |v: f64| v.is_finite().then_some(v);
    let mut rows: Vec<CharacterizedParameter> = cfg
        .parameters
        .iter()
        .map(|p| {
            let (role, mean, lower, upper) = match &p.spec {
                ParameterSpec::Distribution(d) => {
                    let (lo, hi) = d.support();
                    let role = if d.is_epistemic() { "epistemic" } else { "aleatory" };
                    (role, d.mean().ok(), finite(lo), finite(hi))
                }
                ParameterSpec::Derived(_) => ("derived", None, None, None),
            };
            CharacterizedParameter {
                name: p.name.clone(),
                role: role.into(),
                category: Some(p.category),
                classification: Some(p.classification),
                spec: Some(p.spec.clone()),
                mean,
                lower,
                upper,
            }
        })
        .collect();
    rows.extend(cfg.fixed.iter().map(|(name, &v)| CharacterizedParameter {
        name: name.clone(),
        role: "fixed".into(),
        category: None,
        classification: None,
        spec: None,
        mean: Some(v),
        lower: Some(v),
        upper: Some(v),
    }));
    rows
}

fn write_characterization(rows: &[CharacterizedParameter], w: &mut Vec<u8>) -> Result<()> {
    writeln!(w, "name,role,category,classification,spec,mean,lower,upper")?;
    for r in rows {
        let spec = r.spec.as_ref().map(serde_json::to_string).transpose()?.unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.name),
            r.role,
            r.category.as_ref().map(tag).unwrap_or_default(),
            r.classification.as_ref().map(tag).unwrap_or_default(),
            csv_field(&spec),
            opt(r.mean),
            opt(r.lower),
            opt(r.upper)
        )?;
    }
    Ok(())
}

/// Where a model input comes from.
#[derive(Clone, Copy, Debug)]
enum Source {
    Aleatory(usize),
    Epistemic(usize),
    Fixed(f64),
}

enum Kernel {
    Dispersion(DispersionConstants),
    External(ExternalModel),
    Custom {
        intercept: f64,
        linear: Vec<(usize, f64)>,
        products: Vec<(Vec<usize>, f64)>,
    },
}

/// The configured model as a [`StudyModel`] over the study's aleatory and
/// epistemic lists.
struct ResponseModel {
    sources: Vec<Source>,
    kernel: Kernel,
}

impl ResponseModel {
    fn build(loaded: &LoadedConfig, aleatory: &[UncertainParameter], epistemic: &[UncertainParameter]) -> Result<Self> {
        let cfg = &loaded.config;
        let resolve = |name: &str| -> Result<Source> {
            if let Some(i) = aleatory.iter().position(|p| p.name == name) {
                Ok(Source::Aleatory(i))
            } else if let Some(i) = epistemic.iter().position(|p| p.name == name) {
                Ok(Source::Epistemic(i))
            } else if let Some(&v) = cfg.fixed.get(name) {
                Ok(Source::Fixed(v))
            } else {
                Err(Error::Config {
                    pointer: "/model".into(),
                    message: format!("unknown input `{name}`"),
                })
            }
        };
        match &cfg.model {
            ModelConfig::Dispersion { inputs, constants } => Ok(Self {
                sources: [&inputs.ubar, &inputs.ti, &inputs.l].iter().map(|n| resolve(n)).collect::<Result<_>>()?,
                kernel: Kernel::Dispersion(*constants),
            }),
            ModelConfig::External {
                command,
                inputs,
                timeout_secs,
                working_dir,
            } => {
                let names: Vec<String> = match inputs {
                    Some(v) => v.clone(),
                    None => aleatory
                        .iter()
                        .chain(epistemic)
                        .map(|p| p.name.clone())
                        .chain(cfg.fixed.keys().cloned())
                        .collect(),
                };
                let mut model = ExternalModel::new(command.clone(), names.clone());
                model.timeout_secs = *timeout_secs;
                model.working_dir = Some(match working_dir {
                    Some(d) => loaded.base_dir.join(d),
                    None => loaded.base_dir.clone(),
                });
                Ok(Self {
                    sources: names.iter().map(|n| resolve(n)).collect::<Result<_>>()?,
                    kernel: Kernel::External(model),
                })
            }
            ModelConfig::Custom {
                intercept,
                coefficients,
                products,
            } => {
                let mut names: Vec<&str> = coefficients.keys().map(String::as_str).collect();
                for t in products {
                    for n in &t.inputs {
                        if !names.contains(&n.as_str()) {
                            names.push(n);
                        }
                    }
                }
                let index = |n: &str| names.iter().position(|m| *m == n).expect("collected above");
                Ok(Self {
                    sources: names.iter().map(|n| resolve(n)).collect::<Result<_>>()?,
                    kernel: Kernel::Custom {
                        intercept: *intercept,
                        linear: coefficients.iter().map(|(n, &c)| (index(n), c)).collect(),
                        products: products
                            .iter()
                            .map(|t| (t.inputs.iter().map(|n| index(n)).collect(), t.coefficient))
                            .collect(),
                    },
                })
            }
            ModelConfig::Classification { .. } => unreachable!("classification studies have no response model"),
        }
    }
}

impl StudyModel for ResponseModel {
    fn evaluate(&self, aleatory: &[f64], epistemic: &[f64]) -> Result<f64> {
        let x: Vec<f64> = self
            .sources
            .iter()
            .map(|s| match *s {
                Source::Aleatory(i) => aleatory[i],
                Source::Epistemic(i) => epistemic[i],
                Source::Fixed(v) => v,
            })
            .collect();
        match &self.kernel {
            Kernel::Dispersion(c) => c.eval(&DispersionInputs { ubar: x[0], ti: x[1], l: x[2] }),
            Kernel::External(m) => m.evaluate(&x),
            Kernel::Custom {
                intercept,
                linear,
                products,
            } => Ok(intercept
                + linear.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
                + products.iter().map(|(ix, c)| c * ix.iter().map(|&i| x[i]).product::<f64>()).sum::<f64>()),
        }
    }
}

fn response_study(loaded: &LoadedConfig, seed: u64, opts: &RunOptions, sink: &mut Sink, report: &mut StudyReport) -> Result<()> {
    let cfg = &loaded.config;
    let (epistemic, aleatory): (Vec<UncertainParameter>, Vec<UncertainParameter>) =
        cfg.parameters.iter().cloned().partition(|p| p.is_epistemic());
    let model = ResponseModel::build(loaded, &aleatory, &epistemic)?;

    if aleatory.is_empty() && epistemic.is_empty() {
        report
            .warnings
            .push("the study has no uncertainty sources; the result is a single deterministic evaluation".into());
    }

    if let Some(sc) = &cfg.screening {
        report.screening = screen(&model, &aleatory, &epistemic, sc, seed, report)?;
        if let (Some(s), true) = (&report.screening, opts.formats.csv) {
            sink.with("screening.csv", |w| {
                writeln!(w, "input,lower,upper,mu,mu_star,sigma,class")?;
                for i in &s.inputs {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        csv_field(&i.name),
                        i.range.0,
                        i.range.1,
                        i.mu,
                        i.mu_star,
                        i.sigma,
                        i.class.as_str()
                    )?;
                }
                Ok(())
            })?;
        }
    }

    let mut spec = StudySpec::new(cfg.qoi.clone(), aleatory, epistemic);
    spec.inner = cfg.propagation.inner.clone();
    spec.outer = cfg.propagation.outer.clone();
    spec.k = cfg.report.k;
    spec.validate()?;
    let ensemble = propagation::nested_propagate(&model, &spec, SeededStream::with_index(seed, STREAM_PROPAGATION))?;
    let pbox = propagation::pbox(&ensemble)?;
    if ensemble.members.iter().any(|m| m.convergence.as_ref().is_some_and(|c| !c.converged)) {
        report
            .warnings
            .push("some inner loops stopped at max_n without meeting both convergence criteria".into());
    }

    let mut optimization = Vec::new();
    for (i, settings) in cfg.propagation.optimize.iter().enumerate() {
        let stream = SeededStream::with_index(seed, STREAM_OPTIMIZATION).substream(i as u64);
        let optimum = propagation::optimize_epistemic(&model, &spec, settings, stream)?;
        optimization.push(OptimizationReport {
            settings: settings.clone(),
            optimum,
        });
    }

    // verification
    let mut u_num = 0.0;
    if let Some(v) = &cfg.verification {
        let g = gci(&v.grid, v.factor_of_safety)?;
        u_num = g.u_num;
        report.verification = Some(VerificationReport {
            grid: v.grid.clone(),
            gci: g,
        });
        if opts.formats.json {
            sink.json("verification.json", report.verification.as_ref().unwrap())?;
        }
    } else {
        report
            .warnings
            .push("no verification block: numerical uncertainty taken as zero".into());
    }

    // summary
    let expanded = match propagation::expanded_uncertainty(&ensemble, cfg.report.k, u_num) {
        Ok(e) => Some(e),
        Err(Error::InsufficientSample(msg)) => {
            report.warnings.push(format!("expanded uncertainty not computed: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let quantile_intervals = [0.05, 0.5, 0.95]
        .iter()
        .map(|&p| {
            let (lower, upper) = pbox.quantile_interval(p);
            QuantileInterval { p, lower, upper }
        })
        .collect();

    if opts.formats.csv {
        sink.with("horsetail.csv", |w| ensemble.write_csv(w))?;
        sink.with("pbox.csv", |w| pbox.write_csv(&mut *w))?;
        sink.with("members.csv", |w| write_members(&ensemble, w))?;
        if ensemble.members.iter().any(|m| m.convergence.is_some()) {
            sink.with("convergence.csv", |w| write_convergence(&ensemble, w))?;
        }
    }
    if let (Some(e), true) = (&expanded, opts.formats.json) {
        sink.json("expanded_uncertainty.json", e)?;
    }

    report.propagation = Some(PropagationReport {
        inner: spec.inner.clone(),
        epistemic_names: ensemble.epistemic_names.clone(),
        members: ensemble
            .members
            .iter()
            .map(|m| MemberReport {
                epistemic: m.epistemic.clone(),
                n: m.cdf.len(),
                mean: m.mean,
                std: m.std_dev(),
                converged: m.convergence.as_ref().map(|c| c.converged),
                values: m.cdf.values().to_vec(),
            })
            .collect(),
        pbox,
        quantile_intervals,
        expanded,
        optimization,
    });
    Ok(())
}

fn screen(
    model: &ResponseModel,
    aleatory: &[UncertainParameter],
    epistemic: &[UncertainParameter],
    sc: &ScreeningConfig,
    seed: u64,
    report: &mut StudyReport,
) -> Result<Option<ScreeningReport>> {
    // screened inputs: sampled aleatory parameters, then epistemic ones
    let sampled: Vec<&UncertainParameter> = aleatory.iter().filter(|p| !p.is_derived()).collect();
    let mut names = Vec::new();
    let mut ranges = Vec::new();
    for p in &sampled {
        let d = p.spec.distribution().expect("sampled parameters have distributions");
        names.push(p.name.clone());
        ranges.push((quantile(d, SCREENING_TAIL)?, quantile(d, 1.0 - SCREENING_TAIL)?));
    }
    for p in epistemic {
        names.push(p.name.clone());
        ranges.push(p.spec.distribution().expect("interval").support());
    }
    if names.is_empty() {
        report.warnings.push("screening skipped: the study has no uncertain inputs".into());
        return Ok(None);
    }
    let na = sampled.len();
    let row_of = |x: &[f64]| -> Result<Vec<f64>> {
        aleatory
            .iter()
            .map(|p| match &p.spec {
                ParameterSpec::Derived(f) => {
                    let inputs: Vec<f64> = f
                        .inputs()
                        .iter()
                        .map(|n| x[sampled.iter().position(|q| q.name == *n).expect("validated derived input")])
                        .collect();
                    f.evaluate(&inputs)
                }
                _ => Ok(x[sampled.iter().position(|q| q.name == p.name).expect("sampled")]),
            })
            .collect()
    };
    let f = |x: &[f64]| model.evaluate(&row_of(x)?, &x[na..]);
    let design = moat_design(names.len(), sc.trajectories, sc.levels, SeededStream::with_index(seed, STREAM_SCREENING))?;
    let table = elementary_effects(f, &design, &names, &ranges)?;
    let classes = classify(&table, &sc.thresholds)?;
    Ok(Some(ScreeningReport {
        trajectories: sc.trajectories,
        levels: sc.levels,
        evaluations: design.evaluations(),
        inputs: table
            .inputs
            .iter()
            .zip(&classes)
            .zip(&ranges)
            .map(|((e, &class), &range)| ScreenedInput {
                name: e.name.clone(),
                range,
                mu: e.mu,
                mu_star: e.mu_star,
                sigma: e.sigma,
                class,
            })
            .collect(),
    }))
}

fn write_members(ensemble: &CDFEnsemble, w: &mut Vec<u8>) -> Result<()> {
    let names: Vec<String> = ensemble.epistemic_names.iter().map(|n| csv_field(n)).collect();
    write!(w, "member,")?;
    for n in &names {
        write!(w, "{n},")?;
    }
    writeln!(w, "n,mean,std,converged")?;
    for (j, m) in ensemble.members.iter().enumerate() {
        write!(w, "{j},")?;
        for v in &m.epistemic {
            write!(w, "{v},")?;
        }
        let converged = m.convergence.as_ref().map(|c| c.converged.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{converged}", m.cdf.len(), m.mean, opt(m.std_dev()))?;
    }
    Ok(())
}

fn write_convergence(ensemble: &CDFEnsemble, w: &mut Vec<u8>) -> Result<()> {
    writeln!(w, "member,iteration,n,mean,variance,mean_criterion,variance_criterion,mean_rule,variance_rule,converged")?;
    for (j, m) in ensemble.members.iter().enumerate() {
        let Some(c) = &m.convergence else { continue };
        for (i, it) in c.iterations.iter().enumerate() {
            match &it.check {
                Some(ch) => writeln!(
                    w,
                    "{j},{i},{},{},{},{},{},{},{},{}",
                    it.n,
                    it.mean,
                    it.variance,
                    ch.mean_criterion,
                    ch.variance_criterion,
                    tag(&ch.mean_rule),
                    tag(&ch.variance_rule),
                    ch.converged
                )?,
                None => writeln!(w, "{j},{i},{},{},{},,,,,", it.n, it.mean, it.variance)?,
            }
        }
    }
    Ok(())
}

fn classification_study(
    loaded: &LoadedConfig,
    seed: u64,
    opts: &RunOptions,
    sink: &mut Sink,
    report: &mut StudyReport,
) -> Result<()> {
    let ModelConfig::Classification {
        data_dir,
        train_size,
        train,
        resamples,
    } = &loaded.config.model
    else {
        unreachable!()
    };
    let dir = loaded.base_dir.join(data_dir);
    let full = models::load_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte"))?;
    let test = models::load_idx(&dir.join("t10k-images-idx3-ubyte"), &dir.join("t10k-labels-idx1-ubyte"))?;
    let subset = full.random_subset(*train_size, SeededStream::with_index(seed, STREAM_SUBSET))?;
    let tc = train_config(train, seed);

    // baseline: one network on the drawn subset
    let trained = models::train_with_stream(&subset, &tc, SeededStream::with_index(seed, STREAM_BASELINE))?;
    report.warnings.extend(trained.warnings.iter().cloned());
    let cm = models::evaluate(&trained.classifier, &test)?;
    let avg = average_precision(&cm, Averaging::Macro)?;
    let per_class = class_metrics(&cm);
    let mut ranking: Vec<usize> = (0..cm.classes()).collect();
    ranking.sort_by(|&a, &b| match (per_class[a].precision, per_class[b].precision) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    let baseline = BaselineReport {
        macro_precision: avg.value,
        accuracy: cm.accuracy(),
        excluded: avg.excluded.clone(),
        per_class: per_class.clone(),
        precision_ranking: ranking,
        final_training_loss: *trained.epoch_loss.last().expect("at least one epoch"),
    };

    // bootstrap over the training rows
    let boot = BootstrapConfig::new(*resamples, SeededStream::with_index(seed, STREAM_BOOTSTRAP));
    let samples = models::bootstrap_precision(&subset, &test, &tc, &boot)?;
    let macro_values: Vec<f64> = samples.iter().map(|s| s.macro_precision).collect();
    let macro_dist = SamplingDistribution::new(macro_values)?;
    let interval = summarize(&macro_dist, loaded.config.report.coverage)?;
    let classes = cm.classes();
    let mut per_class_dist = Vec::with_capacity(classes);
    let mut undefined = vec![0usize; classes];
    for k in 0..classes {
        let defined: Vec<f64> = samples.iter().filter_map(|s| s.per_class[k]).collect();
        undefined[k] = samples.len() - defined.len();
        per_class_dist.push(if defined.is_empty() {
            report
                .warnings
                .push(format!("class {k} was never predicted in any bootstrap replicate"));
            None
        } else {
            Some(SamplingDistribution::new(defined)?)
        });
    }

    if opts.formats.csv {
        sink.with("confusion.csv", |w| cm.write_csv(w))?;
        sink.with("class_metrics.csv", |w| {
            writeln!(w, "class,precision,recall,f1")?;
            for m in &per_class {
                writeln!(w, "{},{},{},{}", m.class, opt(m.precision), opt(m.recall), opt(m.f1))?;
            }
            Ok(())
        })?;
        sink.with("bootstrap.csv", |w| write_bootstrap(&samples, classes, w))?;
    }
    if opts.formats.json {
        sink.json("weights.json", &trained.classifier)?;
        sink.json("bootstrap_interval.json", &interval)?;
    }

    report.classification = Some(ClassificationReport {
        train_size: subset.len(),
        test_size: test.len(),
        baseline,
        bootstrap: BootstrapReport {
            resamples: *resamples,
            macro_precision: macro_dist,
            interval,
            per_class: per_class_dist,
            undefined_counts: undefined,
        },
    });
    Ok(())
}

fn write_bootstrap(samples: &[PrecisionSample], classes: usize, w: &mut Vec<u8>) -> Result<()> {
    write!(w, "b,macro_precision")?;
    for k in 0..classes {
        write!(w, ",p{k}")?;
    }
    writeln!(w)?;
    for (b, s) in samples.iter().enumerate() {
        write!(w, "{b},{}", s.macro_precision)?;
        for p in &s.per_class {
            write!(w, ",{}", opt(*p))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// The report's figures as (file name, SVG text), plus a warning for each
/// figure skipped for lack of data.
pub fn render_plots(report: &StudyReport) -> (Vec<(String, String)>, Vec<String>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    let mut push = |name: &str, svg: Option<String>, what: &str| match svg {
        Some(s) => out.push((name.to_string(), s)),
        None => warnings.push(format!("{what}: no data, nothing plotted")),
    };
    if let Some(p) = &report.propagation {
        let members: Vec<Vec<f64>> = p.members.iter().map(|m| m.values.clone()).collect();
        push("horsetail.svg", plot::horsetail_svg(&report.qoi, &members, &p.pbox), "horsetail plot");
    }
    if let Some(c) = &report.classification {
        let values = &c.bootstrap.macro_precision.values;
        push(
            "precision_histogram.svg",
            plot::histogram_svg(
                &format!("Macro-average precision over {} bootstrap replicates", values.len()),
                "precision",
                &Histogram::freedman_diaconis(values),
            ),
            "precision histogram",
        );
        let panels: Vec<(String, Histogram)> = c
            .bootstrap
            .per_class
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let values = d.as_ref().map(|d| d.values.as_slice()).unwrap_or(&[]);
                (format!("digit {k}"), Histogram::freedman_diaconis(values))
            })
            .collect();
        push(
            "digit_precision_histograms.svg",
            plot::histogram_panels_svg("Per-digit precision over bootstrap replicates", "precision", &panels),
            "per-digit histograms",
        );
    }
    if out.is_empty() && warnings.is_empty() {
        warnings.push("the report holds no ensemble or histogram data; nothing plotted".into());
    }
    (out, warnings)
}

/// Re-draws the figures of a finished report directory into `out`. When
/// `out` is the report directory its manifest is refreshed.
pub fn plot_report(report_dir: &Path, out: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let path = report_dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(Error::at_path(&path))?;
    let report: StudyReport = serde_json::from_str(&text)?;
    std::fs::create_dir_all(out).map_err(Error::at_path(out))?;
    let (svgs, warnings) = render_plots(&report);
    let mut written = Vec::new();
    for (name, svg) in svgs {
        let p = out.join(&name);
        std::fs::write(&p, svg).map_err(Error::at_path(&p))?;
        written.push(name);
    }
    let same = std::fs::canonicalize(report_dir).ok() == std::fs::canonicalize(out).ok();
    if same && report_dir.join(MANIFEST_FILE).exists() {
        write_manifest(report_dir)?;
    }
    Ok((written, warnings))
}
