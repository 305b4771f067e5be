use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use uqflow::report::{self, Formats, RunOptions, StudyReport};

/// Run declarative uncertainty-quantification studies.
#[derive(Parser)]
#[command(name = "uqflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and write its report directory.
    Run {
        config: PathBuf,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: out/<config name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Artifact families to write.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Json, Format::Svg])]
        format: Vec<Format>,
        /// Worker threads for model evaluations.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check configs; prints one JSON line per finding.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Redraw the figures of a report directory.
    Plot {
        report_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

const CONFIG_ERROR: u8 = 1;
const EVALUATION_ERROR: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            out,
            format,
            jobs,
        } => {
            let formats = Formats {
                csv: format.contains(&Format::Csv),
                json: format.contains(&Format::Json),
                svg: format.contains(&Format::Svg),
            };
            let out = out.unwrap_or_else(|| {
                Path::new("out").join(config.file_stem().unwrap_or_default())
            });
            run(&config, &out, RunOptions { seed, formats }, jobs)
        }
        Command::Validate { configs } => validate(&configs),
        Command::Plot { report_dir, out } => {
            let out = out.unwrap_or_else(|| report_dir.clone());
            match report::plot_report(&report_dir, &out) {
                Ok((written, warnings)) => {
                    for w in warnings {
                        eprintln!("warning: {w}");
                    }
                    for f in written {
                        println!("{}", out.join(f).display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(CONFIG_ERROR)
                }
            }
        }
    }
}

fn run(config: &Path, out: &Path, opts: RunOptions, jobs: Option<usize>) -> ExitCode {
    let loaded = match report::load_config(config).and_then(|l| report::prepare_output_dir(out).map(|_| l)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| report::run_loaded(&loaded, out, &opts)),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EVALUATION_ERROR);
        }
    };
    match result {
        Ok(r) => {
            summarize(&r, out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("partial outputs kept in {}", out.display());
            ExitCode::from(EVALUATION_ERROR)
        }
    }
}

fn summarize(r: &StudyReport, out: &Path) {
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} study, seed {}: {}", r.model, r.seed, out.display());
    if let Some(p) = &r.propagation {
        println!("  {} CDF members", p.members.len());
        if let Some(e) = &p.expanded {
            println!("  expanded uncertainty of {} (k = {}, U_num = {}): [{}, {}]", r.qoi, e.k, e.u_num, e.lb, e.ub);
        }
        for o in &p.optimization {
            println!("  {:?} {:?}: {} at {:?}", o.settings.objective, o.settings.statistic, o.optimum.value, o.optimum.point);
        }
    }
    if let Some(c) = &r.classification {
        println!("  baseline macro precision {:.4}", c.baseline.macro_precision);
        let i = &c.bootstrap.interval;
        println!(
            "  bootstrap ({} replicates): mean {:.4}, {}% interval [{:.4}, {:.4}]",
            c.bootstrap.resamples,
            i.mean,
            i.coverage * 100.0,
            i.lower,
            i.upper
        );
    }
    println!("  {} files", r.files.len() + 2);
}

fn validate(configs: &[PathBuf]) -> ExitCode {
    let mut ok = true;
    for path in configs {
        let file = path.display().to_string();
        match report::validate_config(path) {
            Ok(diags) if diags.is_empty() => {
                println!("{}", serde_json::json!({ "file": file, "valid": true }));
            }
            Ok(diags) => {
                ok = false;
                for d in diags {
                    println!("{}", serde_json::json!({ "file": file, "pointer": d.pointer, "message": d.message }));
                }
            }
            Err(e) => {
                ok = false;
                println!("{}", serde_json::json!({ "file": file, "pointer": "", "message": e.to_string() }));
            }
        }
    }
    if ok { ExitCode::SUCCESS } else { ExitCode::from(CONFIG_ERROR) }
}
