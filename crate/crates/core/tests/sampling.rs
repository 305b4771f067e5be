use std::sync::atomic::{AtomicUsize, Ordering};

use uqflow::dist::{DistributionSpec, SeededStream, UncertainParameter};
use uqflow::resampling::{bootstrap, BootstrapConfig};
use uqflow::sampling::{latin_hypercube, monte_carlo, progressive_lhs, ProgressiveConfig};
use uqflow::stats;

fn unit(name: &str) -> UncertainParameter {
    UncertainParameter::aleatory(name, DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }).unwrap()
}

fn weibull() -> UncertainParameter {
    UncertainParameter::aleatory("Ubar", DistributionSpec::Weibull { scale: 2.0, shape: 1.5 }).unwrap()
}

#[test]
fn every_stratum_holds_exactly_one_point() {
    let params = [unit("a"), unit("b"), unit("c")];
    for (seed, n) in [1, 2, 3, 10, 59, 100, 472, 1000, 4321, 10_000].into_iter().enumerate() {
        let m = latin_hypercube(&params, n, SeededStream::new(seed as u64)).unwrap();
        for col in m.columns() {
            let mut hits = vec![0u32; n];
            for &x in col {
                let k = (x * n as f64).floor() as usize;
                hits[k.min(n - 1)] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1), "n = {n}");
        }
    }
}

#[test]
fn lhs_mean_varies_less_than_monte_carlo() {
    let params = [weibull()];
    let (reps, n) = (200, 50);
    let means = |design: &dyn Fn(SeededStream) -> Vec<f64>| -> Vec<f64> {
        (0..reps)
            .map(|r| {
                let q: Vec<f64> = design(SeededStream::with_index(99, r)).iter().map(|u| u * u).collect();
                stats::mean(&q).unwrap()
            })
            .collect()
    };
    let lhs = means(&|s| latin_hypercube(&params, n, s).unwrap().columns()[0].clone());
    let mc = means(&|s| monte_carlo(&params, n, s).unwrap().columns()[0].clone());
    // one-sided 99 % bootstrap bound on Var(LHS means) − Var(MC means)
    let pairs: Vec<(f64, f64)> = lhs.into_iter().zip(mc).collect();
    let diff = |s: &[(f64, f64)]| {
        let (a, b): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
        stats::variance(&a).unwrap() - stats::variance(&b).unwrap()
    };
    assert!(diff(&pairs) < 0.0);
    let boot = bootstrap(&pairs, diff, &BootstrapConfig::new(2000, SeededStream::new(5))).unwrap();
    let upper = stats::quantile_sorted(&stats::sorted(&boot.values), 0.99).unwrap();
    assert!(upper < 0.0, "99 % upper bound {upper}");
}

fn ubar_squared(x: &[f64]) -> uqflow::Result<f64> {
    Ok(x[0] * x[0])
}

#[test]
fn progressive_run_is_schedule_independent() {
    let params = [weibull()];
    let cfg = ProgressiveConfig::default();
    let run_on = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| progressive_lhs(ubar_squared, &params, &cfg, SeededStream::new(42)).unwrap())
    };
    let a = run_on(1);
    let b = run_on(8);
    assert_eq!(a.qoi, b.qoi);
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.report, b.report);
}

#[test]
fn refinement_never_re_evaluates_rows() {
    let params = [weibull(), unit("u")];
    let calls = AtomicUsize::new(0);
    let cfg = ProgressiveConfig { eps_mean: 1e-4, eps_variance: 1e-4, max_n: 59 * 16, ..Default::default() };
    let run = progressive_lhs(
        |x: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed);
            Ok(x[0] + x[1])
        },
        &params,
        &cfg,
        SeededStream::new(3),
    )
    .unwrap();
    assert_eq!(calls.load(Ordering::Relaxed), run.report.final_n());
    assert_eq!(run.qoi.len(), run.report.final_n());
    // the final design is still a Latin hypercube
    let n = run.report.final_n();
    let mut hits = vec![0u32; n];
    for &x in run.samples.column("u").unwrap() {
        hits[((x * n as f64) as usize).min(n - 1)] += 1;
    }
    assert!(hits.iter().all(|&h| h == 1));
}

#[test]
fn sample_matrix_csv_round_trip() {
    let m = latin_hypercube(&[weibull(), unit("u")], 37, SeededStream::new(8)).unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"Ubar,u\n"));
    assert_eq!(uqflow::sampling::SampleMatrix::read_csv(&buf[..]).unwrap(), m);
}
