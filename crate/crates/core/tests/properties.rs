//! Property tests of the metric, verification, propagation and screening
//! invariants.

use proptest::prelude::*;
use uqflow::dist::{cdf, quantile, DistributionSpec, SeededStream};
use uqflow::metrics::{
    bayes_update, class_metrics, js_distance, kl_divergence, ConfusionMatrix, DiscreteDistribution,
};
use uqflow::propagation::{expanded_uncertainty, pbox, CDFEnsemble, EmpiricalCDF, Member};
use uqflow::screening::{elementary_effects, moat_design};
use uqflow::verification::{gci, GridStudy};

/// Random probability vectors of length k with strictly positive masses.
fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn dist(m: Vec<f64>) -> DiscreteDistribution {
    DiscreteDistribution::new(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kl_is_non_negative((q, p) in (2usize..8).prop_flat_map(|k| (simplex(k), simplex(k)))) {
        let d = kl_divergence(&dist(q.clone()), &dist(p)).unwrap();
        prop_assert!(d >= -1e-15);
        prop_assert!(kl_divergence(&dist(q.clone()), &dist(q)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kl_is_zero_only_for_equal_distributions((q, p) in (2usize..6).prop_flat_map(|k| (simplex(k), simplex(k)))) {
        let gap: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        prop_assume!(gap > 1e-6);
        prop_assert!(kl_divergence(&dist(q), &dist(p)).unwrap() > 0.0);
    }

    #[test]
    fn bayes_with_uniform_likelihood_is_identity(prior in (2usize..10).prop_flat_map(simplex), c in 0.01f64..10.0) {
        let post = bayes_update(&dist(prior.clone()), &vec![c; prior.len()]).unwrap();
        for (a, b) in post.masses().iter().zip(&prior) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn f1_is_harmonic_mean(counts in prop::collection::vec(prop::collection::vec(0u64..50, 4), 4)) {
        let cm = ConfusionMatrix::new(counts).unwrap();
        for m in class_metrics(&cm) {
            match (m.precision, m.recall, m.f1) {
                (Some(p), Some(r), Some(f)) => prop_assert!((f - 2.0 / (1.0 / p + 1.0 / r)).abs() < 1e-12 || p * r == 0.0),
                (Some(p), Some(r), None) => prop_assert_eq!(p + r, 0.0),
                (_, _, f) => prop_assert!(f.is_none()),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn jsd_is_a_bounded_symmetric_metric(
        (a, b, c) in (2usize..8).prop_flat_map(|k| (simplex(k), simplex(k), simplex(k)))
    ) {
        let (a, b, c) = (dist(a), dist(b), dist(c));
        let ab = js_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, js_distance(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        let (ac, cb) = (js_distance(&a, &c).unwrap(), js_distance(&c, &b).unwrap());
        prop_assert!(ab <= ac + cb + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn gci_recovers_power_laws(
        f_star in prop_oneof![-100.0f64..-1.0, 1.0f64..100.0],
        c in prop_oneof![-10.0f64..-1.0, 1.0f64..10.0],
        p in 0.5f64..4.0,
        r in prop::sample::select(vec![1.5, 2.0, 3.0]),
        h1 in 0.5f64..2.0,
    ) {
        let h = [h1, h1 / r, h1 / (r * r)];
        let f = h.map(|h| f_star + c * h.powf(p));
        let g = gci(&GridStudy::new(h, f).unwrap(), 1.25).unwrap();
        prop_assert!((g.p_observed - p).abs() < 1e-9, "p {} vs {}", g.p_observed, p);
        prop_assert!((g.f_extrapolated - f_star).abs() < 1e-9 * f_star.abs());
    }

    #[test]
    fn u_num_is_linear_in_the_factor_of_safety(fs in 1.0f64..3.0, p in 0.5f64..4.0) {
        let h = [0.4, 0.2, 0.1];
        let study = GridStudy::new(h, h.map(|h| 10.0 + h.powf(p))).unwrap();
        let base = gci(&study, 1.0).unwrap().u_num;
        prop_assert!((gci(&study, fs).unwrap().u_num - fs * base).abs() < 1e-12 * fs * base.max(1.0));
    }

    #[test]
    fn expanded_uncertainty_is_monotone(
        members in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2..20), 1..6),
        k1 in 0.0f64..4.0, dk in 0.0f64..2.0,
        u1 in 0.0f64..5.0, du in 0.0f64..2.0,
    ) {
        let e = ensemble(&members);
        let a = expanded_uncertainty(&e, k1, u1).unwrap();
        for (k, u) in [(k1 + dk, u1), (k1, u1 + du), (k1 + dk, u1 + du)] {
            let b = expanded_uncertainty(&e, k, u).unwrap();
            prop_assert!(b.lb <= a.lb && b.ub >= a.ub);
        }
    }

    #[test]
    fn pbox_envelopes_are_ordered_and_bound_members(
        members in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 1..30), 1..8),
    ) {
        let e = ensemble(&members);
        let pb = pbox(&e).unwrap();
        for (i, &x) in pb.grid.iter().enumerate() {
            prop_assert!(pb.upper[i] >= pb.lower[i]);
            for m in &e.members {
                let f = m.cdf.eval(x);
                prop_assert!(pb.lower[i] <= f && f <= pb.upper[i]);
            }
        }
        prop_assert!(pb.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn affine_models_have_no_effect_spread(
        coef in prop::collection::vec(-5.0f64..5.0, 1..6),
        seed in any::<u64>(),
        r in 2usize..12,
    ) {
        let dim = coef.len();
        let design = moat_design(dim, r, 4, SeededStream::new(seed)).unwrap();
        let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        let ranges: Vec<(f64, f64)> = (0..dim).map(|i| (-1.0 - i as f64, 2.0 + i as f64)).collect();
        let model = |x: &[f64]| Ok(0.5 + x.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>());
        let t = elementary_effects(model, &design, &names, &ranges).unwrap();
        for (i, e) in t.inputs.iter().enumerate() {
            prop_assert!(e.sigma < 1e-12 * (1.0 + e.mu_star), "sigma {}", e.sigma);
            let span = ranges[i].1 - ranges[i].0;
            prop_assert!((e.mu - coef[i] * span).abs() < 1e-9 * (1.0 + e.mu_star));
        }
    }

    #[test]
    fn normalized_effects_ignore_range_scaling(
        coef in prop::collection::vec(-5.0f64..5.0, 2..5),
        seed in any::<u64>(),
        scale in 1.5f64..4.0,
    ) {
        let dim = coef.len();
        let design = moat_design(dim, 6, 6, SeededStream::new(seed)).unwrap();
        let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        let base: Vec<(f64, f64)> = vec![(0.0, 1.0); dim];
        let mut stretched = base.clone();
        stretched[0] = (0.0, scale);
        // the coefficient of x0 is divided by the stretch: same response
        // over the normalized design
        let model_a = |x: &[f64]| Ok(x.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>());
        let model_b = |x: &[f64]| {
            Ok(x[0] * coef[0] / scale + x[1..].iter().zip(&coef[1..]).map(|(a, b)| a * b).sum::<f64>())
        };
        let a = elementary_effects(model_a, &design, &names, &base).unwrap();
        let b = elementary_effects(model_b, &design, &names, &stretched).unwrap();
        for (x, y) in a.inputs.iter().zip(&b.inputs) {
            prop_assert!((x.mu - y.mu).abs() < 1e-9 * (1.0 + x.mu.abs()));
        }
    }

    #[test]
    fn quantile_inverts_cdf(
        u in 1e-6f64..(1.0 - 1e-6),
        family in 0usize..4,
        a in 0.5f64..3.0,
        b in 0.5f64..3.0,
    ) {
        let spec = match family {
            0 => DistributionSpec::Weibull { scale: a, shape: b },
            1 => DistributionSpec::Normal { mu: a, sigma: b },
            2 => DistributionSpec::Uniform { lo: -a, hi: b },
            _ => DistributionSpec::TruncatedNormal { mu: 0.0, sigma: b, lower: -a, upper: f64::INFINITY },
        };
        let x = quantile(&spec, u).unwrap();
        let back = quantile(&spec, cdf(&spec, x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-10 * x.abs().max(1.0), "{spec:?}: {x} vs {back}");
    }
}

fn ensemble(members: &[Vec<f64>]) -> CDFEnsemble {
    CDFEnsemble {
        qoi_name: "q".into(),
        epistemic_names: vec![],
        members: members
            .iter()
            .map(|v| {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                Member {
                    epistemic: vec![],
                    cdf: EmpiricalCDF::new(v).unwrap(),
                    mean,
                    variance: (v.len() > 1).then(|| v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)),
                    convergence: None,
                }
            })
            .collect(),
    }
}
