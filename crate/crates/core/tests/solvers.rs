use fmhsdm::bench::{gen_instance_seeded, lift, ProblemKind, SolverSpec};
use fmhsdm::certificate::{
    fejer_check, rate_certificate, upsilon_residual, FejerTracker, OptimalPair, RateTracker, ThetaMetric,
};
use fmhsdm::linalg::dist;
use fmhsdm::solver::{run, run_observed, seeded_initial_point, SolverConfig, Step, Variant};
use fmhsdm::{Error, Result};

const D: usize = 30;

#[test]
fn streamed_certificates_match_stored_trace() {
    let bench = gen_instance_seeded(ProblemKind::Iiduka, D, 0.5, 1).unwrap();
    let p = &bench.native;
    let x0 = seeded_initial_point(p, 2);
    let cfg = SolverConfig::new(Variant::FmHsdm, 0.6, 0.99 * 2.0 * 0.4 / 10.0, 400);

    let stored = run(p, &cfg.clone().with_certificates(), &x0).unwrap();
    let pair = OptimalPair::from_problem(p, cfg.lambda).unwrap();
    let metric = ThetaMetric::theta(p.constraint(), cfg.alpha).unwrap();
    let fejer = fejer_check(&stored, &pair, &metric).unwrap();
    let rate = rate_certificate(&stored, p).unwrap();

    let mut ft = FejerTracker::new(pair, metric);
    let mut rt = RateTracker::new(p, cfg.variant, cfg.alpha, cfg.lambda).unwrap();
    let mut seen = 0;
    let mut obs = |s: &Step<'_>| -> Result<()> {
        assert_eq!(s.n, seen);
        seen += 1;
        ft.observe(s)?;
        rt.observe(s)
    };
    let streamed = run_observed(p, &cfg, &x0, Some(&mut obs)).unwrap();
    assert_eq!(seen, 401);
    assert!(streamed.duals.is_empty());
    assert_eq!(streamed.final_iterate, stored.final_iterate);
    let (f2, r2) = (ft.finish(), rt.finish());
    assert_eq!(f2.distances, fejer.distances);
    assert!(f2.passed && fejer.passed);
    for (a, b) in r2.averaged.iter().zip(&rate.averaged) {
        assert_eq!(a.values, b.values);
    }
    assert!(rate.passed());
}

#[test]
fn third_variant_on_hyperplane_with_upsilon_metric() {
    let bench = gen_instance_seeded(ProblemKind::Hyperplane, D, 1.0, 3).unwrap();
    let p = &bench.native;
    let x0 = seeded_initial_point(p, 4);
    let spec = SolverSpec::parse("fm-hsdm-iii").unwrap();
    let cfg = spec.config(p, 3000, true);
    assert_eq!(cfg.lambda, 0.99 * 2.0 * 0.25 / 10.0);
    let tr = run(p, &cfg, &x0).unwrap();
    let e1: Vec<f64> = (0..D).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    assert!(dist(&tr.final_iterate, &e1) < 1e-6);
    let metric = ThetaMetric::for_variant(p.constraint(), cfg.variant, cfg.alpha).unwrap();
    assert!(metric.is_upsilon());
    let pair = OptimalPair::from_problem(p, cfg.lambda).unwrap();
    assert!(fejer_check(&tr, &pair, &metric).unwrap().passed);
    let v = tr.duals.last().unwrap();
    assert!(upsilon_residual(&tr.final_iterate, v, cfg.lambda, p).unwrap() < 1e-5);
}

#[test]
fn prox_free_variant_matches_full_scheme_when_g_is_zero() {
    let bench = gen_instance_seeded(ProblemKind::Hyperplane, D, 0.2, 5).unwrap();
    let p = &bench.native;
    let x0 = seeded_initial_point(p, 6);
    let a = run(p, &SolverConfig::new(Variant::FmHsdm, 0.5, 0.09, 200), &x0).unwrap();
    let b = run(p, &SolverConfig::new(Variant::FmHsdmG0, 0.5, 0.09, 200), &x0).unwrap();
    assert_eq!(a.final_iterate, b.final_iterate);
}

#[test]
fn recast_solvers_reach_the_lifted_minimizer() {
    let bench = gen_instance_seeded(ProblemKind::Iiduka, D, 1.0, 7).unwrap();
    let x0 = lift(&seeded_initial_point(&bench.native, 8), &bench.recast);
    let x_star = bench.recast.known_minimizer().unwrap().as_slice().to_vec();
    for name in ["fm-hsdm-ii", "admm", "pd-condat-ii", "pd-cp"] {
        let spec = SolverSpec::parse(name).unwrap();
        let tr = run(&bench.recast, &spec.config(&bench.recast, 5000, false), &x0).unwrap();
        assert!(dist(&tr.final_iterate, &x_star) < 1e-4, "{name}: {}", dist(&tr.final_iterate, &x_star));
    }
}

#[test]
fn unsupported_and_invalid_runs_are_rejected() {
    let bench = gen_instance_seeded(ProblemKind::Iiduka, D, 1.0, 9).unwrap();
    let p = &bench.native;
    let x0 = seeded_initial_point(p, 10);
    for v in [Variant::Admm, Variant::Fista] {
        let r = run(p, &SolverConfig::new(v, 0.5, 1.0, 10), &x0);
        assert!(matches!(r, Err(Error::UnsupportedProblem(_))), "{v}");
    }
    assert!(run(p, &SolverConfig::new(Variant::FmHsdmF0, 0.5, 1.0, 10), &x0).is_err());
    assert!(run(p, &SolverConfig::new(Variant::FmHsdmIii, 0.5, 0.01, 10), &x0).is_err());
    assert!(run(p, &SolverConfig::new(Variant::FmHsdm, 0.5, 0.1, 10), &x0).is_err());
    assert!(matches!(
        run(p, &SolverConfig::new(Variant::FmHsdm, 0.5, 0.05, 10), &x0[1..]),
        Err(Error::DimensionMismatch { .. })
    ));
    let mut bad = x0.clone();
    bad[3] = f64::NAN;
    assert!(matches!(run(p, &SolverConfig::new(Variant::FmHsdm, 0.5, 0.05, 10), &bad), Err(Error::NonFinite { index: 3 })));
}

#[test]
fn oversized_step_diverges() {
    let bench = gen_instance_seeded(ProblemKind::Hyperplane, D, 1.0, 11).unwrap();
    let p = &bench.native;
    let params = fmhsdm::solver::BaselineParams { fista_step: Some(5.0), ..Default::default() };
    let cfg = SolverConfig::new(Variant::Fista, 0.5, 1.0, 500).with_baseline(params);
    let r = run(p, &cfg, &seeded_initial_point(p, 12));
    assert!(matches!(r, Err(Error::Divergence { .. })));
}

#[test]
fn early_stop_ends_the_run() {
    let bench = gen_instance_seeded(ProblemKind::Hyperplane, D, 1.0, 13).unwrap();
    let p = &bench.native;
    let cfg = SolverConfig { early_stop: Some(1e-10), ..SolverConfig::new(Variant::FmHsdm, 0.5, 0.099, 100_000) };
    let tr = run(p, &cfg, &seeded_initial_point(p, 14)).unwrap();
    assert!(tr.stopped_early);
    assert!(tr.iterations() < 100_000);
    assert!(tr.records.last().unwrap().distance.unwrap() < 1e-8);
}
