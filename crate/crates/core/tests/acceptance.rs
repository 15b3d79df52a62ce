//! End-to-end acceptance checks. Each prints one `PASS`/`FAIL` line; the test
//! fails if any check fails.

use std::f64::consts::PI;
use std::fs;

use ricci_couple::cli::{cmd_couple, cmd_gradient, RunContext};
use ricci_couple::comparison::{jacobi_G, non_explosion_test, BFunction, ExplosionConfig, ExplosionVerdict};
use ricci_couple::coupling::CouplingMode;
use ricci_couple::geometry::{kappa_bound_excess, kappa_estimate, Point};
use ricci_couple::harness::{
    run_contraction_experiment, run_gradient_experiment, run_invariance_experiment, run_marginal_experiment,
    run_radial_experiment, run_tail_experiment, ExperimentConfig, Observable,
};
use ricci_couple::models::{build, crosscheck_closed_forms, probe_points, GenericFamily, ModelKind, ModelSpec};

/// `P(|N(0,1)| < 1/2)`.
const CHI_HALF: f64 = 0.382_924_922_548_026;
/// `2/√(2π)`.
const SIGN_SLOPE: f64 = 0.797_884_560_802_865_4;

fn report(results: &mut Vec<(usize, bool)>, n: usize, pass: bool, detail: String) {
    println!("{} criterion {n}: {detail}", if pass { "PASS" } else { "FAIL" });
    results.push((n, pass));
}

fn euclidean(m: usize) -> ModelSpec {
    ModelSpec::new(ModelKind::Euclidean, m, 0.0, 1.0)
}

fn sphere() -> ModelSpec {
    ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0)
}

fn flat_equality() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(euclidean(2));
    cfg.alphas = vec![0.02];
    cfg.trials = 20_000;
    let rep = run_tail_experiment(&cfg).unwrap();
    let row = &rep.rows[0];
    let slack = row.halfwidth + 0.02;
    (
        (row.tail - CHI_HALF).abs() <= slack,
        format!("tail {:.4} vs chi(0.5) = {CHI_HALF:.5} +/- {slack:.4}", row.tail),
    )
}

fn sphere_inequality() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(sphere());
    cfg.alphas = vec![0.02];
    cfg.trials = 10_000;
    cfg.start.a = PI / 2.0;
    cfg.report_times = vec![0.25, 0.5, 1.0];
    let rep = run_tail_experiment(&cfg).unwrap();
    let ok = rep.rows.iter().all(|r| r.tail <= r.bound + 3.0 * r.halfwidth);
    let detail = rep
        .rows
        .iter()
        .map(|r| format!("T={}: {:.4} <= {:.4}", r.t, r.tail, r.bound))
        .collect::<Vec<_>>()
        .join(", ");
    (ok && rep.rows.len() == 3, detail)
}

fn gradient_equality() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(euclidean(1));
    cfg.alphas = vec![0.02];
    cfg.trials = 20_000;
    cfg.observable = Some(Observable::Sign { axis: 0 });
    cfg.gradient.spacings = vec![0.05];
    cfg.gradient.direct_trials = Some(2_000);
    let rep = run_gradient_experiment(&cfg).unwrap();
    let row = &rep.rows[0];
    let ok = (row.coupled_quotient - SIGN_SLOPE).abs() <= 3.0 * row.coupled_se && (row.bound - SIGN_SLOPE).abs() < 1e-12;
    (
        ok,
        format!(
            "quotient {:.4} +/- {:.4} at h = 0.05, bound {:.5}",
            row.coupled_quotient, row.coupled_se, row.bound
        ),
    )
}

fn contraction() -> (bool, String) {
    let mut flat = ExperimentConfig::new(euclidean(2));
    flat.coupling.kind = CouplingMode::Parallel;
    flat.alphas = vec![0.04, 0.02];
    flat.trials = 2_000;
    let f = run_contraction_experiment(&flat).unwrap();
    let flat_max = f.rows.iter().map(|r| r.path_max).fold(0.0, f64::max);
    let flat_ok = flat_max <= 1e-12 && f.rows.iter().all(|r| r.exact);

    let mut s = ExperimentConfig::new(sphere());
    s.coupling.kind = CouplingMode::Parallel;
    s.alphas = vec![0.04, 0.02];
    s.trials = 2_000;
    s.start.a = 0.1;
    let rep = run_contraction_experiment(&s).unwrap();
    let ratio = rep.rows[0].path_p99 / rep.rows[1].path_p99;
    let sphere_ok = (1.5..=3.0).contains(&ratio);
    (
        flat_ok && sphere_ok,
        format!("euclidean max increase {flat_max:.1e}; sphere p99 increase ratio {ratio:.3} (alpha 0.04 -> 0.02)"),
    )
}

fn invariance() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(euclidean(2));
    cfg.alphas = vec![0.2, 0.05];
    cfg.trials = 10_000;
    let rep = run_invariance_experiment(&cfg).unwrap();
    let (coarse, fine) = (rep.rows[0].ks_max, rep.rows[1].ks_max);
    (
        fine < 0.02 && fine < coarse,
        format!("max KS {fine:.4} at alpha 0.05, {coarse:.4} at alpha 0.2"),
    )
}

fn marginals() -> (bool, String) {
    let mut worst = Vec::new();
    let mut ok = true;
    for spec in [euclidean(2), sphere()] {
        let mut cfg = ExperimentConfig::new(spec);
        cfg.alphas = vec![0.1];
        cfg.trials = 10_000;
        let rep = run_marginal_experiment(&cfg).unwrap();
        let max = rep.rows.iter().map(|r| r.ks).fold(0.0, f64::max);
        ok &= rep.rows.iter().all(|r| r.ks < 0.02);
        worst.push(format!("{} max KS {max:.4}", rep.model));
    }
    (ok, worst.join(", "))
}

fn geometry_oracles() -> (bool, String) {
    let specs = [
        euclidean(2),
        sphere(),
        ModelSpec::new(ModelKind::SphereStatic, 3, 0.0, 1.0).with_param("c0", 2.0),
        ModelSpec::new(ModelKind::HyperbolicScaled, 2, 0.0, 0.5).with_param("c0", 1.0),
        ModelSpec::new(ModelKind::HyperbolicScaled, 3, 0.0, 0.5).with_param("c0", 2.0).with_param("k", 0.5),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let rep = crosscheck_closed_forms(&build(spec).unwrap(), 100, 7).unwrap();
        ok &= rep.passes();
        worst = worst.max(rep.exp).max(rep.distance).max(rep.transport).max(rep.ricci).max(rep.christoffel);
    }
    // G along a geodesic from the chart origin: u, r sin(u/r), sinh(u)
    let r: f64 = 2.0;
    type Case = (ModelSpec, Vec<f64>, Box<dyn Fn(f64) -> f64>);
    let jacobi: [Case; 3] = [
        (euclidean(2), vec![1.0, 1.5], Box::new(|u| u)),
        (
            ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0).with_param("c0", r * r),
            vec![0.7, 0.2],
            Box::new(move |u| r * (u / r).sin()),
        ),
        (
            ModelSpec::new(ModelKind::HyperbolicScaled, 2, 0.0, 0.5).with_param("c0", 1.0),
            vec![0.6, -0.2],
            Box::new(f64::sinh),
        ),
    ];
    let mut jac_err: f64 = 0.0;
    for (spec, y, exact) in &jacobi {
        let man = build(spec).unwrap();
        let x = Point::from_slice(0, &[0.0, 0.0]);
        let geo = man.minimal_geodesic(0.0, &x, &Point::from_slice(0, y)).unwrap();
        let table = jacobi_G(&man, 0.0, &geo).unwrap();
        for (u, g) in table.u.iter().zip(&table.g) {
            jac_err = jac_err.max((g - exact(*u)).abs());
        }
    }
    ok &= jac_err < 1e-6;
    (
        ok,
        format!("largest closed-form vs numeric gap {worst:.1e} over {} models; Jacobi error {jac_err:.1e}", specs.len()),
    )
}

fn kappa() -> (bool, String) {
    let spec = ModelSpec::new(ModelKind::ChartGeneric, 2, 0.0, 1.0).with_generic(GenericFamily::ExpScaled {
        lambda: 0.7,
        g0: vec![1.0, 3.0],
    });
    let man = build(&spec).unwrap();
    let region = probe_points(&man, 100, 3);
    let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let k = kappa_estimate(&man, &region, &times).unwrap();
    let excess = kappa_bound_excess(&man, &region, &times, k).unwrap();
    (
        (k - 0.7).abs() <= 1e-6 && excess <= 1e-9,
        format!("kappa {k:.8}, two-sided bound excess {excess:.1e} over 100 probes"),
    )
}

fn explosion() -> (bool, String) {
    let cfg = ExplosionConfig::default();
    let cases = [
        (BFunction::Zero, 0.0, ExplosionVerdict::NonExplosive),
        (BFunction::Zero, 1.0, ExplosionVerdict::NonExplosive),
        (BFunction::Power { coef: 3.0, exponent: 2.0 }, 0.0, ExplosionVerdict::Explosive),
    ];
    let mut ok = true;
    let mut out = Vec::new();
    for (b, c, expect) in cases {
        let rep = non_explosion_test(&b, c, &cfg).unwrap();
        ok &= rep.verdict == expect && rep.stable;
        out.push(format!("{:?}", rep.verdict));
    }
    (ok, format!("verdicts {}", out.join(", ")))
}

fn radial() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(euclidean(2));
    cfg.alphas = vec![0.05, 0.02];
    cfg.trials = 1_000;
    let rep = run_radial_experiment(&cfg).unwrap();
    let (coarse, fine) = (rep.rows[0].exceedance_frequency, rep.rows[1].exceedance_frequency);
    (
        fine < 0.01 && fine <= coarse,
        format!("exceedance frequency {coarse:.5} at alpha 0.05, {fine:.5} at alpha 0.02"),
    )
}

fn csv_bodies(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let body = fs::read_to_string(&p)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n");
            (p.file_name().unwrap().to_string_lossy().into_owned(), body)
        })
        .collect()
}

fn determinism() -> (bool, String) {
    let mut tail = ExperimentConfig::new(sphere());
    tail.alphas = vec![0.1, 0.05];
    tail.trials = 400;
    tail.report_times = vec![0.5, 1.0];
    let mut grad = ExperimentConfig::new(euclidean(1));
    grad.alphas = vec![0.1];
    grad.trials = 400;
    grad.observable = Some(Observable::Sign { axis: 0 });
    let mut runs = Vec::new();
    for workers in [1, 4] {
        let dir = tempfile::tempdir().unwrap();
        let ctx = RunContext {
            out: dir.path().to_path_buf(),
            config_hash: "h".into(),
            strict: false,
        };
        tail.workers = Some(workers);
        grad.workers = Some(workers);
        cmd_couple(&tail, &ctx).unwrap();
        cmd_gradient(&grad, &ctx).unwrap();
        runs.push(csv_bodies(dir.path()));
    }
    let same = runs[0] == runs[1] && runs[0].len() == 2;
    (same, format!("{} CSV tables byte-identical at 1 and 4 workers", runs[0].len()))
}

#[test]
fn acceptance() {
    type Check = fn() -> (bool, String);
    let checks: [(usize, Check); 11] = [
        (1, flat_equality),
        (2, sphere_inequality),
        (3, gradient_equality),
        (4, contraction),
        (5, invariance),
        (6, marginals),
        (7, geometry_oracles),
        (8, kappa),
        (9, explosion),
        (10, radial),
        (11, determinism),
    ];
    let mut results = Vec::new();
    for (n, check) in checks {
        let (pass, detail) = check();
        report(&mut results, n, pass, detail);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
