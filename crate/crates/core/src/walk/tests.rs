use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;
use crate::geometry::{Horizon, Point};
use crate::models::{build, DriftSpec, ModelKind, ModelSpec};
use crate::rng::{stream, tags};

fn plane(m: usize) -> TimeDependentManifold {
    build(&ModelSpec::new(ModelKind::Euclidean, m, 0.0, 1.0)).unwrap()
}

fn sphere() -> TimeDependentManifold {
    build(&ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0)).unwrap()
}

#[test]
fn grid_arithmetic() {
    let g = StepGrid::new(0.1, Horizon::new(0.0, 1.0).unwrap()).unwrap();
    assert_eq!(g.n_steps, 100);
    assert_eq!(g.time(0), 0.0);
    assert_eq!(g.time(100), 1.0);
    assert!((g.time(50) - 0.5).abs() < 1e-12);
    assert!((g.fraction(99) - 1.0).abs() < 1e-12);
    let h = StepGrid::new(0.05, Horizon::new(0.0, 1.0).unwrap()).unwrap();
    assert_eq!(h.n_steps, 4 * g.n_steps);
    // a short last step
    let s = StepGrid::new(0.3, Horizon::new(1.0, 2.0).unwrap()).unwrap();
    assert_eq!(s.n_steps, 12);
    assert_eq!(s.time(12), 2.0);
    assert!((s.fraction(11) - (1.0 - 11.0 * 0.09) / 0.09).abs() < 1e-12);
    assert!(StepGrid::new(0.0, Horizon::new(0.0, 1.0).unwrap()).is_err());
}

#[test]
fn uniform_ball_moments() {
    let mut rng = stream(1, tags::WALK, 0);
    let n = 100_000;
    let mut var = 0.0;
    for _ in 0..n {
        let d = draw_uniform_ball(&mut rng, 1);
        assert!(d.xi[0].abs() <= 1.0);
        var += d.xi[0] * d.xi[0];
    }
    var /= n as f64;
    // Var U[−1, 1] = 1/3, standard error ≈ 0.0009
    assert!((var - 1.0 / 3.0).abs() < 0.003, "{var}");

    let m = 3;
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for _ in 0..n {
        let d = draw_uniform_ball(&mut rng, m);
        assert!(d.xi.norm() <= 1.0);
        let s = &d.xi * ((m + 2) as f64).sqrt();
        cov += &s * s.transpose();
    }
    cov /= n as f64;
    // entries of (m+2) ξξᵀ have variance below 2 here, so 3σ < 0.014
    assert!((cov - DMatrix::identity(m, m)).amax() < 0.015);
}

#[test]
fn draws_are_reproducible() {
    let a: Vec<_> = (0..10).map(|_| ()).scan(stream(7, tags::WALK, 3), |r, _| Some(draw_uniform_ball(r, 2))).collect();
    let b: Vec<_> = (0..10).map(|_| ()).scan(stream(7, tags::WALK, 3), |r, _| Some(draw_uniform_ball(r, 2))).collect();
    assert_eq!(a, b);
}

#[test]
fn step_examples() {
    let man = plane(2);
    let x = Point::from_slice(0, &[0.5, -1.0]);
    assert_eq!(walk_step(&man, 0.0, &x, 0.1, &NoiseDraw::zero(2)).unwrap(), x);
    let draw = NoiseDraw { xi: DVector::from_vec(vec![0.3, 0.4]) };
    let y = walk_step(&man, 0.0, &x, 0.1, &draw).unwrap();
    let expect = &x.coords + &draw.xi * (0.1 * 2.0);
    assert!((y.coords - expect).amax() < 1e-15);
}

#[test]
fn drift_enters_at_order_alpha_squared() {
    let man = build(&ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0).with_drift(DriftSpec::Confining { lambda: 2.0, center: None })).unwrap();
    let x = Point::from_slice(0, &[1.0, 0.0]);
    let y = walk_step(&man, 0.0, &x, 0.1, &NoiseDraw::zero(2)).unwrap();
    assert!((y.coords[0] - (1.0 - 0.01 * 2.0)).abs() < 1e-15);
}

#[test]
fn mean_square_step_is_m_alpha_squared() {
    let man = plane(2);
    let x = Point::from_slice(0, &[0.0, 0.0]);
    let alpha = 0.1;
    let mut rng = stream(11, tags::WALK, 0);
    let n = 100_000;
    let sq: Vec<f64> = (0..n)
        .map(|_| {
            let d = draw_uniform_ball(&mut rng, 2);
            walk_step(&man, 0.0, &x, alpha, &d).unwrap().coords.norm_squared()
        })
        .collect();
    let mean = sq.iter().sum::<f64>() / n as f64;
    let sd = (sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt();
    assert!((mean - 2.0 * alpha * alpha).abs() < 3.0 * sd, "{mean} ± {sd}");
}

#[test]
fn simulate_is_deterministic_and_complete() {
    let man = sphere();
    let x0 = man.base_point().clone();
    let a = simulate(&man, &x0, 0.1, &mut stream(5, tags::WALK, 1)).unwrap();
    let b = simulate(&man, &x0, 0.1, &mut stream(5, tags::WALK, 1)).unwrap();
    assert_eq!(a, b);
    assert!(a.is_complete());
    assert_eq!(a.points.len(), 101);
    assert_eq!(a.draws.len(), 100);
    let c = simulate(&man, &x0, 0.1, &mut stream(5, tags::WALK, 2)).unwrap();
    assert_ne!(a.terminal(), c.terminal());
}

#[test]
fn walker_matches_simulate() {
    let man = sphere();
    let x0 = man.base_point().clone();
    let path = simulate(&man, &x0, 0.2, &mut stream(9, tags::WALK, 0)).unwrap();
    let mut w = Walker::new(&man, x0, 0.2).unwrap();
    let end = w.run_to_end(&mut stream(9, tags::WALK, 0)).unwrap();
    assert_eq!(&end, path.terminal());
}

#[test]
fn start_outside_domain_aborts() {
    let man = build(&ModelSpec::new(ModelKind::HyperbolicScaled, 2, 0.0, 1.0)).unwrap();
    let err = simulate(&man, &Point::from_slice(0, &[2.0, 0.0]), 0.1, &mut stream(0, tags::WALK, 0)).unwrap_err();
    assert_eq!(err.partial.points.len(), 1);
    assert!(matches!(err.error, Error::Domain(_)));
}

#[test]
fn interpolation_examples() {
    let man = plane(2);
    let x0 = Point::from_slice(0, &[0.0, 0.0]);
    let path = simulate(&man, &x0, 0.2, &mut stream(3, tags::WALK, 0)).unwrap();
    let g = path.grid;
    for n in [0, 5, g.n_steps] {
        assert_eq!(interpolate(&man, &path, g.time(n)).unwrap(), path.points[n]);
    }
    let mid = interpolate(&man, &path, 0.5 * (g.time(3) + g.time(4))).unwrap();
    let expect = (&path.points[3].coords + &path.points[4].coords) * 0.5;
    assert!((mid.coords - expect).amax() < 1e-14);
    let eps = 1e-10;
    let left = interpolate(&man, &path, g.time(6) - eps).unwrap();
    let right = interpolate(&man, &path, g.time(6) + eps).unwrap();
    assert!((left.coords - right.coords).amax() < 1e-8);
    assert!(interpolate(&man, &path, 1.5).is_err());
}

#[test]
fn radial_series_examples() {
    let man = plane(2);
    let o = man.base_point().clone();
    let path = simulate(&man, &o, 0.2, &mut stream(4, tags::WALK, 0)).unwrap();
    let r = radial_series(&man, &path).unwrap();
    assert_eq!(r[0].distance, 0.0);
    for (s, x) in r.iter().zip(&path.points) {
        assert!((s.distance - (&x.coords - &o.coords).norm()).abs() < 1e-14);
    }
    let s = sphere();
    let path = simulate(&s, s.base_point(), 0.1, &mut stream(4, tags::WALK, 1)).unwrap();
    for smp in radial_series(&s, &path).unwrap() {
        let c = 1.0 + smp.t;
        assert!(smp.distance >= 0.0 && smp.distance <= c.sqrt() * std::f64::consts::PI + 1e-12);
    }
}

#[test]
fn step_length_bound() {
    let s = sphere();
    let alpha = 0.1;
    let path = simulate(&s, s.base_point(), alpha, &mut stream(8, tags::WALK, 0)).unwrap();
    let bound = alpha * 2.0 + 1e-9;
    for n in 0..path.draws.len() {
        let t = path.grid.time(n);
        assert!(s.distance(t, &path.points[n], &path.points[n + 1]).unwrap() <= bound);
    }
}

#[test]
fn terminal_law_is_close_to_gaussian() {
    // 10⁴ trials: KS of X(1) − x0 against N(0, 1) is at the sampling-noise level for both α
    let man = plane(2);
    let x0 = man.base_point().clone();
    let ks = |alpha: f64| {
        let xs: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut rng = stream(21, tags::WALK, i);
                Walker::new(&man, x0.clone(), alpha).unwrap().run_to_end(&mut rng).unwrap().coords[0]
            })
            .collect();
        crate::harness::ks_normal(&xs, 0.0, 1.0)
    };
    let (coarse, fine) = (ks(0.2), ks(0.05));
    assert!(fine < 0.02, "{fine}");
    assert!(coarse < 0.02, "{coarse}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_ends_at_t2(alpha in 0.01f64..1.0, t1 in -2.0f64..2.0, len in 0.01f64..3.0) {
        let g = StepGrid::new(alpha, Horizon::new(t1, t1 + len).unwrap()).unwrap();
        prop_assert_eq!(g.time(0), t1);
        prop_assert_eq!(g.time(g.n_steps), t1 + len);
        for n in 0..g.n_steps {
            prop_assert!(g.time(n + 1) > g.time(n));
            prop_assert!(g.fraction(n) > 0.0 && g.fraction(n) <= 1.0);
        }
    }
}
