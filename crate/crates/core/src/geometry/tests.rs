use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;
use crate::models::{build, GenericFamily, ModelKind, ModelSpec};

fn v(x: &Point, c: &[f64]) -> TangentVector {
    TangentVector::new(x.clone(), DVector::from_column_slice(c))
}

fn p(c: &[f64]) -> Point {
    Point::from_slice(0, c)
}

fn plane() -> TimeDependentManifold {
    build(&ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0)).unwrap()
}

fn sphere_static(m: usize, c0: f64) -> TimeDependentManifold {
    build(&ModelSpec::new(ModelKind::SphereStatic, m, 0.0, 1.0).with_param("c0", c0)).unwrap()
}

fn exp_scaled(lambda: f64, g0: Vec<f64>) -> TimeDependentManifold {
    let m = g0.len();
    build(&ModelSpec::new(ModelKind::ChartGeneric, m, 0.0, 1.0).with_generic(GenericFamily::ExpScaled { lambda, g0 })).unwrap()
}

fn polar() -> TimeDependentManifold {
    build(&ModelSpec::new(ModelKind::ChartGeneric, 2, 0.0, 1.0).with_generic(GenericFamily::PolarFlat)).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn euclidean_metric_is_identity_and_static() {
    let man = plane();
    let s = man.metric_at(0.3, &p(&[1.0, -2.0])).unwrap();
    assert_eq!(s.g, DMatrix::identity(2, 2));
    assert_eq!(s.dgdt, DMatrix::zeros(2, 2));
}

#[test]
fn exp_scaled_metric_and_time_derivative() {
    let man = exp_scaled(0.5, vec![2.0, 3.0]);
    let s = man.metric_at(0.0, &p(&[0.1, 0.2])).unwrap();
    let g0 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
    assert!((s.g - &g0).amax() < 1e-14);
    assert!((s.dgdt - &g0).amax() < 1e-8);
}

#[test]
fn backward_ricci_sphere_dgdt_is_ricci() {
    let m = 3;
    let man = build(&ModelSpec::new(ModelKind::SphereBackwardRicci, m, 0.0, 1.0).with_param("c0", 1.5)).unwrap();
    let x = p(&[0.3, -0.2, 0.1]);
    let s = man.metric_at(0.4, &x).unwrap();
    let r2: f64 = x.coords.norm_squared();
    let unit = 4.0 / (1.0 + r2).powi(2);
    for i in 0..m {
        assert!(close(s.dgdt[(i, i)], (m as f64 - 1.0) * unit, 1e-10));
    }
    // ∂t g = Ric for every direction
    let u = v(&x, &[0.2, 0.7, -0.4]);
    let ric = man.ricci(0.4, &u, &u).unwrap();
    let dg = u.components.dot(&(&s.dgdt * &u.components));
    assert!(close(ric, dg, 1e-10));
}

#[test]
fn christoffel_examples() {
    let man = plane();
    let g = man.christoffel(0.0, &p(&[0.4, 0.1])).unwrap();
    assert_eq!(g.max_abs_diff(&Christoffel::zeros(2)), 0.0);
    let pol = polar();
    let g = pol.christoffel(0.0, &p(&[2.0, 0.3])).unwrap();
    assert!(close(g.get(0, 1, 1), -2.0, 1e-6));
    assert!(close(g.get(1, 0, 1), 0.5, 1e-6));
    assert!(close(g.get(1, 1, 0), 0.5, 1e-6));
}

#[test]
fn exp_map_examples() {
    let man = plane();
    let x = p(&[1.0, 2.0]);
    assert_eq!(man.exp_map(0.0, &v(&x, &[0.0, 0.0])).unwrap(), x);
    let y = man.exp_map(0.0, &v(&x, &[0.3, -0.1])).unwrap();
    assert!((y.coords - DVector::from_vec(vec![1.3, 1.9])).amax() < 1e-15);
    // unit 2-sphere: a quarter great circle from the north pole lands on the equator
    let s = sphere_static(2, 1.0);
    let o = p(&[0.0, 0.0]);
    let dir = [0.6, 0.8];
    // unit speed at the pole of the stereographic chart has coordinate length 1/2
    let w = v(&o, &[0.5 * dir[0] * FRAC_PI_2, 0.5 * dir[1] * FRAC_PI_2]);
    assert!(close(s.norm(0.0, &w).unwrap(), FRAC_PI_2, 1e-14));
    let e = s.embed(&s.exp_map(0.0, &w).unwrap()).unwrap();
    assert!(close(e[2], 0.0, 1e-12));
    assert!(close(e[0], dir[0], 1e-12) && close(e[1], dir[1], 1e-12));
}

#[test]
fn numeric_exp_agrees_with_closed_form() {
    let s = sphere_static(2, 1.0);
    let x = p(&[0.2, -0.1]);
    let w = v(&x, &[0.3, 0.25]);
    let a = s.exp_map(0.0, &w).unwrap();
    let b = s.numeric().exp_map(0.0, &w).unwrap();
    let b = s.same_chart(&b, a.chart).unwrap();
    assert!((a.coords - b.coords).amax() < 1e-5);
}

#[test]
fn transport_examples() {
    let man = plane();
    let geo = man.minimal_geodesic(0.0, &p(&[0.0, 0.0]), &p(&[1.0, 1.0])).unwrap();
    let w = v(&geo.start, &[0.3, -2.0]);
    assert_eq!(man.parallel_transport(0.0, &geo, &w).unwrap().components, w.components);
    // quarter meridian on the unit sphere: the transverse unit vector keeps its direction
    let s = sphere_static(2, 1.0);
    let o = p(&[0.0, 0.0]);
    let eq = p(&[1.0, 0.0]);
    let geo = s.minimal_geodesic(0.0, &o, &eq).unwrap();
    assert!(close(geo.length, FRAC_PI_2, 1e-12));
    let e2 = v(&o, &[0.0, 0.5]);
    let moved = s.parallel_transport(0.0, &geo, &e2).unwrap();
    let moved = s.model().vector_to_chart(&moved, 0).unwrap();
    assert!((moved.components - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-10);
    // the tangent is transported to the end velocity
    let t0 = s.parallel_transport(0.0, &geo, &geo.start_velocity).unwrap();
    let t0 = s.model().vector_to_chart(&t0, geo.end_velocity.base.chart).unwrap();
    assert!((t0.components - &geo.end_velocity.components).amax() < 1e-10);
    // and the numeric route agrees
    let n = s.numeric().parallel_transport(0.0, &geo, &e2).unwrap();
    let n = s.model().vector_to_chart(&n, 0).unwrap();
    assert!((n.components - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-5);
}

#[test]
fn minimal_geodesic_examples() {
    let man = plane();
    let geo = man.minimal_geodesic(0.0, &p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap();
    assert!(close(geo.length, 5.0, 1e-14));
    assert!((geo.start_velocity.components.clone() - DVector::from_vec(vec![0.6, 0.8])).amax() < 1e-14);
    // sphere of radius 2: polar angle θ is |u| = tan(θ/2) in the chart
    let s = sphere_static(2, 4.0);
    for theta in [0.3, 1.0, 2.5] {
        let y = p(&[(theta / 2.0f64).tan(), 0.0]);
        assert!(close(s.distance(0.0, &p(&[0.0, 0.0]), &y).unwrap(), 2.0 * theta, 1e-10));
    }
    // constant conformal factor c: lengths scale by √c along the same trace
    let c = exp_scaled(0.35, vec![1.0, 1.0]);
    let t: f64 = 0.8;
    let scale = (0.35 * t).exp();
    let (x, y) = (p(&[0.1, 0.2]), p(&[0.7, -0.3]));
    let geo = c.minimal_geodesic(t, &x, &y).unwrap();
    let flat = (y.coords.clone() - x.coords.clone()).norm();
    assert!(close(geo.length, scale * flat, 1e-6));
    for smp in &geo.samples {
        let along = (smp.point.coords.clone() - x.coords.clone()).norm() + (y.coords.clone() - smp.point.coords.clone()).norm();
        assert!(close(along, flat, 1e-6));
    }
}

#[test]
fn distance_is_symmetric_and_zero_on_diagonal() {
    let s = sphere_static(3, 1.0);
    let (x, y) = (p(&[0.1, 0.2, -0.3]), p(&[-0.5, 0.4, 0.2]));
    assert_eq!(s.distance(0.0, &x, &x).unwrap(), 0.0);
    assert!(close(s.distance(0.0, &x, &y).unwrap(), s.distance(0.0, &y, &x).unwrap(), 1e-13));
}

#[test]
fn ricci_examples() {
    let man = plane();
    let x = p(&[0.0, 1.0]);
    assert_eq!(man.ricci(0.0, &v(&x, &[1.0, 0.0]), &v(&x, &[1.0, 0.0])).unwrap(), 0.0);
    let (m, r) = (3, 1.7);
    let s = sphere_static(m, r * r);
    let x = p(&[0.2, 0.1, -0.3]);
    let u = s.orthonormal_frame(0.0, &x).unwrap().vectors()[1].clone();
    let expect = (m as f64 - 1.0) / (r * r);
    assert!(close(s.ricci(0.0, &u, &u).unwrap(), expect, 1e-12));
    assert!(close(s.numeric().ricci(0.0, &u, &u).unwrap(), expect, 1e-5));
    let h = build(&ModelSpec::new(ModelKind::HyperbolicScaled, m, 0.0, 0.25).with_param("c0", 1.0).with_param("k", 0.0)).unwrap();
    let u = h.orthonormal_frame(0.0, &x).unwrap().vectors()[0].clone();
    assert!(close(h.ricci(0.0, &u, &u).unwrap(), -(m as f64 - 1.0), 1e-12));
    assert!(close(h.numeric().ricci(0.0, &u, &u).unwrap(), -(m as f64 - 1.0), 1e-5));
}

#[test]
fn orthonormal_frame_examples() {
    let man = plane();
    let f = man.orthonormal_frame(0.0, &p(&[3.0, 1.0])).unwrap();
    assert_eq!(f.columns, DMatrix::identity(2, 2));
    let c = exp_scaled(0.0, vec![4.0, 4.0]);
    let f = c.orthonormal_frame(0.0, &p(&[0.0, 0.0])).unwrap();
    assert!((f.columns - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
    let s = sphere_static(3, 2.0);
    let x = p(&[0.4, -0.6, 0.2]);
    let f = s.orthonormal_frame(0.0, &x).unwrap();
    let g = s.metric_matrix(0.0, &x).unwrap();
    let gram = f.columns.transpose() * g * &f.columns;
    assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
}

#[test]
fn kappa_examples() {
    let region: Vec<Point> = (0..5).map(|i| p(&[0.1 * i as f64, -0.05 * i as f64])).collect();
    let times = [0.0, 0.25, 0.5, 1.0];
    assert_eq!(kappa_estimate(&sphere_static(2, 1.0), &region, &times).unwrap(), 0.0);
    let c = exp_scaled(0.7, vec![1.0, 2.0]);
    assert!(close(kappa_estimate(&c, &region, &times).unwrap(), 0.7, 1e-6));
    let (m, c0) = (3, 2.0);
    let s = build(&ModelSpec::new(ModelKind::SphereBackwardRicci, m, 0.0, 1.0).with_param("c0", c0)).unwrap();
    let region: Vec<Point> = (0..4).map(|i| p(&[0.1 * i as f64, 0.0, 0.2])).collect();
    let k = kappa_estimate(&s, &region, &times).unwrap();
    assert!(close(k, (m as f64 - 1.0) / (2.0 * c0), 1e-9));
}

#[test]
fn kappa_certifies_two_sided_bound() {
    let c = exp_scaled(0.7, vec![1.0, 2.0]);
    let region: Vec<Point> = (0..4).map(|i| p(&[0.2 * i as f64, 0.1])).collect();
    let times = [0.0, 0.3, 0.6, 1.0];
    let k = kappa_estimate(&c, &region, &times).unwrap();
    assert!(kappa_bound_excess(&c, &region, &times, k).unwrap() <= 1e-12);
    assert!(kappa_bound_excess(&c, &region, &times, 0.9 * k).unwrap() > 0.0);
    let w = DVector::from_vec(vec![0.3, -1.1]);
    for x in &region {
        for &s in &times {
            for &t in &times {
                let gs = w.dot(&(c.metric_matrix(s, x).unwrap() * &w));
                let gt = w.dot(&(c.metric_matrix(t, x).unwrap() * &w));
                let f = (2.0 * k * (t - s).abs()).exp() * (1.0 + 1e-9);
                assert!(gt <= f * gs && gs <= f * gt);
            }
        }
    }
}

#[test]
fn reversed_geodesic_matches_swapped_endpoints() {
    let s = sphere_static(2, 1.0);
    let (x, y) = (p(&[0.3, -0.4]), p(&[-0.2, 0.5]));
    let a = s.minimal_geodesic(0.0, &x, &y).unwrap().reversed();
    let b = s.minimal_geodesic(0.0, &y, &x).unwrap();
    assert!(close(a.length, b.length, 1e-12));
    let va = s.model().vector_to_chart(&a.start_velocity, b.start_velocity.base.chart).unwrap();
    assert!((va.components - &b.start_velocity.components).amax() < 1e-9);
    let pol = polar();
    let (x, y) = (p(&[1.0, 0.2]), p(&[1.5, 0.9]));
    let a = pol.minimal_geodesic(0.0, &x, &y).unwrap().reversed();
    let b = pol.minimal_geodesic(0.0, &y, &x).unwrap();
    assert!(close(a.length, b.length, 1e-8));
    assert!((a.start_velocity.components - &b.start_velocity.components).amax() < 1e-6);
}

#[test]
fn geodesics_are_unit_speed() {
    let pol = polar();
    let geo = pol.minimal_geodesic(0.0, &p(&[1.0, 0.0]), &p(&[1.2, 1.3])).unwrap();
    for s in &geo.samples {
        assert!(close(pol.norm(0.0, &s.velocity).unwrap(), 1.0, 1e-6));
    }
    assert!(close(geo.samples.last().unwrap().u, geo.length, 1e-12));
}

#[test]
fn point_outside_chart_is_a_domain_error() {
    let h = build(&ModelSpec::new(ModelKind::HyperbolicScaled, 2, 0.0, 1.0)).unwrap();
    assert!(matches!(h.metric_at(0.0, &p(&[1.2, 0.0])), Err(Error::Domain(_))));
    assert!(matches!(plane().metric_at(0.0, &p(&[1.0])), Err(Error::Domain(_))));
}

#[test]
fn sphere_chart_switch_roundtrip() {
    let s = sphere_static(2, 1.0);
    let far = p(&[3.0, 1.0]);
    let moved = s.normalize_chart(far.clone());
    assert_ne!(moved.chart, far.chart);
    assert!(s.points_equal(&moved, &far));
    assert!(close(s.distance(0.0, &moved, &p(&[0.0, 0.0])).unwrap(), s.distance(0.0, &far, &p(&[0.0, 0.0])).unwrap(), 1e-12));
    assert!(PI > s.distance(0.0, &far, &p(&[0.0, 0.0])).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_then_distance_recovers_length(
        x0 in -0.8f64..0.8, x1 in -0.8f64..0.8, x2 in -0.8f64..0.8,
        w0 in -1.0f64..1.0, w1 in -1.0f64..1.0, w2 in -1.0f64..1.0,
        len in 0.01f64..0.3, t in 0.0f64..1.0,
    ) {
        let man = build(&ModelSpec::new(ModelKind::SphereBackwardRicci, 3, 0.0, 1.0).with_param("c0", 1.0)).unwrap();
        let x = p(&[x0, x1, x2]);
        let w = DVector::from_vec(vec![w0, w1, w2]);
        prop_assume!(w.norm() > 1e-3);
        let u = TangentVector::new(x.clone(), w);
        let n = man.norm(t, &u).unwrap();
        let u = u.scaled(len / n);
        let y = man.exp_map(t, &u).unwrap();
        prop_assert!((man.distance(t, &x, &y).unwrap() - len).abs() < 1e-12);
    }

    #[test]
    fn transport_is_an_isometry(
        y0 in -0.8f64..0.8, y1 in -0.8f64..0.8,
        a0 in -1.0f64..1.0, a1 in -1.0f64..1.0, b0 in -1.0f64..1.0, b1 in -1.0f64..1.0,
    ) {
        let man = build(&ModelSpec::new(ModelKind::HyperbolicScaled, 2, 0.0, 0.5).with_param("c0", 1.0)).unwrap();
        let x = p(&[0.1, -0.2]);
        let y = p(&[y0, y1]);
        prop_assume!(y.coords.norm() < 0.95 && (y.coords.clone() - x.coords.clone()).norm() > 1e-3);
        let geo = man.minimal_geodesic(0.25, &x, &y).unwrap();
        let (a, b) = (v(&x, &[a0, a1]), v(&x, &[b0, b1]));
        let (ta, tb) = (man.parallel_transport(0.25, &geo, &a).unwrap(), man.parallel_transport(0.25, &geo, &b).unwrap());
        prop_assert!((man.inner(0.25, &a, &b).unwrap() - man.inner(0.25, &ta, &tb).unwrap()).abs() < 1e-8);
        prop_assert!((man.norm(0.25, &a).unwrap() - man.norm(0.25, &ta).unwrap()).abs() < 1e-8);
    }
}
