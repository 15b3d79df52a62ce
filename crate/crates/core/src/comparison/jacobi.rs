use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Geodesic, Point, TangentVector, TimeDependentManifold};

/// `G(u)`, `G'(u)` on a uniform grid of `[0, length]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiTable {
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// First `u > 0` where `G` reaches 0, if any: a conjugate point before the end.
    pub conjugate_point: Option<f64>,
}

impl JacobiTable {
    /// Linear interpolation of `G`.
    pub fn eval(&self, u: f64) -> f64 {
        let i = self.u.partition_point(|x| *x < u).clamp(1, self.u.len() - 1);
        let (u0, u1) = (self.u[i - 1], self.u[i]);
        let w = if u1 > u0 { (u - u0) / (u1 - u0) } else { 0.0 };
        self.g[i - 1] * (1.0 - w) + self.g[i] * w
    }
}

/// Solve `G'' = −(Ric(γ̇, γ̇)/(m−1)) G`, `G(0) = 0`, `G'(0) = 1` along `geo`.
///
/// The geodesic is re-integrated in the chart of its start together with `G`,
/// so the curvature is sampled at every RK4 stage. For `m = 1`, `G(u) = u`.
#[allow(non_snake_case)]
pub fn jacobi_G(man: &TimeDependentManifold, t: f64, geo: &Geodesic) -> Result<JacobiTable> {
    let m = man.dim();
    let len = geo.length;
    let n = ((len / 5e-3).ceil() as usize).max(200);
    let h = len / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| h * i as f64).collect();
    if m == 1 {
        return Ok(JacobiTable {
            g: grid.clone(),
            dg: vec![1.0; n + 1],
            u: grid,
            conjugate_point: None,
        });
    }
    let chart = geo.start.chart;
    let v0 = if geo.start_velocity.base.chart == chart {
        geo.start_velocity.components.clone()
    } else {
        man.model()
            .vector_to_chart(&geo.start_velocity, chart)
            .ok_or_else(|| Error::Domain("start velocity not representable".into()))?
            .components
    };
    let m1 = m as f64 - 1.0;
    // state: (x, ẋ, G, G')
    let rhs = |x: &DVector<f64>, v: &DVector<f64>, g: f64, dg: f64| -> Result<(DVector<f64>, DVector<f64>, f64, f64)> {
        let p = Point::new(chart, x.clone());
        let gamma = man.christoffel(t, &p)?;
        let vel = TangentVector::new(p, v.clone());
        let ric = man.ricci(t, &vel, &vel)?;
        Ok((v.clone(), -gamma.contract(v, v), dg, -ric / m1 * g))
    };
    let mut x = geo.start.coords.clone();
    let mut v = v0;
    let (mut g, mut dg) = (0.0, 1.0);
    let mut gs = vec![g];
    let mut dgs = vec![dg];
    let mut conjugate_point = None;
    for &u in grid.iter().take(n) {
        let (k1x, k1v, k1g, k1d) = rhs(&x, &v, g, dg)?;
        let (k2x, k2v, k2g, k2d) = rhs(&(&x + &k1x * (h / 2.0)), &(&v + &k1v * (h / 2.0)), g + k1g * h / 2.0, dg + k1d * h / 2.0)?;
        let (k3x, k3v, k3g, k3d) = rhs(&(&x + &k2x * (h / 2.0)), &(&v + &k2v * (h / 2.0)), g + k2g * h / 2.0, dg + k2d * h / 2.0)?;
        let (k4x, k4v, k4g, k4d) = rhs(&(&x + &k3x * h), &(&v + &k3v * h), g + k3g * h, dg + k3d * h)?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        let g_next = g + (k1g + 2.0 * k2g + 2.0 * k3g + k4g) * h / 6.0;
        dg += (k1d + 2.0 * k2d + 2.0 * k3d + k4d) * h / 6.0;
        if conjugate_point.is_none() && g_next <= 0.0 && g > 0.0 {
            conjugate_point = Some(u + h * g / (g - g_next));
        }
        g = g_next;
        gs.push(g);
        dgs.push(dg);
    }
    Ok(JacobiTable {
        u: grid,
        g: gs,
        dg: dgs,
        conjugate_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, ModelKind, ModelSpec};

    fn table(spec: ModelSpec, y: &[f64]) -> JacobiTable {
        let man = build(&spec).unwrap();
        let x = Point::from_slice(0, &vec![0.0; y.len()]);
        let geo = man.minimal_geodesic(0.0, &x, &Point::from_slice(0, y)).unwrap();
        jacobi_G(&man, 0.0, &geo).unwrap()
    }

    fn max_err(t: &JacobiTable, exact: impl Fn(f64) -> f64) -> f64 {
        t.u.iter().zip(&t.g).map(|(u, g)| (g - exact(*u)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn flat_is_linear() {
        let t = table(ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0), &[1.0, 2.0]);
        assert!(max_err(&t, |u| u) < 1e-12);
        assert!(t.conjugate_point.is_none());
    }

    #[test]
    fn sphere_is_sine() {
        // radius 2; chart point 0.6 is at angle 2·atan(0.6) ≈ 1.08, arclength ≈ 2.16
        let r: f64 = 2.0;
        let t = table(ModelSpec::new(ModelKind::SphereStatic, 3, 0.0, 1.0).with_param("c0", r * r), &[0.6, 0.0, 0.0]);
        assert!(max_err(&t, |u| r * (u / r).sin()) < 1e-6);
    }

    #[test]
    fn hyperbolic_is_sinh() {
        let t = table(ModelSpec::new(ModelKind::HyperbolicScaled, 2, 0.0, 0.5).with_param("c0", 1.0), &[0.5, 0.3]);
        assert!(max_err(&t, f64::sinh) < 1e-6);
    }

    #[test]
    fn conjugate_point_past_half_circle() {
        // geodesic from the north pole almost to the south pole: G = sin u vanishes at π only
        let t = table(ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0).with_param("c0", 1.0), &[50.0, 0.0]);
        assert!(t.conjugate_point.is_none());
        assert!(t.g.last().unwrap().abs() < 0.05);
    }
}
