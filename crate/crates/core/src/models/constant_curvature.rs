//! Conformally flat constant-curvature models with closed-form geometry.
//!
//! `g(t) = σ(t) · w(x)² · δ` where `w` is the conformal factor of the unit
//! model in its chart (1 for flat space, `2/(1+|u|²)` for stereographic
//! coordinates on the sphere, `2/(1−|x|²)` on the Poincaré ball) and
//!
//! ```text
//! σ(t) = e^{−kΔ} · ( c0 + K (m−1) β_k(Δ) ),   Δ = t − T1,   β_k(Δ) = (e^{kΔ} − 1)/k
//! ```
//!
//! with `K ∈ {+1, 0, −1}` the sign of the curvature when the model flows and
//! `K = 0` when it is static. Since Ricci curvature is scale invariant,
//! `∂t g = −k g + Ric_{g(t)}` holds exactly for the flowing models.
//!
//! Closed forms are computed in the unit model's ambient space: `ℝ^m`,
//! the unit sphere in `ℝ^{m+1}` (height last), or the hyperboloid in
//! Minkowski space `ℝ^{m,1}` (time coordinate last).

use nalgebra::{DMatrix, DVector};

use crate::comparison::beta;
use crate::error::{Error, Result};
use crate::geometry::{Christoffel, Geodesic, GeodesicSample, GeometryConfig, MetricModel, Point, TangentVector};

/// Largest admissible Poincaré-ball radius.
pub const BALL_CLAMP: f64 = 1.0 - 1e-6;

/// Stereographic coordinates are re-expressed in the other chart beyond this norm.
pub const CHART_SWITCH_NORM: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Flat,
    Sphere,
    Hyperbolic,
}

impl Curvature {
    fn sign(self) -> f64 {
        match self {
            Curvature::Flat => 0.0,
            Curvature::Sphere => 1.0,
            Curvature::Hyperbolic => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstantCurvatureModel {
    curvature: Curvature,
    dim: usize,
    c0: f64,
    k: f64,
    flows: bool,
    t1: f64,
}

impl ConstantCurvatureModel {
    pub fn new(curvature: Curvature, dim: usize, c0: f64, k: f64, flows: bool, t1: f64) -> Self {
        Self {
            curvature,
            dim,
            c0,
            k,
            flows,
            t1,
        }
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    fn flow_sign(&self) -> f64 {
        if self.flows {
            self.curvature.sign()
        } else {
            0.0
        }
    }

    /// `σ(t)`.
    pub fn scale(&self, t: f64) -> f64 {
        let d = t - self.t1;
        let m1 = (self.dim as f64 - 1.0).max(0.0);
        (-self.k * d).exp() * (self.c0 + self.flow_sign() * m1 * beta(self.k, d))
    }

    /// `σ'(t) = −k σ(t) + K (m−1)`.
    pub fn scale_dt(&self, t: f64) -> f64 {
        let m1 = (self.dim as f64 - 1.0).max(0.0);
        -self.k * self.scale(t) + self.flow_sign() * m1
    }

    fn sq(x: &DVector<f64>) -> f64 {
        x.norm_squared()
    }

    /// Squared conformal factor of the unit model.
    fn w2(&self, x: &Point) -> f64 {
        let s = Self::sq(&x.coords);
        match self.curvature {
            Curvature::Flat => 1.0,
            Curvature::Sphere => 4.0 / ((1.0 + s) * (1.0 + s)),
            Curvature::Hyperbolic => 4.0 / ((1.0 - s) * (1.0 - s)),
        }
    }

    /// `∂_i log w`.
    fn dlog_w(&self, x: &Point) -> DVector<f64> {
        let s = Self::sq(&x.coords);
        match self.curvature {
            Curvature::Flat => DVector::zeros(self.dim),
            Curvature::Sphere => &x.coords * (-2.0 / (1.0 + s)),
            Curvature::Hyperbolic => &x.coords * (2.0 / (1.0 - s)),
        }
    }

    fn chart_sign(chart: u8) -> f64 {
        if chart == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn ambient_inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self.curvature {
            Curvature::Hyperbolic => {
                let n = a.len() - 1;
                a.rows(0, n).dot(&b.rows(0, n)) - a[n] * b[n]
            }
            _ => a.dot(b),
        }
    }

    fn ambient_norm(&self, a: &DVector<f64>) -> f64 {
        self.ambient_inner(a, a).max(0.0).sqrt()
    }

    /// Unit-model embedding of `x`.
    pub fn ambient(&self, x: &Point) -> DVector<f64> {
        let u = &x.coords;
        let s = Self::sq(u);
        let m = self.dim;
        match self.curvature {
            Curvature::Flat => u.clone(),
            Curvature::Sphere => {
                let mut p = DVector::zeros(m + 1);
                p.rows_mut(0, m).copy_from(&(u * (2.0 / (1.0 + s))));
                p[m] = Self::chart_sign(x.chart) * (1.0 - s) / (1.0 + s);
                p
            }
            Curvature::Hyperbolic => {
                let mut p = DVector::zeros(m + 1);
                p.rows_mut(0, m).copy_from(&(u * (2.0 / (1.0 - s))));
                p[m] = (1.0 + s) / (1.0 - s);
                p
            }
        }
    }

    /// Chart coordinates of an ambient point in a given chart.
    fn ambient_to_chart(&self, p: &DVector<f64>, chart: u8) -> Point {
        let m = self.dim;
        match self.curvature {
            Curvature::Flat => Point::new(0, p.clone()),
            Curvature::Sphere => {
                let denom = 1.0 + Self::chart_sign(chart) * p[m];
                Point::new(chart, p.rows(0, m) / denom)
            }
            Curvature::Hyperbolic => Point::new(0, p.rows(0, m) / (1.0 + p[m])),
        }
    }

    /// Sphere chart choice: stay in `chart` unless the coordinates would exceed the switch norm.
    fn place_on_sphere(&self, p: &DVector<f64>, chart: u8) -> Point {
        let m = self.dim;
        let denom = 1.0 + Self::chart_sign(chart) * p[m];
        if denom > 1e-12 {
            let x = self.ambient_to_chart(p, chart);
            if x.coords.norm() <= CHART_SWITCH_NORM {
                return x;
            }
        }
        self.ambient_to_chart(p, 1 - chart)
    }

    fn place(&self, p: &DVector<f64>, chart: u8) -> Result<Point> {
        match self.curvature {
            Curvature::Sphere => Ok(self.place_on_sphere(p, chart)),
            Curvature::Flat => Ok(self.ambient_to_chart(p, 0)),
            Curvature::Hyperbolic => {
                let x = self.ambient_to_chart(p, 0);
                if x.coords.norm() >= BALL_CLAMP {
                    Err(Error::Domain(format!(
                        "Poincaré-ball radius {} reached the clamp {BALL_CLAMP}",
                        x.coords.norm()
                    )))
                } else {
                    Ok(x)
                }
            }
        }
    }

    /// Chart components → ambient tangent vector of the unit model.
    fn push(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        let u = &x.coords;
        let s = Self::sq(u);
        let m = self.dim;
        let uv = u.dot(v);
        match self.curvature {
            Curvature::Flat => v.clone(),
            Curvature::Sphere => {
                let a = 1.0 + s;
                let mut out = DVector::zeros(m + 1);
                out.rows_mut(0, m).copy_from(&(v * (2.0 / a) - u * (4.0 * uv / (a * a))));
                out[m] = -Self::chart_sign(x.chart) * 4.0 * uv / (a * a);
                out
            }
            Curvature::Hyperbolic => {
                let a = 1.0 - s;
                let mut out = DVector::zeros(m + 1);
                out.rows_mut(0, m).copy_from(&(v * (2.0 / a) + u * (4.0 * uv / (a * a))));
                out[m] = 4.0 * uv / (a * a);
                out
            }
        }
    }

    /// Ambient tangent vector at `x` → chart components.
    fn pull(&self, x: &Point, w: &DVector<f64>) -> DVector<f64> {
        let u = &x.coords;
        let s = Self::sq(u);
        let m = self.dim;
        match self.curvature {
            Curvature::Flat => w.clone(),
            Curvature::Sphere => {
                let a = 1.0 + s;
                let ww = w.rows(0, m).into_owned();
                let jt = &ww * (2.0 / a) - u * (4.0 * u.dot(&ww) / (a * a)) - u * (Self::chart_sign(x.chart) * 4.0 * w[m] / (a * a));
                jt / self.w2(x)
            }
            Curvature::Hyperbolic => {
                let a = 1.0 - s;
                let ww = w.rows(0, m).into_owned();
                let jt = &ww * (2.0 / a) + u * (4.0 * u.dot(&ww) / (a * a)) - u * (4.0 * w[m] / (a * a));
                jt / self.w2(x)
            }
        }
    }

    /// Unit-model geodesic distance between ambient points.
    fn unit_distance(&self, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
        match self.curvature {
            Curvature::Flat => (p - q).norm(),
            Curvature::Sphere => 2.0 * (p - q).norm().atan2((p + q).norm()),
            Curvature::Hyperbolic => {
                let d = p - q;
                2.0 * (self.ambient_inner(&d, &d).max(0.0).sqrt() / 2.0).asinh()
            }
        }
    }

    /// Point at unit-model arclength `s` along the geodesic from `p` with unit direction `e`.
    fn along(&self, p: &DVector<f64>, e: &DVector<f64>, s: f64) -> (DVector<f64>, DVector<f64>) {
        match self.curvature {
            Curvature::Flat => (p + e * s, e.clone()),
            Curvature::Sphere => (p * s.cos() + e * s.sin(), p * (-s.sin()) + e * s.cos()),
            Curvature::Hyperbolic => (p * s.cosh() + e * s.sinh(), p * s.sinh() + e * s.cosh()),
        }
    }

    fn sphere_angle(&self, x: &Point, y: &Point) -> f64 {
        self.unit_distance(&self.ambient(x), &self.ambient(y))
    }
}

impl MetricModel for ConstantCurvatureModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, t: f64, x: &Point) -> Result<DMatrix<f64>> {
        let s = self.scale(t);
        if !(s > 0.0) {
            return Err(Error::Geometry(format!("metric scale σ({t}) = {s} is not positive")));
        }
        Ok(DMatrix::identity(self.dim, self.dim) * (s * self.w2(x)))
    }

    fn metric_dt(&self, t: f64, x: &Point) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim) * (self.scale_dt(t) * self.w2(x)))
    }

    fn in_domain(&self, x: &Point) -> bool {
        if !x.coords.iter().all(|c| c.is_finite()) {
            return false;
        }
        match self.curvature {
            Curvature::Flat => x.chart == 0,
            Curvature::Sphere => x.chart <= 1,
            Curvature::Hyperbolic => x.chart == 0 && x.coords.norm() < BALL_CLAMP,
        }
    }

    fn to_chart(&self, x: &Point, target: u8) -> Option<Point> {
        if x.chart == target {
            return Some(x.clone());
        }
        if self.curvature != Curvature::Sphere || target > 1 {
            return None;
        }
        let p = self.ambient(x);
        (1.0 + Self::chart_sign(target) * p[self.dim] > 1e-12).then(|| self.ambient_to_chart(&p, target))
    }

    fn vector_to_chart(&self, v: &TangentVector, target: u8) -> Option<TangentVector> {
        let base = self.to_chart(&v.base, target)?;
        if base.chart == v.base.chart {
            return Some(v.clone());
        }
        let amb = self.push(&v.base, &v.components);
        let comps = self.pull(&base, &amb);
        Some(TangentVector::new(base, comps))
    }

    fn backup_charts(&self, x: &Point) -> Vec<u8> {
        match self.curvature {
            Curvature::Sphere => vec![1 - x.chart],
            _ => Vec::new(),
        }
    }

    fn normalize_chart(&self, x: Point) -> Point {
        if self.curvature == Curvature::Sphere && x.coords.norm() > CHART_SWITCH_NORM {
            let p = self.ambient(&x);
            return self.ambient_to_chart(&p, 1 - x.chart);
        }
        x
    }

    fn closed_christoffel(&self, _t: f64, x: &Point) -> Option<Christoffel> {
        // conformal metric e^{2φ}δ: Γ^k_ij = δ_ik ∂_jφ + δ_jk ∂_iφ − δ_ij ∂_kφ
        let m = self.dim;
        let d = self.dlog_w(x);
        let mut out = Christoffel::zeros(m);
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut v = 0.0;
                    if i == k {
                        v += d[j];
                    }
                    if j == k {
                        v += d[i];
                    }
                    if i == j {
                        v -= d[k];
                    }
                    out.set(k, i, j, v);
                }
            }
        }
        Some(out)
    }

    fn closed_exp(&self, _t: f64, v: &TangentVector) -> Option<Result<Point>> {
        let x = &v.base;
        if self.curvature == Curvature::Flat {
            return Some(Ok(Point::new(0, &x.coords + &v.components)));
        }
        let p = self.ambient(x);
        let amb = self.push(x, &v.components);
        let len = self.ambient_norm(&amb);
        if len == 0.0 {
            return Some(Ok(x.clone()));
        }
        let (q, _) = self.along(&p, &(amb / len), len);
        Some(self.place(&q, x.chart))
    }

    fn closed_geodesic(&self, t: f64, x: &Point, y: &Point, cfg: &GeometryConfig) -> Option<Result<Geodesic>> {
        let sigma = self.scale(t);
        let root = sigma.sqrt();
        let p = self.ambient(x);
        let q = self.ambient(y);
        let theta = self.unit_distance(&p, &q);
        let raw = match self.curvature {
            Curvature::Flat => &q - &p,
            Curvature::Sphere => &q - &p * p.dot(&q),
            Curvature::Hyperbolic => &q + &p * self.ambient_inner(&p, &q),
        };
        let raw_norm = self.ambient_norm(&raw);
        let near_cut = self.curvature == Curvature::Sphere && theta > std::f64::consts::PI - cfg.cut_locus_angle;
        let e = if raw_norm > 1e-12 {
            raw / raw_norm
        } else if self.curvature == Curvature::Sphere {
            // antipodal: every direction is minimal; take the normalised first chart basis vector
            let mut e1 = DVector::zeros(self.dim);
            e1[0] = 1.0;
            let a = self.push(x, &e1);
            let n = self.ambient_norm(&a);
            a / n
        } else {
            return Some(Err(Error::Geometry("degenerate geodesic direction".into())));
        };
        let (_, e_end) = self.along(&p, &e, theta);
        let start_v = self.pull(x, &e) / root;
        let end_v = self.pull(y, &e_end) / root;
        let length = root * theta;
        let samples = vec![
            GeodesicSample {
                u: 0.0,
                point: x.clone(),
                velocity: TangentVector::new(x.clone(), start_v.clone()),
            },
            GeodesicSample {
                u: length,
                point: y.clone(),
                velocity: TangentVector::new(y.clone(), end_v.clone()),
            },
        ];
        Some(Ok(Geodesic {
            time: t,
            start: x.clone(),
            end: y.clone(),
            start_velocity: TangentVector::new(x.clone(), start_v),
            end_velocity: TangentVector::new(y.clone(), end_v),
            length,
            samples,
            near_cut_locus: near_cut,
        }))
    }

    fn closed_transport(&self, t: f64, geo: &Geodesic, v: &TangentVector) -> Option<Result<TangentVector>> {
        let w = if v.base.chart == geo.start.chart {
            v.components.clone()
        } else {
            match self.vector_to_chart(v, geo.start.chart) {
                Some(w) => w.components,
                None => return Some(Err(Error::Domain("vector chart mismatch".into()))),
            }
        };
        if self.curvature == Curvature::Flat {
            return Some(Ok(TangentVector::new(geo.end.clone(), w)));
        }
        let root = self.scale(t).sqrt();
        let p = self.ambient(&geo.start);
        let e = self.push(&geo.start, &geo.start_velocity.components) * root;
        let theta = geo.length / root;
        let amb = self.push(&geo.start, &w);
        let a = self.ambient_inner(&amb, &e);
        let (_, e_end) = self.along(&p, &e, theta);
        let out = amb - &e * a + e_end * a;
        Some(Ok(TangentVector::new(geo.end.clone(), self.pull(&geo.end, &out))))
    }

    fn closed_distance(&self, t: f64, x: &Point, y: &Point) -> Option<f64> {
        Some(self.scale(t).sqrt() * self.unit_distance(&self.ambient(x), &self.ambient(y)))
    }

    fn closed_ricci(&self, _t: f64, u: &TangentVector, w: &TangentVector) -> Option<f64> {
        let m1 = self.dim as f64 - 1.0;
        Some(self.curvature.sign() * m1 * self.w2(&u.base) * u.components.dot(&w.components))
    }

    fn near_cut_locus(&self, _t: f64, x: &Point, y: &Point, angle: f64) -> bool {
        self.curvature == Curvature::Sphere && self.sphere_angle(x, y) > std::f64::consts::PI - angle
    }

    fn diameter(&self, t: f64) -> Option<f64> {
        (self.curvature == Curvature::Sphere).then(|| self.scale(t).sqrt() * std::f64::consts::PI)
    }

    fn embed(&self, x: &Point) -> Option<DVector<f64>> {
        Some(self.ambient(x))
    }

    fn probe_point(&self, base: &Point, u: &[f64]) -> Point {
        let half = match self.curvature {
            Curvature::Flat => return Point::new(0, DVector::from_fn(self.dim, |i, _| base.coords[i] + (2.0 * u[i] - 1.0) * 2.0)),
            Curvature::Sphere => 1.5,
            Curvature::Hyperbolic => 0.9 / (self.dim as f64).sqrt(),
        };
        Point::new(0, DVector::from_fn(self.dim, |i, _| (2.0 * u[i] - 1.0) * half))
    }
}
