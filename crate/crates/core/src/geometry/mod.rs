//! Time-dependent Riemannian geometry in chart coordinates.
//!
//! A [`TimeDependentManifold`] wraps a [`MetricModel`] (the metric family
//! `g(t)` together with whatever closed forms the model knows) plus a drift
//! field, a time horizon and a base point. Every operation dispatches to the
//! model's closed form when one exists and falls back to the numeric route
//! otherwise: finite-difference Christoffel symbols and curvature, fixed-step
//! RK4 for geodesics and parallel transport, damped Newton shooting for the
//! two-point problem. [`TimeDependentManifold::numeric`] returns a view that
//! ignores the closed forms, which is how the two routes are cross-checked.

mod numeric;
mod types;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use types::{Christoffel, Frame, Geodesic, GeodesicSample, MetricSample, Point, TangentVector};

/// Closed interval `[T1, T2]` of admissible times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub t1: f64,
    pub t2: f64,
}

impl Horizon {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
            return Err(Error::invalid("horizon", format!("need T1 < T2, got [{t1}, {t2}]")));
        }
        Ok(Self { t1, t2 })
    }

    pub fn len(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.len());
        t >= self.t1 - slack && t <= self.t2 + slack
    }
}

/// Tolerances and step sizes for the numeric route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Spatial step for finite-difference metric derivatives.
    pub fd_space_step: f64,
    /// Time step for `∂t g`, relative to the horizon length.
    pub fd_time_rel_step: f64,
    /// Largest RK4 step (in arclength) for geodesics and transport.
    pub rk4_max_step: f64,
    /// Minimum number of RK4 steps per integration.
    pub rk4_min_steps: usize,
    pub shooting_max_iter: usize,
    pub shooting_tol: f64,
    /// Coordinates closer than this (in one chart) are the same point.
    pub point_eq_tol: f64,
    /// Angular distance from the cut locus below which a pair is flagged.
    pub cut_locus_angle: f64,
    /// Tangent vectors longer than this are rejected by `exp_map`.
    pub trust_radius: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            fd_space_step: 1e-3,
            fd_time_rel_step: 1e-5,
            rk4_max_step: 1e-2,
            rk4_min_steps: 100,
            shooting_max_iter: 50,
            shooting_tol: 1e-11,
            point_eq_tol: 1e-9,
            cut_locus_angle: 1e-3,
            trust_radius: 1e3,
        }
    }
}

/// Which evaluation path an operation may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Closed form when the model has one, numeric otherwise.
    #[default]
    Auto,
    /// Numeric route only.
    Numeric,
}

/// A metric family `g(t)` on a chart atlas, with optional closed forms.
///
/// Only [`dim`](Self::dim), [`metric`](Self::metric) and
/// [`in_domain`](Self::in_domain) are required. Every `closed_*` method
/// returns `None` when the model has no closed form for it.
pub trait MetricModel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `g(t)` at `x` in the chart of `x`.
    fn metric(&self, t: f64, x: &Point) -> Result<DMatrix<f64>>;

    /// Analytic `∂t g(t)` if known.
    fn metric_dt(&self, _t: f64, _x: &Point) -> Option<DMatrix<f64>> {
        None
    }

    fn in_domain(&self, x: &Point) -> bool;

    /// Re-express `x` in chart `target`, if it lies in that chart.
    fn to_chart(&self, x: &Point, target: u8) -> Option<Point> {
        (x.chart == target).then(|| x.clone())
    }

    /// Re-express a tangent vector in chart `target`.
    fn vector_to_chart(&self, v: &TangentVector, target: u8) -> Option<TangentVector> {
        (v.base.chart == target).then(|| v.clone())
    }

    /// Charts other than the current one, in order of preference.
    fn backup_charts(&self, _x: &Point) -> Vec<u8> {
        Vec::new()
    }

    /// Move `x` to its preferred chart (e.g. once stereographic coordinates grow too large).
    fn normalize_chart(&self, x: Point) -> Point {
        x
    }

    fn closed_christoffel(&self, _t: f64, _x: &Point) -> Option<Christoffel> {
        None
    }

    fn closed_exp(&self, _t: f64, _v: &TangentVector) -> Option<Result<Point>> {
        None
    }

    fn closed_geodesic(&self, _t: f64, _x: &Point, _y: &Point, _cfg: &GeometryConfig) -> Option<Result<Geodesic>> {
        None
    }

    fn closed_transport(&self, _t: f64, _geo: &Geodesic, _v: &TangentVector) -> Option<Result<TangentVector>> {
        None
    }

    fn closed_distance(&self, _t: f64, _x: &Point, _y: &Point) -> Option<f64> {
        None
    }

    fn closed_ricci(&self, _t: f64, _u: &TangentVector, _w: &TangentVector) -> Option<f64> {
        None
    }

    /// Whether `(x, y)` is within `angle` of the cut locus, for models that can tell.
    fn near_cut_locus(&self, _t: f64, _x: &Point, _y: &Point, _angle: f64) -> bool {
        false
    }

    /// Diameter of `(M, g(t))` when finite and known.
    fn diameter(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Coordinates in a model embedding (ambient space), when one exists.
    fn embed(&self, _x: &Point) -> Option<DVector<f64>> {
        None
    }

    /// A probe point for randomized checks, from `u ∈ [0,1)^m`.
    ///
    /// The default is a box of half-width 0.5 around `base`.
    fn probe_point(&self, base: &Point, u: &[f64]) -> Point {
        let coords = DVector::from_fn(base.dim(), |i, _| base.coords[i] + (2.0 * u[i] - 1.0) * 0.5);
        Point::new(base.chart, coords)
    }
}

/// Signature of a user-supplied drift field: chart components of `Z(t)(x)`.
pub type DriftFn = dyn Fn(f64, &Point) -> DVector<f64> + Send + Sync;

/// The drift vector field `Z(t)`.
#[derive(Clone, Default)]
pub enum Drift {
    #[default]
    Zero,
    /// `Z(x) = −λ (x − center)` in chart coordinates (flat models only).
    Confining { lambda: f64, center: DVector<f64> },
    Custom(Arc<DriftFn>),
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::Confining { lambda, center } => {
                write!(f, "Confining {{ lambda: {lambda}, center: {:?} }}", center.as_slice())
            }
            Drift::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Drift {
    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }

    pub fn eval(&self, t: f64, x: &Point) -> DVector<f64> {
        match self {
            Drift::Zero => DVector::zeros(x.dim()),
            Drift::Confining { lambda, center } => -(&x.coords - center) * *lambda,
            Drift::Custom(f) => f(t, x),
        }
    }

    /// Coordinate Jacobian `∂_j Z^k`, analytic when available.
    fn jacobian(&self, _t: f64, x: &Point) -> Option<DMatrix<f64>> {
        match self {
            Drift::Zero => Some(DMatrix::zeros(x.dim(), x.dim())),
            Drift::Confining { lambda, .. } => Some(DMatrix::identity(x.dim(), x.dim()) * -*lambda),
            Drift::Custom(_) => None,
        }
    }
}

/// `(M, g(t))_{t ∈ [T1, T2]}` together with a drift and a base point.
///
/// Immutable after construction; clones share the model.
#[derive(Clone, Debug)]
pub struct TimeDependentManifold {
    model: Arc<dyn MetricModel>,
    drift: Drift,
    horizon: Horizon,
    base_point: Point,
    curvature_hint: Option<f64>,
    config: GeometryConfig,
    route: Route,
}

impl TimeDependentManifold {
    pub fn new(model: Arc<dyn MetricModel>, horizon: Horizon, base_point: Point) -> Result<Self> {
        if base_point.dim() != model.dim() {
            return Err(Error::invalid(
                "base_point",
                format!("dimension {} does not match manifold dimension {}", base_point.dim(), model.dim()),
            ));
        }
        if !model.in_domain(&base_point) {
            return Err(Error::Domain(format!("base point {:?} outside chart", base_point.coords.as_slice())));
        }
        Ok(Self {
            model,
            drift: Drift::Zero,
            horizon,
            base_point,
            curvature_hint: None,
            config: GeometryConfig::default(),
            route: Route::Auto,
        })
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_config(mut self, config: GeometryConfig) -> Self {
        self.config = config;
        self
    }

    /// Lower Ricci bound hint `−K1`, informational only.
    pub fn with_curvature_hint(mut self, lower_bound: f64) -> Self {
        self.curvature_hint = Some(lower_bound);
        self
    }

    /// A view of the same manifold that never uses closed forms.
    pub fn numeric(&self) -> Self {
        Self { route: Route::Numeric, ..self.clone() }
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn base_point(&self) -> &Point {
        &self.base_point
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.config
    }

    pub fn curvature_hint(&self) -> Option<f64> {
        self.curvature_hint
    }

    pub fn model(&self) -> &dyn MetricModel {
        self.model.as_ref()
    }

    fn closed(&self) -> Option<&dyn MetricModel> {
        match self.route {
            Route::Auto => Some(self.model.as_ref()),
            Route::Numeric => None,
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::Domain(format!("point has {} coordinates, manifold dimension is {}", x.dim(), self.dim())));
        }
        if !self.model.in_domain(x) {
            return Err(Error::Domain(format!(
                "point {:?} outside chart {}",
                x.coords.as_slice(),
                x.chart
            )));
        }
        Ok(())
    }

    /// `g(t)` at `x`, with a positive-definiteness check.
    pub fn metric_matrix(&self, t: f64, x: &Point) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let g = self.model.metric(t, x)?;
        let min_eig = if g.is_square() && is_diagonal(&g) {
            g.diagonal().min()
        } else {
            SymmetricEigen::new(g.clone()).eigenvalues.min()
        };
        if !(min_eig > 1e-12) {
            return Err(Error::Geometry(format!(
                "metric not positive definite at t={t}, x={:?} (smallest eigenvalue {min_eig:e})",
                x.coords.as_slice()
            )));
        }
        Ok(g)
    }

    /// `g(t)` and `∂t g(t)` at `x`.
    pub fn metric_at(&self, t: f64, x: &Point) -> Result<MetricSample> {
        let g = self.metric_matrix(t, x)?;
        let analytic = match self.route {
            Route::Auto => self.model.metric_dt(t, x),
            Route::Numeric => None,
        };
        let dgdt = match analytic {
            Some(d) => d,
            None => {
                let dt = self.config.fd_time_rel_step * self.horizon.len();
                let plus = self.model.metric(t + dt, x)?;
                let minus = self.model.metric(t - dt, x)?;
                (plus - minus) / (2.0 * dt)
            }
        };
        Ok(MetricSample { g, dgdt })
    }

    pub fn inner(&self, t: f64, u: &TangentVector, w: &TangentVector) -> Result<f64> {
        let w = self.align(w, u.base.chart)?;
        let g = self.metric_matrix(t, &u.base)?;
        Ok(u.components.dot(&(&g * &w.components)))
    }

    pub fn norm(&self, t: f64, v: &TangentVector) -> Result<f64> {
        let g = self.metric_matrix(t, &v.base)?;
        Ok(v.components.dot(&(&g * &v.components)).max(0.0).sqrt())
    }

    fn align(&self, v: &TangentVector, chart: u8) -> Result<TangentVector> {
        if v.base.chart == chart {
            return Ok(v.clone());
        }
        self.model
            .vector_to_chart(v, chart)
            .ok_or_else(|| Error::Domain(format!("vector cannot be expressed in chart {chart}")))
    }

    /// Express `y` in the chart of `x`.
    pub fn same_chart(&self, y: &Point, chart: u8) -> Result<Point> {
        if y.chart == chart {
            return Ok(y.clone());
        }
        self.model
            .to_chart(y, chart)
            .ok_or_else(|| Error::Domain(format!("point {:?} not representable in chart {chart}", y.coords.as_slice())))
    }

    /// Equality up to `point_eq_tol` in chart coordinates.
    pub fn points_equal(&self, x: &Point, y: &Point) -> bool {
        match self.same_chart(y, x.chart) {
            Ok(y) => (&x.coords - &y.coords).amax() <= self.config.point_eq_tol,
            Err(_) => false,
        }
    }

    pub fn normalize_chart(&self, x: Point) -> Point {
        self.model.normalize_chart(x)
    }

    /// Christoffel symbols `Γ^k_ij(t, x)`.
    pub fn christoffel(&self, t: f64, x: &Point) -> Result<Christoffel> {
        self.check_point(x)?;
        if let Some(c) = self.closed().and_then(|m| m.closed_christoffel(t, x)) {
            return Ok(c);
        }
        numeric::christoffel_fd(self, t, x)
    }

    /// `exp^{(t)}_x(v)`. Falls back to backup charts when the geodesic leaves the chart.
    pub fn exp_map(&self, t: f64, v: &TangentVector) -> Result<Point> {
        self.check_point(&v.base)?;
        if v.components.iter().all(|c| *c == 0.0) {
            return Ok(v.base.clone());
        }
        let len = self.norm(t, v)?;
        if len > self.config.trust_radius {
            return Err(Error::Domain(format!("tangent vector length {len} exceeds trust radius")));
        }
        if let Some(r) = self.closed().and_then(|m| m.closed_exp(t, v)) {
            return r;
        }
        match numeric::exp_rk4(self, t, v) {
            Err(Error::Domain(msg)) => {
                for chart in self.model.backup_charts(&v.base) {
                    if let Some(w) = self.model.vector_to_chart(v, chart) {
                        if let Ok(p) = numeric::exp_rk4(self, t, &w) {
                            return Ok(self.normalize_chart(p));
                        }
                    }
                }
                Err(Error::Domain(msg))
            }
            other => other.map(|p| self.normalize_chart(p)),
        }
    }

    /// Parallel transport of `v` (based at `geo.start`) along `geo` with respect to `∇^{(t)}`.
    pub fn parallel_transport(&self, t: f64, geo: &Geodesic, v: &TangentVector) -> Result<TangentVector> {
        if !self.points_equal(&v.base, &geo.start) {
            return Err(Error::Geometry("vector is not based at the geodesic start".into()));
        }
        if let Some(r) = self.closed().and_then(|m| m.closed_transport(t, geo, v)) {
            return r;
        }
        let v = self.align(v, geo.start.chart)?;
        numeric::transport_rk4(self, t, geo, &v)
    }

    /// Minimal unit-speed `g(t)`-geodesic from `x` to `y`.
    pub fn minimal_geodesic(&self, t: f64, x: &Point, y: &Point) -> Result<Geodesic> {
        self.check_point(x)?;
        self.check_point(y)?;
        if self.points_equal(x, y) {
            return Err(Error::Geometry("minimal geodesic requested between equal points".into()));
        }
        if let Some(r) = self.closed().and_then(|m| m.closed_geodesic(t, x, y, &self.config)) {
            return r;
        }
        let y = self.same_chart(y, x.chart)?;
        let mut geo = numeric::shoot(self, t, x, &y)?;
        geo.near_cut_locus = self.model.near_cut_locus(t, x, &y, self.config.cut_locus_angle);
        Ok(geo)
    }

    /// `d_{g(t)}(x, y)`.
    pub fn distance(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        if self.points_equal(x, y) {
            return Ok(0.0);
        }
        if let Some(d) = self.closed().and_then(|m| m.closed_distance(t, x, y)) {
            return Ok(d);
        }
        Ok(self.minimal_geodesic(t, x, y)?.length)
    }

    /// `Ric_{g(t)}(u, w)` with `u`, `w` based at the same point.
    pub fn ricci(&self, t: f64, u: &TangentVector, w: &TangentVector) -> Result<f64> {
        self.check_point(&u.base)?;
        let w = self.align(w, u.base.chart)?;
        if let Some(r) = self.closed().and_then(|m| m.closed_ricci(t, u, &w)) {
            return Ok(r);
        }
        let ric = numeric::ricci_tensor_fd(self, t, &u.base)?;
        Ok(u.components.dot(&(&ric * &w.components)))
    }

    /// Ricci tensor components `R_jk` at `x`.
    pub fn ricci_tensor(&self, t: f64, x: &Point) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        if let Some(model) = self.closed() {
            let m = self.dim();
            let mut ric = DMatrix::zeros(m, m);
            let mut all = true;
            'outer: for j in 0..m {
                for k in 0..m {
                    let u = TangentVector::basis(x.clone(), j);
                    let w = TangentVector::basis(x.clone(), k);
                    match model.closed_ricci(t, &u, &w) {
                        Some(r) => ric[(j, k)] = r,
                        None => {
                            all = false;
                            break 'outer;
                        }
                    }
                }
            }
            if all {
                return Ok(ric);
            }
        }
        numeric::ricci_tensor_fd(self, t, x)
    }

    /// `g(t)`-orthonormal frame at `x`: Gram–Schmidt on the chart basis in index order.
    pub fn orthonormal_frame(&self, t: f64, x: &Point) -> Result<Frame> {
        let g = self.metric_matrix(t, x)?;
        let m = self.dim();
        let mut cols = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let mut v = DVector::<f64>::zeros(m);
            v[i] = 1.0;
            for _pass in 0..2 {
                for j in 0..i {
                    let f = cols.column(j).into_owned();
                    let proj = v.dot(&(&g * &f));
                    v -= f * proj;
                }
            }
            let n2 = v.dot(&(&g * &v));
            if !(n2 > 1e-300) {
                return Err(Error::Geometry("degenerate metric in Gram–Schmidt".into()));
            }
            cols.set_column(i, &(v / n2.sqrt()));
        }
        Ok(Frame { base: x.clone(), columns: cols })
    }

    /// `Z(t)(x)`.
    pub fn drift_at(&self, t: f64, x: &Point) -> TangentVector {
        TangentVector::new(x.clone(), self.drift.eval(t, x))
    }

    /// Covariant derivative `∇_v Z(t)` at the base of `v`.
    pub fn covariant_drift_derivative(&self, t: f64, v: &TangentVector) -> Result<TangentVector> {
        let x = &v.base;
        let m = self.dim();
        let jac = match self.drift.jacobian(t, x) {
            Some(j) => j,
            None => {
                let h = self.config.fd_space_step;
                let mut j = DMatrix::zeros(m, m);
                for c in 0..m {
                    let plus = self.drift.eval(t, &x.shifted(c, h));
                    let minus = self.drift.eval(t, &x.shifted(c, -h));
                    j.set_column(c, &((plus - minus) / (2.0 * h)));
                }
                j
            }
        };
        let z = self.drift.eval(t, x);
        let gamma = self.christoffel(t, x)?;
        let mut out = &jac * &v.components;
        for k in 0..m {
            let mut s = 0.0;
            for j in 0..m {
                for i in 0..m {
                    s += gamma.get(k, j, i) * v.components[j] * z[i];
                }
            }
            out[k] += s;
        }
        Ok(TangentVector::new(x.clone(), out))
    }

    pub fn near_cut_locus(&self, t: f64, x: &Point, y: &Point, angle: f64) -> bool {
        self.model.near_cut_locus(t, x, y, angle)
    }

    pub fn diameter(&self, t: f64) -> Option<f64> {
        self.model.diameter(t)
    }

    pub fn embed(&self, x: &Point) -> Option<DVector<f64>> {
        self.model.embed(x)
    }

    pub fn probe_point(&self, u: &[f64]) -> Point {
        self.model.probe_point(&self.base_point, u)
    }
}

fn is_diagonal(g: &DMatrix<f64>) -> bool {
    let n = g.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || g[(i, j)] == 0.0))
}

/// `κ = ½ · max |λ|` over the generalized eigenvalues of `(∂t g, g)` on the
/// sampled points and times; certifies `e^{−2κ|t−s|} g(s) ≤ g(t) ≤ e^{2κ|t−s|} g(s)`
/// on the sample set.
pub fn kappa_estimate(man: &TimeDependentManifold, region: &[Point], t_grid: &[f64]) -> Result<f64> {
    if region.is_empty() || t_grid.is_empty() {
        return Err(Error::Numeric("kappa_estimate needs a non-empty region and time grid".into()));
    }
    let mut kappa: f64 = 0.0;
    for x in region {
        for &t in t_grid {
            let s = man.metric_at(t, x)?;
            let max_abs = generalized_eigenvalues(&s.dgdt, &s.g)?
                .iter()
                .fold(0.0f64, |acc, l| acc.max(l.abs()));
            kappa = kappa.max(0.5 * max_abs);
        }
    }
    Ok(kappa)
}

/// Largest violation of `e^{−2κ|t−s|} g(s) ≤ g(t) ≤ e^{2κ|t−s|} g(s)` over the
/// sampled points and time pairs, relative to the bound; nonpositive when it holds.
pub fn kappa_bound_excess(man: &TimeDependentManifold, region: &[Point], t_grid: &[f64], kappa: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for x in region {
        let metrics = t_grid.iter().map(|&t| man.metric_matrix(t, x)).collect::<Result<Vec<_>>>()?;
        for (i, gs) in metrics.iter().enumerate() {
            for (j, gt) in metrics.iter().enumerate().skip(i + 1) {
                let bound = (2.0 * kappa * (t_grid[j] - t_grid[i]).abs()).exp();
                // g(t)(v,v) / g(s)(v,v) ranges over the generalized eigenvalues of (g(t), g(s))
                for l in generalized_eigenvalues(gt, gs)?.iter() {
                    worst = worst.max(l / bound - 1.0).max(1.0 / (l * bound) - 1.0);
                }
            }
        }
    }
    Ok(worst)
}

/// Eigenvalues of `A v = λ B v` for symmetric `A` and positive-definite `B`.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Geometry("metric is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Geometry("singular Cholesky factor".into()))?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(SymmetricEigen::new(c).eigenvalues)
}

#[cfg(test)]
mod tests;
