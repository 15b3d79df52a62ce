//! Concrete manifolds: closed-form constant-curvature families used as oracles
//! and experiment settings, plus user-supplied chart metrics.

mod constant_curvature;
mod generic;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use constant_curvature::{ConstantCurvatureModel, Curvature, BALL_CLAMP, CHART_SWITCH_NORM};
pub use generic::{ChartGenericModel, DomainFn, MetricFn};

use crate::comparison::beta;
use crate::error::{Error, Result};
use crate::geometry::{Drift, GeometryConfig, Horizon, Point, TangentVector, TimeDependentManifold};
use crate::rng::{stream, tags};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Static flat `ℝ^m`.
    Euclidean,
    /// Round sphere with `g(t) = e^{−kΔ}(c0 + (m−1)β_k(Δ)) g_S`, so `∂t g = Ric − k g`.
    SphereBackwardRicci,
    /// Round sphere of constant radius `√c0`.
    SphereStatic,
    /// Poincaré ball with `g(t) = e^{−kΔ}(c0 − (m−1)β_k(Δ)) g_H`.
    HyperbolicScaled,
    /// User-supplied metric coefficients in a single chart.
    ChartGeneric,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Euclidean => "euclidean",
            ModelKind::SphereBackwardRicci => "sphere_backward_ricci",
            ModelKind::SphereStatic => "sphere_static",
            ModelKind::HyperbolicScaled => "hyperbolic_scaled",
            ModelKind::ChartGeneric => "chart_generic",
        }
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            ModelKind::Euclidean => &[],
            ModelKind::SphereBackwardRicci | ModelKind::HyperbolicScaled => &["c0", "k"],
            ModelKind::SphereStatic => &["c0"],
            ModelKind::ChartGeneric => &[],
        }
    }
}

/// Drift field `Z(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    #[default]
    Zero,
    /// `Z = −λ ∇(d(center, ·)²/2)`, Euclidean models only.
    Confining {
        lambda: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

/// Metric families available to `chart_generic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GenericFamily {
    /// `g(t) = e^{2λt} diag(g0)`.
    ExpScaled { lambda: f64, g0: Vec<f64> },
    /// Flat plane in polar coordinates `(r, θ)`.
    PolarFlat,
}

/// Deserialization target of the config file's `model` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dim: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// `[T1, T2]`.
    pub horizon: [f64; 2],
    #[serde(default)]
    pub drift: DriftSpec,
    /// Base point `o` in chart 0. Defaults to the origin (or `(1, 0)` for polar coordinates).
    #[serde(default)]
    pub base_point: Option<Vec<f64>>,
    #[serde(default)]
    pub generic: Option<GenericFamily>,
    #[serde(default)]
    pub geometry: GeometryConfig,
}

impl ModelSpec {
    /// Minimal spec with default parameters.
    pub fn new(kind: ModelKind, dim: usize, t1: f64, t2: f64) -> Self {
        Self {
            kind,
            dim,
            params: BTreeMap::new(),
            horizon: [t1, t2],
            drift: DriftSpec::Zero,
            base_point: None,
            generic: None,
            geometry: GeometryConfig::default(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_drift(mut self, drift: DriftSpec) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_generic(mut self, family: GenericFamily) -> Self {
        self.generic = Some(family);
        self
    }

    pub fn with_base_point(mut self, coords: Vec<f64>) -> Self {
        self.base_point = Some(coords);
        self
    }

    fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// `c0` after defaults. For `hyperbolic_scaled` the default keeps the scale
    /// at least 1 on the whole horizon.
    pub fn c0(&self) -> f64 {
        match self.kind {
            ModelKind::HyperbolicScaled => self.params.get("c0").copied().unwrap_or_else(|| {
                let m1 = self.dim.saturating_sub(1) as f64;
                m1 * beta(self.k(), self.horizon[1] - self.horizon[0]) + 1.0
            }),
            _ => self.param("c0", 1.0),
        }
    }

    pub fn k(&self) -> f64 {
        self.param("k", 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("model.dim", "dimension must be at least 1"));
        }
        Horizon::new(self.horizon[0], self.horizon[1]).map_err(|_| {
            Error::invalid(
                "model.horizon",
                format!("need finite T1 < T2, got [{}, {}]", self.horizon[0], self.horizon[1]),
            )
        })?;
        let allowed = self.kind.allowed_params();
        for (name, value) in &self.params {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::invalid(
                    format!("model.params.{name}"),
                    format!("unknown parameter for {} (allowed: {:?})", self.kind.name(), allowed),
                ));
            }
            if !value.is_finite() {
                return Err(Error::invalid(format!("model.params.{name}"), "must be finite"));
            }
        }
        let len = self.horizon[1] - self.horizon[0];
        let m1 = self.dim.saturating_sub(1) as f64;
        match self.kind {
            ModelKind::SphereBackwardRicci | ModelKind::SphereStatic => {
                if self.dim < 2 {
                    return Err(Error::invalid("model.dim", "sphere models need dim ≥ 2"));
                }
                if self.c0() <= 0.0 {
                    return Err(Error::invalid("model.params.c0", "initial scale must be positive"));
                }
            }
            ModelKind::HyperbolicScaled => {
                if self.dim < 2 {
                    return Err(Error::invalid("model.dim", "hyperbolic model needs dim ≥ 2"));
                }
                let floor = m1 * beta(self.k(), len);
                if self.c0() <= floor {
                    return Err(Error::invalid(
                        "model.params.c0",
                        format!("must exceed (m−1)·β_k(T2−T1) = {floor} so the metric stays positive on the horizon"),
                    ));
                }
            }
            ModelKind::Euclidean => {}
            ModelKind::ChartGeneric => match &self.generic {
                None => return Err(Error::invalid("model.generic", "chart_generic needs a metric family")),
                Some(GenericFamily::ExpScaled { lambda, g0 }) => {
                    if g0.len() != self.dim {
                        return Err(Error::invalid("model.generic.g0", format!("expected {} entries", self.dim)));
                    }
                    if !lambda.is_finite() || g0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                        return Err(Error::invalid("model.generic", "lambda must be finite and g0 entries positive"));
                    }
                }
                Some(GenericFamily::PolarFlat) => {
                    if self.dim != 2 {
                        return Err(Error::invalid("model.dim", "polar_flat is two-dimensional"));
                    }
                }
            },
        }
        if self.kind != ModelKind::ChartGeneric && self.generic.is_some() {
            return Err(Error::invalid("model.generic", "only chart_generic takes a metric family"));
        }
        if let DriftSpec::Confining { lambda, center } = &self.drift {
            if self.kind != ModelKind::Euclidean {
                return Err(Error::invalid("model.drift", "the confining drift is available on euclidean only"));
            }
            if !lambda.is_finite() {
                return Err(Error::invalid("model.drift.lambda", "must be finite"));
            }
            if let Some(c) = center {
                if c.len() != self.dim {
                    return Err(Error::invalid("model.drift.center", format!("expected {} entries", self.dim)));
                }
            }
        }
        if let Some(b) = &self.base_point {
            if b.len() != self.dim {
                return Err(Error::invalid("model.base_point", format!("expected {} coordinates", self.dim)));
            }
        }
        Ok(())
    }
}

/// Construct the manifold described by `spec`.
pub fn build(spec: &ModelSpec) -> Result<TimeDependentManifold> {
    spec.validate()?;
    let horizon = Horizon::new(spec.horizon[0], spec.horizon[1])?;
    let m = spec.dim;
    let t1 = horizon.t1;
    let (model, hint): (Arc<dyn crate::geometry::MetricModel>, Option<f64>) = match spec.kind {
        ModelKind::Euclidean => (
            Arc::new(ConstantCurvatureModel::new(Curvature::Flat, m, 1.0, 0.0, false, t1)),
            Some(0.0),
        ),
        ModelKind::SphereBackwardRicci => (
            Arc::new(ConstantCurvatureModel::new(Curvature::Sphere, m, spec.c0(), spec.k(), true, t1)),
            Some(0.0),
        ),
        ModelKind::SphereStatic => (
            Arc::new(ConstantCurvatureModel::new(Curvature::Sphere, m, spec.c0(), 0.0, false, t1)),
            Some(0.0),
        ),
        ModelKind::HyperbolicScaled => {
            let model = ConstantCurvatureModel::new(Curvature::Hyperbolic, m, spec.c0(), spec.k(), true, t1);
            // Ric = −(m−1)/σ(t) g; σ is smallest at one end of the horizon
            let s_min = model.scale(horizon.t1).min(model.scale(horizon.t2));
            let hint = -(m as f64 - 1.0) / s_min;
            (Arc::new(model), Some(hint))
        }
        ModelKind::ChartGeneric => {
            let model = match spec.generic.as_ref().expect("validated") {
                GenericFamily::ExpScaled { lambda, g0 } => ChartGenericModel::exp_scaled(*lambda, g0.clone()),
                GenericFamily::PolarFlat => ChartGenericModel::polar_flat(),
            };
            (Arc::new(model), None)
        }
    };
    let default_base = match &spec.generic {
        Some(GenericFamily::PolarFlat) => {
            let mut v = vec![0.0; m];
            v[0] = 1.0;
            v
        }
        _ => vec![0.0; m],
    };
    let base = Point::from_slice(0, spec.base_point.as_deref().unwrap_or(&default_base));
    let drift = match &spec.drift {
        DriftSpec::Zero => Drift::Zero,
        DriftSpec::Confining { lambda, center } => Drift::Confining {
            lambda: *lambda,
            center: DVector::from_column_slice(center.as_deref().unwrap_or(base.coords.as_slice())),
        },
    };
    let mut man = TimeDependentManifold::new(model, horizon, base)
        .map_err(|e| Error::invalid("model.base_point", e.to_string()))?
        .with_drift(drift)
        .with_config(spec.geometry);
    if let Some(h) = hint {
        man = man.with_curvature_hint(h);
    }
    Ok(man)
}

/// Uniform point in `[0,1)^m` for [`TimeDependentManifold::probe_point`].
fn unit_cube<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random::<f64>()).collect()
}

/// A `g(t)`-unit vector at `x` with uniformly distributed direction.
fn random_unit<R: Rng + ?Sized>(man: &TimeDependentManifold, t: f64, x: &Point, rng: &mut R) -> Result<TangentVector> {
    let frame = man.orthonormal_frame(t, x)?;
    let m = man.dim();
    let mut xi = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = xi.norm();
    if n == 0.0 {
        xi[0] = 1.0;
    } else {
        xi /= n;
    }
    Ok(frame.apply(&xi))
}

/// One sampled evaluation of the curvature condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionWitness {
    pub t: f64,
    pub chart: u8,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `(2(∇Z)♭ + ∂t g − Ric + k g)(v, v)` for `g(t)`-unit `v`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub k: f64,
    pub sample_count: usize,
    pub max_violation: f64,
    /// The worst samples, largest violation first (at most five).
    pub witnesses: Vec<ConditionWitness>,
}

impl ConditionReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Sample the condition `2(∇Z)♭ + ∂t g ≤ Ric − k g` at random `(t, x, unit v)`.
///
/// The reported quantity is the left side minus the right side, so a
/// nonpositive maximum means the condition holds on the samples. For a fixed
/// seed the samples do not depend on `k`, and the maximum is nondecreasing in `k`.
pub fn verify_condition(man: &TimeDependentManifold, k: f64, sample_count: usize, seed: u64) -> Result<ConditionReport> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count", "need at least one sample"));
    }
    let h = man.horizon();
    let m = man.dim();
    let mut rng = stream(seed, tags::CONDITION, 0);
    let mut all = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let t = h.t1 + rng.random::<f64>() * h.len();
        let x = man.probe_point(&unit_cube(&mut rng, m));
        let v = random_unit(man, t, &x, &mut rng)?;
        let sample = man.metric_at(t, &x)?;
        let dgdt = v.components.dot(&(&sample.dgdt * &v.components));
        let g_vv = v.components.dot(&(&sample.g * &v.components));
        let ric = man.ricci(t, &v, &v)?;
        let nabla_z = if man.drift().is_zero() {
            0.0
        } else {
            let dz = man.covariant_drift_derivative(t, &v)?;
            man.inner(t, &dz, &v)?
        };
        let violation = 2.0 * nabla_z + dgdt - ric + k * g_vv;
        all.push(ConditionWitness {
            t,
            chart: x.chart,
            x: x.coords.as_slice().to_vec(),
            v: v.components.as_slice().to_vec(),
            violation,
        });
    }
    all.sort_by(|a, b| b.violation.total_cmp(&a.violation));
    let max_violation = all[0].violation;
    all.truncate(5);
    Ok(ConditionReport {
        k,
        sample_count,
        max_violation,
        witnesses: all,
    })
}

/// Tolerances for [`crosscheck_closed_forms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrosscheckTolerances {
    pub exp: f64,
    pub distance: f64,
    pub transport: f64,
    pub ricci: f64,
    pub christoffel: f64,
}

impl Default for CrosscheckTolerances {
    fn default() -> Self {
        Self {
            exp: 1e-5,
            distance: 1e-6,
            transport: 1e-5,
            ricci: 1e-5,
            christoffel: 1e-6,
        }
    }
}

/// Largest closed-form vs numeric discrepancy per operation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub probes: usize,
    pub exp: f64,
    pub distance: f64,
    pub transport: f64,
    pub ricci: f64,
    pub christoffel: f64,
    /// Largest deviation from 1 of `|γ̇|` over geodesic endpoints (both routes).
    pub unit_speed: f64,
    /// Largest relative change of `|v|` under transport.
    pub transport_isometry: f64,
    pub tolerances: CrosscheckTolerances,
}

impl CrosscheckReport {
    pub fn passes(&self) -> bool {
        let t = &self.tolerances;
        self.exp <= t.exp
            && self.distance <= t.distance
            && self.transport <= t.transport
            && self.ricci <= t.ricci
            && self.christoffel <= t.christoffel
            && self.unit_speed <= t.transport
            && self.transport_isometry <= t.transport
    }
}

/// Compare every closed form of `man` with the numeric route on random probes.
///
/// For models without closed forms both routes coincide and the report is all zeros.
pub fn crosscheck_closed_forms(man: &TimeDependentManifold, probes: usize, seed: u64) -> Result<CrosscheckReport> {
    let num = man.numeric();
    let h = man.horizon();
    let m = man.dim();
    let mut rng = stream(seed, tags::PROBES, 0);
    let mut rep = CrosscheckReport {
        probes,
        exp: 0.0,
        distance: 0.0,
        transport: 0.0,
        ricci: 0.0,
        christoffel: 0.0,
        unit_speed: 0.0,
        transport_isometry: 0.0,
        tolerances: CrosscheckTolerances::default(),
    };
    for _ in 0..probes {
        let t = h.t1 + rng.random::<f64>() * h.len();
        let x = man.probe_point(&unit_cube(&mut rng, m));

        let c_closed = man.christoffel(t, &x)?;
        let c_num = num.christoffel(t, &x)?;
        rep.christoffel = rep.christoffel.max(c_closed.max_abs_diff(&c_num));

        let u = random_unit(man, t, &x, &mut rng)?;
        let w = random_unit(man, t, &x, &mut rng)?;
        let r_closed = man.ricci(t, &u, &w)?;
        let r_num = num.ricci(t, &u, &w)?;
        rep.ricci = rep.ricci.max((r_closed - r_num).abs());

        // a geodesic of length in (0.1, 1.1)
        let len = 0.1 + rng.random::<f64>();
        let v = u.scaled(len);
        let y_closed = man.exp_map(t, &v)?;
        let y_num = num.exp_map(t, &v)?;
        let y_num = man.same_chart(&y_num, y_closed.chart)?;
        rep.exp = rep.exp.max((&y_closed.coords - &y_num.coords).amax());

        let d_closed = man.distance(t, &x, &y_closed)?;
        let g_num = num.minimal_geodesic(t, &x, &man.same_chart(&y_closed, x.chart)?)?;
        rep.distance = rep.distance.max((d_closed - g_num.length).abs());
        rep.distance = rep.distance.max((d_closed - len).abs());

        let g_closed = man.minimal_geodesic(t, &x, &y_closed)?;
        for vel in [&g_closed.start_velocity, &g_closed.end_velocity, &g_num.start_velocity, &g_num.end_velocity] {
            rep.unit_speed = rep.unit_speed.max((man.norm(t, vel)? - 1.0).abs());
        }

        let tr_closed = man.parallel_transport(t, &g_closed, &w)?;
        let tr_num = num.parallel_transport(t, &g_num, &w)?;
        let tr_num = man
            .model()
            .vector_to_chart(&tr_num, tr_closed.base.chart)
            .ok_or_else(|| Error::Domain("transported vector not representable".into()))?;
        rep.transport = rep.transport.max((&tr_closed.components - &tr_num.components).amax());
        for tr in [&tr_closed, &tr_num] {
            rep.transport_isometry = rep.transport_isometry.max((man.norm(t, tr)? - 1.0).abs());
        }
    }
    Ok(rep)
}

/// Random probe points for sampling-based checks (κ estimation, reports).
pub fn probe_points(man: &TimeDependentManifold, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = stream(seed, tags::PROBES, 1);
    (0..count).map(|_| man.probe_point(&unit_cube(&mut rng, man.dim()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_brf() -> TimeDependentManifold {
        build(&ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn euclidean_distance_is_static() {
        let man = build(&ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0)).unwrap();
        let x = Point::from_slice(0, &[0.0, 0.0]);
        let y = Point::from_slice(0, &[1.0, 0.0]);
        for t in [0.0, 0.5, 1.0] {
            assert!((man.distance(t, &x, &y).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_ricci_sphere_scales_distances() {
        let man = sphere_brf();
        let north = Point::from_slice(0, &[0.0, 0.0]);
        let equator = Point::from_slice(0, &[1.0, 0.0]);
        let half = std::f64::consts::FRAC_PI_2;
        for (t, c) in [(0.0, 1.0), (0.5, 1.5), (1.0, 2.0)] {
            let d = man.distance(t, &north, &equator).unwrap();
            assert!((d - f64::sqrt(c) * half).abs() < 1e-12, "t={t}: {d}");
        }
    }

    #[test]
    fn condition_examples() {
        let eu = build(&ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0)).unwrap();
        assert!(verify_condition(&eu, 0.0, 50, 1).unwrap().max_violation.abs() < 1e-9);
        let rep = verify_condition(&sphere_brf(), 0.0, 50, 1).unwrap();
        assert!(rep.max_violation.abs() < 1e-6, "{}", rep.max_violation);
        let st = build(&ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0)).unwrap();
        // ∂t g = 0 while Ric = g: the condition holds with slack 1 at k = 0 ...
        let rep = verify_condition(&st, 0.0, 50, 1).unwrap();
        assert!((rep.max_violation + 1.0).abs() < 1e-9);
        // ... and fails once k exceeds the Ricci lower bound
        let rep = verify_condition(&st, 2.0, 50, 1).unwrap();
        assert!((rep.max_violation - 1.0).abs() < 1e-9);
        assert!(!rep.witnesses.is_empty());
    }

    #[test]
    fn hyperbolic_scaled_satisfies_its_condition() {
        let spec = ModelSpec::new(ModelKind::HyperbolicScaled, 3, 0.0, 1.0).with_param("k", 0.5);
        let man = build(&spec).unwrap();
        let rep = verify_condition(&man, 0.5, 40, 3).unwrap();
        assert!(rep.max_violation.abs() < 1e-9, "{}", rep.max_violation);
    }

    #[test]
    fn confining_drift_enters_condition() {
        let spec = ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0).with_drift(DriftSpec::Confining {
            lambda: 0.5,
            center: None,
        });
        let man = build(&spec).unwrap();
        // 2(∇Z)♭ = −2λ g = −g
        let rep = verify_condition(&man, 0.0, 20, 0).unwrap();
        assert!((rep.max_violation + 1.0).abs() < 1e-12);
        assert!(verify_condition(&man, 1.0, 20, 0).unwrap().max_violation.abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let bad = ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0).with_param("c0", -1.0);
        match build(&bad) {
            Err(Error::InvalidSpec { field, .. }) => assert_eq!(field, "model.params.c0"),
            other => panic!("{other:?}"),
        }
        let bad = ModelSpec::new(ModelKind::HyperbolicScaled, 3, 0.0, 1.0).with_param("c0", 1.0);
        assert!(matches!(build(&bad), Err(Error::InvalidSpec { .. })));
        let bad = ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0).with_param("lambda", 1.0);
        assert!(matches!(build(&bad), Err(Error::InvalidSpec { .. })));
        let bad = ModelSpec::new(ModelKind::ChartGeneric, 2, 0.0, 1.0);
        assert!(matches!(build(&bad), Err(Error::InvalidSpec { .. })));
        let bad = ModelSpec::new(ModelKind::Euclidean, 2, 1.0, 1.0);
        assert!(matches!(build(&bad), Err(Error::InvalidSpec { .. })));
    }

    #[test]
    fn spec_rejects_unknown_keys() {
        let json = r#"{"kind":"euclidean","dim":2,"horizon":[0,1],"colour":"red"}"#;
        assert!(serde_json::from_str::<ModelSpec>(json).is_err());
        let json = r#"{"kind":"euclidean","dim":2,"horizon":[0,1],"drift":{"kind":"confining","lambda":1}}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        assert!(build(&spec).is_ok());
    }

    #[test]
    fn crosscheck_sphere_small() {
        let rep = crosscheck_closed_forms(&sphere_brf(), 5, 11).unwrap();
        assert!(rep.passes(), "{rep:?}");
    }
}
