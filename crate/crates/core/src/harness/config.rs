use serde::{Deserialize, Serialize};

use crate::comparison::{c0_from_c1, BFunction, RadialDriftSpec};
use crate::coupling::{CouplingKind, CouplingMode};
use crate::error::{Error, Result};
use crate::geometry::{Point, TangentVector, TimeDependentManifold};
use crate::models::{build, ModelSpec};

fn default_alphas() -> Vec<f64> {
    vec![0.05]
}

fn default_trials() -> usize {
    1000
}

fn default_condition_samples() -> usize {
    200
}

fn default_true() -> bool {
    true
}

/// Which coupling to run and when to declare the particles coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub kind: CouplingMode,
    /// Fixed threshold; by default `2·0.5826·α` for reflection.
    pub delta_couple: Option<f64>,
    #[serde(default = "default_true")]
    pub detect_crossing: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            kind: CouplingMode::Reflection,
            delta_couple: None,
            detect_crossing: true,
        }
    }
}

/// Starting points of the two particles. `x1` defaults to the base point and
/// `x2` to the point at `g(T1)`-distance `a` along the first frame vector at `x1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartSpec {
    pub x1: Option<Vec<f64>>,
    pub x2: Option<Vec<f64>>,
    pub a: f64,
}

impl Default for StartSpec {
    fn default() -> Self {
        Self { x1: None, x2: None, a: 1.0 }
    }
}

/// Bounded test function `f` for the gradient estimate, evaluated on the
/// model's embedding coordinates (chart coordinates for flat space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    Constant {
        value: f64,
    },
    /// `sign(p_axis)`.
    Sign {
        #[serde(default)]
        axis: usize,
    },
    /// `1{p_axis > 0}`.
    HalfSpace {
        #[serde(default)]
        axis: usize,
    },
}

impl Observable {
    /// `osc(f) = sup f − inf f`.
    pub fn oscillation(&self) -> f64 {
        match self {
            Observable::Constant { .. } => 0.0,
            Observable::Sign { .. } => 2.0,
            Observable::HalfSpace { .. } => 1.0,
        }
    }

    fn axis(&self) -> Option<usize> {
        match self {
            Observable::Constant { .. } => None,
            Observable::Sign { axis } | Observable::HalfSpace { axis } => Some(*axis),
        }
    }

    pub fn eval(&self, man: &TimeDependentManifold, x: &Point) -> f64 {
        let coord = |axis: usize| man.embed(x).map_or(x.coords[axis.min(x.dim() - 1)], |p| p[axis]);
        match self {
            Observable::Constant { value } => *value,
            Observable::Sign { axis } => {
                let c = coord(*axis);
                if c > 0.0 {
                    1.0
                } else if c < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Observable::HalfSpace { axis } => (coord(*axis) > 0.0) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientSettings {
    /// Probe spacings `h = d_{g(T1)}(x, y)`.
    pub spacings: Vec<f64>,
    /// Midpoint of the probe pairs; the base point by default.
    pub center: Option<Vec<f64>>,
    /// Trials per probe for the independent two-point estimator (default: `trials`).
    pub direct_trials: Option<usize>,
    /// Evaluation time `t` (default `T2`).
    pub time: Option<f64>,
}

impl Default for GradientSettings {
    fn default() -> Self {
        Self {
            spacings: vec![0.2, 0.1, 0.05],
            center: None,
            direct_trials: None,
            time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionSettings {
    /// Increases at or below this count as zero.
    pub exact_tol: f64,
    /// Accepted band for the ratio of 99th percentiles between rungs, as
    /// multiples of the `α` ratio.
    pub ratio_band: [f64; 2],
}

impl Default for ContractionSettings {
    fn default() -> Self {
        Self {
            exact_tol: 1e-12,
            ratio_band: [0.75, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialSettings {
    pub b: BFunction,
    /// Drift constant; by default computed from `c1` and `r0`.
    pub c0: Option<f64>,
    pub c1: f64,
    pub r0: f64,
    /// Exceedance margin in `d > ρ + margin`.
    pub margin: f64,
}

impl Default for RadialSettings {
    fn default() -> Self {
        Self {
            b: BFunction::Zero,
            c0: None,
            c1: 0.0,
            r0: 0.5,
            margin: 0.1,
        }
    }
}

impl RadialSettings {
    pub fn drift_spec(&self) -> Result<RadialDriftSpec> {
        let c0 = self.c0.unwrap_or_else(|| c0_from_c1(self.c1, self.r0));
        RadialDriftSpec::new(self.b.clone(), c0, self.r0)
    }
}

/// Everything an experiment needs. Deserialized from the config file with
/// unknown keys rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// `α` ladder, strictly decreasing.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Trials per rung.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coupling: CouplingConfig,
    /// Times `T` for tail reports (default `[T2]`).
    #[serde(default)]
    pub report_times: Vec<f64>,
    /// Curvature-condition constant.
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub observable: Option<Observable>,
    #[serde(default)]
    pub gradient: GradientSettings,
    #[serde(default)]
    pub contraction: ContractionSettings,
    #[serde(default)]
    pub radial: RadialSettings,
    #[serde(default = "default_condition_samples")]
    pub condition_samples: usize,
    /// Worker threads; not part of the configuration identity.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            alphas: default_alphas(),
            trials: default_trials(),
            seed: 0,
            coupling: CouplingConfig::default(),
            report_times: Vec::new(),
            k: 0.0,
            start: StartSpec::default(),
            observable: None,
            gradient: GradientSettings::default(),
            contraction: ContractionSettings::default(),
            radial: RadialSettings::default(),
            condition_samples: default_condition_samples(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.trials < 100 {
            return Err(Error::invalid("trials", format!("need at least 100 trials, got {}", self.trials)));
        }
        if self.alphas.is_empty() {
            return Err(Error::invalid("alphas", "empty ladder"));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("alphas", "every α must be positive"));
        }
        if self.alphas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid("alphas", "ladder must be strictly decreasing"));
        }
        let [t1, t2] = self.model.horizon;
        for &t in &self.report_times {
            if !(t > t1 && t <= t2) {
                return Err(Error::invalid("report_times", format!("{t} outside ({t1}, {t2}]")));
            }
        }
        if self.report_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("report_times", "must be strictly increasing"));
        }
        if let Some(d) = self.coupling.delta_couple {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid("coupling.delta_couple", "must be positive"));
            }
        }
        if !self.k.is_finite() {
            return Err(Error::invalid("k", "must be finite"));
        }
        if !(self.start.a >= 0.0 && self.start.a.is_finite()) {
            return Err(Error::invalid("start.a", "must be nonnegative"));
        }
        for (name, p) in [("start.x1", &self.start.x1), ("start.x2", &self.start.x2), ("gradient.center", &self.gradient.center)] {
            if let Some(p) = p {
                if p.len() != self.model.dim {
                    return Err(Error::invalid(name, format!("expected {} coordinates", self.model.dim)));
                }
            }
        }
        if self.gradient.spacings.is_empty() || self.gradient.spacings.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::invalid("gradient.spacings", "need positive spacings"));
        }
        if let Some(t) = self.gradient.time {
            if !(t > t1 && t <= t2) {
                return Err(Error::invalid("gradient.time", format!("{t} outside ({t1}, {t2}]")));
            }
        }
        if let Some(n) = self.gradient.direct_trials {
            if n < 100 {
                return Err(Error::invalid("gradient.direct_trials", "need at least 100 trials"));
            }
        }
        if let Some(obs) = &self.observable {
            let limit = self.model.dim + 1;
            if obs.axis().is_some_and(|a| a >= limit) {
                return Err(Error::invalid("observable.axis", format!("must be below {limit}")));
            }
        }
        if self.condition_samples == 0 {
            return Err(Error::invalid("condition_samples", "need at least one sample"));
        }
        let [lo, hi] = self.contraction.ratio_band;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid("contraction.ratio_band", "need 0 < lo < hi"));
        }
        self.radial.drift_spec().map_err(|e| match e {
            Error::InvalidSpec { field, message } => Error::InvalidSpec {
                field: format!("radial.{field}"),
                message,
            },
            other => other,
        })?;
        if let Some(0) = self.workers {
            return Err(Error::invalid("workers", "need at least one worker"));
        }
        Ok(())
    }

    pub fn manifold(&self) -> Result<TimeDependentManifold> {
        build(&self.model)
    }

    /// `report_times`, or `[T2]` when none are given.
    pub fn report_times(&self) -> Vec<f64> {
        if self.report_times.is_empty() {
            vec![self.model.horizon[1]]
        } else {
            self.report_times.clone()
        }
    }

    pub fn coupling_kind(&self, alpha: f64) -> CouplingKind {
        let base = match self.coupling.kind {
            CouplingMode::Reflection => CouplingKind::reflection(alpha),
            CouplingMode::Parallel => CouplingKind::parallel(),
        };
        let kind = match self.coupling.delta_couple {
            Some(d) => base.with_delta(d),
            None => base,
        };
        CouplingKind {
            detect_crossing: self.coupling.detect_crossing && kind.detect_crossing,
            ..kind
        }
    }

    /// `(x1, x2)` per [`StartSpec`].
    pub fn start_points(&self, man: &TimeDependentManifold) -> Result<(Point, Point)> {
        let x1 = match &self.start.x1 {
            Some(c) => Point::from_slice(0, c),
            None => man.base_point().clone(),
        };
        let x2 = match &self.start.x2 {
            Some(c) => Point::from_slice(0, c),
            None => offset(man, &x1, self.start.a)?,
        };
        Ok((x1, x2))
    }
}

/// `exp_x^{(T1)}(s e₁)` with `e₁` the first orthonormal frame vector at `x`.
pub(crate) fn offset(man: &TimeDependentManifold, x: &Point, s: f64) -> Result<Point> {
    let t1 = man.horizon().t1;
    let frame = man.orthonormal_frame(t1, x)?;
    let e1: TangentVector = frame.vectors().swap_remove(0);
    let p = man.exp_map(t1, &e1.scaled(s))?;
    Ok(man.normalize_chart(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::new(ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0))
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.trials = 50;
        assert!(matches!(c.validate(), Err(Error::InvalidSpec { field, .. }) if field == "trials"));
        let mut c = cfg();
        c.alphas = vec![0.02, 0.04];
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.report_times = vec![1.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_start_is_at_distance_a() {
        let c = cfg();
        let man = c.manifold().unwrap();
        let (x1, x2) = c.start_points(&man).unwrap();
        assert!((man.distance(0.0, &x1, &x2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"model":{"kind":"euclidean","dim":2,"horizon":[0,1]},"trails":100}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
        let json = r#"{"model":{"kind":"euclidean","dim":2,"horizon":[0,1]},"workers":2}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }
}
