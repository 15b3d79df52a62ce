use serde::Serialize;

use super::config::offset;
use super::{check_condition, mean_and_se, rung_tag, ConditionSummary, Engine, ExperimentConfig, Observable};
use crate::comparison::beta;
use crate::coupling::CoupledWalker;
use crate::error::{Error, Result};
use crate::geometry::{Point, TimeDependentManifold};
use crate::models::build;
use crate::rng::{stream, tags};
use crate::walk::Walker;

/// One probe pair `(x, y)` at `g(T1)`-spacing `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientRow {
    pub alpha: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `d_{g(T1)}(x, y)`.
    pub distance: f64,
    pub t: f64,
    /// `|E[f(X₁(t)) − f(X₂(t))]| / d` from the reflection coupling.
    pub coupled_quotient: f64,
    pub coupled_se: f64,
    /// `P_t f(x)` and `P_t f(y)` from independent walks.
    pub direct_px: f64,
    pub direct_py: f64,
    /// `|P_t f(x) − P_t f(y)| / d` from the independent estimates.
    pub direct_quotient: f64,
    pub direct_se: f64,
    /// `osc(f) / √(2π β(k, t − T1))`.
    pub bound: f64,
    /// `coupled_quotient ≤ bound + 3·coupled_se`.
    pub bound_ok: bool,
    /// The two estimators agree within three combined standard errors.
    pub estimators_agree: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientReport {
    pub model: String,
    pub observable: Observable,
    pub oscillation: f64,
    pub k: f64,
    pub rows: Vec<GradientRow>,
    pub condition: ConditionSummary,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Compare the coupled and direct estimates of `|P_t f(x) − P_t f(y)| / d(x, y)`
/// against the gradient bound at each probe spacing and `α` rung.
pub fn run_gradient_experiment(cfg: &ExperimentConfig) -> Result<GradientReport> {
    cfg.validate()?;
    let observable = cfg
        .observable
        .clone()
        .ok_or_else(|| Error::invalid("observable", "the gradient experiment needs an observable"))?;
    let full = cfg.manifold()?;
    let (condition, mut warnings) = check_condition(cfg, &full)?;
    let t1 = full.horizon().t1;
    let t = cfg.gradient.time.unwrap_or(full.horizon().t2);
    let man = if t < full.horizon().t2 {
        let mut spec = cfg.model.clone();
        spec.horizon[1] = t;
        build(&spec)?
    } else {
        full
    };
    let center = match &cfg.gradient.center {
        Some(c) => Point::from_slice(0, c),
        None => man.base_point().clone(),
    };
    let osc = observable.oscillation();
    let bound = osc / (2.0 * std::f64::consts::PI * beta(cfg.k, t - t1)).sqrt();
    let engine = Engine::new(cfg.workers)?;
    let direct_trials = cfg.gradient.direct_trials.unwrap_or(cfg.trials);
    let mut rows = Vec::new();
    for (rung, &alpha) in cfg.alphas.iter().enumerate() {
        let kind = cfg.coupling_kind(alpha);
        for (probe, &h) in cfg.gradient.spacings.iter().enumerate() {
            let x = offset(&man, &center, 0.5 * h)?;
            let y = offset(&man, &center, -0.5 * h)?;
            let d = man.distance(t1, &x, &y)?;
            if d <= 0.0 {
                return Err(Error::invalid("gradient.spacings", "probe points coincide"));
            }
            if d <= kind.delta_couple {
                warnings.push(format!(
                    "alpha={alpha}, h={h}: distance {d:.4} is within the coupling threshold {:.4}, so the pair starts coupled",
                    kind.delta_couple
                ));
            }
            let index = |i: usize| ((probe as u64) << 40) | i as u64;
            let tag = rung_tag(tags::COUPLED, rung);
            let coupled = engine.run(cfg.trials, |i| {
                let mut rng = stream(cfg.seed, tag, index(i));
                let mut w = CoupledWalker::new(&man, x.clone(), y.clone(), alpha, kind)?;
                while !w.finished() && !w.is_coupled() {
                    if let Some(r) = w.step(&mut rng) {
                        r?;
                    }
                }
                if w.is_coupled() {
                    return Ok(0.0);
                }
                let (p1, p2) = w.positions();
                Ok((observable.eval(&man, p1) - observable.eval(&man, p2)) / d)
            })?;
            let (c_mean, c_se) = mean_and_se(&coupled);
            let px = terminal_values(&engine, &man, &observable, &x, alpha, cfg.seed, rung_tag(tags::GRADIENT_X, rung), probe, direct_trials)?;
            let py = terminal_values(&engine, &man, &observable, &y, alpha, cfg.seed, rung_tag(tags::GRADIENT_Y, rung), probe, direct_trials)?;
            let (mx, sx) = mean_and_se(&px);
            let (my, sy) = mean_and_se(&py);
            let d_mean = (mx - my) / d;
            let d_se = (sx * sx + sy * sy).sqrt() / d;
            let bound_ok = c_mean.abs() <= bound + 3.0 * c_se;
            let estimators_agree = (c_mean - d_mean).abs() <= 3.0 * (c_se * c_se + d_se * d_se).sqrt();
            rows.push(GradientRow {
                alpha,
                h,
                x: x.coords.iter().copied().collect(),
                y: y.coords.iter().copied().collect(),
                distance: d,
                t,
                coupled_quotient: c_mean.abs(),
                coupled_se: c_se,
                direct_px: mx,
                direct_py: my,
                direct_quotient: d_mean.abs(),
                direct_se: d_se,
                bound,
                bound_ok,
                estimators_agree,
                pass: bound_ok && estimators_agree,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(GradientReport {
        model: cfg.model.kind.name().to_string(),
        observable,
        oscillation: osc,
        k: cfg.k,
        rows,
        condition,
        warnings,
        pass,
    })
}

#[allow(clippy::too_many_arguments)]
fn terminal_values(
    engine: &Engine,
    man: &TimeDependentManifold,
    f: &Observable,
    x0: &Point,
    alpha: f64,
    seed: u64,
    tag: u64,
    probe: usize,
    trials: usize,
) -> Result<Vec<f64>> {
    engine.run(trials, |i| {
        let mut rng = stream(seed, tag, ((probe as u64) << 40) | i as u64);
        let end = Walker::new(man, x0.clone(), alpha)?.run_to_end(&mut rng)?;
        Ok(f.eval(man, &end))
    })
}
