use serde::Serialize;

use super::{check_condition, quantile, rung_tag, ConditionSummary, Engine, ExperimentConfig};
use crate::coupling::{CouplingMode, CoupledWalker};
use crate::error::{Error, Result};
use crate::rng::{stream, tags};

/// Increase statistics of `w(t) = e^{k(t−T1)/2} d_{g(t)}(X₁, X₂)` at one `α` rung.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionRow {
    pub alpha: f64,
    pub trials: usize,
    /// 99th percentile over paths of `max_n [w(t_{n+1}) − w(t_n)]₊`.
    pub step_p99: f64,
    /// 99th percentile over paths of `max_n w(t_n) − w(T1)`, floored at 0.
    pub path_p99: f64,
    pub path_max: f64,
    /// `path_p99 / α`.
    pub constant: f64,
    /// `path_p99` of the previous rung over this one.
    pub ratio: Option<f64>,
    /// Accepted range for `ratio`.
    pub band: Option<[f64; 2]>,
    /// All increases vanish (up to the exact tolerance).
    pub exact: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub model: String,
    pub k: f64,
    /// `d_{g(T1)}(x1, x2)`.
    pub a: f64,
    pub rows: Vec<ContractionRow>,
    pub condition: ConditionSummary,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Check that the parallel coupling contracts `d` at rate `k/2` up to an `O(α)` error.
pub fn run_contraction_experiment(cfg: &ExperimentConfig) -> Result<ContractionReport> {
    cfg.validate()?;
    if cfg.coupling.kind != CouplingMode::Parallel {
        return Err(Error::invalid("coupling.kind", "contraction experiments need the parallel coupling"));
    }
    let man = cfg.manifold()?;
    let (x1, x2) = cfg.start_points(&man)?;
    let t1 = man.horizon().t1;
    let a = man.distance(t1, &x1, &x2)?;
    let (condition, warnings) = check_condition(cfg, &man)?;
    let engine = Engine::new(cfg.workers)?;
    let tol = cfg.contraction.exact_tol;
    let mut rows: Vec<ContractionRow> = Vec::new();
    for (rung, &alpha) in cfg.alphas.iter().enumerate() {
        let kind = cfg.coupling_kind(alpha);
        let tag = rung_tag(tags::COUPLED, rung);
        let stats = engine.run(cfg.trials, |i| {
            let mut rng = stream(cfg.seed, tag, i as u64);
            let mut w = CoupledWalker::new(&man, x1.clone(), x2.clone(), alpha, kind)?;
            let weight = |t: f64| (0.5 * cfg.k * (t - t1)).exp();
            let w0 = w.distance();
            let mut prev = w0;
            let (mut step_max, mut top) = (0.0f64, w0);
            while let Some(r) = w.step(&mut rng) {
                let rec = r?;
                let cur = weight(rec.t_next) * rec.distance;
                step_max = step_max.max(cur - prev);
                top = top.max(cur);
                prev = cur;
            }
            Ok((step_max, top - w0))
        })?;
        let steps: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let paths: Vec<f64> = stats.iter().map(|s| s.1).collect();
        let path_max = paths.iter().copied().fold(0.0, f64::max);
        let step_p99 = quantile(&steps, 0.99);
        let path_p99 = quantile(&paths, 0.99);
        let exact = path_max <= tol && steps.iter().all(|s| *s <= tol);
        let (ratio, band) = match rows.last() {
            Some(prev) if !exact => {
                let r = prev.alpha / alpha;
                let [lo, hi] = cfg.contraction.ratio_band;
                (Some(prev.path_p99 / path_p99), Some([lo * r, hi * r]))
            }
            _ => (None, None),
        };
        let pass = exact || match (ratio, band) {
            (Some(q), Some([lo, hi])) => q >= lo && q <= hi,
            _ => true,
        };
        rows.push(ContractionRow {
            alpha,
            trials: cfg.trials,
            step_p99,
            path_p99,
            path_max,
            constant: path_p99 / alpha,
            ratio,
            band,
            exact,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ContractionReport {
        model: cfg.model.kind.name().to_string(),
        k: cfg.k,
        a,
        rows,
        condition,
        warnings,
        pass,
    })
}
