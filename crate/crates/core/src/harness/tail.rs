use serde::Serialize;

use super::{check_condition, rung_tag, ConditionSummary, Engine, ExperimentConfig};
use crate::comparison::coupling_bound;
use crate::coupling::{coupling_tail, CouplingDiagnostics, CouplingMode, CoupledWalker};
use crate::error::{Error, Result};
use crate::rng::{stream, tags};

/// One `(α, T)` cell of a tail experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub alpha: f64,
    pub t: f64,
    pub trials: usize,
    pub uncoupled: usize,
    /// Empirical `P[τ* > T]`.
    pub tail: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub halfwidth: f64,
    /// `χ(a / 2√β(k, T − T1))`.
    pub bound: f64,
    /// `tail ≤ bound + 3·halfwidth`.
    pub pass: bool,
    pub delta_couple: f64,
    /// Fraction of trials coupled during the last `α²` before `T`.
    pub last_step_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub model: String,
    pub dim: usize,
    /// `d_{g(T1)}(x1, x2)`.
    pub a: f64,
    pub k: f64,
    pub rows: Vec<TailRow>,
    pub condition: ConditionSummary,
    pub warnings: Vec<String>,
    pub diagnostics: CouplingDiagnostics,
    /// Trials coupled by the crossing rule rather than the distance threshold.
    pub crossing_couplings: usize,
    pub pass: bool,
}

struct TrialOutcome {
    coupling_time: Option<f64>,
    diagnostics: CouplingDiagnostics,
}

/// Estimate `P[τ* > T]` for the reflection coupling at each `α` rung and report time.
pub fn run_tail_experiment(cfg: &ExperimentConfig) -> Result<TailReport> {
    cfg.validate()?;
    if cfg.coupling.kind != CouplingMode::Reflection {
        return Err(Error::invalid("coupling.kind", "tail experiments need the reflection coupling"));
    }
    let man = cfg.manifold()?;
    let (x1, x2) = cfg.start_points(&man)?;
    let t1 = man.horizon().t1;
    let a = man.distance(t1, &x1, &x2)?;
    let (condition, mut warnings) = check_condition(cfg, &man)?;
    let engine = Engine::new(cfg.workers)?;
    let report_times = cfg.report_times();
    let t_max = *report_times.last().expect("nonempty");
    let mut rows = Vec::new();
    let mut diagnostics = CouplingDiagnostics::default();
    let mut crossing_couplings = 0;
    for (rung, &alpha) in cfg.alphas.iter().enumerate() {
        let kind = cfg.coupling_kind(alpha);
        let tag = rung_tag(tags::COUPLED, rung);
        let outcomes = engine.run(cfg.trials, |i| {
            let mut rng = stream(cfg.seed, tag, i as u64);
            let mut w = CoupledWalker::new(&man, x1.clone(), x2.clone(), alpha, kind)?;
            // nothing changes after coupling, and nothing past the last report time is needed
            while !w.finished() && !w.is_coupled() && w.grid().time(w.steps_done()) < t_max {
                if let Some(r) = w.step(&mut rng) {
                    r?;
                }
            }
            Ok(TrialOutcome {
                coupling_time: w.coupling_time(),
                diagnostics: *w.diagnostics(),
            })
        })?;
        let times: Vec<Option<f64>> = outcomes.iter().map(|o| o.coupling_time).collect();
        for o in &outcomes {
            diagnostics.merge(&o.diagnostics);
            crossing_couplings += o.diagnostics.coupled_by_crossing as usize;
        }
        for est in coupling_tail(&times, &report_times)? {
            let bound = coupling_bound(a, cfg.k, est.t - t1);
            let window = est.t - alpha * alpha;
            let late = times.iter().filter(|c| c.is_some_and(|c| c > window && c <= est.t)).count();
            rows.push(TailRow {
                alpha,
                t: est.t,
                trials: est.trials,
                uncoupled: est.uncoupled,
                tail: est.tail,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
                halfwidth: est.halfwidth(),
                bound,
                pass: est.tail <= bound + 3.0 * est.halfwidth(),
                delta_couple: kind.delta_couple,
                last_step_fraction: late as f64 / est.trials as f64,
            });
        }
    }
    if diagnostics.near_cut_steps > 0 {
        warnings.push(format!("{} steps had the particles near each other's cut locus", diagnostics.near_cut_steps));
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(TailReport {
        model: cfg.model.kind.name().to_string(),
        dim: man.dim(),
        a,
        k: cfg.k,
        rows,
        condition,
        warnings,
        diagnostics,
        crossing_couplings,
        pass,
    })
}
