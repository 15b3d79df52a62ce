//! Monte Carlo experiments over many independent trials.
//!
//! Every trial draws from its own random stream, indexed by the master seed,
//! the experiment, the `α` rung and the trial number, and results are
//! aggregated in trial order. Reports are therefore identical for any number
//! of workers.

mod config;
mod contraction;
mod engine;
mod gradient;
mod stats;
mod tail;
mod walks;

pub use config::{
    ContractionSettings, CouplingConfig, ExperimentConfig, GradientSettings, Observable, RadialSettings, StartSpec,
};
pub use contraction::{run_contraction_experiment, ContractionReport, ContractionRow};
pub use engine::Engine;
pub use gradient::{run_gradient_experiment, GradientReport, GradientRow};
pub use stats::{ks_normal, ks_one_sample, ks_two_sample, mean_and_se, quantile, wilson_interval};
pub use tail::{run_tail_experiment, TailReport, TailRow};
pub use walks::{
    run_invariance_experiment, run_marginal_experiment, run_radial_experiment, InvarianceReport, InvarianceRow,
    MarginalReport, MarginalRow, RadialReport, RadialRow,
};

use serde::Serialize;

use crate::models::ConditionReport;

/// Condition check attached to experiment reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub k: f64,
    pub samples: usize,
    pub max_violation: f64,
    pub holds: bool,
}

/// Sampled violations up to this size count as the condition holding.
pub const CONDITION_TOL: f64 = 1e-6;

impl From<&ConditionReport> for ConditionSummary {
    fn from(r: &ConditionReport) -> Self {
        Self {
            k: r.k,
            samples: r.sample_count,
            max_violation: r.max_violation,
            holds: r.holds(CONDITION_TOL),
        }
    }
}

/// Stream tag for experiment `tag` at `α` rung `rung`.
pub(crate) fn rung_tag(tag: u64, rung: usize) -> u64 {
    tag | ((rung as u64 + 1) << 32)
}

/// Sample the curvature condition for `cfg.k`; a failure becomes a warning.
pub(crate) fn check_condition(
    cfg: &ExperimentConfig,
    man: &crate::geometry::TimeDependentManifold,
) -> crate::error::Result<(ConditionSummary, Vec<String>)> {
    let rep = crate::models::verify_condition(man, cfg.k, cfg.condition_samples, cfg.seed)?;
    let summary = ConditionSummary::from(&rep);
    let mut warnings = Vec::new();
    if !summary.holds {
        warnings.push(format!(
            "curvature condition fails for k = {}: sampled violation {:.3e}",
            cfg.k, summary.max_violation
        ));
    }
    Ok((summary, warnings))
}
