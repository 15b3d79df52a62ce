use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExplosionRunConfig, GeometryCheckConfig};
use super::output::{cell, write_json, CsvTable, OutputEntry};
use crate::comparison::{non_explosion_test, ExplosionReport, ExplosionVerdict};
use crate::coupling::CouplingMode;
use crate::error::Result;
use crate::geometry::{kappa_bound_excess, kappa_estimate};
use crate::harness::{
    run_contraction_experiment, run_gradient_experiment, run_tail_experiment, ConditionSummary, ExperimentConfig,
    CONDITION_TOL,
};
use crate::models::{build, crosscheck_closed_forms, probe_points, verify_condition, ConditionReport, CrosscheckReport};

/// Relative slack allowed in the sampled two-sided metric bound.
pub const KAPPA_BOUND_TOL: f64 = 1e-9;

/// Where and how a command writes its outputs.
pub struct RunContext {
    pub out: PathBuf,
    pub config_hash: String,
    pub strict: bool,
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    config_hash: &'a str,
    config: &'a C,
    pass: bool,
    report: &'a R,
}

impl RunContext {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn report<C: Serialize, R: Serialize>(
        &self,
        command: &str,
        experiment: &str,
        config: &C,
        pass: bool,
        report: &R,
        outputs: &mut Vec<OutputEntry>,
    ) -> Result<()> {
        let name = format!("{experiment}_report.json");
        let env = Envelope {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.config_hash,
            config,
            pass,
            report,
        };
        write_json(&self.path(&name), &env)?;
        outputs.push(entry(experiment, "json", &name));
        Ok(())
    }

    fn table(&self, experiment: &str, name: &str, table: &CsvTable, outputs: &mut Vec<OutputEntry>) -> Result<()> {
        let file = format!("{name}.csv");
        table.write(&self.path(&file), &self.config_hash)?;
        outputs.push(entry(experiment, "csv", &file));
        Ok(())
    }
}

fn entry(experiment: &str, format: &str, file: &str) -> OutputEntry {
    OutputEntry {
        experiment: experiment.to_string(),
        format: format.to_string(),
        path: Path::new(file).to_path_buf(),
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryCheckReport {
    pub model: String,
    pub crosscheck: CrosscheckReport,
    pub crosscheck_pass: bool,
    pub condition: ConditionReport,
    pub condition_holds: bool,
    pub kappa: f64,
    /// Largest relative violation of the sampled two-sided metric bound at `kappa`.
    pub kappa_bound_excess: f64,
    pub kappa_bound_holds: bool,
    pub pass: bool,
}

/// Closed-form vs numeric probes, the curvature condition and the `κ` estimate for one model.
pub fn geometry_check(cfg: &GeometryCheckConfig) -> Result<GeometryCheckReport> {
    let man = build(&cfg.model)?;
    let crosscheck = crosscheck_closed_forms(&man, cfg.probes, cfg.seed)?;
    let condition = verify_condition(&man, cfg.k, cfg.condition_samples, cfg.seed)?;
    let region = probe_points(&man, cfg.kappa_points, cfg.seed);
    let h = man.horizon();
    let n = cfg.kappa_times - 1;
    let times: Vec<f64> = (0..=n).map(|i| h.t1 + h.len() * i as f64 / n as f64).collect();
    let kappa = kappa_estimate(&man, &region, &times)?;
    let excess = kappa_bound_excess(&man, &region, &times, kappa)?;
    let crosscheck_pass = crosscheck.passes();
    let condition_holds = condition.holds(CONDITION_TOL);
    let kappa_bound_holds = excess <= KAPPA_BOUND_TOL;
    Ok(GeometryCheckReport {
        model: cfg.model.kind.name().to_string(),
        crosscheck,
        crosscheck_pass,
        condition,
        condition_holds,
        kappa,
        kappa_bound_excess: excess,
        kappa_bound_holds,
        pass: crosscheck_pass && condition_holds && kappa_bound_holds,
    })
}

pub fn cmd_geometry_check(cfg: &GeometryCheckConfig, ctx: &RunContext) -> Result<Outcome> {
    let rep = geometry_check(cfg)?;
    let mut outputs = Vec::new();
    ctx.report("geometry-check", "geometry", cfg, rep.pass, &rep, &mut outputs)?;
    let mut t = CsvTable::new(
        "geometry-check results",
        &[
            ("check", "name of the checked quantity"),
            ("value", "measured value (largest discrepancy, sampled violation, or estimate)"),
            ("tolerance", "largest accepted value; empty for reported-only quantities"),
            ("pass", "value within tolerance"),
        ],
    );
    let c = &rep.crosscheck;
    let tol = &c.tolerances;
    for (name, value, limit) in [
        ("exp", c.exp, tol.exp),
        ("distance", c.distance, tol.distance),
        ("transport", c.transport, tol.transport),
        ("ricci", c.ricci, tol.ricci),
        ("christoffel", c.christoffel, tol.christoffel),
        ("unit_speed", c.unit_speed, tol.transport),
        ("transport_isometry", c.transport_isometry, tol.transport),
        ("condition_max_violation", rep.condition.max_violation, CONDITION_TOL),
        ("kappa_bound_excess", rep.kappa_bound_excess, KAPPA_BOUND_TOL),
    ] {
        t.push(vec![cell(name), cell(value), cell(limit), cell(value <= limit)]);
    }
    t.push(vec![cell("kappa"), cell(rep.kappa), String::new(), cell(true)]);
    ctx.table("geometry", "geometry_checks", &t, &mut outputs)?;
    let mut warnings = Vec::new();
    if !rep.condition_holds {
        let w = &rep.condition.witnesses[0];
        warnings.push(format!(
            "curvature condition fails for k = {}: violation {:.3e} at t = {}, x = {:?}, v = {:?}",
            cfg.k, w.violation, w.t, w.x, w.v
        ));
    }
    Ok(Outcome {
        pass: rep.pass,
        summary: format!(
            "geometry-check {}: {} crosscheck {}, condition max violation {:.3e}, kappa {:.6}",
            verdict(rep.pass),
            rep.model,
            verdict(rep.crosscheck_pass),
            rep.condition.max_violation,
            rep.kappa
        ),
        warnings,
        outputs,
    })
}

/// Under strict mode a failing curvature condition fails the run.
fn condition_ok(condition: &ConditionSummary, strict: bool) -> bool {
    !strict || condition.holds
}

pub fn cmd_couple(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome> {
    let mut outputs = Vec::new();
    match cfg.coupling.kind {
        CouplingMode::Reflection => {
            let rep = run_tail_experiment(cfg)?;
            let pass = rep.pass && condition_ok(&rep.condition, ctx.strict);
            let warnings = rep.warnings.clone();
            ctx.report("couple", "tail", cfg, pass, &rep, &mut outputs)?;
            let mut t = CsvTable::new(
                "coupling-time tail P[tau > T] against the comparison bound",
                &[
                    ("alpha", "walk scale; steps have duration alpha^2"),
                    ("T", "report time"),
                    ("tail", "fraction of trials not coupled by T"),
                    ("ci_lo", "Wilson 95% interval, lower end"),
                    ("ci_hi", "Wilson 95% interval, upper end"),
                    ("bound", "comparison bound for the tail at T"),
                    ("halfwidth", "half the Wilson interval width"),
                    ("trials", "number of coupled pairs"),
                    ("uncoupled", "pairs not coupled by T"),
                    ("delta_couple", "distance at which a pair is declared coupled"),
                    ("last_step_fraction", "fraction of trials that coupled in the last alpha^2 before T"),
                    ("pass", "tail <= bound + 3 * halfwidth"),
                ],
            );
            for r in &rep.rows {
                t.push(vec![
                    cell(r.alpha),
                    cell(r.t),
                    cell(r.tail),
                    cell(r.ci_lo),
                    cell(r.ci_hi),
                    cell(r.bound),
                    cell(r.halfwidth),
                    cell(r.trials),
                    cell(r.uncoupled),
                    cell(r.delta_couple),
                    cell(r.last_step_fraction),
                    cell(r.pass),
                ]);
            }
            ctx.table("tail", "tail", &t, &mut outputs)?;
            let worst = rep.rows.iter().map(|r| r.tail - r.bound).fold(f64::NEG_INFINITY, f64::max);
            Ok(Outcome {
                pass,
                summary: format!(
                    "couple {}: {} rows, largest tail - bound {worst:.4}",
                    verdict(pass),
                    rep.rows.len()
                ),
                warnings,
                outputs,
            })
        }
        CouplingMode::Parallel => {
            let rep = run_contraction_experiment(cfg)?;
            let pass = rep.pass && condition_ok(&rep.condition, ctx.strict);
            let warnings = rep.warnings.clone();
            ctx.report("couple", "contraction", cfg, pass, &rep, &mut outputs)?;
            let mut t = CsvTable::new(
                "increase of w(t) = exp(k (t - T1) / 2) * distance under the parallel coupling",
                &[
                    ("alpha", "walk scale"),
                    ("trials", "number of coupled pairs"),
                    ("step_p99", "99th percentile over paths of the largest one-step increase of w"),
                    ("path_p99", "99th percentile over paths of max_t w(t) - w(T1)"),
                    ("path_max", "largest max_t w(t) - w(T1) over all paths"),
                    ("constant", "path_p99 / alpha"),
                    ("ratio", "path_p99 of the previous rung over this rung; empty on the first or exact rungs"),
                    ("band_lo", "smallest accepted ratio"),
                    ("band_hi", "largest accepted ratio"),
                    ("exact", "all increases below the exact tolerance"),
                    ("pass", "exact, or ratio inside the band"),
                ],
            );
            for r in &rep.rows {
                t.push(vec![
                    cell(r.alpha),
                    cell(r.trials),
                    cell(r.step_p99),
                    cell(r.path_p99),
                    cell(r.path_max),
                    cell(r.constant),
                    cell(r.ratio),
                    cell(r.band.map(|b| b[0])),
                    cell(r.band.map(|b| b[1])),
                    cell(r.exact),
                    cell(r.pass),
                ]);
            }
            ctx.table("contraction", "contraction", &t, &mut outputs)?;
            Ok(Outcome {
                pass,
                summary: format!("couple {}: contraction over {} rungs", verdict(pass), rep.rows.len()),
                warnings,
                outputs,
            })
        }
    }
}

pub fn cmd_gradient(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome> {
    let rep = run_gradient_experiment(cfg)?;
    let pass = rep.pass && condition_ok(&rep.condition, ctx.strict);
    let warnings = rep.warnings.clone();
    let mut outputs = Vec::new();
    ctx.report("gradient", "gradient", cfg, pass, &rep, &mut outputs)?;
    let mut t = CsvTable::new(
        "difference quotients |P_t f(x) - P_t f(y)| / d(x, y) against the gradient bound",
        &[
            ("h", "probe spacing"),
            ("quotient", "coupled-estimator difference quotient"),
            ("err", "standard error of quotient"),
            ("bound", "osc(f) / sqrt(2 pi beta(k, t - T1))"),
            ("alpha", "walk scale"),
            ("distance", "g(T1)-distance between the probes"),
            ("t", "evaluation time"),
            ("direct_quotient", "quotient from independent walks at each probe"),
            ("direct_err", "standard error of direct_quotient"),
            ("bound_ok", "|quotient| <= bound + 3 * err"),
            ("estimators_agree", "quotient and direct_quotient within 3 combined standard errors"),
            ("pass", "bound_ok and estimators_agree"),
        ],
    );
    for r in &rep.rows {
        t.push(vec![
            cell(r.h),
            cell(r.coupled_quotient),
            cell(r.coupled_se),
            cell(r.bound),
            cell(r.alpha),
            cell(r.distance),
            cell(r.t),
            cell(r.direct_quotient),
            cell(r.direct_se),
            cell(r.bound_ok),
            cell(r.estimators_agree),
            cell(r.pass),
        ]);
    }
    ctx.table("gradient", "gradient", &t, &mut outputs)?;
    let last = rep.rows.last().map(|r| (r.h, r.coupled_quotient, r.bound)).unwrap_or_default();
    Ok(Outcome {
        pass,
        summary: format!(
            "gradient {}: quotient {:.4} at h = {} (bound {:.4})",
            verdict(pass),
            last.1,
            last.0,
            last.2
        ),
        warnings,
        outputs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplosionCaseResult {
    pub name: String,
    pub expect: Option<ExplosionVerdict>,
    pub decisive: bool,
    pub pass: bool,
    pub report: ExplosionReport,
}

pub fn cmd_explosion(cfg: &ExplosionRunConfig, ctx: &RunContext) -> Result<Outcome> {
    let strict = ctx.strict || cfg.strict;
    let mut results = Vec::new();
    for (i, case) in cfg.cases.iter().enumerate() {
        let report = non_explosion_test(&case.b, case.c, &cfg.settings)?;
        let decisive = report.verdict != ExplosionVerdict::Inconclusive && report.stable;
        let pass = case.expect.is_none_or(|e| e == report.verdict) && (!strict || decisive);
        results.push(ExplosionCaseResult {
            name: case.label(i),
            expect: case.expect,
            decisive,
            pass,
            report,
        });
    }
    let pass = results.iter().all(|r| r.pass);
    let mut outputs = Vec::new();
    ctx.report("explosion", "explosion", cfg, pass, &results, &mut outputs)?;
    let mut v = CsvTable::new(
        "non-explosion verdicts",
        &[
            ("case", "case name"),
            ("c", "constant C in b(y) = C + int_0^y b"),
            ("verdict", "classification from the last two ladder rungs"),
            ("previous_verdict", "classification from the two rungs before"),
            ("stable", "verdict equals previous_verdict"),
            ("expect", "required verdict; empty when unconstrained"),
            ("pass", "matches expect, and decisive and stable under strict mode"),
        ],
    );
    let mut p = CsvTable::new(
        "partial Feller integrals I(Y) along the truncation ladder",
        &[
            ("case", "case name"),
            ("y", "truncation point Y"),
            ("value", "I(Y)"),
            ("slope", "log-log slope of I from the previous rung; empty on the first"),
            ("rel_increment", "(I(Y) - I(Y_prev)) / I(Y); empty on the first"),
        ],
    );
    let name = |v: ExplosionVerdict| match v {
        ExplosionVerdict::NonExplosive => "non_explosive",
        ExplosionVerdict::Explosive => "explosive",
        ExplosionVerdict::Inconclusive => "inconclusive",
    };
    for r in &results {
        v.push(vec![
            cell(r.name.as_str()),
            cell(r.report.c),
            cell(name(r.report.verdict)),
            cell(name(r.report.previous_verdict)),
            cell(r.report.stable),
            cell(r.expect.map(name)),
            cell(r.pass),
        ]);
        for q in &r.report.partials {
            p.push(vec![
                cell(r.name.as_str()),
                cell(q.y),
                cell(q.value),
                cell(q.slope),
                cell(q.rel_increment),
            ]);
        }
    }
    ctx.table("explosion", "explosion_verdicts", &v, &mut outputs)?;
    ctx.table("explosion", "explosion_partials", &p, &mut outputs)?;
    let summary = results
        .iter()
        .map(|r| format!("{}={}", r.name, name(r.report.verdict)))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        pass,
        summary: format!("explosion {}: {summary}", verdict(pass)),
        warnings: Vec::new(),
        outputs,
    })
}
