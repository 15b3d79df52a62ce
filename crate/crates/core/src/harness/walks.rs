use serde::Serialize;

use super::{ks_normal, ks_two_sample, rung_tag, Engine, ExperimentConfig};
use crate::comparison::RadialTracker;
use crate::coupling::CoupledWalker;
use crate::error::{Error, Result};
use crate::geometry::{Point, TimeDependentManifold};
use crate::models::{DriftSpec, ModelKind};
use crate::rng::{stream, tags};
use crate::walk::Walker;

/// Kolmogorov–Smirnov distance accepted by the distributional checks.
pub const KS_TOL: f64 = 0.02;

/// Independent reference walks per coupled trial in the marginal check.
pub const REFERENCE_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub alpha: f64,
    pub trials: usize,
    /// KS distance of each coordinate of `X(T2) − x0` to `N(0, T2 − T1)`.
    pub ks: Vec<f64>,
    pub ks_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub ks_tol: f64,
    /// Finest rung below `ks_tol`.
    pub converged: bool,
    /// `ks_max` strictly decreasing along the ladder.
    pub improving: bool,
    pub pass: bool,
}

/// Terminal law of the flat-space walk against Brownian motion at each rung.
pub fn run_invariance_experiment(cfg: &ExperimentConfig) -> Result<InvarianceReport> {
    cfg.validate()?;
    if cfg.model.kind != ModelKind::Euclidean || cfg.model.drift != DriftSpec::Zero {
        return Err(Error::invalid("model", "the invariance check needs a driftless euclidean model"));
    }
    let man = cfg.manifold()?;
    let (x0, _) = cfg.start_points(&man)?;
    let engine = Engine::new(cfg.workers)?;
    let sd = man.horizon().len().sqrt();
    let mut rows = Vec::new();
    for (rung, &alpha) in cfg.alphas.iter().enumerate() {
        let tag = rung_tag(tags::WALK, rung);
        let ends = engine.run(cfg.trials, |i| {
            let mut rng = stream(cfg.seed, tag, i as u64);
            Walker::new(&man, x0.clone(), alpha)?.run_to_end(&mut rng)
        })?;
        let ks: Vec<f64> = (0..man.dim())
            .map(|j| {
                let xs: Vec<f64> = ends.iter().map(|p| p.coords[j] - x0.coords[j]).collect();
                ks_normal(&xs, 0.0, sd)
            })
            .collect();
        let ks_max = ks.iter().copied().fold(0.0, f64::max);
        rows.push(InvarianceRow {
            alpha,
            trials: cfg.trials,
            ks,
            ks_max,
        });
    }
    let converged = rows.last().is_some_and(|r| r.ks_max < KS_TOL);
    let improving = rows.windows(2).all(|w| w[1].ks_max < w[0].ks_max);
    Ok(InvarianceReport {
        rows,
        ks_tol: KS_TOL,
        converged,
        improving,
        pass: converged && improving,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalRow {
    pub alpha: f64,
    /// 1 or 2.
    pub component: usize,
    /// `coord{i}` (embedding coordinate) or `dist_o` (`g(T2)`-distance to the base point).
    pub functional: String,
    /// Two-sample KS distance between the coupled component and independent walks.
    pub ks: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    pub model: String,
    pub trials: usize,
    pub reference_trials: usize,
    pub rows: Vec<MarginalRow>,
    pub ks_tol: f64,
    pub pass: bool,
}

fn functionals(man: &TimeDependentManifold, x: &Point) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = match man.embed(x) {
        Some(p) => p.iter().copied().collect(),
        None => x.coords.iter().copied().collect(),
    };
    out.push(man.distance(man.horizon().t2, man.base_point(), x)?);
    Ok(out)
}

/// Each component of the coupled pair against independent single walks from the same start.
pub fn run_marginal_experiment(cfg: &ExperimentConfig) -> Result<MarginalReport> {
    cfg.validate()?;
    let man = cfg.manifold()?;
    let (x1, x2) = cfg.start_points(&man)?;
    let engine = Engine::new(cfg.workers)?;
    let reference_trials = REFERENCE_FACTOR * cfg.trials;
    let mut rows = Vec::new();
    for (rung, &alpha) in cfg.alphas.iter().enumerate() {
        let kind = cfg.coupling_kind(alpha);
        let tag = rung_tag(tags::COUPLED, rung);
        let coupled = engine.run(cfg.trials, |i| {
            let mut rng = stream(cfg.seed, tag, i as u64);
            let mut w = CoupledWalker::new(&man, x1.clone(), x2.clone(), alpha, kind)?;
            while let Some(r) = w.step(&mut rng) {
                r?;
            }
            let (p1, p2) = w.positions();
            Ok((functionals(&man, p1)?, functionals(&man, p2)?))
        })?;
        let wtag = rung_tag(tags::WALK, rung);
        for (component, start) in [(1usize, &x1), (2, &x2)] {
            let offset = (component as u64) << 40;
            let reference = engine.run(reference_trials, |i| {
                let mut rng = stream(cfg.seed, wtag, offset | i as u64);
                let end = Walker::new(&man, start.clone(), alpha)?.run_to_end(&mut rng)?;
                functionals(&man, &end)
            })?;
            let count = reference[0].len();
            for j in 0..count {
                let a: Vec<f64> = coupled
                    .iter()
                    .map(|(f1, f2)| if component == 1 { f1[j] } else { f2[j] })
                    .collect();
                let b: Vec<f64> = reference.iter().map(|f| f[j]).collect();
                let ks = ks_two_sample(&a, &b);
                let functional = if j + 1 == count { "dist_o".to_string() } else { format!("coord{j}") };
                rows.push(MarginalRow {
                    alpha,
                    component,
                    functional,
                    ks,
                    pass: ks < KS_TOL,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(MarginalReport {
        model: cfg.model.kind.name().to_string(),
        trials: cfg.trials,
        reference_trials,
        rows,
        ks_tol: KS_TOL,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialRow {
    pub alpha: f64,
    pub trials: usize,
    /// Fraction of grid points (over all trials) with `d > ρ + margin`.
    pub exceedance_frequency: f64,
    /// Fraction of trials with at least one exceedance.
    pub paths_with_exceedance: f64,
    /// Largest `d − ρ` seen.
    pub max_excess: f64,
    pub floor_hits: usize,
    pub near_cut_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialReport {
    pub model: String,
    pub c0: f64,
    pub r0: f64,
    pub margin: f64,
    pub threshold: f64,
    pub rows: Vec<RadialRow>,
    /// Finest rung below `threshold`.
    pub below_threshold: bool,
    /// Frequencies nonincreasing along the ladder.
    pub nonincreasing: bool,
    pub pass: bool,
}

/// Exceedance frequency accepted by the radial comparison check.
pub const RADIAL_THRESHOLD: f64 = 0.01;

/// Run the radial comparison process `ρ` next to the walk and count where
/// `d_{g(t)}(o, X(t))` rises above `ρ + margin`.
pub fn run_radial_experiment(cfg: &ExperimentConfig) -> Result<RadialReport> {
    cfg.validate()?;
    let man = cfg.manifold()?;
    let spec = cfg.radial.drift_spec()?;
    let (x0, _) = cfg.start_points(&man)?;
    let engine = Engine::new(cfg.workers)?;
    let margin = cfg.radial.margin;
    let o = man.base_point();
    let mut rows = Vec::new();
    for (rung, &alpha) in cfg.alphas.iter().enumerate() {
        let tag = rung_tag(tags::RADIAL, rung);
        let per_trial = engine.run(cfg.trials, |i| {
            let mut rng = stream(cfg.seed, tag, i as u64);
            let mut walker = Walker::new(&man, x0.clone(), alpha)?;
            let mut tracker = RadialTracker::new(&man, spec.clone(), alpha, &x0)?;
            let (mut hits, mut points, mut max_excess) = (0usize, 1usize, f64::NEG_INFINITY);
            let d0 = man.distance(walker.time(), o, &x0)?;
            max_excess = max_excess.max(d0 - tracker.rho());
            while !walker.finished() {
                let n = walker.steps_done();
                let t = walker.time();
                let x = walker.position().clone();
                let f = walker.grid().fraction(n);
                let Some(rec) = walker.step(&mut rng) else { break };
                let rec = rec?;
                let rho = tracker.advance(t, &x, &rec.frame, &rec.draw, f)?;
                let d = man.distance(rec.t_next, o, &rec.point)?;
                points += 1;
                hits += (d > rho + margin) as usize;
                max_excess = max_excess.max(d - rho);
            }
            Ok((hits, points, max_excess, tracker.floor_hits, tracker.near_cut_steps))
        })?;
        let hits: usize = per_trial.iter().map(|s| s.0).sum();
        let points: usize = per_trial.iter().map(|s| s.1).sum();
        rows.push(RadialRow {
            alpha,
            trials: cfg.trials,
            exceedance_frequency: hits as f64 / points as f64,
            paths_with_exceedance: per_trial.iter().filter(|s| s.0 > 0).count() as f64 / cfg.trials as f64,
            max_excess: per_trial.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max),
            floor_hits: per_trial.iter().map(|s| s.3).sum(),
            near_cut_steps: per_trial.iter().map(|s| s.4).sum(),
        });
    }
    let below_threshold = rows.last().is_some_and(|r| r.exceedance_frequency < RADIAL_THRESHOLD);
    let nonincreasing = rows.windows(2).all(|w| w[1].exceedance_frequency <= w[0].exceedance_frequency);
    Ok(RadialReport {
        model: cfg.model.kind.name().to_string(),
        c0: spec.c0,
        r0: spec.r0,
        margin,
        threshold: RADIAL_THRESHOLD,
        rows,
        below_threshold,
        nonincreasing,
        pass: below_threshold && nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    #[test]
    fn invariance_needs_flat_space() {
        let mut cfg = ExperimentConfig::new(ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0).with_param("c0", 1.0));
        cfg.trials = 100;
        assert!(run_invariance_experiment(&cfg).is_err());
    }

    #[test]
    fn radial_rows_are_fractions() {
        let mut cfg = ExperimentConfig::new(ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0));
        cfg.trials = 100;
        cfg.alphas = vec![0.2, 0.1];
        let rep = run_radial_experiment(&cfg).unwrap();
        for r in &rep.rows {
            assert!((0.0..=1.0).contains(&r.exceedance_frequency));
            assert!((0.0..=1.0).contains(&r.paths_with_exceedance));
        }
    }
}
