//! Couplings of two geodesic random walks driven by one noise sequence.
//!
//! Off the diagonal, `X₂` steps with the image of `X₁`'s step under the
//! parallel transport along the minimal geodesic from `X₁` to `X₂`, reflected
//! in the hyperplane orthogonal to that geodesic (reflection coupling) or not
//! (parallel coupling). On the diagonal both particles take the same step.
//! Once the particles are declared coupled, `X₂` is identified with `X₁` for
//! the rest of the run.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, Geodesic, Point, TangentVector, TimeDependentManifold};
use crate::harness::wilson_interval;
use crate::walk::{draw_uniform_ball, step_vector, Aborted, NoiseDraw, StepGrid, StepFlags, WalkDiagnostics, WalkPath};

/// Overshoot constant of a Gaussian random walk over a level, `−ζ(1/2)/√(2π)`.
const OVERSHOOT: f64 = 0.5826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    Reflection,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingKind {
    pub kind: CouplingMode,
    /// Particles closer than this at a grid time are declared coupled.
    pub delta_couple: f64,
    /// Also declare coupling when the first-order distance update `d_n − α λ*`
    /// changes sign, i.e. the particles swap sides during the step (reflection only).
    pub detect_crossing: bool,
}

impl CouplingKind {
    /// Reflection coupling with the default threshold for `alpha`.
    pub fn reflection(alpha: f64) -> Self {
        Self {
            kind: CouplingMode::Reflection,
            delta_couple: Self::default_delta(alpha),
            detect_crossing: true,
        }
    }

    /// Parallel coupling; particles only merge if they start together.
    pub fn parallel() -> Self {
        Self {
            kind: CouplingMode::Parallel,
            delta_couple: 1e-9,
            detect_crossing: false,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta_couple = delta;
        self
    }

    /// `2·0.5826·α`: the distance process of the reflection coupling moves by
    /// steps of standard deviation `2α`, and this is its expected overshoot
    /// below a level, which corrects the first-passage time of the discrete walk.
    pub fn default_delta(alpha: f64) -> f64 {
        2.0 * OVERSHOOT * alpha
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_couple > 0.0 && self.delta_couple.is_finite()) {
            return Err(Error::invalid("coupling.delta_couple", "must be positive"));
        }
        Ok(())
    }
}

/// `m_{xy} v`: transport `v` from `x` to `y` along `geo`, then reflect in the
/// hyperplane `g(t)`-orthogonal to `γ̇` at `y`.
pub fn reflection_map(man: &TimeDependentManifold, t: f64, geo: &Geodesic, v: &TangentVector) -> Result<TangentVector> {
    let moved = man.parallel_transport(t, geo, v)?;
    reflect(man, t, &geo.end_velocity, moved)
}

fn reflect(man: &TimeDependentManifold, t: f64, unit: &TangentVector, v: TangentVector) -> Result<TangentVector> {
    let unit = if unit.base.chart == v.base.chart {
        unit.clone()
    } else {
        man.model()
            .vector_to_chart(unit, v.base.chart)
            .ok_or_else(|| Error::Domain("geodesic velocity not representable".into()))?
    };
    let a = man.inner(t, &v, &unit)?;
    Ok(TangentVector::new(v.base, &v.components - &unit.components * (2.0 * a)))
}

/// Result of one coupled step.
#[derive(Debug, Clone)]
pub struct CoupledStep {
    pub x1: Point,
    pub x2: Point,
    /// Full tangent steps `α ξ̃ⁱ + α² Z` of the two particles.
    pub v1: TangentVector,
    pub v2: TangentVector,
    /// `2⟨ξ̃¹, γ̇(0)⟩` (0 on the diagonal and for parallel coupling).
    pub lambda_star: f64,
    /// Distance `d_{g(t_n)}(x1, x2)` before the step.
    pub distance_before: f64,
    pub near_cut_locus: bool,
    /// `| |ξ̃²| − |ξ̃¹| |`, the isometry defect of the map used.
    pub isometry_error: f64,
}

/// Advance both particles from `t` with one draw, moving a fraction `f` of the step.
#[allow(clippy::too_many_arguments)]
pub fn coupled_step_fraction(
    man: &TimeDependentManifold,
    t: f64,
    x1: &Point,
    x2: &Point,
    alpha: f64,
    draw: &NoiseDraw,
    kind: &CouplingKind,
    f: f64,
) -> Result<CoupledStep> {
    let (frame, v1) = step_vector(man, t, x1, alpha, draw)?;
    let next = |v: &TangentVector| -> Result<Point> { Ok(man.normalize_chart(man.exp_map(t, &v.scaled(f))?)) };
    if man.points_equal(x1, x2) {
        let y = next(&v1)?;
        return Ok(CoupledStep {
            x1: y.clone(),
            x2: y,
            v1: v1.clone(),
            v2: v1,
            lambda_star: 0.0,
            distance_before: 0.0,
            near_cut_locus: false,
            isometry_error: 0.0,
        });
    }
    let geo = man.minimal_geodesic(t, x1, x2)?;
    let scale = (man.dim() as f64 + 2.0).sqrt();
    let xi1 = TangentVector::new(x1.clone(), &frame.columns * &draw.xi * scale);
    let xi2 = couple_vector(man, t, &geo, &xi1, kind.kind)?;
    let lambda_star = match kind.kind {
        CouplingMode::Reflection => 2.0 * man.inner(t, &xi1, &geo.start_velocity)?,
        CouplingMode::Parallel => 0.0,
    };
    let isometry_error = (man.norm(t, &xi2)? - man.norm(t, &xi1)?).abs();
    let mut v2 = &xi2.components * alpha;
    if !man.drift().is_zero() {
        v2 += man.drift().eval(t, &xi2.base) * (alpha * alpha);
    }
    let v2 = TangentVector::new(xi2.base.clone(), v2);
    Ok(CoupledStep {
        x1: next(&v1)?,
        x2: next(&v2)?,
        v1,
        v2,
        lambda_star,
        distance_before: geo.length,
        near_cut_locus: geo.near_cut_locus,
        isometry_error,
    })
}

/// Image of a tangent vector at `geo.start` under the coupling map of `mode`.
pub fn couple_vector(
    man: &TimeDependentManifold,
    t: f64,
    geo: &Geodesic,
    v: &TangentVector,
    mode: CouplingMode,
) -> Result<TangentVector> {
    match mode {
        CouplingMode::Reflection => reflection_map(man, t, geo, v),
        CouplingMode::Parallel => man.parallel_transport(t, geo, v),
    }
}

/// The frame `X₂` uses: the coupling map applied to `X₁`'s frame (`X₁`'s frame on the diagonal).
pub fn coupled_frame(man: &TimeDependentManifold, t: f64, x1: &Point, x2: &Point, mode: CouplingMode) -> Result<Frame> {
    let f1 = man.orthonormal_frame(t, x1)?;
    if man.points_equal(x1, x2) {
        return Ok(f1);
    }
    let geo = man.minimal_geodesic(t, x1, x2)?;
    let cols: Vec<TangentVector> = f1
        .vectors()
        .iter()
        .map(|v| couple_vector(man, t, &geo, v, mode))
        .collect::<Result<_>>()?;
    let base = cols[0].base.clone();
    let m = man.dim();
    let columns = DMatrix::from_fn(m, m, |i, j| cols[j].components[i]);
    Ok(Frame { base, columns })
}

/// One full coupled step.
pub fn coupled_step(
    man: &TimeDependentManifold,
    t: f64,
    x1: &Point,
    x2: &Point,
    alpha: f64,
    draw: &NoiseDraw,
    kind: &CouplingKind,
) -> Result<CoupledStep> {
    coupled_step_fraction(man, t, x1, x2, alpha, draw, kind, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CouplingDiagnostics {
    /// Steps whose connecting geodesic was flagged near the cut locus.
    pub near_cut_steps: usize,
    pub chart_switches: usize,
    /// Largest isometry defect of the coupling map over the run.
    pub max_isometry_error: f64,
    /// Coupling was declared by the crossing rule rather than the threshold.
    pub coupled_by_crossing: bool,
}

impl CouplingDiagnostics {
    pub fn merge(&mut self, other: &CouplingDiagnostics) {
        self.near_cut_steps += other.near_cut_steps;
        self.chart_switches += other.chart_switches;
        self.max_isometry_error = self.max_isometry_error.max(other.max_isometry_error);
        self.coupled_by_crossing |= other.coupled_by_crossing;
    }
}

/// Record of one step of a [`CoupledWalker`].
#[derive(Debug, Clone)]
pub struct CoupledStepRecord {
    pub n: usize,
    pub t_next: f64,
    /// `d_{g(t_{n+1})}(X₁, X₂)` after the step (0 once coupled).
    pub distance: f64,
    pub lambda_star: f64,
    pub draw: NoiseDraw,
    pub v1: TangentVector,
    pub v2: TangentVector,
    /// The particles were declared coupled at `t_{n+1}`.
    pub newly_coupled: bool,
}

/// Streaming coupled walk.
#[derive(Debug, Clone)]
pub struct CoupledWalker<'a> {
    man: &'a TimeDependentManifold,
    grid: StepGrid,
    kind: CouplingKind,
    n: usize,
    x1: Point,
    x2: Point,
    distance: f64,
    coupled_step: Option<usize>,
    diagnostics: CouplingDiagnostics,
}

impl<'a> CoupledWalker<'a> {
    pub fn new(man: &'a TimeDependentManifold, x1: Point, x2: Point, alpha: f64, kind: CouplingKind) -> Result<Self> {
        kind.validate()?;
        let grid = StepGrid::new(alpha, man.horizon())?;
        for (name, x) in [("x1", &x1), ("x2", &x2)] {
            if !man.model().in_domain(x) {
                return Err(Error::Domain(format!("{name} = {:?} outside chart", x.coords.as_slice())));
            }
        }
        let distance = man.distance(grid.t1, &x1, &x2)?;
        let mut w = Self {
            man,
            grid,
            kind,
            n: 0,
            x1,
            x2,
            distance,
            coupled_step: None,
            diagnostics: CouplingDiagnostics::default(),
        };
        if distance <= kind.delta_couple {
            w.stick(0);
        }
        Ok(w)
    }

    fn stick(&mut self, n: usize) {
        self.coupled_step = Some(n);
        self.x2 = self.x1.clone();
        self.distance = 0.0;
    }

    pub fn grid(&self) -> &StepGrid {
        &self.grid
    }

    pub fn steps_done(&self) -> usize {
        self.n
    }

    pub fn finished(&self) -> bool {
        self.n >= self.grid.n_steps
    }

    pub fn positions(&self) -> (&Point, &Point) {
        (&self.x1, &self.x2)
    }

    /// Current `d_{g(t_n)}(X₁, X₂)`.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn is_coupled(&self) -> bool {
        self.coupled_step.is_some()
    }

    /// Grid index at which coupling was declared.
    pub fn coupled_step(&self) -> Option<usize> {
        self.coupled_step
    }

    pub fn coupling_time(&self) -> Option<f64> {
        self.coupled_step.map(|n| self.grid.time(n))
    }

    pub fn diagnostics(&self) -> &CouplingDiagnostics {
        &self.diagnostics
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Result<CoupledStepRecord>> {
        if self.finished() {
            return None;
        }
        let draw = draw_uniform_ball(rng, self.man.dim());
        Some(self.step_with(draw))
    }

    pub fn step_with(&mut self, draw: NoiseDraw) -> Result<CoupledStepRecord> {
        let n = self.n;
        let t = self.grid.time(n);
        let t_next = self.grid.time(n + 1);
        let f = self.grid.fraction(n);
        let alpha = self.grid.alpha;
        let wrap = |e: Error| Error::CouplingStep {
            step: n,
            source: Box::new(e),
        };
        let step = coupled_step_fraction(self.man, t, &self.x1, &self.x2, alpha, &draw, &self.kind, f).map_err(wrap)?;
        self.diagnostics.near_cut_steps += step.near_cut_locus as usize;
        self.diagnostics.chart_switches += (step.x1.chart != self.x1.chart) as usize;
        self.diagnostics.max_isometry_error = self.diagnostics.max_isometry_error.max(step.isometry_error);
        let was_coupled = self.is_coupled();
        self.n += 1;
        self.x1 = step.x1;
        let mut newly_coupled = false;
        if was_coupled {
            self.x2 = self.x1.clone();
            self.distance = 0.0;
        } else {
            self.x2 = step.x2;
            let crossed = self.kind.detect_crossing
                && self.kind.kind == CouplingMode::Reflection
                && step.distance_before - f * alpha * step.lambda_star <= 0.0;
            self.distance = self.man.distance(t_next, &self.x1, &self.x2).map_err(wrap)?;
            if crossed || self.distance <= self.kind.delta_couple {
                self.diagnostics.coupled_by_crossing = crossed && self.distance > self.kind.delta_couple;
                self.stick(self.n);
                newly_coupled = true;
            }
        }
        Ok(CoupledStepRecord {
            n,
            t_next,
            distance: self.distance,
            lambda_star: step.lambda_star,
            draw,
            v1: step.v1,
            v2: step.v2,
            newly_coupled,
        })
    }
}

/// Full record of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory {
    pub path1: WalkPath,
    pub path2: WalkPath,
    /// `d_{g(t_n)}(X₁(t_n), X₂(t_n))`.
    pub distances: Vec<f64>,
    pub coupling_time: Option<f64>,
    /// `stuck[n]`: `X₂(t_n)` has been identified with `X₁(t_n)`.
    pub stuck: Vec<bool>,
    /// `λ*` per step.
    pub lambda_star: Vec<f64>,
    pub diagnostics: CouplingDiagnostics,
}

/// Simulate a coupled pair over the whole horizon, keeping both paths.
#[allow(clippy::result_large_err)]
pub fn simulate_coupled<R: Rng + ?Sized>(
    man: &TimeDependentManifold,
    x1: &Point,
    x2: &Point,
    alpha: f64,
    rng: &mut R,
    kind: CouplingKind,
) -> std::result::Result<CoupledTrajectory, Aborted<CoupledTrajectory>> {
    let empty = |grid: StepGrid| CoupledTrajectory {
        path1: empty_path(grid, x1.clone()),
        path2: empty_path(grid, x2.clone()),
        distances: Vec::new(),
        coupling_time: None,
        stuck: Vec::new(),
        lambda_star: Vec::new(),
        diagnostics: CouplingDiagnostics::default(),
    };
    let mut walker = match CoupledWalker::new(man, x1.clone(), x2.clone(), alpha, kind) {
        Ok(w) => w,
        Err(error) => {
            let grid = StepGrid {
                alpha,
                t1: man.horizon().t1,
                t2: man.horizon().t2,
                n_steps: 0,
            };
            return Err(Aborted {
                partial: empty(grid),
                error,
            });
        }
    };
    let grid = *walker.grid();
    let mut traj = empty(grid);
    traj.path2.points[0] = walker.positions().1.clone();
    traj.distances.push(walker.distance());
    traj.stuck.push(walker.is_coupled());
    while !walker.finished() {
        let t = grid.time(walker.steps_done());
        let (p1, p2) = (walker.positions().0.clone(), walker.positions().1.clone());
        let draw = draw_uniform_ball(rng, man.dim());
        let mode = kind.kind;
        let frames = man.orthonormal_frame(t, &p1).and_then(|f1| {
            let f2 = coupled_frame(man, t, &p1, &p2, mode)?;
            Ok((f1, f2))
        });
        let rec = frames.and_then(|fr| walker.step_with(draw).map(|r| (fr, r)));
        match rec {
            Ok(((f1, f2), rec)) => {
                let (y1, y2) = walker.positions();
                let pairs = [(&mut traj.path1, f1, &p1, y1, &rec.v1), (&mut traj.path2, f2, &p2, y2, &rec.v2)];
                for (path, frame, from, to, v) in pairs {
                    let flags = StepFlags {
                        chart_switch: from.chart != to.chart,
                        near_cut_locus: false,
                    };
                    path.diagnostics.record(flags);
                    path.points.push(to.clone());
                    path.frames.push(frame);
                    path.draws.push(rec.draw.clone());
                    path.increments.push(v.clone());
                    path.flags.push(flags);
                }
                traj.distances.push(rec.distance);
                traj.stuck.push(walker.is_coupled());
                traj.lambda_star.push(rec.lambda_star);
            }
            Err(error) => {
                traj.coupling_time = walker.coupling_time();
                traj.diagnostics = *walker.diagnostics();
                return Err(Aborted { partial: traj, error });
            }
        }
    }
    traj.coupling_time = walker.coupling_time();
    traj.diagnostics = *walker.diagnostics();
    Ok(traj)
}

fn empty_path(grid: StepGrid, x0: Point) -> WalkPath {
    WalkPath {
        grid,
        points: vec![x0],
        frames: Vec::new(),
        draws: Vec::new(),
        increments: Vec::new(),
        flags: Vec::new(),
        diagnostics: WalkDiagnostics::default(),
    }
}

/// Empirical `P[τ* > T]` with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub t: f64,
    pub uncoupled: usize,
    pub trials: usize,
    pub tail: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl TailEstimate {
    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

/// Tail of the coupling time from per-trial coupling times (`None` = not coupled).
pub fn coupling_tail(coupling_times: &[Option<f64>], report_times: &[f64]) -> Result<Vec<TailEstimate>> {
    if coupling_times.is_empty() {
        return Err(Error::invalid("trials", "empty batch"));
    }
    let n = coupling_times.len();
    report_times
        .iter()
        .map(|&t| {
            let k = coupling_times.iter().filter(|c| c.is_none_or(|c| c > t)).count();
            let (lo, hi) = wilson_interval(k as u64, n as u64, 0.95)?;
            Ok(TailEstimate {
                t,
                uncoupled: k,
                trials: n,
                tail: k as f64 / n as f64,
                ci_lo: lo,
                ci_hi: hi,
            })
        })
        .collect()
}

/// [`coupling_tail`] over full trajectories.
pub fn coupling_tail_of(batch: &[CoupledTrajectory], report_times: &[f64]) -> Result<Vec<TailEstimate>> {
    let times: Vec<Option<f64>> = batch.iter().map(|t| t.coupling_time).collect();
    coupling_tail(&times, report_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, ModelKind, ModelSpec};
    use crate::rng::{stream, tags};
    use nalgebra::DVector;

    fn plane() -> TimeDependentManifold {
        build(&ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn flat_reflection_examples() {
        let man = plane();
        let x = Point::from_slice(0, &[0.0, 0.0]);
        let y = Point::from_slice(0, &[2.0, 0.0]);
        let geo = man.minimal_geodesic(0.0, &x, &y).unwrap();
        let u = TangentVector::new(x.clone(), DVector::from_vec(vec![1.0, 0.0]));
        let r = reflection_map(&man, 0.0, &geo, &u).unwrap();
        assert!((r.components - DVector::from_vec(vec![-1.0, 0.0])).amax() < 1e-15);
        let p = TangentVector::new(x.clone(), DVector::from_vec(vec![0.0, 0.7]));
        let r = reflection_map(&man, 0.0, &geo, &p).unwrap();
        assert!((r.components - p.components).amax() < 1e-15);
    }

    #[test]
    fn flat_reflection_distance_is_reflected_walk() {
        let man = plane();
        let kind = CouplingKind::reflection(0.1);
        let mut rng = stream(5, tags::COUPLED, 0);
        let x1 = Point::from_slice(0, &[0.0, 0.0]);
        let x2 = Point::from_slice(0, &[1.0, 0.0]);
        for _ in 0..50 {
            let draw = draw_uniform_ball(&mut rng, 2);
            let s = coupled_step(&man, 0.0, &x1, &x2, 0.1, &draw, &kind).unwrap();
            let expect = (1.0 - 0.1 * s.lambda_star).abs();
            let got = (&s.x1.coords - &s.x2.coords).norm();
            assert!((got - expect).abs() < 1e-14);
            let par = coupled_step(&man, 0.0, &x1, &x2, 0.1, &draw, &CouplingKind::parallel()).unwrap();
            assert!(((&par.x1.coords - &par.x2.coords).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_start_couples_immediately() {
        let man = plane();
        let x = Point::from_slice(0, &[0.3, 0.3]);
        let mut rng = stream(1, tags::COUPLED, 0);
        let traj = simulate_coupled(&man, &x, &x, 0.2, &mut rng, CouplingKind::reflection(0.2)).unwrap();
        assert_eq!(traj.coupling_time, Some(0.0));
        assert!(traj.distances.iter().all(|d| *d == 0.0));
        let tail = coupling_tail_of(&[traj], &[0.5, 1.0]).unwrap();
        assert!(tail.iter().all(|t| t.tail == 0.0));
    }

    #[test]
    fn sticky_after_coupling() {
        let man = plane();
        let x1 = Point::from_slice(0, &[0.0, 0.0]);
        let x2 = Point::from_slice(0, &[0.3, 0.0]);
        let mut rng = stream(2, tags::COUPLED, 0);
        let traj = simulate_coupled(&man, &x1, &x2, 0.1, &mut rng, CouplingKind::reflection(0.1)).unwrap();
        let n = traj.stuck.iter().position(|s| *s).expect("couples within the horizon");
        for i in n..traj.distances.len() {
            assert_eq!(traj.distances[i], 0.0);
            assert_eq!(traj.path1.points[i], traj.path2.points[i]);
        }
        assert_eq!(traj.path1.points.len(), traj.path1.grid.n_steps + 1);
    }

    #[test]
    fn sphere_reflection_is_an_isometry() {
        let man = build(&ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0)).unwrap();
        let x = Point::from_slice(0, &[0.2, -0.1]);
        let y = Point::from_slice(0, &[-0.5, 0.8]);
        let geo = man.minimal_geodesic(0.4, &x, &y).unwrap();
        let v = TangentVector::new(x.clone(), DVector::from_vec(vec![0.3, 1.1]));
        let r = reflection_map(&man, 0.4, &geo, &v).unwrap();
        assert!((man.norm(0.4, &r).unwrap() - man.norm(0.4, &v).unwrap()).abs() < 1e-8);
        let a = man.inner(0.4, &r, &geo.end_velocity).unwrap();
        let b = man.inner(0.4, &v, &geo.start_velocity).unwrap();
        assert!((a + b).abs() < 1e-8);
    }

    #[test]
    fn tail_counts_uncoupled() {
        let times = [Some(0.2), None, Some(0.8), Some(1.0)];
        let tails = coupling_tail(&times, &[0.1, 0.5, 1.0]).unwrap();
        assert_eq!(tails[0].uncoupled, 4);
        assert_eq!(tails[1].uncoupled, 3);
        assert_eq!(tails[2].uncoupled, 1);
        assert!(tails.iter().all(|t| t.ci_lo <= t.tail && t.tail <= t.ci_hi));
    }
}
