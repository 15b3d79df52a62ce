//! The time-inhomogeneous geodesic random walk `X^α`.
//!
//! On the grid `t_n = (T1 + α² n) ∧ T2` the walk moves by
//!
//! ```text
//! X(t_{n+1}) = exp^{(t_n)}_{X(t_n)}( α ξ̃ + α² Z(t_n, X(t_n)) ),   ξ̃ = √(m+2) Φ^{(t_n)}(X(t_n)) ξ
//! ```
//!
//! with `ξ` uniform on the unit ball and `Φ` the Gram–Schmidt frame of the chart
//! basis. Between grid times the walk follows the same geodesic, so a shortened
//! last step (when `α²` does not divide the horizon) ends at the interpolated point.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Frame, Horizon, Point, TangentVector, TimeDependentManifold};

/// Angle from the cut locus of `o` below which a step is flagged.
pub const NEAR_CUT_ANGLE: f64 = 1e-2;

/// `t_n = (T1 + α² n) ∧ T2` for `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepGrid {
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub n_steps: usize,
}

impl StepGrid {
    pub fn new(alpha: f64, horizon: Horizon) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        let ratio = horizon.len() / (alpha * alpha);
        if ratio > 1e9 {
            return Err(Error::invalid("alpha", format!("{ratio:.3e} steps requested")));
        }
        let n_steps = ((ratio - 1e-9).ceil() as usize).max(1);
        Ok(Self {
            alpha,
            t1: horizon.t1,
            t2: horizon.t2,
            n_steps,
        })
    }

    pub fn step_len(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn time(&self, n: usize) -> f64 {
        if n >= self.n_steps {
            self.t2
        } else {
            (self.t1 + self.step_len() * n as f64).min(self.t2)
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.time(n)).collect()
    }

    /// `(t_{n+1} − t_n) / α²`: 1 except possibly for the last step.
    pub fn fraction(&self, n: usize) -> f64 {
        ((self.time(n + 1) - self.time(n)) / self.step_len()).clamp(0.0, 1.0)
    }

    /// Index `n` with `t ∈ [t_n, t_{n+1})` (the last step includes `T2`).
    pub fn step_index(&self, t: f64) -> usize {
        let raw = ((t - self.t1) / self.step_len()).floor();
        (raw.max(0.0) as usize).min(self.n_steps - 1)
    }
}

/// One draw `ξ` from the uniform law on the unit ball of `ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseDraw {
    pub xi: DVector<f64>,
}

impl NoiseDraw {
    pub fn zero(m: usize) -> Self {
        Self { xi: DVector::zeros(m) }
    }
}

/// Gaussian direction times a `U^{1/m}` radius.
pub fn draw_uniform_ball<R: Rng + ?Sized>(rng: &mut R, m: usize) -> NoiseDraw {
    assert!(m >= 1, "ball dimension must be positive");
    let mut xi = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = xi.norm();
    let u: f64 = rng.random();
    let r = u.powf(1.0 / m as f64);
    if n > 0.0 {
        xi *= r / n;
    }
    NoiseDraw { xi }
}

/// The tangent step `α ξ̃ + α² Z` at `(t, x)` and the frame used for `ξ̃`.
pub fn step_vector(
    man: &TimeDependentManifold,
    t: f64,
    x: &Point,
    alpha: f64,
    draw: &NoiseDraw,
) -> Result<(Frame, TangentVector)> {
    let frame = man.orthonormal_frame(t, x)?;
    let scale = (man.dim() as f64 + 2.0).sqrt();
    let xi_tilde = &frame.columns * &draw.xi * scale;
    let mut v = xi_tilde * alpha;
    if !man.drift().is_zero() {
        v += man.drift().eval(t, x) * (alpha * alpha);
    }
    Ok((frame, TangentVector::new(x.clone(), v)))
}

/// One full step of the walk from `x` at grid time `t`.
pub fn walk_step(man: &TimeDependentManifold, t: f64, x: &Point, alpha: f64, draw: &NoiseDraw) -> Result<Point> {
    walk_step_fraction(man, t, x, alpha, draw, 1.0)
}

/// The point a fraction `f ∈ [0, 1]` of the way along the step geodesic.
pub fn walk_step_fraction(
    man: &TimeDependentManifold,
    t: f64,
    x: &Point,
    alpha: f64,
    draw: &NoiseDraw,
    f: f64,
) -> Result<Point> {
    let (_, v) = step_vector(man, t, x, alpha, draw)?;
    Ok(man.normalize_chart(man.exp_map(t, &v.scaled(f))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StepFlags {
    pub chart_switch: bool,
    /// The new point is within [`NEAR_CUT_ANGLE`] of the cut locus of the base point.
    pub near_cut_locus: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WalkDiagnostics {
    pub chart_switches: usize,
    pub near_cut_steps: usize,
}

impl WalkDiagnostics {
    pub fn record(&mut self, flags: StepFlags) {
        self.chart_switches += flags.chart_switch as usize;
        self.near_cut_steps += flags.near_cut_locus as usize;
    }

    pub fn merge(&mut self, other: &WalkDiagnostics) {
        self.chart_switches += other.chart_switches;
        self.near_cut_steps += other.near_cut_steps;
    }
}

/// A simulated path on the grid, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub grid: StepGrid,
    /// `X(t_n)` for `n = 0..=N`.
    pub points: Vec<Point>,
    /// Frame used at step `n`.
    pub frames: Vec<Frame>,
    pub draws: Vec<NoiseDraw>,
    /// Full tangent step `α ξ̃ + α² Z` at step `n` (before the fraction of a short last step).
    pub increments: Vec<TangentVector>,
    pub flags: Vec<StepFlags>,
    pub diagnostics: WalkDiagnostics,
}

impl WalkPath {
    fn start(grid: StepGrid, x0: Point) -> Self {
        let n = grid.n_steps;
        let mut points = Vec::with_capacity(n + 1);
        points.push(x0);
        Self {
            grid,
            points,
            frames: Vec::with_capacity(n),
            draws: Vec::with_capacity(n),
            increments: Vec::with_capacity(n),
            flags: Vec::with_capacity(n),
            diagnostics: WalkDiagnostics::default(),
        }
    }

    pub fn terminal(&self) -> &Point {
        self.points.last().expect("path has a start point")
    }

    /// Whether the path reached `T2`.
    pub fn is_complete(&self) -> bool {
        self.points.len() == self.grid.n_steps + 1
    }
}

/// A computation that stopped early, with whatever it produced so far.
#[derive(Debug, Clone)]
pub struct Aborted<T> {
    pub partial: T,
    pub error: Error,
}

/// One step produced by a [`Walker`].
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub n: usize,
    pub t_next: f64,
    pub point: Point,
    pub frame: Frame,
    pub draw: NoiseDraw,
    pub increment: TangentVector,
    pub flags: StepFlags,
}

/// Streaming walk: advances one grid step at a time without storing the path.
#[derive(Debug, Clone)]
pub struct Walker<'a> {
    man: &'a TimeDependentManifold,
    grid: StepGrid,
    n: usize,
    x: Point,
}

impl<'a> Walker<'a> {
    pub fn new(man: &'a TimeDependentManifold, x0: Point, alpha: f64) -> Result<Self> {
        let grid = StepGrid::new(alpha, man.horizon())?;
        if !man.model().in_domain(&x0) {
            return Err(Error::Domain(format!("start point {:?} outside chart", x0.coords.as_slice())));
        }
        Ok(Self { man, grid, n: 0, x: x0 })
    }

    pub fn grid(&self) -> &StepGrid {
        &self.grid
    }

    /// Steps taken so far.
    pub fn steps_done(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.grid.time(self.n)
    }

    pub fn position(&self) -> &Point {
        &self.x
    }

    pub fn finished(&self) -> bool {
        self.n >= self.grid.n_steps
    }

    /// Draw noise and take the next step. `None` once `T2` is reached.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Result<StepRecord>> {
        if self.finished() {
            return None;
        }
        let draw = draw_uniform_ball(rng, self.man.dim());
        Some(self.step_with(draw))
    }

    /// Take the next step with a given draw.
    pub fn step_with(&mut self, draw: NoiseDraw) -> Result<StepRecord> {
        let n = self.n;
        let t = self.grid.time(n);
        let wrap = |e: Error| Error::Step {
            step: n,
            source: Box::new(e),
        };
        let (frame, v) = step_vector(self.man, t, &self.x, self.grid.alpha, &draw).map_err(wrap)?;
        let f = self.grid.fraction(n);
        let moved = if f == 1.0 { v.clone() } else { v.scaled(f) };
        let next = self.man.exp_map(t, &moved).map_err(wrap)?;
        let next = self.man.normalize_chart(next);
        let flags = StepFlags {
            chart_switch: next.chart != self.x.chart,
            near_cut_locus: self
                .man
                .near_cut_locus(self.grid.time(n + 1), self.man.base_point(), &next, NEAR_CUT_ANGLE),
        };
        self.x = next.clone();
        self.n += 1;
        Ok(StepRecord {
            n,
            t_next: self.grid.time(n + 1),
            point: next,
            frame,
            draw,
            increment: v,
            flags,
        })
    }

    /// Run to `T2` and return the terminal point.
    pub fn run_to_end<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Point> {
        while let Some(r) = self.step(rng) {
            r?;
        }
        Ok(self.x.clone())
    }
}

/// Simulate a full path from `x0`. On failure the partial path is returned with the error.
#[allow(clippy::result_large_err)]
pub fn simulate<R: Rng + ?Sized>(
    man: &TimeDependentManifold,
    x0: &Point,
    alpha: f64,
    rng: &mut R,
) -> std::result::Result<WalkPath, Aborted<WalkPath>> {
    let mut walker = match Walker::new(man, x0.clone(), alpha) {
        Ok(w) => w,
        Err(error) => {
            let grid = StepGrid {
                alpha,
                t1: man.horizon().t1,
                t2: man.horizon().t2,
                n_steps: 0,
            };
            return Err(Aborted {
                partial: WalkPath::start(grid, x0.clone()),
                error,
            });
        }
    };
    let mut path = WalkPath::start(*walker.grid(), x0.clone());
    while let Some(r) = walker.step(rng) {
        match r {
            Ok(rec) => {
                path.diagnostics.record(rec.flags);
                path.points.push(rec.point);
                path.frames.push(rec.frame);
                path.draws.push(rec.draw);
                path.increments.push(rec.increment);
                path.flags.push(rec.flags);
            }
            Err(error) => return Err(Aborted { partial: path, error }),
        }
    }
    Ok(path)
}

/// `X^α(t)` on the step geodesic: `exp_{X(t_n)}(((t − t_n)/α²) · v_n)`.
pub fn interpolate(man: &TimeDependentManifold, path: &WalkPath, t: f64) -> Result<Point> {
    let grid = &path.grid;
    if !(t >= grid.t1 - 1e-12 && t <= grid.t2 + 1e-12) {
        return Err(Error::Domain(format!("time {t} outside [{}, {}]", grid.t1, grid.t2)));
    }
    let n = grid.step_index(t);
    if n >= path.increments.len() {
        return Err(Error::Domain(format!("path stops before time {t}")));
    }
    let t_n = grid.time(n);
    if t == t_n {
        return Ok(path.points[n].clone());
    }
    if t >= grid.time(n + 1) {
        return Ok(path.points[n + 1].clone());
    }
    let f = (t - t_n) / grid.step_len();
    let p = man.exp_map(t_n, &path.increments[n].scaled(f))?;
    Ok(man.normalize_chart(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialSample {
    pub t: f64,
    pub distance: f64,
    pub near_cut_locus: bool,
}

/// `d_{g(t_n)}(o, X(t_n))` along the path.
pub fn radial_series(man: &TimeDependentManifold, path: &WalkPath) -> Result<Vec<RadialSample>> {
    let o = man.base_point();
    path.points
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let t = path.grid.time(n);
            Ok(RadialSample {
                t,
                distance: man.distance(t, o, x)?,
                near_cut_locus: man.near_cut_locus(t, o, x, NEAR_CUT_ANGLE),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
