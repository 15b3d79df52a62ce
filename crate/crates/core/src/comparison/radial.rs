use serde::{Deserialize, Serialize};

use super::{ComparisonPath, PathKind};
use crate::error::{Error, Result};
use crate::geometry::{Frame, Point, TimeDependentManifold};
use crate::walk::{NoiseDraw, WalkPath, NEAR_CUT_ANGLE};

/// Nonnegative curvature-excess bound `b` on `[0, ∞)`, as a sum of power terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BFunction {
    Zero,
    Constant { value: f64 },
    /// `coef · s^exponent`.
    Power { coef: f64, exponent: f64 },
    /// `Σ coeffs[i] s^i`.
    Polynomial { coeffs: Vec<f64> },
}

impl BFunction {
    fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            BFunction::Zero => Vec::new(),
            BFunction::Constant { value } => vec![(*value, 0.0)],
            BFunction::Power { coef, exponent } => vec![(*coef, *exponent)],
            BFunction::Polynomial { coeffs } => coeffs.iter().enumerate().map(|(i, c)| (*c, i as f64)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let terms = self.terms();
        if terms.iter().any(|(c, p)| !c.is_finite() || !p.is_finite()) {
            return Err(Error::invalid("b", "coefficients must be finite"));
        }
        if terms.iter().any(|(_, p)| *p < 0.0) {
            return Err(Error::invalid("b", "exponents must be nonnegative (b must be locally bounded)"));
        }
        // nonnegativity on an evaluation grid
        for i in 0..=2000 {
            let s = 1e-3 * ((i as f64) * 0.01).exp_m1();
            if self.eval(s) < -1e-12 {
                return Err(Error::invalid("b", format!("negative value {} at s = {s}", self.eval(s))));
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.terms().iter().map(|(c, p)| c * s.powf(*p)).sum()
    }

    /// `∫₀^y b`.
    pub fn integral(&self, y: f64) -> f64 {
        self.terms().iter().map(|(c, p)| c * y.powf(p + 1.0) / (p + 1.0)).sum()
    }

    /// `∫_z^y ∫₀^u b(s) ds du` for `0 ≤ z ≤ y`.
    pub fn double_integral_between(&self, z: f64, y: f64) -> f64 {
        self.double_integral_back(y, y - z)
    }

    /// `∫_{y−s}^y ∫₀^u b`, accurate for `s` far below the resolution of `y`.
    pub fn double_integral_back(&self, y: f64, s: f64) -> f64 {
        if y <= 0.0 || s <= 0.0 {
            return 0.0;
        }
        let s = s.min(y);
        // yⁿ − (y − s)ⁿ = −yⁿ · expm1(n · ln(1 − s/y))
        let log_ratio = (-s / y).ln_1p();
        self.terms()
            .iter()
            .map(|(c, p)| {
                let n = p + 2.0;
                let diff = if log_ratio.is_finite() {
                    -y.powf(n) * (n * log_ratio).exp_m1()
                } else {
                    y.powf(n)
                };
                c * diff / ((p + 1.0) * n)
            })
            .sum()
    }
}

/// Drift ingredients of the radial comparison process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialDriftSpec {
    pub b: BFunction,
    pub c0: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
}

fn default_r0() -> f64 {
    0.5
}

impl RadialDriftSpec {
    pub fn new(b: BFunction, c0: f64, r0: f64) -> Result<Self> {
        let s = Self { b, c0, r0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.b.validate()?;
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::invalid("c0", "must be positive"));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::invalid("r0", "must be positive"));
        }
        Ok(())
    }

    /// `φ(r) = C0 + ½ ∫₀^r b`.
    pub fn phi(&self, r: f64) -> f64 {
        self.c0 + 0.5 * self.b.integral(r)
    }

    /// `ψ(r) = 2/(r − 2r₀)`.
    pub fn psi(&self, r: f64) -> f64 {
        2.0 / (r - 2.0 * self.r0)
    }
}

/// `C0 = C1 (1 + 3r₀/4 + coth(C1 r₀)/2)`, continuous at `C1 = 0` (value `1/(2r₀)`).
pub fn c0_from_c1(c1: f64, r0: f64) -> f64 {
    let x = c1 * r0;
    // C1 coth(C1 r0) = (x coth x)/r0
    let x_coth_x = if x.abs() < 1e-4 { 1.0 + x * x / 3.0 } else { x / x.tanh() };
    c1 * (1.0 + 0.75 * r0) + 0.5 * x_coth_x / r0
}

/// Streaming radial comparison: feed it each walk step as it happens.
#[derive(Debug, Clone)]
pub struct RadialTracker<'a> {
    man: &'a TimeDependentManifold,
    spec: RadialDriftSpec,
    alpha: f64,
    rho: f64,
    /// Steps where `ρ` would have dropped to `2r₀` or below.
    pub floor_hits: usize,
    pub near_cut_steps: usize,
}

impl<'a> RadialTracker<'a> {
    /// Starts at `ρ(T1) = d_{g(T1)}(o, x0) + 3r₀`.
    pub fn new(man: &'a TimeDependentManifold, spec: RadialDriftSpec, alpha: f64, x0: &Point) -> Result<Self> {
        spec.validate()?;
        let d0 = man.distance(man.horizon().t1, man.base_point(), x0)?;
        Ok(Self {
            man,
            rho: d0 + 3.0 * spec.r0,
            spec,
            alpha,
            floor_hits: 0,
            near_cut_steps: 0,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `λ = ⟨ξ̃, γ̇⟩` at `x`, `γ` the minimal `g(t)`-geodesic from `o`. Within `r₀`
    /// of `o` the radial direction is replaced by the first frame vector.
    pub fn lambda(&mut self, t: f64, x: &Point, frame: &Frame, draw: &NoiseDraw) -> Result<f64> {
        let o = self.man.base_point();
        let scale = (self.man.dim() as f64 + 2.0).sqrt();
        let d = self.man.distance(t, o, x)?;
        if d < self.spec.r0 {
            return Ok(scale * draw.xi[0]);
        }
        if self.man.near_cut_locus(t, o, x, NEAR_CUT_ANGLE) {
            self.near_cut_steps += 1;
        }
        let geo = self.man.minimal_geodesic(t, o, x)?;
        let xi = frame.apply(&(&draw.xi * scale));
        self.man.inner(t, &xi, &geo.end_velocity)
    }

    /// Advance `ρ` over the step taken from `x` at `t` with the given frame and draw,
    /// covering a fraction `f` of a full step.
    pub fn advance(&mut self, t: f64, x: &Point, frame: &Frame, draw: &NoiseDraw, f: f64) -> Result<f64> {
        let lam = self.lambda(t, x, frame, draw)?;
        let a = self.alpha;
        let drift = self.spec.phi(self.rho) + self.spec.psi(self.rho);
        let next = self.rho + f * (a * lam + a * a * drift);
        let floor = 2.0 * self.spec.r0;
        if next <= floor {
            self.floor_hits += 1;
            self.rho = floor + a * a;
        } else {
            self.rho = next;
        }
        Ok(self.rho)
    }
}

/// `ρ` next to the walk's radial distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialComparison {
    pub rho: ComparisonPath,
    /// `d_{g(t_n)}(o, X(t_n))`.
    pub distances: Vec<f64>,
    pub floor_hits: usize,
    pub near_cut_steps: usize,
}

impl RadialComparison {
    /// Grid points with `d > ρ + margin`.
    pub fn exceedances(&self, margin: f64) -> usize {
        self.distances
            .iter()
            .zip(&self.rho.values)
            .filter(|(d, r)| **d > **r + margin)
            .count()
    }
}

/// Run `ρ` on the noise of a stored walk.
pub fn radial_rho_cosimulate(walk: &WalkPath, man: &TimeDependentManifold, spec: &RadialDriftSpec) -> Result<RadialComparison> {
    let grid = &walk.grid;
    let x0 = &walk.points[0];
    let mut tracker = RadialTracker::new(man, spec.clone(), grid.alpha, x0)?;
    let o = man.base_point();
    let steps = walk.draws.len();
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut distances = Vec::with_capacity(steps + 1);
    times.push(grid.t1);
    values.push(tracker.rho());
    distances.push(man.distance(grid.t1, o, x0)?);
    for n in 0..steps {
        let t = grid.time(n);
        tracker.advance(t, &walk.points[n], &walk.frames[n], &walk.draws[n], grid.fraction(n))?;
        let t_next = grid.time(n + 1);
        times.push(t_next);
        values.push(tracker.rho());
        distances.push(man.distance(t_next, o, &walk.points[n + 1])?);
    }
    Ok(RadialComparison {
        rho: ComparisonPath {
            kind: PathKind::RadialRho,
            times,
            values,
        },
        distances,
        floor_hits: tracker.floor_hits,
        near_cut_steps: tracker.near_cut_steps,
    })
}
