//! One-dimensional comparison machinery: the Ornstein–Uhlenbeck dominator of
//! the coupled distance, the `β`/`χ` formulas of the coupling bound, the radial
//! comparison process, the Jacobi scalar ODE and the non-explosion test.

mod explosion;
mod jacobi;
mod radial;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::rng::{stream, tags};

pub use explosion::{non_explosion_test, ExplosionConfig, ExplosionReport, ExplosionVerdict, PartialIntegral};
pub use jacobi::{jacobi_G, JacobiTable};
pub use radial::{c0_from_c1, radial_rho_cosimulate, BFunction, RadialComparison, RadialDriftSpec, RadialTracker};

/// `β(t) = (e^{kt} − 1)/k`, and `t` when `k = 0`.
pub fn beta(k: f64, t: f64) -> f64 {
    let x = k * t;
    if x.abs() < 1e-6 {
        t * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / k
    }
}

/// Standard normal mass of `[−a, a]`.
pub fn chi(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    erf(a / std::f64::consts::SQRT_2)
}

/// `χ(a / 2√β(k, T − T1))`, with the limits 0 at `a = 0` and 1 at a zero horizon.
pub fn coupling_bound(a: f64, k: f64, horizon: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if horizon <= 0.0 {
        return 1.0;
    }
    chi(a / (2.0 * beta(k, horizon).sqrt()))
}

/// `dU = −(k/2) U dt + 2 dB`, `U(T1) = a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OUParams {
    pub a: f64,
    pub k: f64,
    pub t1: f64,
    pub t2: f64,
}

impl OUParams {
    pub fn new(a: f64, k: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::invalid("a", "initial value must be nonnegative"));
        }
        if !(t1 < t2) {
            return Err(Error::invalid("horizon", "need T1 < T2"));
        }
        Ok(Self { a, k, t1, t2 })
    }

    /// Mean and variance of `U(s + dt)` given `U(s) = u`.
    pub fn transition(&self, u: f64, dt: f64) -> (f64, f64) {
        let mean = (-0.5 * self.k * dt).exp() * u;
        let var = 4.0 * (-self.k * dt).exp() * beta(self.k, dt);
        (mean, var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Ou,
    RadialRho,
    DominatorBm,
}

/// Aligned `(time, value)` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonPath {
    pub kind: PathKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ComparisonPath {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }
}

fn time_grid(t1: f64, t2: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let n = (((t2 - t1) / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=n).map(|i| (t1 + dt * i as f64).min(t2)).collect())
}

/// Exact-transition simulation of the OU dominator.
pub fn ou_simulate<R: Rng + ?Sized>(params: &OUParams, dt: f64, rng: &mut R) -> Result<ComparisonPath> {
    let times = time_grid(params.t1, params.t2, dt)?;
    let mut values = Vec::with_capacity(times.len());
    let mut u = params.a;
    values.push(u);
    for w in times.windows(2) {
        let (mean, var) = params.transition(u, w[1] - w[0]);
        u = mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        values.push(u);
    }
    Ok(ComparisonPath {
        kind: PathKind::Ou,
        times,
        values,
    })
}

/// `a + 2B(t)`, the `k = 0` dominator.
pub fn dominator_bm<R: Rng + ?Sized>(a: f64, t1: f64, t2: f64, dt: f64, rng: &mut R) -> Result<ComparisonPath> {
    let times = time_grid(t1, t2, dt)?;
    let mut values = Vec::with_capacity(times.len());
    let mut u = a;
    values.push(u);
    for w in times.windows(2) {
        u += 2.0 * (w[1] - w[0]).sqrt() * rng.sample::<f64, _>(StandardNormal);
        values.push(u);
    }
    Ok(ComparisonPath {
        kind: PathKind::DominatorBm,
        times,
        values,
    })
}

/// `P[inf_{T1 ≤ t ≤ T} U(t) > 0]`, analytically.
pub fn ou_positive_tail(params: &OUParams, t: f64) -> Result<f64> {
    if !(t >= params.t1 && t <= params.t2) {
        return Err(Error::invalid("T", format!("{t} outside [{}, {}]", params.t1, params.t2)));
    }
    Ok(coupling_bound(params.a, params.k, t - params.t1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Monte Carlo `P[inf U > 0]` with exact transitions and a Brownian-bridge
/// correction: each step from `u₀ > 0` to `u₁ > 0` survives with probability
/// `1 − exp(−2 u₀ u₁ / v)`, `v` the transition variance. Per-path survival
/// probabilities are averaged rather than sampled.
pub fn ou_positive_tail_mc(params: &OUParams, t: f64, dt: f64, paths: usize, seed: u64) -> Result<McEstimate> {
    if paths < 2 {
        return Err(Error::invalid("paths", "need at least two paths"));
    }
    let sub = OUParams { t2: t, ..*params };
    let times = time_grid(sub.t1, sub.t2, dt)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..paths {
        let mut rng = stream(seed, tags::OU, i as u64);
        let mut u = sub.a;
        let mut survive = if u > 0.0 { 1.0 } else { 0.0 };
        for w in times.windows(2) {
            if survive == 0.0 {
                break;
            }
            let (mean, var) = sub.transition(u, w[1] - w[0]);
            let next = mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
            if next <= 0.0 {
                survive = 0.0;
            } else {
                survive *= -(-2.0 * u * next / var).exp_m1();
            }
            u = next;
        }
        sum += survive;
        sum_sq += survive * survive;
    }
    let n = paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        paths,
    })
}
