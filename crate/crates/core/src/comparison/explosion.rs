//! Feller-type test for the radial comparison diffusion.
//!
//! With `𝐛(y) = C + ∫₀^y b` and `B(y) = ∫₁^y 𝐛`, the diffusion does not explode iff
//!
//! ```text
//! I(∞) = ∫₁^∞ ∫₁^y exp(B(z) − B(y)) dz dy = ∞.
//! ```
//!
//! `I(Y)` is evaluated on a truncation ladder and classified from its growth.

use std::cell::RefCell;

use quadrature::double_exponential::integrate;
use serde::{Deserialize, Serialize};

use super::BFunction;
use crate::error::{Error, Result};

/// Where `exp(−D)` underflows.
const UNDERFLOW: f64 = 745.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplosionConfig {
    /// Truncation points `Y`, strictly increasing, all above 1.
    pub ladder: Vec<f64>,
    /// Minimum log-log slope of `I(Y)` between rungs for divergence.
    pub slope_threshold: f64,
    /// Maximum relative increment of `I(Y)` between rungs for convergence.
    pub convergence_tol: f64,
    /// Relative accuracy requested from each quadrature.
    pub quad_rel_tol: f64,
}

impl Default for ExplosionConfig {
    fn default() -> Self {
        Self {
            ladder: (1..=6).map(|e| 10f64.powi(e)).collect(),
            slope_threshold: 0.5,
            convergence_tol: 1e-6,
            quad_rel_tol: 1e-10,
        }
    }
}

impl ExplosionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 3 {
            return Err(Error::invalid("ladder", "need at least three rungs"));
        }
        if !(self.ladder[0] > 1.0) || self.ladder.windows(2).any(|w| !(w[1] > w[0])) || self.ladder.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("ladder", "rungs must be finite, above 1 and strictly increasing"));
        }
        if !(self.slope_threshold > 0.0) || !(self.convergence_tol > 0.0) || !(self.quad_rel_tol > 0.0) {
            return Err(Error::invalid("explosion", "thresholds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplosionVerdict {
    NonExplosive,
    Explosive,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialIntegral {
    pub y: f64,
    pub value: f64,
    /// Log-log slope from the previous rung (absent on the first).
    pub slope: Option<f64>,
    /// `(I(Y_i) − I(Y_{i−1})) / I(Y_i)`.
    pub rel_increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplosionReport {
    pub c: f64,
    pub partials: Vec<PartialIntegral>,
    /// Verdict from the last two rungs.
    pub verdict: ExplosionVerdict,
    /// Verdict from the two rungs before, for stability.
    pub previous_verdict: ExplosionVerdict,
    pub stable: bool,
    pub slope_threshold: f64,
    pub convergence_tol: f64,
}

fn classify(prev: f64, cur: f64, y_prev: f64, y_cur: f64, cfg: &ExplosionConfig) -> (f64, f64, ExplosionVerdict) {
    let slope = (cur / prev).ln() / (y_cur / y_prev).ln();
    let inc = (cur - prev) / cur;
    let verdict = if slope >= cfg.slope_threshold {
        ExplosionVerdict::NonExplosive
    } else if inc < cfg.convergence_tol {
        ExplosionVerdict::Explosive
    } else {
        ExplosionVerdict::Inconclusive
    };
    (slope, inc, verdict)
}

/// `D = B(y) − B(y − s) = C s + ∫_{y−s}^y ∫₀^u b`.
fn gap(b: &BFunction, c: f64, y: f64, s: f64) -> f64 {
    c * s + b.double_integral_back(y, s)
}

/// `∫₁^y exp(−D(z, y)) dz`, over `s = y − z` on dyadic pieces scaled to the
/// decay length `1/𝐛(y)`, truncated where the integrand underflows.
fn inner(b: &BFunction, c: f64, y: f64, rel_tol: f64) -> Result<f64> {
    let span = y - 1.0;
    if span <= 0.0 {
        return Ok(0.0);
    }
    let f = |s: f64| (-gap(b, c, y, s)).exp();
    let drift = c + b.integral(y);
    let mut hi = span;
    if gap(b, c, y, span) > UNDERFLOW {
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(b, c, y, mid) > UNDERFLOW {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let width = if drift > 1.0 { 1.0 / drift } else { 1.0 };
    let mut total = 0.0;
    let mut a = 0.0;
    let mut w = width.min(hi);
    while a < hi {
        let bnd = w.min(hi);
        let out = integrate(f, a, bnd, rel_tol * (bnd - a) * f(a).max(1e-300));
        if !out.integral.is_finite() {
            return Err(Error::Numeric(format!("inner quadrature failed at y = {y}")));
        }
        total += out.integral;
        a = bnd;
        w *= 2.0;
    }
    Ok(total)
}

/// Classify the comparison diffusion with drift `𝐛 = C + ∫₀^y b` as explosive or not.
pub fn non_explosion_test(b: &BFunction, c: f64, cfg: &ExplosionConfig) -> Result<ExplosionReport> {
    cfg.validate()?;
    b.validate()?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid("C", "must be finite and nonnegative"));
    }
    // outer pieces: dyadic from 1, with every rung as a breakpoint
    let top = *cfg.ladder.last().expect("validated");
    let mut breaks = vec![1.0];
    let mut p = 2.0;
    while p < top {
        breaks.push(p);
        p *= 2.0;
    }
    breaks.extend(cfg.ladder.iter().copied());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let g = |y: f64| match inner(b, c, y, cfg.quad_rel_tol) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(cfg.ladder.len());
    let mut rung = 0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let scale = (hi - lo) * g(hi).abs().max(1e-300);
        let out = integrate(g, lo, hi, cfg.quad_rel_tol * scale);
        if let Some(e) = err.borrow_mut().take() {
            return Err(e);
        }
        if !out.integral.is_finite() {
            return Err(Error::Numeric(format!("outer quadrature failed on [{lo}, {hi}]")));
        }
        acc += out.integral;
        while rung < cfg.ladder.len() && cfg.ladder[rung] <= hi {
            values.push(acc);
            rung += 1;
        }
    }
    let mut partials = Vec::with_capacity(values.len());
    let mut verdicts = Vec::new();
    for (i, (&y, &value)) in cfg.ladder.iter().zip(&values).enumerate() {
        let (slope, inc) = if i == 0 {
            (None, None)
        } else {
            let (s, inc, v) = classify(values[i - 1], value, cfg.ladder[i - 1], y, cfg);
            verdicts.push(v);
            (Some(s), Some(inc))
        };
        partials.push(PartialIntegral {
            y,
            value,
            slope,
            rel_increment: inc,
        });
    }
    let verdict = verdicts[verdicts.len() - 1];
    let previous_verdict = verdicts[verdicts.len() - 2];
    Ok(ExplosionReport {
        c,
        partials,
        verdict,
        previous_verdict,
        stable: verdict == previous_verdict,
        slope_threshold: cfg.slope_threshold,
        convergence_tol: cfg.convergence_tol,
    })
}
