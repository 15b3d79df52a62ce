//! Numeric route: finite differences, RK4 and shooting.

use nalgebra::{DMatrix, DVector};

use super::{Christoffel, Geodesic, GeodesicSample, Point, TangentVector, TimeDependentManifold};
use crate::error::{Error, Result};

/// Fourth-order central difference weights for offsets `−2h, −h, h, 2h`.
const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn metric_derivatives(man: &TimeDependentManifold, t: f64, x: &Point) -> Result<Vec<DMatrix<f64>>> {
    let m = man.dim();
    let h = man.config().fd_space_step;
    (0..m)
        .map(|l| {
            let mut acc = DMatrix::zeros(m, m);
            for (off, w) in STENCIL {
                acc += man.model().metric(t, &x.shifted(l, off * h))? * w;
            }
            Ok(acc / (12.0 * h))
        })
        .collect()
}

pub(super) fn christoffel_fd(man: &TimeDependentManifold, t: f64, x: &Point) -> Result<Christoffel> {
    let m = man.dim();
    let g = man.metric_matrix(t, x)?;
    let g_inv = g
        .try_inverse()
        .ok_or_else(|| Error::Geometry("singular metric in Christoffel evaluation".into()))?;
    let dg = metric_derivatives(man, t, x)?;
    let mut out = Christoffel::zeros(m);
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for l in 0..m {
                    s += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out.set(k, i, j, 0.5 * s);
                out.set(k, j, i, 0.5 * s);
            }
        }
    }
    Ok(out)
}

/// Ricci tensor from finite-difference derivatives of the Christoffel symbols.
pub(super) fn ricci_tensor_fd(man: &TimeDependentManifold, t: f64, x: &Point) -> Result<DMatrix<f64>> {
    let m = man.dim();
    let h = man.config().fd_space_step;
    let gamma = man.christoffel(t, x)?;
    // d_gamma[i] = ∂_i Γ
    let mut d_gamma = Vec::with_capacity(m);
    for i in 0..m {
        let mut acc = vec![0.0; m * m * m];
        for (off, w) in STENCIL {
            let g = man.christoffel(t, &x.shifted(i, off * h))?;
            for k in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        acc[(k * m + a) * m + b] += w * g.get(k, a, b);
                    }
                }
            }
        }
        for v in acc.iter_mut() {
            *v /= 12.0 * h;
        }
        d_gamma.push(acc);
    }
    let dg = |i: usize, k: usize, a: usize, b: usize| d_gamma[i][(k * m + a) * m + b];
    let mut ric = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            let mut s = 0.0;
            for i in 0..m {
                s += dg(i, i, j, k) - dg(j, i, i, k);
                for p in 0..m {
                    s += gamma.get(i, i, p) * gamma.get(p, j, k) - gamma.get(i, j, p) * gamma.get(p, i, k);
                }
            }
            ric[(j, k)] = s;
        }
    }
    Ok((&ric + ric.transpose()) * 0.5)
}

fn rk4_steps(man: &TimeDependentManifold, length: f64) -> usize {
    let cfg = man.config();
    let by_len = (length / cfg.rk4_max_step).ceil() as usize;
    by_len.max(cfg.rk4_min_steps).max(1)
}

fn point_in_domain(man: &TimeDependentManifold, chart: u8, x: &DVector<f64>) -> Result<Point> {
    let p = Point::new(chart, x.clone());
    if !man.model().in_domain(&p) {
        return Err(Error::Domain(format!("geodesic left chart {chart} at {:?}", x.as_slice())));
    }
    Ok(p)
}

/// Integrate `ẍ = −Γ(ẋ, ẋ)` (optionally with a transported field `V̇ = −Γ(ẋ, V)`)
/// over parameter length `span` in `n` RK4 steps.
struct GeodesicRun {
    x: DVector<f64>,
    v: DVector<f64>,
    field: Option<DVector<f64>>,
    samples: Vec<(f64, DVector<f64>, DVector<f64>)>,
}

/// `(ẋ, v̇, ẇ)` of the geodesic system with an optional transported field.
type Derivative = (DVector<f64>, DVector<f64>, Option<DVector<f64>>);

#[allow(clippy::too_many_arguments)]
fn integrate(
    man: &TimeDependentManifold,
    t: f64,
    chart: u8,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    field0: Option<&DVector<f64>>,
    span: f64,
    n: usize,
    keep_samples: bool,
) -> Result<GeodesicRun> {
    let rhs = |x: &DVector<f64>, v: &DVector<f64>, w: Option<&DVector<f64>>| -> Result<Derivative> {
        let p = point_in_domain(man, chart, x)?;
        let gamma = man.christoffel(t, &p)?;
        let acc = -gamma.contract(v, v);
        let dw = w.map(|w| -gamma.contract(v, w));
        Ok((v.clone(), acc, dw))
    };
    let dt = span / n as f64;
    let mut x = x0.clone();
    let mut v = v0.clone();
    let mut w = field0.cloned();
    let mut samples = Vec::new();
    if keep_samples {
        samples.push((0.0, x.clone(), v.clone()));
    }
    for step in 0..n {
        let (k1x, k1v, k1w) = rhs(&x, &v, w.as_ref())?;
        let w2 = w.as_ref().zip(k1w.as_ref()).map(|(w, k)| w + k * (0.5 * dt));
        let (k2x, k2v, k2w) = rhs(&(&x + &k1x * (0.5 * dt)), &(&v + &k1v * (0.5 * dt)), w2.as_ref())?;
        let w3 = w.as_ref().zip(k2w.as_ref()).map(|(w, k)| w + k * (0.5 * dt));
        let (k3x, k3v, k3w) = rhs(&(&x + &k2x * (0.5 * dt)), &(&v + &k2v * (0.5 * dt)), w3.as_ref())?;
        let w4 = w.as_ref().zip(k3w.as_ref()).map(|(w, k)| w + k * dt);
        let (k4x, k4v, k4w) = rhs(&(&x + &k3x * dt), &(&v + &k3v * dt), w4.as_ref())?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        if let Some(w) = w.as_mut() {
            let (a, b, c, d) = (k1w.unwrap(), k2w.unwrap(), k3w.unwrap(), k4w.unwrap());
            *w += (a + b * 2.0 + c * 2.0 + d) * (dt / 6.0);
        }
        if keep_samples {
            samples.push(((step + 1) as f64 * dt, x.clone(), v.clone()));
        }
    }
    point_in_domain(man, chart, &x)?;
    Ok(GeodesicRun { x, v, field: w, samples })
}

pub(super) fn exp_rk4(man: &TimeDependentManifold, t: f64, v: &TangentVector) -> Result<Point> {
    let len = man.norm(t, v)?;
    let n = rk4_steps(man, len);
    let run = integrate(man, t, v.base.chart, &v.base.coords, &v.components, None, 1.0, n, false)?;
    Ok(Point::new(v.base.chart, run.x))
}

pub(super) fn transport_rk4(
    man: &TimeDependentManifold,
    t: f64,
    geo: &Geodesic,
    w: &TangentVector,
) -> Result<TangentVector> {
    let start = &geo.start;
    let v0 = man.same_chart(&geo.start_velocity.base, start.chart).and_then(|_| {
        if geo.start_velocity.base.chart == start.chart {
            Ok(geo.start_velocity.components.clone())
        } else {
            Err(Error::Domain("start velocity chart mismatch".into()))
        }
    })?;
    let n = rk4_steps(man, geo.length);
    let run = integrate(man, t, start.chart, &start.coords, &v0, Some(&w.components), geo.length, n, false)?;
    let out = TangentVector::new(Point::new(start.chart, run.x), run.field.expect("field integrated"));
    if geo.end.chart == start.chart {
        Ok(TangentVector::new(geo.end.clone(), out.components))
    } else {
        man.model()
            .vector_to_chart(&out, geo.end.chart)
            .ok_or_else(|| Error::Domain("transported vector not representable at geodesic end".into()))
    }
}

/// Damped Newton on the initial velocity `v` so that `exp_x(v) = target` (chart coordinates).
fn newton(man: &TimeDependentManifold, t: f64, x: &Point, target: &DVector<f64>, v0: DVector<f64>) -> Result<DVector<f64>> {
    let cfg = *man.config();
    let endpoint = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let tv = TangentVector::new(x.clone(), v.clone());
        let len = man.norm(t, &tv)?;
        if len > cfg.trust_radius {
            return Err(Error::Domain(format!("shooting velocity of length {len:.3e} beyond the trust radius")));
        }
        let n = rk4_steps(man, len);
        Ok(integrate(man, t, x.chart, &x.coords, v, None, 1.0, n, false)?.x)
    };
    // a residual this small that no longer decreases is finite-difference noise
    let stall_tol = 1e-8 * (1.0 + target.norm());
    let m = man.dim();
    let mut v = v0;
    let mut residual_vec = endpoint(&v)? - target;
    let mut residual = residual_vec.norm();
    let mut iterations = 0;
    while residual > cfg.shooting_tol {
        if iterations >= cfg.shooting_max_iter {
            return Err(Error::GeodesicSolve { iterations, residual });
        }
        iterations += 1;
        let eps = 1e-6 * v.norm().max(1e-3);
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut vp = v.clone();
            vp[j] += eps;
            let mut vm = v.clone();
            vm[j] -= eps;
            let col = (endpoint(&vp)? - endpoint(&vm)?) / (2.0 * eps);
            jac.set_column(j, &col);
        }
        let mut step = jac
            .lu()
            .solve(&(-&residual_vec))
            .ok_or(Error::GeodesicSolve { iterations, residual })?;
        let cap = v.norm().max(1.0);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &v + &step * damping;
            if let Ok(end) = endpoint(&trial) {
                let r = end - target;
                if r.norm() < residual {
                    v = trial;
                    residual = r.norm();
                    residual_vec = r;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            if residual <= stall_tol {
                break;
            }
            return Err(Error::GeodesicSolve { iterations, residual });
        }
    }
    Ok(v)
}

/// `g(t)`-length of the chart segment from `x` to `y` (Simpson, 64 panels), an
/// upper bound for the distance; `None` if the segment leaves the chart.
fn segment_length(man: &TimeDependentManifold, t: f64, x: &Point, y: &Point) -> Option<f64> {
    let d = &y.coords - &x.coords;
    let panels = 64;
    let mut sum = 0.0;
    for i in 0..=2 * panels {
        let s = i as f64 / (2 * panels) as f64;
        let p = Point::new(x.chart, &x.coords + &d * s);
        if !man.model().in_domain(&p) {
            return None;
        }
        let g = man.metric_matrix(t, &p).ok()?;
        let speed = d.dot(&(&g * &d)).max(0.0).sqrt();
        let w = if i == 0 || i == 2 * panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * speed;
    }
    Some(sum / (6 * panels) as f64)
}

/// Two-point boundary value problem by damped Newton shooting from the chart straight line.
///
/// When the direct solve fails or lands on a geodesic longer than the chart
/// segment or the diameter (so not minimal), the target is moved from `x` to `y` along the
/// segment in steps, warm-starting each solve from the previous one.
pub(super) fn shoot(man: &TimeDependentManifold, t: f64, x: &Point, y: &Point) -> Result<Geodesic> {
    let chart = x.chart;
    let direct = &y.coords - &x.coords;
    // the chart segment and the diameter both bound the distance from above
    let bound = match (segment_length(man, t, x, y), man.diameter(t)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let length_of = |v: &DVector<f64>| man.norm(t, &TangentVector::new(x.clone(), v.clone()));
    let minimal = |v: &DVector<f64>| -> Result<bool> {
        Ok(match bound {
            Some(b) => length_of(v)? <= b * (1.0 + 1e-9) + 1e-12,
            None => true,
        })
    };
    let v = match newton(man, t, x, &y.coords, direct.clone()) {
        Ok(v) if minimal(&v)? => v,
        first => {
            let mut v = DVector::zeros(direct.len());
            let (mut s, mut ds) = (0.0f64, 0.125f64);
            while s < 1.0 {
                let next = (s + ds).min(1.0);
                let target = &x.coords + &direct * next;
                let guess = if s == 0.0 { &direct * next } else { &v * (next / s) };
                // partial targets are no farther than the full segment
                match newton(man, t, x, &target, guess) {
                    Ok(w) if minimal(&w)? => {
                        v = w;
                        s = next;
                        ds = (ds * 1.5).min(0.25);
                    }
                    other => {
                        ds *= 0.5;
                        if ds < 1e-4 {
                            return Err(match (first, other) {
                                (Err(e), _) | (_, Err(e)) => e,
                                _ => Error::Geometry("shooting converged only to non-minimal geodesics".into()),
                            });
                        }
                    }
                }
            }
            v
        }
    };
    let tv = TangentVector::new(x.clone(), v);
    let length = man.norm(t, &tv)?;
    let unit = &tv.components / length;
    let n = rk4_steps(man, length);
    let run = integrate(man, t, chart, &x.coords, &unit, None, length, n, true)?;
    let samples: Vec<GeodesicSample> = run
        .samples
        .into_iter()
        .map(|(u, p, vel)| {
            let point = Point::new(chart, p);
            GeodesicSample {
                u,
                velocity: TangentVector::new(point.clone(), vel),
                point,
            }
        })
        .collect();
    let end = Point::new(chart, y.coords.clone());
    Ok(Geodesic {
        time: t,
        start: x.clone(),
        start_velocity: TangentVector::new(x.clone(), unit),
        end_velocity: TangentVector::new(end.clone(), run.v),
        end,
        length,
        samples,
        near_cut_locus: false,
    })
}
