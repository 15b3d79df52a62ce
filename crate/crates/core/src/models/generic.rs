use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::geometry::{MetricModel, Point};

pub type MetricFn = dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync;
pub type DomainFn = dyn Fn(&DVector<f64>) -> bool + Send + Sync;

/// Single-chart model from user-supplied metric coefficients; numeric geometry only.
#[derive(Clone)]
pub struct ChartGenericModel {
    name: String,
    dim: usize,
    metric: Arc<MetricFn>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for ChartGenericModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartGenericModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ChartGenericModel {
    pub fn new(name: impl Into<String>, dim: usize, metric: Arc<MetricFn>, domain: Arc<DomainFn>) -> Self {
        Self {
            name: name.into(),
            dim,
            metric,
            domain,
        }
    }

    /// `g(t) = e^{2λt} · diag(g0)` on all of `ℝ^m`.
    pub fn exp_scaled(lambda: f64, g0: Vec<f64>) -> Self {
        let dim = g0.len();
        let diag = DVector::from_vec(g0);
        Self::new(
            "exp_scaled",
            dim,
            Arc::new(move |t, _x| DMatrix::from_diagonal(&(&diag * (2.0 * lambda * t).exp()))),
            Arc::new(|_| true),
        )
    }

    /// Flat plane in polar coordinates `(r, θ)`: `diag(1, r²)` for `r > 0`.
    pub fn polar_flat() -> Self {
        Self::new(
            "polar_flat",
            2,
            Arc::new(|_t, x| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, x[0] * x[0]]))),
            Arc::new(|x| x[0] > 1e-9),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl MetricModel for ChartGenericModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, t: f64, x: &Point) -> Result<DMatrix<f64>> {
        Ok((self.metric)(t, &x.coords))
    }

    fn in_domain(&self, x: &Point) -> bool {
        x.chart == 0 && x.coords.iter().all(|c| c.is_finite()) && (self.domain)(&x.coords)
    }
}
