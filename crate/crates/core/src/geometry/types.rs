use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A point of `M` in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: u8,
    pub coords: DVector<f64>,
}

impl Point {
    pub fn new(chart: u8, coords: DVector<f64>) -> Self {
        Self { chart, coords }
    }

    pub fn from_slice(chart: u8, coords: &[f64]) -> Self {
        Self::new(chart, DVector::from_column_slice(coords))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub(crate) fn shifted(&self, axis: usize, h: f64) -> Point {
        let mut p = self.clone();
        p.coords[axis] += h;
        p
    }
}

/// A tangent vector in chart components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: DVector<f64>) -> Self {
        debug_assert_eq!(base.dim(), components.len());
        Self { base, components }
    }

    pub fn zero(base: Point) -> Self {
        let m = base.dim();
        Self::new(base, DVector::zeros(m))
    }

    /// The `i`-th coordinate basis vector `∂_i`.
    pub fn basis(base: Point, i: usize) -> Self {
        let mut c = DVector::zeros(base.dim());
        c[i] = 1.0;
        Self::new(base, c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.base.clone(), &self.components * s)
    }
}

/// `g` and `∂t g` at one `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub g: DMatrix<f64>,
    pub dgdt: DMatrix<f64>,
}

/// `Γ^k_ij` stored densely, `k` outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.data[(k * self.dim + i) * self.dim + j] = value;
    }

    /// `Γ^k_ij a^i b^j` as a vector indexed by `k`.
    pub fn contract(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let m = self.dim;
        DVector::from_fn(m, |k, _| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += self.get(k, i, j) * a[i] * b[j];
                }
            }
            s
        })
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// A `g(t)`-orthonormal frame at a point: columns are the frame vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub base: Point,
    pub columns: DMatrix<f64>,
}

impl Frame {
    /// `Φ ξ` for coefficients `ξ ∈ ℝ^m`.
    pub fn apply(&self, xi: &DVector<f64>) -> TangentVector {
        TangentVector::new(self.base.clone(), &self.columns * xi)
    }

    pub fn vectors(&self) -> Vec<TangentVector> {
        self.columns
            .column_iter()
            .map(|c| TangentVector::new(self.base.clone(), c.into_owned()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSample {
    pub u: f64,
    pub point: Point,
    pub velocity: TangentVector,
}

/// A unit-speed `g(t)`-geodesic `γ: [0, length] → M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    pub time: f64,
    pub start: Point,
    pub end: Point,
    /// `γ̇(0)`, unit length.
    pub start_velocity: TangentVector,
    /// `γ̇(length)`, unit length, in the chart of `end`.
    pub end_velocity: TangentVector,
    pub length: f64,
    /// Ordered samples including both endpoints.
    pub samples: Vec<GeodesicSample>,
    /// The endpoints are close to each other's cut locus.
    pub near_cut_locus: bool,
}

impl Geodesic {
    /// The same curve traversed from `end` to `start`.
    pub fn reversed(&self) -> Geodesic {
        let flip = |v: &TangentVector| v.scaled(-1.0);
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| GeodesicSample {
                u: self.length - s.u,
                point: s.point.clone(),
                velocity: flip(&s.velocity),
            })
            .collect();
        Geodesic {
            time: self.time,
            start: self.end.clone(),
            end: self.start.clone(),
            start_velocity: flip(&self.end_velocity),
            end_velocity: flip(&self.start_velocity),
            length: self.length,
            samples,
            near_cut_locus: self.near_cut_locus,
        }
    }
}
