//! Laplacian kernel, Gram matrices and the biased MMD estimator.
//!
//! Everything is expressed through kernel evaluations; no feature map is
//! ever built. For weighted sample sets `X` and `Y`
//!
//! ```text
//! MMD²(X, Y) = wxᵀ K(X,X) wx − 2 wxᵀ K(X,Y) wy + wyᵀ K(Y,Y) wy
//! ```
//!
//! with all diagonal terms included (V-statistic).

use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;

/// Tolerance on `Σ w = 1` for weighted sample sets.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Width `σ > 0` of the Laplacian kernel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct KernelWidth(f64);

impl KernelWidth {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(KernelWidth(sigma))
        } else {
            Err(invalid("kernel width must be positive and finite"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for KernelWidth {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        KernelWidth::new(v)
    }
}

impl From<KernelWidth> for f64 {
    fn from(k: KernelWidth) -> f64 {
        k.0
    }
}

/// L1 distance; callers guarantee equal lengths.
pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `exp(-‖z − z′‖₁ / σ)`.
pub fn laplacian_kernel(z: &[f64], z_prime: &[f64], sigma: KernelWidth) -> Result<f64> {
    if z.len() != z_prime.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: z_prime.len(),
        });
    }
    Ok((-l1(z, z_prime) / sigma.0).exp())
}

/// Gram matrix between the rows of `a` and the rows of `b`.
pub fn kernel_matrix(a: &Matrix, b: &Matrix, sigma: KernelWidth) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.cols(),
        });
    }
    let mut k = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let ai = a.row(i);
        for j in 0..b.rows() {
            k.set(i, j, (-l1(ai, b.row(j)) / sigma.0).exp());
        }
    }
    Ok(k)
}

/// Samples (rows of `points`) with importance weights summing to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedSampleSet {
    points: Matrix,
    weights: Vec<f64>,
}

impl WeightedSampleSet {
    pub fn new(points: Matrix, weights: Vec<f64>) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::Empty);
        }
        if weights.len() != points.rows() {
            return Err(Error::DimensionMismatch {
                expected: points.rows(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid("weights must sum to 1"));
        }
        Ok(WeightedSampleSet { points, weights })
    }

    /// Equal weights `1/M`.
    pub fn uniform(points: Matrix) -> Result<Self> {
        let m = points.rows();
        let w = if m == 0 { 0.0 } else { 1.0 / m as f64 };
        Self::new(points, alloc::vec![w; m])
    }

    /// One-dimensional samples.
    pub fn scalar(values: &[f64], weights: Vec<f64>) -> Result<Self> {
        Self::new(
            Matrix::from_row_major(values.len(), 1, values.to_vec())?,
            weights,
        )
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    // Total order used to make mmd_squared argument-order independent.
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| {
                for (a, b) in self.points.as_slice().iter().zip(other.points.as_slice()) {
                    match a.total_cmp(b) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                Ordering::Equal
            })
            .then_with(|| {
                for (a, b) in self.weights.iter().zip(&other.weights) {
                    match a.total_cmp(b) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                Ordering::Equal
            })
    }
}

/// `wxᵀ K(X,Y) wy`, summed row by row in index order.
fn weighted_kernel_sum(x: &WeightedSampleSet, y: &WeightedSampleSet, sigma: f64) -> f64 {
    let mut total = 0.0;
    for (i, wi) in x.weights.iter().enumerate() {
        let xi = x.points.row(i);
        let mut row = 0.0;
        for (j, wj) in y.weights.iter().enumerate() {
            row += wj * (-l1(xi, y.points.row(j)) / sigma).exp();
        }
        total += wi * row;
    }
    total
}

/// Biased MMD² before clamping at zero.
///
/// The arguments are put into a canonical order first, so swapping `x` and
/// `y` gives a bit-identical result.
pub fn mmd_squared_raw(
    x: &WeightedSampleSet,
    y: &WeightedSampleSet,
    sigma: KernelWidth,
) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let (x, y) = if x.canonical_cmp(y) == Ordering::Greater {
        (y, x)
    } else {
        (x, y)
    };
    let s = sigma.0;
    let xx = weighted_kernel_sum(x, x, s);
    let yy = weighted_kernel_sum(y, y, s);
    let xy = weighted_kernel_sum(x, y, s);
    Ok(xx + yy - 2.0 * xy)
}

/// Biased MMD² between two weighted sample sets, clamped at zero.
pub fn mmd_squared(
    x: &WeightedSampleSet,
    y: &WeightedSampleSet,
    sigma: KernelWidth,
) -> Result<f64> {
    mmd_squared_raw(x, y, sigma).map(|v| v.max(0.0))
}
