//! Reusable building blocks: the Euclidean kernel, quadratic objectives and
//! the two indicator terms most problems need.

use ndarray::{Array1, Array2, ArrayView1};

use super::{BlockKernel, BlockTerm, BlockVector, SmoothPart};
use crate::linalg::{dot_slices, sum_sq};
use crate::{Error, Result};

/// `h(x) = (c/2)‖x‖²`, strongly convex with modulus `c` in every block.
#[derive(Clone, Copy, Debug)]
pub struct EuclideanKernel {
    scale: f64,
}

impl EuclideanKernel {
    pub fn new() -> Self {
        Self { scale: 1.0 }
    }

    pub fn scaled(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "kernel scale {scale} must be positive"
            )));
        }
        Ok(Self { scale })
    }
}

impl Default for EuclideanKernel {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockKernel for EuclideanKernel {
    fn value(&self, x: &BlockVector) -> f64 {
        0.5 * self.scale * sum_sq(x.as_slice())
    }

    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64> {
        x.block(i).mapv(|v| self.scale * v)
    }

    fn block_hess_action(
        &self,
        _i: usize,
        _x: &BlockVector,
        v: ArrayView1<'_, f64>,
    ) -> Option<Array1<f64>> {
        Some(v.mapv(|t| self.scale * t))
    }

    fn sigma(&self) -> f64 {
        self.scale
    }
}

/// `f(x) = ½ xᵀAx − bᵀx` with symmetric `A`.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    a: Array2<f64>,
    b: Array1<f64>,
}

impl QuadraticObjective {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        let n = b.len();
        if a.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "A is {:?}, b has length {n}",
                a.dim()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            a: Array2::zeros((n, n)),
            b: Array1::zeros(n),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.b
    }
}

impl SmoothPart for QuadraticObjective {
    fn value(&self, x: &BlockVector) -> f64 {
        let x = x.as_slice();
        let ax = self.a.dot(&ArrayView1::from(x));
        0.5 * dot_slices(ax.as_slice().unwrap(), x) - dot_slices(self.b.as_slice().unwrap(), x)
    }

    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64> {
        let r = x.partition().range(i);
        let rows = self.a.slice(ndarray::s![r.clone(), ..]);
        rows.dot(&x.data()) - self.b.slice(ndarray::s![r])
    }
}

/// `g ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unconstrained;

impl BlockTerm for Unconstrained {
    fn value(&self, _z: ArrayView1<'_, f64>) -> f64 {
        0.0
    }

    fn project(&self, z: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
        Some(z.to_owned())
    }
}

/// Indicator of the nonnegative orthant.
#[derive(Clone, Copy, Debug, Default)]
pub struct Nonnegative;

impl BlockTerm for Nonnegative {
    fn value(&self, z: ArrayView1<'_, f64>) -> f64 {
        if z.iter().all(|&v| v >= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn project(&self, z: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
        Some(z.mapv(|v| v.max(0.0)))
    }
}
