//! Symmetric nonnegative matrix tri-factorization `X ≈ U V Uᵀ`.
//!
//! The objective is `f(U, V) = ½‖X − U V Uᵀ‖_F²` with `U ∈ R^{m×r}`,
//! `V ∈ R^{r×r}` constrained entrywise nonnegative. Blocks are `U` then `V`,
//! with kernels
//!
//! ```text
//! h1(U, V) = (a1/4)‖V‖²‖U‖⁴ + (b1/2)(‖X‖‖V‖ + ε1)‖U‖²
//! h2(U, V) = (a2/2)(‖U‖⁴ + ε2)‖V‖²
//! ```
//!
//! (all norms Frobenius). `f` is smooth relative to `(h1, h2)` with
//! `L1 = max(6/a1, 2/b1)` and `L2 = 1/a2`, and both block subproblems have
//! closed-form solutions; see [`update_u`] and [`update_v`].

mod community;
mod cubic;
mod direct;
mod kernels;
mod problem;
mod updates;

use log::warn;
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linalg::{frob_norm, frob_sq};
use crate::{Error, Result};

pub use community::{community_assignment, matches_up_to_permutation};
pub use cubic::cubic_positive_root;
pub use direct::{alternate, AlternationResult};
pub use kernels::{
    h1_grad_u, h1_grad_v, h1_hess_u, h1_value, h2_grad_u, h2_grad_v, h2_hess_v, h2_value,
};
pub use problem::{factors_from_point, point_from_factors};
pub use updates::{update_u, update_u_with_root, update_v};

/// Kernel parameters `(a1, b1, a2, ε1, ε2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for KernelParams {
    /// `a1 = 6, b1 = 2, a2 = 1, ε1 = ε2 = 1`, so that `L1 = L2 = 1`.
    fn default() -> Self {
        Self {
            a1: 6.0,
            b1: 2.0,
            a2: 1.0,
            eps1: 1.0,
            eps2: 1.0,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a1", self.a1),
            ("b1", self.b1),
            ("a2", self.a2),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// Factor pair `(U, V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

/// Data matrix, rank, kernel parameters and the derived constants.
#[derive(Clone, Debug)]
pub struct SymTriInstance {
    x: Array2<f64>,
    rank: usize,
    params: KernelParams,
    norm_x: f64,
}

impl SymTriInstance {
    /// Asymmetric `X` is accepted with a warning; the gradients use the
    /// general `X`/`Xᵀ` form.
    pub fn new(x: Array2<f64>, rank: usize, params: KernelParams) -> Result<Self> {
        params.validate()?;
        let (m, n) = x.dim();
        if m != n {
            return Err(Error::Shape(format!(
                "data matrix must be square, got {m}×{n}"
            )));
        }
        if m == 0 {
            return Err(Error::Shape("data matrix is empty".into()));
        }
        if rank == 0 || rank > m {
            return Err(Error::Parameter(format!("rank {rank} must lie in 1..={m}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("data matrix has non-finite entries".into()));
        }
        if x.iter().any(|&v| v < 0.0) {
            warn!("data matrix has negative entries");
        }
        let norm_x = frob_norm(&x);
        let inst = Self {
            x,
            rank,
            params,
            norm_x,
        };
        if !inst.is_symmetric() {
            warn!(
                "data matrix is not symmetric (‖X − Xᵀ‖ = {:e})",
                frob_norm(&(&inst.x - &inst.x.t()))
            );
        }
        Ok(inst)
    }

    /// Replaces `X` by `(X + Xᵀ)/2`.
    pub fn symmetrized(self) -> Self {
        let x = (&self.x + &self.x.t()) * 0.5;
        let norm_x = frob_norm(&x);
        Self { x, norm_x, ..self }
    }

    pub fn is_symmetric(&self) -> bool {
        frob_norm(&(&self.x - &self.x.t())) <= 1e-12 * self.norm_x
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn norm_x(&self) -> f64 {
        self.norm_x
    }

    pub fn l1(&self) -> f64 {
        (6.0 / self.params.a1).max(2.0 / self.params.b1)
    }

    pub fn l2(&self) -> f64 {
        1.0 / self.params.a2
    }

    pub fn sigma1(&self) -> f64 {
        self.params.b1 * self.params.eps1
    }

    pub fn sigma2(&self) -> f64 {
        self.params.a2 * self.params.eps2
    }

    pub(crate) fn check_shapes(
        &self,
        u: &ArrayView2<'_, f64>,
        v: &ArrayView2<'_, f64>,
    ) -> Result<()> {
        let (m, r) = (self.m(), self.rank);
        if u.dim() != (m, r) {
            return Err(Error::Shape(format!(
                "U is {:?}, expected ({m}, {r})",
                u.dim()
            )));
        }
        if v.dim() != (r, r) {
            return Err(Error::Shape(format!(
                "V is {:?}, expected ({r}, {r})",
                v.dim()
            )));
        }
        Ok(())
    }

    /// `U⁰` uniform in `[0, 1)` and `V⁰ = cI` with `‖U⁰V⁰U⁰ᵀ‖ = ‖X‖`.
    pub fn initial_factors(&self, seed: u64) -> FactorPair {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = Array2::from_shape_fn((self.m(), self.rank), |_| rng.gen::<f64>());
        let uut = frob_norm(&u.dot(&u.t()));
        let c = if uut > 0.0 { self.norm_x / uut } else { 1.0 };
        let v = Array2::eye(self.rank) * c;
        FactorPair { u, v }
    }

    /// [`Self::initial_factors`] packed as a block vector.
    pub fn initial_point(&self, seed: u64) -> crate::BlockVector {
        let f = self.initial_factors(seed);
        point_from_factors(self, &f.u, &f.v).expect("initial factors have instance shapes")
    }

    /// `‖X − U V Uᵀ‖_F / ‖X‖_F` (absolute error when `X = 0`).
    pub fn relative_error(&self, u: &ArrayView2<'_, f64>, v: &ArrayView2<'_, f64>) -> Result<f64> {
        let err = (2.0 * f_value(self, u, v)?).sqrt();
        Ok(if self.norm_x > 0.0 {
            err / self.norm_x
        } else {
            err
        })
    }
}

/// `½‖X − U V Uᵀ‖_F²`.
pub fn f_value(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Result<f64> {
    inst.check_shapes(u, v)?;
    let resid = &inst.x - &u.dot(v).dot(&u.t());
    Ok(0.5 * frob_sq(&resid))
}

/// `∇_U f = −X U Vᵀ − Xᵀ U V + U V UᵀU Vᵀ + U Vᵀ UᵀU V`.
pub fn grad_u(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    inst.check_shapes(u, v)?;
    let x = &inst.x;
    let utu = u.t().dot(u);
    let mut g = u.dot(v).dot(&utu).dot(&v.t());
    g += &u.dot(&v.t()).dot(&utu).dot(v);
    g -= &x.dot(u).dot(&v.t());
    g -= &x.t().dot(u).dot(v);
    Ok(g)
}

/// `∇_V f = Uᵀ(U V Uᵀ − X)U = UᵀU V UᵀU − UᵀXU`.
pub fn grad_v(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    inst.check_shapes(u, v)?;
    let utu = u.t().dot(u);
    Ok(utu.dot(v).dot(&utu) - u.t().dot(&inst.x).dot(u))
}
