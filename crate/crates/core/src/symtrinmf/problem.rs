//! Binding of the tri-factorization into the generic block engine:
//! `N = 2` blocks `vec(U)` and `vec(V)`, row-major.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::kernels::{
    h1_grad_u, h1_grad_v, h1_hess_u, h1_value, h2_grad_u, h2_grad_v, h2_hess_v, h2_value,
};
use super::updates::{update_u, update_v};
use super::{f_value, grad_u, grad_v, SymTriInstance};
use crate::block::parts::Nonnegative;
use crate::block::{
    BlockKernel, BlockPartition, BlockProblem, BlockVector, SmoothPart, Subproblem,
    SubproblemSolver,
};
use crate::{Error, Result};

fn partition(inst: &SymTriInstance) -> BlockPartition {
    let (m, r) = (inst.m(), inst.rank());
    BlockPartition::new(vec![m * r, r * r]).expect("m, r ≥ 1")
}

fn views<'a>(
    inst: &SymTriInstance,
    x: &'a BlockVector,
) -> (ArrayView2<'a, f64>, ArrayView2<'a, f64>) {
    let (m, r) = (inst.m(), inst.rank());
    let u = ArrayView2::from_shape((m, r), x.block_slice(0)).expect("U block has m·r entries");
    let v = ArrayView2::from_shape((r, r), x.block_slice(1)).expect("V block has r·r entries");
    (u, v)
}

fn flatten(a: Array2<f64>) -> Array1<f64> {
    let a = if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    };
    let n = a.len();
    a.into_shape_with_order(n).expect("standard layout")
}

/// Packs `(U, V)` into a two-block vector.
pub fn point_from_factors(
    inst: &SymTriInstance,
    u: &Array2<f64>,
    v: &Array2<f64>,
) -> Result<BlockVector> {
    inst.check_shapes(&u.view(), &v.view())?;
    BlockVector::from_blocks(partition(inst), &[flatten(u.clone()), flatten(v.clone())])
}

/// Unpacks a two-block vector into `(U, V)`.
pub fn factors_from_point(
    inst: &SymTriInstance,
    x: &BlockVector,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if x.partition() != &partition(inst) {
        return Err(Error::Shape(format!(
            "point partition {:?} does not match the instance",
            x.partition()
        )));
    }
    let (u, v) = views(inst, x);
    Ok((u.to_owned(), v.to_owned()))
}

struct Objective(Arc<SymTriInstance>);

impl SmoothPart for Objective {
    fn value(&self, x: &BlockVector) -> f64 {
        let (u, v) = views(&self.0, x);
        f_value(&self.0, &u, &v).expect("shapes fixed by the partition")
    }

    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64> {
        let (u, v) = views(&self.0, x);
        let g = match i {
            0 => grad_u(&self.0, &u, &v),
            _ => grad_v(&self.0, &u, &v),
        };
        flatten(g.expect("shapes fixed by the partition"))
    }
}

struct KernelH1(Arc<SymTriInstance>);

impl BlockKernel for KernelH1 {
    fn value(&self, x: &BlockVector) -> f64 {
        let (u, v) = views(&self.0, x);
        h1_value(&self.0, &u, &v)
    }

    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64> {
        let (u, v) = views(&self.0, x);
        flatten(match i {
            0 => h1_grad_u(&self.0, &u, &v),
            _ => h1_grad_v(&self.0, &u, &v),
        })
    }

    fn block_hess_action(
        &self,
        i: usize,
        x: &BlockVector,
        z: ArrayView1<'_, f64>,
    ) -> Option<Array1<f64>> {
        if i != 0 {
            return None;
        }
        let (u, v) = views(&self.0, x);
        let z = z.to_shape(u.dim()).ok()?;
        Some(flatten(h1_hess_u(&self.0, &u, &v, &z.view())))
    }

    fn sigma(&self) -> f64 {
        self.0.sigma1()
    }
}

struct KernelH2(Arc<SymTriInstance>);

impl BlockKernel for KernelH2 {
    fn value(&self, x: &BlockVector) -> f64 {
        let (u, v) = views(&self.0, x);
        h2_value(&self.0, &u, &v)
    }

    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64> {
        let (u, v) = views(&self.0, x);
        flatten(match i {
            0 => h2_grad_u(&self.0, &u, &v),
            _ => h2_grad_v(&self.0, &u, &v),
        })
    }

    fn block_hess_action(
        &self,
        i: usize,
        x: &BlockVector,
        z: ArrayView1<'_, f64>,
    ) -> Option<Array1<f64>> {
        if i != 1 {
            return None;
        }
        let (u, v) = views(&self.0, x);
        let z = z.to_shape(v.dim()).ok()?;
        Some(flatten(h2_hess_v(&self.0, &u, &z.view())))
    }

    fn sigma(&self) -> f64 {
        self.0.sigma2()
    }
}

struct USolver(Arc<SymTriInstance>);

impl SubproblemSolver for USolver {
    fn solve(&self, sub: &Subproblem<'_>) -> Result<Array1<f64>> {
        let (u, v) = views(&self.0, sub.point);
        let (u_prev, _) = views(&self.0, sub.prev);
        Ok(flatten(update_u(
            &self.0, sub.gamma, sub.alpha, &u, &u_prev, &v,
        )?))
    }
}

struct VSolver(Arc<SymTriInstance>);

impl SubproblemSolver for VSolver {
    fn solve(&self, sub: &Subproblem<'_>) -> Result<Array1<f64>> {
        let (u, v) = views(&self.0, sub.point);
        let (_, v_prev) = views(&self.0, sub.prev);
        Ok(flatten(update_v(
            &self.0, sub.gamma, sub.alpha, &u, &v, &v_prev,
        )?))
    }
}

impl SymTriInstance {
    /// Generic problem with `L = (L1, L2)`, kernels `(h1, h2)`,
    /// nonnegativity indicators and the closed-form block solvers.
    pub fn as_block_problem(&self) -> BlockProblem {
        let inst = Arc::new(self.clone());
        self.as_oracle_problem()
            .with_solver(0, Box::new(USolver(inst.clone())))
            .and_then(|p| p.with_solver(1, Box::new(VSolver(inst))))
            .expect("two blocks")
    }

    /// Same problem without exact solvers: every block subproblem goes to
    /// the numeric oracle.
    pub fn as_oracle_problem(&self) -> BlockProblem {
        let inst = Arc::new(self.clone());
        BlockProblem::new(
            partition(self),
            Box::new(Objective(inst.clone())),
            vec![Box::new(KernelH1(inst.clone())), Box::new(KernelH2(inst))],
            vec![self.l1(), self.l2()],
            vec![Box::new(Nonnegative), Box::new(Nonnegative)],
        )
        .expect("instance constants are positive")
    }
}
