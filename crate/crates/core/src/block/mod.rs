//! Block-structured vectors, problem interfaces and block Bregman distances.
//!
//! A point `x ∈ Rⁿ` is split into `N` blocks `x_1, …, x_N` of fixed sizes.
//! A [`BlockProblem`] bundles everything the inertial Bregman engine needs:
//! the smooth coupling term `f`, one kernel `h_i` per block with its
//! relative-smoothness constant `L_i`, and one nonsmooth term `g_i` per block
//! (optionally with an exact subproblem solver).
//!
//! Extended reals are plain `f64` with `f64::INFINITY` standing for `+∞`.

use std::fmt;
use std::ops::Range;

use ndarray::{Array1, ArrayView1, ArrayViewMut1};

use crate::linalg::{bregman_three_term, dot_slices};
use crate::{Error, Result};

pub mod parts;

/// Sizes `n_1, …, n_N` of the blocks and their offsets into the full vector.
#[derive(Clone, PartialEq, Eq)]
pub struct BlockPartition {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Parameter(
                "a partition needs at least one block".into(),
            ));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Parameter(format!("block {i} has dimension 0")));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &d in &dims {
            acc += d;
            offsets.push(acc);
        }
        Ok(Self { dims, offsets })
    }

    /// Single-block partition of `Rⁿ`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Index range of block `i` inside the full vector.
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    fn check_block(&self, i: usize) -> Result<()> {
        if i >= self.num_blocks() {
            return Err(Error::Parameter(format!(
                "block index {i} out of range for {} blocks",
                self.num_blocks()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for BlockPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockPartition{:?}", self.dims)
    }
}

/// A point of `Rⁿ` together with its block partition.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    partition: BlockPartition,
    data: Array1<f64>,
}

impl BlockVector {
    pub fn new(partition: BlockPartition, data: Array1<f64>) -> Result<Self> {
        if data.len() != partition.total_dim() {
            return Err(Error::Shape(format!(
                "vector of length {} does not match partition {:?} (n = {})",
                data.len(),
                partition,
                partition.total_dim()
            )));
        }
        Ok(Self { partition, data })
    }

    pub fn zeros(partition: BlockPartition) -> Self {
        let n = partition.total_dim();
        Self {
            partition,
            data: Array1::zeros(n),
        }
    }

    /// Concatenates one array per block.
    pub fn from_blocks(partition: BlockPartition, blocks: &[Array1<f64>]) -> Result<Self> {
        if blocks.len() != partition.num_blocks() {
            return Err(Error::Shape(format!(
                "{} blocks supplied for a {}-block partition",
                blocks.len(),
                partition.num_blocks()
            )));
        }
        let mut out = Self::zeros(partition);
        for (i, b) in blocks.iter().enumerate() {
            out.set_block(i, b.view())?;
        }
        Ok(out)
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn data(&self) -> ArrayView1<'_, f64> {
        self.data.view()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice().expect("block vectors are contiguous")
    }

    pub fn into_data(self) -> Array1<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.slice(ndarray::s![self.partition.range(i)])
    }

    pub fn block_slice(&self, i: usize) -> &[f64] {
        &self.as_slice()[self.partition.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> ArrayViewMut1<'_, f64> {
        let r = self.partition.range(i);
        self.data.slice_mut(ndarray::s![r])
    }

    /// Overwrites block `i` with `z`.
    pub fn set_block(&mut self, i: usize, z: ArrayView1<'_, f64>) -> Result<()> {
        self.partition.check_block(i)?;
        if z.len() != self.partition.dim(i) {
            return Err(Error::Shape(format!(
                "block {i} has dimension {}, got {}",
                self.partition.dim(i),
                z.len()
            )));
        }
        self.block_mut(i).assign(&z);
        Ok(())
    }

    /// Copy of `self` with block `i` replaced by `z`.
    pub fn with_block(&self, i: usize, z: ArrayView1<'_, f64>) -> Result<Self> {
        let mut out = self.clone();
        out.set_block(i, z)?;
        Ok(out)
    }

    /// Owned copies of every block, in order.
    pub fn blocks(&self) -> Vec<Array1<f64>> {
        (0..self.num_blocks())
            .map(|i| self.block(i).to_owned())
            .collect()
    }
}

/// The smooth coupling term `f`.
pub trait SmoothPart: Send + Sync {
    fn value(&self, x: &BlockVector) -> f64;

    /// Partial gradient `∇_i f(x)`, of length `n_i`.
    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64>;
}

/// A block kernel `h_i`: convex and coercive along block `i`.
pub trait BlockKernel: Send + Sync {
    fn value(&self, x: &BlockVector) -> f64;

    fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64>;

    /// `∇²_{x_i x_i} h(x) v`, when the kernel provides it.
    fn block_hess_action(
        &self,
        _i: usize,
        _x: &BlockVector,
        _v: ArrayView1<'_, f64>,
    ) -> Option<Array1<f64>> {
        None
    }

    /// Block strong-convexity modulus `σ_i`.
    fn sigma(&self) -> f64;

    fn in_domain(&self, _x: &BlockVector) -> bool {
        true
    }
}

/// A nonsmooth block term `g_i`, taking values in `(-∞, +∞]`.
pub trait BlockTerm: Send + Sync {
    fn value(&self, z: ArrayView1<'_, f64>) -> f64;

    /// Euclidean projection onto the domain, for indicator-type terms.
    fn project(&self, _z: ArrayView1<'_, f64>) -> Option<Array1<f64>> {
        None
    }
}

/// Data of one block subproblem: minimize the block model at `point`
/// (the freshest partial iterate) with inertia taken from `prev`.
#[derive(Clone, Copy, Debug)]
pub struct Subproblem<'a> {
    pub block: usize,
    pub point: &'a BlockVector,
    pub prev: &'a BlockVector,
    pub gamma: f64,
    pub alpha: f64,
}

/// Exact minimizer of a block model supplied by an application.
pub trait SubproblemSolver: Send + Sync {
    fn solve(&self, sub: &Subproblem<'_>) -> Result<Array1<f64>>;
}

/// Everything the engine needs: `Φ = f + Σ g_i`, kernels `h_i` and
/// relative-smoothness constants `L_i`.
pub struct BlockProblem {
    partition: BlockPartition,
    smooth: Box<dyn SmoothPart>,
    kernels: Vec<Box<dyn BlockKernel>>,
    lipschitz: Vec<f64>,
    terms: Vec<Box<dyn BlockTerm>>,
    solvers: Vec<Option<Box<dyn SubproblemSolver>>>,
    oracle_fallback: bool,
}

impl BlockProblem {
    pub fn new(
        partition: BlockPartition,
        smooth: Box<dyn SmoothPart>,
        kernels: Vec<Box<dyn BlockKernel>>,
        lipschitz: Vec<f64>,
        terms: Vec<Box<dyn BlockTerm>>,
    ) -> Result<Self> {
        let n = partition.num_blocks();
        if kernels.len() != n || lipschitz.len() != n || terms.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} kernels, constants and terms; got {}, {}, {}",
                kernels.len(),
                lipschitz.len(),
                terms.len()
            )));
        }
        check_positive("L", &lipschitz)?;
        let sigmas: Vec<f64> = kernels.iter().map(|k| k.sigma()).collect();
        check_positive("sigma", &sigmas)?;
        Ok(Self {
            partition,
            smooth,
            kernels,
            lipschitz,
            terms,
            solvers: (0..n).map(|_| None).collect(),
            oracle_fallback: true,
        })
    }

    /// Attaches an exact subproblem solver for block `i`.
    pub fn with_solver(mut self, i: usize, solver: Box<dyn SubproblemSolver>) -> Result<Self> {
        self.partition.check_block(i)?;
        self.solvers[i] = Some(solver);
        Ok(self)
    }

    /// Whether blocks without an exact solver may fall back to the numeric
    /// projected-gradient oracle. On by default.
    pub fn with_oracle_fallback(mut self, allowed: bool) -> Self {
        self.oracle_fallback = allowed;
        self
    }

    pub fn oracle_fallback(&self) -> bool {
        self.oracle_fallback
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn smooth(&self) -> &dyn SmoothPart {
        self.smooth.as_ref()
    }

    pub fn kernel(&self, i: usize) -> &dyn BlockKernel {
        self.kernels[i].as_ref()
    }

    pub fn term(&self, i: usize) -> &dyn BlockTerm {
        self.terms[i].as_ref()
    }

    pub fn solver(&self, i: usize) -> Option<&dyn SubproblemSolver> {
        self.solvers[i].as_deref()
    }

    pub fn lipschitz(&self) -> Vec<f64> {
        self.lipschitz.clone()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.kernels.iter().map(|k| k.sigma()).collect()
    }

    /// Replaces the relative-smoothness constants.
    pub fn set_lipschitz(&mut self, lipschitz: Vec<f64>) -> Result<()> {
        if lipschitz.len() != self.num_blocks() {
            return Err(Error::Shape(format!(
                "expected {} constants, got {}",
                self.num_blocks(),
                lipschitz.len()
            )));
        }
        check_positive("L", &lipschitz)?;
        self.lipschitz = lipschitz;
        Ok(())
    }

    pub(crate) fn check_point(&self, x: &BlockVector) -> Result<()> {
        if x.partition() != &self.partition {
            return Err(Error::Shape(format!(
                "point partition {:?} does not match problem partition {:?}",
                x.partition(),
                self.partition
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for BlockProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockProblem")
            .field("partition", &self.partition)
            .field("lipschitz", &self.lipschitz)
            .field("sigmas", &self.sigmas())
            .field("oracle_fallback", &self.oracle_fallback)
            .finish_non_exhaustive()
    }
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name}[{i}] = {v} must be positive and finite"
            )));
        }
    }
    Ok(())
}

/// Extended-real addition. `+∞ + -∞` is a programming error.
pub fn ext_add(a: f64, b: f64) -> f64 {
    assert!(
        !(a.is_infinite() && b.is_infinite() && a.signum() != b.signum()),
        "undefined extended-real sum {a} + {b}"
    );
    a + b
}

/// `D_{h}(x with block i ← y_i, x) = h(y) − h(x) − ⟨∇_i h(x), y_i − x_i⟩`.
///
/// Rounding can push the three-term difference slightly below zero; the
/// result is clamped at zero.
pub fn block_bregman_distance(
    kernel: &dyn BlockKernel,
    i: usize,
    x: &BlockVector,
    y_i: ArrayView1<'_, f64>,
) -> Result<f64> {
    x.partition().check_block(i)?;
    if !kernel.in_domain(x) {
        return Err(Error::Domain("base point of the Bregman distance".into()));
    }
    let y = x.with_block(i, y_i)?;
    if !kernel.in_domain(&y) {
        return Err(Error::Domain(format!(
            "block {i} replacement of the Bregman distance"
        )));
    }
    let hx = kernel.value(x);
    if !hx.is_finite() {
        return Err(Error::Domain(format!(
            "kernel value {hx} at the base point"
        )));
    }
    let hy = kernel.value(&y);
    if hy == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if !hy.is_finite() {
        return Err(Error::Domain(format!(
            "kernel value {hy} at the replaced point"
        )));
    }
    let grad = kernel.block_grad(i, x);
    Ok(bregman_three_term(
        hy,
        hx,
        grad.as_slice().unwrap(),
        y.block_slice(i),
        x.block_slice(i),
    ))
}

/// `Φ(x) = f(x) + Σ_i g_i(x_i)`.
pub fn phi_value(problem: &BlockProblem, x: &BlockVector) -> f64 {
    let mut total = problem.smooth().value(x);
    for i in 0..problem.num_blocks() {
        total = ext_add(total, problem.term(i).value(x.block(i)));
    }
    total
}

/// Block-`i` model at `z`:
/// `⟨∇_i f(x) − (α/γ)(x_i − x_prev,i), z − x_i⟩ + D_{h_i}(z, x)/γ + g_i(z)`.
pub fn model_value(
    problem: &BlockProblem,
    gamma: f64,
    alpha: f64,
    i: usize,
    x: &BlockVector,
    x_prev: &BlockVector,
    z: ArrayView1<'_, f64>,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Parameter(format!(
            "step size {gamma} must be positive"
        )));
    }
    problem.check_point(x)?;
    problem.check_point(x_prev)?;
    let lin = model_linear_term(problem, gamma, alpha, i, x, x_prev);
    let dist = block_bregman_distance(problem.kernel(i), i, x, z)?;
    let g = problem.term(i).value(z);
    let diff: Vec<f64> = z.iter().zip(x.block(i)).map(|(a, b)| a - b).collect();
    let value = dot_slices(lin.as_slice().unwrap(), &diff);
    Ok(ext_add(ext_add(value, dist / gamma), g))
}

/// `∇_i f(x) − (α/γ)(x_i − x_prev,i)`.
pub(crate) fn model_linear_term(
    problem: &BlockProblem,
    gamma: f64,
    alpha: f64,
    i: usize,
    x: &BlockVector,
    x_prev: &BlockVector,
) -> Array1<f64> {
    let mut c = problem.smooth().block_grad(i, x);
    let ratio = alpha / gamma;
    for ((c, a), b) in c.iter_mut().zip(x.block(i)).zip(x_prev.block(i)) {
        *c -= ratio * (a - b);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::parts::{EuclideanKernel, Nonnegative, QuadraticObjective, Unconstrained};
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn euclid_problem(n: usize, f: QuadraticObjective) -> BlockProblem {
        BlockProblem::new(
            BlockPartition::single(n).unwrap(),
            Box::new(f),
            vec![Box::new(EuclideanKernel::new())],
            vec![1.0],
            vec![Box::new(Unconstrained)],
        )
        .unwrap()
    }

    #[test]
    fn partition_rejects_empty_and_zero_blocks() {
        assert!(BlockPartition::new(vec![]).is_err());
        assert!(BlockPartition::new(vec![2, 0]).is_err());
        let p = BlockPartition::new(vec![2, 3, 1]).unwrap();
        assert_eq!(p.total_dim(), 6);
        assert_eq!(p.range(1), 2..5);
        assert_eq!(p.range(2), 5..6);
    }

    #[test]
    fn block_vector_length_checked() {
        let p = BlockPartition::new(vec![2, 1]).unwrap();
        assert!(BlockVector::new(p.clone(), array![1.0, 2.0]).is_err());
        let x = BlockVector::new(p, array![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x.block(1), array![3.0]);
        assert!(x.with_block(0, array![1.0].view()).is_err());
    }

    #[test]
    fn bregman_of_half_square_is_half_squared_gap() {
        let k = EuclideanKernel::new();
        let x = BlockVector::new(BlockPartition::single(1).unwrap(), array![1.0]).unwrap();
        assert_eq!(
            block_bregman_distance(&k, 0, &x, array![3.0].view()).unwrap(),
            2.0
        );
        assert_eq!(
            block_bregman_distance(&k, 0, &x, array![1.0].view()).unwrap(),
            0.0
        );
    }

    #[test]
    fn bregman_reports_domain_violation() {
        struct PositiveOnly;
        impl BlockKernel for PositiveOnly {
            fn value(&self, x: &BlockVector) -> f64 {
                -x.data().iter().map(|v| v.ln()).sum::<f64>()
            }
            fn block_grad(&self, i: usize, x: &BlockVector) -> Array1<f64> {
                x.block(i).mapv(|v| -1.0 / v)
            }
            fn sigma(&self) -> f64 {
                1.0
            }
            fn in_domain(&self, x: &BlockVector) -> bool {
                x.data().iter().all(|&v| v > 0.0)
            }
        }
        let x = BlockVector::new(BlockPartition::single(1).unwrap(), array![-1.0]).unwrap();
        let err = block_bregman_distance(&PositiveOnly, 0, &x, array![1.0].view()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn phi_is_infinite_off_the_nonnegative_orthant() {
        let p = BlockPartition::new(vec![1, 2]).unwrap();
        let problem = BlockProblem::new(
            p.clone(),
            Box::new(QuadraticObjective::zero(3)),
            vec![
                Box::new(EuclideanKernel::new()),
                Box::new(EuclideanKernel::new()),
            ],
            vec![1.0, 1.0],
            vec![Box::new(Nonnegative), Box::new(Nonnegative)],
        )
        .unwrap();
        let feasible = BlockVector::new(p.clone(), array![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(phi_value(&problem, &feasible), 0.0);
        let infeasible = BlockVector::new(p, array![0.0, -1.0, 2.0]).unwrap();
        assert_eq!(phi_value(&problem, &infeasible), f64::INFINITY);
    }

    #[test]
    fn problem_validates_lengths_and_constants() {
        let p = BlockPartition::new(vec![1, 1]).unwrap();
        let short = BlockProblem::new(
            p.clone(),
            Box::new(QuadraticObjective::zero(2)),
            vec![Box::new(EuclideanKernel::new())],
            vec![1.0, 1.0],
            vec![Box::new(Unconstrained), Box::new(Unconstrained)],
        );
        assert!(matches!(short, Err(Error::Shape(_))));
        let bad_l = BlockProblem::new(
            p,
            Box::new(QuadraticObjective::zero(2)),
            vec![
                Box::new(EuclideanKernel::new()),
                Box::new(EuclideanKernel::new()),
            ],
            vec![1.0, 0.0],
            vec![Box::new(Unconstrained), Box::new(Unconstrained)],
        );
        assert!(matches!(bad_l, Err(Error::Parameter(_))));
    }

    #[test]
    fn model_vanishes_at_current_block() {
        let f = QuadraticObjective::new(array![[2.0, 0.5], [0.5, 1.0]], array![1.0, -1.0]).unwrap();
        let problem = euclid_problem(2, f);
        let p = problem.partition().clone();
        let x = BlockVector::new(p.clone(), array![0.3, -0.7]).unwrap();
        let prev = BlockVector::new(p, array![0.1, 0.2]).unwrap();
        let v = model_value(&problem, 0.7, 0.2, 0, &x, &prev, x.block(0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn model_with_linear_f_matches_closed_form() {
        // f(x) = -⟨b, x⟩ has gradient c = -b.
        let f = QuadraticObjective::new(ndarray::Array2::zeros((2, 2)), array![1.0, -2.0]).unwrap();
        let problem = euclid_problem(2, f);
        let p = problem.partition().clone();
        let x = BlockVector::new(p, array![0.5, 1.5]).unwrap();
        let z = array![2.0, -1.0];
        let c = array![-1.0, 2.0];
        let d = &z - &x.block(0);
        let expected = c.dot(&d) + 0.5 * d.dot(&d);
        let v = model_value(&problem, 1.0, 0.0, 0, &x, &x, z.view()).unwrap();
        assert!((v - expected).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn scatter_gather_is_exact(
            dims in proptest::collection::vec(1usize..5, 1..5),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let p = BlockPartition::new(dims).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Array1<f64> = (0..p.total_dim()).map(|_| rng.gen::<f64>() * 1e3 - 5e2).collect();
            let x = BlockVector::new(p.clone(), data.clone()).unwrap();
            let y = BlockVector::from_blocks(p, &x.blocks()).unwrap();
            for (a, b) in y.data().iter().zip(data.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn euclidean_bregman_nonnegative_and_zero_only_at_identity(
            x in proptest::collection::vec(-10.0f64..10.0, 3),
            y in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let k = EuclideanKernel::new();
            let p = BlockPartition::single(3).unwrap();
            let xv = BlockVector::new(p, Array1::from(x.clone())).unwrap();
            let yv = Array1::from(y.clone());
            let d = block_bregman_distance(&k, 0, &xv, yv.view()).unwrap();
            prop_assert!(d >= 0.0);
            let gap: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d == 0.0 {
                prop_assert!(gap <= 1e-7);
            }
            prop_assert_eq!(block_bregman_distance(&k, 0, &xv, xv.block(0)).unwrap(), 0.0);
        }

        #[test]
        fn phi_independent_of_block_split(
            data in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let a = ndarray::Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 2.0 } else { 0.3 });
            let b = array![1.0, 0.0, -1.0, 0.5];
            let one = BlockProblem::new(
                BlockPartition::single(4).unwrap(),
                Box::new(QuadraticObjective::new(a.clone(), b.clone()).unwrap()),
                vec![Box::new(EuclideanKernel::new())],
                vec![3.0],
                vec![Box::new(Nonnegative)],
            ).unwrap();
            let p2 = BlockPartition::new(vec![1, 3]).unwrap();
            let two = BlockProblem::new(
                p2.clone(),
                Box::new(QuadraticObjective::new(a, b).unwrap()),
                vec![Box::new(EuclideanKernel::new()), Box::new(EuclideanKernel::new())],
                vec![3.0, 3.0],
                vec![Box::new(Nonnegative), Box::new(Nonnegative)],
            ).unwrap();
            let v = Array1::from(data);
            let x1 = BlockVector::new(BlockPartition::single(4).unwrap(), v.clone()).unwrap();
            let x2 = BlockVector::new(p2, v).unwrap();
            prop_assert_eq!(phi_value(&one, &x1), phi_value(&two, &x2));
        }
    }
}
