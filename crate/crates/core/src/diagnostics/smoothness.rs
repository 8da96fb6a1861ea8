//! Sampled certification of block relative smoothness.
//!
//! For pairs `x`, `y` that differ only in block `i` both characterizations
//! are tested:
//!
//! ```text
//! f(y) ≤ f(x) + ⟨∇_i f(x), y_i − x_i⟩ + L_i D_{h_i}(y, x)
//! ⟨∇_i f(x) − ∇_i f(y), x_i − y_i⟩ ≤ L_i ⟨∇_i h_i(x) − ∇_i h_i(y), x_i − y_i⟩
//! ```
//!
//! Points have entries uniform in `[0, 1)`, scaled by 1, 10 and 0.1 in turn.
//! The quartic terms of the tri-factorization kernels make large scales the
//! informative ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block::{block_bregman_distance, BlockProblem, BlockVector};
use crate::linalg::dot_slices;
use crate::Result;

pub const SAMPLE_SCALES: [f64; 3] = [1.0, 10.0, 0.1];
pub const ABSOLUTE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub violations: usize,
    /// Largest `lhs − rhs` seen; negative when every check held strictly.
    pub worst_slack: f64,
    pub checks: usize,
}

impl SmoothnessReport {
    fn record(&mut self, excess: f64) {
        if self.checks == 0 || excess > self.worst_slack {
            self.worst_slack = excess;
        }
        self.checks += 1;
        if excess > ABSOLUTE_SLACK {
            self.violations += 1;
        }
    }

    pub fn merge(&mut self, other: &SmoothnessReport) {
        if other.checks == 0 {
            return;
        }
        if self.checks == 0 || other.worst_slack > self.worst_slack {
            self.worst_slack = other.worst_slack;
        }
        self.checks += other.checks;
        self.violations += other.violations;
    }
}

/// Draws `samples` pairs per block and scale and counts violations of either
/// inequality beyond [`ABSOLUTE_SLACK`].
pub fn verify_relative_smoothness(
    problem: &BlockProblem,
    samples: usize,
    seed: u64,
) -> Result<SmoothnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partition = problem.partition().clone();
    let lipschitz = problem.lipschitz();
    let mut report = SmoothnessReport::default();
    for _ in 0..samples {
        for &scale in &SAMPLE_SCALES {
            for i in 0..problem.num_blocks() {
                let mut x = BlockVector::zeros(partition.clone());
                for b in 0..partition.num_blocks() {
                    x.block_mut(b).mapv_inplace(|_| scale * rng.gen::<f64>());
                }
                let y_i =
                    ndarray::Array1::from_shape_fn(partition.dim(i), |_| scale * rng.gen::<f64>());
                let y = x.with_block(i, y_i.view())?;
                let f = problem.smooth();
                let kernel = problem.kernel(i);

                let gfx = f.block_grad(i, &x);
                let gfy = f.block_grad(i, &y);
                let delta: Vec<f64> = y_i.iter().zip(x.block(i)).map(|(a, b)| a - b).collect();
                let dist = block_bregman_distance(kernel, i, &x, y_i.view())?;
                let upper =
                    f.value(&x) + dot_slices(gfx.as_slice().unwrap(), &delta) + lipschitz[i] * dist;
                report.record(f.value(&y) - upper);

                let ghx = kernel.block_grad(i, &x);
                let ghy = kernel.block_grad(i, &y);
                let df: Vec<f64> = gfx.iter().zip(&gfy).map(|(a, b)| a - b).collect();
                let dh: Vec<f64> = ghx.iter().zip(&ghy).map(|(a, b)| a - b).collect();
                let neg: Vec<f64> = delta.iter().map(|d| -d).collect();
                report.record(dot_slices(&df, &neg) - lipschitz[i] * dot_slices(&dh, &neg));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::parts::{EuclideanKernel, QuadraticObjective, Unconstrained};
    use crate::block::BlockPartition;
    use ndarray::array;

    fn problem(l: f64) -> BlockProblem {
        // Eigenvalues of A are 1 and 3.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        BlockProblem::new(
            BlockPartition::single(2).unwrap(),
            Box::new(QuadraticObjective::new(a, array![0.5, -0.5]).unwrap()),
            vec![Box::new(EuclideanKernel::new())],
            vec![l],
            vec![Box::new(Unconstrained)],
        )
        .unwrap()
    }

    #[test]
    fn euclidean_descent_lemma_holds_with_true_constant() {
        let r = verify_relative_smoothness(&problem(3.0), 200, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.checks, 200 * 3 * 2);
    }

    #[test]
    fn too_small_constant_is_caught() {
        let r = verify_relative_smoothness(&problem(0.5), 200, 1).unwrap();
        assert!(r.violations > 0);
        assert!(r.worst_slack > 0.0);
    }
}
