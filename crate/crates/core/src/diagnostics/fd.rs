use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block::{BlockProblem, BlockVector};

/// Central differences of `func` along each coordinate of block `i`.
pub fn finite_difference_block_grad<F>(func: F, i: usize, x: &BlockVector, step: f64) -> Array1<f64>
where
    F: Fn(&BlockVector) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let range = x.partition().range(i);
    let mut probe = x.clone();
    let mut out = Array1::zeros(range.len());
    for (t, idx) in range.enumerate() {
        let orig = x.data()[idx];
        probe.block_mut(i)[t] = orig + step;
        let up = func(&probe);
        probe.block_mut(i)[t] = orig - step;
        let down = func(&probe);
        probe.block_mut(i)[t] = orig;
        out[t] = (up - down) / (2.0 * step);
    }
    out
}

/// Outcome of [`check_block_gradients`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub checks: usize,
    pub failures: usize,
    /// Largest `‖fd − g‖ / ‖g‖` seen.
    pub worst_rel_error: f64,
}

impl GradientReport {
    fn record(&mut self, fd: &Array1<f64>, g: &Array1<f64>, rel_tol: f64) {
        let err = (fd - g).mapv(|v| v * v).sum().sqrt();
        let norm = g.mapv(|v| v * v).sum().sqrt();
        let rel = if norm > 0.0 { err / norm } else { err };
        self.checks += 1;
        self.worst_rel_error = self.worst_rel_error.max(rel);
        if !(rel <= rel_tol) {
            self.failures += 1;
        }
    }
}

/// Compares every analytic block gradient of `f` and each kernel's own
/// block gradient against central differences at `samples` points with
/// entries uniform in `[0, 1)`.
pub fn check_block_gradients(
    problem: &BlockProblem,
    samples: usize,
    seed: u64,
    step: f64,
    rel_tol: f64,
) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partition = problem.partition().clone();
    let mut report = GradientReport::default();
    for _ in 0..samples {
        let data = Array1::from_shape_fn(partition.total_dim(), |_| rng.gen::<f64>());
        let x = BlockVector::new(partition.clone(), data).expect("length matches partition");
        for i in 0..problem.num_blocks() {
            let fd = finite_difference_block_grad(|y| problem.smooth().value(y), i, &x, step);
            report.record(&fd, &problem.smooth().block_grad(i, &x), rel_tol);
            let kernel = problem.kernel(i);
            let fd = finite_difference_block_grad(|y| kernel.value(y), i, &x, step);
            report.record(&fd, &kernel.block_grad(i, &x), rel_tol);
        }
    }
    report
}
