//! Projected-gradient minimizer of a block model.
//!
//! The oracle only evaluates the model through [`model_value`] and kernel
//! gradients, so it shares no code with any closed-form update.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block::{model_linear_term, model_value, BlockProblem, BlockVector};
use crate::solver::{solve_block_subproblem, StepSchedule};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub max_iters: usize,
    /// Stop once `‖z_{t+1} − z_t‖ ≤ tol`.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            tol: 1e-13,
        }
    }
}

/// Minimizes `z ↦ model_value(problem, γ, α, i, x, x_prev, z)` by projected
/// gradient descent with backtracking on the local Lipschitz estimate.
///
/// Requires `g_i` to be an indicator with a Euclidean projection.
pub fn numeric_subproblem_oracle(
    problem: &BlockProblem,
    gamma: f64,
    alpha: f64,
    i: usize,
    x: &BlockVector,
    x_prev: &BlockVector,
    options: &OracleOptions,
) -> Result<Array1<f64>> {
    let term = problem.term(i);
    let project = |z: &Array1<f64>| {
        term.project(z.view()).ok_or_else(|| {
            Error::Unsupported(format!("block {i} term has no Euclidean projection"))
        })
    };
    let kernel = problem.kernel(i);
    let lin = model_linear_term(problem, gamma, alpha, i, x, x_prev);
    let grad_h_x = kernel.block_grad(i, x);
    let model_grad = |z: &Array1<f64>| -> Result<Array1<f64>> {
        let y = x.with_block(i, z.view())?;
        Ok(&lin + &((kernel.block_grad(i, &y) - &grad_h_x) / gamma))
    };
    let model = |z: &Array1<f64>| model_value(problem, gamma, alpha, i, x, x_prev, z.view());

    let mut z = project(&x.block(i).to_owned())?;
    let mut fz = model(&z)?;
    let mut lip = kernel.sigma() / gamma;
    for _ in 0..options.max_iters {
        let g = model_grad(&z)?;
        let (candidate, f_candidate) = loop {
            let trial = project(&(&z - &(&g / lip)))?;
            let f_trial = model(&trial)?;
            let d = &trial - &z;
            let bound = fz + g.dot(&d) + 0.5 * lip * d.dot(&d);
            if f_trial <= bound + 1e-15 * (1.0 + fz.abs()) || lip > 1e300 {
                break (trial, f_trial);
            }
            lip *= 2.0;
        };
        let moved = (&candidate - &z).mapv(|v| v * v).sum().sqrt();
        z = candidate;
        fz = f_candidate;
        if moved <= options.tol {
            break;
        }
        lip *= 0.9;
    }
    Ok(z)
}

/// Outcome of [`check_block_solvers`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: usize,
    pub failures: usize,
    /// Largest `model(exact) − model(oracle)` seen.
    pub worst_gap: f64,
}

/// Compares each block's attached solver with [`numeric_subproblem_oracle`]
/// at `samples` random pairs `(x, x_prev)` with entries uniform in `[0, 1)`.
/// A check fails when the exact update's model value exceeds the oracle's
/// by more than `tol`.
pub fn check_block_solvers(
    problem: &BlockProblem,
    schedule: &StepSchedule,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partition = problem.partition().clone();
    let mut report = OracleReport {
        worst_gap: f64::NEG_INFINITY,
        ..OracleReport::default()
    };
    let draw = |rng: &mut ChaCha8Rng| {
        let data = Array1::from_shape_fn(partition.total_dim(), |_| rng.gen::<f64>());
        BlockVector::new(partition.clone(), data)
    };
    for _ in 0..samples {
        let x = draw(&mut rng)?;
        let x_prev = draw(&mut rng)?;
        for i in 0..problem.num_blocks() {
            if problem.solver(i).is_none() {
                return Err(Error::Config(format!(
                    "block {i} has no exact solver to check"
                )));
            }
            let step = schedule.step(i);
            let exact = solve_block_subproblem(problem, schedule, i, &x, &x_prev)?;
            let numeric = numeric_subproblem_oracle(
                problem,
                step.gamma,
                step.alpha,
                i,
                &x,
                &x_prev,
                &OracleOptions::default(),
            )?;
            let m_exact = model_value(
                problem,
                step.gamma,
                step.alpha,
                i,
                &x,
                &x_prev,
                exact.view(),
            )?;
            let m_numeric = model_value(
                problem,
                step.gamma,
                step.alpha,
                i,
                &x,
                &x_prev,
                numeric.view(),
            )?;
            let gap = m_exact - m_numeric;
            report.checks += 1;
            report.worst_gap = report.worst_gap.max(gap);
            if !(gap <= tol) {
                report.failures += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::parts::{EuclideanKernel, Nonnegative, QuadraticObjective};
    use crate::block::{BlockPartition, BlockTerm};
    use ndarray::{array, ArrayView1};

    #[test]
    fn clamps_negative_minimizer() {
        // f(z) = 2z, so the block model is 2z + ½z² with free minimizer −2.
        let problem = BlockProblem::new(
            BlockPartition::single(1).unwrap(),
            Box::new(QuadraticObjective::new(array![[0.0]], array![-2.0]).unwrap()),
            vec![Box::new(EuclideanKernel::new())],
            vec![1.0],
            vec![Box::new(Nonnegative)],
        )
        .unwrap();
        let x = BlockVector::new(problem.partition().clone(), array![0.0]).unwrap();
        let z = numeric_subproblem_oracle(&problem, 1.0, 0.0, 0, &x, &x, &OracleOptions::default())
            .unwrap();
        assert_eq!(z[0], 0.0);
    }

    #[test]
    fn rejects_terms_without_projection() {
        struct L1;
        impl BlockTerm for L1 {
            fn value(&self, z: ArrayView1<'_, f64>) -> f64 {
                z.iter().map(|v| v.abs()).sum()
            }
        }
        let problem = BlockProblem::new(
            BlockPartition::single(1).unwrap(),
            Box::new(QuadraticObjective::zero(1)),
            vec![Box::new(EuclideanKernel::new())],
            vec![1.0],
            vec![Box::new(L1)],
        )
        .unwrap();
        let x = BlockVector::new(problem.partition().clone(), array![1.0]).unwrap();
        let err =
            numeric_subproblem_oracle(&problem, 1.0, 0.0, 0, &x, &x, &OracleOptions::default())
                .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
