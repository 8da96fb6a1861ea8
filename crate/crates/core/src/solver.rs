//! The block inertial Bregman proximal engine.
//!
//! One iteration is a Gauss–Seidel sweep over the blocks. Block `i` is
//! replaced by a minimizer of its model built at the freshest partial iterate
//! `x^{k,i-1}`, with the inertial term taken from the lagged full iterate
//! `x^{k-1}`. The engine monitors
//!
//! ```text
//! ℒ^{k+1} = Φ(x^{k+1}) + Σ_i δ_i D_{h_i}(x^{k,i}, x^{k,i-1})
//! ```
//!
//! which is nonincreasing whenever the step schedule is admissible, and an
//! explicit element of `∂Φ(x^{k+1})` assembled from the block optimality
//! conditions.

use std::time::Instant;

use log::warn;
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::block::{block_bregman_distance, phi_value, BlockProblem, BlockVector, Subproblem};
use crate::diagnostics::oracle::{numeric_subproblem_oracle, OracleOptions};
use crate::linalg::sum_sq;
use crate::{Error, Result};

/// Step parameters of one block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStep {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Coefficient of the current gap in the Lyapunov decrease.
    pub a: f64,
    /// Coefficient of the previous gap in the Lyapunov decrease.
    pub b: f64,
}

impl BlockStep {
    /// Builds a step from `(γ, α, δ)`, computing `a` and `b` and checking
    /// admissibility against `L` and `σ`.
    pub fn admissible(
        lipschitz: f64,
        sigma: f64,
        gamma: f64,
        alpha: f64,
        delta: f64,
    ) -> Result<Self> {
        let bounds = DeltaBounds::new(lipschitz, sigma, gamma, alpha);
        let step = Self {
            gamma,
            alpha,
            delta,
            a: snap_zero(bounds.upper - delta, bounds.upper),
            b: snap_zero(delta - bounds.lower, bounds.upper),
        };
        step.check(lipschitz, sigma)?;
        Ok(step)
    }

    fn check(&self, lipschitz: f64, sigma: f64) -> Result<()> {
        let alpha = self.alpha.abs();
        if !(alpha < sigma / 2.0) {
            return Err(Error::Parameter(format!(
                "|alpha| = {alpha} must be below sigma/2 = {}",
                sigma / 2.0
            )));
        }
        let gamma_max = (sigma - 2.0 * alpha) / (sigma * lipschitz);
        if !(self.gamma > 0.0 && self.gamma <= gamma_max * (1.0 + 1e-12)) {
            return Err(Error::Parameter(format!(
                "gamma = {} outside (0, {gamma_max}]",
                self.gamma
            )));
        }
        if self.a < 0.0 || self.b < 0.0 {
            return Err(Error::Parameter(format!(
                "delta = {} outside its admissible interval (a = {}, b = {})",
                self.delta, self.a, self.b
            )));
        }
        Ok(())
    }
}

struct DeltaBounds {
    lower: f64,
    upper: f64,
}

impl DeltaBounds {
    fn new(lipschitz: f64, sigma: f64, gamma: f64, alpha: f64) -> Self {
        let lower = alpha.abs() / (sigma * gamma);
        let upper = (1.0 - gamma * lipschitz) / gamma - lower;
        Self { lower, upper }
    }
}

// Differences that vanish analytically come out as ±1 ulp of the operands.
fn snap_zero(v: f64, scale: f64) -> f64 {
    if v < 0.0 && v.abs() <= 1e-12 * (1.0 + scale.abs()) {
        0.0
    } else {
        v
    }
}

/// Per-block `(γ_i, α_i, δ_i, a_i, b_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    steps: Vec<BlockStep>,
}

impl StepSchedule {
    /// Wraps explicit steps. Use [`StepSchedule::validate`] to check them.
    pub fn new(steps: Vec<BlockStep>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[BlockStep] {
        &self.steps
    }

    pub fn step(&self, i: usize) -> &BlockStep {
        &self.steps[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.steps.len()
    }

    pub fn validate(&self, lipschitz: &[f64], sigmas: &[f64]) -> Result<()> {
        if lipschitz.len() != self.steps.len() || sigmas.len() != self.steps.len() {
            return Err(Error::Shape(format!(
                "schedule has {} blocks, constants have {} and {}",
                self.steps.len(),
                lipschitz.len(),
                sigmas.len()
            )));
        }
        for (i, ((s, &l), &sigma)) in self.steps.iter().zip(lipschitz).zip(sigmas).enumerate() {
            s.check(l, sigma)
                .map_err(|e| Error::Parameter(format!("block {i}: {e}")))?;
        }
        Ok(())
    }
}

/// Source of the schedule used at iteration `k`.
///
/// A plain [`StepSchedule`] is constant in `k`.
pub trait ScheduleSource {
    fn at(&self, k: usize) -> &StepSchedule;
}

impl ScheduleSource for StepSchedule {
    fn at(&self, _k: usize) -> &StepSchedule {
        self
    }
}

/// Explicit per-iteration schedules; the last one repeats forever.
#[derive(Clone, Debug)]
pub struct PerIteration(pub Vec<StepSchedule>);

impl ScheduleSource for PerIteration {
    fn at(&self, k: usize) -> &StepSchedule {
        &self.0[k.min(self.0.len() - 1)]
    }
}

/// Constant admissible schedule.
///
/// `α_i = κσ_i/2`, `γ_i = ρ(σ_i − 2|α_i|)/(σ_i L_i)` and `δ_i` at the
/// midpoint of its admissible interval. `κ ∈ [0, 1)` scales the inertia and
/// `ρ ∈ (0, 1]` the step; `ρ = 1` collapses the `δ` interval to a point and
/// makes the descent bound vacuous.
pub fn derive_schedule(
    lipschitz: &[f64],
    sigmas: &[f64],
    kappa: f64,
    rho: f64,
) -> Result<StepSchedule> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Parameter(format!(
            "kappa = {kappa} must lie in [0, 1)"
        )));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Parameter(format!("rho = {rho} must lie in (0, 1]")));
    }
    if lipschitz.len() != sigmas.len() || lipschitz.is_empty() {
        return Err(Error::Shape(format!(
            "{} constants L for {} moduli sigma",
            lipschitz.len(),
            sigmas.len()
        )));
    }
    if rho == 1.0 {
        warn!(
            "rho = 1: delta interval is a single point and the Lyapunov decrease bound is vacuous"
        );
    }
    let mut steps = Vec::with_capacity(lipschitz.len());
    for (i, (&l, &sigma)) in lipschitz.iter().zip(sigmas).enumerate() {
        if !(l > 0.0 && sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "block {i}: L = {l} and sigma = {sigma} must be positive"
            )));
        }
        let alpha = kappa * sigma / 2.0;
        let gamma = rho * (sigma - 2.0 * alpha.abs()) / (sigma * l);
        let bounds = DeltaBounds::new(l, sigma, gamma, alpha);
        let delta = 0.5 * (bounds.lower + bounds.upper);
        let step = BlockStep::admissible(l, sigma, gamma, alpha, delta)
            .map_err(|e| Error::Parameter(format!("block {i}: {e}")))?;
        steps.push(step);
    }
    Ok(StepSchedule { steps })
}

/// Minimizes the block-`i` model at `x_current` with inertia from `x_prev`.
///
/// Uses the problem's exact solver for block `i` when one is attached and
/// otherwise the numeric projected-gradient oracle, if the problem allows it.
pub fn solve_block_subproblem(
    problem: &BlockProblem,
    schedule: &StepSchedule,
    i: usize,
    x_current: &BlockVector,
    x_prev: &BlockVector,
) -> Result<Array1<f64>> {
    let step = schedule.step(i);
    let z = match problem.solver(i) {
        Some(solver) => solver.solve(&Subproblem {
            block: i,
            point: x_current,
            prev: x_prev,
            gamma: step.gamma,
            alpha: step.alpha,
        })?,
        None if problem.oracle_fallback() => numeric_subproblem_oracle(
            problem,
            step.gamma,
            step.alpha,
            i,
            x_current,
            x_prev,
            &OracleOptions::default(),
        )?,
        None => {
            return Err(Error::Config(format!(
                "block {i} has no exact solver and the numeric fallback is disabled"
            )))
        }
    };
    if problem.term(i).value(z.view()) == f64::INFINITY {
        return Err(Error::Domain(format!(
            "block {i} subproblem returned an infeasible point"
        )));
    }
    Ok(z)
}

/// Output of one cyclic sweep.
#[derive(Clone, Debug)]
pub struct Sweep {
    /// `x^{k+1} = x^{k,N}`.
    pub x_next: BlockVector,
    /// `D_{h_i}(x^{k,i}, x^{k,i-1})` for each block.
    pub gaps: Vec<f64>,
    /// Partial iterates `x^{k,0}, …, x^{k,N}`.
    pub partials: Vec<BlockVector>,
}

/// One pass `i = 1..N` of the inertial Bregman update.
pub fn bibpa_sweep(
    problem: &BlockProblem,
    schedule: &StepSchedule,
    x_k: &BlockVector,
    x_prev: &BlockVector,
) -> Result<Sweep> {
    problem.check_point(x_k)?;
    problem.check_point(x_prev)?;
    if schedule.num_blocks() != problem.num_blocks() {
        return Err(Error::Shape(format!(
            "schedule has {} blocks, problem has {}",
            schedule.num_blocks(),
            problem.num_blocks()
        )));
    }
    let n = problem.num_blocks();
    let mut partials = Vec::with_capacity(n + 1);
    let mut gaps = Vec::with_capacity(n);
    partials.push(x_k.clone());
    for i in 0..n {
        let current = &partials[i];
        let z = solve_block_subproblem(problem, schedule, i, current, x_prev)?;
        gaps.push(block_bregman_distance(
            problem.kernel(i),
            i,
            current,
            z.view(),
        )?);
        let next = current.with_block(i, z.view())?;
        partials.push(next);
    }
    Ok(Sweep {
        x_next: partials[n].clone(),
        gaps,
        partials,
    })
}

/// `Φ(x^{k+1}) + Σ_i δ_i · gaps_i`.
pub fn lyapunov_value(
    problem: &BlockProblem,
    schedule: &StepSchedule,
    x_next: &BlockVector,
    gaps: &[f64],
) -> f64 {
    let mut value = phi_value(problem, x_next);
    for (step, gap) in schedule.steps().iter().zip(gaps) {
        value += step.delta * gap;
    }
    value
}

/// Squared norm of one residual block
/// `∇_j f(x^{k+1}) + (∇_j h_j(x^{k,j-1}) − ∇_j h_j(x^{k,j}))/γ + (α/γ)(x_j^k − x_j^{k-1}) − ∇_j f(x^{k,j-1})`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn residual_block_sq(
    grad_f_next: &[f64],
    grad_f_before: &[f64],
    grad_h_before: &[f64],
    grad_h_after: &[f64],
    x_k: &[f64],
    x_prev: &[f64],
    gamma: f64,
    alpha: f64,
) -> f64 {
    let inv_gamma = 1.0 / gamma;
    let ratio = alpha / gamma;
    let mut acc = 0.0;
    for t in 0..grad_f_next.len() {
        let eta = inv_gamma * (grad_h_before[t] - grad_h_after[t]) + ratio * (x_k[t] - x_prev[t])
            - grad_f_before[t];
        let r = grad_f_next[t] + eta;
        acc += r * r;
    }
    acc
}

/// Norm of the element of `∂Φ(x^{k+1})` built from the block optimality
/// conditions of the last sweep. Each `η_j` lies in `∂g_j(x_j^{k+1})`.
pub fn stationarity_residual(
    problem: &BlockProblem,
    schedule: &StepSchedule,
    sweep: &Sweep,
    x_prev: &BlockVector,
) -> f64 {
    let n = problem.num_blocks();
    let x_k = &sweep.partials[0];
    let x_next = &sweep.partials[n];
    let mut acc = 0.0;
    for j in 0..n {
        let before = &sweep.partials[j];
        let after = &sweep.partials[j + 1];
        let kernel = problem.kernel(j);
        let step = schedule.step(j);
        let gf_next = problem.smooth().block_grad(j, x_next);
        let gf_before = problem.smooth().block_grad(j, before);
        let gh_before = kernel.block_grad(j, before);
        let gh_after = kernel.block_grad(j, after);
        acc += residual_block_sq(
            gf_next.as_slice().unwrap(),
            gf_before.as_slice().unwrap(),
            gh_before.as_slice().unwrap(),
            gh_after.as_slice().unwrap(),
            x_k.block_slice(j),
            x_prev.block_slice(j),
            step.gamma,
            step.alpha,
        );
    }
    acc.sqrt()
}

/// One row of the solver trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub phi: f64,
    pub lyapunov: f64,
    /// Stationarity residual. For `k = 0` this is `‖∇f(x⁰)‖`.
    #[serde(rename = "residual")]
    pub residual_norm: f64,
    pub gaps: Vec<f64>,
    #[serde(rename = "seconds")]
    pub elapsed_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualTol,
    LyapunovStall,
    MaxIters,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x_final: BlockVector,
    pub x_prev: BlockVector,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.trace.last().expect("trace is never empty")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop once the residual is at most `residual_tol · (1 + ‖∇f(x⁰)‖)`.
    pub residual_tol: f64,
    /// Stop once `|ℒ^k − ℒ^{k+1}| ≤ stall_tol · (1 + |ℒ^k|)`; `0` turns the
    /// rule off.
    pub stall_tol: f64,
    /// Record wall-clock seconds; when off every record carries `0.0` and
    /// traces are byte-reproducible.
    pub record_time: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            residual_tol: 1e-8,
            stall_tol: 0.0,
            record_time: true,
        }
    }
}

/// Runs sweeps from `x0` (with `x^{-1} = x^0`) until a stopping rule fires.
pub fn run(
    problem: &BlockProblem,
    schedule: &StepSchedule,
    x0: &BlockVector,
    options: &SolveOptions,
) -> Result<SolveResult> {
    run_with_schedule(problem, schedule, x0, options)
}

/// [`run`] with an iteration-dependent schedule.
pub fn run_with_schedule<S: ScheduleSource + ?Sized>(
    problem: &BlockProblem,
    schedules: &S,
    x0: &BlockVector,
    options: &SolveOptions,
) -> Result<SolveResult> {
    problem.check_point(x0)?;
    let phi0 = phi_value(problem, x0);
    if !phi0.is_finite() {
        return Err(Error::Input(format!(
            "initial point is infeasible (Phi = {phi0})"
        )));
    }
    for i in 0..problem.num_blocks() {
        if !problem.kernel(i).in_domain(x0) {
            return Err(Error::Input(format!(
                "initial point outside the domain of kernel {i}"
            )));
        }
    }
    let start = Instant::now();
    let elapsed = || {
        if options.record_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let n = problem.num_blocks();
    let grad0: f64 = (0..n)
        .map(|i| sum_sq(problem.smooth().block_grad(i, x0).as_slice().unwrap()))
        .sum::<f64>()
        .sqrt();
    let scale = 1.0 + grad0;
    let mut trace = vec![IterationRecord {
        k: 0,
        phi: phi0,
        lyapunov: phi0,
        residual_norm: grad0,
        gaps: vec![0.0; n],
        elapsed_seconds: elapsed(),
    }];
    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut termination = Termination::MaxIters;
    for k in 0..options.max_iters {
        let schedule = schedules.at(k);
        let sweep = bibpa_sweep(problem, schedule, &x, &x_prev)?;
        let residual = stationarity_residual(problem, schedule, &sweep, &x_prev);
        let lyapunov = lyapunov_value(problem, schedule, &sweep.x_next, &sweep.gaps);
        let phi = phi_value(problem, &sweep.x_next);
        let prev_lyapunov = trace[k].lyapunov;
        if lyapunov > prev_lyapunov + 1e-10 * (1.0 + prev_lyapunov.abs()) {
            warn!(
                "Lyapunov value increased at k = {}: {prev_lyapunov} -> {lyapunov}",
                k + 1
            );
        }
        trace.push(IterationRecord {
            k: k + 1,
            phi,
            lyapunov,
            residual_norm: residual,
            gaps: sweep.gaps,
            elapsed_seconds: elapsed(),
        });
        x_prev = std::mem::replace(&mut x, sweep.x_next);
        if residual <= options.residual_tol * scale {
            termination = Termination::ResidualTol;
            break;
        }
        if options.stall_tol > 0.0
            && (prev_lyapunov - lyapunov).abs() <= options.stall_tol * (1.0 + prev_lyapunov.abs())
        {
            termination = Termination::LyapunovStall;
            break;
        }
    }
    Ok(SolveResult {
        x_final: x,
        x_prev,
        trace,
        termination,
    })
}

/// Serializes a trace as a JSON array of records.
pub fn trace_to_json(trace: &[IterationRecord]) -> String {
    serde_json::to_string_pretty(trace).expect("finite trace records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::parts::{EuclideanKernel, Nonnegative, QuadraticObjective, Unconstrained};
    use crate::block::BlockPartition;
    use ndarray::{array, Array2};

    fn quadratic_problem(a: Array2<f64>, b: Array1<f64>, lipschitz: f64) -> BlockProblem {
        let n = b.len();
        BlockProblem::new(
            BlockPartition::single(n).unwrap(),
            Box::new(QuadraticObjective::new(a, b).unwrap()),
            vec![Box::new(EuclideanKernel::new())],
            vec![lipschitz],
            vec![Box::new(Unconstrained)],
        )
        .unwrap()
    }

    #[test]
    fn schedule_single_block_example() {
        let s = derive_schedule(&[1.0], &[2.0], 0.5, 0.9).unwrap();
        let st = s.step(0);
        assert_eq!(st.alpha, 0.5);
        assert!((st.gamma - 0.45).abs() < 1e-15);
        assert!(st.a > 0.0 && st.b > 0.0);
        assert!((st.a - st.b).abs() < 1e-12);
    }

    #[test]
    fn schedule_no_inertia_boundary() {
        let s = derive_schedule(&[1.0], &[1.0], 0.0, 1.0).unwrap();
        let st = s.step(0);
        assert_eq!(
            (st.alpha, st.gamma, st.delta, st.a, st.b),
            (0.0, 1.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn schedule_two_blocks() {
        let s = derive_schedule(&[1.0, 1.0], &[2.0, 1.0], 0.5, 0.9).unwrap();
        // Independent re-evaluation of the admissibility formulas.
        let (l, sigma, kappa, rho) = (1.0, 1.0, 0.5, 0.9);
        let alpha = kappa * sigma / 2.0;
        let gamma = rho * (sigma - 2.0 * alpha) / (sigma * l);
        assert_eq!(s.step(1).alpha, 0.25);
        assert!((s.step(1).gamma - 0.45).abs() < 1e-15);
        let lo = alpha / (sigma * gamma);
        let hi = (1.0 - gamma * l) / gamma - lo;
        assert!((s.step(1).delta - 0.5 * (lo + hi)).abs() < 1e-14);
        s.validate(&[1.0, 1.0], &[2.0, 1.0]).unwrap();
    }

    #[test]
    fn schedule_rejects_bad_parameters() {
        assert!(derive_schedule(&[1.0], &[1.0], 1.0, 0.9).is_err());
        assert!(derive_schedule(&[1.0], &[1.0], -0.1, 0.9).is_err());
        assert!(derive_schedule(&[1.0], &[1.0], 0.5, 0.0).is_err());
        assert!(derive_schedule(&[1.0], &[1.0], 0.5, 1.1).is_err());
        assert!(BlockStep::admissible(1.0, 1.0, 0.5, 0.6, 0.0).is_err());
        assert!(BlockStep::admissible(1.0, 1.0, 1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn euclidean_unconstrained_subproblem_is_gradient_step() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let b = array![1.0, 1.0];
        let problem = quadratic_problem(a.clone(), b.clone(), 4.0);
        let s = derive_schedule(&[4.0], &[1.0], 0.0, 0.9).unwrap();
        let x = BlockVector::new(problem.partition().clone(), array![0.5, -0.5]).unwrap();
        let z = solve_block_subproblem(&problem, &s, 0, &x, &x).unwrap();
        let expected = &x.data() - &((a.dot(&x.data()) - &b) * s.step(0).gamma);
        // No exact solver attached: this goes through the numeric oracle.
        for (u, v) in z.iter().zip(expected.iter()) {
            assert!((u - v).abs() < 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn missing_solver_without_fallback_is_config_error() {
        let problem =
            quadratic_problem(Array2::eye(2), array![0.0, 0.0], 1.0).with_oracle_fallback(false);
        let s = derive_schedule(&[1.0], &[1.0], 0.0, 0.9).unwrap();
        let x = BlockVector::new(problem.partition().clone(), array![1.0, 1.0]).unwrap();
        assert!(matches!(
            solve_block_subproblem(&problem, &s, 0, &x, &x),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fixed_point_sweep_has_zero_gaps() {
        let b = array![1.0, 2.0];
        let problem = quadratic_problem(Array2::eye(2), b.clone(), 1.0);
        let s = derive_schedule(&[1.0], &[1.0], 0.0, 0.9).unwrap();
        let x = BlockVector::new(problem.partition().clone(), b).unwrap();
        let sweep = bibpa_sweep(&problem, &s, &x, &x).unwrap();
        assert!(sweep.gaps.iter().all(|&g| g < 1e-20));
        for (u, v) in sweep.x_next.data().iter().zip(x.data()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_reduces_to_phi() {
        let problem = quadratic_problem(Array2::eye(2), array![1.0, 0.0], 1.0);
        let x = BlockVector::new(problem.partition().clone(), array![0.3, 0.4]).unwrap();
        let phi = phi_value(&problem, &x);
        let no_delta = StepSchedule::new(vec![BlockStep {
            gamma: 0.5,
            alpha: 0.0,
            delta: 0.0,
            a: 0.5,
            b: 0.0,
        }]);
        assert_eq!(lyapunov_value(&problem, &no_delta, &x, &[3.0]), phi);
        let s = derive_schedule(&[1.0], &[1.0], 0.5, 0.9).unwrap();
        assert_eq!(lyapunov_value(&problem, &s, &x, &[0.0]), phi);
    }

    #[test]
    fn residual_after_gradient_step_is_new_gradient_norm() {
        // g ≡ 0 forces η = 0, so the residual is ‖∇f(x^{k+1})‖.
        let a = array![[2.0, 0.5], [0.5, 1.0]];
        let b = array![1.0, -1.0];
        let problem = quadratic_problem(a.clone(), b.clone(), 3.0);
        let s = derive_schedule(&[3.0], &[1.0], 0.0, 0.9).unwrap();
        let x = BlockVector::new(problem.partition().clone(), array![2.0, 1.0]).unwrap();
        let sweep = bibpa_sweep(&problem, &s, &x, &x).unwrap();
        let r = stationarity_residual(&problem, &s, &sweep, &x);
        let g = a.dot(&sweep.x_next.data()) - &b;
        assert!((r - g.dot(&g).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn residual_vanishes_at_stationary_point() {
        let a = array![[2.0, 0.5], [0.5, 1.0]];
        let b = array![1.0, -1.0];
        // A x* = b
        let det = 2.0 * 1.0 - 0.25;
        let xs = array![
            (1.0 + 0.5) / det,
            (-2.0 - 0.5) / det
        ];
        let problem = quadratic_problem(a, b, 3.0);
        let s = derive_schedule(&[3.0], &[1.0], 0.0, 0.9).unwrap();
        let x = BlockVector::new(problem.partition().clone(), xs).unwrap();
        let sweep = bibpa_sweep(&problem, &s, &x, &x).unwrap();
        assert!(stationarity_residual(&problem, &s, &sweep, &x) < 1e-12);
    }

    #[test]
    fn run_with_zero_iterations_returns_initial_record() {
        let problem = quadratic_problem(Array2::eye(2), array![1.0, 0.0], 1.0);
        let s = derive_schedule(&[1.0], &[1.0], 0.0, 0.9).unwrap();
        let x0 = BlockVector::new(problem.partition().clone(), array![0.0, 0.0]).unwrap();
        let opts = SolveOptions {
            max_iters: 0,
            ..SolveOptions::default()
        };
        let res = run(&problem, &s, &x0, &opts).unwrap();
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.termination, Termination::MaxIters);
    }

    #[test]
    fn run_rejects_infeasible_start() {
        let problem = BlockProblem::new(
            BlockPartition::single(1).unwrap(),
            Box::new(QuadraticObjective::zero(1)),
            vec![Box::new(EuclideanKernel::new())],
            vec![1.0],
            vec![Box::new(Nonnegative)],
        )
        .unwrap();
        let s = derive_schedule(&[1.0], &[1.0], 0.0, 0.9).unwrap();
        let x0 = BlockVector::new(problem.partition().clone(), array![-1.0]).unwrap();
        assert!(matches!(
            run(&problem, &s, &x0, &SolveOptions::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn trace_json_uses_documented_keys() {
        let rec = IterationRecord {
            k: 2,
            phi: 1.5,
            lyapunov: 1.75,
            residual_norm: 0.25,
            gaps: vec![0.5, 0.0],
            elapsed_seconds: 0.0,
        };
        let v: serde_json::Value = serde_json::from_str(&trace_to_json(&[rec])).unwrap();
        let obj = v[0].as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["gaps", "k", "lyapunov", "phi", "residual", "seconds"]
        );
    }
}
