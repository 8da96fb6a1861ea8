//! Plain alternation of the two closed-form updates, without the generic
//! engine. Records the same trace quantities as [`crate::solver::run`].

use std::time::Instant;

use ndarray::Array2;

use super::kernels::{h1_grad_u, h1_value, h2_grad_v, h2_value};
use super::updates::{update_u, update_v};
use super::{f_value, grad_u, grad_v, SymTriInstance};
use crate::linalg::{bregman_three_term, frob_sq};
use crate::solver::{residual_block_sq, IterationRecord, SolveOptions, StepSchedule, Termination};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct AlternationResult {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

/// Alternates [`update_u`] and [`update_v`] from `(U⁰, V⁰)` with
/// `(U^{-1}, V^{-1}) = (U⁰, V⁰)`.
pub fn alternate(
    inst: &SymTriInstance,
    schedule: &StepSchedule,
    u0: &Array2<f64>,
    v0: &Array2<f64>,
    options: &SolveOptions,
) -> Result<AlternationResult> {
    inst.check_shapes(&u0.view(), &v0.view())?;
    if schedule.num_blocks() != 2 {
        return Err(Error::Shape(format!(
            "expected a 2-block schedule, got {}",
            schedule.num_blocks()
        )));
    }
    if u0.iter().chain(v0.iter()).any(|&t| !(t >= 0.0)) {
        return Err(Error::Input("initial factors must be nonnegative".into()));
    }
    let phi = |u: &Array2<f64>, v: &Array2<f64>| -> Result<f64> {
        Ok(f_value(inst, &u.view(), &v.view())? + 0.0 + 0.0)
    };
    let start = Instant::now();
    let elapsed = || {
        if options.record_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let (s1, s2) = (schedule.step(0), schedule.step(1));

    let phi0 = phi(u0, v0)?;
    let grad0 = [
        frob_sq(&grad_u(inst, &u0.view(), &v0.view())?),
        frob_sq(&grad_v(inst, &u0.view(), &v0.view())?),
    ]
    .into_iter()
    .sum::<f64>()
    .sqrt();
    let scale = 1.0 + grad0;
    let mut trace = vec![IterationRecord {
        k: 0,
        phi: phi0,
        lyapunov: phi0,
        residual_norm: grad0,
        gaps: vec![0.0; 2],
        elapsed_seconds: elapsed(),
    }];
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let (mut u_prev, mut v_prev) = (u0.clone(), v0.clone());
    let mut termination = Termination::MaxIters;
    for k in 0..options.max_iters {
        let u_next = update_u(
            inst,
            s1.gamma,
            s1.alpha,
            &u.view(),
            &u_prev.view(),
            &v.view(),
        )?;
        let gap_u = bregman_three_term(
            h1_value(inst, &u_next.view(), &v.view()),
            h1_value(inst, &u.view(), &v.view()),
            slice(&h1_grad_u(inst, &u.view(), &v.view())),
            slice(&u_next),
            slice(&u),
        );
        let v_next = update_v(
            inst,
            s2.gamma,
            s2.alpha,
            &u_next.view(),
            &v.view(),
            &v_prev.view(),
        )?;
        let gap_v = bregman_three_term(
            h2_value(inst, &u_next.view(), &v_next.view()),
            h2_value(inst, &u_next.view(), &v.view()),
            slice(&h2_grad_v(inst, &u_next.view(), &v.view())),
            slice(&v_next),
            slice(&v),
        );

        let mut acc = 0.0;
        acc += residual_block_sq(
            slice(&grad_u(inst, &u_next.view(), &v_next.view())?),
            slice(&grad_u(inst, &u.view(), &v.view())?),
            slice(&h1_grad_u(inst, &u.view(), &v.view())),
            slice(&h1_grad_u(inst, &u_next.view(), &v.view())),
            slice(&u),
            slice(&u_prev),
            s1.gamma,
            s1.alpha,
        );
        acc += residual_block_sq(
            slice(&grad_v(inst, &u_next.view(), &v_next.view())?),
            slice(&grad_v(inst, &u_next.view(), &v.view())?),
            slice(&h2_grad_v(inst, &u_next.view(), &v.view())),
            slice(&h2_grad_v(inst, &u_next.view(), &v_next.view())),
            slice(&v),
            slice(&v_prev),
            s2.gamma,
            s2.alpha,
        );
        let residual = acc.sqrt();

        let phi_next = phi(&u_next, &v_next)?;
        let mut lyapunov = phi(&u_next, &v_next)?;
        lyapunov += s1.delta * gap_u;
        lyapunov += s2.delta * gap_v;
        let prev_lyapunov = trace[k].lyapunov;
        trace.push(IterationRecord {
            k: k + 1,
            phi: phi_next,
            lyapunov,
            residual_norm: residual,
            gaps: vec![gap_u, gap_v],
            elapsed_seconds: elapsed(),
        });
        u_prev = std::mem::replace(&mut u, u_next);
        v_prev = std::mem::replace(&mut v, v_next);
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
    Ok(AlternationResult {
        u,
        v,
        trace,
        termination,
    })
}
