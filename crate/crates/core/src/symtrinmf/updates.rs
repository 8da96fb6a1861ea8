//! Closed-form block updates.
//!
//! Both come from the first-order optimality condition of the block model
//! `⟨∇f − (α/γ)Δ, Z − Z_k⟩ + D_h(Z, Z_k)/γ + δ_{Z≥0}`, i.e.
//! `∇h(Z⁺) = ∇h(Z_k) − γ∇f + αΔ` up to the normal cone of the orthant.

use ndarray::{Array2, ArrayView2};

use super::cubic::cubic_positive_root;
use super::kernels::{eta, h1_grad_u, tau1};
use super::{grad_u, grad_v, SymTriInstance};
use crate::linalg::{clamp_nonneg, frob_sq};
use crate::Result;

/// `U`-block update. Returns `U⁺ = max(G, 0)/t` where
/// `G = ∇_U h1(U_k, V_k) − γ∇_U f(U_k, V_k) + α(U_k − U_prev)` and `t` is the
/// positive root of `t³ − τ1 t² − τ2 = 0` with `τ1 = b1(‖X‖‖V_k‖ + ε1)`,
/// `τ2 = a1‖V_k‖²‖max(G, 0)‖²`.
pub fn update_u(
    inst: &SymTriInstance,
    gamma: f64,
    alpha: f64,
    u_k: &ArrayView2<'_, f64>,
    u_prev: &ArrayView2<'_, f64>,
    v_k: &ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    update_u_with_root(inst, gamma, alpha, u_k, u_prev, v_k).map(|(u, _)| u)
}

/// [`update_u`] also returning the scaling root `t`, which satisfies
/// `t = a1‖U⁺‖²‖V_k‖² + b1(‖X‖‖V_k‖ + ε1)`.
pub fn update_u_with_root(
    inst: &SymTriInstance,
    gamma: f64,
    alpha: f64,
    u_k: &ArrayView2<'_, f64>,
    u_prev: &ArrayView2<'_, f64>,
    v_k: &ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, f64)> {
    inst.check_shapes(u_k, v_k)?;
    inst.check_shapes(u_prev, v_k)?;
    let gf = grad_u(inst, u_k, v_k)?;
    let mut p = h1_grad_u(inst, u_k, v_k);
    p.zip_mut_with(&gf, |g, &d| *g -= gamma * d);
    ndarray::Zip::from(&mut p)
        .and(u_k)
        .and(u_prev)
        .for_each(|g, &a, &b| *g += alpha * (a - b));
    clamp_nonneg(&mut p);
    let t1 = tau1(inst, v_k);
    let t2 = inst.params().a1 * frob_sq(v_k) * frob_sq(&p);
    let t = cubic_positive_root(t1, t2)?;
    p.mapv_inplace(|g| g / t);
    Ok((p, t))
}

/// `V`-block update
/// `V⁺ = max(V_k + (α(V_k − V_prev) − γ∇_V f(U⁺, V_k))/η, 0)` with
/// `η = a2(‖U⁺‖⁴ + ε2)`.
pub fn update_v(
    inst: &SymTriInstance,
    gamma: f64,
    alpha: f64,
    u_next: &ArrayView2<'_, f64>,
    v_k: &ArrayView2<'_, f64>,
    v_prev: &ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    inst.check_shapes(u_next, v_k)?;
    inst.check_shapes(u_next, v_prev)?;
    let gf = grad_v(inst, u_next, v_k)?;
    let inv_eta = 1.0 / eta(inst, u_next);
    let mut out = v_k.to_owned();
    ndarray::Zip::from(&mut out)
        .and(v_k)
        .and(v_prev)
        .and(&gf)
        .for_each(|o, &a, &b, &g| *o += inv_eta * (alpha * (a - b) - gamma * g));
    clamp_nonneg(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symtrinmf::KernelParams;
    use ndarray::array;

    #[test]
    fn zero_data_zero_v_keeps_u() {
        let inst = SymTriInstance::new(Array2::zeros((3, 3)), 2, KernelParams::default()).unwrap();
        let u = array![[0.5, 1.0], [0.0, 2.0], [0.25, 0.75]];
        let v = Array2::zeros((2, 2));
        let (next, t) =
            update_u_with_root(&inst, 0.45, 0.0, &u.view(), &u.view(), &v.view()).unwrap();
        assert_eq!(t, tau1(&inst, &v.view()));
        for (a, b) in next.iter().zip(u.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn scalar_u_block_stays_put() {
        let inst = SymTriInstance::new(array![[0.0]], 1, KernelParams::default()).unwrap();
        let one = array![[1.0]];
        let zero = array![[0.0]];
        let next = update_u(&inst, 0.45, 0.0, &one.view(), &one.view(), &zero.view()).unwrap();
        assert!((next[[0, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_g_gives_zero() {
        let inst = SymTriInstance::new(Array2::zeros((2, 2)), 1, KernelParams::default()).unwrap();
        let u = array![[0.0], [0.0]];
        let prev = array![[1.0], [2.0]];
        // G = α(U_k − U_prev) ≤ 0
        let next = update_u(
            &inst,
            0.45,
            0.5,
            &u.view(),
            &prev.view(),
            &array![[1.0]].view(),
        )
        .unwrap();
        assert_eq!(next, Array2::<f64>::zeros((2, 1)));
    }

    #[test]
    fn scalar_v_block() {
        let inst = SymTriInstance::new(array![[4.0]], 1, KernelParams::default()).unwrap();
        let zero = array![[0.0]];
        let next = update_v(
            &inst,
            0.9,
            0.0,
            &array![[1.0]].view(),
            &zero.view(),
            &zero.view(),
        )
        .unwrap();
        assert!((next[[0, 0]] - 1.8).abs() < 1e-15);
    }

    #[test]
    fn v_fixed_point_without_gradient() {
        // U = 0 gives ∇_V f = 0.
        let inst = SymTriInstance::new(array![[1.0, 0.0], [0.0, 1.0]], 2, KernelParams::default())
            .unwrap();
        let v = array![[1.0, 0.5], [0.5, 2.0]];
        let next = update_v(
            &inst,
            0.9,
            0.0,
            &Array2::zeros((2, 2)).view(),
            &v.view(),
            &v.view(),
        )
        .unwrap();
        assert_eq!(next, v);
    }
}
