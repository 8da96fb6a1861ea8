use ndarray::{Array2, ArrayView2};

use super::SymTriInstance;
use crate::linalg::{frob_dot, frob_norm, frob_sq};

/// `b1(‖X‖‖V‖ + ε1)`, the `U`-independent curvature of `h1`.
pub(crate) fn tau1(inst: &SymTriInstance, v: &ArrayView2<'_, f64>) -> f64 {
    let p = inst.params();
    p.b1 * (inst.norm_x() * frob_norm(v) + p.eps1)
}

/// `h1(U, V) = (a1/4)‖V‖²‖U‖⁴ + (b1/2)(‖X‖‖V‖ + ε1)‖U‖²`.
pub fn h1_value(inst: &SymTriInstance, u: &ArrayView2<'_, f64>, v: &ArrayView2<'_, f64>) -> f64 {
    let a1 = inst.params().a1;
    let uu = frob_sq(u);
    0.25 * a1 * frob_sq(v) * uu * uu + 0.5 * tau1(inst, v) * uu
}

/// `∇_U h1 = (a1‖U‖²‖V‖² + b1(‖X‖‖V‖ + ε1)) U`.
pub fn h1_grad_u(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Array2<f64> {
    let c = inst.params().a1 * frob_sq(u) * frob_sq(v) + tau1(inst, v);
    u.mapv(|t| c * t)
}

/// `∇²_{UU} h1 · Z = 2a1‖V‖²⟨U, Z⟩ U + (a1‖V‖²‖U‖² + b1(‖X‖‖V‖ + ε1)) Z`.
pub fn h1_hess_u(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
    z: &ArrayView2<'_, f64>,
) -> Array2<f64> {
    let a1 = inst.params().a1;
    let vv = frob_sq(v);
    let c = a1 * vv * frob_sq(u) + tau1(inst, v);
    let w = 2.0 * a1 * vv * frob_dot(u, z);
    u.mapv(|t| w * t) + &z.mapv(|t| c * t)
}

/// `∇_V h1 = (a1/2)‖U‖⁴ V + (b1/2)‖X‖‖U‖² V/‖V‖`, with the second term
/// taken as zero at `V = 0`.
pub fn h1_grad_v(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Array2<f64> {
    let p = inst.params();
    let uu = frob_sq(u);
    let nv = frob_norm(v);
    let mut c = 0.5 * p.a1 * uu * uu;
    if nv > 0.0 {
        c += 0.5 * p.b1 * inst.norm_x() * uu / nv;
    }
    v.mapv(|t| c * t)
}

/// `h2(U, V) = (a2/2)(‖U‖⁴ + ε2)‖V‖²`.
pub fn h2_value(inst: &SymTriInstance, u: &ArrayView2<'_, f64>, v: &ArrayView2<'_, f64>) -> f64 {
    0.5 * eta(inst, u) * frob_sq(v)
}

/// `a2(‖U‖⁴ + ε2)`, the constant curvature of `h2` in `V`.
pub(crate) fn eta(inst: &SymTriInstance, u: &ArrayView2<'_, f64>) -> f64 {
    let p = inst.params();
    let uu = frob_sq(u);
    p.a2 * (uu * uu + p.eps2)
}

/// `∇_V h2 = a2(‖U‖⁴ + ε2) V`.
pub fn h2_grad_v(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Array2<f64> {
    let c = eta(inst, u);
    v.mapv(|t| c * t)
}

/// `∇²_{VV} h2 · Z = a2(‖U‖⁴ + ε2) Z`.
pub fn h2_hess_v(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    z: &ArrayView2<'_, f64>,
) -> Array2<f64> {
    let c = eta(inst, u);
    z.mapv(|t| c * t)
}

/// `∇_U h2 = 2a2‖U‖²‖V‖² U`.
pub fn h2_grad_u(
    inst: &SymTriInstance,
    u: &ArrayView2<'_, f64>,
    v: &ArrayView2<'_, f64>,
) -> Array2<f64> {
    let c = 2.0 * inst.params().a2 * frob_sq(u) * frob_sq(v);
    u.mapv(|t| c * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symtrinmf::KernelParams;
    use ndarray::array;

    #[test]
    fn h1_vanishes_at_zero_u() {
        let inst = SymTriInstance::new(array![[1.0, 0.5], [0.5, 1.0]], 2, KernelParams::default())
            .unwrap();
        let u = Array2::zeros((2, 2));
        let v = array![[1.0, 0.0], [2.0, 1.0]];
        assert_eq!(h1_value(&inst, &u.view(), &v.view()), 0.0);
        assert_eq!(
            h1_grad_u(&inst, &u.view(), &v.view()),
            Array2::<f64>::zeros((2, 2))
        );
    }

    #[test]
    fn h1_scalar_values() {
        let inst = SymTriInstance::new(array![[0.0]], 1, KernelParams::default()).unwrap();
        let one = array![[1.0]];
        assert_eq!(h1_value(&inst, &one.view(), &one.view()), 2.5);
        assert_eq!(h1_grad_u(&inst, &one.view(), &one.view()), array![[8.0]]);
    }

    #[test]
    fn h2_scalar_values() {
        let inst = SymTriInstance::new(array![[0.0]], 1, KernelParams::default()).unwrap();
        let u = array![[1.0]];
        let v = array![[3.0]];
        assert_eq!(h2_value(&inst, &u.view(), &v.view()), 9.0);
        assert_eq!(h2_grad_v(&inst, &u.view(), &v.view()), array![[6.0]]);
        assert_eq!(
            h2_value(&inst, &u.view(), &Array2::zeros((1, 1)).view()),
            0.0
        );
    }
}
