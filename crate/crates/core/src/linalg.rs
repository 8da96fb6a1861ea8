//! Small dense helpers shared by the engine and the tri-factorization code.
//!
//! Every reduction here walks its slices left to right, so the generic
//! engine and the direct matrix code produce bitwise-identical sums when fed
//! the same row-major data.

use ndarray::{Array2, ArrayBase, Data, Dimension};

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn sum_sq(a: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in a {
        acc += x * x;
    }
    acc
}

fn contiguous<S: Data<Elem = f64>, D: Dimension>(
    a: &ArrayBase<S, D>,
) -> std::borrow::Cow<'_, [f64]> {
    match a.as_slice() {
        Some(s) => std::borrow::Cow::Borrowed(s),
        None => std::borrow::Cow::Owned(a.iter().copied().collect()),
    }
}

/// Frobenius inner product in row-major order.
pub(crate) fn frob_dot<S1, S2, D>(a: &ArrayBase<S1, D>, b: &ArrayBase<S2, D>) -> f64
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    D: Dimension,
{
    dot_slices(&contiguous(a), &contiguous(b))
}

pub(crate) fn frob_sq<S: Data<Elem = f64>, D: Dimension>(a: &ArrayBase<S, D>) -> f64 {
    sum_sq(&contiguous(a))
}

pub(crate) fn frob_norm<S: Data<Elem = f64>, D: Dimension>(a: &ArrayBase<S, D>) -> f64 {
    frob_sq(a).sqrt()
}

/// `h(y) − h(x) − ⟨∇h(x), y − x⟩`, clamped at zero.
pub(crate) fn bregman_three_term(hy: f64, hx: f64, grad_x: &[f64], y: &[f64], x: &[f64]) -> f64 {
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let lin = dot_slices(grad_x, &diff);
    (hy - hx - lin).max(0.0)
}

pub(crate) fn clamp_nonneg(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}
