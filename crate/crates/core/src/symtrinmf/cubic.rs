use crate::{Error, Result};

/// Unique positive root of `t³ − τ1 t² − τ2 = 0` for `τ1, τ2 ≥ 0`, not both
/// zero.
///
/// Cardano's formula for `t²(t − a) = c` gives
///
/// ```text
/// t = a/3 + ∛((c + √Δ)/2 + a³/27) + ∛((c − √Δ)/2 + a³/27),   Δ = c² + (4/27)c a³.
/// ```
///
/// The two cube roots multiply to `a²/9`, so the second is recovered as
/// `a²/(9u)` from the first instead of from the cancelling difference
/// `c − √Δ`. Inputs are rescaled so that the larger of `a` and `∛c` is one,
/// and the result gets one Newton step.
///
/// ```
/// use bibpa::symtrinmf::cubic_positive_root;
/// assert_eq!(cubic_positive_root(2.0, 0.0).unwrap(), 2.0);
/// assert_eq!(cubic_positive_root(0.0, 8.0).unwrap(), 2.0);
/// ```
pub fn cubic_positive_root(tau1: f64, tau2: f64) -> Result<f64> {
    if !(tau1 >= 0.0 && tau2 >= 0.0 && tau1.is_finite() && tau2.is_finite()) {
        return Err(Error::Parameter(format!(
            "cubic coefficients must be finite and nonnegative, got ({tau1}, {tau2})"
        )));
    }
    if tau1 == 0.0 && tau2 == 0.0 {
        return Err(Error::Degenerate(
            "tau1 = tau2 = 0 has no positive root".into(),
        ));
    }
    let scale = tau1.max(tau2.cbrt());
    let a = tau1 / scale;
    let c = tau2 / (scale * scale * scale);
    let a3 = a * a * a;
    let disc = c * c + (4.0 / 27.0) * c * a3;
    let u = ((c + disc.sqrt()) / 2.0 + a3 / 27.0).cbrt();
    let mut t = a / 3.0 + u + a * a / (9.0 * u);

    let residual = |t: f64| t * t * (t - a) - c;
    let slope = 3.0 * t * t - 2.0 * a * t;
    if slope > 0.0 {
        let polished = t - residual(t) / slope;
        if polished > 0.0 && residual(polished).abs() <= residual(t).abs() {
            t = polished;
        }
    }
    Ok(t * scale)
}
