//! Empirical convergence-rate classification of a Lyapunov sequence.
//!
//! With `S_k = ℒ^k − ℒ^∞`, the three Łojasiewicz regimes are finite
//! termination, geometric decay `S_k ≈ λτ^k`, and power-law decay
//! `S_k ≈ c·k^p` with `p < 0`. The fit regresses `ln S_k` on `k` and on
//! `ln k` and keeps the better line. Index 0 is left out of both fits.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_SERIES_LEN: usize = 10;
pub const R_SQUARED_THRESHOLD: f64 = 0.9;
/// Fraction of trailing iterations dropped when the limit is approximated
/// by the last value.
pub const TAIL_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Finite,
    Geometric,
    Sublinear,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub regime: Regime,
    /// Geometric factor, when the geometric fit wins.
    pub tau: Option<f64>,
    /// Power-law exponent, when the sublinear fit wins.
    pub exponent: Option<f64>,
    pub r_squared: f64,
}

/// Classifies a Lyapunov series, using its last value as the limit.
pub fn fit_rate(series: &[f64]) -> Result<RateFit> {
    check_series(series)?;
    let last = *series.last().unwrap();
    let keep = series.len() - ((TAIL_FRACTION * series.len() as f64).ceil() as usize).max(1);
    let gaps: Vec<f64> = series[..keep].iter().map(|v| (v - last).max(0.0)).collect();
    fit_gap_series(&gaps)
}

/// Classifies a Lyapunov series whose limit is known.
pub fn fit_rate_with_limit(series: &[f64], limit: f64) -> Result<RateFit> {
    check_series(series)?;
    let gaps: Vec<f64> = series.iter().map(|v| (v - limit).max(0.0)).collect();
    fit_gap_series(&gaps)
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::Input(format!(
            "rate fit needs at least {MIN_SERIES_LEN} values, got {}",
            series.len()
        )));
    }
    if let Some(k) = series
        .windows(2)
        .position(|w| w[1] > w[0] + 1e-10 * (1.0 + w[0].abs()))
    {
        return Err(Error::Input(format!("series increases at index {}", k + 1)));
    }
    Ok(())
}

/// Classifies a gap series `S_0, S_1, …` directly.
pub fn fit_gap_series(gaps: &[f64]) -> Result<RateFit> {
    let end = gaps.iter().rposition(|&s| s > 0.0).map_or(0, |p| p + 1);
    // A zero before the end of the series means the limit was reached in
    // finitely many steps.
    if end < gaps.len() || gaps[..end].contains(&0.0) {
        return Ok(finite());
    }
    let points: Vec<(f64, f64)> = (1..end).map(|k| (k as f64, gaps[k].ln())).collect();
    if points.len() < 3 {
        return Err(Error::Input(
            "rate fit needs at least three positive gaps".into(),
        ));
    }
    let geo = least_squares(points.iter().copied());
    let pow = least_squares(points.iter().map(|&(k, s)| (k.ln(), s)));
    let (regime, r_squared, tau, exponent) = if geo.r_squared >= pow.r_squared {
        let tau = geo.slope.exp();
        (Regime::Geometric, geo.r_squared, Some(tau), None)
    } else {
        (Regime::Sublinear, pow.r_squared, None, Some(pow.slope))
    };
    let decays = tau.is_none_or(|t| t < 1.0) && exponent.is_none_or(|p| p < 0.0);
    if r_squared < R_SQUARED_THRESHOLD || !decays {
        return Ok(RateFit {
            regime: Regime::Inconclusive,
            tau: None,
            exponent: None,
            r_squared,
        });
    }
    Ok(RateFit {
        regime,
        tau,
        exponent,
        r_squared,
    })
}

fn finite() -> RateFit {
    RateFit {
        regime: Regime::Finite,
        tau: None,
        exponent: None,
        r_squared: 1.0,
    }
}

struct LineFit {
    slope: f64,
    r_squared: f64,
}

fn least_squares(points: impl Iterator<Item = (f64, f64)> + Clone) -> LineFit {
    let n = points.clone().count() as f64;
    let (sx, sy) = points
        .clone()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    LineFit { slope, r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geometric(n: usize) -> Vec<f64> {
        (0..n).map(|k| 100.0 * 0.5f64.powi(k as i32)).collect()
    }

    fn power(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| if k == 0 { 2.0 } else { (k as f64).powi(-2) })
            .collect()
    }

    #[test]
    fn exact_geometric_series() {
        let fit = fit_gap_series(&geometric(40)).unwrap();
        assert_eq!(fit.regime, Regime::Geometric);
        assert!((fit.tau.unwrap() - 0.5).abs() < 1e-12);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn exact_power_series() {
        let fit = fit_gap_series(&power(200)).unwrap();
        assert_eq!(fit.regime, Regime::Sublinear);
        assert!((fit.exponent.unwrap() + 2.0).abs() < 1e-10);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn last_value_proxy_on_long_geometric_series() {
        let series: Vec<f64> = (0..40).map(|k| 3.0 + 100.0 * 0.5f64.powi(k)).collect();
        let fit = fit_rate(&series).unwrap();
        assert_eq!(fit.regime, Regime::Geometric);
    }

    #[test]
    fn exact_hit_is_finite() {
        let mut series = vec![5.0, 4.0, 3.0, 2.0];
        series.extend(std::iter::repeat_n(1.0, 20));
        assert_eq!(fit_rate(&series).unwrap().regime, Regime::Finite);
    }

    #[test]
    fn short_or_increasing_series_rejected() {
        assert!(fit_rate(&[3.0, 2.0, 1.0]).is_err());
        let mut s = geometric(20);
        s[7] += 10.0;
        assert!(fit_rate(&s).is_err());
    }

    #[test]
    fn noisy_flat_series_is_inconclusive() {
        let gaps: Vec<f64> = (0..50)
            .map(|k| 1.0 + 0.1 * ((k * 7919) % 13) as f64)
            .collect();
        assert_eq!(fit_gap_series(&gaps).unwrap().regime, Regime::Inconclusive);
    }

    proptest! {
        #[test]
        fn scale_invariant(c in 1e-6f64..1e6, tau in 0.1f64..0.95) {
            let base: Vec<f64> = (0..30).map(|k| tau.powi(k) * (1.0 + 0.01 * (k % 3) as f64)).collect();
            let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
            let a = fit_gap_series(&base).unwrap();
            let b = fit_gap_series(&scaled).unwrap();
            prop_assert_eq!(a.regime, b.regime);
            if let (Some(x), Some(y)) = (a.tau, b.tau) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            if let (Some(x), Some(y)) = (a.exponent, b.exponent) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
