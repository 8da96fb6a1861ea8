//! Verification machinery that stays independent of the update formulas it
//! checks.

pub mod audit;
pub mod fd;
pub mod oracle;
pub mod rate;
pub mod smoothness;

use serde::{Deserialize, Serialize};

pub use audit::{audit_trace, AuditOptions, AuditReport};
pub use fd::{check_block_gradients, finite_difference_block_grad, GradientReport};
pub use oracle::{check_block_solvers, numeric_subproblem_oracle, OracleOptions, OracleReport};
pub use rate::{fit_gap_series, fit_rate, fit_rate_with_limit, RateFit, Regime};
pub use smoothness::{verify_relative_smoothness, SmoothnessReport};

/// Combined diagnostics report with the flat key set used on disk.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub violations: usize,
    pub worst_slack: f64,
    pub regime: Option<Regime>,
    pub tau: Option<f64>,
    pub exponent: Option<f64>,
    pub r_squared: Option<f64>,
    pub first_fail_k: Option<usize>,
}

impl DiagnosticsReport {
    pub fn new(
        smoothness: &SmoothnessReport,
        audit: Option<&AuditReport>,
        rate: Option<&RateFit>,
    ) -> Self {
        Self {
            violations: smoothness.violations,
            worst_slack: smoothness.worst_slack,
            regime: rate.map(|r| r.regime),
            tau: rate.and_then(|r| r.tau),
            exponent: rate.and_then(|r| r.exponent),
            r_squared: rate.map(|r| r.r_squared),
            first_fail_k: audit.and_then(|a| a.first_fail_k),
        }
    }
}
