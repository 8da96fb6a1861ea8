//! Post-hoc checks of a solver trace against the Lyapunov descent bounds.

use serde::{Deserialize, Serialize};

use crate::solver::{IterationRecord, StepSchedule};

#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    /// Relative slack `s` in `… + s · (1 + |ℒ^k|)`.
    pub slack_rel: f64,
    /// When set, the last record's largest gap must not exceed this.
    pub final_gap_tol: Option<f64>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            slack_rel: 1e-10,
            final_gap_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    /// Index `k` of the first record whose transition from `k − 1` fails.
    pub first_fail_k: Option<usize>,
    pub monotone: bool,
    pub descent_bound: bool,
    pub cyclic_bound: bool,
    pub gaps_vanish: Option<bool>,
}

/// Checks, for every consecutive pair of records,
///
/// * `ℒ^{k+1} ≤ ℒ^k`,
/// * `ℒ^{k+1} − ℒ^k ≤ −Σ_i (a_i D_i^{k+1} + b_i D_i^k)`,
/// * `Φ^{k+1} − Φ^k ≤ Σ_i (−(a_i + δ_i) D_i^{k+1} + (δ_i − b_i) D_i^k)`,
///
/// each up to the relative slack. The third line is the cyclic cost
/// inequality rewritten with the schedule's own coefficients.
pub fn audit_trace(
    trace: &[IterationRecord],
    schedule: &StepSchedule,
    options: &AuditOptions,
) -> AuditReport {
    let mut report = AuditReport {
        passed: true,
        first_fail_k: None,
        monotone: true,
        descent_bound: true,
        cyclic_bound: true,
        gaps_vanish: None,
    };
    let fail = |report: &mut AuditReport, k: usize| {
        report.passed = false;
        if report.first_fail_k.is_none() {
            report.first_fail_k = Some(k);
        }
    };
    for pair in trace.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let slack = options.slack_rel * (1.0 + prev.lyapunov.abs());
        let change = next.lyapunov - prev.lyapunov;
        let mut bound = 0.0;
        let mut cyclic = 0.0;
        for ((step, d_now), d_before) in schedule.steps().iter().zip(&next.gaps).zip(&prev.gaps) {
            bound -= step.a * d_now + step.b * d_before;
            cyclic += -(step.a + step.delta) * d_now + (step.delta - step.b) * d_before;
        }
        if change > slack {
            report.monotone = false;
            fail(&mut report, next.k);
        }
        if change > bound + slack {
            report.descent_bound = false;
            fail(&mut report, next.k);
        }
        if next.phi - prev.phi > cyclic + slack {
            report.cyclic_bound = false;
            fail(&mut report, next.k);
        }
    }
    if let (Some(tol), Some(last)) = (options.final_gap_tol, trace.last()) {
        let ok = last.gaps.iter().all(|&g| g <= tol);
        report.gaps_vanish = Some(ok);
        if !ok {
            fail(&mut report, last.k);
        }
    }
    report
}
