//! Per-run diagnostics shared by the local and global solvers.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DVector;

use crate::linsolve::CrStatus;
use crate::manifolds::Iterate;

/// Terminal state of a solve. Every failure mode is distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    /// KKT residual reached the tolerance.
    Success,
    MaxIterations,
    TimeLimit,
    /// Backtracking shrank the step below the minimum.
    LineSearchFailure,
    /// The linear solver failed, or its inexact direction was not a descent
    /// direction for the merit function.
    LinearSolveFailure,
    /// The retraction could not be evaluated (fixed-rank degeneracy).
    RetractionFailure,
    /// `‖F‖` grew far beyond its best value (local solver only).
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::MaxIterations => "max_iter",
            Status::TimeLimit => "max_time",
            Status::LineSearchFailure => "line_search_failure",
            Status::LinearSolveFailure => "linear_solve_failure",
            Status::RetractionFailure => "retraction_failure",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Data about the step taken from an iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub alpha: f64,
    /// Centering fraction `σ_k` (global solver; `NaN` for the local one).
    pub sigma: f64,
    /// Barrier parameter used in the Newton equation.
    pub mu: f64,
    pub gamma: f64,
    /// `‖Δw_k‖`.
    pub step_norm: f64,
    pub backtracks: usize,
    pub cr_iterations: usize,
    pub cr_residual: f64,
    pub cr_status: CrStatus,
}

/// One visited iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖F(w_k)‖`.
    pub f_norm: f64,
    pub kkt_residual: f64,
    /// Seconds since the solve started.
    pub time: f64,
    pub max_multiplier: f64,
    /// `None` for the final iterate.
    pub step: Option<StepRecord>,
}

/// A run-time check that failed (only collected when checks are enabled).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub check: &'static str,
    /// Size of the violation in the check's own units.
    pub amount: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: Status,
    /// Number of steps taken.
    pub iterations: usize,
    pub final_iterate: Iterate,
    pub final_kkt_residual: f64,
    pub final_f_norm: f64,
    pub cr_iterations_total: usize,
    pub elapsed: f64,
    pub history: Vec<IterationRecord>,
    pub violations: Vec<Violation>,
    /// Iterations at which a multiplier exceeded `1e8` in magnitude.
    pub large_multiplier_iterations: Vec<usize>,
}

impl SolveReport {
    /// `‖F(w_k)‖` for every visited iterate.
    pub fn f_norms(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.f_norm).collect()
    }
}

/// Largest magnitude entry, zero for an empty vector.
pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
