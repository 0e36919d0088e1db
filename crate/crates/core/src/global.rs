//! The globally convergent interior point method.
//!
//! Each outer iteration solves the perturbed Newton equation with
//! `μ = σρ`, bounds the step by the centrality function `f^I` in closed form
//! and then backtracks until `f^II ≥ 0` and the Armijo condition on the merit
//! `φ = ‖F‖²` hold together.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::clock::Clock;
use crate::error::Result;
use crate::kkt::{grad_merit, kkt_field, kkt_residual, norm_chain_holds, KktValue};
use crate::linsolve::{check_interior, newton_residual, solve_newton_from};
use crate::manifolds::{Iterate, Step};
use crate::problem::Problem;
use crate::report::{max_abs, IterationRecord, SolveReport, Status, StepRecord, Violation};
use crate::space::InnerProductSpace;

/// Multipliers above this magnitude are flagged in the report.
pub const LARGE_MULTIPLIER: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalConfig {
    /// Armijo constant in `(0, 0.5]`.
    pub beta: f64,
    /// Backtracking factor in `(0, 1)`.
    pub theta: f64,
    /// `γ_{−1}` in `(0.5, 1)`.
    pub gamma_init: f64,
    pub cr_tol: f64,
    pub cr_max_iter: usize,
    pub tol_kkt: f64,
    pub max_outer: usize,
    pub max_time_seconds: f64,
    /// Evaluate the run-time invariants at every step and record violations.
    pub check_invariants: bool,
    /// Backtracking gives up below this step size.
    pub min_alpha: f64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig {
            beta: 1e-4,
            theta: 0.5,
            gamma_init: 0.9,
            cr_tol: 1e-9,
            cr_max_iter: 1000,
            tol_kkt: 1e-6,
            max_outer: 10_000,
            max_time_seconds: f64::INFINITY,
            check_invariants: cfg!(debug_assertions),
            min_alpha: 1e-16,
        }
    }
}

impl GlobalConfig {
    fn validate(&self) {
        assert!(self.beta > 0.0 && self.beta <= 0.5, "β must lie in (0, 0.5]");
        assert!(self.theta > 0.0 && self.theta < 1.0, "θ must lie in (0, 1)");
        assert!(self.gamma_init > 0.5 && self.gamma_init < 1.0, "γ₋₁ must lie in (0.5, 1)");
    }
}

/// Constants of the centrality functions, fixed at the starting point, and
/// the current `γ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralityState {
    /// `min(Z₀S₀e) / (z₀ᵀs₀/m)`.
    pub tau1: f64,
    /// `z₀ᵀs₀ / ‖F(w₀)‖`.
    pub tau2: f64,
    pub gamma: f64,
}

impl CentralityState {
    pub fn new(z0: &DVector<f64>, s0: &DVector<f64>, f0_norm: f64, gamma_init: f64) -> Self {
        let zs = z0.component_mul(s0);
        let m = zs.len() as f64;
        let total = zs.sum();
        CentralityState {
            tau1: zs.min() / (total / m),
            tau2: total / f0_norm,
            gamma: gamma_init,
        }
    }

    /// `γ_k = (γ_{k−1} + 0.5)/2`.
    pub fn advance(&mut self) {
        self.gamma = 0.5 * (self.gamma + 0.5);
    }

    /// `f^I = min(ZSe) − γτ₁ zᵀs/m`.
    pub fn f_one(&self, z: &DVector<f64>, s: &DVector<f64>) -> f64 {
        let zs = z.component_mul(s);
        zs.min() - self.gamma * self.tau1 * zs.sum() / zs.len() as f64
    }

    /// `f^II = zᵀs − γτ₂‖F‖`.
    pub fn f_two(&self, z: &DVector<f64>, s: &DVector<f64>, f_norm: f64) -> f64 {
        z.dot(s) - self.gamma * self.tau2 * f_norm
    }
}

/// `σ = min{0.5, ‖F‖^{1/2}}` and `ρ = zᵀs/m`.
pub fn select_sigma_rho(z: &DVector<f64>, s: &DVector<f64>, f_norm: f64) -> (f64, f64) {
    let m = z.len() as f64;
    let rho = z.dot(s) / m;
    debug_assert!(
        rho <= (1.0 + 1e-12) * f_norm / libm::sqrt(m),
        "ρ outside its admissible interval"
    );
    (libm::sqrt(f_norm).min(0.5), rho)
}

/// Largest `α ≤ 1` with `f^I ≥ 0` on `(0, α]`.
///
/// Each `(z_i + αΔz_i)(s_i + αΔs_i) − κ Σ_j (z_j + αΔz_j)(s_j + αΔs_j)`,
/// `κ = γτ₁/m`, is a quadratic in `α`; the result is the smallest positive
/// root over all components, capped at one.
pub fn alpha_centrality_i(
    z: &DVector<f64>,
    s: &DVector<f64>,
    dz: &DVector<f64>,
    ds: &DVector<f64>,
    gamma: f64,
    tau1: f64,
) -> f64 {
    let kappa = gamma * tau1 / z.len() as f64;
    let sa: f64 = dz.dot(ds);
    let sb: f64 = z.dot(ds) + s.dot(dz);
    let sc: f64 = z.dot(s);
    let mut alpha = 1.0f64;
    for i in 0..z.len() {
        let a = dz[i] * ds[i] - kappa * sa;
        let b = z[i] * ds[i] + s[i] * dz[i] - kappa * sb;
        let c = z[i] * s[i] - kappa * sc;
        if let Some(r) = smallest_positive_root(a, b, c) {
            alpha = alpha.min(r);
        }
    }
    alpha
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let pick = |roots: &[f64]| roots.iter().copied().filter(|&r| r > 0.0).fold(None, |acc: Option<f64>, r| {
        Some(acc.map_or(r, |x| x.min(r)))
    });
    if a == 0.0 {
        return if b == 0.0 { None } else { pick(&[-c / b]) };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + libm::copysign(libm::sqrt(disc), b));
    if q == 0.0 {
        // b = 0 and c = 0: double root at zero.
        return None;
    }
    pick(&[q / a, c / q])
}

/// Result of the combined backtracking search.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub alpha: f64,
    pub iterate: Iterate,
    pub kkt: KktValue,
    pub backtracks: usize,
}

/// Why the search stopped without a step. `Retraction` means at least one
/// trial point was degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchFailure {
    StepTooSmall,
    Retraction,
}

/// Backtracks from `alpha_bar` by `θ` until the trial point is strictly
/// interior, `f^I ≥ 0`, `f^II ≥ 0` and
/// `φ(w(α)) − φ(w) ≤ αβ·slope`, where `slope = ⟨grad φ(w), Δw⟩`.
pub fn accept_step<P: Problem + ?Sized>(
    problem: &P,
    w: &Iterate,
    step: &Step,
    alpha_bar: f64,
    phi0: f64,
    slope: f64,
    state: &CentralityState,
    config: &GlobalConfig,
) -> core::result::Result<Accepted, SearchFailure> {
    let manifold = problem.manifold();
    let mut alpha = alpha_bar.min(1.0);
    let mut backtracks = 0;
    let mut retraction_failed = false;
    while alpha >= config.min_alpha {
        let z = &w.z + &step.dz * alpha;
        let s = &w.s + &step.ds * alpha;
        let interior = z.iter().chain(s.iter()).all(|&v| v > 0.0);
        if interior && state.f_one(&z, &s) >= 0.0 {
            // A degenerate trial point is rejected like any other.
            match w.retract(manifold, step, alpha) {
                Ok(trial) => {
                    let kkt = kkt_field(problem, &trial);
                    let f_norm = kkt.norm();
                    if state.f_two(&trial.z, &trial.s, f_norm) >= 0.0
                        && kkt.norm_squared() - phi0 <= alpha * config.beta * slope
                    {
                        return Ok(Accepted {
                            alpha,
                            iterate: trial,
                            kkt,
                            backtracks,
                        });
                    }
                }
                Err(_) => retraction_failed = true,
            }
        }
        alpha *= config.theta;
        backtracks += 1;
    }
    Err(if retraction_failed {
        SearchFailure::Retraction
    } else {
        SearchFailure::StepTooSmall
    })
}

/// `2(−‖F‖² + σρ zᵀs)`, the merit slope along an exact Newton direction.
pub fn predicted_slope(f_norm_sq: f64, sigma: f64, rho: f64, z: &DVector<f64>, s: &DVector<f64>) -> f64 {
    2.0 * (-f_norm_sq + sigma * rho * z.dot(s))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relative tolerance of the run-time slope identity check.
pub const SLOPE_IDENTITY_RTOL: f64 = 1e-10;
/// Rounding allowance of the inequality checks.
const ROUNDING_RTOL: f64 = 1e-12;

/// Runs the globally convergent method from `w0`.
pub fn global_solve<P: Problem + ?Sized>(
    problem: &P,
    w0: Iterate,
    config: &GlobalConfig,
    clock: &dyn Clock,
) -> Result<SolveReport> {
    config.validate();
    check_interior(&w0)?;
    let start = clock.now();
    let mut w = w0;
    let mut f = kkt_field(problem, &w);
    let mut state = CentralityState::new(&w.z, &w.s, f.norm(), config.gamma_init);
    let mut history = Vec::new();
    let mut violations = Vec::new();
    let mut large = Vec::new();
    let mut cr_total = 0;
    let mut k = 0;

    let status = loop {
        let f_norm_sq = f.norm_squared();
        let f_norm = libm::sqrt(f_norm_sq);
        let residual = kkt_residual(problem, &w);
        let max_multiplier = max_abs(&w.z).max(max_abs(&w.y));
        if max_multiplier > LARGE_MULTIPLIER {
            large.push(k);
        }
        let elapsed = clock.now() - start;
        let mut record = IterationRecord {
            k,
            f_norm,
            kkt_residual: residual,
            time: elapsed,
            max_multiplier,
            step: None,
        };
        if config.check_invariants && !norm_chain_holds(&w.z, &w.s, f_norm, ROUNDING_RTOL) {
            violations.push(Violation { k, check: "norm_chain", amount: f_norm });
        }
        if residual <= config.tol_kkt {
            history.push(record);
            break Status::Success;
        }
        if k >= config.max_outer {
            history.push(record);
            break Status::MaxIterations;
        }
        if elapsed > config.max_time_seconds {
            history.push(record);
            break Status::TimeLimit;
        }

        let (sigma, rho) = select_sigma_rho(&w.z, &w.s, f_norm);
        let mu = sigma * rho;
        let newton = match solve_newton_from(problem, &w, &f, mu, config.cr_tol, config.cr_max_iter) {
            Ok(n) => n,
            Err(_) => {
                history.push(record);
                break Status::LinearSolveFailure;
            }
        };
        cr_total += newton.report.iterations;
        let step = newton.step;

        let slope = grad_merit(problem, &w).inner(&step);
        let predicted = predicted_slope(f_norm_sq, sigma, rho, &w.z, &w.s);
        if config.check_invariants {
            let gap = relative_gap(slope, predicted);
            if gap > SLOPE_IDENTITY_RTOL {
                violations.push(Violation { k, check: "slope_identity", amount: gap });
            }
            // The closed form assumes an exact solve; adding `2⟨F, r⟩` for the
            // residual `r` of the computed step isolates the implementation.
            let r = newton_residual(problem, &w, &f, mu, &step);
            let corrected = predicted + 2.0 * f.clone().into_step().inner(&r);
            let gap = relative_gap(slope, corrected);
            if gap > SLOPE_IDENTITY_RTOL {
                violations.push(Violation { k, check: "slope_identity_corrected", amount: gap });
            }
        }
        if !(slope < 0.0) {
            history.push(record);
            break Status::LinearSolveFailure;
        }

        state.advance();
        let alpha_i = alpha_centrality_i(&w.z, &w.s, &step.dz, &step.ds, state.gamma, state.tau1);
        let accepted = match accept_step(problem, &w, &step, alpha_i, f_norm_sq, slope, &state, config) {
            Ok(a) => a,
            Err(e) => {
                history.push(record);
                break match e {
                    SearchFailure::StepTooSmall => Status::LineSearchFailure,
                    SearchFailure::Retraction => Status::RetractionFailure,
                };
            }
        };

        let alpha = accepted.alpha;
        let phi = accepted.kkt.norm_squared();
        if config.check_invariants {
            let w1 = &accepted.iterate;
            let bound = (1.0 - 2.0 * alpha * config.beta * (1.0 - sigma)) * f_norm_sq;
            if phi > bound + ROUNDING_RTOL * f_norm_sq {
                violations.push(Violation { k, check: "merit_decrease", amount: phi - bound });
            }
            let f1 = state.f_one(&w1.z, &w1.s);
            if f1 < 0.0 {
                violations.push(Violation { k, check: "centrality_one", amount: -f1 });
            }
            let f2 = state.f_two(&w1.z, &w1.s, libm::sqrt(phi));
            if f2 < 0.0 {
                violations.push(Violation { k, check: "centrality_two", amount: -f2 });
            }
            if check_interior(w1).is_err() {
                violations.push(Violation { k, check: "interior", amount: 0.0 });
            }
        }
        record.step = Some(StepRecord {
            alpha,
            sigma,
            mu,
            gamma: state.gamma,
            step_norm: step.norm(),
            backtracks: accepted.backtracks,
            cr_iterations: newton.report.iterations,
            cr_residual: newton.report.relative_residual,
            cr_status: newton.report.status,
        });
        history.push(record);
        w = accepted.iterate;
        f = accepted.kkt;
        k += 1;
    };

    let last = history.last().copied().expect("at least one record");
    Ok(SolveReport {
        status,
        iterations: k,
        final_iterate: w,
        final_kkt_residual: last.kkt_residual,
        final_f_norm: last.f_norm,
        cr_iterations_total: cr_total,
        elapsed: clock.now() - start,
        history,
        violations,
        large_multiplier_iterations: large,
    })
}
