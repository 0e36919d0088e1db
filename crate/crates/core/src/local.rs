//! The prototype interior point method: damped perturbed Newton steps with
//! the fraction-to-boundary rule and no globalization. It converges from
//! starts close to a nondegenerate KKT point, superlinearly or quadratically
//! depending on how fast the barrier parameter is driven to zero.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::kkt::{kkt_field, kkt_residual};
use crate::linsolve::{check_interior, solve_newton_from, CrStatus};
use crate::manifolds::Iterate;
use crate::problem::Problem;
use crate::report::{max_abs, IterationRecord, SolveReport, Status, StepRecord};
use crate::space::InnerProductSpace;

/// How `μ_k` and `γ_k` follow `‖F(w_k)‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `μ_k = min{μ_{k−1}/1.5, 0.5‖F_k‖²}`, `γ_k = max{γ̂, 1 − ‖F_k‖}`.
    Quadratic,
    /// `μ_k = min{μ_{k−1}/1.5, ‖F_k‖^{1.5}}`, `γ_k = max{γ̂, 1 − ‖F_k‖}`.
    Superlinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalConfig {
    /// Lower bound `γ̂ ∈ (0, 1)` for the fraction-to-boundary factor.
    pub gamma_hat: f64,
    /// Upper bound for the first barrier parameter.
    pub mu0: f64,
    pub tol_kkt: f64,
    pub max_iter: usize,
    pub cr_tol: f64,
    pub cr_max_iter: usize,
    pub schedule: Schedule,
    /// Abort once `‖F‖` exceeds this multiple of its best value.
    pub divergence_factor: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig {
            gamma_hat: 0.5,
            mu0: 0.1,
            tol_kkt: 1e-10,
            max_iter: 100,
            cr_tol: 1e-9,
            cr_max_iter: 1000,
            schedule: Schedule::Quadratic,
            divergence_factor: 1e6,
        }
    }
}

/// Largest `α ≤ 1` keeping `(z + αΔz, s + αΔs)` a fraction `γ` away from the
/// boundary:
///
/// ```text
/// α = min{1, γ min{−s_i/Δs_i : Δs_i < 0}, γ min{−z_i/Δz_i : Δz_i < 0}}
/// ```
pub fn fraction_to_boundary(
    z: &DVector<f64>,
    s: &DVector<f64>,
    dz: &DVector<f64>,
    ds: &DVector<f64>,
    gamma: f64,
) -> Result<f64> {
    for (which, v) in [("z", z), ("s", s)] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::InteriorViolation { which, index, value });
        }
    }
    let ratio = |v: &DVector<f64>, dv: &DVector<f64>| {
        v.iter()
            .zip(dv.iter())
            .filter(|(_, &d)| d < 0.0)
            .map(|(&x, &d)| -x / d)
            .fold(f64::INFINITY, f64::min)
    };
    Ok(1f64.min(gamma * ratio(s, ds)).min(gamma * ratio(z, dz)))
}

/// Runs the prototype method from `w0` until the KKT residual drops to
/// `config.tol_kkt`.
pub fn local_solve<P: Problem + ?Sized>(
    problem: &P,
    w0: Iterate,
    config: &LocalConfig,
    clock: &dyn Clock,
) -> Result<SolveReport> {
    assert!(config.gamma_hat > 0.0 && config.gamma_hat < 1.0, "γ̂ must lie in (0, 1)");
    check_interior(&w0)?;
    let manifold = problem.manifold();
    let start = clock.now();
    let mut w = w0;
    let mut history = Vec::new();
    let mut mu_prev = 1.5 * config.mu0;
    let mut best_f = f64::INFINITY;
    let mut cr_total = 0;
    let mut k = 0;

    let status = loop {
        let f = kkt_field(problem, &w);
        let f_norm = f.norm();
        let residual = kkt_residual(problem, &w);
        best_f = best_f.min(f_norm);
        let mut record = IterationRecord {
            k,
            f_norm,
            kkt_residual: residual,
            time: clock.now() - start,
            max_multiplier: max_abs(&w.z).max(max_abs(&w.y)),
            step: None,
        };
        if residual <= config.tol_kkt {
            history.push(record);
            break Status::Success;
        }
        if f_norm > config.divergence_factor * best_f || !f_norm.is_finite() {
            history.push(record);
            break Status::Diverged;
        }
        if k >= config.max_iter {
            history.push(record);
            break Status::MaxIterations;
        }

        let target = match config.schedule {
            Schedule::Quadratic => 0.5 * f_norm * f_norm,
            Schedule::Superlinear => libm::pow(f_norm, 1.5),
        };
        let mu = (mu_prev / 1.5).min(target);
        let gamma = config.gamma_hat.max(1.0 - f_norm);

        let newton = match solve_newton_from(problem, &w, &f, mu, config.cr_tol, config.cr_max_iter) {
            Ok(n) => n,
            Err(_) => {
                history.push(record);
                break Status::LinearSolveFailure;
            }
        };
        cr_total += newton.report.iterations;
        if newton.report.status == CrStatus::Breakdown && newton.report.relative_residual > 1e-2 {
            history.push(record);
            break Status::LinearSolveFailure;
        }
        let step = newton.step;
        let alpha = fraction_to_boundary(&w.z, &w.s, &step.dz, &step.ds, gamma)?;
        let next = match w.retract(manifold, &step, alpha) {
            Ok(n) => n,
            Err(_) => {
                history.push(record);
                break Status::RetractionFailure;
            }
        };
        record.step = Some(StepRecord {
            alpha,
            sigma: f64::NAN,
            mu,
            gamma,
            step_norm: step.norm(),
            backtracks: 0,
            cr_iterations: newton.report.iterations,
            cr_residual: newton.report.relative_residual,
            cr_status: newton.report.status,
        });
        history.push(record);
        w = next;
        mu_prev = mu;
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
        violations: Vec::new(),
        large_multiplier_iterations: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn full_step_when_nothing_decreases() {
        let a = fraction_to_boundary(&v(&[1.0, 2.0]), &v(&[1.0, 1.0]), &v(&[0.0, 3.0]), &v(&[1.0, 0.0]), 0.9);
        assert_eq!(a.unwrap(), 1.0);
    }

    #[test]
    fn fraction_to_boundary_example() {
        let a = fraction_to_boundary(
            &v(&[1.0, 1.0]),
            &v(&[1.0, 2.0]),
            &v(&[-0.5, -2.0]),
            &v(&[-1.0, 1.0]),
            0.9,
        )
        .unwrap();
        assert!((a - 0.45).abs() < 1e-15);
    }

    #[test]
    fn small_gamma_gives_small_steps() {
        for g in [1e-1, 1e-3, 1e-6] {
            let a = fraction_to_boundary(&v(&[1.0]), &v(&[1.0]), &v(&[-1.0]), &v(&[0.0]), g).unwrap();
            assert!((a - g).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_boundary_points() {
        let e = fraction_to_boundary(&v(&[1.0, 0.0]), &v(&[1.0, 1.0]), &v(&[0.0, 0.0]), &v(&[0.0, 0.0]), 0.5);
        assert!(matches!(e, Err(Error::InteriorViolation { which: "z", index: 1, .. })));
    }
}
