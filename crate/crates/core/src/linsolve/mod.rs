//! Newton steps for the perturbed KKT system.
//!
//! The full Newton equation `∇F(w)[Δw] = −F(w) + μê` is reduced by
//! eliminating
//!
//! ```text
//! Δz = S⁻¹[Z(G_x*Δx + F_z) + μe − F_s]
//! Δs = Z⁻¹(μe − F_s − SΔz)
//! ```
//!
//! to the symmetric condensed system on `T_xM × R^l`
//!
//! ```text
//! T(Δx, Δy) = (A_w Δx + H_x Δy, H_x*Δx) = (c, q)
//! A_w = Hess_x L(w) + G_x S⁻¹Z G_x*
//! c   = −F_x − G_x S⁻¹(Z F_z + μe − F_s),   q = −F_y
//! ```
//!
//! which is solved matrix-free with [`cr_solve`]. With no equality
//! constraints only `A_w Δx = c` on `T_xM` remains.

mod cr;
pub mod dense;

use nalgebra::DVector;

pub use cr::{cr_solve, CrReport, CrStatus};

use crate::error::{Error, Result};
use crate::kkt::{kkt_field, KktValue};
use crate::manifolds::{Iterate, Manifold, Point, Step, Tangent};
use crate::problem::{ConstraintOps, Lagrangian, Problem};
use crate::space::{InnerProductSpace, LinearOperator};

/// Element `(Δx, Δy)` of `T_xM × R^l` with the product inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedVec {
    pub dx: Tangent,
    pub dy: DVector<f64>,
}

impl InnerProductSpace for CondensedVec {
    fn inner(&self, o: &Self) -> f64 {
        self.dx.inner(&o.dx) + self.dy.dot(&o.dy)
    }
    fn axpy(&mut self, alpha: f64, o: &Self) {
        self.dx.axpy(alpha, &o.dx);
        self.dy.axpy(alpha, &o.dy, 1.0);
    }
    fn scale(&mut self, alpha: f64) {
        self.dx.scale(alpha);
        self.dy *= alpha;
    }
    fn zeroed(&self) -> Self {
        CondensedVec {
            dx: self.dx.zeroed(),
            dy: self.dy.zeroed(),
        }
    }
}

/// Fails unless `z > 0` and `s > 0` componentwise.
pub fn check_interior(w: &Iterate) -> Result<()> {
    for (which, v) in [("z", &w.z), ("s", &w.s)] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::InteriorViolation { which, index, value });
        }
    }
    Ok(())
}

/// The condensed operator `T` at an interior iterate.
pub struct CondensedOperator<'a, P: Problem + ?Sized> {
    manifold: &'a Manifold,
    x: &'a Point,
    lag: Lagrangian<'a, P>,
    ops: ConstraintOps<'a, P>,
    /// Diagonal of `S⁻¹Z`.
    z_over_s: DVector<f64>,
}

impl<'a, P: Problem + ?Sized> CondensedOperator<'a, P> {
    pub fn new(problem: &'a P, w: &'a Iterate) -> Result<Self> {
        check_interior(w)?;
        Ok(CondensedOperator {
            manifold: problem.manifold(),
            x: &w.x,
            lag: Lagrangian::new(problem, w),
            ops: ConstraintOps::new(problem, &w.x),
            z_over_s: w.z.component_div(&w.s),
        })
    }

    /// Removes the normal drift that CR recurrences accumulate in rounding.
    fn tangent(&self, v: &Tangent) -> Tangent {
        self.manifold.reproject(self.x, v)
    }

    /// `Θ[ξ] = G_x S⁻¹Z G_x*[ξ]`.
    pub fn theta(&self, dx: &Tangent) -> Tangent {
        let u = self.ops.g_adjoint(dx).component_mul(&self.z_over_s);
        self.ops.g_apply(&u)
    }

    /// `A_w[Δx] = Hess_x L[Δx] + Θ[Δx]`.
    pub fn apply_a(&self, dx: &Tangent) -> Tangent {
        let mut out = self.lag.hessvec(dx);
        out.axpy(1.0, &self.theta(dx));
        out
    }
}

impl<P: Problem + ?Sized> LinearOperator<CondensedVec> for CondensedOperator<'_, P> {
    fn apply(&self, v: &CondensedVec) -> CondensedVec {
        let vx = self.tangent(&v.dx);
        let mut dx = self.apply_a(&vx);
        if !v.dy.is_empty() {
            dx.axpy(1.0, &self.ops.h_apply(&v.dy));
        }
        CondensedVec {
            dx,
            dy: self.ops.h_adjoint(&vx),
        }
    }
}

/// `A_w` alone, for problems without equality constraints.
struct ReducedOperator<'o, 'a, P: Problem + ?Sized>(&'o CondensedOperator<'a, P>);

impl<P: Problem + ?Sized> LinearOperator<Tangent> for ReducedOperator<'_, '_, P> {
    fn apply(&self, v: &Tangent) -> Tangent {
        self.0.apply_a(&self.0.tangent(v))
    }
}

/// `T(Δx, Δy)`.
pub fn condensed_apply<P: Problem + ?Sized>(problem: &P, w: &Iterate, v: &CondensedVec) -> Result<CondensedVec> {
    Ok(CondensedOperator::new(problem, w)?.apply(v))
}

/// Right-hand side `(c, q)` of the condensed system for a given `F(w)`.
pub fn condensed_rhs_from<P: Problem + ?Sized>(
    problem: &P,
    w: &Iterate,
    f: &KktValue,
    mu: f64,
) -> Result<CondensedVec> {
    check_interior(w)?;
    let ops = ConstraintOps::new(problem, &w.x);
    let inner = (w.z.component_mul(&f.fz) + DVector::from_element(w.z.len(), mu) - &f.fs).component_div(&w.s);
    let mut c = f.fx.clone().scaled(-1.0);
    c.axpy(-1.0, &ops.g_apply(&inner));
    Ok(CondensedVec { dx: c, dy: -&f.fy })
}

/// Right-hand side `(c, q)` of the condensed system at `w`.
pub fn condensed_rhs<P: Problem + ?Sized>(problem: &P, w: &Iterate, mu: f64) -> Result<CondensedVec> {
    condensed_rhs_from(problem, w, &kkt_field(problem, w), mu)
}

/// Recovers `(Δz, Δs)` from `Δx` by back-substitution.
pub fn recover_dz_ds<P: Problem + ?Sized>(
    problem: &P,
    w: &Iterate,
    f: &KktValue,
    mu: f64,
    dx: &Tangent,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_interior(w)?;
    let gdx = ConstraintOps::new(problem, &w.x).g_adjoint(dx);
    let mu_e = DVector::from_element(w.z.len(), mu);
    let dz = (w.z.component_mul(&(gdx + &f.fz)) + &mu_e - &f.fs).component_div(&w.s);
    let ds = (mu_e - &f.fs - w.s.component_mul(&dz)).component_div(&w.z);
    Ok((dz, ds))
}

/// A Newton direction with the linear-solver diagnostics.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub step: Step,
    pub report: CrReport,
}

/// Solves `∇F(w)[Δw] = −F(w) + μê` through the condensed system, with the
/// KKT value `f = F(w)` already evaluated.
pub fn solve_newton_from<P: Problem + ?Sized>(
    problem: &P,
    w: &Iterate,
    f: &KktValue,
    mu: f64,
    cr_tol: f64,
    cr_max_iter: usize,
) -> Result<NewtonStep> {
    let op = CondensedOperator::new(problem, w)?;
    let rhs = condensed_rhs_from(problem, w, f, mu)?;
    let (dx, dy, report) = if problem.num_eq() == 0 {
        let (dx, rep) = cr_solve(&ReducedOperator(&op), &rhs.dx, cr_tol, cr_max_iter);
        (dx, DVector::zeros(0), rep)
    } else {
        let (sol, rep) = cr_solve(&op, &rhs, cr_tol, cr_max_iter);
        (sol.dx, sol.dy, rep)
    };
    let dx = problem.manifold().reproject(&w.x, &dx);
    let (dz, ds) = recover_dz_ds(problem, w, f, mu, &dx)?;
    Ok(NewtonStep {
        step: Step { dx, dy, dz, ds },
        report,
    })
}

/// Solves the perturbed Newton equation at `w` with barrier parameter `mu`.
pub fn solve_newton<P: Problem + ?Sized>(
    problem: &P,
    w: &Iterate,
    mu: f64,
    cr_tol: f64,
    cr_max_iter: usize,
) -> Result<NewtonStep> {
    solve_newton_from(problem, w, &kkt_field(problem, w), mu, cr_tol, cr_max_iter)
}

/// `∇F(w)[Δw] + F(w) − μê`, the residual of the full Newton equation.
pub fn newton_residual<P: Problem + ?Sized>(problem: &P, w: &Iterate, f: &KktValue, mu: f64, step: &Step) -> Step {
    let mut r = crate::kkt::nabla_f_apply(problem, w, step);
    r.axpy(1.0, &f.clone().into_step());
    r.ds.add_scalar_mut(-mu);
    r
}

#[cfg(test)]
mod tests;
