//! The KKT vector field in slack form, its covariant derivative and the merit
//! function built on it.
//!
//! For `w = (x, y, z, s)`:
//!
//! ```text
//! F(w)     = (grad_x L(w), h(x), g(x) + s, ZSe)
//! ∇F(w)[Δw] = (Hess_x L[Δx] + H_x Δy + G_x Δz,  H_x*Δx,  G_x*Δx + Δs,  ZΔs + SΔz)
//! ∇F(w)*[V] = (Hess_x L[V_x] + H_x V_y + G_x V_z, H_x*V_x, G_x*V_x + SV_s, V_z + ZV_s)
//! ```
//!
//! The barrier perturbation `μê = (0, 0, 0, μe)` only shifts the right-hand
//! side of the Newton equation and never appears as a vector here.

use nalgebra::DVector;

use crate::manifolds::{Iterate, Step, Tangent};
use crate::problem::{ConstraintOps, Lagrangian, Problem};
use crate::space::InnerProductSpace;

/// The four blocks of `F(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktValue {
    /// `grad_x L(w)`.
    pub fx: Tangent,
    /// `h(x)`.
    pub fy: DVector<f64>,
    /// `g(x) + s`.
    pub fz: DVector<f64>,
    /// `ZSe`.
    pub fs: DVector<f64>,
}

impl KktValue {
    pub fn norm_squared(&self) -> f64 {
        self.fx.inner(&self.fx) + self.fy.norm_squared() + self.fz.norm_squared() + self.fs.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_squared())
    }

    /// The value as an element of `T_wN`.
    pub fn into_step(self) -> Step {
        Step {
            dx: self.fx,
            dy: self.fy,
            dz: self.fz,
            ds: self.fs,
        }
    }
}

/// Barrier perturbation `μê` with `ê = (0_x, 0, 0, e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub mu: f64,
}

impl Perturbation {
    /// `‖μê‖ = μ√m`.
    pub fn norm(&self, m: usize) -> f64 {
        self.mu * libm::sqrt(m as f64)
    }
}

/// `F(w)`.
pub fn kkt_field<P: Problem + ?Sized>(problem: &P, w: &Iterate) -> KktValue {
    let lag = Lagrangian::new(problem, w);
    KktValue {
        fx: lag.gradx(),
        fy: problem.eq(&w.x),
        fz: problem.ineq(&w.x) + &w.s,
        fs: w.z.component_mul(&w.s),
    }
}

/// `∇F(w)` and its adjoint as matrix-free operators on `T_wN`.
pub struct CovariantDerivative<'a, P: Problem + ?Sized> {
    w: &'a Iterate,
    lag: Lagrangian<'a, P>,
    ops: ConstraintOps<'a, P>,
}

impl<'a, P: Problem + ?Sized> CovariantDerivative<'a, P> {
    pub fn new(problem: &'a P, w: &'a Iterate) -> Self {
        CovariantDerivative {
            w,
            lag: Lagrangian::new(problem, w),
            ops: ConstraintOps::new(problem, &w.x),
        }
    }

    fn check(&self, v: &Step) {
        assert_eq!(v.dy.len(), self.w.y.len(), "Δy length mismatch");
        assert_eq!(v.dz.len(), self.w.z.len(), "Δz length mismatch");
        assert_eq!(v.ds.len(), self.w.s.len(), "Δs length mismatch");
    }

    /// `∇F(w)[Δw]`.
    pub fn apply(&self, dw: &Step) -> Step {
        self.check(dw);
        let mut dx = self.lag.hessvec(&dw.dx);
        dx.axpy(1.0, &self.ops.h_apply(&dw.dy));
        dx.axpy(1.0, &self.ops.g_apply(&dw.dz));
        let gx = self.ops.g_adjoint(&dw.dx);
        Step {
            dx,
            dy: self.ops.h_adjoint(&dw.dx),
            dz: gx + &dw.ds,
            ds: self.w.z.component_mul(&dw.ds) + self.w.s.component_mul(&dw.dz),
        }
    }

    /// `∇F(w)*[V]`.
    pub fn adjoint_apply(&self, v: &Step) -> Step {
        self.check(v);
        let mut dx = self.lag.hessvec(&v.dx);
        dx.axpy(1.0, &self.ops.h_apply(&v.dy));
        dx.axpy(1.0, &self.ops.g_apply(&v.dz));
        let gx = self.ops.g_adjoint(&v.dx);
        Step {
            dx,
            dy: self.ops.h_adjoint(&v.dx),
            dz: gx + self.w.s.component_mul(&v.ds),
            ds: &v.dz + self.w.z.component_mul(&v.ds),
        }
    }
}

/// `∇F(w)[Δw]`.
pub fn nabla_f_apply<P: Problem + ?Sized>(problem: &P, w: &Iterate, dw: &Step) -> Step {
    CovariantDerivative::new(problem, w).apply(dw)
}

/// `∇F(w)*[V]`.
pub fn nabla_f_adjoint_apply<P: Problem + ?Sized>(problem: &P, w: &Iterate, v: &Step) -> Step {
    CovariantDerivative::new(problem, w).adjoint_apply(v)
}

/// Merit function `φ(w) = ‖F(w)‖²`.
pub fn merit<P: Problem + ?Sized>(problem: &P, w: &Iterate) -> f64 {
    kkt_field(problem, w).norm_squared()
}

/// `grad φ(w) = 2∇F(w)*[F(w)]`.
pub fn grad_merit<P: Problem + ?Sized>(problem: &P, w: &Iterate) -> Step {
    let f = kkt_field(problem, w).into_step();
    let mut g = nabla_f_adjoint_apply(problem, w, &f);
    g.scale(2.0);
    g
}

/// KKT residual used as the stopping metric:
///
/// ```text
/// sqrt(‖grad_x L‖² + Σ_i ([z_i]₋² + [g_i]₊² + (z_i g_i)²) + Σ_j h_j²)
/// ```
///
/// Slacks do not enter; it vanishes exactly at points satisfying the KKT
/// conditions of the original problem.
pub fn kkt_residual<P: Problem + ?Sized>(problem: &P, w: &Iterate) -> f64 {
    let grad = Lagrangian::new(problem, w).gradx();
    let g = problem.ineq(&w.x);
    let h = problem.eq(&w.x);
    libm::sqrt(residual_sum(grad.inner(&grad), &w.z, &g, &h))
}

fn residual_sum(grad_sq: f64, z: &DVector<f64>, g: &DVector<f64>, h: &DVector<f64>) -> f64 {
    let ineq: f64 = z
        .iter()
        .zip(g.iter())
        .map(|(&zi, &gi)| {
            let neg = zi.min(0.0);
            let pos = gi.max(0.0);
            neg * neg + pos * pos + (zi * gi) * (zi * gi)
        })
        .sum();
    grad_sq + ineq + h.norm_squared()
}

/// Checks `‖ZSe‖/√m ≤ zᵀs/√m ≤ ‖ZSe‖ ≤ ‖F(w)‖` for nonnegative `z`, `s`, with
/// a relative rounding allowance `rtol`.
pub fn norm_chain_holds(z: &DVector<f64>, s: &DVector<f64>, f_norm: f64, rtol: f64) -> bool {
    let m = libm::sqrt(z.len() as f64);
    let zs = z.component_mul(s);
    let a = zs.norm() / m;
    let b = z.dot(s) / m;
    let c = zs.norm();
    let slack = |v: f64| rtol * v.abs().max(f64::MIN_POSITIVE);
    a <= b + slack(b) && b <= c + slack(c) && c <= f_norm + slack(f_norm)
}
