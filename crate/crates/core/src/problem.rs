//! Constrained problems on manifolds and the constraint-gradient operators.
//!
//! A problem supplies ambient (Euclidean) derivatives; Riemannian quantities
//! are derived through the manifold's projection and Weingarten maps. The
//! inequality constraints enter the Newton system only through the operators
//!
//! ```text
//! G_x[u]  = Σ u_i grad g_i(x)        G_x*[ξ] = (⟨grad g_i(x), ξ⟩)_i
//! H_x[v]  = Σ v_i grad h_i(x)        H_x*[ξ] = (⟨grad h_i(x), ξ⟩)_i
//! ```
//!
//! so [`Problem`] asks for weighted sums and pairings of the constraint
//! gradients rather than one gradient per component. Elementwise constraints
//! such as `X ≥ 0` then cost one ambient pass instead of `mn` of them.

use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifolds::{Iterate, Manifold, Point, Tangent};

/// A constrained optimization problem `min f(x) s.t. h(x) = 0, g(x) ≤ 0` on a
/// manifold, described by ambient derivatives.
///
/// `num_ineq` must be at least one. Equality callbacks default to an empty
/// set of constraints.
pub trait Problem {
    fn manifold(&self) -> &Manifold;

    /// Number of inequality constraints `m`.
    fn num_ineq(&self) -> usize;

    /// Number of equality constraints `l`.
    fn num_eq(&self) -> usize {
        0
    }

    fn cost(&self, x: &Point) -> f64;

    fn cost_egrad(&self, x: &Point) -> DMatrix<f64>;

    /// Ambient Hessian of the cost applied to the ambient direction `dir`.
    fn cost_ehess(&self, x: &Point, dir: &DMatrix<f64>) -> DMatrix<f64>;

    /// Values `g(x)`.
    fn ineq(&self, x: &Point) -> DVector<f64>;

    /// `Σ u_i ∇g_i(x)`.
    fn ineq_egrad_combine(&self, x: &Point, u: &DVector<f64>) -> DMatrix<f64>;

    /// `(⟨∇g_i(x), a⟩)_i` for an ambient matrix `a`.
    fn ineq_egrad_pair(&self, x: &Point, a: &DMatrix<f64>) -> DVector<f64>;

    /// `Σ u_i ∇²g_i(x)[dir]`.
    fn ineq_ehess_combine(&self, x: &Point, u: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64>;

    /// Values `h(x)`.
    fn eq(&self, _x: &Point) -> DVector<f64> {
        DVector::zeros(0)
    }

    fn eq_egrad_combine(&self, _x: &Point, _v: &DVector<f64>) -> DMatrix<f64> {
        let (r, c) = self.manifold().ambient_shape();
        DMatrix::zeros(r, c)
    }

    fn eq_egrad_pair(&self, _x: &Point, _a: &DMatrix<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }

    fn eq_ehess_combine(&self, _x: &Point, _v: &DVector<f64>, _dir: &DMatrix<f64>) -> DMatrix<f64> {
        let (r, c) = self.manifold().ambient_shape();
        DMatrix::zeros(r, c)
    }
}

type ValueFn = Box<dyn Fn(&DMatrix<f64>) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync>;
type HessFn = Box<dyn Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64> + Send + Sync>;

/// A smooth scalar function on the ambient matrix space: value, gradient and
/// Hessian-vector product.
pub struct ScalarFn {
    value: ValueFn,
    egrad: GradFn,
    ehess: HessFn,
}

impl ScalarFn {
    pub fn new(
        value: impl Fn(&DMatrix<f64>) -> f64 + Send + Sync + 'static,
        egrad: impl Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        ehess: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarFn {
            value: Box::new(value),
            egrad: Box::new(egrad),
            ehess: Box::new(ehess),
        }
    }

    pub fn value(&self, x: &DMatrix<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn egrad(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (self.egrad)(x)
    }

    pub fn ehess(&self, x: &DMatrix<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
        (self.ehess)(x, dir)
    }
}

/// A problem assembled from one [`ScalarFn`] per objective and constraint
/// component.
pub struct Rcop {
    manifold: Manifold,
    objective: ScalarFn,
    ineq: Vec<ScalarFn>,
    eq: Vec<ScalarFn>,
}

impl Rcop {
    pub fn new(manifold: Manifold, objective: ScalarFn, ineq: Vec<ScalarFn>, eq: Vec<ScalarFn>) -> Result<Self> {
        if ineq.is_empty() {
            return Err(Error::NoInequalities);
        }
        Ok(Rcop {
            manifold,
            objective,
            ineq,
            eq,
        })
    }
}

fn combine(fns: &[ScalarFn], x: &DMatrix<f64>, u: &DVector<f64>) -> DMatrix<f64> {
    assert_eq!(u.len(), fns.len(), "multiplier length mismatch");
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (f, &ui) in fns.iter().zip(u.iter()) {
        if ui != 0.0 {
            crate::linalg::axpy(&mut out, ui, &f.egrad(x));
        }
    }
    out
}

fn hess_combine(fns: &[ScalarFn], x: &DMatrix<f64>, u: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(u.len(), fns.len(), "multiplier length mismatch");
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (f, &ui) in fns.iter().zip(u.iter()) {
        if ui != 0.0 {
            crate::linalg::axpy(&mut out, ui, &f.ehess(x, dir));
        }
    }
    out
}

impl Problem for Rcop {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }
    fn num_ineq(&self) -> usize {
        self.ineq.len()
    }
    fn num_eq(&self) -> usize {
        self.eq.len()
    }
    fn cost(&self, x: &Point) -> f64 {
        self.objective.value(x.matrix())
    }
    fn cost_egrad(&self, x: &Point) -> DMatrix<f64> {
        self.objective.egrad(x.matrix())
    }
    fn cost_ehess(&self, x: &Point, dir: &DMatrix<f64>) -> DMatrix<f64> {
        self.objective.ehess(x.matrix(), dir)
    }
    fn ineq(&self, x: &Point) -> DVector<f64> {
        DVector::from_iterator(self.ineq.len(), self.ineq.iter().map(|g| g.value(x.matrix())))
    }
    fn ineq_egrad_combine(&self, x: &Point, u: &DVector<f64>) -> DMatrix<f64> {
        combine(&self.ineq, x.matrix(), u)
    }
    fn ineq_egrad_pair(&self, x: &Point, a: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.ineq.len(), self.ineq.iter().map(|g| g.egrad(x.matrix()).dot(a)))
    }
    fn ineq_ehess_combine(&self, x: &Point, u: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
        hess_combine(&self.ineq, x.matrix(), u, dir)
    }
    fn eq(&self, x: &Point) -> DVector<f64> {
        DVector::from_iterator(self.eq.len(), self.eq.iter().map(|h| h.value(x.matrix())))
    }
    fn eq_egrad_combine(&self, x: &Point, v: &DVector<f64>) -> DMatrix<f64> {
        combine(&self.eq, x.matrix(), v)
    }
    fn eq_egrad_pair(&self, x: &Point, a: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.eq.len(), self.eq.iter().map(|h| h.egrad(x.matrix()).dot(a)))
    }
    fn eq_ehess_combine(&self, x: &Point, v: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
        hess_combine(&self.eq, x.matrix(), v, dir)
    }
}

/// The operators `G_x`, `H_x` and their adjoints at a fixed point `x`.
pub struct ConstraintOps<'a, P: Problem + ?Sized> {
    problem: &'a P,
    x: &'a Point,
}

impl<'a, P: Problem + ?Sized> ConstraintOps<'a, P> {
    pub fn new(problem: &'a P, x: &'a Point) -> Self {
        ConstraintOps { problem, x }
    }

    /// `G_x[u] = Σ u_i grad g_i(x)`.
    pub fn g_apply(&self, u: &DVector<f64>) -> Tangent {
        assert_eq!(u.len(), self.problem.num_ineq(), "G_x applied to a vector of the wrong length");
        let amb = self.problem.ineq_egrad_combine(self.x, u);
        self.problem.manifold().proj(self.x, &amb)
    }

    /// `G_x*[ξ] = (⟨grad g_i(x), ξ⟩)_i`. For tangent `ξ` the projection inside
    /// `grad g_i` drops out of the pairing.
    pub fn g_adjoint(&self, xi: &Tangent) -> DVector<f64> {
        self.problem.ineq_egrad_pair(self.x, &xi.ambient(self.x))
    }

    /// `H_x[v] = Σ v_i grad h_i(x)`; the zero tangent when there are no
    /// equality constraints.
    pub fn h_apply(&self, v: &DVector<f64>) -> Tangent {
        assert_eq!(v.len(), self.problem.num_eq(), "H_x applied to a vector of the wrong length");
        let man = self.problem.manifold();
        if v.is_empty() {
            return man.zero_tangent(self.x);
        }
        man.proj(self.x, &self.problem.eq_egrad_combine(self.x, v))
    }

    pub fn h_adjoint(&self, xi: &Tangent) -> DVector<f64> {
        if self.problem.num_eq() == 0 {
            return DVector::zeros(0);
        }
        self.problem.eq_egrad_pair(self.x, &xi.ambient(self.x))
    }
}

/// Derivatives of the Lagrangian `L(x, y, z) = f + yᵀh + zᵀg` at a fixed
/// iterate. The ambient gradient of `L` is computed once and reused by every
/// Hessian-vector product.
pub struct Lagrangian<'a, P: Problem + ?Sized> {
    problem: &'a P,
    w: &'a Iterate,
    egrad: DMatrix<f64>,
}

impl<'a, P: Problem + ?Sized> Lagrangian<'a, P> {
    pub fn new(problem: &'a P, w: &'a Iterate) -> Self {
        assert_eq!(w.y.len(), problem.num_eq(), "equality multiplier length");
        assert_eq!(w.z.len(), problem.num_ineq(), "inequality multiplier length");
        assert_eq!(w.s.len(), problem.num_ineq(), "slack length");
        let mut egrad = problem.cost_egrad(&w.x);
        egrad += problem.ineq_egrad_combine(&w.x, &w.z);
        if problem.num_eq() > 0 {
            egrad += problem.eq_egrad_combine(&w.x, &w.y);
        }
        Lagrangian { problem, w, egrad }
    }

    /// Ambient gradient of the Lagrangian in `x`.
    pub fn egrad(&self) -> &DMatrix<f64> {
        &self.egrad
    }

    /// `grad_x L = grad f + H_x y + G_x z`.
    ///
    /// Projected twice: near a KKT point the gradient is many orders of
    /// magnitude smaller than the ambient gradient it comes from, and the
    /// normal rounding residue of a single projection would dominate pairings
    /// with large multiplier steps.
    pub fn gradx(&self) -> Tangent {
        let man = self.problem.manifold();
        man.reproject(&self.w.x, &man.egrad2rgrad(&self.w.x, &self.egrad))
    }

    /// `Hess_x L[Δx] = Hess f[Δx] + Σ y_i Hess h_i[Δx] + Σ z_i Hess g_i[Δx]`,
    /// converted once from the summed ambient data.
    pub fn hessvec(&self, dx: &Tangent) -> Tangent {
        let x = &self.w.x;
        let dir = dx.ambient(x);
        let mut ehess = self.problem.cost_ehess(x, &dir);
        ehess += self.problem.ineq_ehess_combine(x, &self.w.z, &dir);
        if self.problem.num_eq() > 0 {
            ehess += self.problem.eq_ehess_combine(x, &self.w.y, &dir);
        }
        self.problem.manifold().ehess2rhess(x, &self.egrad, &ehess, dx)
    }
}

/// `grad_x L(w)`.
pub fn lagrangian_gradx<P: Problem + ?Sized>(problem: &P, w: &Iterate) -> Tangent {
    Lagrangian::new(problem, w).gradx()
}

/// `Hess_x L(w)[Δx]`.
pub fn lagrangian_hessvec<P: Problem + ?Sized>(problem: &P, w: &Iterate, dx: &Tangent) -> Tangent {
    Lagrangian::new(problem, w).hessvec(dx)
}
