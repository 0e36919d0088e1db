//! Dense basis representation of the Newton operators.
//!
//! An orthonormal basis `{u_i}` of `T_xM` (extended by standard bases of the
//! vector factors) turns the condensed operator and `∇F(w)` into ordinary
//! matrices with entries `⟨T u_j, u_i⟩`. This is far too expensive to use
//! inside the solver and exists as an independent reference for the
//! matrix-free path and for spectral diagnostics.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{check_interior, condensed_rhs_from, recover_dz_ds, CondensedOperator, CondensedVec};
use crate::error::{Error, Result};
use crate::kkt::{kkt_field, CovariantDerivative};
use crate::manifolds::{Iterate, Point, Step, Tangent};
use crate::problem::Problem;
use crate::space::LinearOperator;

/// An orthonormal basis of `T_xM` with fast coordinate maps.
pub struct TangentBasis {
    template: Tangent,
    /// Flat basis vectors as columns.
    columns: DMatrix<f64>,
}

impl TangentBasis {
    pub fn new<R: Rng + ?Sized>(problem: &(impl Problem + ?Sized), x: &Point, rng: &mut R) -> Result<Self> {
        let man = problem.manifold();
        let vectors = man.orthonormal_basis(x, rng)?;
        let template = man.zero_tangent(x);
        let mut columns = DMatrix::zeros(template.flat_len(), vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            columns.set_column(j, &v.flat());
        }
        Ok(TangentBasis { template, columns })
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    /// Coordinates `(⟨ξ, u_i⟩)_i`.
    pub fn coords(&self, xi: &Tangent) -> DVector<f64> {
        self.columns.tr_mul(&xi.flat())
    }

    /// `Σ c_i u_i`.
    pub fn combine(&self, c: &DVector<f64>) -> Tangent {
        self.template.with_flat(&(&self.columns * c))
    }

    pub fn vector(&self, i: usize) -> Tangent {
        self.template.with_flat(&self.columns.column(i).into_owned())
    }

    /// Coordinates of `Δw ∈ T_wN` in the basis `{u_i} ∪ e_y ∪ e_z ∪ e_s`.
    pub fn step_coords(&self, v: &Step) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.dim() + v.dy.len() + v.dz.len() + v.ds.len());
        out.extend(self.coords(&v.dx).iter());
        out.extend(v.dy.iter());
        out.extend(v.dz.iter());
        out.extend(v.ds.iter());
        DVector::from_vec(out)
    }

    /// Inverse of [`TangentBasis::step_coords`].
    pub fn step_from_coords(&self, c: &DVector<f64>, l: usize, m: usize) -> Step {
        let d = self.dim();
        assert_eq!(c.len(), d + l + 2 * m);
        Step {
            dx: self.combine(&c.rows(0, d).into_owned()),
            dy: c.rows(d, l).into_owned(),
            dz: c.rows(d + l, m).into_owned(),
            ds: c.rows(d + l + m, m).into_owned(),
        }
    }

    pub fn condensed_coords(&self, v: &CondensedVec) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.dim() + v.dy.len());
        out.extend(self.coords(&v.dx).iter());
        out.extend(v.dy.iter());
        DVector::from_vec(out)
    }

    pub fn condensed_from_coords(&self, c: &DVector<f64>) -> CondensedVec {
        let d = self.dim();
        CondensedVec {
            dx: self.combine(&c.rows(0, d).into_owned()),
            dy: c.rows(d, c.len() - d).into_owned(),
        }
    }
}

/// Matrix of the condensed operator, `[M]_ij = ⟨T e_j, e_i⟩`, size `d + l`.
pub fn condensed_matrix<P: Problem + ?Sized>(problem: &P, w: &Iterate, basis: &TangentBasis) -> Result<DMatrix<f64>> {
    let op = CondensedOperator::new(problem, w)?;
    let (d, l) = (basis.dim(), problem.num_eq());
    let n = d + l;
    let mut mat = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let col = basis.condensed_coords(&op.apply(&basis.condensed_from_coords(&e)));
        mat.set_column(j, &col);
    }
    Ok(mat)
}

/// Matrix of `∇F(w)` on `T_wN`, size `d + l + 2m`.
pub fn nabla_f_matrix<P: Problem + ?Sized>(problem: &P, w: &Iterate, basis: &TangentBasis) -> DMatrix<f64> {
    let cov = CovariantDerivative::new(problem, w);
    let (l, m) = (problem.num_eq(), problem.num_ineq());
    let n = basis.dim() + l + 2 * m;
    let mut mat = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let col = basis.step_coords(&cov.apply(&basis.step_from_coords(&e, l, m)));
        mat.set_column(j, &col);
    }
    mat
}

/// Ratio of extreme singular values.
pub fn condition_number(mat: &DMatrix<f64>) -> f64 {
    let s = crate::linalg::singular_values(mat);
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Newton direction computed through the dense representation.
pub struct DenseSolution {
    pub step: Step,
    /// Matrix of the condensed operator in the chosen basis.
    pub matrix: DMatrix<f64>,
    /// Coordinates of `(c, q)`.
    pub rhs: DVector<f64>,
    pub basis: TangentBasis,
}

/// Solves the perturbed Newton equation by forming the condensed matrix in an
/// orthonormal basis, solving densely, and mapping back to tangent vectors.
pub fn dense_oracle<P, R>(problem: &P, w: &Iterate, mu: f64, rng: &mut R) -> Result<DenseSolution>
where
    P: Problem + ?Sized,
    R: Rng + ?Sized,
{
    check_interior(w)?;
    let basis = TangentBasis::new(problem, &w.x, rng)?;
    let matrix = condensed_matrix(problem, w, &basis)?;
    let f = kkt_field(problem, w);
    let rhs_vec = condensed_rhs_from(problem, w, &f, mu)?;
    let rhs = basis.condensed_coords(&rhs_vec);
    let singular = || Error::Singular {
        condition: condition_number(&matrix),
    };
    let sol = matrix.clone().lu().solve(&rhs).ok_or_else(singular)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let cv = basis.condensed_from_coords(&sol);
    let (dz, ds) = recover_dz_ds(problem, w, &f, mu, &cv.dx)?;
    Ok(DenseSolution {
        step: Step {
            dx: cv.dx,
            dy: cv.dy,
            dz,
            ds,
        },
        matrix,
        rhs,
        basis,
    })
}
