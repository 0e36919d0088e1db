//! Embedded matrix manifolds and the product manifold of primal-dual iterates.
//!
//! Every manifold here is an embedded submanifold of a matrix space and
//! inherits the ambient trace inner product `⟨A, B⟩ = trace(AᵀB)`. Riemannian
//! gradients and Hessians are obtained from ambient (Euclidean) derivatives by
//! orthogonal projection onto the tangent space plus a Weingarten correction.
//!
//! | manifold     | tangent space at `X`                     | retraction           |
//! |--------------|------------------------------------------|----------------------|
//! | Euclidean    | all of `R^{m×n}`                         | `X + ξ`              |
//! | Stiefel      | `Xᵀξ` skew-symmetric                     | Q factor of `X + ξ`  |
//! | Oblique      | `diag(Xᵀξ) = 0`                          | column normalization |
//! | fixed rank r | `UMVᵀ + U_pVᵀ + UV_pᵀ`                   | rank-r truncated SVD |

mod product;
mod tangent;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub use product::{product_retract, Iterate, Step};
pub use tangent::{LowRankTangent, Tangent};

use crate::error::{Error, Result};
use crate::linalg;
use crate::space::InnerProductSpace;

/// Thin SVD factors `X = UΣVᵀ` of a fixed-rank point.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// A point on a [`Manifold`], held in ambient coordinates. Fixed-rank points
/// additionally carry their SVD factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    x: DMatrix<f64>,
    factors: Option<LowRankFactors>,
}

impl Point {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn factors(&self) -> Option<&LowRankFactors> {
        self.factors.as_ref()
    }

    fn dense(x: DMatrix<f64>) -> Point {
        Point { x, factors: None }
    }

    fn low_rank(u: DMatrix<f64>, sigma: DVector<f64>, v: DMatrix<f64>) -> Point {
        let x = &u * DMatrix::from_diagonal(&sigma) * v.transpose();
        Point {
            x,
            factors: Some(LowRankFactors { u, sigma, v }),
        }
    }
}

/// The manifolds supported by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// `R^{rows×cols}`.
    Euclidean { rows: usize, cols: usize },
    /// `St(n, k) = {X ∈ R^{n×k} : XᵀX = I_k}`.
    Stiefel { n: usize, k: usize },
    /// `Ob(n, k) = {X ∈ R^{n×k} : (XᵀX)_ii = 1}`.
    Oblique { n: usize, k: usize },
    /// `{X ∈ R^{m×n} : rank X = r}`.
    FixedRank { m: usize, n: usize, r: usize },
}

impl Manifold {
    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match *self {
            Manifold::Euclidean { rows, cols } => rows * cols,
            Manifold::Stiefel { n, k } => n * k - k * (k + 1) / 2,
            Manifold::Oblique { n, k } => k * (n - 1),
            Manifold::FixedRank { m, n, r } => (m + n - r) * r,
        }
    }

    pub fn ambient_shape(&self) -> (usize, usize) {
        match *self {
            Manifold::Euclidean { rows, cols } => (rows, cols),
            Manifold::Stiefel { n, k } | Manifold::Oblique { n, k } => (n, k),
            Manifold::FixedRank { m, n, .. } => (m, n),
        }
    }

    fn check_shape(&self, a: &DMatrix<f64>) {
        assert_eq!(
            a.shape(),
            self.ambient_shape(),
            "ambient matrix has the wrong shape for {self:?}"
        );
    }

    /// Wraps an ambient matrix that already lies on the manifold.
    pub fn point(&self, x: DMatrix<f64>) -> Result<Point> {
        self.check_shape(&x);
        match *self {
            Manifold::Euclidean { .. } => Ok(Point::dense(x)),
            Manifold::Stiefel { .. } | Manifold::Oblique { .. } => {
                let p = Point::dense(x);
                let res = self.feasibility(&p);
                if res > 1e-10 {
                    return Err(Error::NotOnManifold(res));
                }
                Ok(p)
            }
            Manifold::FixedRank { r, .. } => {
                let (u, sigma, v) = linalg::truncated_svd(&x, r)?;
                let p = Point::low_rank(u, sigma, v);
                let res = (&p.x - &x).norm() / x.norm().max(1.0);
                if res > 1e-10 {
                    return Err(Error::NotOnManifold(res));
                }
                Ok(p)
            }
        }
    }

    /// Builds a fixed-rank point from its factors. `u` and `v` must have
    /// orthonormal columns and `sigma` must be positive.
    pub fn point_from_factors(
        &self,
        u: DMatrix<f64>,
        sigma: DVector<f64>,
        v: DMatrix<f64>,
    ) -> Result<Point> {
        let Manifold::FixedRank { m, n, r } = *self else {
            panic!("factored points only exist on the fixed-rank manifold");
        };
        assert_eq!(u.shape(), (m, r));
        assert_eq!(v.shape(), (n, r));
        assert_eq!(sigma.len(), r);
        let p = Point::low_rank(u, sigma, v);
        let res = self.feasibility(&p);
        if res > 1e-10 {
            return Err(Error::NotOnManifold(res));
        }
        Ok(p)
    }

    /// Metric projection of an arbitrary ambient matrix onto the manifold:
    /// the polar factor (Stiefel), column normalization (oblique) or rank-r
    /// truncation (fixed rank).
    pub fn nearest_point(&self, a: &DMatrix<f64>) -> Result<Point> {
        self.check_shape(a);
        Ok(match *self {
            Manifold::Euclidean { .. } => Point::dense(a.clone()),
            Manifold::Stiefel { .. } => Point::dense(linalg::polar_factor(a)),
            Manifold::Oblique { .. } => {
                let mut x = a.clone();
                linalg::normalize_columns(&mut x);
                Point::dense(x)
            }
            Manifold::FixedRank { r, .. } => {
                let (u, s, v) = linalg::truncated_svd(a, r)?;
                Point::low_rank(u, s, v)
            }
        })
    }

    /// Largest violation of the defining equations at `x` (zero on the
    /// manifold up to rounding).
    pub fn feasibility(&self, x: &Point) -> f64 {
        let a = &x.x;
        match *self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Stiefel { k, .. } => {
                (a.transpose() * a - DMatrix::identity(k, k)).norm()
            }
            Manifold::Oblique { .. } => a
                .column_iter()
                .map(|c| (c.norm_squared() - 1.0).abs())
                .fold(0.0, f64::max),
            Manifold::FixedRank { r, .. } => {
                let f = x.factors().expect("fixed-rank point without factors");
                let eye = DMatrix::<f64>::identity(r, r);
                let du = (f.u.transpose() * &f.u - &eye).norm();
                let dv = (f.v.transpose() * &f.v - &eye).norm();
                let neg = f.sigma.iter().any(|&s| s <= 0.0);
                if neg {
                    f64::INFINITY
                } else {
                    du.max(dv)
                }
            }
        }
    }

    /// Riemannian metric: the ambient trace inner product.
    pub fn inner(&self, _x: &Point, xi: &Tangent, eta: &Tangent) -> f64 {
        xi.inner(eta)
    }

    pub fn norm(&self, x: &Point, xi: &Tangent) -> f64 {
        libm::sqrt(self.inner(x, xi, xi))
    }

    /// Orthogonal projection of an ambient matrix onto `T_xM`.
    pub fn proj(&self, x: &Point, u: &DMatrix<f64>) -> Tangent {
        self.check_shape(u);
        let a = &x.x;
        match *self {
            Manifold::Euclidean { .. } => Tangent::Ambient(u.clone()),
            Manifold::Stiefel { .. } => {
                Tangent::Ambient(u - a * linalg::sym(&(a.transpose() * u)))
            }
            Manifold::Oblique { .. } => {
                let mut out = u.clone();
                for (j, mut col) in out.column_iter_mut().enumerate() {
                    let xj = a.column(j);
                    let c = xj.dot(&col);
                    col.axpy(-c, &xj, 1.0);
                }
                Tangent::Ambient(out)
            }
            Manifold::FixedRank { .. } => {
                let f = x.factors().expect("fixed-rank point without factors");
                let zv = u * &f.v;
                let ztu = u.transpose() * &f.u;
                let m = f.u.transpose() * &zv;
                let up = zv - &f.u * &m;
                let vp = ztu - &f.v * m.transpose();
                Tangent::LowRank(LowRankTangent { m, up, vp })
            }
        }
    }

    /// Projects an already-structured tangent vector again. Used to scrub
    /// rounding drift and to test tangency.
    pub fn reproject(&self, x: &Point, xi: &Tangent) -> Tangent {
        match (self, xi) {
            (Manifold::FixedRank { .. }, Tangent::LowRank(t)) => {
                let f = x.factors().expect("fixed-rank point without factors");
                let up = &t.up - &f.u * (f.u.transpose() * &t.up);
                let vp = &t.vp - &f.v * (f.v.transpose() * &t.vp);
                Tangent::LowRank(LowRankTangent {
                    m: t.m.clone(),
                    up,
                    vp,
                })
            }
            _ => self.proj(x, &xi.ambient(x)),
        }
    }

    /// `‖ξ − proj(ξ)‖`, zero for tangent vectors.
    pub fn tangency_residual(&self, x: &Point, xi: &Tangent) -> f64 {
        let amb = xi.ambient(x);
        let p = self.proj(x, &amb).ambient(x);
        (amb - p).norm()
    }

    /// Retraction `R_x(ξ)`.
    pub fn retract(&self, x: &Point, xi: &Tangent) -> Result<Point> {
        if let (Manifold::FixedRank { r, .. }, Tangent::LowRank(t)) = (self, xi) {
            return retract_low_rank(x, t, *r);
        }
        let target = &x.x + xi.ambient(x);
        match *self {
            Manifold::Euclidean { .. } => Ok(Point::dense(target)),
            Manifold::Stiefel { .. } => Ok(Point::dense(linalg::qf_positive(&target))),
            Manifold::Oblique { .. } => {
                let mut y = target;
                linalg::normalize_columns(&mut y);
                Ok(Point::dense(y))
            }
            Manifold::FixedRank { r, .. } => {
                let (u, s, v) = linalg::truncated_svd(&target, r)?;
                Ok(Point::low_rank(u, s, v))
            }
        }
    }

    /// Riemannian gradient from the Euclidean gradient of any smooth
    /// extension.
    pub fn egrad2rgrad(&self, x: &Point, egrad: &DMatrix<f64>) -> Tangent {
        self.proj(x, egrad)
    }

    /// Riemannian Hessian-vector product from ambient data: `egrad` is the
    /// Euclidean gradient at `x`, `ehess` the Euclidean Hessian applied to the
    /// ambient form of `xi`.
    pub fn ehess2rhess(
        &self,
        x: &Point,
        egrad: &DMatrix<f64>,
        ehess: &DMatrix<f64>,
        xi: &Tangent,
    ) -> Tangent {
        debug_assert!(
            self.tangency_residual(x, xi) <= 1e-8 * (1.0 + self.norm(x, xi)),
            "ehess2rhess called with a non-tangent direction"
        );
        let a = &x.x;
        match *self {
            Manifold::Euclidean { .. } => Tangent::Ambient(ehess.clone()),
            Manifold::Stiefel { .. } => {
                let Tangent::Ambient(xi) = xi else {
                    unreachable!()
                };
                let w = ehess - xi * linalg::sym(&(a.transpose() * egrad));
                self.proj(x, &w)
            }
            Manifold::Oblique { .. } => {
                let Tangent::Ambient(xi) = xi else {
                    unreachable!()
                };
                let Tangent::Ambient(mut out) = self.proj(x, ehess) else {
                    unreachable!()
                };
                for j in 0..out.ncols() {
                    let c = a.column(j).dot(&egrad.column(j));
                    out.column_mut(j).axpy(-c, &xi.column(j), 1.0);
                }
                Tangent::Ambient(out)
            }
            Manifold::FixedRank { .. } => {
                let Tangent::LowRank(t) = xi else {
                    unreachable!()
                };
                let f = x.factors().expect("fixed-rank point without factors");
                let Tangent::LowRank(mut out) = self.proj(x, ehess) else {
                    unreachable!()
                };
                let mut gvp = egrad * &t.vp;
                let mut gtup = egrad.transpose() * &t.up;
                for (j, &s) in f.sigma.iter().enumerate() {
                    gvp.column_mut(j).scale_mut(1.0 / s);
                    gtup.column_mut(j).scale_mut(1.0 / s);
                }
                out.up += &gvp - &f.u * (f.u.transpose() * &gvp);
                out.vp += &gtup - &f.v * (f.v.transpose() * &gtup);
                Tangent::LowRank(out)
            }
        }
    }

    pub fn zero_tangent(&self, _x: &Point) -> Tangent {
        match *self {
            Manifold::FixedRank { m, n, r } => {
                Tangent::LowRank(LowRankTangent {
                    m: DMatrix::zeros(r, r),
                    up: DMatrix::zeros(m, r),
                    vp: DMatrix::zeros(n, r),
                })
            }
            _ => {
                let (rows, cols) = self.ambient_shape();
                Tangent::Ambient(DMatrix::zeros(rows, cols))
            }
        }
    }

    fn gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let (rows, cols) = self.ambient_shape();
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    /// Random point obtained from a Gaussian ambient matrix.
    pub fn rand_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let g = self.gaussian(rng);
        match *self {
            Manifold::Euclidean { .. } => Point::dense(g),
            Manifold::Stiefel { .. } => Point::dense(linalg::qf_positive(&g)),
            Manifold::Oblique { .. } => {
                let mut x = g;
                linalg::normalize_columns(&mut x);
                Point::dense(x)
            }
            Manifold::FixedRank { m, n, r } => {
                // Orthonormal factors and a well-separated positive spectrum.
                let gu = DMatrix::from_fn(m, r, |_, _| rng.sample(StandardNormal));
                let gv = DMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal));
                let sigma = DVector::from_fn(r, |i, _| {
                    (r - i) as f64 + rng.random::<f64>() * 0.5
                });
                Point::low_rank(linalg::qf_positive(&gu), sigma, linalg::qf_positive(&gv))
            }
        }
    }

    /// Unit-norm random tangent vector.
    pub fn rand_tangent<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Tangent {
        let mut t = self.proj(x, &self.gaussian(rng));
        let n = t.norm();
        t.scale(1.0 / n);
        t
    }

    /// Orthonormal basis of `T_xM` built by modified Gram-Schmidt (with one
    /// re-orthogonalization pass) from projected Gaussian vectors.
    pub fn orthonormal_basis<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Result<Vec<Tangent>> {
        const ATTEMPTS: usize = 5;
        let d = self.dim();
        'attempt: for _ in 0..ATTEMPTS {
            let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
            let template = self.zero_tangent(x);
            for _ in 0..d {
                let mut v = self.rand_tangent(x, rng).flat();
                for _pass in 0..2 {
                    for q in &basis {
                        let c = q.dot(&v);
                        v.axpy(-c, q, 1.0);
                    }
                }
                let n = v.norm();
                if n < 1e-12 {
                    continue 'attempt;
                }
                basis.push(v / n);
            }
            return Ok(basis.iter().map(|v| template.with_flat(v)).collect());
        }
        Err(Error::BasisDegenerate {
            dim: d,
            attempts: ATTEMPTS,
        })
    }
}

/// Truncated SVD of `X + ξ` computed from the factored form
/// `[U U_p] [[Σ+M, I], [I, 0]] [V V_p]ᵀ`, so only a `2r×2r` core is
/// decomposed. Small singular directions stay accurate when `σ_r ≪ σ_1`,
/// which a dense SVD of `X + ξ` cannot guarantee.
fn retract_low_rank(x: &Point, t: &LowRankTangent, r: usize) -> Result<Point> {
    let f = x.factors().expect("fixed-rank point without factors");
    let (qu, ru) = linalg::qr_positive(&concat_columns(&f.u, &t.up));
    let (qv, rv) = linalg::qr_positive(&concat_columns(&f.v, &t.vp));
    let mut middle = DMatrix::zeros(2 * r, 2 * r);
    let mut top_left = t.m.clone();
    for i in 0..r {
        top_left[(i, i)] += f.sigma[i];
        middle[(i, r + i)] = 1.0;
        middle[(r + i, i)] = 1.0;
    }
    middle.view_mut((0, 0), (r, r)).copy_from(&top_left);
    let core = ru * middle * rv.transpose();
    let (cu, sigma, cv) = linalg::truncate(linalg::svd(&core), r)?;
    Ok(Point::low_rank(qu * cu, sigma, qv * cv))
}

fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    c.columns_mut(0, a.ncols()).copy_from(a);
    c.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    c
}

#[cfg(test)]
mod tests;
