use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::Point;
use crate::space::InnerProductSpace;

/// Tangent vector of the fixed-rank manifold at `X = UΣVᵀ`, stored as the
/// triple `(M, U_p, V_p)` with `UᵀU_p = 0`, `VᵀV_p = 0`. Its ambient form is
/// `UMVᵀ + U_pVᵀ + UV_pᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankTangent {
    pub m: DMatrix<f64>,
    pub up: DMatrix<f64>,
    pub vp: DMatrix<f64>,
}

/// Element of a tangent space `T_xM`.
///
/// The three pieces of a [`LowRankTangent`] are mutually orthogonal in the
/// ambient trace inner product, so the metric, norms and linear combinations
/// are computed on the factors directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Tangent {
    Ambient(DMatrix<f64>),
    LowRank(LowRankTangent),
}

impl Tangent {
    /// Materializes the tangent vector as an ambient matrix at `x`.
    pub fn ambient(&self, x: &Point) -> DMatrix<f64> {
        match self {
            Tangent::Ambient(a) => a.clone(),
            Tangent::LowRank(t) => {
                let f = x.factors().expect("low-rank tangent at a point without factors");
                let uv = &f.u * &t.m + &t.up;
                uv * f.v.transpose() + &f.u * t.vp.transpose()
            }
        }
    }

    /// Coordinates in an isometric flat layout: the ambient entries, or the
    /// concatenated `(M, U_p, V_p)` entries. Euclidean dot products of flat
    /// vectors equal the Riemannian inner product.
    pub fn flat(&self) -> DVector<f64> {
        match self {
            Tangent::Ambient(a) => DVector::from_column_slice(a.as_slice()),
            Tangent::LowRank(t) => {
                let mut v = Vec::with_capacity(t.m.len() + t.up.len() + t.vp.len());
                v.extend_from_slice(t.m.as_slice());
                v.extend_from_slice(t.up.as_slice());
                v.extend_from_slice(t.vp.as_slice());
                DVector::from_vec(v)
            }
        }
    }

    /// Inverse of [`Tangent::flat`], using `self` for the layout.
    pub fn with_flat(&self, v: &DVector<f64>) -> Tangent {
        let s = v.as_slice();
        match self {
            Tangent::Ambient(a) => {
                assert_eq!(s.len(), a.len(), "flat length mismatch");
                Tangent::Ambient(DMatrix::from_column_slice(a.nrows(), a.ncols(), s))
            }
            Tangent::LowRank(t) => {
                let (a, b) = (t.m.len(), t.m.len() + t.up.len());
                assert_eq!(s.len(), b + t.vp.len(), "flat length mismatch");
                Tangent::LowRank(LowRankTangent {
                    m: DMatrix::from_column_slice(t.m.nrows(), t.m.ncols(), &s[..a]),
                    up: DMatrix::from_column_slice(t.up.nrows(), t.up.ncols(), &s[a..b]),
                    vp: DMatrix::from_column_slice(t.vp.nrows(), t.vp.ncols(), &s[b..]),
                })
            }
        }
    }

    pub fn flat_len(&self) -> usize {
        match self {
            Tangent::Ambient(a) => a.len(),
            Tangent::LowRank(t) => t.m.len() + t.up.len() + t.vp.len(),
        }
    }

    pub fn scaled(mut self, alpha: f64) -> Tangent {
        self.scale(alpha);
        self
    }
}

impl InnerProductSpace for Tangent {
    fn inner(&self, other: &Self) -> f64 {
        match (self, other) {
            (Tangent::Ambient(a), Tangent::Ambient(b)) => {
                assert_eq!(a.shape(), b.shape(), "tangent shape mismatch");
                a.dot(b)
            }
            (Tangent::LowRank(a), Tangent::LowRank(b)) => {
                a.m.dot(&b.m) + a.up.dot(&b.up) + a.vp.dot(&b.vp)
            }
            _ => panic!("inner product of tangent vectors with different layouts"),
        }
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        match (self, x) {
            (Tangent::Ambient(a), Tangent::Ambient(b)) => crate::linalg::axpy(a, alpha, b),
            (Tangent::LowRank(a), Tangent::LowRank(b)) => {
                crate::linalg::axpy(&mut a.m, alpha, &b.m);
                crate::linalg::axpy(&mut a.up, alpha, &b.up);
                crate::linalg::axpy(&mut a.vp, alpha, &b.vp);
            }
            _ => panic!("axpy of tangent vectors with different layouts"),
        }
    }

    fn scale(&mut self, alpha: f64) {
        match self {
            Tangent::Ambient(a) => *a *= alpha,
            Tangent::LowRank(t) => {
                t.m *= alpha;
                t.up *= alpha;
                t.vp *= alpha;
            }
        }
    }

    fn zeroed(&self) -> Self {
        match self {
            Tangent::Ambient(a) => Tangent::Ambient(DMatrix::zeros(a.nrows(), a.ncols())),
            Tangent::LowRank(t) => Tangent::LowRank(LowRankTangent {
                m: DMatrix::zeros(t.m.nrows(), t.m.ncols()),
                up: DMatrix::zeros(t.up.nrows(), t.up.ncols()),
                vp: DMatrix::zeros(t.vp.nrows(), t.vp.ncols()),
            }),
        }
    }
}
