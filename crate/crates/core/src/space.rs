//! Abstract inner-product spaces, the carrier of the matrix-free solvers.

use nalgebra::DVector;

/// A finite-dimensional real inner-product space whose elements are owned
/// values. Tangent spaces, `R^n` and their products all implement this, so
/// Krylov iterations run on them without a coordinate representation.
pub trait InnerProductSpace: Clone {
    fn inner(&self, other: &Self) -> f64;

    /// `self += alpha * x`.
    fn axpy(&mut self, alpha: f64, x: &Self);

    fn scale(&mut self, alpha: f64);

    /// Zero element of the same space as `self`.
    fn zeroed(&self) -> Self;

    fn norm(&self) -> f64 {
        libm::sqrt(self.inner(self).max(0.0))
    }
}

/// A linear map of a space into itself, known only through its action.
pub trait LinearOperator<V> {
    fn apply(&self, v: &V) -> V;
}

impl<V, F> LinearOperator<V> for F
where
    F: Fn(&V) -> V,
{
    fn apply(&self, v: &V) -> V {
        self(v)
    }
}

impl InnerProductSpace for DVector<f64> {
    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        nalgebra::Matrix::axpy(self, alpha, x, 1.0);
    }

    fn scale(&mut self, alpha: f64) {
        *self *= alpha;
    }

    fn zeroed(&self) -> Self {
        DVector::zeros(self.len())
    }
}
