use nalgebra::DVector;

use super::{Manifold, Point, Tangent};
use crate::error::Result;
use crate::space::InnerProductSpace;

/// Primal-dual iterate `w = (x, y, z, s)` on `N = M × R^l × R^m × R^m`:
/// the manifold point, equality multipliers, inequality multipliers and
/// slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Point,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub s: DVector<f64>,
}

/// Element `Δw = (Δx, Δy, Δz, Δs)` of `T_wN`, with the product metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub dx: Tangent,
    pub dy: DVector<f64>,
    pub dz: DVector<f64>,
    pub ds: DVector<f64>,
}

impl Iterate {
    /// Product retraction `(R_x(αΔx), y + αΔy, z + αΔz, s + αΔs)`.
    pub fn retract(&self, manifold: &Manifold, step: &Step, alpha: f64) -> Result<Iterate> {
        let x = if alpha == 0.0 {
            self.x.clone()
        } else {
            manifold.retract(&self.x, &step.dx.clone().scaled(alpha))?
        };
        Ok(Iterate {
            x,
            y: &self.y + &step.dy * alpha,
            z: &self.z + &step.dz * alpha,
            s: &self.s + &step.ds * alpha,
        })
    }

    /// Zero step in `T_wN`.
    pub fn zero_step(&self, manifold: &Manifold) -> Step {
        Step {
            dx: manifold.zero_tangent(&self.x),
            dy: DVector::zeros(self.y.len()),
            dz: DVector::zeros(self.z.len()),
            ds: DVector::zeros(self.s.len()),
        }
    }
}

/// Free-function form of [`Iterate::retract`].
pub fn product_retract(manifold: &Manifold, w: &Iterate, step: &Step, alpha: f64) -> Result<Iterate> {
    w.retract(manifold, step, alpha)
}

impl InnerProductSpace for Step {
    fn inner(&self, o: &Self) -> f64 {
        self.dx.inner(&o.dx) + self.dy.dot(&o.dy) + self.dz.dot(&o.dz) + self.ds.dot(&o.ds)
    }

    fn axpy(&mut self, alpha: f64, o: &Self) {
        self.dx.axpy(alpha, &o.dx);
        self.dy.axpy(alpha, &o.dy, 1.0);
        self.dz.axpy(alpha, &o.dz, 1.0);
        self.ds.axpy(alpha, &o.ds, 1.0);
    }

    fn scale(&mut self, alpha: f64) {
        self.dx.scale(alpha);
        self.dy *= alpha;
        self.dz *= alpha;
        self.ds *= alpha;
    }

    fn zeroed(&self) -> Self {
        Step {
            dx: self.dx.zeroed(),
            dy: self.dy.zeroed(),
            dz: self.dz.zeroed(),
            ds: self.ds.zeroed(),
        }
    }
}
