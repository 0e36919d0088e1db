//! Finite-difference oracles for Riemannian derivatives.
//!
//! A gradient is checked through the remainder
//! `|f(c(t)) − f(x) − t⟨grad f, ξ⟩| = O(t²)` and a Hessian through
//! `|f(c(t)) − f(x) − t⟨grad f, ξ⟩ − t²/2 ⟨Hess f[ξ], ξ⟩| = O(t³)`, where `c`
//! is a curve with `c(0) = x`, `c'(0) = ξ`. The second check needs a curve
//! with zero initial acceleration in the normal sense; the metric projection
//! `t ↦ P_M(X + tξ)` is such a curve on every manifold here, while the
//! Stiefel QR retraction is not.
//!
//! Slopes are least-squares fits of `log e(t)` against `log t` over
//! `t ∈ [1e-5, 1e-2]`, dropping remainders that sit at the rounding floor of
//! the function values (they carry no information about the order). The fit
//! uses the smallest informative steps only, where the next-order term of
//! the remainder has died out.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::manifolds::{Manifold, Point, Tangent};
use crate::space::InnerProductSpace;

/// Log-spaced step sizes from `1e-2` down to `1e-5`, four per decade.
pub fn step_sizes() -> Vec<f64> {
    (0..=12).map(|i| libm::pow(10.0, -2.0 - i as f64 / 4.0)).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (libm::log(x), libm::log(y));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Outcome of one Taylor-remainder test.
#[derive(Debug, Clone)]
pub struct TaylorCheck {
    /// Fitted log-log slope over the informative step sizes.
    pub slope: f64,
    /// `(t, remainder)` pairs above the rounding floor, largest `t` first.
    pub points: Vec<(f64, f64)>,
}

/// Number of smallest informative steps entering the slope fit.
pub const FIT_POINTS: usize = 4;

/// Informative steps needed before a direction is considered conclusive.
pub const CONCLUSIVE_POINTS: usize = 6;

impl TaylorCheck {
    fn fit(samples: Vec<(f64, f64)>, floor: f64) -> TaylorCheck {
        let points: Vec<_> = samples.into_iter().filter(|&(_, e)| e > floor).collect();
        let slope = if points.len() >= 4 {
            loglog_slope(&points[points.len().saturating_sub(FIT_POINTS)..])
        } else {
            f64::NAN
        };
        TaylorCheck { slope, points }
    }

    /// At least [`CONCLUSIVE_POINTS`] remainders above the rounding floor. A
    /// direction along which the remainder coefficient is accidentally tiny
    /// gives too few to fit reliably.
    pub fn conclusive(&self) -> bool {
        self.points.len() >= CONCLUSIVE_POINTS
    }

    /// Slope within `[expected - 0.1, expected + 0.1]` with enough points.
    pub fn passes(&self, expected: f64) -> bool {
        self.points.len() >= 4 && (self.slope - expected).abs() <= 0.1
    }
}

fn rounding_floor(scale: f64) -> f64 {
    1e3 * f64::EPSILON * scale.abs().max(1.0)
}

/// Gradient remainder along the retraction curve `t ↦ R_x(tξ)`.
pub fn gradient_check(
    manifold: &Manifold,
    x: &Point,
    xi: &Tangent,
    value: &dyn Fn(&Point) -> f64,
    rgrad: &Tangent,
) -> Result<TaylorCheck> {
    let f0 = value(x);
    let slope0 = rgrad.inner(xi);
    let mut samples = Vec::new();
    for t in step_sizes() {
        let y = manifold.retract(x, &xi.clone().scaled(t))?;
        samples.push((t, (value(&y) - f0 - t * slope0).abs()));
    }
    Ok(TaylorCheck::fit(samples, rounding_floor(f0)))
}

/// Second-order model remainder along the metric-projection curve.
pub fn hessian_check(
    manifold: &Manifold,
    x: &Point,
    xi: &Tangent,
    value: &dyn Fn(&Point) -> f64,
    rgrad: &Tangent,
    rhess_xi: &Tangent,
) -> Result<TaylorCheck> {
    let f0 = value(x);
    let slope0 = rgrad.inner(xi);
    let curv = rhess_xi.inner(xi);
    let amb = xi.ambient(x);
    let mut samples = Vec::new();
    for t in step_sizes() {
        let target: DMatrix<f64> = x.matrix() + &amb * t;
        let y = manifold.nearest_point(&target)?;
        let model = f0 + t * slope0 + 0.5 * t * t * curv;
        samples.push((t, (value(&y) - model).abs()));
    }
    Ok(TaylorCheck::fit(samples, rounding_floor(f0)))
}
