//! Riemannian primal-dual interior point methods on embedded matrix manifolds.
//!
//! The crate solves constrained problems
//!
//! ```text
//! min f(x)  s.t.  h(x) = 0,  g(x) ≤ 0,  x ∈ M
//! ```
//!
//! where `M` is a Euclidean, Stiefel, oblique or fixed-rank matrix manifold.
//! Newton steps for the slack-form KKT vector field are computed matrix-free:
//! the Newton equation is condensed to a symmetric system on
//! `T_xM × R^l` and solved with the conjugate residual method directly on the
//! tangent space.
//!
//! The crate is `no_std` (it needs `alloc`). Wall-clock limits are supplied
//! through the [`Clock`] trait by the caller.

#![no_std]

extern crate alloc;

pub mod clock;
pub mod diagnostics;
pub mod error;
pub mod global;
pub mod instances;
pub mod kkt;
pub mod linalg;
pub mod linsolve;
pub mod local;
pub mod manifolds;
pub mod problem;
pub mod report;
pub mod space;

pub use clock::{Clock, NoClock};
pub use error::{Error, Result};
pub use manifolds::{Iterate, Manifold, Point, Step, Tangent};
pub use problem::Problem;
pub use report::{IterationRecord, SolveReport, Status};
pub use space::{InnerProductSpace, LinearOperator};
