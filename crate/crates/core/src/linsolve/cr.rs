use crate::space::{InnerProductSpace, LinearOperator};

/// Why a conjugate residual run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    Converged,
    MaxIter,
    Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrReport {
    pub iterations: usize,
    /// `‖r_n‖ / ‖rhs‖` of the returned iterate (recurrence residual).
    pub relative_residual: f64,
    pub status: CrStatus,
}

/// Conjugate residual method for a self-adjoint (possibly indefinite)
/// operator, run directly in the space `V`.
///
/// Starts from zero and stops once `‖r_n‖/‖rhs‖ ≤ tol` or after `max_iter`
/// iterations. Each iteration applies the operator exactly once; `A p_{n+1}`
/// comes from the recurrence `A r_{n+1} + β_n A p_n`. On breakdown
/// (`⟨r_n, A r_n⟩` or `‖A p_n‖²` vanishing) the iterate with the smallest
/// residual seen so far is returned.
pub fn cr_solve<V, A>(op: &A, rhs: &V, tol: f64, max_iter: usize) -> (V, CrReport)
where
    V: InnerProductSpace,
    A: LinearOperator<V> + ?Sized,
{
    let mut x = rhs.zeroed();
    let b_norm = rhs.norm();
    if b_norm == 0.0 {
        return (
            x,
            CrReport {
                iterations: 0,
                relative_residual: 0.0,
                status: CrStatus::Converged,
            },
        );
    }

    let mut r = rhs.clone();
    let mut ar = op.apply(&r);
    let mut p = r.clone();
    let mut ap = ar.clone();
    let mut rar = r.inner(&ar);
    let mut rel = 1.0;
    let mut best: Option<(V, f64)> = None;

    let mut n = 0;
    let status = loop {
        if rel <= tol {
            break CrStatus::Converged;
        }
        if n >= max_iter {
            break CrStatus::MaxIter;
        }
        let r_sq = r.inner(&r);
        let apap = ap.inner(&ap);
        if rar.abs() <= 1e-300 * r_sq || apap == 0.0 || !rar.is_finite() {
            break CrStatus::Breakdown;
        }
        let alpha = rar / apap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        ar = op.apply(&r);
        let rar_next = r.inner(&ar);
        let beta = rar_next / rar;
        p.scale(beta);
        p.axpy(1.0, &r);
        ap.scale(beta);
        ap.axpy(1.0, &ar);
        rar = rar_next;
        n += 1;

        rel = r.norm() / b_norm;
        if best.as_ref().is_none_or(|(_, b)| rel < *b) {
            best = Some((x.clone(), rel));
        }
    };

    if status == CrStatus::Breakdown {
        if let Some((bx, brel)) = best {
            if brel < rel {
                x = bx;
                rel = brel;
            }
        }
    }
    (
        x,
        CrReport {
            iterations: n,
            relative_residual: rel,
            status,
        },
    )
}
