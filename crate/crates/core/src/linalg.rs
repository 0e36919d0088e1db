//! Small dense helpers shared by the manifold kernels.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `(a + aᵀ) / 2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Q factor of the thin QR decomposition with the diagonal of R made
/// nonnegative, so the factor is unique for full-rank input.
pub fn qf_positive(a: &DMatrix<f64>) -> DMatrix<f64> {
    qr_positive(a).0
}

pub fn normalize_columns(a: &mut DMatrix<f64>) {
    for mut col in a.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
}

/// Thin singular value decomposition `a = U diag(σ) Vᵀ` with `σ` sorted in
/// decreasing order; `U` is `m×k`, `V` is `n×k`, `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD.
///
/// Used instead of nalgebra's bidiagonal SVD, which loses accuracy on nearly
/// rank-deficient input such as `X + ξ` on the fixed-rank manifold. Columns
/// of `U` belonging to zero singular values are left at zero.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() < a.ncols() {
        let t = svd(&a.transpose());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    const MAX_SWEEPS: usize = 80;
    let (m, n) = a.shape();
    let mut g = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * m as f64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dot(&g.column(q));
                if gamma == 0.0 || gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_columns(&mut g, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut sigma = DVector::zeros(n);
    for (k, &j) in order.iter().enumerate() {
        sigma[k] = norms[j];
        if norms[j] > 0.0 {
            u.set_column(k, &(g.column(j) / norms[j]));
        }
        vs.set_column(k, &v.column(j));
    }
    Svd { u, sigma, v: vs }
}

fn rotate_columns(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..a.nrows() {
        let (x, y) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = c * x - s * y;
        a[(i, q)] = s * x + c * y;
    }
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    svd(a).sigma
}

/// Polar factor `UVᵀ` of `a = UΣVᵀ`: the nearest matrix with orthonormal
/// columns in Frobenius norm.
pub fn polar_factor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = svd(a);
    d.u * d.v.transpose()
}

/// Rank-`r` truncation `(U, σ, V)` of `a`, sorted by decreasing singular value.
///
/// Fails when the `r`-th singular value vanishes or is tied with the next one,
/// since the truncation is then not unique (or not of rank `r`).
pub fn truncated_svd(
    a: &DMatrix<f64>,
    r: usize,
) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    truncate(svd(a), r)
}

/// Keeps the leading `r` triplets of `d`, with the checks of [`truncated_svd`].
pub fn truncate(d: Svd, r: usize) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let s = &d.sigma;
    let sigma_r = s[r - 1];
    let sigma_next = if s.len() > r { s[r] } else { 0.0 };
    let scale = if s[0] > 1.0 { s[0] } else { 1.0 };
    if sigma_r <= f64::MIN_POSITIVE || sigma_r - sigma_next <= 1e-12 * scale {
        return Err(Error::RankDrop {
            rank: r,
            sigma_r,
            sigma_next,
        });
    }
    Ok((
        d.u.columns(0, r).into_owned(),
        s.rows(0, r).into_owned(),
        d.v.columns(0, r).into_owned(),
    ))
}

/// Thin QR `a = QR` with the diagonal of `R` made nonnegative.
pub fn qr_positive(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// `y += alpha·x` for matrices of equal shape.
pub fn axpy(y: &mut DMatrix<f64>, alpha: f64, x: &DMatrix<f64>) {
    y.zip_apply(x, |a, b| *a += alpha * b);
}

/// Column-major copy of a matrix as a vector.
pub fn vec_of(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_of`].
pub fn mat_of(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Frobenius inner product `trace(aᵀb)`.
pub fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn qf_positive_has_positive_r_diagonal() {
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 2.0, 0.5, -1.0, 2.0, 3.0]);
        let q = qf_positive(&a);
        let r = q.transpose() * &a;
        assert!(r[(0, 0)] > 0.0 && r[(1, 1)] > 0.0);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn truncated_svd_rejects_ties() {
        let a = DMatrix::identity(3, 3);
        assert!(matches!(truncated_svd(&a, 1), Err(Error::RankDrop { .. })));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 0.0]));
        let (u, s, v) = truncated_svd(&b, 2).unwrap();
        let rebuilt = &u * DMatrix::from_diagonal(&s) * v.transpose();
        assert!((rebuilt - b).norm() < 1e-14);
    }

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed;
        DMatrix::from_fn(rows, cols, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    fn check_svd(a: &DMatrix<f64>) {
        let d = svd(a);
        let k = a.nrows().min(a.ncols());
        assert_eq!(d.sigma.len(), k);
        assert!(d.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = &d.u * DMatrix::from_diagonal(&d.sigma) * d.v.transpose();
        assert!((rebuilt - a).norm() <= 1e-14 * a.norm().max(1.0));
        assert!((d.v.transpose() * &d.v - DMatrix::identity(k, k)).norm() < 1e-13);
    }

    #[test]
    fn jacobi_svd_reconstructs() {
        for (i, (r, c)) in [(5, 3), (3, 5), (8, 8), (1, 4), (20, 16)].into_iter().enumerate() {
            check_svd(&lcg_matrix(r, c, i as u64));
        }
    }

    #[test]
    fn jacobi_svd_handles_near_rank_deficiency() {
        // Rank two plus a perturbation of size 1e-10.
        let a = lcg_matrix(4, 2, 1) * lcg_matrix(2, 3, 2) + lcg_matrix(4, 3, 3) * 1e-10;
        check_svd(&a);
        let s = singular_values(&a);
        assert!(s[2] < 1e-9 && s[1] > 1e-3);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let a = lcg_matrix(6, 4, 9);
        let mut eig: Vec<f64> = (a.transpose() * &a).symmetric_eigen().eigenvalues.iter().map(|&e| libm::sqrt(e)).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        let s = singular_values(&a);
        for (x, y) in s.iter().zip(eig) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_factor_is_orthonormal() {
        let a = lcg_matrix(7, 3, 4);
        let q = polar_factor(&a);
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-13);
        // qᵀa is symmetric positive definite.
        let h = q.transpose() * &a;
        assert!((&h - h.transpose()).norm() < 1e-13);
        assert!(h.symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn vec_round_trip_is_column_major() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec_of(&a).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(mat_of(&vec_of(&a), 2, 2), a);
    }
}
