use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::diagnostics::{self, loglog_slope};

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

fn all_manifolds() -> Vec<Manifold> {
    vec![
        Manifold::Euclidean { rows: 3, cols: 2 },
        Manifold::Stiefel { n: 5, k: 3 },
        Manifold::Oblique { n: 4, k: 3 },
        Manifold::FixedRank { m: 5, n: 4, r: 2 },
    ]
}

fn col(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

#[test]
fn dimensions() {
    assert_eq!(Manifold::Euclidean { rows: 3, cols: 2 }.dim(), 6);
    assert_eq!(Manifold::Stiefel { n: 5, k: 3 }.dim(), 15 - 6);
    assert_eq!(Manifold::Oblique { n: 4, k: 3 }.dim(), 9);
    assert_eq!(Manifold::FixedRank { m: 20, n: 16, r: 2 }.dim(), 68);
}

#[test]
fn inner_product_examples() {
    let m = Manifold::Euclidean { rows: 2, cols: 1 };
    let x = m.point(col(&[0.0, 0.0])).unwrap();
    let xi = Tangent::Ambient(col(&[1.0, 2.0]));
    let eta = Tangent::Ambient(col(&[3.0, -1.0]));
    assert_eq!(m.inner(&x, &xi, &eta), 1.0);
    assert_eq!(m.inner(&x, &m.zero_tangent(&x), &m.zero_tangent(&x)), 0.0);

    let mut r = rng();
    for man in all_manifolds() {
        let x = man.rand_point(&mut r);
        let xi = man.rand_tangent(&x, &mut r).scaled(2.5);
        let amb = xi.ambient(&x);
        assert!((man.inner(&x, &xi, &xi) - amb.norm_squared()).abs() < 1e-12);
    }
}

#[test]
fn projection_examples() {
    let ob = Manifold::Oblique { n: 2, k: 1 };
    let x = ob.point(col(&[1.0, 0.0])).unwrap();
    assert_eq!(ob.proj(&x, &col(&[2.0, 3.0])), Tangent::Ambient(col(&[0.0, 3.0])));
    assert_eq!(
        ob.egrad2rgrad(&x, &col(&[5.0, 7.0])),
        Tangent::Ambient(col(&[0.0, 7.0]))
    );

    let eu = Manifold::Euclidean { rows: 2, cols: 2 };
    let x = eu.point(DMatrix::zeros(2, 2)).unwrap();
    let u = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.5, 4.0]);
    assert_eq!(eu.proj(&x, &u), Tangent::Ambient(u.clone()));
    assert_eq!(eu.egrad2rgrad(&x, &u), Tangent::Ambient(u));
}

#[test]
fn projection_is_idempotent_and_self_adjoint() {
    let mut r = rng();
    for man in all_manifolds() {
        let (rows, cols) = man.ambient_shape();
        for _ in 0..100 {
            let x = man.rand_point(&mut r);
            let u = DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal));
            let v = DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal));
            let pu = man.proj(&x, &u);
            let pv = man.proj(&x, &v);
            let ppu = man.proj(&x, &pu.ambient(&x));
            assert!((ppu.ambient(&x) - pu.ambient(&x)).norm() <= 1e-10 * u.norm());
            let lhs = pu.ambient(&x).dot(&v);
            let rhs = u.dot(&pv.ambient(&x));
            assert!((lhs - rhs).abs() <= 1e-10 * u.norm() * v.norm(), "{man:?}");
        }
    }
}

#[test]
fn retraction_examples() {
    let mut r = rng();
    for man in all_manifolds() {
        let x = man.rand_point(&mut r);
        let y = man.retract(&x, &man.zero_tangent(&x)).unwrap();
        assert!((y.matrix() - x.matrix()).norm() < 1e-12, "{man:?}");
    }

    let eu = Manifold::Euclidean { rows: 2, cols: 2 };
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let x0 = eu.point(DMatrix::zeros(2, 2)).unwrap();
    assert_eq!(eu.retract(&x0, &Tangent::Ambient(a.clone())).unwrap().matrix(), &a);

    let st = Manifold::Stiefel { n: 2, k: 1 };
    let x = st.point(col(&[1.0, 0.0])).unwrap();
    let y = st.retract(&x, &Tangent::Ambient(col(&[0.0, 1.0]))).unwrap();
    let h = 1.0 / 2f64.sqrt();
    assert!((y.matrix() - col(&[h, h])).norm() < 1e-15);
}

#[test]
fn retraction_is_first_order_rigid_and_stays_on_manifold() {
    let mut r = rng();
    for man in all_manifolds() {
        let x = man.rand_point(&mut r);
        let xi = man.rand_tangent(&x, &mut r);
        let amb = xi.ambient(&x);
        let mut pts = Vec::new();
        for t in [1e-2, 1e-3, 1e-4, 1e-5] {
            let y = man.retract(&x, &xi.clone().scaled(t)).unwrap();
            assert!(man.feasibility(&y) <= 1e-10);
            let dev = (y.matrix() - (x.matrix() + &amb * t)).norm();
            pts.push((t, dev));
        }
        match man {
            Manifold::Euclidean { .. } => assert!(pts.iter().all(|p| p.1 < 1e-14)),
            _ => assert!(loglog_slope(&pts) >= 1.9, "{man:?}: {pts:?}"),
        }
        // Larger steps keep the invariants too.
        let y = man.retract(&x, &xi.clone().scaled(3.0)).unwrap();
        assert!(man.feasibility(&y) <= 1e-10, "{man:?}");
    }
}

#[test]
fn fixed_rank_retraction_reports_rank_drop() {
    let man = Manifold::FixedRank { m: 3, n: 3, r: 1 };
    let x = man
        .point(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0])))
        .unwrap();
    // X + ξ = e2e1ᵀ + e1e2ᵀ has two equal singular values.
    let e2 = col(&[0.0, 1.0, 0.0]);
    let xi = Tangent::LowRank(LowRankTangent {
        m: DMatrix::from_element(1, 1, -1.0),
        up: e2.clone(),
        vp: e2,
    });
    assert!(man.tangency_residual(&x, &xi) < 1e-15);
    assert!(matches!(man.retract(&x, &xi), Err(Error::RankDrop { rank: 1, .. })));
    let tie = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
    assert!(matches!(man.nearest_point(&tie), Err(Error::RankDrop { .. })));
}

#[test]
fn rand_point_and_tangent_invariants() {
    let mut r = rng();
    for man in all_manifolds() {
        let x = man.rand_point(&mut r);
        assert!(man.feasibility(&x) <= 1e-12, "{man:?}");
        let xi = man.rand_tangent(&x, &mut r);
        assert!((man.norm(&x, &xi) - 1.0).abs() <= 1e-12);
        assert!(man.tangency_residual(&x, &xi) <= 1e-12);
        assert_eq!(man.norm(&x, &man.zero_tangent(&x)), 0.0);
    }
}

fn gram_is_identity(basis: &[Tangent]) -> f64 {
    let d = basis.len();
    let g = DMatrix::from_fn(d, d, |i, j| basis[i].inner(&basis[j]));
    (g - DMatrix::identity(d, d)).abs().max()
}

#[test]
fn orthonormal_bases() {
    let mut r = rng();
    let cases = [
        Manifold::Euclidean { rows: 2, cols: 1 },
        Manifold::Stiefel { n: 3, k: 1 },
        Manifold::FixedRank { m: 4, n: 4, r: 2 },
        Manifold::Oblique { n: 5, k: 2 },
        Manifold::Stiefel { n: 6, k: 3 },
    ];
    for man in cases {
        let x = man.rand_point(&mut r);
        let basis = man.orthonormal_basis(&x, &mut r).unwrap();
        assert_eq!(basis.len(), man.dim());
        assert!(gram_is_identity(&basis) <= 1e-10, "{man:?}");
        for b in &basis {
            assert!(man.tangency_residual(&x, b) <= 1e-10);
        }
    }
    let s2 = Manifold::Stiefel { n: 3, k: 1 };
    let x = s2.rand_point(&mut r);
    for b in s2.orthonormal_basis(&x, &mut r).unwrap() {
        assert!(b.ambient(&x).dot(x.matrix()).abs() < 1e-12);
    }
}

#[test]
fn riemannian_hessian_is_self_adjoint() {
    let mut r = rng();
    for man in all_manifolds() {
        let (rows, cols) = man.ambient_shape();
        let x = man.rand_point(&mut r);
        let c = DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal));
        // f(X) = trace(CᵀX) + ½‖X‖²: egrad = C + X, ehess[ξ] = ξ.
        let egrad = &c + x.matrix();
        for _ in 0..20 {
            let xi = man.rand_tangent(&x, &mut r);
            let eta = man.rand_tangent(&x, &mut r);
            let hxi = man.ehess2rhess(&x, &egrad, &xi.ambient(&x), &xi);
            let heta = man.ehess2rhess(&x, &egrad, &eta.ambient(&x), &eta);
            assert!(man.tangency_residual(&x, &hxi) <= 1e-10);
            let (a, b) = (hxi.inner(&eta), xi.inner(&heta));
            assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs()).max(1.0), "{man:?}");
        }
    }
}

#[test]
fn quadratic_and_linear_hessians() {
    let mut r = rng();
    let eu = Manifold::Euclidean { rows: 3, cols: 2 };
    let x = eu.rand_point(&mut r);
    let xi = eu.rand_tangent(&x, &mut r);
    let amb = xi.ambient(&x);
    assert_eq!(eu.ehess2rhess(&x, x.matrix(), &amb, &xi), xi);

    let st = Manifold::Stiefel { n: 5, k: 2 };
    let x = st.rand_point(&mut r);
    let c = DMatrix::from_fn(5, 2, |_, _| r.sample(StandardNormal));
    let xi = st.rand_tangent(&x, &mut r);
    let h = st.ehess2rhess(&x, &c, &DMatrix::zeros(5, 2), &xi);
    let Tangent::Ambient(xa) = &xi else { unreachable!() };
    let expected = st.proj(&x, &(-(xa * crate::linalg::sym(&(x.matrix().transpose() * &c)))));
    assert!((h.ambient(&x) - expected.ambient(&x)).norm() < 1e-13);
}

#[test]
fn taylor_slopes_of_distance_objective() {
    // f(X) = ‖A − X‖² on every manifold.
    let mut r = rng();
    for man in all_manifolds() {
        let (rows, cols) = man.ambient_shape();
        let a = DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal));
        let x = man.rand_point(&mut r);
        let xi = man.rand_tangent(&x, &mut r);
        let value = |p: &Point| (&a - p.matrix()).norm_squared();
        let egrad = (x.matrix() - &a) * 2.0;
        let rgrad = man.egrad2rgrad(&x, &egrad);
        let rhess = man.ehess2rhess(&x, &egrad, &(xi.ambient(&x) * 2.0), &xi);
        let g = diagnostics::gradient_check(&man, &x, &xi, &value, &rgrad).unwrap();
        let h = diagnostics::hessian_check(&man, &x, &xi, &value, &rgrad, &rhess).unwrap();
        if let Manifold::Euclidean { .. } = man {
            // Exact quadratic: no informative hessian remainder.
            assert!(g.passes(2.0));
            continue;
        }
        assert!(g.passes(2.0), "{man:?} gradient {g:?}");
        assert!(h.passes(3.0), "{man:?} hessian {h:?}");
    }
}

#[test]
fn product_retraction() {
    let mut r = rng();
    let man = Manifold::Stiefel { n: 4, k: 2 };
    let w = Iterate {
        x: man.rand_point(&mut r),
        y: DVector::from_vec(vec![1.0]),
        z: DVector::from_vec(vec![0.5, 2.0]),
        s: DVector::from_vec(vec![1.0, 3.0]),
    };
    let mut step = w.zero_step(&man);
    step.dy[0] = 2.0;
    step.dz = DVector::from_vec(vec![1.0, -1.0]);
    step.ds = DVector::from_vec(vec![0.5, 0.5]);
    assert_eq!(w.retract(&man, &step, 0.0).unwrap(), w);
    let moved = product_retract(&man, &w, &step, 0.5).unwrap();
    assert!((moved.x.matrix() - w.x.matrix()).amax() < 1e-15);
    assert_eq!(moved.y[0], 2.0);
    assert_eq!(moved.z.as_slice(), &[1.0, 1.5]);
    assert_eq!(moved.s.as_slice(), &[1.25, 3.25]);

    let eu = Manifold::Euclidean { rows: 2, cols: 1 };
    let w = Iterate {
        x: eu.point(col(&[1.0, 2.0])).unwrap(),
        y: DVector::zeros(0),
        z: DVector::from_vec(vec![1.0]),
        s: DVector::from_vec(vec![1.0]),
    };
    let step = Step {
        dx: Tangent::Ambient(col(&[1.0, -1.0])),
        dy: DVector::zeros(0),
        dz: DVector::from_vec(vec![2.0]),
        ds: DVector::from_vec(vec![-1.0]),
    };
    let moved = w.retract(&eu, &step, 0.25).unwrap();
    assert_eq!(moved.x.matrix(), &col(&[1.25, 1.75]));
    assert_eq!(moved.z[0], 1.5);
    assert_eq!(moved.s[0], 0.75);
}
