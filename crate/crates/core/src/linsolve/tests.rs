use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dense::{condensed_matrix, dense_oracle, nabla_f_matrix, TangentBasis};
use super::*;
use crate::instances::{gen_model_ob, gen_model_st, gen_nlrm};
use crate::kkt::nabla_f_apply;
use crate::manifolds::{Manifold, Point};
use crate::problem::{Rcop, ScalarFn};

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(21)
}

fn gauss(n: usize, r: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample(StandardNormal))
}

fn positive(n: usize, r: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| 0.1 + 2.0 * r.random::<f64>())
}

/// Small benchmark problems with a random interior iterate each.
fn cases(r: &mut ChaCha8Rng) -> Vec<(Box<dyn Problem>, Iterate)> {
    let problems: Vec<Box<dyn Problem>> = vec![
        Box::new(gen_nlrm(5, 4, 2, 0.01, 1).unwrap().problem),
        Box::new(gen_model_st(6, 2, 2).unwrap().problem),
        Box::new(gen_model_ob(6, 3, 3).unwrap().problem),
    ];
    problems
        .into_iter()
        .map(|p| {
            let x = p.manifold().rand_point(r);
            let w = Iterate {
                x,
                y: gauss(p.num_eq(), r),
                z: positive(p.num_ineq(), r),
                s: positive(p.num_ineq(), r),
            };
            (p, w)
        })
        .collect()
}

fn rand_condensed(p: &dyn Problem, x: &Point, r: &mut ChaCha8Rng) -> CondensedVec {
    CondensedVec {
        dx: p.manifold().rand_tangent(x, r),
        dy: gauss(p.num_eq(), r),
    }
}

fn rand_step(p: &dyn Problem, x: &Point, r: &mut ChaCha8Rng) -> Step {
    Step {
        dx: p.manifold().rand_tangent(x, r),
        dy: gauss(p.num_eq(), r),
        dz: gauss(p.num_ineq(), r),
        ds: gauss(p.num_ineq(), r),
    }
}

/// One variable, `f(x) = −x`, `g(x) = x − 1`: at `x = 0`, `F_x = −1 + z` and
/// `F_z = s − 1`.
fn scalar_problem() -> Rcop {
    let obj = ScalarFn::new(|x| -x[(0, 0)], |_| DMatrix::from_element(1, 1, -1.0), |_, _| DMatrix::zeros(1, 1));
    let g = ScalarFn::new(|x| x[(0, 0)] - 1.0, |_| DMatrix::from_element(1, 1, 1.0), |_, _| DMatrix::zeros(1, 1));
    Rcop::new(Manifold::Euclidean { rows: 1, cols: 1 }, obj, vec![g], vec![]).unwrap()
}

fn scalar_iterate(z: f64, s: f64) -> Iterate {
    Iterate {
        x: Manifold::Euclidean { rows: 1, cols: 1 }.point(DMatrix::zeros(1, 1)).unwrap(),
        y: DVector::zeros(0),
        z: DVector::from_element(1, z),
        s: DVector::from_element(1, s),
    }
}

#[test]
fn condensed_operator_is_self_adjoint() {
    let mut r = rng();
    for (p, w) in cases(&mut r) {
        let op = CondensedOperator::new(p.as_ref(), &w).unwrap();
        for _ in 0..100 {
            let u = rand_condensed(p.as_ref(), &w.x, &mut r);
            let v = rand_condensed(p.as_ref(), &w.x, &mut r);
            let lhs = op.apply(&u).inner(&v);
            let rhs = u.inner(&op.apply(&v));
            assert!((lhs - rhs).abs() <= 1e-10 * u.norm() * v.norm(), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn theta_is_positive_semidefinite() {
    let mut r = rng();
    for (p, w) in cases(&mut r) {
        let op = CondensedOperator::new(p.as_ref(), &w).unwrap();
        for _ in 0..50 {
            let xi = p.manifold().rand_tangent(&w.x, &mut r);
            assert!(op.theta(&xi).inner(&xi) >= -1e-12 * xi.inner(&xi));
        }
    }
}

#[test]
fn condensed_apply_of_zero_is_zero() {
    let mut r = rng();
    for (p, w) in cases(&mut r) {
        let zero = CondensedVec {
            dx: p.manifold().zero_tangent(&w.x),
            dy: DVector::zeros(p.num_eq()),
        };
        assert_eq!(condensed_apply(p.as_ref(), &w, &zero).unwrap().norm(), 0.0);
    }
}

#[test]
fn interior_is_required() {
    let p = scalar_problem();
    let w = scalar_iterate(1.0, 0.0);
    assert!(matches!(condensed_rhs(&p, &w, 0.0), Err(Error::InteriorViolation { which: "s", .. })));
    assert!(CondensedOperator::new(&p, &scalar_iterate(-1.0, 1.0)).is_err());
}

#[test]
fn condensed_rhs_hand_example() {
    // F_x = 0, F_z = 0, F_s = zs = 1, μ = 0.5: c = −G_x S⁻¹(μe − F_s) = 0.5·grad g.
    let p = scalar_problem();
    let w = scalar_iterate(1.0, 1.0);
    let rhs = condensed_rhs(&p, &w, 0.5).unwrap();
    assert_eq!(rhs.dx, Tangent::Ambient(DMatrix::from_element(1, 1, 0.5)));
    assert!(rhs.dy.is_empty());
}

#[test]
fn equality_rhs_is_minus_h() {
    let mut r = rng();
    let ob = gen_model_ob(6, 3, 4).unwrap().problem;
    let x = ob.manifold().rand_point(&mut r);
    let w = Iterate {
        y: DVector::zeros(1),
        z: positive(18, &mut r),
        s: positive(18, &mut r),
        x,
    };
    let rhs = condensed_rhs(&ob, &w, 0.1).unwrap();
    assert_eq!(rhs.dy, -ob.eq(&w.x));
}

#[test]
fn recover_dz_ds_hand_example() {
    let p = scalar_problem();
    let w = scalar_iterate(2.0, 1.0);
    let mut f = kkt_field(&p, &w);
    assert_eq!(f.fz[0], 0.0);
    assert_eq!(f.fs[0], 2.0);
    f.fx = Tangent::Ambient(DMatrix::zeros(1, 1));
    let dx = Tangent::Ambient(DMatrix::zeros(1, 1));
    let (dz, ds) = recover_dz_ds(&p, &w, &f, 0.0, &dx).unwrap();
    assert_eq!(dz[0], -2.0);
    assert_eq!(ds[0], 0.0);
}

#[test]
fn zero_step_at_perturbed_kkt_point() {
    // z = s = 1 and μ = 1 make F − μê vanish.
    let p = scalar_problem();
    let w = scalar_iterate(1.0, 1.0);
    let n = solve_newton(&p, &w, 1.0, 1e-12, 100).unwrap();
    assert_eq!(n.step.norm(), 0.0);
    let n = solve_newton(&p, &w, 2.0, 1e-12, 100).unwrap();
    assert!(n.step.norm() > 0.0);
    // ∇F = [[0, 1, 0], [1, 0, 1], [0, 1, 1]] on (x, z, s) and the right-hand
    // side is (0, 0, μ − 1), so Δw = (−1, 0, 1).
    let step = &n.step;
    assert!((step.dx.flat()[0] + 1.0).abs() < 1e-12);
    assert!(step.dz[0].abs() < 1e-12);
    assert!((step.ds[0] - 1.0).abs() < 1e-12);
}

#[test]
fn newton_equation_residual_is_small() {
    let mut r = rng();
    let cr_tol = 1e-9;
    for (p, w) in cases(&mut r) {
        let f = kkt_field(p.as_ref(), &w);
        let mu = 0.1;
        let n = solve_newton_from(p.as_ref(), &w, &f, mu, cr_tol, 1000).unwrap();
        assert_eq!(n.report.status, CrStatus::Converged);
        let res = newton_residual(p.as_ref(), &w, &f, mu, &n.step);
        let mut target = f.clone().into_step();
        target.ds.add_scalar_mut(-mu);
        let rel = res.norm() / target.norm();
        assert!(rel <= 10.0 * cr_tol, "relative Newton residual {rel}");
    }
}

#[test]
fn dense_oracle_matches_matrix_free_solve() {
    let mut r = rng();
    for (p, w) in cases(&mut r) {
        let dense = dense_oracle(p.as_ref(), &w, 0.05, &mut r).unwrap();
        let m = &dense.matrix;
        assert!((m - m.transpose()).norm() <= 1e-10 * m.norm());
        let cr = solve_newton(p.as_ref(), &w, 0.05, 1e-12, 1000).unwrap();
        let mut diff = cr.step.clone();
        diff.axpy(-1.0, &dense.step);
        assert!(diff.norm() <= 1e-8 * dense.step.norm(), "{}", diff.norm() / dense.step.norm());
    }
}

#[test]
fn operators_match_their_matrices() {
    let mut r = rng();
    for (p, w) in cases(&mut r) {
        let basis = TangentBasis::new(p.as_ref(), &w.x, &mut r).unwrap();
        let (l, m) = (p.num_eq(), p.num_ineq());
        let nf = nabla_f_matrix(p.as_ref(), &w, &basis);
        let tm = condensed_matrix(p.as_ref(), &w, &basis).unwrap();
        for _ in 0..5 {
            let u = rand_step(p.as_ref(), &w.x, &mut r);
            let want = &nf * basis.step_coords(&u);
            let got = basis.step_coords(&nabla_f_apply(p.as_ref(), &w, &u));
            assert!((&got - &want).norm() <= 1e-10 * want.norm());
            let back = basis.step_from_coords(&basis.step_coords(&u), l, m);
            let mut d = back;
            d.axpy(-1.0, &u);
            assert!(d.norm() <= 1e-12 * u.norm());

            let v = rand_condensed(p.as_ref(), &w.x, &mut r);
            let want = &tm * basis.condensed_coords(&v);
            let got = basis.condensed_coords(&condensed_apply(p.as_ref(), &w, &v).unwrap());
            assert!((&got - &want).norm() <= 1e-10 * want.norm());
        }
    }
}

#[test]
fn determinant_links_full_and_condensed_operators() {
    // det ∇F = (−1)^m Π s_i · det T, so one is singular exactly when the other is.
    let mut r = rng();
    let small: Vec<Box<dyn Problem>> = vec![
        Box::new(gen_nlrm(4, 3, 1, 0.0, 5).unwrap().problem),
        Box::new(gen_model_st(4, 2, 6).unwrap().problem),
        Box::new(gen_model_ob(4, 2, 7).unwrap().problem),
    ];
    for p in small {
        for _ in 0..5 {
            let m = p.num_ineq();
            let w = Iterate {
                x: p.manifold().rand_point(&mut r),
                y: gauss(p.num_eq(), &mut r),
                z: positive(m, &mut r),
                s: positive(m, &mut r),
            };
            let basis = TangentBasis::new(p.as_ref(), &w.x, &mut r).unwrap();
            let full = nabla_f_matrix(p.as_ref(), &w, &basis).determinant();
            let cond = condensed_matrix(p.as_ref(), &w, &basis).unwrap().determinant();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let predicted = sign * w.s.product() * cond;
            assert!((full - predicted).abs() <= 1e-8 * full.abs().max(predicted.abs()), "{full} vs {predicted}");
        }
    }
}
