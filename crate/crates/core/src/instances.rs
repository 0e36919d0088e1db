//! Benchmark problem generators.
//!
//! * NLRM: nonnegative low-rank approximation `min ‖A − X‖²` over rank-`r`
//!   matrices with `X ≥ 0`.
//! * Model_St: `min −2 tr(XᵀC)` over `X ∈ St(n, k)` with `X ≥ 0`, a
//!   nonnegative PCA model with a planted solution.
//! * Model_Ob: the same objective over the oblique manifold with `X ≥ 0` and
//!   the extra equality `‖XV‖² = 1`, `V = (1, …, 1)/√k`.
//!
//! All inequality constraints are `g(X) = −vec(X)` in column-major order.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::Result;
use crate::linalg;
use crate::manifolds::{Iterate, Manifold, Point};
use crate::problem::{Problem, Rcop, ScalarFn};

/// Deterministic generator used for everything derived from a seed.
pub type SeedRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generated instance: the problem, its starting point, the data matrix
/// (`A` or `C`) and the planted solution when one is known.
#[derive(Debug, Clone)]
pub struct Instance<P> {
    pub problem: P,
    pub x0: Point,
    pub data: DMatrix<f64>,
    pub solution: Option<DMatrix<f64>>,
}

fn neg_vec(a: &DMatrix<f64>) -> DVector<f64> {
    -linalg::vec_of(a)
}

fn neg_mat(u: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    -linalg::mat_of(u, rows, cols)
}

/// `min ‖A − X‖_F²  s.t.  X ≥ 0` on `fixed_rank(m, n, r)`.
#[derive(Debug, Clone)]
pub struct Nlrm {
    manifold: Manifold,
    a: DMatrix<f64>,
}

impl Nlrm {
    pub fn new(a: DMatrix<f64>, r: usize) -> Self {
        let (m, n) = a.shape();
        assert!(r >= 1 && r < m.min(n), "rank must satisfy 1 ≤ r < min(m, n)");
        Nlrm {
            manifold: Manifold::FixedRank { m, n, r },
            a,
        }
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl Problem for Nlrm {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }
    fn num_ineq(&self) -> usize {
        self.a.len()
    }
    fn cost(&self, x: &Point) -> f64 {
        (&self.a - x.matrix()).norm_squared()
    }
    fn cost_egrad(&self, x: &Point) -> DMatrix<f64> {
        (x.matrix() - &self.a) * 2.0
    }
    fn cost_ehess(&self, _x: &Point, dir: &DMatrix<f64>) -> DMatrix<f64> {
        dir * 2.0
    }
    fn ineq(&self, x: &Point) -> DVector<f64> {
        neg_vec(x.matrix())
    }
    fn ineq_egrad_combine(&self, _x: &Point, u: &DVector<f64>) -> DMatrix<f64> {
        neg_mat(u, self.a.nrows(), self.a.ncols())
    }
    fn ineq_egrad_pair(&self, _x: &Point, a: &DMatrix<f64>) -> DVector<f64> {
        neg_vec(a)
    }
    fn ineq_ehess_combine(&self, _x: &Point, _u: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::zeros(dir.nrows(), dir.ncols())
    }
}

/// Draws an NLRM instance: `L ∈ U[0,1]^{m×r}`, `R ∈ U[0,1]^{r×n}`,
/// `A = LR + N(0, σ²)`, and `x0` the rank-`r` truncation of `|G|` for a
/// Gaussian `G`. With `σ = 0`, `A` itself is a solution.
pub fn gen_nlrm(m: usize, n: usize, r: usize, noise: f64, seed: u64) -> Result<Instance<Nlrm>> {
    assert!(noise >= 0.0, "noise level must be nonnegative");
    let mut rng = seeded(seed);
    let l = DMatrix::from_fn(m, r, |_, _| rng.random::<f64>());
    let rr = DMatrix::from_fn(r, n, |_, _| rng.random::<f64>());
    let mut a = l * rr;
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).expect("finite positive noise level");
        a.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    let problem = Nlrm::new(a.clone(), r);
    let g = DMatrix::from_fn(m, n, |_, _| {
        let v: f64 = rng.sample(StandardNormal);
        v.abs()
    });
    let x0 = problem.manifold.nearest_point(&g)?;
    Ok(Instance {
        problem,
        x0,
        solution: (noise == 0.0).then(|| a.clone()),
        data: a,
    })
}

/// `min −2 tr(XᵀC)  s.t.  X ≥ 0` on `stiefel(n, k)`.
#[derive(Debug, Clone)]
pub struct ModelSt {
    manifold: Manifold,
    c: DMatrix<f64>,
}

/// `min −2 tr(XᵀC)  s.t.  X ≥ 0, ‖XV‖² = 1` on `oblique(n, k)`.
#[derive(Debug, Clone)]
pub struct ModelOb {
    manifold: Manifold,
    c: DMatrix<f64>,
    /// `VVᵀ` for `V = (1, …, 1)ᵀ/√k`.
    vvt: DMatrix<f64>,
}

impl ModelSt {
    pub fn new(c: DMatrix<f64>) -> Self {
        let (n, k) = c.shape();
        ModelSt {
            manifold: Manifold::Stiefel { n, k },
            c,
        }
    }
}

impl ModelOb {
    pub fn new(c: DMatrix<f64>) -> Self {
        let (n, k) = c.shape();
        ModelOb {
            manifold: Manifold::Oblique { n, k },
            c,
            vvt: DMatrix::from_element(k, k, 1.0 / k as f64),
        }
    }
}

macro_rules! nonneg_pca_common {
    () => {
        fn manifold(&self) -> &Manifold {
            &self.manifold
        }
        fn num_ineq(&self) -> usize {
            self.c.len()
        }
        fn cost(&self, x: &Point) -> f64 {
            -2.0 * x.matrix().dot(&self.c)
        }
        fn cost_egrad(&self, _x: &Point) -> DMatrix<f64> {
            &self.c * -2.0
        }
        fn cost_ehess(&self, _x: &Point, dir: &DMatrix<f64>) -> DMatrix<f64> {
            DMatrix::zeros(dir.nrows(), dir.ncols())
        }
        fn ineq(&self, x: &Point) -> DVector<f64> {
            neg_vec(x.matrix())
        }
        fn ineq_egrad_combine(&self, _x: &Point, u: &DVector<f64>) -> DMatrix<f64> {
            neg_mat(u, self.c.nrows(), self.c.ncols())
        }
        fn ineq_egrad_pair(&self, _x: &Point, a: &DMatrix<f64>) -> DVector<f64> {
            neg_vec(a)
        }
        fn ineq_ehess_combine(&self, _x: &Point, _u: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
            DMatrix::zeros(dir.nrows(), dir.ncols())
        }
    };
}

impl Problem for ModelSt {
    nonneg_pca_common!();
}

impl Problem for ModelOb {
    nonneg_pca_common!();

    fn num_eq(&self) -> usize {
        1
    }
    fn eq(&self, x: &Point) -> DVector<f64> {
        let xv = x.matrix() * &self.vvt;
        DVector::from_element(1, xv.dot(x.matrix()) - 1.0)
    }
    fn eq_egrad_combine(&self, x: &Point, v: &DVector<f64>) -> DMatrix<f64> {
        x.matrix() * &self.vvt * (2.0 * v[0])
    }
    fn eq_egrad_pair(&self, x: &Point, a: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_element(1, 2.0 * (x.matrix() * &self.vvt).dot(a))
    }
    fn eq_ehess_combine(&self, _x: &Point, v: &DVector<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
        dir * &self.vvt * (2.0 * v[0])
    }
}

/// Planted data shared by both nonnegative PCA models: `(C, X*)`.
///
/// The rows are split at random into `k` nonempty groups; column `j` of
/// `X*` is supported on group `j`, so the columns are orthogonal. Then
/// `C = X* Lᵀ` with `L = U[0,1]^{k×k} + kI`.
pub fn planted_pca(n: usize, k: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    assert!(k >= 1 && k <= n, "need 1 ≤ k ≤ n");
    let mut rng = seeded(seed);
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng);
    let mut group = alloc::vec![0usize; n];
    for (i, &row) in rows.iter().enumerate() {
        group[row] = if i < k { i } else { rng.random_range(0..k) };
    }
    // B carries the support; its values only matter through B > 0.
    let b = DMatrix::from_fn(n, k, |i, j| if group[i] == j { 0.5 + rng.random::<f64>() } else { 0.0 });
    let mut x_star = DMatrix::from_fn(n, k, |i, j| if b[(i, j)] > 0.0 { 1.0 + rng.random::<f64>() } else { 0.0 });
    linalg::normalize_columns(&mut x_star);
    let l = DMatrix::from_fn(k, k, |i, j| rng.random::<f64>() + if i == j { k as f64 } else { 0.0 });
    let c = &x_star * l.transpose();
    (c, x_star)
}

/// Model_St instance with `x0` the polar factor of `C`.
pub fn gen_model_st(n: usize, k: usize, seed: u64) -> Result<Instance<ModelSt>> {
    let (c, x_star) = planted_pca(n, k, seed);
    let problem = ModelSt::new(c.clone());
    let x0 = problem.manifold.point(linalg::polar_factor(&c))?;
    Ok(Instance {
        problem,
        x0,
        data: c,
        solution: Some(x_star),
    })
}

/// Model_Ob instance with the same data and starting point as Model_St.
pub fn gen_model_ob(n: usize, k: usize, seed: u64) -> Result<Instance<ModelOb>> {
    let (c, x_star) = planted_pca(n, k, seed);
    let problem = ModelOb::new(c.clone());
    let x0 = problem.manifold.point(linalg::polar_factor(&c))?;
    let h = problem.eq(&problem.manifold.point(x_star.clone())?)[0];
    debug_assert!(h.abs() <= 1e-10, "planted solution violates the equality: {h}");
    Ok(Instance {
        problem,
        x0,
        data: c,
        solution: Some(x_star),
    })
}

/// `min ½‖x − (2, 3)‖²` on `R^{2×1}` subject to `x₁ ≤ 0`, `x₂ ≤ 5` and
/// `x₂ = 1`, with its KKT point `x* = (0, 1)`, `y* = 2`, `z* = (2, 0)`,
/// `s* = (0, 4)`. The first constraint is active with a positive multiplier
/// and the second inactive, so strict complementarity and LICQ hold.
pub fn kkt_witness() -> (Rcop, Iterate) {
    let c = DMatrix::from_column_slice(2, 1, &[2.0, 3.0]);
    let unit = |i: usize| {
        let mut e = DMatrix::zeros(2, 1);
        e[i] = 1.0;
        e
    };
    let zero_hess = |x: &DMatrix<f64>, _: &DMatrix<f64>| DMatrix::zeros(x.nrows(), x.ncols());
    let c2 = c.clone();
    let objective = ScalarFn::new(move |x| 0.5 * (x - &c).norm_squared(), move |x| x - &c2, |_, d| d.clone());
    let e0 = unit(0);
    let e1 = unit(1);
    let ineq = vec![
        ScalarFn::new(|x| x[0], move |_| e0.clone(), zero_hess),
        ScalarFn::new(|x| x[1] - 5.0, move |_| e1.clone(), zero_hess),
    ];
    let e1 = unit(1);
    let eq = vec![ScalarFn::new(|x| x[1] - 1.0, move |_| e1.clone(), zero_hess)];
    let manifold = Manifold::Euclidean { rows: 2, cols: 1 };
    let problem = Rcop::new(manifold, objective, ineq, eq).expect("witness has inequalities");
    let x = manifold
        .point(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))
        .expect("euclidean point");
    let w = Iterate {
        x,
        y: DVector::from_vec(vec![2.0]),
        z: DVector::from_vec(vec![2.0, 0.0]),
        s: DVector::from_vec(vec![0.0, 4.0]),
    };
    (problem, w)
}

/// Starting iterate `(x0, 0, z0, s0)` with `z0, s0` uniform on `(0, 1]`.
pub fn initial_iterate<P: Problem + ?Sized, R: Rng + ?Sized>(problem: &P, x0: Point, rng: &mut R) -> Iterate {
    let m = problem.num_ineq();
    let mut draw = || DVector::from_fn(m, |_, _| 1.0 - rng.random::<f64>());
    let z = draw();
    let s = draw();
    Iterate {
        x: x0,
        y: DVector::zeros(problem.num_eq()),
        z,
        s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_is_a_kkt_point() {
        let (p, w) = kkt_witness();
        assert_eq!(crate::kkt::kkt_field(&p, &w).norm(), 0.0);
    }

    #[test]
    fn noiseless_nlrm_data_is_a_solution() {
        let inst = gen_nlrm(8, 6, 2, 0.0, 3).unwrap();
        let a = &inst.data;
        assert!(a.iter().all(|&v| v >= 0.0));
        assert!(linalg::singular_values(a)[2] < 1e-12);
        let p = inst.problem.manifold().point(a.clone()).unwrap();
        assert!(inst.problem.cost(&p) < 1e-24);
        assert!(inst.problem.ineq(&inst.x0).len() == 48);
    }

    #[test]
    fn ineq_is_negative_at_positive_points() {
        let inst = gen_nlrm(6, 5, 2, 0.0, 1).unwrap();
        let p = inst.problem.manifold().point(inst.data.clone()).unwrap();
        assert!(inst.problem.ineq(&p).iter().all(|&g| g <= 0.0));
        let plain = Manifold::Euclidean { rows: 6, cols: 5 };
        let g = inst.problem.ineq(&plain.point(DMatrix::from_element(6, 5, 0.3)).unwrap());
        assert!(g.iter().all(|&v| v < 0.0));
    }

    #[test]
    fn planted_solution_is_orthonormal_and_nonnegative() {
        for seed in 0..5 {
            let (c, x) = planted_pca(40, 8, seed);
            let gram = x.transpose() * &x;
            assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-12);
            assert!(x.iter().all(|&v| v >= 0.0));
            assert!(c.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn starting_points_are_feasible() {
        let st = gen_model_st(20, 4, 9).unwrap();
        let x0 = st.x0.matrix();
        assert!((x0.transpose() * x0 - DMatrix::identity(4, 4)).amax() < 1e-12);
        let ob = gen_model_ob(20, 4, 9).unwrap();
        assert!(ob.problem.manifold().feasibility(&ob.x0) < 1e-12);
    }

    #[test]
    fn oblique_equality_holds_at_planted_solution() {
        let ob = gen_model_ob(30, 5, 2).unwrap();
        let x = ob.problem.manifold().point(ob.solution.clone().unwrap()).unwrap();
        assert!(ob.problem.eq(&x)[0].abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_nlrm(7, 5, 2, 0.01, 11).unwrap();
        let b = gen_nlrm(7, 5, 2, 0.01, 11).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.x0.matrix(), b.x0.matrix());
    }

    #[test]
    fn initial_multipliers_are_interior() {
        let inst = gen_model_ob(10, 3, 0).unwrap();
        let w = initial_iterate(&inst.problem, inst.x0.clone(), &mut seeded(5));
        assert!(w.z.iter().chain(w.s.iter()).all(|&v| v > 0.0 && v <= 1.0));
        assert_eq!(w.y.len(), 1);
    }
}
