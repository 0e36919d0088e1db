//! Oracle and invariant suite behind the `check` subcommand.
//!
//! The dense references here are assembled block by block from the
//! problem's callbacks (Riemannian gradients of every constraint and the
//! Riemannian Hessian of every function, all in an orthonormal tangent
//! basis) instead of by probing the matrix-free operators.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ripm_core::diagnostics::{gradient_check, hessian_check};
use ripm_core::instances::{gen_model_ob, gen_model_st, gen_nlrm, kkt_witness};
use ripm_core::kkt::{nabla_f_adjoint_apply, nabla_f_apply};
use ripm_core::linalg::singular_values;
use ripm_core::linsolve::dense::{condensed_matrix, nabla_f_matrix, TangentBasis};
use ripm_core::linsolve::{condensed_apply, cr_solve, CondensedVec};
use ripm_core::{InnerProductSpace, Iterate, Point, Problem, Step, Tangent};

/// Outcome of one check: the worst measured value against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Small members of the three benchmark families.
pub fn benchmark_problems(seed: u64) -> Vec<(&'static str, Box<dyn Problem>)> {
    vec![
        ("nlrm", Box::new(gen_nlrm(8, 6, 2, 0.01, seed).expect("nlrm").problem) as Box<dyn Problem>),
        ("model_st", Box::new(gen_model_st(10, 3, seed).expect("model_st").problem)),
        ("model_ob", Box::new(gen_model_ob(10, 3, seed).expect("model_ob").problem)),
    ]
}

fn gauss(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random point with `y` Gaussian and `z, s` uniform on `[0.1, 2.1]`.
pub fn random_interior(p: &dyn Problem, rng: &mut ChaCha8Rng) -> Iterate {
    let m = p.num_ineq();
    let mut positive = |_: usize, _: usize| 0.1 + 2.0 * rng.random::<f64>();
    let z = DVector::from_fn(m, &mut positive);
    let s = DVector::from_fn(m, &mut positive);
    Iterate {
        x: p.manifold().rand_point(rng),
        y: gauss(p.num_eq(), rng),
        z,
        s,
    }
}

fn random_step(p: &dyn Problem, w: &Iterate, rng: &mut ChaCha8Rng) -> Step {
    let m = p.num_ineq();
    Step {
        dx: p.manifold().rand_tangent(&w.x, rng),
        dy: gauss(p.num_eq(), rng),
        dz: gauss(m, rng),
        ds: gauss(m, rng),
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// Per-function data at `x`: ambient gradients of every `g_i` and `h_j`.
struct Callbacks<'a> {
    p: &'a dyn Problem,
    x: &'a Point,
    g_egrad: Vec<DMatrix<f64>>,
    h_egrad: Vec<DMatrix<f64>>,
}

impl<'a> Callbacks<'a> {
    fn new(p: &'a dyn Problem, x: &'a Point) -> Self {
        let (m, l) = (p.num_ineq(), p.num_eq());
        Callbacks {
            p,
            x,
            g_egrad: (0..m).map(|i| p.ineq_egrad_combine(x, &unit(m, i))).collect(),
            h_egrad: (0..l).map(|j| p.eq_egrad_combine(x, &unit(l, j))).collect(),
        }
    }

    /// Columns `grad g_i` (or `grad h_j`) in basis coordinates.
    fn gradient_block(&self, basis: &TangentBasis, egrads: &[DMatrix<f64>]) -> DMatrix<f64> {
        let man = self.p.manifold();
        let mut out = DMatrix::zeros(basis.dim(), egrads.len());
        for (i, e) in egrads.iter().enumerate() {
            out.set_column(i, &basis.coords(&man.egrad2rgrad(self.x, e)));
        }
        out
    }

    /// `Hess_x L = Hess f + Σ y_j Hess h_j + Σ z_i Hess g_i`, each term converted
    /// from its own ambient data.
    fn lagrangian_hessian(&self, basis: &TangentBasis, y: &DVector<f64>, z: &DVector<f64>) -> DMatrix<f64> {
        let (p, x) = (self.p, self.x);
        let man = p.manifold();
        let (m, l) = (p.num_ineq(), p.num_eq());
        let d = basis.dim();
        let f_egrad = p.cost_egrad(x);
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            let u = basis.vector(j);
            let amb = u.ambient(x);
            let mut col = man.ehess2rhess(x, &f_egrad, &p.cost_ehess(x, &amb), &u);
            for i in 0..m {
                let eh = p.ineq_ehess_combine(x, &unit(m, i), &amb);
                col.axpy(z[i], &man.ehess2rhess(x, &self.g_egrad[i], &eh, &u));
            }
            for k in 0..l {
                let eh = p.eq_ehess_combine(x, &unit(l, k), &amb);
                col.axpy(y[k], &man.ehess2rhess(x, &self.h_egrad[k], &eh, &u));
            }
            out.set_column(j, &basis.coords(&col));
        }
        out
    }
}

/// Dense `∇F(w)` and condensed matrices assembled from their blocks.
pub struct BlockMatrices {
    pub nabla_f: DMatrix<f64>,
    pub condensed: DMatrix<f64>,
}

pub fn block_matrices(p: &dyn Problem, w: &Iterate, basis: &TangentBasis) -> BlockMatrices {
    let cb = Callbacks::new(p, &w.x);
    let (d, l, m) = (basis.dim(), p.num_eq(), p.num_ineq());
    let hl = cb.lagrangian_hessian(basis, &w.y, &w.z);
    let gm = cb.gradient_block(basis, &cb.g_egrad);
    let hm = cb.gradient_block(basis, &cb.h_egrad);
    let (oy, oz, os) = (d, d + l, d + l + m);
    let mut nf = DMatrix::zeros(d + l + 2 * m, d + l + 2 * m);
    nf.view_mut((0, 0), (d, d)).copy_from(&hl);
    nf.view_mut((0, oy), (d, l)).copy_from(&hm);
    nf.view_mut((0, oz), (d, m)).copy_from(&gm);
    nf.view_mut((oy, 0), (l, d)).copy_from(&hm.transpose());
    nf.view_mut((oz, 0), (m, d)).copy_from(&gm.transpose());
    for i in 0..m {
        nf[(oz + i, os + i)] = 1.0;
        nf[(os + i, oz + i)] = w.s[i];
        nf[(os + i, os + i)] = w.z[i];
    }
    let theta = &gm * DMatrix::from_diagonal(&w.z.component_div(&w.s)) * gm.transpose();
    let mut cond = DMatrix::zeros(d + l, d + l);
    cond.view_mut((0, 0), (d, d)).copy_from(&(hl + theta));
    cond.view_mut((0, d), (d, l)).copy_from(&hm);
    cond.view_mut((d, 0), (l, d)).copy_from(&hm.transpose());
    BlockMatrices {
        nabla_f: nf,
        condensed: cond,
    }
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Matrix-free `∇F` and condensed operators against the block-assembled
/// matrices and the probed basis representation, at `points` random interior
/// points per benchmark manifold.
pub fn oracle_equivalence(points: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (_, p) in benchmark_problems(seed) {
        let p = p.as_ref();
        for _ in 0..points {
            let w = random_interior(p, &mut rng);
            let basis = TangentBasis::new(p, &w.x, &mut rng).expect("tangent basis");
            let blocks = block_matrices(p, &w, &basis);
            let probed_nf = nabla_f_matrix(p, &w, &basis);
            let probed_cond = condensed_matrix(p, &w, &basis).expect("interior point");
            worst = worst.max((&probed_nf - &blocks.nabla_f).norm() / blocks.nabla_f.norm());
            worst = worst.max((&probed_cond - &blocks.condensed).norm() / blocks.condensed.norm());

            let u = random_step(p, &w, &mut rng);
            let got = basis.step_coords(&nabla_f_apply(p, &w, &u));
            worst = worst.max(rel(&got, &(&blocks.nabla_f * basis.step_coords(&u))));

            let v = CondensedVec {
                dx: u.dx.clone(),
                dy: u.dy.clone(),
            };
            let got = basis.condensed_coords(&condensed_apply(p, &w, &v).expect("interior point"));
            worst = worst.max(rel(&got, &(&blocks.condensed * basis.condensed_coords(&v))));
        }
    }
    CheckOutcome {
        name: "oracle_equivalence",
        passed: worst <= 1e-10,
        detail: format!("max relative error {worst:.2e} (bound 1e-10), {points} points per manifold"),
    }
}

/// `⟨∇F[u], v⟩ = ⟨u, ∇F*[v]⟩` and self-adjointness of the condensed operator
/// on `pairs` random pairs per problem.
pub fn adjointness(pairs: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (_, p) in benchmark_problems(seed) {
        let p = p.as_ref();
        for _ in 0..pairs {
            let w = random_interior(p, &mut rng);
            let u = random_step(p, &w, &mut rng);
            let v = random_step(p, &w, &mut rng);
            let fu = nabla_f_apply(p, &w, &u);
            let fv = nabla_f_adjoint_apply(p, &w, &v);
            let scale = (fu.norm() * v.norm()).max(u.norm() * fv.norm());
            worst = worst.max((fu.inner(&v) - u.inner(&fv)).abs() / scale);

            let cu = CondensedVec {
                dx: u.dx.clone(),
                dy: u.dy.clone(),
            };
            let cv = CondensedVec {
                dx: v.dx.clone(),
                dy: v.dy.clone(),
            };
            let tu = condensed_apply(p, &w, &cu).expect("interior point");
            let tv = condensed_apply(p, &w, &cv).expect("interior point");
            let scale = (tu.norm() * cv.norm()).max(cu.norm() * tv.norm());
            worst = worst.max((tu.inner(&cv) - cu.inner(&tv)).abs() / scale);
        }
    }
    CheckOutcome {
        name: "adjointness",
        passed: worst <= 1e-10,
        detail: format!("max relative pairing gap {worst:.2e} (bound 1e-10), {pairs} pairs per problem"),
    }
}

/// A scalar function on the manifold with its ambient derivatives.
struct Function<'a> {
    name: &'static str,
    value: Box<dyn Fn(&Point) -> f64 + 'a>,
    egrad: DMatrix<f64>,
    ehess: Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + 'a>,
}

/// The objective, the inequality map through the functional `⟨u, g⟩` and
/// the equality map through `⟨v, h⟩`. A vector-valued map is tested through
/// a random functional: individual components can have accidentally tiny
/// remainder coefficients along a given direction, which says nothing about
/// their derivatives.
fn functions<'a>(p: &'a dyn Problem, x: &'a Point, u: DVector<f64>, v: DVector<f64>) -> Vec<Function<'a>> {
    let mut out = vec![Function {
        name: "objective",
        value: Box::new(move |y| p.cost(y)),
        egrad: p.cost_egrad(x),
        ehess: Box::new(move |d| p.cost_ehess(x, d)),
    }];
    out.push(Function {
        name: "inequality",
        egrad: p.ineq_egrad_combine(x, &u),
        value: Box::new({
            let u = u.clone();
            move |y| p.ineq(y).dot(&u)
        }),
        ehess: Box::new(move |d| p.ineq_ehess_combine(x, &u, d)),
    });
    if p.num_eq() > 0 {
        out.push(Function {
            name: "equality",
            egrad: p.eq_egrad_combine(x, &v),
            value: Box::new({
                let v = v.clone();
                move |y| p.eq(y).dot(&v)
            }),
            ehess: Box::new(move |d| p.eq_ehess_combine(x, &v, d)),
        });
    }
    out
}

/// Taylor remainder slopes of the objective and constraint maps at
/// `trials` random points per problem: gradient slope within `[1.9, 2.1]`,
/// Hessian-model slope within `[2.9, 3.1]`. Each function gets unit
/// directions drawn until both remainder curves are conclusive, at most
/// [`MAX_DIRECTIONS`] of them; the slopes themselves never steer the draw.
pub fn derivative_checks(trials: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut count = 0;
    let mut redraws = 0;
    let (mut gmin, mut gmax, mut hmin, mut hmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (family, p) in benchmark_problems(seed) {
        let p = p.as_ref();
        let man = p.manifold();
        for _ in 0..trials {
            let x = man.rand_point(&mut rng);
            let u = gauss(p.num_ineq(), &mut rng);
            let v = gauss(p.num_eq(), &mut rng);
            for f in functions(p, &x, u.clone(), v.clone()) {
                count += 1;
                let rgrad = man.egrad2rgrad(&x, &f.egrad);
                let mut outcome = None;
                for attempt in 0..MAX_DIRECTIONS {
                    let xi = man.rand_tangent(&x, &mut rng);
                    let xi = xi.clone().scaled(1.0 / xi.norm());
                    let rhess: Tangent = man.ehess2rhess(&x, &f.egrad, &(f.ehess)(&xi.ambient(&x)), &xi);
                    let g = gradient_check(man, &x, &xi, &*f.value, &rgrad);
                    let h = hessian_check(man, &x, &xi, &*f.value, &rgrad, &rhess);
                    let (Ok(g), Ok(h)) = (g, h) else {
                        outcome = None;
                        break;
                    };
                    let done = g.conclusive() && h.conclusive();
                    outcome = Some((g, h));
                    if done {
                        break;
                    }
                    if attempt + 1 < MAX_DIRECTIONS {
                        redraws += 1;
                    }
                }
                match outcome {
                    Some((g, h)) => {
                        gmin = gmin.min(g.slope);
                        gmax = gmax.max(g.slope);
                        hmin = hmin.min(h.slope);
                        hmax = hmax.max(h.slope);
                        if !g.passes(2.0) || !h.passes(3.0) || !g.conclusive() || !h.conclusive() {
                            failures.push(format!(
                                "{family} {} (slopes {:.3}, {:.3}; {} and {} informative steps)",
                                f.name,
                                g.slope,
                                h.slope,
                                g.points.len(),
                                h.points.len()
                            ));
                        }
                    }
                    None => failures.push(format!("{family} {}: curve left the manifold", f.name)),
                }
            }
        }
    }
    let mut detail = format!(
        "{count} tests, gradient slopes [{gmin:.3}, {gmax:.3}], Hessian slopes [{hmin:.3}, {hmax:.3}], {redraws} inconclusive directions redrawn"
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; failing: {}", failures.join("; ")));
    }
    CheckOutcome {
        name: "derivative_checks",
        passed: failures.is_empty(),
        detail,
    }
}

/// Directions tried per function before an inconclusive test counts as failed.
pub const MAX_DIRECTIONS: usize = 10;

/// `cr_solve` on random symmetric nonsingular indefinite systems of
/// dimension 5 to 50 (eigenvalue magnitudes in `[0.5, 5]`, random signs),
/// capped at `d` iterations with tolerance `1e-12`, against a dense LU solve.
/// The detail also reports how many iterations each system needs to reach
/// the tolerance without the cap.
pub fn cr_correctness(systems: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_err: f64 = 0.0;
    let mut failing = Vec::new();
    let mut extra = 0;
    for t in 0..systems {
        // Dimensions spread evenly over 5..=50.
        let n = 5 + 45 * t / (systems - 1).max(1);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let eig = DVector::from_fn(n, |_, _| {
            let mag = 0.5 + 4.5 * rng.random::<f64>();
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        });
        let a = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let b = gauss(n, &mut rng);
        let op = |v: &DVector<f64>| &a * v;
        let (x, rep) = cr_solve(&op, &b, 1e-12, n);
        let dense = a.clone().lu().solve(&b).expect("nonsingular by construction");
        let err = rel(&x, &dense);
        worst_err = worst_err.max(err);
        let (_, free) = cr_solve(&op, &b, 1e-12, 10 * n);
        extra = extra.max(free.iterations.saturating_sub(n));
        if err > 1e-8 || rep.iterations > n {
            failing.push(format!("d={n}: error {err:.1e}, tol reached after {} iterations", free.iterations));
        }
    }
    let mut detail = format!(
        "{systems} systems, max relative error {worst_err:.2e} (bound 1e-8) within d iterations; tolerance needs up to d+{extra}"
    );
    if !failing.is_empty() {
        detail.push_str(&format!("; failing: {}", failing.join("; ")));
    }
    CheckOutcome {
        name: "cr_correctness",
        passed: failing.is_empty(),
        detail,
    }
}

/// Smallest singular value of the block-assembled `∇F` at a constructed
/// strictly complementary KKT point.
pub fn witness_nonsingular(seed: u64) -> CheckOutcome {
    let (p, w) = kkt_witness();
    let f = ripm_core::kkt::kkt_field(&p, &w).norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = TangentBasis::new(&p, &w.x, &mut rng).expect("tangent basis");
    let blocks = block_matrices(&p, &w, &basis);
    let sigma_min = singular_values(&blocks.nabla_f).min();
    CheckOutcome {
        name: "kkt_witness_nonsingular",
        passed: f == 0.0 && sigma_min > 1e-8,
        detail: format!("‖F(w*)‖ = {f:e}, σ_min(∇F(w*)) = {sigma_min:.4e} (bound 1e-8)"),
    }
}

/// Everything `check` runs.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        oracle_equivalence(50, seed),
        adjointness(100, seed),
        derivative_checks(3, seed),
        cr_correctness(20, seed),
        witness_nonsingular(seed),
    ]
}
