//! Trial execution and aggregation.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ripm_core::global::{global_solve, GlobalConfig};
use ripm_core::instances::{initial_iterate, seeded};
use ripm_core::{SolveReport, Status};

use crate::clock::StdClock;
use crate::spec::InstanceSpec;

/// Seeds for the instance data and the initial multipliers of one trial.
///
/// Trial `t` of a spec reads stream `t` of the ChaCha8 generator keyed by the
/// spec seed, so trials are independent of each other and of scheduling.
pub fn trial_seeds(spec_seed: u64, trial: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec_seed);
    rng.set_stream(trial);
    (rng.next_u64(), rng.next_u64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Solved(Status),
    /// The instance could not be generated or the start was not interior.
    InstanceError,
}

impl TrialStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialStatus::Solved(s) => s.as_str(),
            TrialStatus::InstanceError => "instance_error",
        }
    }

    pub fn is_success(&self) -> bool {
        *self == TrialStatus::Solved(Status::Success)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub spec: InstanceSpec,
    pub trial_index: usize,
    pub status: TrialStatus,
    pub outer_iters: usize,
    /// Time spent inside the solver; generation is excluded.
    pub wall_time_seconds: f64,
    pub final_kkt_residual: f64,
    /// `‖X̃ − X*‖_F` when the solution is known.
    pub final_error: Option<f64>,
    pub cr_iters_total: usize,
    /// Run-time invariant violations by check name (empty when checks are off).
    pub violations: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record the run-time invariants of the global method.
    pub check_invariants: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            check_invariants: cfg!(debug_assertions),
        }
    }
}

/// Solver settings for a spec.
pub fn global_config(spec: &InstanceSpec, options: &RunOptions) -> GlobalConfig {
    GlobalConfig {
        tol_kkt: spec.tol_kkt,
        max_outer: spec.max_outer,
        max_time_seconds: spec.t_max_seconds,
        check_invariants: options.check_invariants,
        ..Default::default()
    }
}

/// Runs trial `trial` of `spec` with the global method. Failures of any kind
/// are recorded in the status.
pub fn run_trial(spec: &InstanceSpec, trial: usize, options: &RunOptions) -> TrialResult {
    let (data_seed, iterate_seed) = trial_seeds(spec.seed, trial as u64);
    let mut result = TrialResult {
        spec: spec.clone(),
        trial_index: trial,
        status: TrialStatus::InstanceError,
        outer_iters: 0,
        wall_time_seconds: 0.0,
        final_kkt_residual: f64::NAN,
        final_error: None,
        cr_iters_total: 0,
        violations: BTreeMap::new(),
    };
    let Ok(built) = spec.build(data_seed) else {
        return result;
    };
    let problem = built.problem();
    let w0 = initial_iterate(problem, built.x0().clone(), &mut seeded(iterate_seed));
    let clock = StdClock::new();
    let Ok(report) = global_solve(problem, w0, &global_config(spec, options), &clock) else {
        return result;
    };
    result.status = TrialStatus::Solved(report.status);
    result.outer_iters = report.iterations;
    result.wall_time_seconds = report.elapsed;
    result.final_kkt_residual = report.final_kkt_residual;
    result.final_error = built.solution().map(|x| (report.final_iterate.x.matrix() - x).norm());
    result.cr_iters_total = report.cr_iterations_total;
    result.violations = count_violations(&report);
    result
}

fn count_violations(report: &SolveReport) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for v in &report.violations {
        *out.entry(v.check).or_insert(0) += 1;
    }
    out
}

/// Runs `trials` trials of every spec on `jobs` threads. Results come back
/// ordered by spec, then trial index, whatever the scheduling.
pub fn run_bench(specs: &[InstanceSpec], trials: usize, jobs: usize, options: &RunOptions) -> Vec<TrialResult> {
    let tasks: Vec<(usize, usize)> = (0..specs.len()).flat_map(|s| (0..trials).map(move |t| (s, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| tasks.par_iter().map(|&(s, t)| run_trial(&specs[s], t, options)).collect())
}

/// Aggregate over the trials of one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub spec: InstanceSpec,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Means and median over successful trials; `NaN` without successes.
    pub mean_time: f64,
    pub mean_iters: f64,
    pub median_iters: f64,
    /// Solver time over all trials.
    pub total_time: f64,
    /// Mean final error over successful trials with a known solution.
    pub mean_error: Option<f64>,
    pub violations: BTreeMap<&'static str, usize>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Groups consecutive results of the same spec.
pub fn summarize(results: &[TrialResult]) -> Vec<Summary> {
    let mut out: Vec<Summary> = Vec::new();
    for group in results.chunk_by(|a, b| a.spec == b.spec) {
        let ok: Vec<&TrialResult> = group.iter().filter(|r| r.status.is_success()).collect();
        let times: Vec<f64> = ok.iter().map(|r| r.wall_time_seconds).collect();
        let iters: Vec<f64> = ok.iter().map(|r| r.outer_iters as f64).collect();
        let errors: Vec<f64> = ok.iter().filter_map(|r| r.final_error).collect();
        let mut violations = BTreeMap::new();
        for r in group {
            for (k, n) in &r.violations {
                *violations.entry(*k).or_insert(0) += n;
            }
        }
        out.push(Summary {
            spec: group[0].spec.clone(),
            trials: group.len(),
            successes: ok.len(),
            success_rate: ok.len() as f64 / group.len() as f64,
            mean_time: mean(&times),
            mean_iters: mean(&iters),
            median_iters: median(&iters),
            total_time: group.iter().map(|r| r.wall_time_seconds).sum(),
            mean_error: (!errors.is_empty()).then(|| mean(&errors)),
            violations,
        });
    }
    out
}
