use std::fs::File;
use std::io::{self, BufWriter};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ripm::output::{summary_table, write_results, write_trace};
use ripm::runner::{global_config, run_bench, summarize, trial_seeds, RunOptions};
use ripm::spec::{load_suite, parse_dims, InstanceSpec, ProblemKind, SuiteOverrides};
use ripm::{check, Error, Result, StdClock};
use ripm_core::global::global_solve;
use ripm_core::instances::{initial_iterate, seeded};
use ripm_core::local::{local_solve, LocalConfig};

#[derive(Parser)]
#[command(name = "ripm", version, about = "Riemannian interior point solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Global,
    Local,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one generated instance and print the report.
    Solve {
        #[arg(long, value_parser = ["nlrm", "model_st", "model_ob"])]
        problem: String,
        /// `m,n,r` for nlrm, `n,k` otherwise.
        #[arg(long)]
        dims: String,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Algorithm::Global)]
        algorithm: Algorithm,
        /// KKT residual tolerance; 1e-8 for nlrm and 1e-6 otherwise.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, default_value_t = f64::INFINITY)]
        tmax: f64,
        /// Write the per-iteration trajectory as CSV.
        #[arg(long)]
        trace: Option<String>,
    },
    /// Run a suite of seeded trials and write a results CSV.
    Bench {
        /// `paper1`, `paper2-st`, `paper2-ob` or a JSON file of specs.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        max_outer: Option<usize>,
        #[arg(long)]
        out: String,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        /// Record run-time invariant violations (always on in debug builds).
        #[arg(long)]
        check_invariants: bool,
    },
    /// Run the oracle and derivative check suite.
    Check {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem: &str,
    dims: &str,
    noise: f64,
    seed: u64,
    algorithm: Algorithm,
    tol: Option<f64>,
    max_iter: Option<usize>,
    tmax: f64,
    trace: Option<String>,
) -> Result<()> {
    let kind = ProblemKind::parse(problem).expect("validated by clap");
    let default_tol = if kind == ProblemKind::Nlrm { 1e-8 } else { 1e-6 };
    let spec = InstanceSpec {
        problem: kind,
        dims: parse_dims(dims)?,
        noise,
        seed,
        tol_kkt: tol.unwrap_or(default_tol),
        t_max_seconds: tmax,
        max_outer: max_iter.unwrap_or(10_000),
    };
    let (data_seed, iterate_seed) = trial_seeds(seed, 0);
    let built = spec.build(data_seed)?;
    let p = built.problem();
    let w0 = initial_iterate(p, built.x0().clone(), &mut seeded(iterate_seed));
    let clock = StdClock::new();
    let report = match algorithm {
        Algorithm::Global => global_solve(p, w0, &global_config(&spec, &RunOptions::default()), &clock)?,
        Algorithm::Local => {
            let cfg = LocalConfig {
                tol_kkt: spec.tol_kkt,
                max_iter: max_iter.unwrap_or(LocalConfig::default().max_iter),
                ..Default::default()
            };
            local_solve(p, w0, &cfg, &clock)?
        }
    };
    println!("problem       {} {} noise {}", kind, spec.dims_label(), noise);
    println!("status        {}", report.status);
    println!("iterations    {}", report.iterations);
    println!("kkt_residual  {:e}", report.final_kkt_residual);
    println!("|F|           {:e}", report.final_f_norm);
    println!("cr_iterations {}", report.cr_iterations_total);
    println!("time_s        {:.3}", report.elapsed);
    if let Some(x) = built.solution() {
        println!("error         {:e}", (report.final_iterate.x.matrix() - x).norm());
    }
    if !report.violations.is_empty() {
        println!("violations    {}", report.violations.len());
    }
    if let Some(&k) = report.large_multiplier_iterations.first() {
        eprintln!("warning: multipliers above 1e8 from iteration {k}");
    }
    if let Some(path) = trace {
        let f = File::create(&path).map_err(io_err(&path))?;
        write_trace(BufWriter::new(f), &report)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    suite: &str,
    trials: usize,
    overrides: SuiteOverrides,
    out: &str,
    jobs: Option<usize>,
    check_invariants: bool,
) -> Result<()> {
    let mut specs = load_suite(suite)?;
    for s in &mut specs {
        overrides.apply(s);
    }
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let options = RunOptions {
        check_invariants: check_invariants || RunOptions::default().check_invariants,
    };
    let results = run_bench(&specs, trials, jobs, &options);
    let f = File::create(out).map_err(io_err(out))?;
    write_results(BufWriter::new(f), &results)?;
    print!("{}", summary_table(&summarize(&results)));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            problem,
            dims,
            noise,
            seed,
            algorithm,
            tol,
            max_iter,
            tmax,
            trace,
        } => solve(&problem, &dims, noise, seed, algorithm, tol, max_iter, tmax, trace),
        Command::Bench {
            suite,
            trials,
            seed,
            tol,
            tmax,
            max_outer,
            out,
            jobs,
            check_invariants,
        } => {
            let overrides = SuiteOverrides {
                seed,
                tol_kkt: tol,
                t_max_seconds: tmax,
                max_outer,
            };
            bench(&suite, trials, overrides, &out, jobs, check_invariants)
        }
        Command::Check { seed } => {
            let outcomes = check::run_all(seed);
            for o in &outcomes {
                println!("{o}");
            }
            return if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
