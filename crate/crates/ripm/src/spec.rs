//! Benchmark instance descriptions and the built-in suites.

use std::fmt;
use std::path::Path;

use ripm_core::instances::{gen_model_ob, gen_model_st, gen_nlrm, Instance, ModelOb, ModelSt, Nlrm};
use ripm_core::{Point, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Nlrm,
    ModelSt,
    ModelOb,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Nlrm => "nlrm",
            ProblemKind::ModelSt => "model_st",
            ProblemKind::ModelOb => "model_ob",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nlrm" => Some(ProblemKind::Nlrm),
            "model_st" => Some(ProblemKind::ModelSt),
            "model_ob" => Some(ProblemKind::ModelOb),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_max_outer() -> usize {
    10_000
}

/// One benchmark configuration. `dims` is `(m, n, r)` for NLRM and `(n, k)`
/// for the PCA models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub problem: ProblemKind,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub noise: f64,
    pub seed: u64,
    pub tol_kkt: f64,
    pub t_max_seconds: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        if self.dims.contains(&0) {
            return bad(format!("dimensions must be positive, got {:?}", self.dims));
        }
        match (self.problem, self.dims.as_slice()) {
            (ProblemKind::Nlrm, &[m, n, r]) => {
                if r >= m.min(n) {
                    return bad(format!("rank {r} must be below min({m}, {n})"));
                }
            }
            (ProblemKind::Nlrm, d) => return bad(format!("nlrm needs dims m,n,r, got {d:?}")),
            (_, &[n, k]) => {
                if k > n {
                    return bad(format!("k = {k} exceeds n = {n}"));
                }
            }
            (p, d) => return bad(format!("{p} needs dims n,k, got {d:?}")),
        }
        if self.problem != ProblemKind::Nlrm && self.noise != 0.0 {
            return bad(format!("noise applies to nlrm only, got {} for {}", self.noise, self.problem));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be finite and nonnegative, got {}", self.noise));
        }
        if !(self.tol_kkt > 0.0) || !(self.t_max_seconds > 0.0) {
            return bad("tolerance and time limit must be positive".into());
        }
        Ok(())
    }

    /// `20x16x2` style label.
    pub fn dims_label(&self) -> String {
        self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
    }

    /// Generates the instance from `data_seed`.
    pub fn build(&self, data_seed: u64) -> Result<Built> {
        self.validate()?;
        let d = &self.dims;
        Ok(match self.problem {
            ProblemKind::Nlrm => Built::Nlrm(gen_nlrm(d[0], d[1], d[2], self.noise, data_seed)?),
            ProblemKind::ModelSt => Built::ModelSt(gen_model_st(d[0], d[1], data_seed)?),
            ProblemKind::ModelOb => Built::ModelOb(gen_model_ob(d[0], d[1], data_seed)?),
        })
    }
}

/// Parses `20,16,2` or `20x16x2`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split([',', 'x'])
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Invalid(format!("bad dimension list {s:?}"))))
        .collect()
}

/// A generated instance of any benchmark family.
pub enum Built {
    Nlrm(Instance<Nlrm>),
    ModelSt(Instance<ModelSt>),
    ModelOb(Instance<ModelOb>),
}

impl Built {
    pub fn problem(&self) -> &dyn Problem {
        match self {
            Built::Nlrm(i) => &i.problem,
            Built::ModelSt(i) => &i.problem,
            Built::ModelOb(i) => &i.problem,
        }
    }

    pub fn x0(&self) -> &Point {
        match self {
            Built::Nlrm(i) => &i.x0,
            Built::ModelSt(i) => &i.x0,
            Built::ModelOb(i) => &i.x0,
        }
    }

    /// Known solution, if any.
    pub fn solution(&self) -> Option<&nalgebra::DMatrix<f64>> {
        match self {
            Built::Nlrm(i) => i.solution.as_ref(),
            Built::ModelSt(i) => i.solution.as_ref(),
            Built::ModelOb(i) => i.solution.as_ref(),
        }
    }
}

/// Overrides applied to every entry of a suite.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuiteOverrides {
    pub seed: Option<u64>,
    pub tol_kkt: Option<f64>,
    pub t_max_seconds: Option<f64>,
    pub max_outer: Option<usize>,
}

impl SuiteOverrides {
    pub fn apply(&self, spec: &mut InstanceSpec) {
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.tol_kkt {
            spec.tol_kkt = v;
        }
        if let Some(v) = self.t_max_seconds {
            spec.t_max_seconds = v;
        }
        if let Some(v) = self.max_outer {
            spec.max_outer = v;
        }
    }
}

fn spec(problem: ProblemKind, dims: &[usize], noise: f64, tol_kkt: f64, t_max_seconds: f64) -> InstanceSpec {
    InstanceSpec {
        problem,
        dims: dims.to_vec(),
        noise,
        seed: 0,
        tol_kkt,
        t_max_seconds,
        max_outer: default_max_outer(),
    }
}

/// NLRM at the three sizes and three noise levels, `tol 1e-8`, 180 s.
pub fn paper1() -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    for dims in [[20, 16, 2], [30, 24, 3], [40, 32, 4]] {
        for noise in [0.0, 0.001, 0.01] {
            out.push(spec(ProblemKind::Nlrm, &dims, noise, 1e-8, 180.0));
        }
    }
    out
}

fn paper2(problem: ProblemKind) -> Vec<InstanceSpec> {
    [[40, 8], [50, 10], [60, 12], [70, 14]]
        .iter()
        .map(|d| spec(problem, d, 0.0, 1e-6, 600.0))
        .collect()
}

/// Model_St at `(40,8)` through `(70,14)`, `tol 1e-6`, 600 s.
pub fn paper2_st() -> Vec<InstanceSpec> {
    paper2(ProblemKind::ModelSt)
}

/// Model_Ob at the same sizes as [`paper2_st`].
pub fn paper2_ob() -> Vec<InstanceSpec> {
    paper2(ProblemKind::ModelOb)
}

/// Resolves a built-in suite name or reads a JSON array of specs.
pub fn load_suite(name: &str) -> Result<Vec<InstanceSpec>> {
    let specs = match name {
        "paper1" => paper1(),
        "paper2-st" => paper2_st(),
        "paper2-ob" => paper2_ob(),
        path => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?;
            parse_suite_json(&text, Path::new(path))?
        }
    };
    Ok(specs)
}

pub fn parse_suite_json(text: &str, path: &Path) -> Result<Vec<InstanceSpec>> {
    let specs: Vec<InstanceSpec> = serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}
