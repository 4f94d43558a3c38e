//! Experiment descriptions and their resolution to runnable pieces.
//!
//! A spec is a flat key-value record (one `[[experiment]]` table in a
//! TOML config, or one set of CLI flags). Unset fields fall back to the
//! benchmark defaults: tol 1e-6, maxit 1000, a 1000 second budget,
//! problem-specific (alpha, beta), and an inner mode implied by the
//! solver (Cholesky under plain GMRES, CG under FGMRES).

use serde::{Deserialize, Serialize};

use trisaddle::precond::{InnerMode, PrecondKind, PreconditionerParams};
use trisaddle::problems::{
    gen_example1, gen_example2, gen_random_small, Example1Config, Example2Config,
};
use trisaddle::saddle::SaddlePointSystem;
use trisaddle::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAXIT: usize = 1000;
pub const DEFAULT_TIME_BUDGET_SECONDS: f64 = 1000.0;
pub const DEFAULT_RANDOM_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Example1,
    Example2,
    Random,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "example1" | "ex1" => Ok(ProblemKind::Example1),
            "example2" | "ex2" => Ok(ProblemKind::Example2),
            "random" => Ok(ProblemKind::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown problem '{other}' (expected example1, example2 or random)"
            ))),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::Example1 => "example1",
            ProblemKind::Example2 => "example2",
            ProblemKind::Random => "random",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Gmres,
    Fgmres,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gmres" => Ok(SolverKind::Gmres),
            "fgmres" => Ok(SolverKind::Fgmres),
            other => Err(Error::InvalidArgument(format!(
                "unknown solver '{other}' (expected gmres or fgmres)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Gmres => "gmres",
            SolverKind::Fgmres => "fgmres",
        })
    }
}

/// One benchmark experiment, before defaults are resolved.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemKind,
    /// Grid parameter for example1/example2.
    pub p: Option<usize>,
    /// Dimensions for the random problem.
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub l: Option<usize>,
    pub seed: Option<u64>,
    pub solver: SolverKind,
    /// Preconditioner name: i, m, bd1, bd2, p1, p2 or p3.
    pub precond: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Inner solve mode: chol or cg.
    pub inner: Option<String>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub time_budget_seconds: Option<f64>,
    pub label: Option<String>,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemKind, solver: SolverKind) -> Self {
        ExperimentSpec {
            problem,
            p: None,
            n: None,
            m: None,
            l: None,
            seed: None,
            solver,
            precond: None,
            alpha: None,
            beta: None,
            inner: None,
            tol: None,
            maxit: None,
            time_budget_seconds: None,
            label: None,
        }
    }

    /// Problem-specific default (alpha, beta).
    fn default_params(&self) -> (f64, f64) {
        match self.problem {
            ProblemKind::Example1 | ProblemKind::Random => (1e-3, 1.0),
            ProblemKind::Example2 => (0.1, 1.0),
        }
    }

    /// Fill every optional field, without building anything.
    pub fn resolve(&self) -> Result<ResolvedSpec> {
        let kind: PrecondKind = match &self.precond {
            None => PrecondKind::NewM,
            Some(name) => name.parse()?,
        };
        let (da, db) = self.default_params();
        let params = PreconditionerParams::new(self.alpha.unwrap_or(da), self.beta.unwrap_or(db))?;
        let inner = match &self.inner {
            Some(mode) => mode.parse()?,
            None => match self.solver {
                SolverKind::Gmres => InnerMode::ExactCholesky,
                SolverKind::Fgmres => InnerMode::InexactCg,
            },
        };
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
        }
        let maxit = self.maxit.unwrap_or(DEFAULT_MAXIT);
        if maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be at least 1".into()));
        }
        let budget = self
            .time_budget_seconds
            .unwrap_or(DEFAULT_TIME_BUDGET_SECONDS);
        if !(budget > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time_budget_seconds must be positive, got {budget}"
            )));
        }
        let label = match &self.label {
            Some(text) => text.clone(),
            None => self.default_label(kind, params, inner),
        };
        Ok(ResolvedSpec {
            spec: self.clone(),
            kind,
            params,
            inner,
            tol,
            maxit,
            time_budget_seconds: budget,
            label,
        })
    }

    fn default_label(
        &self,
        kind: PrecondKind,
        params: PreconditionerParams,
        inner: InnerMode,
    ) -> String {
        let problem = match self.problem {
            ProblemKind::Random => format!(
                "random({},{},{})",
                self.n.unwrap_or(0),
                self.m.unwrap_or(0),
                self.l.unwrap_or(0)
            ),
            other => format!("{} p={}", other, self.p.unwrap_or(0)),
        };
        let precond = match kind {
            PrecondKind::Identity => "none".to_string(),
            k => format!(
                "{k}(a={},b={},{})",
                params.alpha,
                params.beta,
                match inner {
                    InnerMode::ExactCholesky => "chol",
                    InnerMode::InexactCg => "cg",
                }
            ),
        };
        format!("{problem} {} {precond}", self.solver)
    }

    /// Build the system this spec describes.
    pub fn build_system(&self) -> Result<SaddlePointSystem> {
        match self.problem {
            ProblemKind::Example1 => {
                let p = self
                    .p
                    .ok_or_else(|| Error::InvalidArgument("example1 needs p".into()))?;
                gen_example1(&Example1Config::new(p))
            }
            ProblemKind::Example2 => {
                let p = self
                    .p
                    .ok_or_else(|| Error::InvalidArgument("example2 needs p".into()))?;
                gen_example2(&Example2Config::new(p))
            }
            ProblemKind::Random => {
                let (n, m, l) = match (self.n, self.m, self.l) {
                    (Some(n), Some(m), Some(l)) => (n, m, l),
                    _ => {
                        return Err(Error::InvalidArgument(
                            "random problem needs n, m and l".into(),
                        ))
                    }
                };
                gen_random_small(n, m, l, self.seed.unwrap_or(DEFAULT_RANDOM_SEED))
            }
        }
    }
}

/// A spec with every default filled in.
#[derive(Clone, Debug)]
pub struct ResolvedSpec {
    pub spec: ExperimentSpec,
    pub kind: PrecondKind,
    pub params: PreconditionerParams,
    pub inner: InnerMode,
    pub tol: f64,
    pub maxit: usize,
    pub time_budget_seconds: f64,
    pub label: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    experiment: Vec<ExperimentSpec>,
}

/// Parse a TOML config: zero or more `[[experiment]]` tables, each a flat
/// key-value record with the same keys as the CLI flags.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentSpec>> {
    let parsed: ConfigFile = toml::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("config parse error: {e}")))?;
    Ok(parsed.experiment)
}
