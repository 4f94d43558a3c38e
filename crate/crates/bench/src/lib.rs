//! Benchmark harness for the trisaddle solver stack: experiment specs,
//! table generation mirroring the reference tables, and the spectral
//! verification command.

pub mod run;
pub mod spec;
pub mod verify;

pub use run::{
    run_experiment, run_suite, run_suite_parallel, RunOutcome, SuiteReport, TableRow,
};
pub use spec::{parse_config, ExperimentSpec, ProblemKind, ResolvedSpec, SolverKind};
pub use verify::{verify_cmd, BenchVerifyReport, VERIFY_MAX_ORDER};
