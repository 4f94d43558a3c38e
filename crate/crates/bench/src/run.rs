//! Experiment execution and table emission.

use std::time::Instant;

use serde::Serialize;

use trisaddle::krylov::{fgmres_solve, gmres_solve, IterationConfig, SolveStatus};
use trisaddle::precond::build_preconditioner;
use trisaddle::saddle::{residual_metrics, SystemOperator};

use crate::spec::{ExperimentSpec, SolverKind};

/// How a row ended. `IterationCap` mirrors the double-dagger marker and
/// `TimeBudget` the dagger marker of the reference tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Converged,
    IterationCap,
    TimeBudget,
    Breakdown,
    InnerFailure,
    BuildError,
}

impl RunOutcome {
    pub fn is_dnc(self) -> bool {
        matches!(
            self,
            RunOutcome::IterationCap
                | RunOutcome::TimeBudget
                | RunOutcome::Breakdown
                | RunOutcome::InnerFailure
        )
    }
}

/// One table row: iteration count (or a DNC marker), setup and solve
/// times, and the two accuracy columns measured against the all-ones
/// solution.
#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub label: String,
    pub iters: Option<usize>,
    pub prec_cpu: f64,
    pub cpu: f64,
    pub total_cpu: f64,
    pub r_k: Option<f64>,
    pub e_k: Option<f64>,
    pub status: String,
    pub outcome: RunOutcome,
    /// Relative residual per iteration, for reproducibility checks.
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl TableRow {
    fn error(label: String, detail: String) -> Self {
        TableRow {
            label,
            iters: None,
            prec_cpu: 0.0,
            cpu: 0.0,
            total_cpu: 0.0,
            r_k: None,
            e_k: None,
            status: detail,
            outcome: RunOutcome::BuildError,
            history: Vec::new(),
        }
    }

    /// Iteration cell: the count, or the marker for a capped run.
    pub fn iters_cell(&self) -> String {
        match (self.outcome, self.iters) {
            (RunOutcome::IterationCap, _) => "\u{2021}".to_string(),
            (RunOutcome::TimeBudget, _) => "\u{2020}".to_string(),
            (_, Some(k)) => k.to_string(),
            (_, None) => "-".to_string(),
        }
    }
}

/// Run one experiment end to end. Failures of any stage come back as a
/// row whose status holds the error text; this never panics.
pub fn run_experiment(spec: &ExperimentSpec) -> TableRow {
    let resolved = match spec.resolve() {
        Ok(r) => r,
        Err(e) => return TableRow::error("invalid experiment".to_string(), e.to_string()),
    };
    let label = resolved.label.clone();
    let system = match spec.build_system() {
        Ok(s) => s,
        Err(e) => return TableRow::error(label, format!("problem build failed: {e}")),
    };

    let setup_start = Instant::now();
    let precond =
        match build_preconditioner(&system, resolved.kind, Some(resolved.params), resolved.inner) {
            Ok(p) => p,
            Err(e) => {
                return TableRow::error(label, format!("preconditioner build failed: {e}"))
            }
        };
    let prec_cpu = setup_start.elapsed().as_secs_f64();

    let rhs = system.rhs_vector();
    let op = SystemOperator::new(&system);
    let config = IterationConfig {
        tol: resolved.tol,
        maxit: resolved.maxit,
        restart: None,
        record_history: true,
    };
    let solve_start = Instant::now();
    let solved = match resolved.spec.solver {
        SolverKind::Gmres => gmres_solve(&op, &rhs, Some(&precond), &config),
        SolverKind::Fgmres => fgmres_solve(&op, &rhs, Some(&precond), &config),
    };
    let cpu = solve_start.elapsed().as_secs_f64();
    let (solution, report) = match solved {
        Ok(pair) => pair,
        Err(e) => return TableRow::error(label, format!("solver failed: {e}")),
    };

    let ones = vec![1.0; system.total_order()];
    let metrics = match residual_metrics(&system, &solution, Some(&ones)) {
        Ok(m) => m,
        Err(e) => return TableRow::error(label, format!("metrics failed: {e}")),
    };

    let over_budget = cpu > resolved.time_budget_seconds;
    let (outcome, status) = match report.status {
        SolveStatus::Converged => (
            RunOutcome::Converged,
            format!("converged in {} iterations", report.iterations),
        ),
        SolveStatus::MaxIterations if over_budget => (
            RunOutcome::TimeBudget,
            format!(
                "not converged within {:.0} s (R_k {:.2e} after {} iterations)",
                resolved.time_budget_seconds, metrics.relative_residual, report.iterations
            ),
        ),
        SolveStatus::MaxIterations => (
            RunOutcome::IterationCap,
            format!(
                "hit maxit {} (R_k {:.2e})",
                resolved.maxit, metrics.relative_residual
            ),
        ),
        SolveStatus::Breakdown => (
            RunOutcome::Breakdown,
            format!(
                "breakdown after {} iterations: {}",
                report.iterations,
                report.failure_detail.as_deref().unwrap_or("no detail")
            ),
        ),
        SolveStatus::InnerSolveFailure => (
            RunOutcome::InnerFailure,
            format!(
                "inner solve failed: {}",
                report.failure_detail.as_deref().unwrap_or("no detail")
            ),
        ),
    };

    TableRow {
        label,
        iters: Some(report.iterations),
        prec_cpu,
        cpu,
        total_cpu: prec_cpu + cpu,
        r_k: Some(metrics.relative_residual),
        e_k: metrics.relative_error,
        status,
        outcome,
        history: report.residual_history,
    }
}

/// Rows for a whole config, in config order.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub rows: Vec<TableRow>,
}

impl SuiteReport {
    pub fn any_dnc(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_dnc())
    }

    pub fn any_error(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.outcome == RunOutcome::BuildError)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,iters,prec_cpu,cpu,total_cpu,r_k,e_k,status\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{},{},{}\n",
                csv_field(&row.label),
                csv_field(&row.iters_cell()),
                row.prec_cpu,
                row.cpu,
                row.total_cpu,
                opt_sci(row.r_k),
                opt_sci(row.e_k),
                csv_field(&row.status),
            ));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| label | Iters | Prec.CPU | CPU | Total.CPU | R_k | E_k | status |\n\
             |---|---|---|---|---|---|---|---|\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {:.4} | {} | {} | {} |\n",
                row.label.replace('|', "/"),
                row.iters_cell(),
                row.prec_cpu,
                row.cpu,
                row.total_cpu,
                opt_sci(row.r_k),
                opt_sci(row.e_k),
                row.status.replace('|', "/"),
            ));
        }
        out
    }
}

fn opt_sci(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3e}"),
        None => "-".to_string(),
    }
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Run experiments one after another; timings do not contend.
pub fn run_suite(specs: &[ExperimentSpec]) -> SuiteReport {
    SuiteReport {
        rows: specs.iter().map(run_experiment).collect(),
    }
}

/// Run experiments on one thread each. Wall-clock timers still run per
/// experiment, but the CPU columns contend and become unreliable.
pub fn run_suite_parallel(specs: &[ExperimentSpec]) -> SuiteReport {
    let mut rows: Vec<Option<TableRow>> = vec![None; specs.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| scope.spawn(move || run_experiment(spec)))
            .collect();
        for (slot, handle) in rows.iter_mut().zip(handles) {
            *slot = Some(handle.join().unwrap_or_else(|_| {
                TableRow::error("panicked".to_string(), "experiment thread panicked".to_string())
            }));
        }
    });
    SuiteReport {
        rows: rows.into_iter().map(|r| r.expect("joined")).collect(),
    }
}
