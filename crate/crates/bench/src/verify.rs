//! Spectral verification command: dense eigencheck plus the (p, q) sum
//! interval, reported as JSON.

use serde::Serialize;

use trisaddle::error::{Error, Result};
use trisaddle::precond::PreconditionerParams;
use trisaddle::spectral::{pq_sum_interval, verify_theorem2, PqSampler, VerificationReport};

use crate::spec::ExperimentSpec;

/// Dense verification is meant for small instances; above this order the
/// eigensolve is too slow to be useful from the command line.
pub const VERIFY_MAX_ORDER: usize = 600;

/// Relative widening applied to the interval before the containment test,
/// so boundary samples do not flip the flag on rounding noise.
const INTERVAL_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct SampledPqRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub seed: u64,
}

/// Everything `bench verify` prints: the eigenstructure report plus the
/// predicted p+q interval and the sampled range that must sit inside it.
#[derive(Clone, Debug, Serialize)]
pub struct BenchVerifyReport {
    pub label: String,
    pub report: VerificationReport,
    pub pq_interval: [f64; 2],
    pub sampled_pq: SampledPqRange,
    pub interval_contains_samples: bool,
    pub passed: bool,
}

/// Build the instance described by `spec`, run the dense spectral checks,
/// and sample p+q over `samples` unit-sphere vectors.
pub fn verify_cmd(spec: &ExperimentSpec, samples: usize, seed: u64) -> Result<BenchVerifyReport> {
    let resolved = spec.resolve()?;
    let system = spec.build_system()?;
    if system.total_order() > VERIFY_MAX_ORDER {
        return Err(Error::OrderGuard {
            order: system.total_order(),
            limit: VERIFY_MAX_ORDER,
        });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }

    let params = PreconditionerParams::new(resolved.params.alpha, resolved.params.beta)?;
    let report = verify_theorem2(&system, params, resolved.tol)?;

    let (lo, hi) = pq_sum_interval(&system, params)?;
    let sampler = PqSampler::new(&system, params)?;
    let sampled = sampler.sample_unit_sphere(samples, seed)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for q in &sampled {
        let sum = q.p + q.q;
        min = min.min(sum);
        max = max.max(sum);
    }

    let slack = INTERVAL_SLACK * (1.0 + hi.abs().max(lo.abs()));
    let contained = min >= lo - slack && max <= hi + slack;

    let passed = report.passed && contained;
    Ok(BenchVerifyReport {
        label: resolved.label,
        report,
        pq_interval: [lo, hi],
        sampled_pq: SampledPqRange {
            min,
            max,
            count: sampled.len(),
            seed,
        },
        interval_contains_samples: contained,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{ProblemKind, SolverKind};

    #[test]
    fn example1_p2_verifies_and_brackets_samples() {
        let mut spec = ExperimentSpec::new(ProblemKind::Example1, SolverKind::Gmres);
        spec.p = Some(2);
        let out = verify_cmd(&spec, 200, 7).unwrap();
        // order 8 system with m = 4: exactly n - m = 4 unit eigenvalues
        assert_eq!(out.report.expected_unit_count, 4);
        assert_eq!(out.report.unit_eigenvalue_count, 4);
        assert!(out.report.max_cubic_residual <= 1e-6);
        assert!(out.interval_contains_samples);
        assert!(out.passed);
        assert!(out.pq_interval[0] <= out.sampled_pq.min);
        assert_eq!(out.sampled_pq.count, 200);
    }

    #[test]
    fn order_guard_blocks_large_instances() {
        let mut spec = ExperimentSpec::new(ProblemKind::Example1, SolverKind::Gmres);
        spec.p = Some(16);
        let err = verify_cmd(&spec, 10, 1).unwrap_err();
        assert!(matches!(err, Error::OrderGuard { .. }));
    }

    #[test]
    fn json_round_trip_has_expected_fields() {
        let mut spec = ExperimentSpec::new(ProblemKind::Random, SolverKind::Gmres);
        spec.n = Some(6);
        spec.m = Some(3);
        spec.l = Some(2);
        spec.seed = Some(3);
        let out = verify_cmd(&spec, 50, 9).unwrap();
        let text = serde_json::to_string_pretty(&out).unwrap();
        for key in [
            "pq_interval",
            "sampled_pq",
            "unit_eigenvalue_count",
            "max_cubic_residual",
            "interval_contains_samples",
        ] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
    }
}
