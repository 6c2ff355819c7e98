//! Registry and runner for the named identity checks.
//!
//! Every check produces a [`Report`] listing the compared coefficients with
//! their z-scores (statistical) or residual/tolerance ratios (deterministic),
//! and a verdict under a [`Policy`].  Reports depend only on the check
//! settings, the seed and the build.

pub mod quadrature;
pub mod report;
mod registry;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphTower};
use crate::sampler::ChainConfig;
pub use registry::{CheckInfo, Fixture, CHECKS};
pub use report::{Coefficient, Policy, Report, Verdict};

/// What to run and how to judge it.
#[derive(Debug, Clone)]
pub struct CheckSpec {
    pub id: String,
    /// Replaces the bundled graph fixtures of graph-based checks.
    pub graph: Option<Graph>,
    /// Replaces the bundled tower of tower-based checks.
    pub tower: Option<GraphTower>,
    pub chain: ChainConfig,
    /// `None` uses the check's default threshold with multiplicity correction.
    pub policy: Option<Policy>,
    /// Overrides the deterministic tolerance.
    pub tolerance: Option<f64>,
    /// Overrides the scaling parameters `[a, b]` (applied uniformly on the free vertices).
    pub ab: Option<(f64, f64)>,
}

impl CheckSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            graph: None,
            tower: None,
            chain: ChainConfig::default(),
            policy: None,
            tolerance: None,
            ab: None,
        }
    }

    pub fn with_chain(mut self, chain: ChainConfig) -> Self {
        self.chain = chain;
        self
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = Some(policy);
        self
    }
}

/// Look up a registered check.
pub fn check_info(id: &str) -> Result<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownCheck(id.to_string()))
}

pub fn check_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

/// Run one check.  Unknown ids and invalid configurations are errors; a check
/// that fails while running yields a failing report carrying the error.
pub fn run_check(spec: &CheckSpec) -> Result<Report> {
    let info = check_info(&spec.id)?;
    spec.chain.validate()?;
    let policy = spec.policy.unwrap_or(Policy { z_threshold: info.z_threshold, bonferroni: true });
    let start = Instant::now();
    let outcome = (info.run)(spec);
    let runtime_s = start.elapsed().as_secs_f64();
    let (coefficients, notes, error) = match outcome {
        Ok(out) => (out.coefficients, out.notes, None),
        Err(e @ (Error::Fixture(_) | Error::UnknownCheck(_) | Error::Config(_))) => return Err(e),
        Err(e) => (vec![], vec![], Some(e.to_string())),
    };
    let (ok, threshold) = policy.judge(&coefficients);
    Ok(Report {
        check: spec.id.clone(),
        verdict: if ok && error.is_none() { Verdict::Pass } else { Verdict::Fail },
        seed: spec.chain.seed,
        coefficients,
        runtime_s,
        threshold,
        notes,
        error,
    })
}

/// Aggregate of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<Report>,
    pub passed: usize,
    pub failed: usize,
    pub runtime_s: f64,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Ids matching a glob pattern, in registry order.
pub fn matching_ids(filter: &str) -> Result<Vec<&'static str>> {
    let pat = glob::Pattern::new(filter).map_err(|e| Error::Config(format!("bad filter `{filter}`: {e}")))?;
    Ok(CHECKS.iter().map(|c| c.id).filter(|id| pat.matches(id)).collect())
}

/// Run every check whose id matches `filter` with up to `parallelism`
/// checks at a time; `base` supplies the chain settings and overrides.
pub fn run_suite(filter: &str, parallelism: usize, base: &CheckSpec) -> Result<SuiteReport> {
    let ids = matching_ids(filter)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let reports: Vec<Result<Report>> = pool.install(|| {
        ids.par_iter()
            .map(|id| {
                let spec = CheckSpec { id: id.to_string(), ..base.clone() };
                run_check(&spec)
            })
            .collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().filter(|r| r.passed()).count();
    Ok(SuiteReport { failed: reports.len() - passed, passed, reports, runtime_s: start.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids() {
        let ids = check_ids();
        assert_eq!(ids.len(), 17);
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 17);
        assert_eq!(matching_ids("martingale-*").unwrap().len(), 3);
        assert!(matches!(run_check(&CheckSpec::new("nope")), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn deterministic_checks_pass() {
        for id in ["jacobian-sdet", "spinor-identity", "rho-equivalence", "marginal-lemma", "A-scale-invariance"] {
            let r = run_check(&CheckSpec::new(id)).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let r = run_check(&CheckSpec::new("jacobian-sdet")).unwrap();
        assert!(r.coefficients.iter().all(|c| c.z == 0.0));
    }

    #[test]
    fn zero_threshold_fails() {
        let spec = CheckSpec::new("jacobian-sdet").with_policy(Policy { z_threshold: 0.0, bonferroni: false });
        assert!(!run_check(&spec).unwrap().passed());
    }
}
