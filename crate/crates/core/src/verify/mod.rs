//! Monte Carlo verification: estimators built from simulated paths and
//! branching systems, tested against closed forms and solver output.

mod checks;
pub mod stats;
mod suites;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use checks::{
    check_cdf, check_close, check_density, check_holds, check_laplace_functional, check_mean, check_moment,
    check_pmf, check_proportion, check_scalar_laplace, check_two_sample, uniform_edges, CheckKind, CheckRecord,
    Thresholds, MIN_EXPECTED_COUNT, MIN_SCALAR_SAMPLES,
};
pub use suites::{run_checks, Suite, SuiteConfig, CMJ_TRUNCATION};

use crate::error::Result;
use crate::levy_model::LevyModel;
use crate::rng::GENERATOR_ID;

/// Outcome of one suite run. The runtime is kept out of the serialized
/// form so that equal inputs give byte-identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub suite: String,
    pub n_paths: usize,
    pub seed: u64,
    pub generator: String,
    pub checks: Vec<CheckRecord>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per check, tab separated, with a header line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("suite\tname\tkind\tn\testimate\tstd_error\tpredicted\tstatistic\tp_value\tverdict\n");
        for c in &self.checks {
            let kind = serde_json::to_value(c.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let p = c.p_value.map_or_else(|| "NA".to_string(), |p| format!("{p:.6e}"));
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.10e}\t{:.6e}\t{:.10e}\t{:.6e}\t{}\t{}\n",
                self.suite,
                c.name,
                kind,
                c.n,
                c.estimate,
                c.std_error,
                c.predicted,
                c.statistic,
                p,
                if c.pass { "pass" } else { "fail" }
            ));
        }
        s
    }
}

/// Runs a suite and wraps the records into a report.
pub fn run_suite(suite: Suite, model: &LevyModel, cfg: &SuiteConfig) -> Result<McReport> {
    let started = Instant::now();
    let checks = run_checks(suite, model, cfg)?;
    Ok(McReport {
        suite: suite.name().to_string(),
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        generator: GENERATOR_ID.to_string(),
        checks,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}
