//! `selftest`: oracle-equivalence and finite-difference suites.

use serde::Serialize;

use super::Outputs;
use crate::config::SelftestConfig;
use crate::error::Result;
use crate::formats::to_json_string;
use crate::selftest::{format_table, run_all, SuiteOutcome};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub config: SelftestConfig,
    pub passed: bool,
    pub suites: Vec<SuiteOutcome>,
}

pub fn run(config: &SelftestConfig) -> Result<(SelftestReport, Outputs)> {
    config.validate()?;
    let suites = run_all(config);
    let report = SelftestReport { config: config.clone(), passed: suites.iter().all(|s| s.passed), suites };
    let mut outputs = Outputs::default();
    outputs.add("selftest.txt", format_table(&report.suites));
    outputs.add("selftest.json", to_json_string(&report));
    Ok((report, outputs))
}
