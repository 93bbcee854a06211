//! `metrics`: hypervolume and normalized sparsity of archive files against a
//! shared reference point.

use comoga_core::front::{hypervolume, hypervolume_mc, normalized_sparsity, reference_point, ParetoArchive};
use serde::Serialize;

use super::Outputs;
use crate::config::MetricsConfig;
use crate::error::{CliError, Result};
use crate::formats::{read_json, to_json_string, ArchiveFile, MetricReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveMetrics {
    pub path: String,
    pub metrics: MetricReport,
    pub monte_carlo: Option<MonteCarloEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config: MetricsConfig,
    pub reference: Option<Vec<f64>>,
    pub archives: Vec<ArchiveMetrics>,
}

pub fn run(config: &MetricsConfig) -> Result<(MetricsReport, Outputs)> {
    config.validate()?;
    let archives: Vec<ParetoArchive> = config.fronts.iter().map(|p| read_json::<ArchiveFile>(p)?.to_archive()).collect::<Result<_>>()?;
    let dims: Vec<usize> = archives.iter().filter_map(ParetoArchive::dim).collect();
    if let Some(d) = dims.first() {
        if dims.iter().any(|x| x != d) {
            return Err(CliError::invalid("fronts", "archives have different numbers of objectives"));
        }
        if let Some(r) = &config.reference {
            if r.len() != *d {
                return Err(CliError::invalid("reference", format!("expected {d} entries, got {}", r.len())));
            }
        }
    }
    let nonempty: Vec<ParetoArchive> = archives.iter().filter(|a| !a.is_empty()).cloned().collect();
    let reference = match &config.reference {
        Some(r) => Some(r.clone()),
        None if nonempty.is_empty() => None,
        None => Some(reference_point(&nonempty)?),
    };
    let mut per_archive = Vec::with_capacity(archives.len());
    for (i, (archive, path)) in archives.iter().zip(&config.fronts).enumerate() {
        let (hv, mc) = match (&reference, archive.is_empty()) {
            (Some(r), false) => {
                let hv = hypervolume(archive, r)?;
                let mc = if config.mc_samples > 0 {
                    let (estimate, std_error) = hypervolume_mc(archive, r, config.mc_samples, config.seed.wrapping_add(i as u64))?;
                    Some(MonteCarloEstimate { estimate, std_error })
                } else {
                    None
                };
                (hv, mc)
            }
            _ => (0.0, None),
        };
        per_archive.push(ArchiveMetrics {
            path: path.display().to_string(),
            metrics: MetricReport {
                hypervolume: hv,
                normalized_sparsity: normalized_sparsity(archive),
                n_points: archive.len(),
                reference: reference.clone(),
            },
            monte_carlo: mc,
        });
    }
    let report = MetricsReport { config: config.clone(), reference, archives: per_archive };
    let mut outputs = Outputs::default();
    outputs.add("metrics.json", to_json_string(&report));
    Ok((report, outputs))
}
