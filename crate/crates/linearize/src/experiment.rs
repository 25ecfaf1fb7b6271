//! Batch runner: scenarios × seeds, one CSV row per run.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{run_scenario, RunMetrics, Scenario};
use crate::par::prelude::*;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub scenarios: Vec<Scenario>,
    /// Runs per scenario; run k uses seed `scenario.seed + k`.
    pub reps: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.reps == 0 {
            return Err(ExperimentError::Invalid("reps must be at least 1".into()));
        }
        for s in &self.scenarios {
            if s.n == 0 {
                return Err(ExperimentError::Invalid("n must be at least 1".into()));
            }
            if s.max_rounds == 0 {
                return Err(ExperimentError::Invalid("max_rounds must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Concrete runs ordered by (scenario index, seed).
    pub fn runs(&self) -> Vec<Scenario> {
        self.scenarios
            .iter()
            .flat_map(|s| (0..self.reps).map(move |k| Scenario { seed: s.seed.wrapping_add(k), ..s.clone() }))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub seed: u64,
    pub n: usize,
    pub topology: String,
    pub supervisor: String,
    pub rounds_to_legal: Option<u64>,
    pub rounds_to_all_reject: Option<u64>,
    pub max_degree_seen: usize,
    pub total_messages: usize,
    pub connectivity_violations: usize,
    pub sybil_violations: usize,
}

impl Row {
    pub fn new(s: &Scenario, m: &RunMetrics) -> Self {
        Self {
            seed: s.seed,
            n: s.n,
            topology: s.topology.to_string(),
            supervisor: s.supervisor.to_string(),
            rounds_to_legal: m.rounds_to_legal,
            rounds_to_all_reject: m.rounds_to_all_reject,
            max_degree_seen: m.max_degree_seen,
            total_messages: m.total_messages,
            connectivity_violations: m.connectivity_violations,
            sybil_violations: m.sybil_violations,
        }
    }

    pub fn has_violation(&self) -> bool {
        self.connectivity_violations > 0 || self.sybil_violations > 0
    }
}

/// Runs every (scenario, seed) pair, in parallel when enabled. Rows keep
/// the spec order.
pub fn run_experiments(spec: &ExperimentSpec) -> Result<Vec<Row>, ExperimentError> {
    spec.validate()?;
    let runs = spec.runs();
    let rows: Result<Vec<Row>, std::io::Error> =
        runs.par_iter().map(|s| run_scenario(s, None).map(|m| Row::new(s, &m))).collect();
    Ok(rows?)
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const HEADER: [&str; 10] = [
    "seed",
    "n",
    "topology",
    "supervisor",
    "rounds_to_legal",
    "rounds_to_all_reject",
    "max_degree_seen",
    "total_messages",
    "connectivity_violations",
    "sybil_violations",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Topology;
    use crate::supervisor::SupervisorMode;

    fn spec(n: usize, reps: u64) -> ExperimentSpec {
        ExperimentSpec {
            scenarios: vec![Scenario::new(n, Topology::Path, SupervisorMode::Honest, 0)],
            reps,
            out: None,
        }
    }

    #[test]
    fn header_matches_row_fields() {
        let rows = run_experiments(&spec(4, 1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    }

    #[test]
    fn empty_table_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), HEADER.join(","));
    }

    #[test]
    fn zero_nodes_is_rejected() {
        assert!(matches!(run_experiments(&spec(0, 1)), Err(ExperimentError::Invalid(_))));
        assert!(matches!(run_experiments(&spec(3, 0)), Err(ExperimentError::Invalid(_))));
    }

    #[test]
    fn singleton_is_immediately_legal() {
        let rows = run_experiments(&spec(1, 1)).unwrap();
        assert_eq!(rows[0].rounds_to_legal, Some(0));
    }

    #[test]
    fn rows_follow_seed_order() {
        let rows = run_experiments(&spec(5, 4)).unwrap();
        assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }
}
