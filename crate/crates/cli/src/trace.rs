//! Trace file: per-tick actor table plus the run's stage log.

use serde::{Deserialize, Serialize};
use std::path::Path;

use regen_core::compiler::ScenarioConfig;
use regen_core::sim2d::{TickSnapshot, Verdict, DT};
use regen_core::solver::ConcreteScenario;

use crate::commands::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFile {
    pub map_id: String,
    pub route_id: String,
    pub dt: f64,
    pub verdict: Verdict,
    pub stage_log: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_unmet_stage: Option<usize>,
    pub ticks: Vec<TickSnapshot>,
}

impl TraceFile {
    pub fn from_scenario(config: &ScenarioConfig, solved: &ConcreteScenario) -> Self {
        TraceFile {
            map_id: config.map_id.clone(),
            route_id: config.route_id.clone(),
            dt: DT,
            verdict: solved.verdict,
            stage_log: solved.stage_log.clone(),
            first_unmet_stage: solved.first_unmet_stage,
            ticks: solved.witness_trace.clone().unwrap_or_default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("parse {}: {e}", path.display())))
    }
}
