//! Static feasibility checks on a ScenarioConfig, plus the over-constraint
//! lint.

use crate::asset_db::AssetDatabase;

use super::config::ScenarioConfig;
use super::predicate::{parse_expr, PredicateId};
use super::PLACEMENT_PHRASES;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every config invariant and returns all findings at once.
/// Violations make the config unusable; warnings flag likely-infeasible
/// FSM structure without rejecting it.
pub fn validate_config(config: &ScenarioConfig, db: &AssetDatabase) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;

    // Unique entity names.
    let mut names = std::collections::BTreeSet::new();
    for entity in &config.entities {
        if !names.insert(entity.name.clone()) {
            v.push(format!("duplicate entity name '{}'", entity.name));
        }
    }

    if config.causal_graph.is_empty() {
        v.push("causal_graph is empty".into());
    }
    if config.fsm.stages.is_empty() {
        v.push("fsm has no stages".into());
    } else if config.fsm.terminal_stage_index != config.fsm.stages.len() - 1 {
        v.push(format!(
            "terminal_stage_index {} != last stage {}",
            config.fsm.terminal_stage_index,
            config.fsm.stages.len() - 1
        ));
    }

    // FSM requirements resolve to declared states of existing agents.
    for (i, stage) in config.fsm.stages.iter().enumerate() {
        if stage.is_empty() {
            v.push(format!("stage {i} is empty"));
        }
        for req in stage {
            if !names.contains(&req.agent) {
                v.push(format!("stage {i} references undeclared agent '{}'", req.agent));
            }
            if config.abstract_state(&req.agent, &req.state).is_none() {
                v.push(format!(
                    "stage {i} requirement ({}, {}) has no abstract state binding",
                    req.agent, req.state
                ));
            }
        }
    }

    // Abstract states: parseable expressions over the closed library, with
    // agent arguments drawn from the roster.
    for state in &config.predicates {
        if !names.contains(&state.agent) {
            v.push(format!(
                "abstract state '{}' names undeclared agent '{}'",
                state.name, state.agent
            ));
        }
        match parse_expr(&state.predicate_expr) {
            Ok(expr) => {
                for call in expr.calls() {
                    for &pos in call.pred.agent_arg_positions() {
                        let arg = &call.args[pos];
                        if !names.contains(arg) {
                            v.push(format!(
                                "state '{}': predicate {} argument '{}' is not a declared entity",
                                state.name,
                                call.pred.name(),
                                arg
                            ));
                        }
                    }
                    if call.pred == PredicateId::GnssErrorExceeds
                        && call.args[1].parse::<f64>().is_err()
                    {
                        v.push(format!(
                            "state '{}': gnss_error_exceeds threshold '{}' is not numeric",
                            state.name, call.args[1]
                        ));
                    }
                }
            }
            Err(e) => v.push(format!("state '{}': {e}", state.name)),
        }
    }

    // Entities: behaviors and property values must exist in the database.
    for entity in &config.entities {
        let Some(asset) = db.node(&entity.asset_id) else {
            v.push(format!(
                "entity '{}' references unknown asset '{}'",
                entity.name, entity.asset_id
            ));
            continue;
        };
        if entity.name != "ego-vehicle" {
            if let Some(action) = entity.behavioral_properties.get("action") {
                let known = db
                    .behaviors_of(&asset.id)
                    .iter()
                    .any(|b| b.id == *action || b.display_name == *action);
                if !known {
                    v.push(format!(
                        "entity '{}' behavior '{}' is not an asset-db behavior of '{}'",
                        entity.name, action, entity.asset_id
                    ));
                }
            }
        }
        for key in ["starting location", "ending location", "location"] {
            if let Some(phrase) = entity.behavioral_properties.get(key) {
                if !PLACEMENT_PHRASES.contains(&phrase.as_str()) {
                    v.push(format!(
                        "entity '{}' {key} '{phrase}' is not in the placement vocabulary",
                        entity.name
                    ));
                }
            }
        }
        for (key, value) in &entity.static_properties {
            match db.property_states(key) {
                Ok(states) if !states.is_empty() => {
                    if !states.iter().any(|s| s == value) {
                        v.push(format!(
                            "entity '{}' property '{key}'='{value}' not among states {states:?}",
                            entity.name
                        ));
                    }
                }
                Ok(_) => {}
                Err(_) => v.push(format!(
                    "entity '{}' property '{key}' is not a database property",
                    entity.name
                )),
            }
        }
    }

    for name in config.placement_vars.keys() {
        if !names.contains(name) {
            v.push(format!("placement_vars references undeclared entity '{name}'"));
        }
    }

    // Over-constraint lint: an agent flips between mutually exclusive
    // predicates across consecutive stages while the later stage couples in
    // another agent's condition, leaving zero slack for the flip.
    for k in 0..config.fsm.stages.len().saturating_sub(1) {
        let (a, b) = (&config.fsm.stages[k], &config.fsm.stages[k + 1]);
        for req_a in a {
            for req_b in b.iter().filter(|r| r.agent == req_a.agent) {
                let preds = |agent: &str, state: &str| -> Vec<PredicateId> {
                    config
                        .abstract_state(agent, state)
                        .and_then(|s| parse_expr(&s.predicate_expr).ok())
                        .map(|e| e.calls().iter().map(|c| c.pred).collect())
                        .unwrap_or_default()
                };
                let pa = preds(&req_a.agent, &req_a.state);
                let pb = preds(&req_b.agent, &req_b.state);
                let exclusive = pa
                    .iter()
                    .any(|p| pb.iter().any(|q| p.mutually_exclusive_with(*q)));
                let coupled = b.iter().any(|r| r.agent != req_a.agent);
                if exclusive && coupled {
                    report.warnings.push(format!(
                        "over-constraint: stages {k}->{} flip agent '{}' between mutually \
                         exclusive predicates while stage {} also requires another agent \
                         simultaneously",
                        k + 1,
                        req_a.agent,
                        k + 1
                    ));
                }
            }
        }
    }

    report
}
