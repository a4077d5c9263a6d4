//! Bundled prompt templates and substitution.
//!
//! Templates are fixed byte-for-byte; `{name}` placeholders are replaced
//! from a variable map and a missing binding is an error. Scripted-transcript
//! lookup hashes the rendered prompt, so template bytes are part of the
//! replay contract.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::OracleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    /// Propose candidate cause events for the most recent event.
    EventProposal,
    /// Same, steered by an optional natural-language prior.
    EventProposalWithPrior,
    /// Propose candidate values for an entity property (locations, speeds).
    PropertyProposal,
    /// Classify a candidate set against a source node in one call.
    EdgeSelection,
    /// Emit abstract states and FSM stages for a scenario subgraph.
    Grounding,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::EventProposal => "event_proposal",
            TemplateId::EventProposalWithPrior => "event_proposal_with_prior",
            TemplateId::PropertyProposal => "property_proposal",
            TemplateId::EdgeSelection => "edge_selection",
            TemplateId::Grounding => "grounding",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            TemplateId::EventProposal => EVENT_PROPOSAL,
            TemplateId::EventProposalWithPrior => EVENT_PROPOSAL_WITH_PRIOR,
            TemplateId::PropertyProposal => PROPERTY_PROPOSAL,
            TemplateId::EdgeSelection => EDGE_SELECTION,
            TemplateId::Grounding => GROUNDING,
        }
    }
}

const EVENT_PROPOSAL: &str = "\
You are an expert in driving scenarios.

In this scenario there is {causal_graph}.

Please provide a list of all the plausible scenarios that caused {effect}. Make sure it is precise. Provide the final answer as a comprehensive list of plausible scenarios in the following format within the tags <Answer>...</Answer>:

    - cause_name: cause description

Answer: Let's think step by step.
";

const EVENT_PROPOSAL_WITH_PRIOR: &str = "\
You are an expert in driving scenarios.

In this scenario there is {causal_graph}. Additional context for this scenario: {prior}.

Please provide a list of all the plausible scenarios that caused {effect}. Make sure it is precise. Provide the final answer as a comprehensive list of plausible scenarios in the following format within the tags <Answer>...</Answer>:

    - cause_name: cause description

Answer: Let's think step by step.
";

const PROPERTY_PROPOSAL: &str = "\
You are an expert in driving scenarios.

In this scenario there is {causal_graph}. The entities in the scenario are:
{entities_name}

Please provide a list of all the possible {node_name}s for the entities in the scenario, excluding the ego-vehicle. Make sure it is precise. Provide the final answer as a comprehensive list of possible {node_name}s in the following format within the tags <Answer>...</Answer>:

    - entity_name: ['{node_name}1', '{node_name}2', ...]

Answer: Let's think step by step.
";

const EDGE_SELECTION: &str = "\
You are an expert in driving scenarios.

In this scenario there is {causal_graph}.

The possible {node_name}s for each entity are:
{candidate_values}

What are all the possible {node_name}s for each entity in the scenario? To answer this, first, please summarize the details of each entities in the scenario. Then, check each to see if it is the possible outcome given what is known. For each, start by stating everything that is known about all the entities, then check if it is plausible given what is known, finally give your conclusion. Think step by step. You must not assume additional actions beyond what is explicitly described in the behavior. You must also assume that the actions are executed fully. Your evaluation needs to be in the following format:

1. **Name of {node_name}**
- Known:
- Analysis: (think step by step)
- Contradictions to what is known: (think step by step)
- Conclusion:

Finally, provide the final answer as a list of {node_name}s in the following formats within the tags <Answer>...</Answer>.
- entity_name: ['{node_name}1', '{node_name}2', ...]

Here are some tips to help you answer the question:
- You may assume that the vehicles can break traffic rules as long as it is plausible in real life (realistic). However, the vehicles action must not violate the behavior described.
- The {node_name}s selected can only be from the list of possible {node_name}s provided.

Answer: Let's think step by step.
";

const GROUNDING: &str = "\
You are an expert in driving scenarios.

In this scenario there is {causal_graph}. The entities in the scenario are:
{entities}

Define the abstract states needed to track this scenario and a finite state machine over them. Each abstract state is a boolean expression over the predicate library:
{predicates}

The finite state machine is an ordered list of stages; a stage is met when all of its (agent, state) requirements hold simultaneously, and the final stage is the terminal condition. Provide the final answer within the tags <Answer>...</Answer> in the following format:

states:
- state_name | agent_name | predicate_expression

fsm:
- [agent_name: state_name, agent_name: state_name]

Answer: Let's think step by step.
";

/// Instantiates a template byte-exactly, replacing every `{name}`
/// placeholder from `vars`.
pub fn render_prompt(
    template_id: TemplateId,
    vars: &BTreeMap<String, String>,
) -> Result<String, OracleError> {
    let template = template_id.text();
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| OracleError::MissingVariable {
            template_id: template_id.as_str().to_string(),
            variable: "<unterminated placeholder>".into(),
        })?;
        let name = &after[..close];
        let value = vars.get(name).ok_or_else(|| OracleError::MissingVariable {
            template_id: template_id.as_str().to_string(),
            variable: name.to_string(),
        })?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Renders a list of strings the way prompts show them: `["a", "b"]`.
pub fn render_string_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("\"{s}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

/// Renders a per-entity candidate map as the prompt's bullet list.
pub fn render_candidate_values(map: &BTreeMap<String, Vec<String>>) -> String {
    let mut lines = Vec::with_capacity(map.len());
    for (entity, values) in map {
        let quoted: Vec<String> = values.iter().map(|v| format!("'{v}'")).collect();
        lines.push(format!("- {entity}: [{}]", quoted.join(", ")));
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn event_proposal_contains_instruction() {
        let v = vars(&[
            ("causal_graph", "[\"ego-vehicle stopped abruptly\"]"),
            ("effect", "\"ego-vehicle stopped abruptly\""),
        ]);
        let prompt = render_prompt(TemplateId::EventProposal, &v).unwrap();
        assert!(prompt.contains("Please provide a list of all the plausible scenarios that caused"));
        assert!(prompt.contains("[\"ego-vehicle stopped abruptly\"]"));
    }

    #[test]
    fn property_proposal_pluralizes_node_name() {
        let v = vars(&[
            ("causal_graph", "[]"),
            ("entities_name", "- ambulance1"),
            ("node_name", "starting location"),
        ]);
        let prompt = render_prompt(TemplateId::PropertyProposal, &v).unwrap();
        assert!(prompt.contains("possible starting locations"));
    }

    #[test]
    fn unbound_prior_is_an_error_naming_the_variable() {
        let v = vars(&[("causal_graph", "[]"), ("effect", "\"x\"")]);
        let err = render_prompt(TemplateId::EventProposalWithPrior, &v).unwrap_err();
        match err {
            OracleError::MissingVariable { variable, .. } => assert_eq!(variable, "prior"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let v = vars(&[
            ("causal_graph", "[\"a\"]"),
            ("effect", "\"a\""),
            ("prior", "police car"),
        ]);
        let a = render_prompt(TemplateId::EventProposalWithPrior, &v).unwrap();
        let b = render_prompt(TemplateId::EventProposalWithPrior, &v).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("police car"));
    }
}
