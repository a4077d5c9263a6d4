//! FSM runtime: stage-advance monitoring over a rollout.
//!
//! A stage is met when every one of its (agent, state) requirements holds
//! simultaneously for at least one tick; stages advance in order, at most
//! one per tick, and the run is accepted when the terminal stage is met.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::compiler::config::{AbstractState, TaskFsm};
use crate::compiler::predicate::{parse_expr, PredExpr};

use super::predicates::{eval_predicate, PredicateThresholds};
use super::world::SimWorld;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Stalled,
    Collided,
}

/// Tracks stage progress; drive it with per-tick (agent, state) truths.
#[derive(Debug, Clone)]
pub struct FsmMonitor {
    stages: Vec<Vec<(String, String)>>,
    current: usize,
    stage_log: Vec<u64>,
}

impl FsmMonitor {
    pub fn new(fsm: &TaskFsm) -> Self {
        FsmMonitor {
            stages: fsm
                .stages
                .iter()
                .map(|stage| {
                    stage
                        .iter()
                        .map(|r| (r.agent.clone(), r.state.clone()))
                        .collect()
                })
                .collect(),
            current: 0,
            stage_log: Vec::new(),
        }
    }

    pub fn current_stage(&self) -> usize {
        self.current
    }

    pub fn stage_log(&self) -> &[u64] {
        &self.stage_log
    }

    pub fn terminal_reached(&self) -> bool {
        self.current >= self.stages.len()
    }

    /// Feeds one tick; returns true once the terminal stage has been met.
    /// Advances at most one stage per tick, so stage-log ticks strictly
    /// increase.
    pub fn advance(&mut self, tick: u64, satisfied: &mut dyn FnMut(&str, &str) -> bool) -> bool {
        if self.terminal_reached() {
            return true;
        }
        let stage = &self.stages[self.current];
        if stage
            .iter()
            .all(|(agent, state)| satisfied(agent, state))
        {
            self.stage_log.push(tick);
            self.current += 1;
        }
        self.terminal_reached()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub verdict: Verdict,
    /// Tick at which each met stage was satisfied, in stage order.
    pub stage_log: Vec<u64>,
    pub ticks: u64,
    /// "agent: state" labels for the truth matrix columns.
    pub state_index: Vec<String>,
    /// Per-tick truth of every bound abstract state.
    pub state_truths: Vec<Vec<bool>>,
    pub first_unmet_stage: Option<usize>,
}

/// Steps the world under the FSM until acceptance or `max_ticks`.
pub fn run(
    world: &mut SimWorld,
    fsm: &TaskFsm,
    bindings: &[AbstractState],
    max_ticks: u64,
    seed: u64,
) -> Result<RunResult, SimError> {
    if fsm.stages.is_empty() {
        return Err(SimError::Fsm("FSM has no stages".into()));
    }
    let mut exprs: BTreeMap<(String, String), PredExpr> = BTreeMap::new();
    for state in bindings {
        let expr = parse_expr(&state.predicate_expr)
            .map_err(|e| SimError::Fsm(format!("state '{}': {e}", state.name)))?;
        exprs.insert((state.agent.clone(), state.name.clone()), expr);
    }
    for stage in &fsm.stages {
        for req in stage {
            world.actor(&req.agent)?;
            if !exprs.contains_key(&(req.agent.clone(), req.state.clone())) {
                return Err(SimError::Fsm(format!(
                    "no abstract state bound for ({}, {})",
                    req.agent, req.state
                )));
            }
        }
    }

    let thresholds = PredicateThresholds::default();
    let state_index: Vec<String> = exprs
        .keys()
        .map(|(agent, state)| format!("{agent}: {state}"))
        .collect();
    let mut state_truths = Vec::new();
    let mut monitor = FsmMonitor::new(fsm);
    let mut verdict = Verdict::Stalled;

    for _ in 0..max_ticks {
        world.step(seed);
        let tick = world.tick - 1;
        let mut truths = BTreeMap::new();
        for (key, expr) in &exprs {
            let mut eval_err = None;
            let value = expr.eval(&mut |call| {
                match eval_predicate(world, call, &thresholds) {
                    Ok(v) => v,
                    Err(e) => {
                        eval_err.get_or_insert(e);
                        false
                    }
                }
            });
            if let Some(e) = eval_err {
                return Err(e);
            }
            truths.insert(key.clone(), value);
        }
        state_truths.push(truths.values().copied().collect());
        let terminal = monitor.advance(tick, &mut |agent, state| {
            truths
                .get(&(agent.to_string(), state.to_string()))
                .copied()
                .unwrap_or(false)
        });
        if terminal {
            verdict = Verdict::Accepted;
            break;
        }
    }

    if verdict != Verdict::Accepted && !world.collisions.is_empty() {
        verdict = Verdict::Collided;
    }
    let first_unmet_stage = if monitor.terminal_reached() {
        None
    } else {
        Some(monitor.current_stage())
    };
    Ok(RunResult {
        verdict,
        stage_log: monitor.stage_log().to_vec(),
        ticks: world.tick,
        state_index,
        state_truths,
        first_unmet_stage,
    })
}
