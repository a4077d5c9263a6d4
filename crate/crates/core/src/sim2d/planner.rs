//! A* route planning over the lane graph.
//!
//! Search states are (lane, arc length) pairs. Successor transitions cost
//! the distance actually driven; lane changes cover a fixed forward ramp
//! plus a penalty so the planner prefers staying in lane. The heuristic is
//! straight-line distance to the goal, which never exceeds driven distance,
//! so results match exhaustive search on small graphs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::map::RoadMap;
use super::SimError;

/// Forward distance covered while changing lanes.
pub const LANE_CHANGE_RAMP: f64 = 15.0;
/// Extra cost discouraging gratuitous lane changes.
pub const LANE_CHANGE_PENALTY: f64 = 5.0;
/// Maximum spacing between emitted waypoints.
pub const WAYPOINT_SPACING: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRoute {
    pub waypoints: Vec<[f64; 2]>,
    pub lane_sequence: Vec<String>,
    pub lane_changes: usize,
}

impl PlannedRoute {
    pub fn end(&self) -> [f64; 2] {
        *self.waypoints.last().expect("route has waypoints")
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    }
}

#[derive(Clone, Debug)]
struct Node {
    lane: String,
    s_mm: i64, // millimeter-quantized arc length keeps state keys exact
}

#[derive(Clone, Debug, PartialEq)]
enum Step {
    Start,
    Continue { from: usize },
    LaneChange { from: usize },
    Goal { from: usize },
}

struct QueueItem {
    f: f64,
    g: f64,
    index: usize,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f
    }
}
impl Eq for QueueItem {}
impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f, then g, then index for determinism.
        other
            .f
            .total_cmp(&self.f)
            .then(other.g.total_cmp(&self.g))
            .then(other.index.cmp(&self.index))
    }
}

fn mm(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

/// Plans a route between two on-lane poses. Errors when either endpoint is
/// off the drivable network or no lane path connects them.
pub fn plan_route(
    map: &RoadMap,
    start: [f64; 2],
    goal: [f64; 2],
) -> Result<PlannedRoute, SimError> {
    let (start_lane, start_s, _) = map
        .nearest_lane(start[0], start[1])
        .ok_or_else(|| SimError::OffMap(format!("start ({:.1}, {:.1})", start[0], start[1])))?;
    let (goal_lane, goal_s, _) = map
        .nearest_lane(goal[0], goal[1])
        .ok_or_else(|| SimError::OffMap(format!("goal ({:.1}, {:.1})", goal[0], goal[1])))?;

    let start_node = Node {
        lane: start_lane.id.clone(),
        s_mm: mm(start_s),
    };

    let mut nodes: Vec<Node> = vec![start_node];
    let mut steps: Vec<Step> = vec![Step::Start];
    let mut best_g: HashMap<(String, i64), f64> = HashMap::new();
    let mut heap = BinaryHeap::new();

    let h = |node: &Node| -> f64 {
        let lane = &map.lanes[&node.lane];
        let (p, _) = lane.point_at(node.s_mm as f64 / 1000.0);
        ((p[0] - goal[0]).powi(2) + (p[1] - goal[1]).powi(2)).sqrt()
    };

    best_g.insert((nodes[0].lane.clone(), nodes[0].s_mm), 0.0);
    heap.push(QueueItem {
        f: h(&nodes[0]),
        g: 0.0,
        index: 0,
    });

    let mut goal_index: Option<usize> = None;
    while let Some(QueueItem { g, index, .. }) = heap.pop() {
        let node = nodes[index].clone();
        if let Some(&known) = best_g.get(&(node.lane.clone(), node.s_mm)) {
            if g > known + 1e-9 {
                continue;
            }
        }
        let s = node.s_mm as f64 / 1000.0;
        let lane = &map.lanes[&node.lane];

        // Reaching the goal: same lane, goal not behind us.
        if node.lane == goal_lane.id && s <= goal_s + 1e-9 {
            let total = g + (goal_s - s).max(0.0);
            let final_index = nodes.len();
            nodes.push(Node {
                lane: node.lane.clone(),
                s_mm: mm(goal_s),
            });
            steps.push(Step::Goal { from: index });
            let _ = total;
            goal_index = Some(final_index);
            break;
        }

        let push = |nodes: &mut Vec<Node>,
                        steps: &mut Vec<Step>,
                        heap: &mut BinaryHeap<QueueItem>,
                        best_g: &mut HashMap<(String, i64), f64>,
                        next: Node,
                        step: Step,
                        cost: f64| {
            let key = (next.lane.clone(), next.s_mm);
            let candidate = g + cost;
            if best_g.get(&key).is_none_or(|&k| candidate < k - 1e-9) {
                best_g.insert(key, candidate);
                let f = candidate + h(&next);
                nodes.push(next);
                steps.push(step);
                heap.push(QueueItem {
                    f,
                    g: candidate,
                    index: nodes.len() - 1,
                });
            }
        };

        // Continue to each successor lane (drive to the end of this lane).
        for succ in &lane.successors {
            let cost = (lane.length() - s).max(0.0);
            push(
                &mut nodes,
                &mut steps,
                &mut heap,
                &mut best_g,
                Node {
                    lane: succ.clone(),
                    s_mm: 0,
                },
                Step::Continue { from: index },
                cost,
            );
        }

        // Lane change to an adjacent lane over the forward ramp.
        for neighbor in [&lane.left, &lane.right].into_iter().flatten() {
            let target = &map.lanes[neighbor];
            let s_after = s + LANE_CHANGE_RAMP;
            if s_after <= target.length() && s_after <= lane.length() {
                push(
                    &mut nodes,
                    &mut steps,
                    &mut heap,
                    &mut best_g,
                    Node {
                        lane: neighbor.clone(),
                        s_mm: mm(s_after),
                    },
                    Step::LaneChange { from: index },
                    LANE_CHANGE_RAMP + LANE_CHANGE_PENALTY,
                );
            }
        }
    }

    let goal_index = goal_index.ok_or(SimError::NoPath)?;

    // Reconstruct the (lane, s) chain.
    let mut chain = Vec::new();
    let mut cursor = goal_index;
    loop {
        chain.push(cursor);
        match &steps[cursor] {
            Step::Start => break,
            Step::Continue { from } | Step::LaneChange { from } | Step::Goal { from } => {
                cursor = *from;
            }
        }
    }
    chain.reverse();

    let mut waypoints: Vec<[f64; 2]> = Vec::new();
    let mut lane_sequence = Vec::new();
    let mut lane_changes = 0usize;
    for pair in chain.windows(2) {
        let (a, b) = (&nodes[pair[0]], &nodes[pair[1]]);
        let sa = a.s_mm as f64 / 1000.0;
        let sb = b.s_mm as f64 / 1000.0;
        if lane_sequence.last() != Some(&a.lane) {
            lane_sequence.push(a.lane.clone());
        }
        match &steps[pair[1]] {
            Step::Continue { .. } => {
                let lane = &map.lanes[&a.lane];
                append_lane_points(&mut waypoints, lane, sa, lane.length());
            }
            Step::LaneChange { .. } => {
                lane_changes += 1;
                let from = &map.lanes[&a.lane];
                let to = &map.lanes[&b.lane];
                let (p0, _) = from.point_at(sa);
                let (p1, _) = to.point_at(sb);
                append_segment(&mut waypoints, p0, p1);
            }
            Step::Goal { .. } => {
                let lane = &map.lanes[&a.lane];
                append_lane_points(&mut waypoints, lane, sa, sb);
            }
            Step::Start => unreachable!(),
        }
    }
    if let Some(last) = chain.last() {
        let lane = &nodes[*last].lane;
        if lane_sequence.last() != Some(lane) {
            lane_sequence.push(lane.clone());
        }
    }
    if waypoints.is_empty() {
        // Degenerate zero-length route: stay at the start point.
        let lane = &map.lanes[&nodes[0].lane];
        let (p, _) = lane.point_at(nodes[0].s_mm as f64 / 1000.0);
        waypoints.push(p);
    }

    Ok(PlannedRoute {
        waypoints,
        lane_sequence,
        lane_changes,
    })
}

fn append_lane_points(out: &mut Vec<[f64; 2]>, lane: &super::map::Lane, from_s: f64, to_s: f64) {
    if to_s <= from_s + 1e-9 {
        let (p, _) = lane.point_at(from_s);
        push_point(out, p);
        return;
    }
    let steps = ((to_s - from_s) / WAYPOINT_SPACING).ceil() as usize;
    for i in 0..=steps {
        let s = from_s + (to_s - from_s) * (i as f64 / steps as f64);
        let (p, _) = lane.point_at(s);
        push_point(out, p);
    }
}

fn append_segment(out: &mut Vec<[f64; 2]>, a: [f64; 2], b: [f64; 2]) {
    let d = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let steps = (d / WAYPOINT_SPACING).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        push_point(out, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
}

fn push_point(out: &mut Vec<[f64; 2]>, p: [f64; 2]) {
    if let Some(last) = out.last() {
        if (last[0] - p[0]).abs() < 1e-9 && (last[1] - p[1]).abs() < 1e-9 {
            return;
        }
    }
    out.push(p);
}
