use serde::{Deserialize, Serialize};

use crate::homotopy::{HomotopyScene, PolylineTrajectory};
use crate::model::{Backend, ObstaclePrediction, SpaceTimePoint, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    Guard,
    Connector,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub point: SpaceTimePoint,
    /// Goal index for Goal nodes; for Connectors touching a Goal, that goal.
    pub goal: Option<usize>,
    /// Earlier and later neighbor of a Connector.
    pub links: Option<[usize; 2]>,
    /// How many incumbents this node replaced.
    pub replaced: u32,
}

/// Space-time visibility roadmap. Node 0 is the Start.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VisibilityGraph {
    nodes: Vec<Option<GraphNode>>,
}

impl VisibilityGraph {
    pub fn new(start: SpaceTimePoint) -> Self {
        VisibilityGraph {
            nodes: vec![Some(GraphNode { kind: NodeKind::Start, point: start, goal: None, links: None, replaced: 0 })],
        }
    }

    pub fn add(&mut self, node: GraphNode) -> usize {
        self.nodes.push(Some(node));
        self.nodes.len() - 1
    }

    pub fn remove(&mut self, idx: usize) {
        self.nodes[idx] = None;
    }

    pub fn node(&self, idx: usize) -> Option<&GraphNode> {
        self.nodes.get(idx).and_then(|n| n.as_ref())
    }

    /// Live nodes with their indices, in insertion order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, &GraphNode)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| n.as_ref().map(|n| (i, n)))
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes().filter(|(_, n)| n.kind == kind).count()
    }

    pub fn len(&self) -> usize {
        self.nodes().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Undirected edges implied by Connector links.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, n) in self.nodes() {
            if let Some([a, b]) = n.links {
                out.push((a, i));
                out.push((i, b));
            }
        }
        out
    }

    /// Connectors whose earlier neighbor is `from`.
    pub(crate) fn connectors_from(&self, from: usize) -> Vec<usize> {
        self.nodes().filter(|(_, n)| matches!(n.links, Some([a, _]) if a == from)).map(|(i, _)| i).collect()
    }
}

/// Inputs of the visibility predicate.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityContext<'a> {
    pub obstacles: &'a [ObstaclePrediction],
    pub dt: f64,
    pub workspace: &'a Workspace,
    /// Required center distance to each obstacle (m).
    pub radius: f64,
    /// Required clearance to the workspace boundary (m).
    pub margin: f64,
    pub v_max: f64,
}

/// Minimum distance between a linearly moving point and a linearly moving
/// obstacle over `[0, len]` given offset `d0` and relative velocity `dv`.
fn min_rel_distance(d0: [f64; 2], dv: [f64; 2], len: f64) -> f64 {
    let vv = dv[0] * dv[0] + dv[1] * dv[1];
    let u = if vv > 0.0 { (-(d0[0] * dv[0] + d0[1] * dv[1]) / vv).clamp(0.0, len) } else { 0.0 };
    (d0[0] + u * dv[0]).hypot(d0[1] + u * dv[1])
}

/// Minimum center distance between the straight space-time segment `a -> b` and an obstacle.
pub fn segment_clearance(a: SpaceTimePoint, b: SpaceTimePoint, obs: &ObstaclePrediction, dt: f64) -> f64 {
    clearance_below(a, b, obs, dt, f64::NEG_INFINITY)
}

/// As [`segment_clearance`], but returns as soon as some piece comes closer than `stop`.
fn clearance_below(a: SpaceTimePoint, b: SpaceTimePoint, obs: &ObstaclePrediction, dt: f64, stop: f64) -> f64 {
    let (a, b) = if a.t <= b.t { (a, b) } else { (b, a) };
    let span = b.t - a.t;
    let robot_at = |t: f64| {
        if span <= 0.0 {
            return a.pos();
        }
        let w = ((t - a.t) / span).clamp(0.0, 1.0);
        [a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)]
    };
    let n = obs.steps();
    let last = n as f64 * dt;
    let mut k = ((a.t / dt).floor() as i64 + 1).max(1) as usize;
    let mut p0 = robot_at(a.t);
    let mut o0 = obs.position_at(a.t, dt);
    let mut best = f64::INFINITY;
    loop {
        let grid = k as f64 * dt;
        let (t1, o1) = if grid < b.t && grid <= last { (grid, obs.positions[k.min(n)]) } else { (b.t, obs.position_at(b.t, dt)) };
        let p1 = robot_at(t1);
        let d0 = [p0[0] - o0[0], p0[1] - o0[1]];
        let dv = [p1[0] - o1[0] - d0[0], p1[1] - o1[1] - d0[1]];
        best = best.min(min_rel_distance(d0, dv, 1.0));
        if best < stop || t1 >= b.t {
            return best;
        }
        (p0, o0) = (p1, o1);
        k += 1;
    }
}

/// Space-time visibility between two points.
pub fn visible(a: SpaceTimePoint, b: SpaceTimePoint, ctx: &VisibilityContext) -> bool {
    let (a, b) = if a.t <= b.t { (a, b) } else { (b, a) };
    let dt = b.t - a.t;
    if dt <= 0.0 {
        return false;
    }
    if a.dist_xy(&b) > ctx.v_max * dt * (1.0 + 1e-9) {
        return false;
    }
    if !ctx.workspace.contains(a.pos(), ctx.margin) || !ctx.workspace.contains(b.pos(), ctx.margin) {
        return false;
    }
    ctx.obstacles.iter().all(|o| clearance_below(a, b, o, ctx.dt, ctx.radius) >= ctx.radius)
}

/// What happened to one PRM sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleOutcome {
    Guard,
    Connector,
    Replaced,
    Dropped,
}

/// Homotopy settings used when comparing alternative Connectors.
#[derive(Clone, Copy)]
pub struct PrmHomotopy<'a> {
    pub scene: &'a HomotopyScene,
    pub backend: Backend,
    /// Reference point for choosing among several visible Goals.
    pub ideal_goal: [f64; 2],
}

fn two_segment(a: SpaceTimePoint, c: SpaceTimePoint, b: SpaceTimePoint) -> Option<PolylineTrajectory> {
    PolylineTrajectory::new(vec![a, c, b]).ok()
}

/// Inserts one sample into the graph per the Guard/Connector rules.
pub fn prm_iterate(
    graph: &mut VisibilityGraph,
    sample: SpaceTimePoint,
    ctx: &VisibilityContext,
    homotopy: &PrmHomotopy,
) -> SampleOutcome {
    let mut guards = Vec::new();
    let mut best_goal: Option<(usize, f64)> = None;
    for (i, n) in graph.nodes() {
        match n.kind {
            NodeKind::Start | NodeKind::Guard => {
                if visible(n.point, sample, ctx) {
                    guards.push(i);
                    if guards.len() > 2 {
                        return SampleOutcome::Dropped;
                    }
                }
            }
            NodeKind::Goal => {
                if visible(sample, n.point, ctx) {
                    let d = (n.point.x - homotopy.ideal_goal[0]).hypot(n.point.y - homotopy.ideal_goal[1]);
                    if best_goal.is_none_or(|(_, bd)| d < bd) {
                        best_goal = Some((i, d));
                    }
                }
            }
            NodeKind::Connector => {}
        }
    }
    let mut visible_nodes = guards;
    if let Some((g, _)) = best_goal {
        visible_nodes.push(g);
    }
    match visible_nodes.len() {
        0 => {
            graph.add(GraphNode { kind: NodeKind::Guard, point: sample, goal: None, links: None, replaced: 0 });
            SampleOutcome::Guard
        }
        2 => {
            let (mut a, mut b) = (visible_nodes[0], visible_nodes[1]);
            let (pa, pb) = (graph.node(a).unwrap().point, graph.node(b).unwrap().point);
            let (ta, tb) = (pa.t, pb.t);
            if ta > tb {
                std::mem::swap(&mut a, &mut b);
            }
            let (pa, pb) = (graph.node(a).unwrap().point, graph.node(b).unwrap().point);
            if !(pa.t < sample.t && sample.t < pb.t) {
                return SampleOutcome::Dropped;
            }
            let goal = graph.node(b).unwrap().goal;
            let candidate = two_segment(pa, sample, pb);
            let new_len = pa.dist_xy(&sample) + sample.dist_xy(&pb);
            let incumbents: Vec<usize> = graph
                .nodes()
                .filter(|(_, n)| n.kind == NodeKind::Connector && n.links == Some([a, b]))
                .map(|(i, _)| i)
                .collect();
            for inc in incumbents {
                let ip = graph.node(inc).unwrap().point;
                let (Some(cand), Some(old)) = (candidate.as_ref(), two_segment(pa, ip, pb)) else { continue };
                let same = homotopy.scene.compare_with(cand, &old, homotopy.backend, false).unwrap_or(false);
                if same {
                    let old_len = pa.dist_xy(&ip) + ip.dist_xy(&pb);
                    if new_len < old_len {
                        let replaced = graph.node(inc).unwrap().replaced + 1;
                        graph.remove(inc);
                        graph.add(GraphNode { kind: NodeKind::Connector, point: sample, goal, links: Some([a, b]), replaced });
                        return SampleOutcome::Replaced;
                    }
                    return SampleOutcome::Dropped;
                }
            }
            graph.add(GraphNode { kind: NodeKind::Connector, point: sample, goal, links: Some([a, b]), replaced: 0 });
            SampleOutcome::Connector
        }
        _ => SampleOutcome::Dropped,
    }
}
