use super::graph::{NodeKind, VisibilityGraph};
use super::goals::GoalSet;
use crate::homotopy::{HomotopyScene, PolylineTrajectory};
use crate::model::{Backend, SpaceTimePoint};

/// Upper bound on enumerated node paths per search.
pub const MAX_ENUMERATED: usize = 4096;

/// A loop-free node path from the Start to a Goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub nodes: Vec<usize>,
    pub points: Vec<SpaceTimePoint>,
    pub goal: usize,
    pub length: f64,
}

/// Enumerates up to `p` shortest Start-to-Goal paths per goal.
pub fn depth_first_search(graph: &VisibilityGraph, p: usize) -> Vec<Candidate> {
    let mut found: Vec<Candidate> = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>, f64)> = vec![(0, vec![0], 0.0)];
    let mut enumerated = 0;
    while let Some((node, path, len)) = stack.pop() {
        let n = match graph.node(node) {
            Some(n) => n,
            None => continue,
        };
        if n.kind == NodeKind::Goal {
            enumerated += 1;
            let points = path.iter().map(|&i| graph.node(i).unwrap().point).collect();
            found.push(Candidate { nodes: path, points, goal: n.goal.unwrap_or(node), length: len });
            if enumerated >= MAX_ENUMERATED {
                break;
            }
            continue;
        }
        let mut next = graph.connectors_from(node);
        next.reverse();
        for c in next {
            let cn = graph.node(c).unwrap();
            let later = cn.links.unwrap()[1];
            if path.contains(&c) || path.contains(&later) {
                continue;
            }
            let Some(ln) = graph.node(later) else { continue };
            let a = graph.node(node).unwrap().point;
            let extra = a.dist_xy(&cn.point) + cn.point.dist_xy(&ln.point);
            let mut np = path.clone();
            np.push(c);
            np.push(later);
            stack.push((later, np, len + extra));
        }
    }
    found.sort_by(|a, b| a.goal.cmp(&b.goal).then(a.length.total_cmp(&b.length)).then(a.nodes.cmp(&b.nodes)));
    let mut out = Vec::new();
    let mut current = usize::MAX;
    let mut count = 0;
    for c in found {
        if c.goal != current {
            current = c.goal;
            count = 0;
        }
        if count < p {
            out.push(c);
            count += 1;
        }
    }
    out
}

/// A candidate retained by [`filter_and_select`].
#[derive(Debug, Clone)]
pub struct Selected {
    pub candidate: Candidate,
    pub polyline: PolylineTrajectory,
    pub cost: f64,
}

/// Heuristic cost of a candidate: spatial length plus weighted goal deviation.
pub fn heuristic_cost(c: &Candidate, goals: &GoalSet, goal_weight: f64) -> f64 {
    c.length + goal_weight * goals.goals.get(c.goal).map_or(0.0, |g| g.deviation)
}

/// Keeps pairwise-distinct candidates first-come in ascending heuristic cost, at most `p`.
pub fn filter_and_select(
    candidates: Vec<Candidate>,
    goals: &GoalSet,
    goal_weight: f64,
    scene: &HomotopyScene,
    p: usize,
    backend: Backend,
) -> Vec<Selected> {
    let mut scored: Vec<(f64, Candidate)> =
        candidates.into_iter().map(|c| (heuristic_cost(&c, goals, goal_weight), c)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.nodes.cmp(&b.1.nodes)));
    let mut kept: Vec<Selected> = Vec::new();
    for (cost, cand) in scored {
        if kept.len() >= p {
            break;
        }
        let Ok(poly) = PolylineTrajectory::new(cand.points.clone()) else { continue };
        if scene.warm_cache(&poly, backend).is_err() {
            continue;
        }
        let distinct = kept.iter().all(|k| matches!(scene.compare(&poly, &k.polyline, backend), Ok(false)));
        if distinct {
            kept.push(Selected { candidate: cand, polyline: poly, cost });
        }
    }
    kept
}
