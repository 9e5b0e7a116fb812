use proptest::prelude::*;

use super::*;
use crate::homotopy::HomotopyParams;
use crate::model::{ObstaclePrediction, ReferencePath, RobotState, Workspace};

fn cfg() -> PlannerConfig {
    PlannerConfig { v_max: 3.0, ..PlannerConfig::default() }
}

fn scene_of(obs: Vec<ObstaclePrediction>, c: &PlannerConfig) -> HomotopyScene {
    HomotopyScene::new(obs, c.dt, HomotopyParams::from_config(c))
}

fn stp(x: f64, y: f64, t: f64) -> SpaceTimePoint {
    SpaceTimePoint::new(x, y, t)
}

fn straight() -> ReferencePath {
    ReferencePath::straight([0.0, 0.0], [40.0, 0.0]).unwrap()
}

fn ctx<'a>(obs: &'a [ObstaclePrediction], ws: &'a Workspace, c: &PlannerConfig) -> VisibilityContext<'a> {
    VisibilityContext { obstacles: obs, dt: c.dt, workspace: ws, radius: c.radius, margin: c.robot_radius, v_max: c.v_max }
}

fn origin_state() -> RobotState {
    RobotState::new(0.0, 0.0, 0.0, 2.0, 0.0)
}

#[test]
fn goal_grid_is_centred_at_reference_progress() {
    let c = PlannerConfig::default();
    let g = goal_grid(&straight(), &origin_state(), &c, &Workspace::unbounded()).unwrap();
    assert!((g.ideal[0] - 12.0).abs() < 1e-9 && g.ideal[1].abs() < 1e-9);
    assert_eq!(g.goals.len(), 25);
    assert!(g.goals.iter().all(|goal| goal.point.t == 6.0));
    assert!(g.goals.iter().any(|goal| goal.point.pos() == g.ideal && goal.deviation == 0.0));

    let one = PlannerConfig { goal_grid: crate::model::GoalGrid { longitudinal: 1, lateral: 1, ..Default::default() }, ..c.clone() };
    let g1 = goal_grid(&straight(), &origin_state(), &one, &Workspace::unbounded()).unwrap();
    assert_eq!(g1.goals.len(), 1);
    assert_eq!(g1.goals[0].point.pos(), g1.ideal);
}

#[test]
fn goal_grid_respects_corridor_walls() {
    let ws = Workspace::corridor(3.0);
    let c = PlannerConfig::default();
    let g = goal_grid(&straight(), &origin_state(), &c, &ws).unwrap();
    assert_eq!(g.goals.len(), 25);
    let mut wide = c.clone();
    wide.goal_grid.lateral_spacing = 2.0;
    let g2 = goal_grid(&straight(), &origin_state(), &wide, &ws).unwrap();
    assert_eq!(g2.goals.len(), 15);
    // Oracle: half-plane containment with the wall margin.
    assert!(g2.goals.iter().all(|goal| goal.point.y.abs() <= 3.0 - c.robot_radius));
    let narrow = Workspace::corridor(0.3);
    assert_eq!(goal_grid(&straight(), &origin_state(), &wide, &narrow), Err(GuidanceError::NoGoals));
}

#[test]
fn visibility_predicate() {
    let c = cfg();
    let ws = Workspace::unbounded();
    let none: Vec<ObstaclePrediction> = vec![];
    let vc = ctx(&none, &ws, &c);
    assert!(visible(stp(1.0, 1.0, 1.0), stp(1.0, 1.0, 2.0), &vc));
    assert!(!visible(stp(1.0, 1.0, 1.0), stp(1.0, 1.0, 1.0), &vc));
    let c2 = PlannerConfig::default();
    let vc2 = ctx(&none, &ws, &c2);
    assert!(!visible(stp(0.0, 0.0, 0.0), stp(10.0, 0.0, 1.0), &vc2));

    let obs = vec![ObstaclePrediction::constant_velocity(0, [5.0, 3.0], [0.0, -1.0], 0.4, 30, 0.2)];
    let vo = ctx(&obs, &ws, &c);
    let (a, b) = (stp(0.0, 0.0, 0.0), stp(10.0, 0.0, 6.0));
    // Oracle: dense time samples, point-in-disc.
    let hit = (0..=6000).any(|i| {
        let t = 6.0 * i as f64 / 6000.0;
        let p = [10.0 * t / 6.0, 0.0];
        let o = obs[0].position_at(t, 0.2);
        (p[0] - o[0]).hypot(p[1] - o[1]) < c.radius
    });
    assert!(hit);
    assert!(!visible(a, b, &vo));
    assert!(visible(stp(0.0, -3.0, 0.0), stp(10.0, -3.0, 6.0), &vo));
}

#[test]
fn segment_clearance_matches_dense_sampling() {
    let obs = ObstaclePrediction::new(0, (0..=30).map(|k| [(k as f64 * 0.37).sin() * 3.0, k as f64 * 0.1]).collect(), 0.3);
    let (a, b) = (stp(-2.0, -1.0, 0.5), stp(2.5, 3.0, 5.3));
    let got = segment_clearance(a, b, &obs, 0.2);
    let oracle = (0..=200_000)
        .map(|i| {
            let t = 0.5 + 4.8 * i as f64 / 200_000.0;
            let w = (t - 0.5) / 4.8;
            let p = [-2.0 + 4.5 * w, -1.0 + 4.0 * w];
            let o = obs.position_at(t, 0.2);
            (p[0] - o[0]).hypot(p[1] - o[1])
        })
        .fold(f64::INFINITY, f64::min);
    assert!(got <= oracle + 1e-12 && oracle - got < 1e-6, "{got} {oracle}");
}

fn prm_setup(c: &PlannerConfig) -> (VisibilityGraph, GoalSet) {
    let goals = goal_grid(&straight(), &origin_state(), c, &Workspace::unbounded()).unwrap();
    let mut g = VisibilityGraph::new(stp(0.0, 0.0, 0.0));
    for (i, goal) in goals.goals.iter().enumerate() {
        g.add(GraphNode { kind: NodeKind::Goal, point: goal.point, goal: Some(i), links: None, replaced: 0 });
    }
    (g, goals)
}

#[test]
fn prm_classifies_samples() {
    let c = cfg();
    let ws = Workspace::unbounded();
    let none: Vec<ObstaclePrediction> = vec![];
    let sc = scene_of(none.clone(), &c);
    let vc = ctx(&none, &ws, &c);
    let (mut g, goals) = prm_setup(&c);
    let hom = PrmHomotopy { scene: &sc, backend: c.backend, ideal_goal: goals.ideal };
    // Far from the Start and too early to see any goal.
    assert_eq!(prm_iterate(&mut g, stp(2.0, 30.0, 0.5), &vc, &hom), SampleOutcome::Guard);
    // Sees the Start and (after collapsing) one Goal.
    assert_eq!(prm_iterate(&mut g, stp(6.0, 0.5, 3.0), &vc, &hom), SampleOutcome::Connector);
    let paths = depth_first_search(&g, 4);
    assert_eq!(paths.len(), 1);
    assert_eq!(goals.goals[paths[0].goal].deviation, 0.0);
    // A shorter connection in the same class replaces the incumbent.
    assert_eq!(prm_iterate(&mut g, stp(6.0, 0.1, 3.0), &vc, &hom), SampleOutcome::Replaced);
    assert_eq!(g.count(NodeKind::Connector), 1);
    assert_eq!(prm_iterate(&mut g, stp(6.0, 0.3, 3.0), &vc, &hom), SampleOutcome::Dropped);
}

#[test]
fn prm_keeps_distinct_connectors() {
    let c = cfg();
    let ws = Workspace::unbounded();
    let obs = vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)];
    let sc = scene_of(obs.clone(), &c);
    let vc = ctx(&obs, &ws, &c);
    let (mut g, goals) = prm_setup(&c);
    let hom = PrmHomotopy { scene: &sc, backend: c.backend, ideal_goal: goals.ideal };
    assert_eq!(prm_iterate(&mut g, stp(6.0, 1.5, 3.0), &vc, &hom), SampleOutcome::Connector);
    assert_eq!(prm_iterate(&mut g, stp(6.0, -1.5, 3.0), &vc, &hom), SampleOutcome::Connector);
    let cands = depth_first_search(&g, 4);
    let kept = filter_and_select(cands, &goals, c.goal_weight, &sc, 4, c.backend);
    assert_eq!(kept.len(), 2);
    assert!(!sc.compare(&kept[0].polyline, &kept[1].polyline, c.backend).unwrap());
}

fn connector(g: &mut VisibilityGraph, p: SpaceTimePoint, a: usize, b: usize) -> usize {
    g.add(GraphNode { kind: NodeKind::Connector, point: p, goal: None, links: Some([a, b]), replaced: 0 })
}

fn goal_node(g: &mut VisibilityGraph, p: SpaceTimePoint) -> usize {
    g.add(GraphNode { kind: NodeKind::Goal, point: p, goal: Some(0), links: None, replaced: 0 })
}

/// Exhaustive oracle: every Start-to-Goal path over Connector links.
fn all_paths(g: &VisibilityGraph) -> Vec<Vec<usize>> {
    fn rec(g: &VisibilityGraph, at: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if g.node(at).unwrap().kind == NodeKind::Goal {
            out.push(path.clone());
            return;
        }
        for (i, n) in g.nodes() {
            if let Some([a, b]) = n.links {
                if a == at {
                    path.push(i);
                    path.push(b);
                    rec(g, b, path, out);
                    path.pop();
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(g, 0, &mut vec![0], &mut out);
    out
}

#[test]
fn dfs_enumeration() {
    let mut g = VisibilityGraph::new(stp(0.0, 0.0, 0.0));
    let goal = goal_node(&mut g, stp(10.0, 0.0, 6.0));
    connector(&mut g, stp(5.0, 0.0, 3.0), 0, goal);
    assert_eq!(depth_first_search(&g, 4).len(), 1);

    connector(&mut g, stp(5.0, 2.0, 3.0), 0, goal);
    let d = depth_first_search(&g, 4);
    assert_eq!(d.len(), 2);
    assert_eq!(d.len(), all_paths(&g).len());

    connector(&mut g, stp(5.0, -4.0, 3.0), 0, goal);
    let d2 = depth_first_search(&g, 2);
    assert_eq!(d2.len(), 2);
    let mut lens: Vec<f64> = all_paths(&g)
        .iter()
        .map(|p| p.windows(2).map(|w| g.node(w[0]).unwrap().point.dist_xy(&g.node(w[1]).unwrap().point)).sum())
        .collect();
    lens.sort_by(f64::total_cmp);
    assert!((d2[0].length - lens[0]).abs() < 1e-12 && (d2[1].length - lens[1]).abs() < 1e-12);
}

#[test]
fn dfs_through_guards() {
    let mut g = VisibilityGraph::new(stp(0.0, 0.0, 0.0));
    let goal = goal_node(&mut g, stp(12.0, 0.0, 6.0));
    let guard = g.add(GraphNode { kind: NodeKind::Guard, point: stp(6.0, 0.0, 3.0), goal: None, links: None, replaced: 0 });
    connector(&mut g, stp(3.0, 1.0, 1.5), 0, guard);
    connector(&mut g, stp(3.0, -1.0, 1.5), 0, guard);
    connector(&mut g, stp(9.0, 1.0, 4.5), guard, goal);
    let d = depth_first_search(&g, 10);
    assert_eq!(d.len(), 2);
    assert_eq!(d.len(), all_paths(&g).len());
    assert!(d.iter().all(|c| c.nodes.len() == 5));
}

#[test]
fn filter_keeps_cheaper_of_equivalent_pair() {
    let c = cfg();
    let obs = vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)];
    let sc = scene_of(obs, &c);
    let goals = GoalSet {
        goals: vec![
            Goal { point: stp(12.0, 2.0, 6.0), deviation: 2.0 },
            Goal { point: stp(12.0, 1.0, 6.0), deviation: 1.0 },
        ],
        ideal: [12.0, 0.0],
    };
    let c0 = Candidate {
        nodes: vec![0, 3, 1],
        points: vec![stp(0.0, 0.0, 0.0), stp(6.0, 1.5, 3.0), stp(12.0, 2.0, 6.0)],
        goal: 0,
        length: 0.0,
    };
    let c1 = Candidate {
        nodes: vec![0, 4, 2],
        points: vec![stp(0.0, 0.0, 0.0), stp(6.0, 1.5, 3.0), stp(12.0, 1.0, 6.0)],
        goal: 1,
        length: 0.0,
    };
    let with_len = |mut c: Candidate| {
        c.length = c.points.windows(2).map(|w| w[0].dist_xy(&w[1])).sum();
        c
    };
    let (c0, c1) = (with_len(c0), with_len(c1));
    let kept = filter_and_select(vec![c0, c1.clone()], &goals, 2.0, &sc, 4, c.backend);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].candidate, c1);
    assert_eq!(PlannerConfig::default().num_paths, 4);
}

#[test]
fn propagation_drops_expired_nodes() {
    let mut g = VisibilityGraph::new(stp(0.0, 0.0, 0.0));
    g.add(GraphNode { kind: NodeKind::Guard, point: stp(1.0, 0.0, 0.03), goal: None, links: None, replaced: 0 });
    g.add(GraphNode { kind: NodeKind::Guard, point: stp(2.0, 0.0, 1.0), goal: None, links: None, replaced: 0 });
    let carry = propagate_graph(&g, 0.05);
    assert_eq!(carry.len(), 1);
    assert!((carry[0].t - 0.95).abs() < 1e-12);
}

#[test]
fn shifted_trajectory_is_anchored_and_extended() {
    let prev = PolylineTrajectory::from_positions(&(0..=30).map(|k| [k as f64 * 0.4, 0.0]).collect::<Vec<_>>(), 0.2).unwrap();
    let s = shift_trajectory(&prev, [0.1, 0.05], 0.05, 6.0);
    assert_eq!(s.start(), stp(0.1, 0.05, 0.0));
    assert!((s.end().t - 6.0).abs() < 1e-12);
    assert!((s.end().x - 12.1).abs() < 1e-9);
}

fn planner_scene(obs: Vec<ObstaclePrediction>, c: &PlannerConfig) -> HomotopyScene {
    scene_of(obs, c)
}

#[test]
fn identical_scenes_keep_ids() {
    let c = PlannerConfig { planning_step: 1e-9, ..cfg() };
    let obs = vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)];
    let sc = planner_scene(obs, &c);
    let mut gp = GuidancePlanner::new(c.clone());
    gp.deterministic = true;
    let ws = Workspace::unbounded();
    let st = origin_state();
    let first = gp.plan(&st, &straight(), &ws, &sc).unwrap();
    let ids1: Vec<u64> = first.trajectories.iter().map(|t| t.id.id).collect();
    assert!(!ids1.is_empty());
    let second = gp.plan(&st, &straight(), &ws, &sc).unwrap();
    for t in &second.trajectories {
        let same = first.trajectories.iter().find(|f| sc.compare(&f.polyline, &t.polyline, c.backend).unwrap());
        if let Some(f) = same {
            assert_eq!(f.id.id, t.id.id);
        }
    }
    let ids2: Vec<u64> = second.trajectories.iter().map(|t| t.id.id).collect();
    assert!(ids1.iter().filter(|i| ids2.contains(i)).count() >= ids1.len().min(ids2.len()));
}

#[test]
fn vanished_class_gets_fresh_id() {
    let c = cfg();
    let obs = vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)];
    let sc = scene_of(obs.clone(), &c);
    let up = PolylineTrajectory::new(vec![stp(0.0, 0.0, 0.0), stp(6.0, 1.5, 3.0), stp(12.0, 1.0, 6.0)]).unwrap();
    let down = PolylineTrajectory::new(vec![stp(0.0, 0.0, 0.0), stp(6.0, -1.5, 3.0), stp(12.0, -1.0, 6.0)]).unwrap();
    let mk = |p: &PolylineTrajectory, id: u64| GuidanceTrajectory {
        polyline: p.clone(),
        smoothed: p.clone(),
        spline: false,
        goal: 0,
        goal_point: p.end(),
        cost: 0.0,
        id: HomotopyId { id, backend: c.backend, invariants: vec![] },
        previously_selected: id == 7,
    };
    let previous = vec![mk(&up, 7)];
    let mut next = 100;
    let mut current = vec![mk(&down, 0), mk(&up, 0)];
    identify(&mut current, &previous, [0.0, 0.0], 0.05, 6.0, &sc, c.backend, &mut next);
    assert_eq!(current[0].id.id, 100);
    assert!(!current[0].previously_selected);
    assert_eq!(current[1].id.id, 7);
    assert!(current[1].previously_selected);
}

#[test]
fn smoothing_examples() {
    let c = cfg();
    let ws = Workspace::unbounded();
    let none: Vec<ObstaclePrediction> = vec![];
    let sc = scene_of(none.clone(), &c);
    let vc = ctx(&none, &ws, &c);
    let line = PolylineTrajectory::new(vec![stp(0.0, 0.0, 0.0), stp(4.0, 2.0, 2.0), stp(12.0, 6.0, 6.0)]).unwrap();
    let s = smooth(&line, &vc, &sc, c.backend, 30, 0.2);
    assert_eq!(s.trajectory.points().len(), 31);
    for p in s.trajectory.points() {
        assert!((p.y - 0.5 * p.x).abs() < 1e-6);
    }
    assert_eq!(s.trajectory.start(), line.start());
    assert_eq!(s.trajectory.end(), line.end());

    let obs = vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)];
    let sco = scene_of(obs.clone(), &c);
    let vco = ctx(&obs, &ws, &c);
    let detour = PolylineTrajectory::new(vec![stp(0.0, 0.0, 0.0), stp(0.0, 2.0, 1.0), stp(12.0, 2.0, 5.5), stp(12.0, 0.0, 6.0)]).unwrap();
    let sd = smooth(&detour, &vco, &sco, c.backend, 30, 0.2);
    assert!(sco.compare(&sd.trajectory, &detour, c.backend).unwrap());
    assert_eq!(sd.trajectory.start(), detour.start());
    assert_eq!(sd.trajectory.end(), detour.end());
}

#[test]
fn zero_budget_yields_no_paths() {
    let c = PlannerConfig { prm_samples: 0, ..cfg() };
    let sc = scene_of(vec![], &c);
    let mut gp = GuidancePlanner::new(c);
    gp.deterministic = true;
    let out = gp.plan(&origin_state(), &straight(), &Workspace::unbounded(), &sc).unwrap();
    assert!(out.trajectories.is_empty());
}

fn run_seed(seed: u64, obs: Vec<ObstaclePrediction>) -> (GuidanceOutput, HomotopyScene, PlannerConfig) {
    let c = PlannerConfig { seed, ..cfg() };
    let sc = scene_of(obs, &c);
    let mut gp = GuidancePlanner::new(c.clone());
    gp.deterministic = true;
    let out = gp.plan(&origin_state(), &straight(), &Workspace::corridor(6.0), &sc).unwrap();
    (out, sc, c)
}

#[test]
fn empty_scene_reaches_ideal_goal() {
    let hits = (0..100)
        .filter(|&seed| {
            let (out, _, _) = run_seed(seed, vec![]);
            out.trajectories.iter().any(|t| (t.goal_point.x - 12.0).abs() < 1e-9 && t.goal_point.y.abs() < 1e-9)
        })
        .count();
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn static_obstacle_yields_two_routes() {
    let hits = (0..100)
        .filter(|&seed| {
            let (out, sc, c) = run_seed(seed, vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)]);
            let t = &out.trajectories;
            t.len() >= 2 && !sc.compare(&t[0].polyline, &t[1].polyline, c.backend).unwrap()
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn graph_persists_with_static_predictions() {
    let c = PlannerConfig { planning_step: 0.0, ..cfg() };
    let obs = vec![ObstaclePrediction::stationary(0, [6.0, 0.0], 0.4, 30)];
    let sc = scene_of(obs, &c);
    let mut gp = GuidancePlanner::new(c);
    gp.deterministic = true;
    let ws = Workspace::unbounded();
    gp.plan(&origin_state(), &straight(), &ws, &sc).unwrap();
    let before: Vec<(NodeKind, SpaceTimePoint)> =
        gp.graph().nodes().filter(|(_, n)| matches!(n.kind, NodeKind::Guard | NodeKind::Connector)).map(|(_, n)| (n.kind, n.point)).collect();
    gp.plan(&origin_state(), &straight(), &ws, &sc).unwrap();
    let after: Vec<(NodeKind, SpaceTimePoint)> = gp.graph().nodes().map(|(_, n)| (n.kind, n.point)).collect();
    for (kind, p) in before {
        if kind == NodeKind::Guard {
            assert!(after.contains(&(kind, p)), "lost guard {p:?}");
        } else {
            assert!(after.iter().any(|(_, q)| *q == p) || after.iter().filter(|(k, _)| *k == NodeKind::Connector).count() > 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outputs_are_distinct_and_collision_free(
        seed in 0u64..1000,
        ox in 3.0f64..9.0, oy in -2.0f64..2.0,
        vx in -1.0f64..1.0, vy in -1.0f64..1.0,
        ox2 in 3.0f64..12.0, oy2 in -4.0f64..4.0,
    ) {
        let obs = vec![
            ObstaclePrediction::constant_velocity(0, [ox, oy], [vx, vy], 0.4, 30, 0.2),
            ObstaclePrediction::stationary(1, [ox2, oy2], 0.4, 30),
        ];
        let (out, sc, c) = run_seed(seed, obs.clone());
        let t = &out.trajectories;
        for i in 0..t.len() {
            for j in 0..i {
                prop_assert!(!sc.compare(&t[i].polyline, &t[j].polyline, c.backend).unwrap());
            }
            for w in t[i].polyline.points().windows(2) {
                prop_assert!(w[0].dist_xy(&w[1]) <= c.v_max * (w[1].t - w[0].t) * (1.0 + 1e-9));
                for o in &obs {
                    prop_assert!(segment_clearance(w[0], w[1], o, c.dt) >= c.radius);
                }
            }
            prop_assert!(sc.compare(&t[i].smoothed, &t[i].polyline, c.backend).unwrap());
        }
    }
}
