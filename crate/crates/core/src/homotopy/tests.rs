use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::model::{Backend, ObstaclePrediction, SpaceTimePoint, WindingRule};

const N: usize = 30;
const DT: f64 = 0.2;

fn stp(x: f64, y: f64, t: f64) -> SpaceTimePoint {
    SpaceTimePoint::new(x, y, t)
}

fn traj(pts: &[(f64, f64, f64)]) -> PolylineTrajectory {
    PolylineTrajectory::new(pts.iter().map(|&(x, y, t)| stp(x, y, t)).collect()).unwrap()
}

/// Detour past `(cx, cy + offset)` at mid-horizon from `cx - 5` to `cx + 5`.
fn side_path(cx: f64, cy: f64, offset: f64) -> PolylineTrajectory {
    traj(&[(cx - 5.0, cy, 0.0), (cx, cy + offset, 3.0), (cx + 5.0, cy, 6.0)])
}

fn scene(obs: Vec<ObstaclePrediction>) -> HomotopyScene {
    HomotopyScene::new(obs, DT, HomotopyParams::default())
}

fn static_scene(x: f64, y: f64, r: f64) -> HomotopyScene {
    scene(vec![ObstaclePrediction::stationary(0, [x, y], r, N)])
}

fn biot_savart(a: [f64; 3], b: [f64; 3], r: [f64; 3]) -> [f64; 3] {
    let m = 200_000;
    let dl = [(b[0] - a[0]) / m as f64, (b[1] - a[1]) / m as f64, (b[2] - a[2]) / m as f64];
    let mut acc = [0.0; 3];
    for i in 0..m {
        let u = (i as f64 + 0.5) / m as f64;
        let l = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])];
        let d = [r[0] - l[0], r[1] - l[1], r[2] - l[2]];
        let n3 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).powf(1.5);
        acc[0] += (dl[1] * d[2] - dl[2] * d[1]) / n3;
        acc[1] += (dl[2] * d[0] - dl[0] * d[2]) / n3;
        acc[2] += (dl[0] * d[1] - dl[1] * d[0]) / n3;
    }
    acc
}

fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
}

/// Independent Gauss linking integral between two closed polygons, midpoint rule.
fn linking_oracle(loop_a: &[[f64; 3]], loop_b: &[[f64; 3]], step: f64) -> f64 {
    let discretize = |lp: &[[f64; 3]]| {
        let mut out = Vec::new();
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
            let pieces = (len / step).ceil() as usize;
            for k in 0..pieces {
                let u = (k as f64 + 0.5) / pieces as f64;
                let p = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])];
                let d = [(b[0] - a[0]) / pieces as f64, (b[1] - a[1]) / pieces as f64, (b[2] - a[2]) / pieces as f64];
                out.push((p, d));
            }
        }
        out
    };
    let (da, db) = (discretize(loop_a), discretize(loop_b));
    let mut total = 0.0;
    for (p, dp) in &da {
        for (q, dq) in &db {
            let r = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            let n3 = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).powf(1.5);
            let c = [dp[1] * dq[2] - dp[2] * dq[1], dp[2] * dq[0] - dp[0] * dq[2], dp[0] * dq[1] - dp[1] * dq[0]];
            total += (r[0] * c[0] + r[1] * c[1] + r[2] * c[2]) / n3;
        }
    }
    total / (4.0 * PI)
}

#[test]
fn field_is_orthogonal_to_segment_and_offset() {
    let f = segment_field([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
    assert!(f[0].abs() < 1e-12 && f[2].abs() < 1e-12);
    assert!(f[1] > 0.0);
}

#[test]
fn field_matches_biot_savart_quadrature() {
    let (a, b) = ([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
    for r in [[1.0, 0.0, 0.5], [2.0, 0.0, 0.5], [0.6, -0.8, 1.7], [-0.3, 0.2, -2.0]] {
        let f = segment_field(a, b, r).unwrap();
        let o = biot_savart(a, b, r);
        assert!(close3(f, o, 1e-6), "{f:?} vs {o:?}");
    }
    let near = segment_field(a, b, [1.0, 0.0, 0.5]).unwrap();
    let far = segment_field(a, b, [2.0, 0.0, 0.5]).unwrap();
    let ratio = near[1] / far[1];
    let oracle = biot_savart(a, b, [1.0, 0.0, 0.5])[1] / biot_savart(a, b, [2.0, 0.0, 0.5])[1];
    assert!((ratio - oracle).abs() < 1e-6);
}

#[test]
fn field_on_segment_is_singular() {
    let r = segment_field([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.5]);
    assert!(matches!(r, Err(HomotopyError::Singular(_))));
    let beyond = segment_field([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0]).unwrap();
    assert_eq!(beyond, [0.0; 3]);
}

#[test]
fn skeleton_is_closed_and_matches_prediction() {
    let obs = ObstaclePrediction::constant_velocity(3, [1.0, 2.0], [0.5, -0.25], 0.4, N, DT);
    let sk = ObstacleSkeleton::new(&obs, DT, 200.0);
    let segs = sk.segments();
    assert_eq!(segs.first().unwrap().0, segs.last().unwrap().1);
    for w in segs.windows(2) {
        assert_eq!(w[0].1, w[1].0);
    }
    // The constant-velocity prediction merges to one segment from o_0 to o_N.
    assert_eq!(segs[0].0, [1.0, 2.0, 0.0]);
    let on = obs.positions[N];
    assert!(close3(segs[0].1, [on[0], on[1], 6.0], 1e-12));
}

#[test]
fn identical_trajectories_have_zero_loop_integral() {
    let sc = static_scene(0.0, 0.0, 0.5);
    let t = side_path(0.0, 0.0, 1.0);
    let v = sc.h_loop_integrals(&t, &t.clone(), true).unwrap();
    assert!(v[0].abs() < 1e-12);
    for b in [Backend::HSignature, Backend::Winding, Backend::Uvd] {
        assert!(sc.compare(&t, &t, b).unwrap());
    }
}

#[test]
fn opposite_sides_give_unit_loop_integral() {
    let sc = static_scene(0.0, 0.0, 0.5);
    let (up, down) = (side_path(0.0, 0.0, 1.0), side_path(0.0, 0.0, -1.0));
    let v = sc.h_loop_integrals(&up, &down, true).unwrap()[0];
    assert!((v.abs() - 1.0).abs() < 1e-3, "{v}");
    assert!(!sc.h_signature_equivalent(&up, &down, true).unwrap());

    let mut loop_pts: Vec<[f64; 3]> = up.points().iter().map(|p| [p.x, p.y, p.t]).collect();
    loop_pts.extend(down.points().iter().rev().skip(1).take(down.points().len() - 2).map(|p| [p.x, p.y, p.t]));
    let far = 200.0;
    let skel = [[0.0, 0.0, -0.1], [0.0, 0.0, 6.1], [far, 0.0, 6.1], [far, 0.0, -0.1]];
    let oracle = linking_oracle(&loop_pts, &skel, 0.01);
    assert!((v - oracle).abs() < 1e-3, "{v} vs oracle {oracle}");
}

#[test]
fn obstacle_outside_loop_gives_zero() {
    let sc = static_scene(0.0, 10.0, 0.5);
    let (up, down) = (side_path(0.0, 0.0, 1.0), side_path(0.0, 0.0, -1.0));
    let v = sc.h_loop_integrals(&up, &down, true).unwrap()[0];
    assert!(v.abs() < 1e-3);
    assert!(sc.h_signature_equivalent(&up, &down, true).unwrap());
}

#[test]
fn different_goals_use_endpoint_connector() {
    let sc = static_scene(0.0, 0.0, 0.5);
    let up = traj(&[(-5.0, 0.0, 0.0), (0.0, 1.0, 3.0), (5.0, 1.0, 6.0)]);
    let up2 = traj(&[(-5.0, 0.0, 0.0), (0.0, 2.0, 3.0), (5.0, 2.5, 6.0)]);
    let down = traj(&[(-5.0, 0.0, 0.0), (0.0, -1.0, 3.0), (5.0, -1.0, 6.0)]);
    assert!(sc.h_signature_equivalent(&up, &up2, true).unwrap());
    assert!(!sc.h_signature_equivalent(&up, &down, true).unwrap());
}

#[test]
fn singular_connector_is_perturbed() {
    // The endpoint connector passes exactly through the obstacle's final position.
    let sc = static_scene(5.0, 0.0, 0.5);
    let up = traj(&[(-5.0, 0.0, 0.0), (5.0, 0.3, 6.0)]);
    let down = traj(&[(-5.0, 0.0, 0.0), (5.0, -0.3, 6.0)]);
    let v = sc.h_loop_integrals(&up, &down, true).unwrap()[0];
    assert!(v.abs() < 1e-3 || (v.abs() - 1.0).abs() < 1e-3, "{v}");
}

#[test]
fn winding_examples() {
    let obs = ObstaclePrediction::stationary(0, [0.0, 0.0], 0.5, N);
    let t = traj(&[(-5.0, 1.0, 0.0), (5.0, 1.0, 6.0)]);
    let lam = winding_number(&t, &obs, DT, N).unwrap();
    let oracle = ((1.0f64).atan2(5.0) - (1.0f64).atan2(-5.0)) / (2.0 * PI);
    assert!((lam - oracle).abs() < 1e-12);
    assert!((lam + 0.437).abs() < 1e-3);

    let moving = ObstaclePrediction::constant_velocity(0, [0.0, 0.0], [1.0, 0.5], 0.5, N, DT);
    let follow = traj(&[(1.0, 1.0, 0.0), (7.0, 4.0, 6.0)]);
    assert!(winding_number(&follow, &moving, DT, N).unwrap().abs() < 1e-12);

    let through = traj(&[(-3.0, 0.0, 0.0), (3.0, 0.0, 6.0)]);
    assert!(matches!(winding_number(&through, &obs, DT, N), Err(HomotopyError::UndefinedAngle(0))));
    assert_eq!(HomotopyParams::default().lambda_pass, 1.0 / (4.0 * PI));
}

#[test]
fn winding_equivalence_rules() {
    let mut sc = static_scene(0.0, 0.0, 0.5);
    let up = traj(&[(-5.0, 1.0, 0.0), (5.0, 1.0, 6.0)]);
    let down = traj(&[(-5.0, -1.0, 0.0), (5.0, -1.0, 6.0)]);
    assert!(!sc.winding_equivalent(&up, &down, true).unwrap());
    let far_away = traj(&[(-5.0, 20.0, 0.0), (-4.0, 20.0, 6.0)]);
    assert!(sc.winding_equivalent(&up, &far_away, true).unwrap());
    sc.params.winding_rule = WindingRule::PassingDistinct;
    assert!(!sc.winding_equivalent(&up, &far_away, false).unwrap());
}

#[test]
fn uvd_examples() {
    let obs = vec![ObstaclePrediction::stationary(0, [0.0, 0.0], 0.5, N)];
    let up = traj(&[(-5.0, 1.0, 0.0), (5.0, 1.0, 6.0)]);
    let down = traj(&[(-5.0, -1.0, 0.0), (5.0, -1.0, 6.0)]);
    let up2 = traj(&[(-5.0, 1.2, 0.0), (5.0, 1.2, 6.0)]);
    assert!(uvd_equivalent(&up, &up, &obs, DT, 20));
    assert!(!uvd_equivalent(&up, &down, &obs, DT, 20));
    assert!(uvd_equivalent(&up, &up2, &obs, DT, 20));
}

#[test]
fn uvd_sees_obstacles_between_samples() {
    let obs = vec![ObstaclePrediction::stationary(0, [0.0, 0.0], 0.2, N)];
    let up = side_path(0.0, 0.0, 1.5);
    let down = side_path(0.0, 0.0, -1.5);
    // Three samples put connectors at t = 0, 3 and 6; the obstacle at x = 0.3 misses the t = 3 connector.
    let shifted = vec![ObstaclePrediction::stationary(0, [0.3, 0.0], 0.2, N)];
    assert!(!uvd_equivalent(&up, &down, &obs, DT, 3));
    assert!(!uvd_equivalent(&up, &down, &shifted, DT, 3));
}

#[test]
fn backends_agree_on_canonical_pairs() {
    let sc = static_scene(0.0, 0.0, 0.5);
    let (up, down, up2) = (side_path(0.0, 0.0, 1.0), side_path(0.0, 0.0, -1.0), side_path(0.0, 0.0, 2.0));
    for b in [Backend::HSignature, Backend::Winding, Backend::Uvd] {
        assert!(!sc.compare(&up, &down, b).unwrap(), "{b:?}");
        assert!(sc.compare(&up, &up2, b).unwrap(), "{b:?}");
    }
}

#[test]
fn trajectory_validation_and_interpolation() {
    assert!(PolylineTrajectory::new(vec![stp(0.0, 0.0, 0.0)]).is_err());
    assert!(PolylineTrajectory::new(vec![stp(0.0, 0.0, 1.0), stp(1.0, 0.0, 1.0)]).is_err());
    let t = traj(&[(0.0, 0.0, 0.0), (2.0, 0.0, 1.0), (2.0, 2.0, 2.0)]);
    assert_eq!(t.position_at(0.5), [1.0, 0.0]);
    assert_eq!(t.position_at(1.5), [2.0, 1.0]);
    assert_eq!(t.position_at(9.0), [2.0, 2.0]);
    assert_eq!(t.length(), 4.0);
    let json = serde_json::to_string(&t).unwrap();
    let back: PolylineTrajectory = serde_json::from_str(&json).unwrap();
    assert_eq!(back, t);
}

fn rect_loop(x0: f64, x1: f64, y0: f64, y1: f64, t: f64) -> Vec<SpaceTimePoint> {
    vec![stp(x0, y0, t), stp(x1, y0, t), stp(x1, y1, t), stp(x0, y1, t), stp(x0, y0, t)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangular_loops_count_enclosure(
        x0 in -4.0f64..4.0, w in 0.1f64..4.0,
        y0 in -4.0f64..4.0, h in 0.1f64..4.0,
        t in 0.3f64..5.7,
        vx in -0.5f64..0.5, vy in -0.5f64..0.5,
    ) {
        let obs = ObstaclePrediction::constant_velocity(0, [0.0, 0.0], [vx, vy], 0.5, N, DT);
        let o = obs.position_at(t, DT);
        let (x1, y1) = (x0 + w, y0 + h);
        let margin = (o[0] - x0).abs().min((o[0] - x1).abs()).min((o[1] - y0).abs()).min((o[1] - y1).abs());
        prop_assume!(margin > 0.02);
        let inside = o[0] > x0 && o[0] < x1 && o[1] > y0 && o[1] < y1;
        let sk = ObstacleSkeleton::new(&obs, DT, 200.0);
        let v = sk.path_integral(&rect_loop(x0, x1, y0, y1, t)).unwrap();
        if inside {
            prop_assert!((v.abs() - 1.0).abs() < TOL_H, "{}", v);
        } else {
            prop_assert!(v.abs() < TOL_H, "{}", v);
        }
    }

    #[test]
    fn compare_is_reflexive_and_symmetric(
        ox in -2.0f64..2.0, oy in -1.0f64..1.0,
        a in -3.0f64..3.0, b in -3.0f64..3.0,
        vx in -0.3f64..0.3,
    ) {
        prop_assume!(a.abs() > 0.6 && b.abs() > 0.6);
        let obs = vec![ObstaclePrediction::constant_velocity(0, [ox, oy], [vx, 0.0], 0.5, N, DT)];
        let sc = scene(obs);
        let (t1, t2) = (side_path(0.0, 0.0, a), side_path(0.0, 0.0, b));
        for backend in [Backend::HSignature, Backend::Winding, Backend::Uvd] {
            if let (Ok(x), Ok(y)) = (sc.compare(&t1, &t2, backend), sc.compare(&t2, &t1, backend)) {
                prop_assert_eq!(x, y);
            }
            prop_assert!(sc.compare(&t1, &t1, backend).unwrap());
        }
    }

    #[test]
    fn winding_is_additive(
        mx in -3.0f64..3.0, my in 0.3f64..3.0,
        ex in 2.0f64..6.0, ey in -3.0f64..3.0,
        vx in -0.5f64..0.5, vy in -0.5f64..0.5,
    ) {
        let obs = ObstaclePrediction::constant_velocity(0, [0.0, 0.0], [vx, vy], 0.5, N, DT);
        let first = traj(&[(-5.0, 0.2, 0.0), (mx, my, 3.0)]);
        let second = traj(&[(mx, my, 3.0), (ex, ey, 6.0)]);
        let whole = traj(&[(-5.0, 0.2, 0.0), (mx, my, 3.0), (ex, ey, 6.0)]);
        let (a, b, c) = (
            winding_number(&first, &obs, DT, 200),
            winding_number(&second, &obs, DT, 200),
            winding_number(&whole, &obs, DT, 400),
        );
        if let (Ok(a), Ok(b), Ok(c)) = (a, b, c) {
            prop_assert!((a + b - c).abs() < 1e-9, "{} + {} vs {}", a, b, c);
        }
    }

    #[test]
    fn backends_agree_on_side_of_obstacle(
        ox in -3.0f64..3.0, oy in -3.0f64..3.0,
        a in 0.6f64..3.0, b in 0.6f64..3.0,
        sa in proptest::bool::ANY, sb in proptest::bool::ANY,
    ) {
        let sc = static_scene(ox, oy, 0.5);
        let a = if sa { a } else { -a };
        let b = if sb { b } else { -b };
        let (t1, t2) = (side_path(ox, oy, a), side_path(ox, oy, b));
        let expected = sa == sb;
        for backend in [Backend::HSignature, Backend::Winding, Backend::Uvd] {
            prop_assert_eq!(sc.compare(&t1, &t2, backend).unwrap(), expected, "{:?}", backend);
        }
    }

    #[test]
    fn cache_is_transparent(
        ox in -2.0f64..2.0, oy in -2.0f64..2.0,
        a in -3.0f64..3.0, b in -3.0f64..3.0,
    ) {
        prop_assume!(a.abs() > 0.6 && b.abs() > 0.6);
        let sc = static_scene(ox, oy, 0.5);
        let (t1, t2) = (side_path(0.0, 0.0, a), side_path(0.0, 0.0, b));
        for backend in [Backend::HSignature, Backend::Winding] {
            let cold = sc.compare_with(&t1, &t2, backend, false);
            let warm1 = sc.compare_with(&t1, &t2, backend, true);
            let warm2 = sc.compare_with(&t1, &t2, backend, true);
            prop_assert_eq!(&cold, &warm1);
            prop_assert_eq!(&cold, &warm2);
        }
        prop_assert_eq!(sc.h_loop_integrals(&t1, &t2, false).ok(), sc.h_loop_integrals(&t1, &t2, true).ok());
    }
}

/// Midpoint-rule line integral of the wire field along `a -> b`, over `4π`.
fn pair_integral_oracle(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> f64 {
    let m = 4000;
    let dl = [(b[0] - a[0]) / m as f64, (b[1] - a[1]) / m as f64, (b[2] - a[2]) / m as f64];
    (0..m)
        .map(|i| {
            let u = (i as f64 + 0.5) / m as f64;
            let r = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])];
            let f = segment_field(c, d, r).unwrap();
            f[0] * dl[0] + f[1] * dl[1] + f[2] * dl[2]
        })
        .sum::<f64>()
        / (4.0 * PI)
}

#[test]
fn pair_integral_matches_quadrature() {
    let cases = [
        ([-1.0, 0.5, 0.2], [1.0, 0.7, 0.9], [0.0, 0.0, -1.0], [0.1, -0.2, 2.0]),
        ([-1.0, -0.5, 0.2], [1.0, -0.7, 0.9], [0.0, 0.0, -1.0], [0.1, -0.2, 2.0]),
        ([0.3, 2.0, 0.0], [0.5, -1.0, 3.0], [1.0, 1.0, 0.5], [-2.0, 0.0, 0.6]),
        ([2.0, 2.0, 0.0], [3.0, 2.5, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
    ];
    for (a, b, c, d) in cases {
        let exact = segment_pair_integral(a, b, c, d).unwrap();
        let oracle = pair_integral_oracle(a, b, c, d);
        assert!((exact - oracle).abs() < 1e-6, "{exact} vs {oracle}");
    }
    // Coplanar segments do not link.
    assert_eq!(segment_pair_integral([0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap(), 0.0);
    assert!(segment_pair_integral([-1.0, 0.0, 0.5], [1.0, 0.0, 0.5], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn pair_integral_matches_quadrature_fuzzed(
        p in prop::array::uniform12(-3.0f64..3.0),
    ) {
        let (a, b, c, d) = ([p[0], p[1], p[2]], [p[3], p[4], p[5]], [p[6], p[7], p[8]], [p[9], p[10], p[11]]);
        let Ok(exact) = segment_pair_integral(a, b, c, d) else { return Ok(()) };
        let oracle = pair_integral_oracle(a, b, c, d);
        // Midpoint error grows near the wire; only well separated pairs are compared tightly.
        let mut min_dist = f64::INFINITY;
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            let r = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])];
            for j in 0..=50 {
                let w = j as f64 / 50.0;
                let q = [c[0] + w * (d[0] - c[0]), c[1] + w * (d[1] - c[1]), c[2] + w * (d[2] - c[2])];
                min_dist = min_dist.min(((r[0] - q[0]).powi(2) + (r[1] - q[1]).powi(2) + (r[2] - q[2]).powi(2)).sqrt());
            }
        }
        prop_assume!(min_dist > 0.3);
        prop_assert!((exact - oracle).abs() < 1e-5, "{} vs {}", exact, oracle);
    }
}
