use serde_json::Value;
use tmpc_demo::{compare_paths_json, plan_scene_json, Crowd};

#[test]
fn plan_scene_returns_plans_and_guidance() {
    let out: Value = serde_json::from_str(&plan_scene_json(r#"{"obstacles":[{"x":8,"y":0}],"half_width":4}"#).unwrap()).unwrap();
    let plans = out["plans"].as_array().unwrap();
    assert!(plans.len() >= 2);
    assert_eq!(plans.iter().filter(|p| p["selected"] == true).count(), 1);
    assert!(plans.iter().any(|p| p["guided"] == false));
    assert!(!out["guidance"].as_array().unwrap().is_empty());
    assert_eq!(plans[0]["points"].as_array().unwrap().len(), 31);
}

#[test]
fn plan_scene_rejects_bad_input() {
    assert!(plan_scene_json(r#"{"obstacles":[],"bogus":1}"#).is_err());
    assert!(plan_scene_json(r#"{"obstacles":[],"variant":"nope"}"#).is_err());
    assert!(plan_scene_json(r#"{"obstacles":[],"backend":"nope"}"#).is_err());
}

#[test]
fn compare_sketched_paths() {
    let above = r#"[[0,0],[4,0.5],[8,1.5],[12,0.5],[16,0]]"#;
    let below = r#"[[0,0],[4,-0.5],[8,-1.5],[12,-0.5],[16,0]]"#;
    for backend in ["h-signature", "winding", "uvd"] {
        let input = format!(r#"{{"obstacles":[{{"x":8,"y":0}}],"a":{above},"b":{below},"backend":"{backend}"}}"#);
        let out: Value = serde_json::from_str(&compare_paths_json(&input).unwrap()).unwrap();
        assert_eq!(out["same_class"], false, "{backend}");
        let input = format!(r#"{{"obstacles":[{{"x":8,"y":0}}],"a":{above},"b":{above},"backend":"{backend}"}}"#);
        let out: Value = serde_json::from_str(&compare_paths_json(&input).unwrap()).unwrap();
        assert_eq!(out["same_class"], true, "{backend}");
    }
    assert!(compare_paths_json(r#"{"obstacles":[],"a":[[0,0]],"b":[[0,0],[1,1]]}"#).is_err());
}

#[test]
fn crowd_steps_until_finished() {
    let mut crowd = Crowd::from_json(r#"{"pedestrians":0}"#).unwrap();
    let mut steps = 0;
    while crowd.step() {
        steps += 1;
    }
    let f = crowd.frame();
    assert!(f.finished);
    assert_eq!(steps, 258);
    assert!((f.t - 12.9).abs() < 1e-9);
    assert_eq!(f.walls.len(), 2);
    let mut crowd = Crowd::from_json(r#"{"pedestrians":5,"open_square":true,"seed":3}"#).unwrap();
    assert!(crowd.step());
    let f = crowd.frame();
    assert_eq!(f.pedestrians.len(), 5);
    assert!(!f.plans.is_empty());
    assert_eq!(f.walls.len(), 4);
}
