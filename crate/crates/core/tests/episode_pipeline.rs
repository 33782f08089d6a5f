//! Episode-level behaviour: stepping, termination rules, progress
//! metrics, and the shared-pipeline guarantees across control modes.

use lumenav_core::agent::{ControlMode, Episode, EpisodeEvent, Scenario, ScenarioConfig};
use lumenav_core::env::{generate_network, NetworkSpec};
use lumenav_core::metrics::{path_completion, Outcome};
use lumenav_core::Vec3;

fn straight_scenario() -> Scenario {
    let spec = NetworkSpec {
        segments: 1,
        radius_min: 1.0,
        radius_max: 1.0,
        curvature_max: 0.0,
        branch_count: 0,
        segment_length: 10.0,
        seed: 0,
    };
    let net = generate_network(0, &spec).unwrap();
    let cfg = ScenarioConfig { sensors: 15, step_cap: 300, ..ScenarioConfig::default() };
    Scenario::assemble(net, &cfg).unwrap()
}

#[test]
fn neutral_policy_advances_down_the_tube() {
    let scenario = straight_scenario();
    let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 1);
    let x0 = ep.state().p.x;
    // raw zeros: mid weights, zero roll and deformation rates
    let info = ep.step(&[0.0; 8]).unwrap();
    // heading and speed terms dominate the symmetric scene: motion is +x
    let v = info.dwa.as_ref().unwrap().v_star_vec();
    assert!(v.x > 0.1, "expected forward motion, got {v:?}");
    for _ in 0..20 {
        if ep.done() {
            break;
        }
        ep.step(&[0.0; 8]).unwrap();
    }
    assert!(ep.state().p.x > x0 + 0.5, "robot failed to advance: {}", ep.state().p.x);
}

#[test]
fn executed_velocity_satisfies_window_membership() {
    use lumenav_core::dwa::dynamic_window;
    let scenario = straight_scenario();
    let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 2);
    let mut raw = [0.0; 8];
    for step in 0..40 {
        if ep.done() {
            break;
        }
        raw[4] = if step % 2 == 0 { 0.4 } else { -0.4 };
        let v_before = ep.state().v;
        let info = ep.step(&raw).unwrap();
        let window = dynamic_window(v_before, &scenario.limits);
        assert!(window.contains(ep.state().v, 1e-9));
        let _ = info;
    }
}

#[test]
fn waypoint_advance_and_goal_termination() {
    let scenario = straight_scenario();
    let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 3);
    let mut reached: Vec<usize> = Vec::new();
    let mut last_reward = 0.0;
    while !ep.done() {
        let info = ep.step(&[0.0; 8]).unwrap();
        for e in &info.events {
            if let EpisodeEvent::WaypointReached(i) = e {
                reached.push(*i);
            }
        }
        last_reward = info.transition.reward;
    }
    assert_eq!(ep.outcome(), Some(Outcome::Goal), "events: {reached:?}");
    assert_eq!(reached, vec![0, 1, 2, 3]);
    // the goal bonus lands on the terminal step
    assert!(last_reward >= scenario.reward.r_goal, "terminal reward {last_reward}");
}

#[test]
fn exiting_the_lumen_terminates_with_penalty() {
    let scenario = straight_scenario();
    // pure RL commanding hard +y drives the center through the wall
    let mut ep = Episode::new(&scenario, 0, ControlMode::PureRl, 0.0, 4);
    let mut last = 0.0;
    while !ep.done() {
        let info = ep.step(&[0.0, 0.999, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        last = info.transition.reward;
    }
    assert_eq!(ep.outcome(), Some(Outcome::Outside));
    assert!(last <= scenario.reward.r_outside + 1.0, "terminal reward {last}");
}

#[test]
fn no_progress_terminates_after_the_limit() {
    let scenario = straight_scenario();
    // zero velocity forever: stuck penalty after the window, termination
    // at the no-progress limit
    let mut ep = Episode::new(&scenario, 0, ControlMode::PureRl, 0.0, 5);
    let mut rewards = Vec::new();
    while !ep.done() {
        let info = ep.step(&[0.0; 7]).unwrap();
        rewards.push(info.transition.reward);
    }
    assert_eq!(ep.outcome(), Some(Outcome::Stuck));
    assert_eq!(rewards.len(), scenario.reward.no_progress_limit);
    // unit deformation reward until the stuck window fills
    let w = scenario.reward.stuck_window;
    assert!(rewards[..w - 1].iter().all(|r| (r - 1.0).abs() < 1e-12));
    assert!(rewards[w..].iter().all(|r| r.abs() < 1e-12), "{rewards:?}");
}

#[test]
fn episode_stepping_is_seed_deterministic() {
    let scenario = straight_scenario();
    let run = |seed: u64, sigma: f64| {
        let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, sigma, seed);
        let mut trace = Vec::new();
        for _ in 0..30 {
            if ep.done() {
                break;
            }
            let obs = ep.observe().unwrap().to_vec();
            trace.extend(obs.iter().map(|c| c.to_bits()));
            let info = ep.step(&[0.0; 8]).unwrap();
            trace.push(info.transition.reward.to_bits());
            trace.extend(ep.state().p.iter().map(|c| c.to_bits()));
        }
        trace
    };
    assert_eq!(run(7, 0.0), run(7, 0.0));
    assert_eq!(run(7, 0.1), run(7, 0.1));
    // the sensed observations must reflect the injected noise
    assert_ne!(run(7, 0.0), run(7, 0.1), "noise must reach the observation");
    assert_ne!(run(7, 0.1), run(8, 0.1), "seed must alter the noise");
}

#[test]
fn modes_share_the_environment_exactly() {
    let scenario = straight_scenario();
    let mut a = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 11);
    let mut b = Episode::new(&scenario, 0, ControlMode::PureRl, 0.0, 11);
    // identical initial state and first observation: only the action
    // pathway differs between the methods
    assert_eq!(a.state().p, b.state().p);
    assert_eq!(a.state().q, b.state().q);
    let oa = a.observe().unwrap().to_vec();
    let ob = b.observe().unwrap().to_vec();
    assert_eq!(oa, ob);
    assert_eq!(lumenav_core::agent::EPISODE_PIPELINE_ID, lumenav_core::agent::EPISODE_PIPELINE_ID);
}

#[test]
fn path_completion_on_real_trajectories() {
    let scenario = straight_scenario();
    let (seq, route) = &scenario.sequences[0];

    // stationary robot scores zero
    let stay = vec![scenario.start_position; 5];
    assert_eq!(path_completion(&stay, route, seq), 0.0);

    // a trajectory ending at the midpoint of the straight route: ~50
    let total = route.total_arclength();
    let mid: Vec<Vec3> = (0..=50).map(|i| route.point_at(total * 0.5 * i as f64 / 50.0)).collect();
    let p = path_completion(&mid, route, seq);
    assert!((p - 50.0).abs() < 1.0, "midpoint completion {p}");

    // reaching the final target scores exactly 100
    let full: Vec<Vec3> = (0..=100).map(|i| route.point_at(total * i as f64 / 100.0)).collect();
    assert_eq!(path_completion(&full, route, seq), 100.0);
}

#[test]
fn completion_is_monotone_in_trajectory_prefixes() {
    let scenario = straight_scenario();
    let (seq, route) = &scenario.sequences[0];
    let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 13);
    let mut prev = 0.0;
    for _ in 0..60 {
        if ep.done() {
            break;
        }
        ep.step(&[0.0; 8]).unwrap();
        let p = path_completion(ep.positions(), route, seq);
        assert!(p >= prev - 1e-9, "completion regressed: {prev} -> {p}");
        prev = p;
    }
}

#[test]
fn occupied_volume_tracks_deformation_cubically() {
    let scenario = straight_scenario();
    let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 17);
    ep.step(&[0.0; 8]).unwrap();
    let v1 = ep.occupied_volume().unwrap();
    assert!(v1 > 0.0 && v1 < 100.0);
    // deform up for a while: inflate all axes
    let mut raw = [0.0; 8];
    raw[5] = 0.999;
    raw[6] = 0.999;
    raw[7] = 0.999;
    for _ in 0..10 {
        if ep.done() {
            break;
        }
        ep.step(&raw).unwrap();
    }
    let v2 = ep.occupied_volume().unwrap();
    assert!(v2 > v1, "inflating must raise the occupied volume: {v1} -> {v2}");
}
