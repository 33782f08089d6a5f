//! End-to-end learning checks: the training smoke oracle on a toy tube,
//! evaluation determinism, and checkpoint interoperability.

use lumenav_core::agent::{
    run_episode, train, ControlMode, Scenario, ScenarioConfig, SacConfig, TrainConfig,
};
use lumenav_core::env::{generate_network, NetworkSpec};
use lumenav_core::learner::{load_mlp, save_mlp};
use lumenav_core::metrics::Outcome;

fn toy_scenario() -> Scenario {
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
    let cfg = ScenarioConfig { sensors: 15, step_cap: 400, ..ScenarioConfig::default() };
    Scenario::assemble(net, &cfg).unwrap()
}

fn smoke_train_cfg() -> TrainConfig {
    TrainConfig {
        sac: SacConfig {
            hidden: vec![32, 32],
            batch_size: 64,
            replay_capacity: 20_000,
            warmup_steps: 500,
            update_every: 4,
            ..SacConfig::default()
        },
        total_steps: 20_000,
        seed: 1,
        mode: ControlMode::RlDwa,
        noise_sigma: 0.0,
        snapshot_every: 5_000,
        checkpoint_dir: None,
    }
}

#[test]
fn training_reward_improves_on_the_toy_tube() {
    let scenario = toy_scenario();
    let out = train(&scenario, &smoke_train_cfg()).unwrap();
    assert!(out.aborted.is_none(), "training aborted: {:?}", out.aborted);
    let curve = &out.state.curve;
    assert!(curve.len() >= 20, "too few episodes: {}", curve.len());
    let decile = curve.len() / 10;
    let first: f64 =
        curve[..decile].iter().map(|c| c.episode_reward).sum::<f64>() / decile as f64;
    let last: f64 = curve[curve.len() - decile..]
        .iter()
        .map(|c| c.episode_reward)
        .sum::<f64>()
        / decile as f64;
    assert!(
        last > first,
        "mean episodic reward did not improve: first decile {first:.2}, last decile {last:.2}"
    );
    // auc bookkeeping is monotone in accumulated area for positive rewards
    assert!(curve.last().unwrap().auc_so_far.is_finite());
}

#[test]
fn trained_policy_completes_the_straight_tube() {
    let scenario = toy_scenario();
    let out = train(&scenario, &smoke_train_cfg()).unwrap();
    let actor = out.state.sac.actor();
    let mut goals = 0;
    for seed in 0..5 {
        let report = run_episode(&scenario, 0, ControlMode::RlDwa, actor, 0.0, seed).unwrap();
        if report.outcome == Outcome::Goal {
            goals += 1;
            assert_eq!(report.p_pct, 100.0);
        }
    }
    assert!(goals >= 4, "trained policy reached the goal {goals}/5 times");
}

#[test]
fn evaluation_is_deterministic_and_checkpoint_stable() {
    let scenario = toy_scenario();
    let cfg = TrainConfig { total_steps: 2_000, ..smoke_train_cfg() };
    let out = train(&scenario, &cfg).unwrap();
    let actor = out.state.sac.actor();

    let a = run_episode(&scenario, 1, ControlMode::RlDwa, actor, 0.1, 9).unwrap();
    let b = run_episode(&scenario, 1, ControlMode::RlDwa, actor, 0.1, 9).unwrap();
    assert_eq!(a.steps.len(), b.steps.len());
    assert_eq!(a.p_pct.to_bits(), b.p_pct.to_bits());
    assert_eq!(a.v_pct.to_bits(), b.v_pct.to_bits());
    for (x, y) in a.steps.iter().zip(b.steps.iter()) {
        assert_eq!(x.state.csv_row(), y.state.csv_row());
    }

    // a checkpoint round trip preserves the rollout bit for bit
    let dir = std::env::temp_dir().join("lumenav_ckpt_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("actor.mlp");
    save_mlp(actor, &path).unwrap();
    let loaded = load_mlp(&path).unwrap();
    let c = run_episode(&scenario, 1, ControlMode::RlDwa, &loaded, 0.1, 9).unwrap();
    assert_eq!(a.p_pct.to_bits(), c.p_pct.to_bits());
    assert_eq!(a.v_pct.to_bits(), c.v_pct.to_bits());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_episode_rejects_mismatched_checkpoints() {
    use rand::SeedableRng;
    let scenario = toy_scenario();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    // wrong observation dimension
    let bad_obs = lumenav_core::learner::Mlp::new(&[10, 8, 16], &mut rng);
    assert!(run_episode(&scenario, 0, ControlMode::RlDwa, &bad_obs, 0.0, 0).is_err());
    // wrong action head width
    let bad_act = lumenav_core::learner::Mlp::new(&[scenario.observation_dim(), 8, 14], &mut rng);
    assert!(run_episode(&scenario, 0, ControlMode::RlDwa, &bad_act, 0.0, 0).is_err());
}

#[test]
fn pure_rl_trains_on_the_shared_pipeline() {
    let scenario = toy_scenario();
    let cfg = TrainConfig {
        mode: ControlMode::PureRl,
        total_steps: 4_000,
        ..smoke_train_cfg()
    };
    let out = train(&scenario, &cfg).unwrap();
    assert!(out.aborted.is_none());
    assert!(out.state.curve.len() > 5);
    let report = run_episode(&scenario, 0, ControlMode::PureRl, out.state.sac.actor(), 0.0, 3).unwrap();
    assert!(report.p_pct >= 0.0 && report.p_pct <= 100.0);
}
