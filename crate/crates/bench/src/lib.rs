//! Shared scene builders for the benchmark targets.

use lumenav_core::agent::{Scenario, ScenarioConfig};
use lumenav_core::env::{generate_network, NetworkSpec};
use lumenav_core::Vec3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A curved two-branch network representative of evaluation scenes.
pub fn bench_scenario(sensors: usize) -> Scenario {
    let spec = NetworkSpec {
        segments: 2,
        radius_min: 0.6,
        radius_max: 1.2,
        curvature_max: 0.25,
        branch_count: 1,
        segment_length: 12.0,
        seed: 5,
    };
    let net = generate_network(spec.seed, &spec).expect("bench network generates");
    let cfg = ScenarioConfig { sensors, ..ScenarioConfig::default() };
    Scenario::assemble(net, &cfg).expect("bench scenario assembles")
}

/// Synthetic wall-hit cloud around a query point.
pub fn synthetic_cloud(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            )
        })
        .collect()
}
