use lumenav_core::agent::{ControlMode, Episode, Scenario, ScenarioConfig};
use lumenav_core::baselines::{circumball_stats};
use lumenav_core::env::{generate_network, wall_hit_points, NetworkSpec};

fn main() {
    let spec = NetworkSpec {
        segments: 2, radius_min: 0.55, radius_max: 1.1, curvature_max: 0.3,
        branch_count: 1, segment_length: 12.0, seed: 3,
    };
    let net = generate_network(3, &spec).unwrap();
    for n in [15usize, 25, 50] {
        let cfg = ScenarioConfig { sensors: n, ..ScenarioConfig::default() };
        let scenario = Scenario::assemble(net.clone(), &cfg).unwrap();
        // sample poses along an episode driven by a neutral policy
        let mut ep = Episode::new(&scenario, 0, ControlMode::RlDwa, 0.0, 1);
        let mut ratios_all = Vec::new();
        for step in 0..200 {
            if ep.done() { break; }
            let scan = ep.sensed_scan().unwrap().to_vec();
            let hits = wall_hit_points(ep.state().p, ep.state().q, &scenario.rig, &scan);
            if step % 10 == 0 {
                if let Ok(stats) = circumball_stats(&hits, &scenario.net) {
                    ratios_all.extend(stats);
                }
            }
            ep.step(&[0.0; 8]).unwrap();
        }
        ratios_all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |f: f64| ratios_all[((ratios_all.len() - 1) as f64 * f) as usize];
        println!(
            "N={n}: {} inside vertices; ball/clearance ratio quartiles {:.2} {:.2} {:.2}, min {:.2}",
            ratios_all.len(), q(0.25), q(0.5), q(0.75), ratios_all.first().unwrap_or(&f64::NAN)
        );
    }
}
