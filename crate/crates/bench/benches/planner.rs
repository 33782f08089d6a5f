//! Window-search and environment-query benchmarks: the per-cycle cost is
//! expected to grow cubically in the lattice resolution, linearly in the
//! rollout horizon and linearly in the sensed-point count.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lumenav_bench::{bench_scenario, synthetic_cloud};
use lumenav_core::dwa::{select_velocity, wall_from_cloud, wall_from_net, DwaConfig, DwaWeights};
use lumenav_core::Vec3;

fn bench_select_velocity(c: &mut Criterion) {
    let weights = DwaWeights::new(0.6, 0.4, 0.8, 0.9);
    let limits = lumenav_core::kinematics::KinematicLimits::default();
    let p = Vec3::new(0.2, 0.1, -0.1);
    let v = Vec3::new(0.4, 0.0, 0.1);
    let goal = Vec3::new(4.0, 1.0, 0.0);

    let mut group = c.benchmark_group("select_velocity_cloud_n");
    for n in [15usize, 25, 50] {
        let cloud = synthetic_cloud(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cloud, |b, cloud| {
            let wall = wall_from_cloud(cloud);
            let cfg = DwaConfig::default();
            b.iter(|| {
                select_velocity(black_box(p), black_box(v), &weights, goal, &wall, &limits, &cfg)
                    .unwrap()
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("select_velocity_lattice_m");
    let cloud = synthetic_cloud(50, 3);
    for m in [3usize, 5, 7] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            let wall = wall_from_cloud(&cloud);
            let cfg = DwaConfig { samples_per_axis: m, ..DwaConfig::default() };
            b.iter(|| {
                select_velocity(black_box(p), black_box(v), &weights, goal, &wall, &limits, &cfg)
                    .unwrap()
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("select_velocity_horizon_p");
    for points in [3usize, 6, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(points), &points, |b, &points| {
            let wall = wall_from_cloud(&cloud);
            let cfg = DwaConfig { horizon: 0.1 * points as f64, ..DwaConfig::default() };
            b.iter(|| {
                select_velocity(black_box(p), black_box(v), &weights, goal, &wall, &limits, &cfg)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_environment_queries(c: &mut Criterion) {
    let scenario = bench_scenario(50);
    let probe = scenario.start_position;

    c.bench_function("signed_distance", |b| {
        b.iter(|| scenario.net.signed_distance(black_box(probe + Vec3::new(0.3, 0.2, -0.1))))
    });

    c.bench_function("raycast", |b| {
        b.iter(|| {
            scenario
                .net
                .raycast(black_box(probe), Vec3::new(0.6, 0.8, 0.0), 4.0)
                .unwrap()
        })
    });

    c.bench_function("scan_n50", |b| {
        b.iter(|| {
            lumenav_core::env::scan(&scenario.net, probe, scenario.start_orientation, &scenario.rig)
                .unwrap()
        })
    });

    // ground-truth clearance for comparison with the sensed-cloud variant
    c.bench_function("select_velocity_sdf", |b| {
        let weights = DwaWeights::new(0.6, 0.4, 0.8, 0.9);
        let wall = wall_from_net(&scenario.net);
        let cfg = DwaConfig::default();
        b.iter(|| {
            select_velocity(
                black_box(probe),
                Vec3::new(0.3, 0.0, 0.0),
                &weights,
                probe + Vec3::new(3.0, 0.0, 0.0),
                &wall,
                &scenario.limits,
                &cfg,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_select_velocity, bench_environment_queries);
criterion_main!(benches);
