//! `lumenav gen-env`: generate the configured network and export its
//! wall cloud for inspection.

use crate::config::ExperimentConfig;
use crate::manifest::write_manifest;
use anyhow::Result;
use lumenav_core::env::generate_network;
use std::fmt::Write as _;
use std::path::Path;

pub fn run(cfg: &ExperimentConfig, out: &Path, ring_points: usize) -> Result<()> {
    let net = generate_network(cfg.env.seed, &cfg.env)
        .map_err(|e| anyhow::anyhow!("generating network: {e}"))?;
    std::fs::create_dir_all(out)?;
    write_manifest(out, "gen-env", cfg, None)?;

    let cloud = net.wall_cloud(ring_points);
    let mut text = String::from("x,y,z\n");
    for p in &cloud {
        writeln!(text, "{},{},{}", p.x, p.y, p.z).unwrap();
    }
    let path = out.join("network_cloud.csv");
    std::fs::write(&path, text)?;

    let bbox = net.bounding_box();
    eprintln!(
        "network: {} segments, {} branch points, {} wall points -> {}",
        net.segments().len(),
        net.branch_points().len(),
        cloud.len(),
        path.display()
    );
    eprintln!(
        "bounding box: [{:.2}, {:.2}, {:.2}] .. [{:.2}, {:.2}, {:.2}]",
        bbox.min[0], bbox.min[1], bbox.min[2], bbox.max[0], bbox.max[1], bbox.max[2]
    );
    Ok(())
}
