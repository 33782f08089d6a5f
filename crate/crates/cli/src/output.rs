//! Artifact writers shared by the subcommands. Floats print with
//! shortest round-trip formatting, so reruns are byte-comparable.

use anyhow::Result;
use lumenav_core::agent::CurvePoint;
use lumenav_core::kinematics::RobotState;
use lumenav_core::metrics::{EpisodeReport, MetricSummary};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut text = String::from("step,episode_reward,auc_so_far\n");
    for c in curve {
        writeln!(text, "{},{},{}", c.step, c.episode_reward, c.auc_so_far).unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_episode_csv(path: &Path, report: &EpisodeReport) -> Result<()> {
    let mut text = format!("step,{},reward,v_pct_step\n", RobotState::CSV_HEADER);
    for (i, s) in report.steps.iter().enumerate() {
        writeln!(text, "{},{},{},{}", i + 1, s.state.csv_row(), s.reward, s.v_pct_step).unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// One aggregated row of the summary table.
#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub n: usize,
    pub scenario: String,
    /// Noise level as a fraction of the calibrated mean scan distance.
    pub noise_level: f64,
    /// Absolute scan-noise sigma in world units.
    pub sigma: f64,
    pub episodes: usize,
    /// Episodes that aborted with a degenerate cloud (zero-scored).
    pub failures: usize,
    pub p_mean: f64,
    pub p_std: f64,
    pub p_median: f64,
    pub p_iqr: f64,
    pub v_mean: f64,
    pub v_std: f64,
    pub v_median: f64,
    pub v_iqr: f64,
}

impl SummaryRow {
    pub fn from_reports(
        method: &str,
        n: usize,
        scenario: &str,
        noise_level: f64,
        sigma: f64,
        reports: &[&EpisodeReport],
    ) -> Self {
        let owned: Vec<EpisodeReport> = reports.iter().map(|r| (*r).clone()).collect();
        let summary: MetricSummary = lumenav_core::metrics::aggregate(&owned).expect("non-empty");
        let failures = reports
            .iter()
            .filter(|r| r.outcome == lumenav_core::metrics::Outcome::Aborted)
            .count();
        Self {
            method: method.to_string(),
            n,
            scenario: scenario.to_string(),
            noise_level,
            sigma,
            episodes: reports.len(),
            failures,
            p_mean: summary.p_pct.mean,
            p_std: summary.p_pct.std,
            p_median: summary.p_pct.median,
            p_iqr: summary.p_pct.iqr,
            v_mean: summary.v_pct.mean,
            v_std: summary.v_pct.std,
            v_median: summary.v_pct.median,
            v_iqr: summary.v_pct.iqr,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}
