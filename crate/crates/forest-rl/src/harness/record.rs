//! Experiment results: summary records, raw CSV emission, and the config
//! hash that ties them back to the configuration that produced them.
//!
//! Summary statistics are always recomputable from the raw per-episode rows
//! shipped alongside the record; floats are written with Rust's shortest
//! round-trip formatting so the CSVs carry exact values.

use crate::envs::EpisodeRecord;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// FNV-1a, 64 bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn hash_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

/// Mean, extremes and the 95% confidence half-width (1.96 s / sqrt(n), with
/// s the n-1 sample standard deviation; zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub half_width_95: f64,
}

impl SummaryStats {
    pub fn over(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let half_width_95 = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            1.96 * var.sqrt() / n.sqrt()
        };
        Some(Self {
            mean,
            min,
            max,
            half_width_95,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBlock {
    pub learning_seconds: f64,
    pub evaluation_seconds: f64,
    /// Mean policy query latency; negative means it was not measured.
    pub mean_action_nanos: f64,
}

/// Results for one policy representation: raw reward and step grids indexed
/// [policy][episode], per-policy means, and statistics over those means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: String,
    pub policy_rewards: Vec<Vec<f64>>,
    pub policy_steps: Vec<Vec<usize>>,
    pub policy_means: Vec<f64>,
    pub reward_stats: Option<SummaryStats>,
    pub timing: TimingBlock,
}

impl VariantResult {
    /// Assemble from the raw evaluation grids; means and stats are derived
    /// here so they can never drift from the rows.
    pub fn from_grids(
        variant: &str,
        policy_rewards: Vec<Vec<f64>>,
        policy_steps: Vec<Vec<usize>>,
        timing: TimingBlock,
    ) -> Self {
        let policy_means: Vec<f64> = policy_rewards
            .iter()
            .filter(|episodes| !episodes.is_empty())
            .map(|episodes| episodes.iter().sum::<f64>() / episodes.len() as f64)
            .collect();
        let reward_stats = SummaryStats::over(&policy_means);
        Self {
            variant: variant.to_string(),
            policy_rewards,
            policy_steps,
            policy_means,
            reward_stats,
            timing,
        }
    }
}

/// One online training episode as recorded in the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub steps: usize,
    pub cumulative_reward: f64,
    pub knownness_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCurve {
    pub trial: usize,
    pub episodes: Vec<EpisodeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// FNV-1a of the canonical config serialization.
    pub config_hash: String,
    pub problem: String,
    pub mode: String,
    pub seed: u64,
    pub variants: Vec<VariantResult>,
    /// Learning curves, one per trial; empty for batch runs.
    pub online_trials: Vec<TrialCurve>,
}

impl ResultRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize result record: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse result record: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json()?)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn write_rewards_csv(path: &Path, variants: &[VariantResult]) -> Result<()> {
    let mut s = String::from("variant,policy,episode,cumulative_reward\n");
    for v in variants {
        for (p, episodes) in v.policy_rewards.iter().enumerate() {
            for (e, reward) in episodes.iter().enumerate() {
                let _ = writeln!(s, "{},{p},{e},{reward}", v.variant);
            }
        }
    }
    write_text(path, &s)
}

pub fn write_steps_csv(path: &Path, variants: &[VariantResult]) -> Result<()> {
    let mut s = String::from("variant,policy,episode,steps\n");
    for v in variants {
        for (p, episodes) in v.policy_steps.iter().enumerate() {
            for (e, steps) in episodes.iter().enumerate() {
                let _ = writeln!(s, "{},{p},{e},{steps}", v.variant);
            }
        }
    }
    write_text(path, &s)
}

pub fn write_timing_csv(path: &Path, variants: &[VariantResult]) -> Result<()> {
    let mut s = String::from("variant,learning_seconds,evaluation_seconds,mean_action_nanos\n");
    for v in variants {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            v.variant, v.timing.learning_seconds, v.timing.evaluation_seconds,
            v.timing.mean_action_nanos
        );
    }
    write_text(path, &s)
}

pub fn write_online_trial_csv(path: &Path, curve: &TrialCurve) -> Result<()> {
    let mut s = String::from("episode,steps,cumulative_reward,knownness_points\n");
    for row in &curve.episodes {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            row.episode, row.steps, row.cumulative_reward, row.knownness_points
        );
    }
    write_text(path, &s)
}

/// One rollout as plot-ready rows: step, state, action, reward, terminal.
pub fn write_trajectory_csv(path: &Path, episode: &EpisodeRecord) -> Result<()> {
    let mut s = String::from("step");
    if let Some(first) = episode.samples.first() {
        for d in 1..=first.state.len() {
            let _ = write!(s, ",s_{d}");
        }
        for d in 1..=first.action.len() {
            let _ = write!(s, ",a_{d}");
        }
    }
    s.push_str(",reward,terminal\n");
    for (i, sample) in episode.samples.iter().enumerate() {
        let _ = write!(s, "{i}");
        for v in sample.state.iter().chain(&sample.action) {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{},{}", sample.reward, u8::from(sample.terminal));
    }
    write_text(path, &s)
}

/// Rows of `rewards.csv`, for recomputing statistics from the raw file.
pub fn read_rewards_csv(path: &Path) -> Result<Vec<(String, usize, usize, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("variant,policy,episode,cumulative_reward") => {}
        other => {
            return Err(Error::Config(format!(
                "bad rewards.csv header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!(
                "rewards.csv row {}: expected 4 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Config(format!("rewards.csv row {}: bad {what}", i + 2));
        rows.push((
            fields[0].to_string(),
            fields[1].parse().map_err(|_| bad("policy index"))?,
            fields[2].parse().map_err(|_| bad("episode index"))?,
            fields[3].parse().map_err(|_| bad("reward"))?,
        ));
    }
    Ok(rows)
}
