//! Run configuration: JSON file with the same knobs as the CLI flags.
//! Precedence is flag > config file > built-in default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use ssd_core::schedules::ScheduleKind;
use ssd_core::LanczosConfig;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schedule family, e.g. "equal", "convex:0.5", "tanh:2", "sigmoid:3".
    pub schedule: Option<String>,
    pub levels: Option<Vec<usize>>,
    pub t: Option<usize>,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    pub channels: Option<usize>,
    pub seed: Option<u64>,
    pub lanczos: Option<LanczosSection>,
    pub hidden: Option<usize>,
    pub embed_dim: Option<usize>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub iters: Option<usize>,
    pub batch: Option<usize>,
    /// Directory of .stf training images; synthetic blobs when absent.
    pub data: Option<PathBuf>,
    pub synthetic_count: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanczosSection {
    pub max_iters: Option<usize>,
    pub reorthogonalize: Option<bool>,
    pub eig_floor: Option<f64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn lanczos_config(&self) -> LanczosConfig {
        let mut cfg = LanczosConfig::default();
        if let Some(s) = &self.lanczos {
            if let Some(v) = s.max_iters {
                cfg.max_iters = v;
            }
            if let Some(v) = s.reorthogonalize {
                cfg.reorthogonalize = v;
            }
            if let Some(v) = s.eig_floor {
                cfg.eig_floor = v;
            }
            if let Some(v) = s.tol {
                cfg.tol = v;
            }
        }
        cfg
    }
}

/// Parses "equal" / "convex:0.5" / "tanh:2" / "sigmoid:3" / "explicit".
pub fn parse_schedule_kind(spec: &str) -> anyhow::Result<(ScheduleKind, f64)> {
    let (name, gamma) = match spec.split_once(':') {
        Some((n, g)) => (
            n,
            g.parse::<f64>()
                .with_context(|| format!("bad gamma in schedule spec '{spec}'"))?,
        ),
        None => (spec, 1.0),
    };
    let kind = match name {
        "equal" => ScheduleKind::Equal,
        "convex" => ScheduleKind::ConvexDecay,
        "tanh" => ScheduleKind::TanhLikeDecay,
        "sigmoid" => ScheduleKind::SigmoidLikeDecay,
        "explicit" => ScheduleKind::Explicit,
        other => bail!("unknown schedule family '{other}'"),
    };
    if kind.uses_gamma() && spec.split_once(':').is_none() {
        bail!("schedule '{name}' needs a gamma, e.g. '{name}:0.5'");
    }
    Ok((kind, gamma))
}

pub fn parse_levels(spec: &str) -> anyhow::Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("bad level '{s}'"))
        })
        .collect()
}
