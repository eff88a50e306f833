//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use qtakagi::rational::parse_rat;
use qtakagi::{validate_config, MultiIndex, QAdicPoint, Rat, SystemConfig, WeightVec};
use serde::Deserialize;

use crate::CliError;

/// Every field a run may need. All optional so that file values and flags merge.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub q: Option<usize>,
    pub sigma: Option<Vec<usize>>,
    pub d: Option<Vec<String>>,
    pub r: Option<Vec<String>>,
    pub u: Option<Vec<u32>>,
    pub x: Option<String>,
    pub k: Option<u32>,
    pub grid_level: Option<u32>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub suite: Option<String>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            q: flags.q.or(self.q),
            sigma: flags.sigma.or(self.sigma),
            d: flags.d.or(self.d),
            r: flags.r.or(self.r),
            u: flags.u.or(self.u),
            x: flags.x.or(self.x),
            k: flags.k.or(self.k),
            grid_level: flags.grid_level.or(self.grid_level),
            output: flags.output.or(self.output),
            seed: flags.seed.or(self.seed),
            trials: flags.trials.or(self.trials),
            suite: flags.suite.or(self.suite),
        }
    }

    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let q = self.q.ok_or_else(|| missing("q"))?;
        let sigma = match &self.sigma {
            Some(s) => s.clone(),
            None => (0..q).collect(),
        };
        validate_config(q, &sigma).map_err(|e| CliError::Config(format!("sigma: {e}")))
    }

    pub fn weights(&self, cfg: &SystemConfig, field: &str) -> Result<WeightVec, CliError> {
        let raw = match field {
            "d" => self.d.as_ref().or(self.r.as_ref()),
            _ => self.r.as_ref(),
        }
        .ok_or_else(|| missing(field))?;
        if raw.len() != cfg.q() {
            return Err(CliError::Config(format!(
                "{field}: expected {} weights, got {}",
                cfg.q(),
                raw.len()
            )));
        }
        let parsed = raw
            .iter()
            .map(|s| {
                parse_rat(s)
                    .ok_or_else(|| CliError::Config(format!("{field}: cannot parse {s:?} as p/q")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        WeightVec::new(parsed).map_err(|e| CliError::Config(format!("{field}: {e}")))
    }

    pub fn multi_index(&self, cfg: &SystemConfig) -> Result<MultiIndex, CliError> {
        let u = self.u.clone().ok_or_else(|| missing("u"))?;
        MultiIndex::new(cfg.q(), u).map_err(|e| CliError::Config(format!("u: {e}")))
    }

    pub fn point(&self, cfg: &SystemConfig) -> Result<QAdicPoint, CliError> {
        let raw = self.x.as_ref().ok_or_else(|| missing("x"))?;
        let x = parse_rat(raw)
            .ok_or_else(|| CliError::Config(format!("x: cannot parse {raw:?} as p/q")))?;
        parse_point(cfg, &x)
    }
}

pub fn parse_point(cfg: &SystemConfig, x: &Rat) -> Result<QAdicPoint, CliError> {
    use num_traits::{One, Zero};
    if *x < Rat::zero() || *x > Rat::one() {
        return Err(CliError::Config("x out of [0,1]".into()));
    }
    QAdicPoint::from_rat(cfg.q(), x).map_err(|e| CliError::Config(format!("x: {e}")))
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!(
        "{field}: missing (pass --{field} or set it in --config)"
    ))
}

/// Splits a comma-separated flag value.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).collect()
}

pub fn parse_usize_list(field: &str, s: &str) -> Result<Vec<usize>, CliError> {
    split_list(s)
        .iter()
        .map(|p| {
            p.parse().map_err(|_| {
                CliError::Config(format!("{field}: {p:?} is not a non-negative integer"))
            })
        })
        .collect()
}
