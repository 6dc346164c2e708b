use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{FdmError, Result};
use crate::harness::alloc::Allocation;
use crate::metric::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sfdm1,
    Sfdm2,
    Gmm,
    Oracle,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Sfdm1 => "sfdm1",
            Algorithm::Sfdm2 => "sfdm2",
            Algorithm::Gmm => "gmm",
            Algorithm::Oracle => "oracle",
        })
    }
}

impl FromStr for Algorithm {
    type Err = FdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sfdm1" => Ok(Algorithm::Sfdm1),
            "sfdm2" => Ok(Algorithm::Sfdm2),
            "gmm" => Ok(Algorithm::Gmm),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(FdmError::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub allocation: Allocation,
    pub eps: f64,
    pub metric: Metric,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub permutations: usize,
    pub seed: u64,
    /// Threads used to run permutations; 1 keeps timings undisturbed.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sfdm2,
            k: 20,
            allocation: Allocation::Equal,
            eps: 0.1,
            metric: Metric::Euclidean,
            d_min: None,
            d_max: None,
            permutations: 10,
            seed: 0,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "algorithm",
        "k",
        "allocation",
        "eps",
        "metric",
        "d_min",
        "d_max",
        "permutations",
        "seed",
        "workers",
    ];

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| FdmError::Config(format!("invalid {what} '{value}'"));
        match key {
            "algorithm" => self.algorithm = value.parse()?,
            "k" => self.k = value.parse().map_err(|_| bad("k"))?,
            "allocation" => self.allocation = value.parse()?,
            "eps" => self.eps = value.parse().map_err(|_| bad("eps"))?,
            "metric" => self.metric = value.parse()?,
            "d_min" => self.d_min = Some(value.parse().map_err(|_| bad("d_min"))?),
            "d_max" => self.d_max = Some(value.parse().map_err(|_| bad("d_max"))?),
            "permutations" => self.permutations = value.parse().map_err(|_| bad("permutations"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "workers" => self.workers = value.parse().map_err(|_| bad("workers"))?,
            other => return Err(FdmError::Config(format!("unknown run setting '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(FdmError::Config("k must be positive".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(FdmError::Config(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if self.permutations == 0 || self.workers == 0 {
            return Err(FdmError::Config(
                "permutations and workers must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// later duplicates win.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| FdmError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

pub fn read_key_values(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    parse_key_values(&std::fs::read_to_string(path)?)
}
