use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Element;
use crate::error::{invalid, FdmError, Result};

/// Distance functions supported by the solvers. All of them are proper
/// metrics on their domain (angular requires nonzero vectors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Angular,
}

impl Metric {
    /// Checked distance between two elements.
    pub fn distance(&self, x: &Element, y: &Element) -> Result<f64> {
        if x.features.len() != y.features.len() {
            return Err(invalid(format!(
                "dimension mismatch: element {} has {} features, element {} has {}",
                x.id,
                x.features.len(),
                y.id,
                y.features.len()
            )));
        }
        if *self == Metric::Angular {
            for e in [x, y] {
                if is_zero(&e.features) {
                    return Err(invalid(format!(
                        "element {} is the zero vector, angular distance is undefined",
                        e.id
                    )));
                }
            }
        }
        Ok(self.dist(&x.features, &y.features))
    }

    /// Unchecked distance on raw feature slices. Callers guarantee equal
    /// length (and nonzero vectors for angular).
    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum(),
            Metric::Angular => {
                if a == b {
                    return 0.0;
                }
                let mut dot = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for (p, q) in a.iter().zip(b) {
                    dot += p * q;
                    na += p * p;
                    nb += q * q;
                }
                let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
                cos.acos()
            }
        }
    }

    /// Whether `features` is a legal point for this metric.
    pub fn admits(&self, features: &[f64]) -> bool {
        features.iter().all(|v| v.is_finite()) && (*self != Metric::Angular || !is_zero(features))
    }
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&c| c == 0.0)
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Angular => "angular",
        })
    }
}

impl FromStr for Metric {
    type Err = FdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "manhattan" | "l1" => Ok(Metric::Manhattan),
            "angular" | "cosine" => Ok(Metric::Angular),
            other => Err(FdmError::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// Distance from `x` to its nearest neighbour in `set`; `+inf` for the empty set.
pub fn set_distance<'a, I>(metric: Metric, x: &Element, set: I) -> f64
where
    I: IntoIterator<Item = &'a Element>,
{
    set.into_iter()
        .map(|y| metric.dist(&x.features, &y.features))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum pairwise distance of `set`; `+inf` when it has fewer than two members.
pub fn diversity<'a, I>(metric: Metric, set: I) -> f64
where
    I: IntoIterator<Item = &'a Element>,
{
    let items: Vec<&Element> = set.into_iter().collect();
    let mut best = f64::INFINITY;
    for (i, x) in items.iter().enumerate() {
        for y in &items[i + 1..] {
            best = best.min(metric.dist(&x.features, &y.features));
        }
    }
    best
}
