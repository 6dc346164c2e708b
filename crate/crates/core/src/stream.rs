//! Shared plumbing for the one-pass fair solvers.

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

use crate::dataset::Element;
use crate::error::{invalid, Result};
use crate::guesses::{Candidate, GuessLadder};
use crate::metric::Metric;

/// Parameters shared by the fair streaming solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamParams {
    pub metric: Metric,
    pub eps: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Required number of elements per group; `k` is their sum.
    pub caps: Vec<usize>,
}

impl StreamParams {
    pub fn k(&self) -> usize {
        self.caps.iter().sum()
    }

    pub fn num_groups(&self) -> usize {
        self.caps.len()
    }

    pub(crate) fn validate(&self) -> Result<GuessLadder> {
        if self.caps.is_empty() {
            return Err(invalid("at least one group cap is required"));
        }
        if let Some(g) = self.caps.iter().position(|&c| c == 0) {
            return Err(invalid(format!(
                "group {g} has cap 0, every cap must be positive"
            )));
        }
        GuessLadder::new(self.d_min, self.d_max, self.eps)
    }
}

/// A size-k set with exactly the requested number of elements per group.
#[derive(Debug, Clone, Serialize)]
pub struct FairSolution {
    /// The guess whose candidate produced this solution.
    pub mu: f64,
    pub diversity: f64,
    #[serde(serialize_with = "serialize_ids")]
    pub elements: Vec<Arc<Element>>,
}

fn serialize_ids<S: serde::Serializer>(els: &[Arc<Element>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(els.iter().map(|e| e.id))
}

impl FairSolution {
    pub fn ids(&self) -> Vec<u64> {
        self.elements.iter().map(|e| e.id).collect()
    }

    pub fn group_counts(&self, num_groups: usize) -> Vec<usize> {
        let mut counts = vec![0; num_groups];
        for e in &self.elements {
            if e.group < num_groups {
                counts[e.group] += 1;
            }
        }
        counts
    }
}

/// Common surface of the fair streaming solvers.
pub trait FairStream {
    /// Consume the next stream element.
    fn process(&mut self, element: Arc<Element>) -> Result<()>;

    /// Post-process the candidates into the best fair solution found.
    fn finalize(&self) -> Result<FairSolution>;

    fn ladder(&self) -> &GuessLadder;

    /// Every live candidate, across all guesses.
    fn candidates(&self) -> Vec<&Candidate>;

    /// Number of distinct elements currently held by the candidates.
    fn stored_elements(&self) -> usize {
        let mut ids = HashSet::new();
        for c in self.candidates() {
            ids.extend(c.members().iter().map(|m| m.id()));
        }
        ids.len()
    }
}

/// Per-element admission checks: group range, uniform dimension, metric domain.
#[derive(Debug, Clone)]
pub(crate) struct Gate {
    num_groups: usize,
    dim: Option<usize>,
    metric: Metric,
}

impl Gate {
    pub(crate) fn new(num_groups: usize, metric: Metric) -> Self {
        Self {
            num_groups,
            dim: None,
            metric,
        }
    }

    pub(crate) fn check(&mut self, e: &Element) -> Result<()> {
        if e.group >= self.num_groups {
            return Err(invalid(format!(
                "element {} has group {} but only {} groups are configured",
                e.id, e.group, self.num_groups
            )));
        }
        match self.dim {
            Some(d) if d != e.features.len() => {
                return Err(invalid(format!(
                    "element {} has dimension {}, stream dimension is {}",
                    e.id,
                    e.features.len(),
                    d
                )))
            }
            Some(_) => {}
            None => self.dim = Some(e.features.len()),
        }
        if !self.metric.admits(&e.features) {
            return Err(invalid(format!(
                "element {} is not a valid point for the {} metric",
                e.id, self.metric
            )));
        }
        Ok(())
    }
}
