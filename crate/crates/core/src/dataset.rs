use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::extremes::extremes;
use crate::metric::Metric;

/// One stream item: an identifier, a point in feature space and the
/// demographic group it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: u64,
    pub features: Vec<f64>,
    pub group: usize,
}

impl Element {
    pub fn new(id: u64, features: Vec<f64>, group: usize) -> Self {
        Self {
            id,
            features,
            group,
        }
    }
}

/// An ordered (arrival order) collection of elements partitioned into `m` groups.
#[derive(Debug, Clone)]
pub struct GroupedDataset {
    elements: Vec<Arc<Element>>,
    dim: usize,
    group_counts: Vec<usize>,
    labels: Vec<String>,
}

impl GroupedDataset {
    pub fn new(elements: Vec<Element>, num_groups: usize) -> Result<Self> {
        Self::from_shared(elements.into_iter().map(Arc::new).collect(), num_groups)
    }

    pub fn from_shared(elements: Vec<Arc<Element>>, num_groups: usize) -> Result<Self> {
        if num_groups == 0 {
            return Err(invalid("a dataset needs at least one group"));
        }
        let dim = elements.first().map_or(0, |e| e.features.len());
        let mut group_counts = vec![0; num_groups];
        let mut ids = HashSet::with_capacity(elements.len());
        for e in &elements {
            if e.features.len() != dim {
                return Err(invalid(format!(
                    "element {} has dimension {}, expected {}",
                    e.id,
                    e.features.len(),
                    dim
                )));
            }
            if e.group >= num_groups {
                return Err(invalid(format!(
                    "element {} has group {} but the dataset declares {} groups",
                    e.id, e.group, num_groups
                )));
            }
            if !ids.insert(e.id) {
                return Err(invalid(format!("duplicate element id {}", e.id)));
            }
            group_counts[e.group] += 1;
        }
        let labels = (0..num_groups).map(|g| g.to_string()).collect();
        Ok(Self {
            elements,
            dim,
            group_counts,
            labels,
        })
    }

    /// Attach human-readable group names (index = group id).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.group_counts.len() {
            return Err(invalid(format!(
                "{} labels supplied for {} groups",
                labels.len(),
                self.group_counts.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn elements(&self) -> &[Arc<Element>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_groups(&self) -> usize {
        self.group_counts.len()
    }

    pub fn group_counts(&self) -> &[usize] {
        &self.group_counts
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Rejects points the metric cannot handle (non-finite values, zero
    /// vectors under the angular metric).
    pub fn check_metric(&self, metric: Metric) -> Result<()> {
        match self.elements.iter().find(|e| !metric.admits(&e.features)) {
            Some(e) => Err(invalid(format!(
                "element {} is not a valid point for the {metric} metric",
                e.id
            ))),
            None => Ok(()),
        }
    }

    /// A copy of the dataset in a uniformly random arrival order.
    pub fn shuffled<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut out = self.clone();
        out.elements.shuffle(rng);
        out
    }

    /// Keep only the elements selected by `keep`, preserving order and group count.
    pub fn filter(&self, mut keep: impl FnMut(&Element) -> bool) -> Self {
        let elements: Vec<_> = self.elements.iter().filter(|e| keep(e)).cloned().collect();
        let mut group_counts = vec![0; self.num_groups()];
        for e in &elements {
            group_counts[e.group] += 1;
        }
        Self {
            elements,
            dim: self.dim,
            group_counts,
            labels: self.labels.clone(),
        }
    }
}

/// Exact smallest nonzero and largest pairwise distances of the dataset.
///
/// Both come from a kd-tree branch-and-bound. Pruning bounds carry a little
/// floating-point slack; the reported values are real pairwise distances.
pub fn extremal_distances(dataset: &GroupedDataset, metric: Metric) -> Result<(f64, f64)> {
    extremal_distances_of(dataset.elements(), metric)
}

pub fn extremal_distances_of(elements: &[Arc<Element>], metric: Metric) -> Result<(f64, f64)> {
    if elements.len() < 2 {
        return Err(invalid("extremal distances need at least two elements"));
    }
    let points: Vec<&[f64]> = elements.iter().map(|e| e.features.as_slice()).collect();
    let (d_min, d_max) = extremes(metric, &points);
    if !d_min.is_finite() {
        return Err(invalid("all pairwise distances are zero"));
    }
    Ok((d_min, d_max))
}
