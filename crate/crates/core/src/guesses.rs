//! Geometric guesses for the optimum and the threshold candidates kept per guess.

use std::sync::Arc;

use crate::dataset::Element;
use crate::error::{invalid, FdmError, Result};
use crate::metric::{diversity, Metric};

/// Ascending guesses `d_min / (1 - eps)^j` that lie in `[d_min, d_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessLadder {
    eps: f64,
    d_min: f64,
    d_max: f64,
    values: Vec<f64>,
}

impl GuessLadder {
    pub fn new(d_min: f64, d_max: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(d_min > 0.0 && d_min.is_finite() && d_max.is_finite() && d_min <= d_max) {
            return Err(invalid(format!(
                "distance bounds must satisfy 0 < d_min <= d_max, got ({d_min}, {d_max})"
            )));
        }
        let ratio = 1.0 / (1.0 - eps);
        let mut values = vec![d_min];
        for j in 1.. {
            let mu = d_min * ratio.powi(j);
            if mu > d_max {
                break;
            }
            values.push(mu);
        }
        Ok(Self {
            eps,
            d_min,
            d_max,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.d_min, self.d_max)
    }
}

/// An element together with its position in the stream.
#[derive(Debug, Clone)]
pub struct Arrival {
    pub seq: u64,
    pub element: Arc<Element>,
}

impl Arrival {
    pub fn new(seq: u64, element: Arc<Element>) -> Self {
        Self { seq, element }
    }

    pub fn id(&self) -> u64 {
        self.element.id
    }

    pub fn group(&self) -> usize {
        self.element.group
    }
}

/// A size-capped set whose members are pairwise at least `mu` apart.
#[derive(Debug, Clone)]
pub struct Candidate {
    mu: f64,
    cap: usize,
    group: Option<usize>,
    members: Vec<Arrival>,
}

impl Candidate {
    pub fn new(mu: f64, cap: usize, group: Option<usize>) -> Self {
        Self {
            mu,
            cap,
            group,
            members: Vec::with_capacity(cap.min(64)),
        }
    }

    /// Appends `x` iff it passes the group filter, the candidate is not full,
    /// and `x` is at distance at least `mu` from every member.
    #[inline]
    pub fn offer(&mut self, x: &Arrival, metric: Metric) -> bool {
        if self.members.len() >= self.cap {
            return false;
        }
        if self.group.is_some_and(|g| g != x.group()) {
            return false;
        }
        let f = &x.element.features;
        if self
            .members
            .iter()
            .any(|m| metric.dist(&m.element.features, f) < self.mu)
        {
            return false;
        }
        self.members.push(x.clone());
        true
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn group_filter(&self) -> Option<usize> {
        self.group
    }

    /// Members in insertion (= arrival) order.
    pub fn members(&self) -> &[Arrival] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.cap
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.members.iter().map(|m| m.element.as_ref())
    }

    pub fn diversity(&self, metric: Metric) -> f64 {
        diversity(metric, self.elements())
    }
}

/// Unconstrained one-pass max-min diversity: one candidate of size `k` per guess.
#[derive(Debug, Clone)]
pub struct SdmState {
    ladder: GuessLadder,
    metric: Metric,
    k: usize,
    candidates: Vec<Candidate>,
    seen: u64,
}

impl SdmState {
    pub fn new(ladder: GuessLadder, metric: Metric, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        let candidates = ladder
            .values()
            .iter()
            .map(|&mu| Candidate::new(mu, k, None))
            .collect();
        Ok(Self {
            ladder,
            metric,
            k,
            candidates,
            seen: 0,
        })
    }

    pub fn process(&mut self, element: Arc<Element>) {
        let x = Arrival::new(self.seen, element);
        self.seen += 1;
        for c in &mut self.candidates {
            c.offer(&x, self.metric);
        }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn ladder(&self) -> &GuessLadder {
        &self.ladder
    }

    /// The full candidate of maximum diversity; ties go to the smaller guess.
    pub fn finalize(&self) -> Result<Vec<Arc<Element>>> {
        let mut best: Option<(f64, &Candidate)> = None;
        for c in self.candidates.iter().filter(|c| c.len() == self.k) {
            let div = c.diversity(self.metric);
            if best.is_none_or(|(b, _)| div > b) {
                best = Some((div, c));
            }
        }
        best.map(|(_, c)| c.members().iter().map(|m| m.element.clone()).collect())
            .ok_or_else(|| {
                FdmError::Infeasible(format!(
                    "no candidate reached size k={} after {} elements",
                    self.k, self.seen
                ))
            })
    }
}
