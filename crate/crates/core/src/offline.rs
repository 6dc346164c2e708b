//! Offline reference algorithms: farthest-point greedy (GMM) and an exact
//! enumeration oracle for small instances.

use std::sync::Arc;

use crate::dataset::Element;
use crate::error::{invalid, FdmError, Result};
use crate::metric::{diversity, Metric};

/// Largest instance the oracle accepts without an explicit override.
pub const ORACLE_MAX_N: usize = 30;

/// Farthest-point greedy: start from the first element, then repeatedly add
/// the element farthest from the current selection (ties to the earliest).
pub fn gmm(elements: &[Arc<Element>], metric: Metric, k: usize) -> Result<Vec<Arc<Element>>> {
    let n = elements.len();
    if k == 0 || k > n {
        return Err(invalid(format!("gmm needs 1 <= k <= n, got k={k}, n={n}")));
    }
    let mut chosen = vec![0usize];
    let mut nearest: Vec<f64> = elements
        .iter()
        .map(|e| metric.dist(&e.features, &elements[0].features))
        .collect();
    let mut taken = vec![false; n];
    taken[0] = true;
    while chosen.len() < k {
        let mut next: Option<usize> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            if next.is_none_or(|j| nearest[i] > nearest[j]) {
                next = Some(i);
            }
        }
        let next = next.expect("k <= n leaves an element to pick");
        taken[next] = true;
        chosen.push(next);
        for i in 0..n {
            let d = metric.dist(&elements[i].features, &elements[next].features);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    Ok(chosen.into_iter().map(|i| elements[i].clone()).collect())
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Members in ascending id order.
    pub best_set: Vec<Arc<Element>>,
    pub opt_value: f64,
    /// Whether per-group caps were enforced.
    pub fair: bool,
}

/// Exact maximum diversity over all size-`k` subsets, optionally with exactly
/// `caps[g]` elements per group. Ties resolve to the lexicographically
/// smallest id sequence.
///
/// The search is a depth-first enumeration in id order that prunes any
/// branch whose running minimum cannot beat the incumbent, and any branch
/// that can no longer fill some group.
pub fn brute_force_opt(
    elements: &[Arc<Element>],
    metric: Metric,
    k: usize,
    caps: Option<&[usize]>,
    allow_large: bool,
) -> Result<OracleResult> {
    let n = elements.len();
    if n > ORACLE_MAX_N && !allow_large {
        return Err(invalid(format!(
            "exact search over {n} elements exceeds the limit of {ORACLE_MAX_N} without override"
        )));
    }
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    if let Some(caps) = caps {
        if caps.iter().sum::<usize>() != k {
            return Err(invalid(format!("group caps {caps:?} do not sum to k={k}")));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| elements[i].id);
    let items: Vec<&Arc<Element>> = order.iter().map(|&i| &elements[i]).collect();
    let dist: Vec<Vec<f64>> = items
        .iter()
        .map(|a| {
            items
                .iter()
                .map(|b| metric.dist(&a.features, &b.features))
                .collect()
        })
        .collect();

    let num_groups = caps.map_or(1, |c| c.len());
    let group_of: Vec<usize> = items
        .iter()
        .map(|e| if caps.is_some() { e.group } else { 0 })
        .collect();
    let caps_vec: Vec<usize> = caps.map_or_else(|| vec![k], |c| c.to_vec());
    // remaining[pos][g]: elements of group g at positions >= pos
    let mut remaining = vec![vec![0usize; num_groups]; n + 1];
    for pos in (0..n).rev() {
        remaining[pos] = remaining[pos + 1].clone();
        if group_of[pos] < num_groups {
            remaining[pos][group_of[pos]] += 1;
        }
    }

    let mut search = Search {
        k,
        dist: &dist,
        group_of: &group_of,
        caps: &caps_vec,
        remaining: &remaining,
        counts: vec![0; num_groups],
        chosen: Vec::with_capacity(k),
        best: None,
    };
    search.descend(0, f64::INFINITY);

    match search.best {
        Some((opt_value, set)) => {
            let best_set: Vec<Arc<Element>> = set.iter().map(|&i| items[i].clone()).collect();
            debug_assert_eq!(
                diversity(metric, best_set.iter().map(|e| e.as_ref())),
                opt_value
            );
            Ok(OracleResult {
                best_set,
                opt_value,
                fair: caps.is_some(),
            })
        }
        None => Err(FdmError::Infeasible(match caps {
            Some(c) => format!("no subset of the {n} elements meets group caps {c:?}"),
            None => format!("cannot pick {k} of {n} elements"),
        })),
    }
}

struct Search<'a> {
    k: usize,
    dist: &'a [Vec<f64>],
    group_of: &'a [usize],
    caps: &'a [usize],
    remaining: &'a [Vec<usize>],
    counts: Vec<usize>,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn beaten(&self, value: f64) -> bool {
        self.best.as_ref().is_some_and(|(b, _)| value <= *b)
    }

    fn descend(&mut self, pos: usize, current: f64) {
        if self.chosen.len() == self.k {
            if !self.beaten(current) {
                self.best = Some((current, self.chosen.clone()));
            }
            return;
        }
        let fillable = self
            .caps
            .iter()
            .zip(&self.counts)
            .zip(&self.remaining[pos])
            .all(|((&cap, &have), &left)| cap - have <= left);
        if !fillable {
            return;
        }
        for i in pos..self.dist.len() {
            let g = self.group_of[i];
            if g >= self.caps.len() || self.counts[g] == self.caps[g] {
                continue;
            }
            let value = self
                .chosen
                .iter()
                .map(|&c| self.dist[i][c])
                .fold(current, f64::min);
            if self.beaten(value) {
                continue;
            }
            self.chosen.push(i);
            self.counts[g] += 1;
            self.descend(i + 1, value);
            self.counts[g] -= 1;
            self.chosen.pop();
        }
    }
}
