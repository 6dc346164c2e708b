//! Fair streaming selection for any number of groups. Each guess keeps a
//! group-blind candidate and one candidate per group (all capped at `k`);
//! post-processing clusters the pooled candidates and completes a fair
//! solution by matroid intersection.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::dataset::Element;
use crate::error::{invalid, FdmError, Result};
use crate::guesses::{Arrival, Candidate, GuessLadder};
use crate::matroid::{matroid_intersection, ClusterMatroid, PartitionMatroid};
use crate::metric::{diversity, Metric};
use crate::stream::{FairSolution, FairStream, Gate, StreamParams};

#[derive(Debug, Clone)]
pub struct Sfdm2Guess {
    pub blind: Candidate,
    pub specific: Vec<Candidate>,
}

impl Sfdm2Guess {
    pub fn mu(&self) -> f64 {
        self.blind.mu()
    }

    /// Union of all candidates of this guess, distinct by id, in arrival order.
    pub fn pool(&self) -> Vec<Arrival> {
        let mut seen = HashSet::new();
        let mut pool: Vec<Arrival> = std::iter::once(&self.blind)
            .chain(&self.specific)
            .flat_map(|c| c.members())
            .filter(|a| seen.insert(a.id()))
            .cloned()
            .collect();
        pool.sort_by_key(|a| a.seq);
        pool
    }
}

/// Single-linkage partition of a pool: two elements share a cluster iff a
/// chain of pairs closer than `threshold` connects them.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub pool: Vec<Arrival>,
    /// Dense cluster index per pool position, numbered by first appearance.
    pub cluster_of: Vec<usize>,
    pub threshold: f64,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.cluster_of.iter().max().map_or(0, |&c| c + 1)
    }

    /// Pool positions grouped by cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Merges clusters while any cross pair is strictly closer than `mu / (m + 1)`.
pub fn build_clusters(
    pool: Vec<Arrival>,
    metric: Metric,
    mu: f64,
    num_groups: usize,
) -> Clustering {
    let threshold = mu / (num_groups as f64 + 1.0);
    let n = pool.len();
    let mut sets = DisjointSets::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if metric.dist(&pool[i].element.features, &pool[j].element.features) < threshold {
                sets.union(i, j);
            }
        }
    }
    let mut dense = vec![usize::MAX; n];
    let mut next = 0;
    let cluster_of = (0..n)
        .map(|i| {
            let r = sets.find(i);
            if dense[r] == usize::MAX {
                dense[r] = next;
                next += 1;
            }
            dense[r]
        })
        .collect();
    Clustering {
        pool,
        cluster_of,
        threshold,
    }
}

/// Earliest-arriving `min(caps[g], count_g)` members of each group.
pub fn initial_partial_solution(blind: &[Arrival], caps: &[usize]) -> Vec<Arrival> {
    let mut taken = vec![0usize; caps.len()];
    blind
        .iter()
        .filter(|a| {
            let g = a.group();
            let keep = g < caps.len() && taken[g] < caps[g];
            if keep {
                taken[g] += 1;
            }
            keep
        })
        .cloned()
        .collect()
}

/// Post-processing outcome for one eligible guess.
#[derive(Debug, Clone)]
pub struct Sfdm2GuessReport {
    pub mu: f64,
    pub clustering: Clustering,
    pub initial: Vec<Arrival>,
    /// The augmented set; fair only when it reached size `k`.
    pub members: Vec<Arrival>,
    pub diversity: f64,
}

#[derive(Debug, Clone)]
pub struct Sfdm2State {
    params: StreamParams,
    ladder: GuessLadder,
    guesses: Vec<Sfdm2Guess>,
    gate: Gate,
    seen: u64,
}

impl Sfdm2State {
    pub fn new(params: StreamParams) -> Result<Self> {
        let ladder = params.validate()?;
        let k = params.k();
        let m = params.num_groups();
        let guesses = ladder
            .values()
            .iter()
            .map(|&mu| Sfdm2Guess {
                blind: Candidate::new(mu, k, None),
                specific: (0..m).map(|g| Candidate::new(mu, k, Some(g))).collect(),
            })
            .collect();
        let gate = Gate::new(m, params.metric);
        Ok(Self {
            params,
            ladder,
            guesses,
            gate,
            seen: 0,
        })
    }

    pub fn guesses(&self) -> &[Sfdm2Guess] {
        &self.guesses
    }

    pub fn params(&self) -> &StreamParams {
        &self.params
    }

    fn eligible(&self, g: &Sfdm2Guess) -> bool {
        g.blind.len() == self.params.k()
            && g.specific
                .iter()
                .zip(&self.params.caps)
                .all(|(c, &cap)| c.len() >= cap)
    }

    /// Runs the post-processing for every eligible guess, in ladder order.
    pub fn finalize_detailed(&self) -> Result<Vec<Sfdm2GuessReport>> {
        self.guesses
            .iter()
            .filter(|g| self.eligible(g))
            .map(|g| self.complete(g))
            .collect()
    }

    fn complete(&self, g: &Sfdm2Guess) -> Result<Sfdm2GuessReport> {
        let metric = self.params.metric;
        let m = self.params.num_groups();
        let initial = initial_partial_solution(g.blind.members(), &self.params.caps);
        let clustering = build_clusters(g.pool(), metric, g.mu(), m);
        let ground: Vec<Arc<Element>> = clustering.pool.iter().map(|a| a.element.clone()).collect();
        let fairness = PartitionMatroid::new(&ground, self.params.caps.clone());
        let separation = ClusterMatroid::new(clustering.cluster_of.clone());
        let seed: Vec<usize> = initial
            .iter()
            .map(|a| {
                clustering
                    .pool
                    .iter()
                    .position(|p| p.id() == a.id())
                    .ok_or_else(|| invalid("blind member missing from pool"))
            })
            .collect::<Result<_>>()?;
        let out = matroid_intersection(&fairness, &separation, &ground, metric, &seed)?;
        let members: Vec<Arrival> = out
            .members
            .iter()
            .map(|&i| clustering.pool[i].clone())
            .collect();
        let diversity = diversity(metric, members.iter().map(|a| a.element.as_ref()));
        Ok(Sfdm2GuessReport {
            mu: g.mu(),
            clustering,
            initial,
            members,
            diversity,
        })
    }

    fn infeasible(&self, reports: &[Sfdm2GuessReport]) -> FdmError {
        let k = self.params.k();
        let mut msg = format!(
            "no guess produced a fair size-{k} solution after {} elements",
            self.seen
        );
        if reports.is_empty() {
            if let Some(g) = self.guesses.first() {
                let spec: Vec<String> = g.specific.iter().map(|c| c.len().to_string()).collect();
                let _ = write!(
                    msg,
                    "; no guess was eligible (smallest guess: blind {}/{k}, groups [{}], caps {:?})",
                    g.blind.len(),
                    spec.join(", "),
                    self.params.caps
                );
            }
        } else {
            let sizes: Vec<String> = reports
                .iter()
                .map(|r| format!("{:.6}:{}", r.mu, r.members.len()))
                .collect();
            let _ = write!(msg, "; achieved sizes per guess [{}]", sizes.join(", "));
        }
        FdmError::Infeasible(msg)
    }
}

impl FairStream for Sfdm2State {
    fn process(&mut self, element: Arc<Element>) -> Result<()> {
        self.gate.check(&element)?;
        let x = Arrival::new(self.seen, element);
        self.seen += 1;
        let metric = self.params.metric;
        let group = x.group();
        for g in &mut self.guesses {
            g.blind.offer(&x, metric);
            g.specific[group].offer(&x, metric);
        }
        Ok(())
    }

    fn finalize(&self) -> Result<FairSolution> {
        let k = self.params.k();
        let reports = self.finalize_detailed()?;
        let best = reports.iter().filter(|r| r.members.len() == k).fold(
            None::<&Sfdm2GuessReport>,
            |best, r| match best {
                Some(cur) if cur.diversity >= r.diversity => best,
                _ => Some(r),
            },
        );
        match best {
            Some(r) => Ok(FairSolution {
                mu: r.mu,
                diversity: r.diversity,
                elements: r.members.iter().map(|a| a.element.clone()).collect(),
            }),
            None => Err(self.infeasible(&reports)),
        }
    }

    fn ladder(&self) -> &GuessLadder {
        &self.ladder
    }

    fn candidates(&self) -> Vec<&Candidate> {
        self.guesses
            .iter()
            .flat_map(|g| std::iter::once(&g.blind).chain(g.specific.iter()))
            .collect()
    }
}
