//! Partition and cluster matroids over a small ground set, and maximum
//! cardinality matroid intersection (greedy seeding + augmenting paths).

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::dataset::Element;
use crate::error::{invalid, Result};
use crate::metric::Metric;

/// Independence oracle over ground positions `0..ground_size()`.
pub trait Matroid {
    fn ground_size(&self) -> usize;
    fn is_independent(&self, set: &[usize]) -> bool;
}

/// Counts how many members of `set` fall in each label and checks every
/// count against its capacity.
fn within_capacity(labels: &[usize], set: &[usize], capacity: impl Fn(usize) -> usize) -> bool {
    let mut counts: HashMap<usize, usize> = HashMap::with_capacity(set.len());
    set.iter().all(|&i| {
        let c = counts.entry(labels[i]).or_default();
        *c += 1;
        *c <= capacity(labels[i])
    })
}

/// `S` is independent iff it holds at most `caps[g]` elements of each group `g`.
#[derive(Debug, Clone)]
pub struct PartitionMatroid {
    group_of: Vec<usize>,
    caps: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(ground: &[Arc<Element>], caps: Vec<usize>) -> Self {
        Self::from_labels(ground.iter().map(|e| e.group).collect(), caps)
    }

    /// Groups without a cap entry have capacity zero.
    pub fn from_labels(group_of: Vec<usize>, caps: Vec<usize>) -> Self {
        Self { group_of, caps }
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }
}

impl Matroid for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.group_of.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        within_capacity(&self.group_of, set, |g| {
            self.caps.get(g).copied().unwrap_or(0)
        })
    }
}

/// `S` is independent iff it holds at most one element of each cluster.
#[derive(Debug, Clone)]
pub struct ClusterMatroid {
    cluster_of: Vec<usize>,
}

impl ClusterMatroid {
    pub fn new(cluster_of: Vec<usize>) -> Self {
        Self { cluster_of }
    }

    /// Builds the matroid from an element-id to cluster-id map.
    pub fn from_ids(ground: &[Arc<Element>], cluster_by_id: &HashMap<u64, usize>) -> Result<Self> {
        let cluster_of = ground
            .iter()
            .map(|e| {
                cluster_by_id
                    .get(&e.id)
                    .copied()
                    .ok_or_else(|| invalid(format!("element {} has no cluster", e.id)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { cluster_of })
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }
}

impl Matroid for ClusterMatroid {
    fn ground_size(&self) -> usize {
        self.cluster_of.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        within_capacity(&self.cluster_of, set, |_| 1)
    }
}

fn with(set: &[usize], x: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(set.len() + 1);
    v.extend_from_slice(set);
    v.push(x);
    v
}

fn exchanged(set: &[usize], x: usize, y: usize) -> Vec<usize> {
    let mut v: Vec<usize> = set.iter().copied().filter(|&s| s != y).collect();
    v.push(x);
    v
}

/// Exchange digraph for a common independent set `S`.
///
/// Nodes `0..n` are ground positions; `n` is the source and `n + 1` the
/// sink. Source edges go to elements addable in the first matroid, sink
/// edges leave elements addable in the second; `y -> x` when swapping
/// `y in S` for `x` repairs the first matroid and `x -> y` when it repairs
/// the second.
#[derive(Debug, Clone)]
pub struct AugmentationGraph {
    succ: Vec<Vec<usize>>,
}

impl AugmentationGraph {
    pub fn build<M1: Matroid, M2: Matroid>(
        m1: &M1,
        m2: &M2,
        in_set: &[bool],
        order: &[u64],
    ) -> Self {
        let n = in_set.len();
        let source = n;
        let sink = n + 1;
        let set: Vec<usize> = (0..n).filter(|&i| in_set[i]).collect();
        let mut succ = vec![Vec::new(); n + 2];
        for x in (0..n).filter(|&x| !in_set[x]) {
            let grown = with(&set, x);
            let free1 = m1.is_independent(&grown);
            let free2 = m2.is_independent(&grown);
            if free1 {
                succ[source].push(x);
            }
            if free2 {
                succ[x].push(sink);
            }
            for &y in &set {
                if !free1 && m1.is_independent(&exchanged(&set, x, y)) {
                    succ[y].push(x);
                }
                if !free2 && m2.is_independent(&exchanged(&set, x, y)) {
                    succ[x].push(y);
                }
            }
        }
        // deterministic exploration: ascending element id, sink last
        for list in &mut succ {
            list.sort_by_key(|&v| if v >= n { (1, v as u64) } else { (0, order[v]) });
        }
        Self { succ }
    }

    pub fn source(&self) -> usize {
        self.succ.len() - 2
    }

    pub fn sink(&self) -> usize {
        self.succ.len() - 1
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succ[node]
    }

    /// Interior nodes of a shortest source-to-sink path, if one exists.
    pub fn shortest_path(&self) -> Option<Vec<usize>> {
        let (source, sink) = (self.source(), self.sink());
        let mut parent = vec![usize::MAX; self.succ.len()];
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.succ[u] {
                if parent[v] != usize::MAX {
                    continue;
                }
                parent[v] = u;
                if v == sink {
                    let mut path = Vec::new();
                    let mut cur = u;
                    while cur != source {
                        path.push(cur);
                        cur = parent[cur];
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
        None
    }
}

/// Result of [`matroid_intersection`].
#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    /// Ground positions of the final set, ascending.
    pub members: Vec<usize>,
    pub greedy_additions: usize,
    pub augmenting_paths: usize,
}

/// Grows the common independent set `initial` to maximum cardinality.
///
/// Elements addable to both matroids are added first, farthest from the
/// current set first (ties to the lower ground position); augmenting paths
/// on the exchange graph then finish the job.
pub fn matroid_intersection<M1: Matroid, M2: Matroid>(
    m1: &M1,
    m2: &M2,
    ground: &[Arc<Element>],
    metric: Metric,
    initial: &[usize],
) -> Result<Intersection> {
    let n = ground.len();
    if m1.ground_size() != n || m2.ground_size() != n {
        return Err(invalid("matroid ground sets differ from the element list"));
    }
    let mut in_set = vec![false; n];
    for &i in initial {
        if i >= n || in_set[i] {
            return Err(invalid(format!(
                "initial set has an invalid or repeated position {i}"
            )));
        }
        in_set[i] = true;
    }
    let mut set: Vec<usize> = initial.to_vec();
    if !m1.is_independent(&set) || !m2.is_independent(&set) {
        return Err(invalid("initial set is not independent in both matroids"));
    }

    let mut nearest: Vec<f64> = (0..n)
        .map(|x| {
            set.iter()
                .map(|&s| metric.dist(&ground[x].features, &ground[s].features))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut addable1: Vec<bool> = (0..n)
        .map(|x| !in_set[x] && m1.is_independent(&with(&set, x)))
        .collect();
    let mut addable2: Vec<bool> = (0..n)
        .map(|x| !in_set[x] && m2.is_independent(&with(&set, x)))
        .collect();

    let mut greedy_additions = 0;
    loop {
        let mut pick: Option<usize> = None;
        for x in (0..n).filter(|&x| addable1[x] && addable2[x]) {
            if pick.is_none_or(|p| nearest[x] > nearest[p]) {
                pick = Some(x);
            }
        }
        let Some(x) = pick else { break };
        set.push(x);
        in_set[x] = true;
        addable1[x] = false;
        addable2[x] = false;
        greedy_additions += 1;
        for y in 0..n {
            if in_set[y] {
                continue;
            }
            let d = metric.dist(&ground[x].features, &ground[y].features);
            if d < nearest[y] {
                nearest[y] = d;
            }
            if addable1[y] && !m1.is_independent(&with(&set, y)) {
                addable1[y] = false;
            }
            if addable2[y] && !m2.is_independent(&with(&set, y)) {
                addable2[y] = false;
            }
        }
        debug_assert!(m1.is_independent(&set) && m2.is_independent(&set));
    }

    let order: Vec<u64> = ground.iter().map(|e| e.id).collect();
    let mut augmenting_paths = 0;
    loop {
        let graph = AugmentationGraph::build(m1, m2, &in_set, &order);
        let Some(path) = graph.shortest_path() else {
            break;
        };
        for v in path {
            in_set[v] = !in_set[v];
        }
        augmenting_paths += 1;
    }

    let members: Vec<usize> = (0..n).filter(|&i| in_set[i]).collect();
    debug_assert!(m1.is_independent(&members) && m2.is_independent(&members));
    Ok(Intersection {
        members,
        greedy_additions,
        augmenting_paths,
    })
}
