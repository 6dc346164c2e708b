//! Randomized invariant and approximation-ratio checks at desk scale,
//! exposed through the `verify` subcommand.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{extremal_distances, Element, GroupedDataset};
use crate::error::Result;
use crate::guesses::Candidate;
use crate::matroid::{matroid_intersection, ClusterMatroid, Matroid, PartitionMatroid};
use crate::metric::{diversity, Metric};
use crate::offline::{brute_force_opt, gmm};
use crate::sfdm1::Sfdm1State;
use crate::sfdm2::{Clustering, Sfdm2State};
use crate::stream::{FairSolution, FairStream, StreamParams};

/// A small random fair instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dataset: GroupedDataset,
    pub caps: Vec<usize>,
    pub eps: f64,
    pub metric: Metric,
}

impl Instance {
    pub fn k(&self) -> usize {
        self.caps.iter().sum()
    }

    pub fn params(&self) -> Result<StreamParams> {
        let (d_min, d_max) = extremal_distances(&self.dataset, self.metric)?;
        Ok(StreamParams {
            metric: self.metric,
            eps: self.eps,
            d_min,
            d_max,
            caps: self.caps.clone(),
        })
    }
}

/// Random instance with `m` groups, `n <= max_n`, `k` in `[max(2, m), max_k]`
/// and every group large enough for its cap. Points are either uniform in a
/// square or drawn around a few tight centres.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    m: usize,
    max_n: usize,
    max_k: usize,
    eps: f64,
) -> Instance {
    let k = rng.gen_range(m.max(2)..=max_k.max(m.max(2)));
    let mut caps = vec![1usize; m];
    for _ in m..k {
        caps[rng.gen_range(0..m)] += 1;
    }
    let n = rng.gen_range(k..=max_n.max(k));
    let mut groups: Vec<usize> = caps
        .iter()
        .enumerate()
        .flat_map(|(g, &c)| std::iter::repeat_n(g, c))
        .collect();
    while groups.len() < n {
        groups.push(rng.gen_range(0..m));
    }
    groups.shuffle(rng);
    let clustered = rng.gen_bool(0.4);
    let centres: Vec<[f64; 2]> = (0..3)
        .map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
        .collect();
    let elements = groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let p = if clustered {
                let c = centres[rng.gen_range(0..3)];
                vec![
                    c[0] + rng.gen_range(-0.7..0.7),
                    c[1] + rng.gen_range(-0.7..0.7),
                ]
            } else {
                vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]
            };
            Element::new(i as u64, p, g)
        })
        .collect();
    Instance {
        dataset: GroupedDataset::new(elements, m).expect("generated instance is well formed"),
        caps,
        eps,
        metric: Metric::Euclidean,
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(detail());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Exhaustive pair scan: every pair of distinct members at least `mu` apart.
pub fn candidate_is_separated(c: &Candidate, metric: Metric) -> bool {
    c.diversity(metric) >= c.mu()
        && c.len() <= c.cap()
        && c.group_filter()
            .is_none_or(|g| c.elements().all(|e| e.group == g))
}

/// Checks the three clustering properties for `mu` and `m` groups, given
/// the candidates that were pooled. Returns a description of the first
/// violation.
pub fn clustering_violation(
    clustering: &Clustering,
    sources: &[&Candidate],
    metric: Metric,
    mu: f64,
    m: usize,
) -> Option<String> {
    let pool = &clustering.pool;
    let sep = mu / (m as f64 + 1.0);
    let diam = m as f64 * mu / (m as f64 + 1.0);
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            let d = metric.dist(&pool[i].element.features, &pool[j].element.features);
            let same = clustering.cluster_of[i] == clustering.cluster_of[j];
            if !same && d < sep {
                return Some(format!("mu={mu}: cross-cluster pair at {d} < {sep}"));
            }
            if same && d >= diam {
                return Some(format!("mu={mu}: intra-cluster pair at {d} >= {diam}"));
            }
        }
    }
    for cluster in clustering.clusters() {
        for src in sources {
            let hits = cluster
                .iter()
                .filter(|&&p| src.members().iter().any(|a| a.id() == pool[p].id()))
                .count();
            if hits > 1 {
                return Some(format!(
                    "mu={mu}: a cluster holds {hits} members of one candidate"
                ));
            }
        }
    }
    None
}

fn fair(sol: &FairSolution, caps: &[usize]) -> bool {
    sol.group_counts(caps.len()) == caps && sol.elements.len() == caps.iter().sum::<usize>()
}

/// Largest common independent set by exhaustive enumeration.
pub fn brute_force_common_rank<M1: Matroid, M2: Matroid>(m1: &M1, m2: &M2) -> usize {
    let n = m1.ground_size();
    (0u32..1 << n)
        .filter_map(|mask| {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            (m1.is_independent(&set) && m2.is_independent(&set)).then_some(set.len())
        })
        .max()
        .unwrap_or(0)
}

/// Runs the randomized suite on `instances` instances per check.
pub fn run_suite(instances: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratio1 = CheckOutcome::new("sfdm1 ratio >= (1-eps)/4");
    let mut ratio2 = CheckOutcome::new("sfdm2 ratio >= (1-eps)/(3m+2)");
    let mut fairness = CheckOutcome::new("exact group counts");
    let mut separated = CheckOutcome::new("candidate pairwise >= mu");
    let mut clusters = CheckOutcome::new("clustering properties");
    let mut matroid = CheckOutcome::new("matroid intersection optimal");
    let mut greedy = CheckOutcome::new("gmm >= OPT/2");

    for t in 0..instances {
        let eps = if t % 2 == 0 { 0.1 } else { 0.25 };

        let inst = random_instance(&mut rng, 2, 30, 6, eps);
        let params = inst.params()?;
        let els = inst.dataset.elements();
        let opt_f = brute_force_opt(els, inst.metric, inst.k(), Some(&inst.caps), false)?.opt_value;
        let mut s1 = Sfdm1State::new(params)?;
        for e in els {
            s1.process(e.clone())?;
        }
        for c in s1.candidates() {
            separated.record(candidate_is_separated(c, inst.metric), || {
                format!("sfdm1 instance {t} mu={}", c.mu())
            });
        }
        let sol = s1.finalize()?;
        fairness.record(fair(&sol, &inst.caps), || format!("sfdm1 instance {t}"));
        ratio1.record(sol.diversity >= (1.0 - eps) / 4.0 * opt_f, || {
            format!("instance {t}: {} vs OPT_f {opt_f}", sol.diversity)
        });

        let unconstrained = brute_force_opt(els, inst.metric, inst.k(), None, false)?.opt_value;
        let g = gmm(els, inst.metric, inst.k())?;
        let gd = diversity(inst.metric, g.iter().map(|e| e.as_ref()));
        greedy.record(gd >= unconstrained / 2.0, || {
            format!("instance {t}: {gd} vs OPT {unconstrained}")
        });

        let m = 2 + t % 3;
        let inst = random_instance(&mut rng, m, 30, 6, eps);
        let els = inst.dataset.elements();
        let opt_f = brute_force_opt(els, inst.metric, inst.k(), Some(&inst.caps), false)?.opt_value;
        let mut s2 = Sfdm2State::new(inst.params()?)?;
        for e in els {
            s2.process(e.clone())?;
        }
        for c in s2.candidates() {
            separated.record(candidate_is_separated(c, inst.metric), || {
                format!("sfdm2 instance {t} mu={}", c.mu())
            });
        }
        let reports = s2.finalize_detailed()?;
        for r in &reports {
            let guess = s2
                .guesses()
                .iter()
                .find(|g| g.mu() == r.mu)
                .expect("report guess exists");
            let sources: Vec<&Candidate> = std::iter::once(&guess.blind)
                .chain(&guess.specific)
                .collect();
            let v = clustering_violation(&r.clustering, &sources, inst.metric, r.mu, m);
            clusters.record(v.is_none(), || {
                format!("instance {t}: {}", v.unwrap_or_default())
            });
        }
        let sol = s2.finalize()?;
        fairness.record(fair(&sol, &inst.caps), || format!("sfdm2 instance {t}"));
        let bound = (1.0 - eps) / (3.0 * m as f64 + 2.0) * opt_f;
        ratio2.record(sol.diversity >= bound, || {
            format!("instance {t}: {} vs OPT_f {opt_f}", sol.diversity)
        });

        let (m1, m2, ground, seed_set) = random_matroid_pair(&mut rng);
        let out = matroid_intersection(&m1, &m2, &ground, Metric::Euclidean, &seed_set)?;
        let best = brute_force_common_rank(&m1, &m2);
        matroid.record(
            out.members.len() == best
                && m1.is_independent(&out.members)
                && m2.is_independent(&out.members),
            || format!("instance {t}: size {} vs {best}", out.members.len()),
        );
    }
    Ok(vec![
        ratio1, ratio2, fairness, separated, clusters, matroid, greedy,
    ])
}

/// Random partition/cluster matroid pair on at most 12 elements, with a
/// random common independent seed.
pub fn random_matroid_pair<R: Rng>(
    rng: &mut R,
) -> (
    PartitionMatroid,
    ClusterMatroid,
    Vec<Arc<Element>>,
    Vec<usize>,
) {
    let n = rng.gen_range(1..=12);
    let groups = rng.gen_range(1..=4);
    let caps: Vec<usize> = (0..groups).map(|_| rng.gen_range(0..=3)).collect();
    let clusters = rng.gen_range(1..=n);
    let ground: Vec<Arc<Element>> = (0..n)
        .map(|i| {
            Arc::new(Element::new(
                i as u64,
                vec![rng.gen_range(0.0..10.0)],
                rng.gen_range(0..groups),
            ))
        })
        .collect();
    let cluster_of: Vec<usize> = (0..n).map(|_| rng.gen_range(0..clusters)).collect();
    let m1 = PartitionMatroid::new(&ground, caps);
    let m2 = ClusterMatroid::new(cluster_of);
    let mut seed_set = Vec::new();
    for i in 0..n {
        if rng.gen_bool(0.3) {
            seed_set.push(i);
            if !(m1.is_independent(&seed_set) && m2.is_independent(&seed_set)) {
                seed_set.pop();
            }
        }
    }
    (m1, m2, ground, seed_set)
}
