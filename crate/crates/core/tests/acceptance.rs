//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p fdm-core --test acceptance`.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fdm_core::guesses::Candidate;
use fdm_core::harness::verify::random_instance;
use fdm_core::harness::{generate_blobs, run_benchmark, Algorithm, Allocation, RunConfig};
use fdm_core::matroid::{matroid_intersection, ClusterMatroid, Matroid, PartitionMatroid};
use fdm_core::offline::{brute_force_opt, gmm};
use fdm_core::sfdm2::Sfdm2Guess;
use fdm_core::{
    extremal_distances, Element, FairSolution, FairStream, GroupedDataset, GuessLadder, Metric,
    Sfdm1State, Sfdm2State, StreamParams,
};

#[derive(Default)]
struct Tally {
    checked: usize,
    failures: Vec<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(detail());
        }
    }

    fn ok(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }
}

/// Invariants checked on every stream the suite runs.
#[derive(Default)]
struct Invariants {
    fairness: Tally,
    candidates: Tally,
    clustering: Tally,
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }

    fn tally(&mut self, name: &str, t: &Tally, what: &str) {
        let mut detail = format!(
            "{} {what} checked, {} violations",
            t.checked,
            t.failures.len()
        );
        if let Some(first) = t.failures.first() {
            detail.push_str(&format!(" (first: {first})"));
        }
        self.line(name, t.ok(), detail);
    }
}

fn scan_candidate(c: &Candidate, metric: Metric, inv: &mut Invariants, context: &str) {
    let members = c.members();
    let mut worst = f64::INFINITY;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            worst =
                worst.min(metric.dist(&members[i].element.features, &members[j].element.features));
        }
    }
    let grouped = c
        .group_filter()
        .is_none_or(|g| members.iter().all(|a| a.group() == g));
    inv.candidates.record(
        worst >= c.mu() && members.len() <= c.cap() && grouped,
        || {
            format!(
                "{context}: mu={} min pair={worst} size={}/{}",
                c.mu(),
                members.len(),
                c.cap()
            )
        },
    );
}

fn scan_sfdm1(state: &Sfdm1State, inv: &mut Invariants, context: &str) {
    let metric = state.params().metric;
    for g in state.guesses() {
        scan_candidate(&g.blind, metric, inv, context);
        for c in &g.specific {
            scan_candidate(c, metric, inv, context);
        }
    }
}

fn scan_sfdm2(state: &Sfdm2State, inv: &mut Invariants, context: &str) {
    let metric = state.params().metric;
    for g in state.guesses() {
        scan_candidate(&g.blind, metric, inv, context);
        for c in &g.specific {
            scan_candidate(c, metric, inv, context);
        }
    }
    let m = state.params().num_groups();
    let reports = match state.finalize_detailed() {
        Ok(r) => r,
        Err(e) => {
            inv.clustering.record(false, || format!("{context}: {e}"));
            return;
        }
    };
    for report in reports {
        let guess: &Sfdm2Guess = state
            .guesses()
            .iter()
            .find(|g| g.mu() == report.mu)
            .expect("report belongs to a guess");
        let sources: Vec<&Candidate> = std::iter::once(&guess.blind)
            .chain(guess.specific.iter())
            .collect();
        let violation = clustering_violation(
            &report.clustering.pool,
            &report.clustering.cluster_of,
            &sources,
            metric,
            report.mu,
            m,
        );
        inv.clustering.record(violation.is_none(), || {
            format!("{context}: {}", violation.unwrap_or_default())
        });
    }
}

fn clustering_violation(
    pool: &[fdm_core::Arrival],
    cluster_of: &[usize],
    sources: &[&Candidate],
    metric: Metric,
    mu: f64,
    m: usize,
) -> Option<String> {
    let sep = mu / (m as f64 + 1.0);
    let diam = m as f64 * mu / (m as f64 + 1.0);
    // the pool is exactly the union of the sources
    let mut expected: Vec<u64> = sources
        .iter()
        .flat_map(|c| c.members().iter().map(|a| a.id()))
        .collect();
    expected.sort_unstable();
    expected.dedup();
    let mut got: Vec<u64> = pool.iter().map(|a| a.id()).collect();
    got.sort_unstable();
    if got != expected {
        return Some(format!(
            "mu={mu}: pool differs from the union of candidates"
        ));
    }
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            let d = metric.dist(&pool[i].element.features, &pool[j].element.features);
            if cluster_of[i] != cluster_of[j] && d < sep {
                return Some(format!(
                    "mu={mu}: clusters {} and {} at {d} < {sep}",
                    cluster_of[i], cluster_of[j]
                ));
            }
            if cluster_of[i] == cluster_of[j] && d >= diam {
                return Some(format!(
                    "mu={mu}: cluster {} has diameter {d} >= {diam}",
                    cluster_of[i]
                ));
            }
        }
    }
    for src in sources {
        let mut seen = std::collections::HashSet::new();
        for a in src.members() {
            let p = pool
                .iter()
                .position(|p| p.id() == a.id())
                .expect("member pooled");
            if !seen.insert(cluster_of[p]) {
                return Some(format!(
                    "mu={mu}: cluster {} holds two members of one candidate",
                    cluster_of[p]
                ));
            }
        }
    }
    None
}

fn check_fair(sol: &FairSolution, caps: &[usize], inv: &mut Invariants, context: &str) {
    let mut counts = vec![0usize; caps.len()];
    for e in &sol.elements {
        counts[e.group] += 1;
    }
    let mut ids: Vec<u64> = sol.ids();
    ids.sort_unstable();
    ids.dedup();
    let ok = counts == caps && ids.len() == sol.elements.len();
    inv.fairness.record(ok, || {
        format!("{context}: counts {counts:?} vs caps {caps:?}")
    });
}

fn params_for(ds: &GroupedDataset, caps: &[usize], eps: f64, metric: Metric) -> StreamParams {
    let (d_min, d_max) = extremal_distances(ds, metric).expect("bounds");
    StreamParams {
        metric,
        eps,
        d_min,
        d_max,
        caps: caps.to_vec(),
    }
}

enum Which {
    One,
    Two,
}

/// Streams `order` through the chosen algorithm, runs every invariant scan
/// and returns the solution.
fn solve(
    which: Which,
    params: StreamParams,
    order: &[Arc<Element>],
    inv: &mut Invariants,
    context: &str,
) -> Option<FairSolution> {
    let caps = params.caps.clone();
    let result = match which {
        Which::One => {
            let mut s = Sfdm1State::new(params).expect("params");
            for e in order {
                s.process(e.clone()).expect("process");
            }
            scan_sfdm1(&s, inv, context);
            s.finalize()
        }
        Which::Two => {
            let mut s = Sfdm2State::new(params).expect("params");
            for e in order {
                s.process(e.clone()).expect("process");
            }
            scan_sfdm2(&s, inv, context);
            s.finalize()
        }
    };
    match result {
        Ok(sol) => {
            check_fair(&sol, &caps, inv, context);
            Some(sol)
        }
        Err(e) => {
            inv.fairness.record(false, || format!("{context}: {e}"));
            None
        }
    }
}

struct Ratio {
    tally: Tally,
    worst: f64,
}

impl Ratio {
    fn new() -> Self {
        Self {
            tally: Tally::default(),
            worst: f64::INFINITY,
        }
    }

    fn record(&mut self, got: f64, opt: f64, factor: f64, context: &str) {
        if opt > 0.0 && opt.is_finite() {
            self.worst = self.worst.min(got / opt);
        }
        self.tally.record(got >= factor * opt, || {
            format!("{context}: {got} < {factor} * {opt}")
        });
    }
}

struct OracleCase {
    elements: Vec<Arc<Element>>,
    metric: Metric,
    k: usize,
}

const METRICS: [Metric; 3] = [Metric::Euclidean, Metric::Manhattan, Metric::Angular];

fn ratio_suite(
    which: fn() -> Which,
    groups: &[usize],
    per_group: usize,
    seed: u64,
    factor: impl Fn(f64, usize) -> f64,
    inv: &mut Invariants,
    cases: &mut Vec<OracleCase>,
) -> Ratio {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratio = Ratio::new();
    for &m in groups {
        for i in 0..per_group {
            let eps = if i % 2 == 0 { 0.1 } else { 0.25 };
            let mut inst = random_instance(&mut rng, m, 30, 6, eps);
            inst.metric = METRICS[i % 3];
            let ds = inst.dataset.shuffled(&mut rng);
            let context = format!(
                "seed {seed} m={m} #{i} n={} caps={:?} eps={eps} {}",
                ds.len(),
                inst.caps,
                inst.metric
            );
            let opt = brute_force_opt(
                ds.elements(),
                inst.metric,
                inst.k(),
                Some(&inst.caps),
                false,
            )
            .expect("oracle");
            let params = params_for(&ds, &inst.caps, eps, inst.metric);
            if let Some(sol) = solve(which(), params, ds.elements(), inv, &context) {
                ratio.record(sol.diversity, opt.opt_value, factor(eps, m), &context);
            } else {
                ratio
                    .tally
                    .record(false, || format!("{context}: no solution"));
            }
            cases.push(OracleCase {
                elements: ds.elements().to_vec(),
                metric: inst.metric,
                k: inst.k(),
            });
        }
    }
    ratio
}

/// Independent copy of the matroid pair used for the cardinality check.
struct PairSpec {
    group_of: Vec<usize>,
    caps: Vec<usize>,
    cluster_of: Vec<usize>,
}

impl PairSpec {
    fn independent(&self, set: &[usize]) -> bool {
        let mut per_group = vec![0usize; self.caps.len()];
        let mut per_cluster = vec![0usize; self.cluster_of.len()];
        for &i in set {
            per_group[self.group_of[i]] += 1;
            per_cluster[self.cluster_of[i]] += 1;
        }
        per_group.iter().zip(&self.caps).all(|(c, cap)| c <= cap)
            && per_cluster.iter().all(|&c| c <= 1)
    }

    fn common_rank(&self) -> usize {
        let n = self.group_of.len();
        (0u32..1 << n)
            .filter_map(|mask| {
                let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                self.independent(&set).then_some(set.len())
            })
            .max()
            .unwrap_or(0)
    }
}

fn matroid_suite(seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for i in 0..200 {
        let n = rng.gen_range(1..=12);
        let groups = rng.gen_range(1..=4);
        let spec = PairSpec {
            group_of: (0..n).map(|_| rng.gen_range(0..groups)).collect(),
            caps: (0..groups).map(|_| rng.gen_range(0..=3)).collect(),
            cluster_of: {
                let clusters = rng.gen_range(1..=n);
                (0..n).map(|_| rng.gen_range(0..clusters)).collect()
            },
        };
        let ground: Vec<Arc<Element>> = (0..n)
            .map(|j| {
                Arc::new(Element::new(
                    j as u64,
                    vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)],
                    spec.group_of[j],
                ))
            })
            .collect();
        let mut seed_set = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.3) {
                seed_set.push(j);
                if !spec.independent(&seed_set) {
                    seed_set.pop();
                }
            }
        }
        let m1 = PartitionMatroid::new(&ground, spec.caps.clone());
        let m2 = ClusterMatroid::new(spec.cluster_of.clone());
        debug_assert_eq!(m1.ground_size(), n);
        let want = spec.common_rank();
        match matroid_intersection(&m1, &m2, &ground, Metric::Euclidean, &seed_set) {
            Ok(out) => {
                let mut distinct = out.members.clone();
                distinct.sort_unstable();
                distinct.dedup();
                let ok = out.members.len() == want
                    && distinct.len() == want
                    && spec.independent(&out.members);
                tally.record(ok, || {
                    format!("instance {i}: size {} vs rank {want}", out.members.len())
                });
            }
            Err(e) => tally.record(false, || format!("instance {i}: {e}")),
        }
    }
    tally
}

fn memory_suite(inv: &mut Invariants) -> Tally {
    let mut tally = Tally::default();
    let n = 100_000;
    let k = 20;
    let eps = 0.1;
    for (m, which) in [(2, 1), (2, 2), (5, 2), (10, 2)] {
        let ds = generate_blobs(n, m, 11 + m as u64).expect("blobs");
        let caps = equal_caps(k, m);
        let params = params_for(&ds, &caps, eps, Metric::Euclidean);
        let context = format!("n={n} m={m} sfdm{which}");
        let mut stream: Box<dyn FairStream> = if which == 1 {
            Box::new(Sfdm1State::new(params.clone()).expect("params"))
        } else {
            Box::new(Sfdm2State::new(params.clone()).expect("params"))
        };
        let ladder = stream.ladder().len();
        let bound = if which == 1 {
            2 * k * ladder
        } else {
            (m + 1) * k * ladder
        };
        let mut peak = 0;
        for (i, e) in ds.elements().iter().enumerate() {
            stream.process(e.clone()).expect("process");
            if i % 1000 == 999 {
                peak = peak.max(stream.stored_elements());
            }
        }
        peak = peak.max(stream.stored_elements());
        tally.record(peak <= bound, || {
            format!("{context}: peak {peak} > {bound}")
        });
        println!("  memory {context}: peak stored {peak}, bound {bound} (ladder {ladder})");
        for c in stream.candidates() {
            scan_candidate(c, Metric::Euclidean, inv, &context);
        }
        match stream.finalize() {
            Ok(sol) => check_fair(&sol, &caps, inv, &context),
            Err(e) => inv.fairness.record(false, || format!("{context}: {e}")),
        }
    }
    tally
}

fn equal_caps(k: usize, m: usize) -> Vec<usize> {
    (0..m).map(|g| k / m + usize::from(g < k % m)).collect()
}

/// Mean per-element update time and final stored count over `runs` shuffles.
fn timed_stream(
    ds: &GroupedDataset,
    params: &StreamParams,
    runs: usize,
    seed: u64,
    inv: &mut Invariants,
    context: &str,
) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut stored = 0;
    for r in 0..runs {
        let mut order = ds.elements().to_vec();
        order.shuffle(&mut rng);
        let mut s = Sfdm2State::new(params.clone()).expect("params");
        let start = Instant::now();
        for e in &order {
            s.process(e.clone()).expect("process");
        }
        total += start.elapsed().as_secs_f64() / order.len() as f64;
        stored = stored.max(s.stored_elements());
        if r == 0 {
            for c in s.candidates() {
                scan_candidate(c, params.metric, inv, context);
            }
            match s.finalize() {
                Ok(sol) => check_fair(&sol, &params.caps, inv, context),
                Err(e) => inv.fairness.record(false, || format!("{context}: {e}")),
            }
        }
    }
    (total / runs as f64, stored)
}

fn length_suite(inv: &mut Invariants) -> (bool, String) {
    let (m, k, eps) = (10, 20, 0.1);
    let small = generate_blobs(10_000, m, 5).expect("blobs");
    let large = generate_blobs(1_000_000, m, 5).expect("blobs");
    let (lo_s, hi_s) = extremal_distances(&small, Metric::Euclidean).expect("bounds");
    let (lo_l, hi_l) = extremal_distances(&large, Metric::Euclidean).expect("bounds");
    // one ladder for both lengths so the storage bound is the same
    let params = StreamParams {
        metric: Metric::Euclidean,
        eps,
        d_min: lo_s.min(lo_l),
        d_max: hi_s.max(hi_l),
        caps: equal_caps(k, m),
    };
    let ladder = GuessLadder::new(params.d_min, params.d_max, eps)
        .expect("ladder")
        .len();
    let bound = (m + 1) * k * ladder;
    // warm caches and allocator before timing
    timed_stream(&small, &params, 1, 0, inv, "warm-up");
    let (t_small, s_small) = timed_stream(&small, &params, 10, 1, inv, "n=1e4 m=10");
    let (t_large, s_large) = timed_stream(&large, &params, 1, 2, inv, "n=1e6 m=10");
    let ratio = t_small.max(t_large) / t_small.min(t_large);
    let ok = ratio < 2.0 && s_small <= bound && s_large <= bound;
    (
        ok,
        format!(
            "update {:.3}us vs {:.3}us (ratio {ratio:.2} < 2), stored {s_small} and {s_large} <= {bound}",
            t_small * 1e6,
            t_large * 1e6
        ),
    )
}

fn blobs_suite(inv: &mut Invariants, cases: &mut Vec<OracleCase>) -> (bool, String, Ratio) {
    let ds = generate_blobs(10_000, 2, 9).expect("blobs");
    let mean = |algorithm| {
        let config = RunConfig {
            algorithm,
            k: 20,
            allocation: Allocation::Equal,
            eps: 0.1,
            permutations: 10,
            seed: 3,
            ..RunConfig::default()
        };
        run_benchmark(&config, &ds, "blobs").expect("benchmark")
    };
    let r1 = mean(Algorithm::Sfdm1);
    let r2 = mean(Algorithm::Sfdm2);
    for r in r1.runs.iter().chain(&r2.runs) {
        inv.fairness.record(r.group_counts == vec![10, 10], || {
            format!("blobs permutation {}: {:?}", r.permutation, r.group_counts)
        });
    }
    let ok = r2.mean_diversity >= r1.mean_diversity * 0.95;
    let detail = format!(
        "mean sfdm2 {:.4} >= 0.95 * mean sfdm1 {:.4}",
        r2.mean_diversity, r1.mean_diversity
    );

    // theorem bounds on subsampled 30-point slices
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut ratio = Ratio::new();
    let caps = [10usize, 10];
    for slice in 0..3 {
        let mut picked = Vec::new();
        for g in 0..2 {
            let mut members: Vec<Arc<Element>> = ds
                .elements()
                .iter()
                .filter(|e| e.group == g)
                .cloned()
                .collect();
            members.shuffle(&mut rng);
            picked.extend(members.into_iter().take(15));
        }
        picked.shuffle(&mut rng);
        let sub = GroupedDataset::from_shared(picked, 2).expect("slice");
        let opt = brute_force_opt(sub.elements(), Metric::Euclidean, 20, Some(&caps), false)
            .expect("oracle");
        for p in 0..3 {
            let order = sub.shuffled(&mut rng);
            let params = params_for(&sub, &caps, 0.1, Metric::Euclidean);
            let context = format!("slice {slice} permutation {p}");
            for (which, factor) in [(Which::One, 0.9 / 4.0), (Which::Two, 0.9 / 8.0)] {
                match solve(which, params.clone(), order.elements(), inv, &context) {
                    Some(sol) => ratio.record(sol.diversity, opt.opt_value, factor, &context),
                    None => ratio
                        .tally
                        .record(false, || format!("{context}: no solution")),
                }
            }
        }
        cases.push(OracleCase {
            elements: sub.elements().to_vec(),
            metric: Metric::Euclidean,
            k: 20,
        });
    }
    (ok, detail, ratio)
}

fn gmm_suite(cases: &[OracleCase]) -> Ratio {
    let mut ratio = Ratio::new();
    for (i, case) in cases.iter().enumerate() {
        let context = format!(
            "oracle instance {i} n={} k={} {}",
            case.elements.len(),
            case.k,
            case.metric
        );
        let opt =
            brute_force_opt(&case.elements, case.metric, case.k, None, false).expect("oracle");
        let picked = gmm(&case.elements, case.metric, case.k).expect("gmm");
        let div = fdm_core::diversity(case.metric, picked.iter().map(|e| e.as_ref()));
        ratio.record(div, opt.opt_value, 0.5, &context);
    }
    ratio
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn main() {
    let mut report = Report { failed: 0 };
    let mut inv = Invariants::default();
    let mut cases = Vec::new();

    let (r1, secs) = timed(|| {
        ratio_suite(
            || Which::One,
            &[2],
            240,
            101,
            |eps, _| (1.0 - eps) / 4.0,
            &mut inv,
            &mut cases,
        )
    });
    report.tally(
        "sfdm1 ratio (1-eps)/4 against the fair optimum",
        &r1.tally,
        "instances",
    );
    println!("  worst observed ratio {:.3}, {secs:.1}s", r1.worst);

    let (r2, secs) = timed(|| {
        ratio_suite(
            || Which::Two,
            &[2, 3, 4],
            80,
            202,
            |eps, m| (1.0 - eps) / (3.0 * m as f64 + 2.0),
            &mut inv,
            &mut cases,
        )
    });
    report.tally(
        "sfdm2 ratio (1-eps)/(3m+2) against the fair optimum",
        &r2.tally,
        "instances",
    );
    println!("  worst observed ratio {:.3}, {secs:.1}s", r2.worst);

    let (matroid, secs) = timed(|| matroid_suite(303));
    report.tally(
        "matroid intersection reaches the common rank",
        &matroid,
        "instances",
    );
    println!("  {secs:.1}s");

    let (memory, secs) = timed(|| memory_suite(&mut inv));
    report.tally(
        "stored elements within 2k|U| and (m+1)k|U| at n=1e5",
        &memory,
        "runs",
    );
    println!("  {secs:.1}s");

    let ((ok, detail), secs) = timed(|| length_suite(&mut inv));
    report.line(
        "sfdm2 update time and storage independent of n (1e4 vs 1e6)",
        ok,
        detail,
    );
    println!("  {secs:.1}s");

    let ((ok, detail, slices), secs) = timed(|| blobs_suite(&mut inv, &mut cases));
    let slices_ok = slices.tally.ok();
    report.line(
        "blobs n=1e4 m=2 k=20: sfdm2 within 5% of sfdm1, both within bounds on 30-point slices",
        ok && slices_ok,
        format!(
            "{detail}; slices {} checked, {} violations, worst ratio {:.3}",
            slices.tally.checked,
            slices.tally.failures.len(),
            slices.worst
        ),
    );
    for f in slices.tally.failures.iter().take(3) {
        println!("  {f}");
    }
    println!("  {secs:.1}s");

    let (g, secs) = timed(|| gmm_suite(&cases));
    report.tally(
        "gmm at least half the unconstrained optimum",
        &g.tally,
        "instances",
    );
    println!("  worst observed ratio {:.3}, {secs:.1}s", g.worst);

    report.tally(
        "every solution has exactly k_i elements of group i",
        &inv.fairness,
        "solutions",
    );
    report.tally(
        "every candidate is pairwise at least mu apart",
        &inv.candidates,
        "candidates",
    );
    report.tally(
        "sfdm2 clusterings: separation, one member per candidate, diameter",
        &inv.clustering,
        "clusterings",
    );

    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
