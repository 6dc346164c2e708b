use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{extremal_distances, GroupedDataset};
use crate::error::{FdmError, Result};
use crate::harness::alloc::allocate_caps;
use crate::harness::config::{Algorithm, RunConfig};
use crate::metric::diversity;
use crate::offline::{brute_force_opt, gmm};
use crate::sfdm1::Sfdm1State;
use crate::sfdm2::Sfdm2State;
use crate::stream::{FairStream, StreamParams};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PermutationResult {
    pub permutation: usize,
    pub diversity: f64,
    /// Wall-clock seconds of stream processing divided by the stream length.
    pub update_time_s: f64,
    pub post_time_s: f64,
    pub stored_elements: usize,
    pub group_counts: Vec<usize>,
    pub solution_ids: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub caps: Vec<usize>,
    pub eps: f64,
    pub metric: String,
    pub d_min: f64,
    pub d_max: f64,
    /// Number of guesses; absent for the offline algorithms.
    pub ladder_len: Option<usize>,
    pub seed: u64,
    pub runs: Vec<PermutationResult>,
    pub mean_diversity: f64,
    pub mean_update_time_s: f64,
    pub mean_post_time_s: f64,
    pub mean_stored_elements: f64,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "algorithm",
    "dataset",
    "m",
    "k",
    "eps",
    "permutation",
    "diversity",
    "update_time_s",
    "post_time_s",
    "stored_elements",
];

impl RunReport {
    /// Copy with every timing field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.mean_update_time_s = 0.0;
        out.mean_post_time_s = 0.0;
        for r in &mut out.runs {
            r.update_time_s = 0.0;
            r.post_time_s = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// One summary row per permutation.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        if header {
            w.write_record(CSV_COLUMNS)?;
        }
        for r in &self.runs {
            w.write_record([
                self.algorithm.to_string(),
                self.dataset.clone(),
                self.m.to_string(),
                self.k.to_string(),
                self.eps.to_string(),
                r.permutation.to_string(),
                r.diversity.to_string(),
                format!("{:e}", r.update_time_s),
                format!("{:e}", r.post_time_s),
                r.stored_elements.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Streams the dataset through the configured algorithm once per seeded
/// permutation, timing stream processing and post-processing separately.
///
/// Distance bounds missing from the config are computed exactly, once, on
/// the unshuffled dataset (they do not depend on arrival order).
pub fn run_benchmark(
    config: &RunConfig,
    dataset: &GroupedDataset,
    name: &str,
) -> Result<RunReport> {
    config.validate()?;
    let m = dataset.num_groups();
    if config.algorithm == Algorithm::Sfdm1 && m != 2 {
        return Err(FdmError::Config(format!(
            "sfdm1 needs exactly 2 groups, the dataset has {m}"
        )));
    }
    dataset.check_metric(config.metric)?;
    let caps = allocate_caps(&config.allocation, config.k, dataset.group_counts())?;
    let (d_min, d_max) = match (config.d_min, config.d_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (exact_lo, exact_hi) = extremal_distances(dataset, config.metric)?;
            (lo.unwrap_or(exact_lo), hi.unwrap_or(exact_hi))
        }
    };
    let params = StreamParams {
        metric: config.metric,
        eps: config.eps,
        d_min,
        d_max,
        caps: caps.clone(),
    };

    let run_one = |p: usize| -> Result<(PermutationResult, Option<usize>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(p as u64);
        let shuffled = dataset.shuffled(&mut rng);
        run_permutation(config.algorithm, &params, &shuffled, p).map_err(|e| match e {
            FdmError::Infeasible(msg) => FdmError::Infeasible(format!("permutation {p}: {msg}")),
            other => other,
        })
    };

    let mut results: Vec<(PermutationResult, Option<usize>)> =
        Vec::with_capacity(config.permutations);
    if config.workers <= 1 {
        for p in 0..config.permutations {
            results.push(run_one(p)?);
        }
    } else {
        let workers = config.workers.min(config.permutations);
        let chunks: Vec<Vec<Result<_>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run_one = &run_one;
                    scope.spawn(move || {
                        (w..config.permutations)
                            .step_by(workers)
                            .map(run_one)
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        for r in chunks.into_iter().flatten() {
            results.push(r?);
        }
        results.sort_by_key(|(r, _)| r.permutation);
    }

    let ladder_len = results.first().and_then(|(_, l)| *l);
    let runs: Vec<PermutationResult> = results.into_iter().map(|(r, _)| r).collect();
    let mean =
        |f: fn(&PermutationResult) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    Ok(RunReport {
        algorithm: config.algorithm,
        dataset: name.to_string(),
        n: dataset.len(),
        m,
        k: config.k,
        caps,
        eps: config.eps,
        metric: config.metric.to_string(),
        d_min,
        d_max,
        ladder_len,
        seed: config.seed,
        mean_diversity: mean(|r| r.diversity),
        mean_update_time_s: mean(|r| r.update_time_s),
        mean_post_time_s: mean(|r| r.post_time_s),
        mean_stored_elements: mean(|r| r.stored_elements as f64),
        runs,
    })
}

fn run_permutation(
    algorithm: Algorithm,
    params: &StreamParams,
    data: &GroupedDataset,
    permutation: usize,
) -> Result<(PermutationResult, Option<usize>)> {
    let n = data.len().max(1) as f64;
    let m = data.num_groups();
    let (solution, update_time_s, post_time_s, stored_elements, ladder_len) = match algorithm {
        Algorithm::Sfdm1 | Algorithm::Sfdm2 => {
            let mut state: Box<dyn FairStream> = if algorithm == Algorithm::Sfdm1 {
                Box::new(Sfdm1State::new(params.clone())?)
            } else {
                Box::new(Sfdm2State::new(params.clone())?)
            };
            let start = Instant::now();
            for e in data.elements() {
                state.process(e.clone())?;
            }
            let update = start.elapsed().as_secs_f64() / n;
            let stored = state.stored_elements();
            let start = Instant::now();
            let sol = state.finalize()?;
            let post = start.elapsed().as_secs_f64();
            (
                sol.elements,
                update,
                post,
                stored,
                Some(state.ladder().len()),
            )
        }
        Algorithm::Gmm => {
            let start = Instant::now();
            let sol = gmm(data.elements(), params.metric, params.k())?;
            (
                sol,
                start.elapsed().as_secs_f64() / n,
                0.0,
                data.len(),
                None,
            )
        }
        Algorithm::Oracle => {
            let start = Instant::now();
            let res = brute_force_opt(
                data.elements(),
                params.metric,
                params.k(),
                Some(&params.caps),
                false,
            )?;
            (
                res.best_set,
                start.elapsed().as_secs_f64() / n,
                0.0,
                data.len(),
                None,
            )
        }
    };
    let mut group_counts = vec![0; m];
    for e in &solution {
        group_counts[e.group] += 1;
    }
    let mut solution_ids: Vec<u64> = solution.iter().map(|e| e.id).collect();
    solution_ids.sort_unstable();
    Ok((
        PermutationResult {
            permutation,
            diversity: diversity(params.metric, solution.iter().map(|e| e.as_ref())),
            update_time_s,
            post_time_s,
            stored_elements,
            group_counts,
            solution_ids,
        },
        ladder_len,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::alloc::Allocation;
    use crate::harness::data::generate_blobs;

    fn config(algorithm: Algorithm) -> RunConfig {
        RunConfig {
            algorithm,
            k: 6,
            permutations: 3,
            seed: 42,
            ..RunConfig::default()
        }
    }

    #[test]
    fn deterministic_modulo_timing() {
        let ds = generate_blobs(400, 3, 9).unwrap();
        let a = run_benchmark(&config(Algorithm::Sfdm2), &ds, "blobs").unwrap();
        let b = run_benchmark(&config(Algorithm::Sfdm2), &ds, "blobs").unwrap();
        assert_eq!(
            a.without_timing().to_json().unwrap(),
            b.without_timing().to_json().unwrap()
        );
        assert_eq!(a.runs.len(), 3);
        for r in &a.runs {
            assert_eq!(r.group_counts, vec![2, 2, 2]);
            assert!(r.stored_elements <= 4 * 6 * a.ladder_len.unwrap());
        }
    }

    #[test]
    fn parallel_workers_match_sequential() {
        let ds = generate_blobs(300, 2, 1).unwrap();
        let seq = run_benchmark(&config(Algorithm::Sfdm1), &ds, "b").unwrap();
        let par = run_benchmark(
            &RunConfig {
                workers: 2,
                ..config(Algorithm::Sfdm1)
            },
            &ds,
            "b",
        )
        .unwrap();
        assert_eq!(seq.without_timing(), par.without_timing());
    }

    #[test]
    fn guards_and_degenerate_timing() {
        let ds = generate_blobs(200, 3, 2).unwrap();
        assert!(matches!(
            run_benchmark(&config(Algorithm::Sfdm1), &ds, "b"),
            Err(FdmError::Config(_))
        ));
        let g = run_benchmark(
            &RunConfig {
                permutations: 1,
                ..config(Algorithm::Gmm)
            },
            &ds,
            "b",
        )
        .unwrap();
        assert_eq!(g.runs[0].post_time_s, 0.0);
        assert_eq!(g.runs[0].stored_elements, 200);
        assert!(g.ladder_len.is_none());
    }

    #[test]
    fn infeasibility_names_the_permutation() {
        let ds = generate_blobs(30, 2, 2).unwrap();
        let cfg = RunConfig {
            allocation: Allocation::Explicit(vec![1, 40]),
            k: 41,
            ..config(Algorithm::Sfdm2)
        };
        match run_benchmark(&cfg, &ds, "b") {
            Err(FdmError::Infeasible(msg)) => assert!(msg.starts_with("permutation 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_summary() {
        let ds = generate_blobs(100, 2, 2).unwrap();
        let r = run_benchmark(&config(Algorithm::Gmm), &ds, "blobs").unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("gmm,blobs,2,6,0.1,0,"));
    }
}
