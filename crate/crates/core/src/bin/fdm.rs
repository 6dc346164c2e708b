use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdm_core::harness::config::read_key_values;
use fdm_core::harness::data::write_csv_file;
use fdm_core::harness::verify::run_suite;
use fdm_core::harness::{
    allocate_caps, generate_blobs, load_csv, run_benchmark, write_csv, Allocation, RunConfig,
};
use fdm_core::offline::brute_force_opt;
use fdm_core::{extremal_distances, FdmError, GroupedDataset, Metric, Result};

/// Streaming fair max-min diversity maximization benchmarks.
#[derive(Parser)]
#[command(name = "fdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a synthetic Gaussian-blob dataset as CSV.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, short)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the exact smallest nonzero and largest pairwise distances.
    ///
    /// Duplicate points (distance zero) are ignored for the minimum.
    Bounds {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
    },
    /// Run a benchmark and emit a JSON record (and optionally CSV rows).
    Run {
        /// Flat `key = value` file with run and dataset settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        /// equal, proportional, or a comma-separated cap list
        #[arg(long)]
        allocation: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        d_min: Option<f64>,
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Append per-permutation summary rows to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the JSON record here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact optimum (fair and unconstrained) on a small dataset.
    Oracle {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "equal")]
        allocation: String,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        /// Allow more than 30 elements.
        #[arg(long)]
        allow_large: bool,
    },
    /// Run the randomized invariant and approximation-ratio suite.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Default)]
struct DataArgs {
    /// CSV dataset (header row, one group column).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    group_column: Option<String>,
    /// Comma-separated feature columns; all non-group columns by default.
    #[arg(long)]
    features: Option<String>,
    /// z-score every feature column.
    #[arg(long)]
    normalize: bool,
    /// Use synthetic blobs with this many points instead of a file.
    #[arg(long)]
    synthetic_n: Option<usize>,
    /// Number of groups for synthetic blobs.
    #[arg(long)]
    synthetic_m: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
}

const DATA_KEYS: &[&str] = &[
    "input",
    "group_column",
    "features",
    "normalize",
    "synthetic_n",
    "synthetic_m",
    "data_seed",
];

impl DataArgs {
    /// Fills unset fields from config-file values.
    fn merge(&mut self, file: &BTreeMap<String, String>) -> Result<()> {
        let bad = |k: &str| FdmError::Config(format!("invalid value for {k}"));
        if let Some(v) = file.get("input") {
            self.input.get_or_insert_with(|| PathBuf::from(v));
        }
        if let Some(v) = file.get("group_column") {
            self.group_column.get_or_insert_with(|| v.clone());
        }
        if let Some(v) = file.get("features") {
            self.features.get_or_insert_with(|| v.clone());
        }
        if let Some(v) = file.get("normalize") {
            self.normalize |= v.parse::<bool>().map_err(|_| bad("normalize"))?;
        }
        if let Some(v) = file.get("synthetic_n") {
            let n = v.parse().map_err(|_| bad("synthetic_n"))?;
            self.synthetic_n.get_or_insert(n);
        }
        if let Some(v) = file.get("synthetic_m") {
            let m = v.parse().map_err(|_| bad("synthetic_m"))?;
            self.synthetic_m.get_or_insert(m);
        }
        if let Some(v) = file.get("data_seed") {
            let s = v.parse().map_err(|_| bad("data_seed"))?;
            self.data_seed.get_or_insert(s);
        }
        Ok(())
    }

    fn load(&self) -> Result<(GroupedDataset, String)> {
        match (&self.input, self.synthetic_n) {
            (Some(path), None) => {
                let features: Vec<String> = self
                    .features
                    .as_deref()
                    .map(|f| f.split(',').map(|c| c.trim().to_string()).collect())
                    .unwrap_or_default();
                let group = self.group_column.as_deref().unwrap_or("group");
                let ds = load_csv(path, &features, group, self.normalize)?;
                let name = path
                    .file_stem()
                    .map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
                Ok((ds, name))
            }
            (None, Some(n)) => {
                let m = self.synthetic_m.unwrap_or(2);
                let seed = self.data_seed.unwrap_or(0);
                Ok((
                    generate_blobs(n, m, seed)?,
                    format!("blobs-n{n}-m{m}-s{seed}"),
                ))
            }
            _ => Err(FdmError::Config(
                "give exactly one of --input or --synthetic-n".into(),
            )),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { n, m, seed, out } => {
            let ds = generate_blobs(n, m, seed)?;
            match out {
                Some(path) => write_csv_file(&ds, path)?,
                None => write_csv(&ds, io::stdout().lock())?,
            }
        }
        Command::Bounds { data, metric } => {
            let (ds, _) = data.load()?;
            let (lo, hi) = extremal_distances(&ds, metric)?;
            println!("d_min = {lo}");
            println!("d_max = {hi}");
        }
        Command::Run {
            config,
            mut data,
            algorithm,
            k,
            allocation,
            eps,
            metric,
            d_min,
            d_max,
            permutations,
            seed,
            workers,
            csv,
            json,
        } => {
            let mut cfg = RunConfig::default();
            if let Some(path) = config {
                let file = read_key_values(path)?;
                for (key, value) in &file {
                    if RunConfig::KEYS.contains(&key.as_str()) {
                        cfg.set(key, value)?;
                    } else if !DATA_KEYS.contains(&key.as_str()) {
                        return Err(FdmError::Config(format!("unknown config key '{key}'")));
                    }
                }
                data.merge(&file)?;
            }
            let flags = [
                ("algorithm", algorithm),
                ("k", k.map(|v| v.to_string())),
                ("allocation", allocation),
                ("eps", eps.map(|v| v.to_string())),
                ("metric", metric),
                ("d_min", d_min.map(|v| v.to_string())),
                ("d_max", d_max.map(|v| v.to_string())),
                ("permutations", permutations.map(|v| v.to_string())),
                ("seed", seed.map(|v| v.to_string())),
                ("workers", workers.map(|v| v.to_string())),
            ];
            for (key, value) in flags {
                if let Some(value) = value {
                    cfg.set(key, &value)?;
                }
            }
            let (ds, name) = data.load()?;
            let report = run_benchmark(&cfg, &ds, &name)?;
            let record = report.to_json()?;
            match json {
                Some(path) => std::fs::write(path, record + "\n")?,
                None => println!("{record}"),
            }
            if let Some(path) = csv {
                let fresh = std::fs::metadata(&path).map_or(true, |m| m.len() == 0);
                let file = OpenOptions::new().create(true).append(true).open(path)?;
                report.write_csv(file, fresh)?;
            }
        }
        Command::Oracle {
            data,
            k,
            allocation,
            metric,
            allow_large,
        } => {
            let (ds, _) = data.load()?;
            let alloc: Allocation = allocation.parse()?;
            let caps = allocate_caps(&alloc, k, ds.group_counts())?;
            let opt = brute_force_opt(ds.elements(), metric, k, None, allow_large)?;
            let opt_f = brute_force_opt(ds.elements(), metric, k, Some(&caps), allow_large)?;
            let ids = |set: &[std::sync::Arc<fdm_core::Element>]| -> Vec<u64> {
                set.iter().map(|e| e.id).collect()
            };
            let out = serde_json::json!({
                "k": k,
                "caps": caps,
                "opt": opt.opt_value,
                "opt_ids": ids(&opt.best_set),
                "opt_f": opt_f.opt_value,
                "opt_f_ids": ids(&opt_f.best_set),
            });
            println!("{out}");
        }
        Command::Verify { instances, seed } => {
            let outcomes = run_suite(instances, seed)?;
            let mut stdout = io::stdout().lock();
            let mut ok = true;
            for o in &outcomes {
                let status = if o.passed() { "PASS" } else { "FAIL" };
                writeln!(
                    stdout,
                    "[{status}] {} ({} checks, {} failures)",
                    o.name,
                    o.checked,
                    o.failures.len()
                )?;
                for f in o.failures.iter().take(5) {
                    writeln!(stdout, "       {f}")?;
                }
                ok &= o.passed();
            }
            return Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}
