use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Element, GroupedDataset};
use crate::error::{invalid, FdmError, Result};

/// Number of Gaussian blobs drawn by [`generate_blobs`].
pub const BLOBS: usize = 10;
/// Blob centres are uniform in `[-CENTER_RANGE, CENTER_RANGE]^2`.
pub const CENTER_RANGE: f64 = 10.0;

/// Reads a dataset from CSV. Rows become elements in file order with ids
/// `0..n`; group labels are numbered by first appearance. An empty
/// `feature_columns` selects every column except the group column.
pub fn load_csv(
    path: impl AsRef<Path>,
    feature_columns: &[String],
    group_column: &str,
    normalize: bool,
) -> Result<GroupedDataset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let parse_err = |row: usize, message: String| FdmError::Parse {
        path: shown.clone(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| parse_err(1, format!("unknown column '{name}'")))
    };
    let group_idx = column(group_column)?;
    let feature_idx: Vec<usize> = if feature_columns.is_empty() {
        (0..headers.len()).filter(|&i| i != group_idx).collect()
    } else {
        feature_columns
            .iter()
            .map(|c| column(c))
            .collect::<Result<_>>()?
    };
    if feature_idx.is_empty() {
        return Err(parse_err(1, "no feature columns".into()));
    }

    let mut labels: Vec<String> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut elements = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        if record.len() != headers.len() {
            return Err(parse_err(
                row,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let features = feature_idx
            .iter()
            .map(|&c| {
                let raw = record[c].trim();
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(
                            row,
                            format!("non-numeric value '{raw}' in column '{}'", &headers[c]),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = record[group_idx].trim().to_string();
        let group = *label_ids.entry(label.clone()).or_insert_with(|| {
            labels.push(label);
            labels.len() - 1
        });
        elements.push(Element::new(i as u64, features, group));
    }
    if elements.is_empty() {
        return Err(parse_err(1, "the file has no data rows".into()));
    }
    if normalize {
        zscore(&mut elements).map_err(|col| {
            parse_err(
                1,
                format!(
                    "column '{}' has zero standard deviation",
                    &headers[feature_idx[col]]
                ),
            )
        })?;
    }
    let m = labels.len();
    GroupedDataset::new(elements, m)?.with_labels(labels)
}

/// In-place z-score per feature; `Err(column)` for a constant column.
fn zscore(elements: &mut [Element]) -> std::result::Result<(), usize> {
    let n = elements.len() as f64;
    let dim = elements[0].features.len();
    for c in 0..dim {
        let mean = elements.iter().map(|e| e.features[c]).sum::<f64>() / n;
        let var = elements
            .iter()
            .map(|e| (e.features[c] - mean).powi(2))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        if sd.is_nan() || sd <= 0.0 {
            return Err(c);
        }
        for e in elements.iter_mut() {
            e.features[c] = (e.features[c] - mean) / sd;
        }
    }
    Ok(())
}

/// Writes `x0..x{d-1},group` rows, group written by label.
pub fn write_csv(dataset: &GroupedDataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dataset.dim()).map(|i| format!("x{i}")).collect();
    header.push("group".into());
    w.write_record(&header)?;
    for e in dataset.elements() {
        let mut row: Vec<String> = e.features.iter().map(|v| format!("{v}")).collect();
        row.push(dataset.labels()[e.group].clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(dataset: &GroupedDataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(dataset, File::create(path)?)
}

/// Ten isotropic unit-variance 2-d Gaussian blobs with centres uniform in
/// `[-10, 10]^2`; points are split evenly across blobs (remainder to the
/// first blobs) and assigned to one of `m` groups uniformly at random.
pub fn generate_blobs(n: usize, m: usize, seed: u64) -> Result<GroupedDataset> {
    if n == 0 || m == 0 {
        return Err(invalid("blob generation needs n >= 1 and m >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<[f64; 2]> = (0..BLOBS)
        .map(|_| {
            [
                rng.gen_range(-CENTER_RANGE..=CENTER_RANGE),
                rng.gen_range(-CENTER_RANGE..=CENTER_RANGE),
            ]
        })
        .collect();
    let mut elements = Vec::with_capacity(n);
    for (b, center) in centers.iter().enumerate() {
        let count = n / BLOBS + usize::from(b < n % BLOBS);
        for _ in 0..count {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let group = rng.gen_range(0..m);
            let id = elements.len() as u64;
            elements.push(Element::new(
                id,
                vec![center[0] + dx, center[1] + dy],
                group,
            ));
        }
    }
    GroupedDataset::new(elements, m)
}
