//! Dataset ingestion, normalization, fold generation and synthetic fixture
//! targets.
//!
//! CSV files carry a header `in_0..in_{d-1},out_0..out_{t-1}`; rows with
//! missing or unparseable cells are dropped at load and counted. Inputs
//! normalize to [-1, 1] and targets to [0, 1] by per-column min-max over the
//! full dataset.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// rows x features
    pub inputs: Vec<Vec<f64>>,
    /// rows x targets
    pub targets: Vec<Vec<f64>>,
    pub task: Task,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.first().map_or(0, |r| r.len())
    }

    pub fn n_targets(&self) -> usize {
        self.targets.first().map_or(0, |r| r.len())
    }

    /// Materialize a row subset (train/test split).
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            inputs: rows.iter().map(|&r| self.inputs[r].clone()).collect(),
            targets: rows.iter().map(|&r| self.targets[r].clone()).collect(),
            task: self.task,
        }
    }

    /// Serialize with the canonical header, mirroring the load format.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n_inputs())
            .map(|i| format!("in_{i}"))
            .chain((0..self.n_targets()).map(|t| format!("out_{t}")))
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for (x, y) in self.inputs.iter().zip(self.targets.iter()) {
            let row: Vec<String> = x.iter().chain(y.iter()).map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// A loaded dataset plus the number of incomplete rows that were dropped.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub dropped: usize,
}

pub fn load_csv(
    path: impl AsRef<Path>,
    n_inputs: usize,
    n_targets: usize,
    task: Task,
) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(BufReader::new(file), &name, n_inputs, n_targets, task)
}

pub fn load_csv_str(
    text: &str,
    name: &str,
    n_inputs: usize,
    n_targets: usize,
    task: Task,
) -> Result<LoadedDataset> {
    parse_csv(BufReader::new(text.as_bytes()), name, n_inputs, n_targets, task)
}

fn parse_csv(
    reader: BufReader<impl Read>,
    name: &str,
    n_inputs: usize,
    n_targets: usize,
    task: Task,
) -> Result<LoadedDataset> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{name}: empty file")))?
        .map_err(|e| Error::Data(format!("{name}: {e}")))?;
    let expected: Vec<String> = (0..n_inputs)
        .map(|i| format!("in_{i}"))
        .chain((0..n_targets).map(|t| format!("out_{t}")))
        .collect();
    let got: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Data(format!(
            "{name}: malformed header, expected {} columns {}..",
            expected.len(),
            expected.first().cloned().unwrap_or_default()
        )));
    }

    let n_cols = n_inputs + n_targets;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut dropped = 0usize;
    let mut saw_row = false;
    for line in lines {
        let line = line.map_err(|e| Error::Data(format!("{name}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        saw_row = true;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != n_cols {
            dropped += 1;
            continue;
        }
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse::<f64>().ok()).collect();
        match parsed {
            Some(values) if values.iter().all(|v| v.is_finite()) => {
                inputs.push(values[..n_inputs].to_vec());
                targets.push(values[n_inputs..].to_vec());
            }
            _ => dropped += 1,
        }
    }
    if !saw_row {
        return Err(Error::Data(format!("{name}: no data rows")));
    }
    if inputs.is_empty() {
        return Err(Error::Data(format!(
            "{name}: all {dropped} rows were incomplete"
        )));
    }
    Ok(LoadedDataset {
        dataset: Dataset {
            name: name.to_string(),
            inputs,
            targets,
            task,
        },
        dropped,
    })
}

/// Per-column (min, max) of the raw data, kept for round-tripping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub input_ranges: Vec<(f64, f64)>,
    pub target_ranges: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct NormalizedDataset {
    pub dataset: Dataset,
    pub params: NormalizationParams,
    /// Constant columns mapped to 0 (inputs) or 0.5 (targets).
    pub constant_inputs: Vec<usize>,
    pub constant_targets: Vec<usize>,
}

fn column_ranges(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let cols = rows.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|c| {
            rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[c]), hi.max(r[c]))
            })
        })
        .collect()
}

/// Min-max normalize inputs to [-1, 1] and targets to [0, 1], using the full
/// dataset's column ranges.
pub fn normalize(d: &Dataset) -> NormalizedDataset {
    let input_ranges = column_ranges(&d.inputs);
    let target_ranges = column_ranges(&d.targets);
    let constant_inputs: Vec<usize> = input_ranges
        .iter()
        .enumerate()
        .filter(|(_, (lo, hi))| lo >= hi)
        .map(|(i, _)| i)
        .collect();
    let constant_targets: Vec<usize> = target_ranges
        .iter()
        .enumerate()
        .filter(|(_, (lo, hi))| lo >= hi)
        .map(|(i, _)| i)
        .collect();
    let inputs = d
        .inputs
        .iter()
        .map(|row| {
            row.iter()
                .zip(input_ranges.iter())
                .map(|(&v, &(lo, hi))| {
                    if lo < hi {
                        -1.0 + 2.0 * (v - lo) / (hi - lo)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let targets = d
        .targets
        .iter()
        .map(|row| {
            row.iter()
                .zip(target_ranges.iter())
                .map(|(&v, &(lo, hi))| if lo < hi { (v - lo) / (hi - lo) } else { 0.5 })
                .collect()
        })
        .collect();
    NormalizedDataset {
        dataset: Dataset {
            name: d.name.clone(),
            inputs,
            targets,
            task: d.task,
        },
        params: NormalizationParams {
            input_ranges,
            target_ranges,
        },
        constant_inputs,
        constant_targets,
    }
}

/// Invert the normalization using stored parameters.
pub fn denormalize(d: &Dataset, params: &NormalizationParams) -> Dataset {
    let inputs = d
        .inputs
        .iter()
        .map(|row| {
            row.iter()
                .zip(params.input_ranges.iter())
                .map(|(&v, &(lo, hi))| {
                    if lo < hi {
                        lo + (v + 1.0) / 2.0 * (hi - lo)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();
    let targets = d
        .targets
        .iter()
        .map(|row| {
            row.iter()
                .zip(params.target_ranges.iter())
                .map(|(&v, &(lo, hi))| if lo < hi { lo + v * (hi - lo) } else { lo })
                .collect()
        })
        .collect();
    Dataset {
        name: d.name.clone(),
        inputs,
        targets,
        task: d.task,
    }
}

/// Per-replicate fold labels: `assignments[replicate][row]` is the fold the
/// row belongs to (its test fold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub replicates: usize,
    pub assignments: Vec<Vec<u32>>,
    pub seed: u64,
}

pub fn make_folds(n_rows: usize, k: usize, replicates: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Usage(format!("fold count must be at least 2, got {k}")));
    }
    if n_rows < k {
        return Err(Error::Usage(format!(
            "cannot split {n_rows} rows into {k} folds"
        )));
    }
    let mut assignments = Vec::with_capacity(replicates);
    for replicate in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, replicate as u64));
        let mut order: Vec<usize> = (0..n_rows).collect();
        order.shuffle(&mut rng);
        // contiguous chunks over the shuffled order; the first n % k folds
        // take the extra row
        let base = n_rows / k;
        let extra = n_rows % k;
        let mut labels = vec![0u32; n_rows];
        let mut cursor = 0usize;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for &row in &order[cursor..cursor + size] {
                labels[row] = fold as u32;
            }
            cursor += size;
        }
        assignments.push(labels);
    }
    Ok(FoldPlan {
        k,
        replicates,
        assignments,
        seed,
    })
}

impl FoldPlan {
    /// Train/test row sets for one (replicate, fold) split.
    pub fn split(&self, replicate: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let labels = &self.assignments[replicate];
        let mut train = Vec::with_capacity(labels.len());
        let mut test = Vec::new();
        for (row, &label) in labels.iter().enumerate() {
            if label as usize == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }

    /// All (replicate, fold) pairs in deterministic order.
    pub fn split_keys(&self) -> Vec<(usize, usize)> {
        (0..self.replicates)
            .flat_map(|r| (0..self.k).map(move |f| (r, f)))
            .collect()
    }

    /// (replicate, row, fold) triples for audit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,row,fold\n");
        for (replicate, labels) in self.assignments.iter().enumerate() {
            for (row, &fold) in labels.iter().enumerate() {
                let _ = writeln!(out, "{replicate},{row},{fold}");
            }
        }
        out
    }
}

/// The synthetic fixture target functions, exposed for direct checks.
pub mod fixtures {
    /// Bump exactly representable by one gaussian hidden node.
    pub fn gaussian_1d(x: f64) -> f64 {
        (-(3.0 * x) * (3.0 * x)).exp()
    }

    /// Ramp exactly representable by one sigmoid hidden node.
    pub fn sigmoid_1d(x: f64) -> f64 {
        1.0 / (1.0 + (-6.0 * x).exp())
    }

    /// Fixed blend of a gaussian bump and a sigmoid ramp; two hidden nodes
    /// of the right kinds reproduce it exactly.
    pub fn composite_fig3(x: f64) -> f64 {
        0.4 * (-(4.0 * x + 2.0) * (4.0 * x + 2.0)).exp()
            + 0.5 / (1.0 + (-(6.0 * x - 1.0)).exp())
            + 0.05
    }

    /// Two correlated targets driven by one shared sine signal.
    pub fn multitarget_fig4(x: f64) -> (f64, f64) {
        let s = 10.0 * (std::f64::consts::PI * x).sin();
        let sig = 1.0 / (1.0 + (-s).exp());
        let lo = 1.0 / (1.0 + 10f64.exp());
        let hi = 1.0 / (1.0 + (-10f64).exp());
        let y1 = (sig - lo) / (hi - lo);
        let y2 = (s.tanh() + 1.0) / 2.0;
        (y1, y2)
    }
}

pub const FIXTURE_NAMES: [&str; 4] = [
    "gaussian_1d",
    "sigmoid_1d",
    "composite_fig3",
    "multitarget_fig4",
];

/// Number of uniform sample points in every fixture dataset.
pub const FIXTURE_POINTS: usize = 200;

/// Dense 1-D fixture dataset on x in [-1, 1]. Fixtures are already within
/// the dataset contract and are used without further normalization.
pub fn fixture_targets(name: &str) -> Result<Dataset> {
    if !FIXTURE_NAMES.contains(&name) {
        return Err(Error::Usage(format!(
            "unknown fixture {name}; expected one of {}",
            FIXTURE_NAMES.join(", ")
        )));
    }
    let xs: Vec<f64> = (0..FIXTURE_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (FIXTURE_POINTS - 1) as f64)
        .collect();
    let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let targets: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| match name {
            "gaussian_1d" => vec![fixtures::gaussian_1d(x)],
            "sigmoid_1d" => vec![fixtures::sigmoid_1d(x)],
            "composite_fig3" => vec![fixtures::composite_fig3(x)],
            _ => {
                let (y1, y2) = fixtures::multitarget_fig4(x);
                vec![y1, y2]
            }
        })
        .collect();
    Ok(Dataset {
        name: name.to_string(),
        inputs,
        targets,
        task: Task::Regression,
    })
}

/// Deterministic synthetic stand-ins for the benchmark datasets whose
/// originals cannot be redistributed here. Shapes, sizes and difficulty
/// mirror the published descriptions; see the README for how to convert the
/// real sources.
pub mod standin {
    use super::*;
    use rand_distr::{Distribution, Normal};

    /// Binary tumor-diagnosis stand-in: 699 samples, 9 integer features in
    /// 1..=10, labels 2 (benign, 458) and 4 (malignant, 241), and 16 rows
    /// with a missing cell so 683 remain after loading. Class overlap is
    /// calibrated so a good classifier lands at a few percent label error.
    pub fn cancer_csv() -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(0xCA4C_E21);
        let mut labels = vec![0u8; 458];
        labels.extend(std::iter::repeat(1u8).take(241));
        labels.shuffle(&mut rng);

        let gains = [1.0, 1.2, 0.9, 1.1, 0.8, 1.3, 1.0, 0.7, 0.6];
        let severity_benign = Normal::new(-2.0, 1.0).unwrap();
        let severity_malignant = Normal::new(2.0, 1.0).unwrap();
        let feature_noise = Normal::new(0.0, 0.8).unwrap();

        // the real source has 16 incomplete rows (14 benign, 2 malignant)
        let mut missing_benign = 14;
        let mut missing_malignant = 2;

        let mut out = String::new();
        let header: Vec<String> = (0..9)
            .map(|i| format!("in_{i}"))
            .chain(std::iter::once("out_0".to_string()))
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for &label in &labels {
            let severity = if label == 0 {
                severity_benign.sample(&mut rng)
            } else {
                severity_malignant.sample(&mut rng)
            };
            let mut cells: Vec<String> = Vec::with_capacity(10);
            for g in gains {
                let v: f64 = 5.5 + g * (severity + feature_noise.sample(&mut rng));
                let f = (v.round() as i64).clamp(1, 10);
                cells.push(f.to_string());
            }
            let incomplete = if label == 0 && missing_benign > 0 {
                missing_benign -= 1;
                true
            } else if label == 1 && missing_malignant > 0 {
                missing_malignant -= 1;
                true
            } else {
                false
            };
            if incomplete {
                cells[5] = "?".to_string();
            }
            cells.push(if label == 0 { "2".into() } else { "4".into() });
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Two-input, two-target engine-style regression stand-in: 1199 samples
    /// of (fuel rate, speed) mapped to smooth torque and emission surfaces
    /// with mild noise.
    pub fn engine_csv() -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(0xE7617E);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut out = String::from("in_0,in_1,out_0,out_1\n");
        for _ in 0..1199 {
            let fuel: f64 = rng.gen_range(2.0..60.0);
            let speed: f64 = rng.gen_range(600.0..4200.0);
            let torque = 180.0 * (fuel / 25.0).tanh()
                * (0.6 + 0.4 * (-((speed - 2400.0) / 1500.0).powi(2)).exp())
                + 2.0 * noise.sample(&mut rng);
            let emission = 120.0 * (fuel / 60.0).powf(1.2) * (0.3 + 0.7 * speed / 4200.0)
                + 1.5 * noise.sample(&mut rng);
            let _ = writeln!(out, "{fuel},{speed},{torque},{emission}");
        }
        out
    }

    /// Spectral regression stand-in: 264 samples, 21 band intensities mixed
    /// from three latent concentrations which are also the targets.
    pub fn cholesterol_csv() -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC801E57);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let centers = [5.0, 12.0, 17.0];
        let widths = [3.0, 4.0, 3.0];
        let mut out = String::new();
        let header: Vec<String> = (0..21)
            .map(|i| format!("in_{i}"))
            .chain((0..3).map(|t| format!("out_{t}")))
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for _ in 0..264 {
            let ldl: f64 = rng.gen_range(60.0..220.0);
            let vldl: f64 = rng.gen_range(5.0..80.0);
            let hdl: f64 = rng.gen_range(25.0..95.0);
            let factors = [ldl, vldl, hdl];
            let mut cells: Vec<String> = Vec::with_capacity(24);
            for band in 0..21 {
                let mut v = 0.0;
                for k in 0..3 {
                    let profile =
                        (-((band as f64 - centers[k]) / widths[k]).powi(2)).exp();
                    v += profile * factors[k] * 0.01;
                }
                v += 0.02 * noise.sample(&mut rng);
                cells.push(format!("{v}"));
            }
            for f in factors {
                let v = f + 0.5 * noise.sample(&mut rng);
                cells.push(format!("{v}"));
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Named dataset shapes for the CLI: (n_inputs, n_targets, task).
pub fn named_shape(name: &str) -> Option<(usize, usize, Task)> {
    match name {
        "cancer" => Some((9, 1, Task::Classification)),
        "engine" => Some((2, 2, Task::Regression)),
        "cholesterol" => Some((21, 3, Task::Regression)),
        _ => None,
    }
}

/// Resolve a `--dataset` argument: a fixture name, a named stand-in, or a
/// CSV path (shape inferred from the header). Loaded CSV data is
/// normalized; fixtures already satisfy the contract.
pub fn resolve_dataset(reference: &str, task_hint: Option<Task>) -> Result<LoadedDataset> {
    if FIXTURE_NAMES.contains(&reference) {
        return Ok(LoadedDataset {
            dataset: fixture_targets(reference)?,
            dropped: 0,
        });
    }
    if let Some((n_in, n_out, task)) = named_shape(reference) {
        let csv = match reference {
            "cancer" => standin::cancer_csv(),
            "engine" => standin::engine_csv(),
            _ => standin::cholesterol_csv(),
        };
        let loaded = load_csv_str(&csv, reference, n_in, n_out, task_hint.unwrap_or(task))?;
        return Ok(LoadedDataset {
            dataset: normalize(&loaded.dataset).dataset,
            dropped: loaded.dropped,
        });
    }
    let path = Path::new(reference);
    if !path.exists() {
        return Err(Error::Usage(format!(
            "dataset {reference} is neither a fixture, a named dataset nor an existing file"
        )));
    }
    let (n_in, n_out) = sniff_shape(path)?;
    let task = task_hint.unwrap_or(Task::Regression);
    let loaded = load_csv(path, n_in, n_out, task)?;
    Ok(LoadedDataset {
        dataset: normalize(&loaded.dataset).dataset,
        dropped: loaded.dropped,
    })
}

/// Infer (n_inputs, n_targets) from a CSV header.
fn sniff_shape(path: &Path) -> Result<(usize, usize)> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut n_in = 0usize;
    let mut n_out = 0usize;
    for col in header.trim().split(',') {
        let col = col.trim();
        if col == format!("in_{n_in}") {
            n_in += 1;
        } else if col == format!("out_{n_out}") {
            n_out += 1;
        } else {
            return Err(Error::Data(format!(
                "{}: malformed header column {col}",
                path.display()
            )));
        }
    }
    if n_in == 0 || n_out == 0 {
        return Err(Error::Data(format!(
            "{}: header must name in_* and out_* columns",
            path.display()
        )));
    }
    Ok((n_in, n_out))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fold_plans_partition_rows(n in 5usize..300, k in 2usize..6, seed in 0u64..1000) {
            prop_assume!(n >= k);
            let plan = make_folds(n, k, 2, seed).unwrap();
            for labels in &plan.assignments {
                let mut counts = vec![0usize; k];
                for &l in labels {
                    counts[l as usize] += 1;
                }
                let total: usize = counts.iter().sum();
                prop_assert_eq!(total, n);
                let max = counts.iter().max().unwrap();
                let min = counts.iter().min().unwrap();
                prop_assert!(max - min <= 1, "fold sizes differ by more than 1");
            }
        }
    }
}
