//! Experiment harness: runs homogeneous/heterogeneous arms over cross-
//! validation splits, aggregates medians and quantiles, and writes
//! plot-ready artifacts.
//!
//! Every split is seeded deterministically from the experiment seed, so
//! re-running a spec reproduces all artifacts byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::activation::{ActivationKind, HIDDEN_CATALOG};
use crate::data::{make_folds, resolve_dataset, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::evolution::{
    run_homogeneous_observed, run_observed, EvolutionConfig, GenerationRecord, RunMetrics,
};
use crate::genome::Genome;
use crate::util::mix_seed;

/// Stream tag separating fold-plan randomness from per-split run seeds.
const FOLD_SEED_STREAM: u64 = 0xF01D;

/// Mutation rates exercised by the sweep mode.
pub const SWEEP_RATES: [f64; 5] = [0.0, 0.1, 0.2, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Heterogeneous,
    Homogeneous(ActivationKind),
    /// Ablation over activation-mutation rates.
    Sweep,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Fixture name, named dataset, or CSV path.
    pub dataset: String,
    pub mode: Mode,
    pub evolution: EvolutionConfig,
    pub folds: usize,
    pub replicates: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads for splits: 1 = serial, 0 = all cores.
    pub parallel: usize,
    /// Print engine progress every N generations (0 = quiet).
    pub log_every: u32,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            dataset: "gaussian_1d".into(),
            mode: Mode::Heterogeneous,
            evolution: EvolutionConfig::default(),
            folds: 5,
            replicates: 10,
            out_dir: PathBuf::from("out"),
            seed: 42,
            parallel: 1,
            log_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileTriple {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Relative frequency of hidden-node activation kinds over a champion set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivationHistogram {
    pub step: f64,
    pub relu: f64,
    pub sigmoid: f64,
    pub gaussian: f64,
    /// True when no champion had any hidden nodes.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub arm: String,
    pub dataset: String,
    pub n_runs: usize,
    pub train_mse: QuantileTriple,
    pub test_mse: QuantileTriple,
    pub median_nodes: f64,
    pub median_hidden_nodes: f64,
    pub median_enabled_connections: f64,
    pub histogram: ActivationHistogram,
}

/// One champion record per (replicate, fold) split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub arm: String,
    pub replicate: usize,
    pub fold: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub n_nodes: usize,
    pub n_hidden: usize,
    pub n_enabled_connections: usize,
}

#[derive(Debug, Clone)]
pub struct ArmOutcome {
    pub summary: SummaryStats,
    pub records: Vec<RunRecord>,
    pub champions: Vec<Genome>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub arms: Vec<ArmOutcome>,
}

/// Linear-interpolation quantile at rank (n - 1) * q over the sorted values.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Usage("quantile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Usage(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (sorted.len() - 1) as f64 * q;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

fn quantile_triple(values: &[f64]) -> Result<QuantileTriple> {
    Ok(QuantileTriple {
        q25: quantile(values, 0.25)?,
        median: quantile(values, 0.5)?,
        q75: quantile(values, 0.75)?,
    })
}

/// Count hidden-node kinds across champion genomes, normalized to sum 1.
/// Genomes without hidden nodes contribute nothing.
pub fn activation_histogram(champions: &[Genome]) -> ActivationHistogram {
    let mut counts = [0usize; 4];
    for genome in champions {
        for node in genome.hidden() {
            match node.activation {
                ActivationKind::Step => counts[0] += 1,
                ActivationKind::Relu => counts[1] += 1,
                ActivationKind::Sigmoid => counts[2] += 1,
                ActivationKind::Gaussian => counts[3] += 1,
                ActivationKind::Linear => unreachable!("hidden nodes are never linear"),
            }
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return ActivationHistogram {
            step: 0.0,
            relu: 0.0,
            sigmoid: 0.0,
            gaussian: 0.0,
            empty: true,
        };
    }
    let f = |c: usize| c as f64 / total as f64;
    ActivationHistogram {
        step: f(counts[0]),
        relu: f(counts[1]),
        sigmoid: f(counts[2]),
        gaussian: f(counts[3]),
        empty: false,
    }
}

pub fn arm_name(mode: &Mode) -> String {
    match mode {
        Mode::Heterogeneous => "ha-neat".into(),
        Mode::Homogeneous(kind) => kind.name().into(),
        Mode::Sweep => "sweep".into(),
    }
}

struct SplitResult {
    record: RunRecord,
    champion: Genome,
    metrics: RunMetrics,
}

fn run_split(
    arm: &str,
    mode: &Mode,
    config: &EvolutionConfig,
    data: &Dataset,
    plan: &FoldPlan,
    replicate: usize,
    fold: usize,
    log_every: u32,
) -> Result<SplitResult> {
    let (train_rows, test_rows) = plan.split(replicate, fold);
    let train = data.subset(&train_rows);
    let test = data.subset(&test_rows);
    let tag = format!("{arm} rep{replicate} fold{fold}");
    let observer = |r: &GenerationRecord| {
        if log_every > 0 && r.generation % log_every == 0 {
            eprintln!(
                "[{tag}] gen {} train {} test {} species {}",
                r.generation, r.best_train_mse, r.best_test_mse, r.n_species
            );
        }
    };
    let (champion, metrics) = match mode {
        Mode::Homogeneous(kind) => run_homogeneous_observed(config, *kind, &train, &test, observer)?,
        _ => run_observed(config, &train, &test, observer)?,
    };
    let last = metrics
        .generations
        .last()
        .ok_or_else(|| Error::Usage("experiments need max_generations >= 1".into()))?;
    let record = RunRecord {
        arm: arm.to_string(),
        replicate,
        fold,
        train_mse: last.best_train_mse,
        test_mse: last.best_test_mse,
        n_nodes: champion.nodes.len(),
        n_hidden: champion.hidden_count(),
        n_enabled_connections: champion.enabled_count(),
    };
    Ok(SplitResult {
        record,
        champion,
        metrics,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

fn summarize(
    arm: &str,
    dataset: &str,
    records: &[RunRecord],
    champions: &[Genome],
) -> Result<SummaryStats> {
    let train: Vec<f64> = records.iter().map(|r| r.train_mse).collect();
    let test: Vec<f64> = records.iter().map(|r| r.test_mse).collect();
    let nodes: Vec<f64> = records.iter().map(|r| r.n_nodes as f64).collect();
    let hidden: Vec<f64> = records.iter().map(|r| r.n_hidden as f64).collect();
    let conns: Vec<f64> = records.iter().map(|r| r.n_enabled_connections as f64).collect();
    Ok(SummaryStats {
        arm: arm.to_string(),
        dataset: dataset.to_string(),
        n_runs: records.len(),
        train_mse: quantile_triple(&train)?,
        test_mse: quantile_triple(&test)?,
        median_nodes: quantile(&nodes, 0.5)?,
        median_hidden_nodes: quantile(&hidden, 0.5)?,
        median_enabled_connections: quantile(&conns, 0.5)?,
        histogram: activation_histogram(champions),
    })
}

/// Run one arm over every (replicate, fold) split, writing per-split
/// artifacts under `dir` and a summary.json beside them.
fn run_arm(
    spec: &ExperimentSpec,
    mode: &Mode,
    config: &EvolutionConfig,
    data: &Dataset,
    plan: &FoldPlan,
    dir: &Path,
) -> Result<ArmOutcome> {
    let arm = arm_name(mode);
    let keys = plan.split_keys();
    let execute = |&(replicate, fold): &(usize, usize)| -> Result<SplitResult> {
        let mut cfg = config.clone();
        cfg.seed = mix_seed(spec.seed, 1 + (replicate * spec.folds + fold) as u64);
        let result = run_split(&arm, mode, &cfg, data, plan, replicate, fold, spec.log_every)?;
        let split_dir = dir.join(format!("runs/rep{replicate}_fold{fold}"));
        write(&split_dir.join("metrics.csv"), &result.metrics.metrics_csv())?;
        write(&split_dir.join("species.csv"), &result.metrics.census_csv())?;
        write(&split_dir.join("champion.json"), &result.champion.to_json())?;
        Ok(result)
    };
    let results: Vec<SplitResult> = if spec.parallel == 1 {
        keys.iter().map(execute).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.parallel)
            .build()
            .map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))?;
        pool.install(|| keys.par_iter().map(execute).collect::<Result<_>>())?
    };

    let records: Vec<RunRecord> = results.iter().map(|r| r.record.clone()).collect();
    let champions: Vec<Genome> = results.into_iter().map(|r| r.champion).collect();
    let summary = summarize(&arm, &data.name, &records, &champions)?;
    write(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail"),
    )?;
    Ok(ArmOutcome {
        summary,
        records,
        champions,
    })
}

fn load_and_plan(spec: &ExperimentSpec) -> Result<(Dataset, FoldPlan)> {
    let loaded = resolve_dataset(&spec.dataset, None)?;
    if loaded.dropped > 0 {
        eprintln!(
            "{}: dropped {} incomplete rows, {} remain",
            loaded.dataset.name,
            loaded.dropped,
            loaded.dataset.n_rows()
        );
    }
    let plan = make_folds(
        loaded.dataset.n_rows(),
        spec.folds,
        spec.replicates,
        mix_seed(spec.seed, FOLD_SEED_STREAM),
    )?;
    Ok((loaded.dataset, plan))
}

/// Execute the spec: one arm for run modes, the rate grid for sweep mode.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.evolution.validate()?;
    let (data, plan) = load_and_plan(spec)?;
    write(&spec.out_dir.join("folds.csv"), &plan.to_csv())?;
    match &spec.mode {
        Mode::Sweep => run_sweep(spec, &data, &plan),
        mode => {
            let outcome = run_arm(spec, mode, &spec.evolution, &data, &plan, &spec.out_dir)?;
            Ok(ExperimentOutcome {
                arms: vec![outcome],
            })
        }
    }
}

/// All five arms on shared splits and seeds, plus the comparison table and
/// the per-run scatter file.
pub fn run_compare(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.evolution.validate()?;
    let (data, plan) = load_and_plan(spec)?;
    write(&spec.out_dir.join("folds.csv"), &plan.to_csv())?;
    let modes: Vec<Mode> = std::iter::once(Mode::Heterogeneous)
        .chain(HIDDEN_CATALOG.iter().map(|&k| Mode::Homogeneous(k)))
        .collect();
    let mut arms = Vec::with_capacity(modes.len());
    for mode in &modes {
        let dir = spec.out_dir.join("arms").join(arm_name(mode));
        arms.push(run_arm(spec, mode, &spec.evolution, &data, &plan, &dir)?);
    }
    let summaries: Vec<&SummaryStats> = arms.iter().map(|a| &a.summary).collect();
    write(&spec.out_dir.join("table.csv"), &comparison_table(&summaries))?;
    let records: Vec<&RunRecord> = arms.iter().flat_map(|a| a.records.iter()).collect();
    write(&spec.out_dir.join("scatter.csv"), &scatter_csv(&records))?;
    Ok(ExperimentOutcome { arms })
}

fn run_sweep(spec: &ExperimentSpec, data: &Dataset, plan: &FoldPlan) -> Result<ExperimentOutcome> {
    let mut arms = Vec::with_capacity(SWEEP_RATES.len());
    let mut series: Vec<(f64, Vec<(u32, f64, f64)>)> = Vec::new();
    for &rate in &SWEEP_RATES {
        let mut config = spec.evolution.clone();
        config.p_mutate_activation = rate;
        let dir = spec.out_dir.join("rates").join(format!("rate_{rate}"));
        let outcome = run_arm(spec, &Mode::Heterogeneous, &config, data, plan, &dir)?;
        // mean train/test error per generation across the arm's splits
        let mut means: Vec<(u32, f64, f64)> = Vec::new();
        let n_gens = spec.evolution.max_generations as usize;
        let mut train_sum = vec![0.0; n_gens];
        let mut test_sum = vec![0.0; n_gens];
        let mut count = 0usize;
        for (replicate, fold) in plan.split_keys() {
            let path = dir.join(format!("runs/rep{replicate}_fold{fold}/metrics.csv"));
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
            for (g, line) in text.lines().skip(1).enumerate() {
                let cells: Vec<&str> = line.split(',').collect();
                train_sum[g] += cells[1].parse::<f64>().unwrap_or(f64::NAN);
                test_sum[g] += cells[2].parse::<f64>().unwrap_or(f64::NAN);
            }
            count += 1;
        }
        for g in 0..n_gens {
            means.push((
                g as u32,
                train_sum[g] / count as f64,
                test_sum[g] / count as f64,
            ));
        }
        series.push((rate, means));
        arms.push(outcome);
    }
    let mut out = String::from("rate,generation,mean_train_mse,mean_test_mse\n");
    for (rate, rows) in &series {
        for (generation, train, test) in rows {
            let _ = writeln!(out, "{rate},{generation},{train},{test}");
        }
    }
    write(&spec.out_dir.join("ablation.csv"), &out)?;
    Ok(ExperimentOutcome { arms })
}

/// Comparison table: one column per arm, rows for the Table-2-style
/// statistics plus network size.
pub fn comparison_table(arms: &[&SummaryStats]) -> String {
    let label = |arm: &str| -> String {
        if arm == "ha-neat" {
            "HA-NEAT".into()
        } else {
            arm.into()
        }
    };
    let mut out = String::from("metric");
    for a in arms {
        let _ = write!(out, ",{}", label(&a.arm));
    }
    out.push('\n');
    let rows: Vec<(&str, Box<dyn Fn(&SummaryStats) -> f64>)> = vec![
        ("test_mse_median", Box::new(|s| s.test_mse.median)),
        ("test_mse_q25", Box::new(|s| s.test_mse.q25)),
        ("test_mse_q75", Box::new(|s| s.test_mse.q75)),
        ("train_mse_median", Box::new(|s| s.train_mse.median)),
        ("train_mse_q25", Box::new(|s| s.train_mse.q25)),
        ("train_mse_q75", Box::new(|s| s.train_mse.q75)),
        ("median_nodes", Box::new(|s| s.median_nodes)),
        (
            "median_enabled_connections",
            Box::new(|s| s.median_enabled_connections),
        ),
    ];
    for (name, extract) in rows {
        let _ = write!(out, "{name}");
        for a in arms {
            let _ = write!(out, ",{}", extract(a));
        }
        out.push('\n');
    }
    out
}

/// Per-run (test MSE, enabled connections) pairs across arms.
pub fn scatter_csv(records: &[&RunRecord]) -> String {
    let mut out = String::from("arm,replicate,fold,test_mse,enabled_connections\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.arm, r.replicate, r.fold, r.test_mse, r.n_enabled_connections
        );
    }
    out
}
