//! Acceptance suite: one test per criterion, each printing a pass line and
//! holding its stated runtime bound. Run with `--nocapture` to watch the
//! lines appear.

mod common;

use std::time::Instant;

use common::{dfs_has_cycle, oracle_evaluate, random_genome, reaches};
use haneat::activation::{ActivationKind, HIDDEN_CATALOG};
use haneat::data::{fixture_targets, load_csv, make_folds, normalize, standin, Task};
use haneat::evolution::{run, run_homogeneous, run_with_catalog, EvolutionConfig, RunMetrics};
use haneat::experiment::quantile;
use haneat::genome::{
    CompatCoefficients, ConnectReject, ConnectionGene, Genome, Innovation, NodeGene, NodeId,
    NodeRole,
};
use haneat::innovation::InnovationRegistry;
use haneat::network::Phenotype;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5).expect("non-empty")
}

fn pass(criterion: &str, started: Instant) {
    println!(
        "acceptance {criterion}: PASS ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

/// Criterion 1: compile+evaluate matches the memoized-recursion oracle
/// within 1e-12 on 1,000 random genomes x 10 inputs; under 10 seconds.
#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    for seed in 0..1000u64 {
        let genome = random_genome(seed, 20);
        assert!(genome.nodes.len() <= 20);
        let phenotype = Phenotype::compile(&genome).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..phenotype.n_inputs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let fast = phenotype.evaluate(&x).unwrap();
            let slow = oracle_evaluate(&genome, &x);
            assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).abs() < 1e-12, "genome {seed}: {a} vs oracle {b}");
            }
        }
    }
    assert!(started.elapsed().as_secs() < 10, "ran too long");
    pass("criterion 1 (oracle equivalence)", started);
}

/// Criterion 2: 10,000 random add-connection attempts never leave a cyclic
/// enabled digraph, and every rejection is independently confirmed.
#[test]
fn criterion_2_cycle_guard_soundness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let mut registry = InnovationRegistry::for_io(3, 2);
    let mut genome = Genome::minimal(3, 2, &mut rng).unwrap();
    let mut attempts = 0usize;
    let mut rejected = [0usize; 4];
    while attempts < 10_000 {
        // keep the genome evolving so candidates stay interesting
        if attempts % 400 == 0 {
            registry.begin_generation();
            genome = genome.mutate_add_node(&mut registry, &mut rng, &HIDDEN_CATALOG);
        }
        let ids: Vec<NodeId> = genome.nodes.iter().map(|n| n.id).collect();
        let source = ids[rng.gen_range(0..ids.len())];
        let target = ids[rng.gen_range(0..ids.len())];
        attempts += 1;
        match genome.try_add_connection(source, target, 0.5, &mut registry) {
            Ok(next) => {
                assert!(!dfs_has_cycle(&next), "accepted edge closed a cycle");
                genome = next;
            }
            Err(reason) => match reason {
                ConnectReject::SelfLoop => {
                    assert_eq!(source, target);
                    rejected[0] += 1;
                }
                ConnectReject::IllegalRole => {
                    let s = genome.node(source).unwrap().role;
                    let t = genome.node(target).unwrap().role;
                    assert!(
                        s == NodeRole::Output || t == NodeRole::Input || t == NodeRole::Bias,
                        "reported role-illegal but roles are {s:?} -> {t:?}"
                    );
                    rejected[1] += 1;
                }
                ConnectReject::AlreadyConnected => {
                    assert!(genome
                        .connections
                        .iter()
                        .any(|c| c.source == source && c.target == target));
                    rejected[2] += 1;
                }
                ConnectReject::CreatesCycle => {
                    // oracle: a path target -> source exists, and forcing
                    // the edge in does close a cycle
                    assert!(reaches(&genome, target, source));
                    let mut forced = genome.clone();
                    forced.connections.push(ConnectionGene {
                        innovation: Innovation(u32::MAX),
                        source,
                        target,
                        weight: 0.5,
                        enabled: true,
                    });
                    assert!(dfs_has_cycle(&forced), "oracle says no cycle");
                    rejected[3] += 1;
                }
            },
        }
    }
    assert!(
        rejected[3] > 0,
        "no cyclic candidate ever arose; the check proved nothing"
    );
    pass("criterion 2 (cycle-guard soundness)", started);
}

/// Hand genome: hidden node (id 5, step) with 3 incoming (one disabled) and
/// 2 outgoing genes, plus untouched bias->output genes.
fn star_genome() -> Genome {
    let node = |id: u32, role: NodeRole, activation: ActivationKind| NodeGene {
        id: NodeId(id),
        role,
        activation,
    };
    let conn =
        |innovation: u32, source: u32, target: u32, weight: f64, enabled: bool| ConnectionGene {
            innovation: Innovation(innovation),
            source: NodeId(source),
            target: NodeId(target),
            weight,
            enabled,
        };
    Genome {
        nodes: vec![
            node(0, NodeRole::Input, ActivationKind::Linear),
            node(1, NodeRole::Input, ActivationKind::Linear),
            node(2, NodeRole::Bias, ActivationKind::Linear),
            node(3, NodeRole::Output, ActivationKind::Linear),
            node(4, NodeRole::Output, ActivationKind::Linear),
            node(5, NodeRole::Hidden, ActivationKind::Step),
        ],
        connections: vec![
            conn(0, 0, 5, 0.5, true),
            conn(1, 1, 5, -1.0, false),
            conn(2, 2, 5, 0.25, true),
            conn(3, 5, 3, 2.0, true),
            conn(4, 5, 4, -0.75, true),
            conn(5, 2, 3, 0.1, true),
            conn(6, 2, 4, 0.2, true),
        ],
        fitness: 0.0,
        adjusted_fitness: 0.0,
    }
}

/// Criterion 3: activation mutation renumbers exactly the incident genes,
/// preserves weights and flags, and the pre/post compatibility distance
/// matches the hand-computed value with coefficients 1/1/0.2.
#[test]
fn criterion_3_activation_mutation_contract() {
    let started = Instant::now();
    let coeffs = CompatCoefficients {
        c_excess: 1.0,
        c_disjoint: 1.0,
        c_weight: 0.2,
    };

    // Case A: 5 incident genes. After renumbering, the 5 old genes are
    // disjoint to the mutant and the 5 fresh genes are excess; N = 1 and
    // matching weights identical: distance = 1*5 + 1*5 + 0.2*0 = 10.
    let genome = star_genome();
    genome.check_invariants().unwrap();
    let mut registry = InnovationRegistry::for_io(2, 2);
    registry.fresh_node_id();
    for _ in 0..7 {
        registry.fresh_innovation();
    }
    let mutant = (0..64)
        .map(|seed| {
            genome.mutate_activation(
                &mut registry.clone(),
                &mut ChaCha8Rng::seed_from_u64(seed),
                &HIDDEN_CATALOG,
            )
        })
        .find(|m| *m != genome)
        .expect("some seed changes the kind");
    mutant.check_invariants().unwrap();

    let old: Vec<Innovation> = genome.connections.iter().map(|c| c.innovation).collect();
    let renumbered: Vec<&ConnectionGene> = mutant
        .connections
        .iter()
        .filter(|c| !old.contains(&c.innovation))
        .collect();
    assert_eq!(renumbered.len(), 5, "3 incoming + 2 outgoing renumbered");
    let kept: Vec<Innovation> = mutant
        .connections
        .iter()
        .map(|c| c.innovation)
        .filter(|i| old.contains(i))
        .collect();
    assert_eq!(kept, vec![Innovation(5), Innovation(6)]);
    let multiset = |g: &Genome| {
        let mut v: Vec<(u64, bool)> = g
            .connections
            .iter()
            .map(|c| (c.weight.to_bits(), c.enabled))
            .collect();
        v.sort();
        v
    };
    assert_eq!(multiset(&genome), multiset(&mutant), "weights/flags preserved");
    let distance = Genome::compatibility_distance(&genome, &mutant, &coeffs);
    assert!((distance - 10.0).abs() < 1e-12, "distance {distance} != 10");

    // Case B: 3 incident genes and one untouched gene: distance = 3 + 3.
    let node = |id: u32, role: NodeRole, activation: ActivationKind| NodeGene {
        id: NodeId(id),
        role,
        activation,
    };
    let conn = |innovation: u32, source: u32, target: u32, weight: f64| ConnectionGene {
        innovation: Innovation(innovation),
        source: NodeId(source),
        target: NodeId(target),
        weight,
        enabled: true,
    };
    let small = Genome {
        nodes: vec![
            node(0, NodeRole::Input, ActivationKind::Linear),
            node(1, NodeRole::Bias, ActivationKind::Linear),
            node(2, NodeRole::Output, ActivationKind::Linear),
            node(3, NodeRole::Hidden, ActivationKind::Gaussian),
        ],
        connections: vec![
            conn(0, 0, 3, 1.5),
            conn(1, 1, 3, -0.5),
            conn(2, 3, 2, 0.75),
            conn(3, 1, 2, 0.1),
        ],
        fitness: 0.0,
        adjusted_fitness: 0.0,
    };
    small.check_invariants().unwrap();
    let mut registry = InnovationRegistry::for_io(1, 1);
    for _ in 0..4 {
        registry.fresh_node_id();
        registry.fresh_innovation();
    }
    let mutant = (0..64)
        .map(|seed| {
            small.mutate_activation(
                &mut registry.clone(),
                &mut ChaCha8Rng::seed_from_u64(seed),
                &HIDDEN_CATALOG,
            )
        })
        .find(|m| *m != small)
        .expect("some seed changes the kind");
    let distance = Genome::compatibility_distance(&small, &mutant, &coeffs);
    assert!((distance - 6.0).abs() < 1e-12, "distance {distance} != 6");

    pass("criterion 3 (activation-mutation contract)", started);
}

/// Criterion 4: with the catalog restricted to one kind and equal seeds,
/// the heterogeneous runner reproduces the homogeneous champion exactly,
/// for all four kinds; under a minute.
#[test]
fn criterion_4_homogeneous_heterogeneous_equivalence() {
    let started = Instant::now();
    let fixture = fixture_targets("gaussian_1d").unwrap();
    let config = EvolutionConfig {
        population_size: 50,
        max_generations: 100,
        seed: 0xACC4,
        ..EvolutionConfig::default()
    };
    for kind in HIDDEN_CATALOG {
        let (restricted, m1) = run_with_catalog(&config, &[kind], &fixture, &fixture).unwrap();
        let (homogeneous, m2) = run_homogeneous(&config, kind, &fixture, &fixture).unwrap();
        assert_eq!(restricted, homogeneous, "champions diverged for {kind}");
        assert_eq!(
            restricted.to_json(),
            homogeneous.to_json(),
            "serialized champions diverged for {kind}"
        );
        assert_eq!(m1, m2, "metrics diverged for {kind}");
        for node in restricted.hidden() {
            assert_eq!(node.activation, kind);
        }
    }
    assert!(started.elapsed().as_secs() < 60, "ran too long");
    pass("criterion 4 (homogeneous/heterogeneous equivalence)", started);
}

/// Champion hidden-node count at the first generation whose champion train
/// MSE is below the bar.
fn hidden_at_first_crossing(metrics: &RunMetrics, non_hidden: usize, bar: f64) -> Option<usize> {
    metrics
        .generations
        .iter()
        .find(|r| r.best_train_mse < bar)
        .map(|r| r.n_nodes - non_hidden)
}

/// Criterion 5: on the gaussian bump fixture the full catalog reaches train
/// MSE < 1e-3 with few hidden nodes, and the gaussian-only catalog needs no
/// more than a couple (medians over 10 seeds, hidden nodes counted when the
/// bar is first crossed); under 10 minutes.
#[test]
fn criterion_5_expressivity_fixture() {
    let started = Instant::now();
    let fixture = fixture_targets("gaussian_1d").unwrap();
    let non_hidden = 3; // one input, one bias, one output
    let bar = 1e-3;

    let run_arm = |catalog: &[ActivationKind]| -> (Vec<f64>, Vec<f64>) {
        let mut final_mses = Vec::new();
        let mut crossing_hidden = Vec::new();
        for seed in 0..10u64 {
            let config = EvolutionConfig {
                population_size: 100,
                max_generations: 1000,
                seed: 0xACC5_000 + seed,
                ..EvolutionConfig::default()
            };
            let (_, metrics) = run_with_catalog(&config, catalog, &fixture, &fixture).unwrap();
            final_mses.push(metrics.generations.last().unwrap().best_train_mse);
            crossing_hidden.push(
                hidden_at_first_crossing(&metrics, non_hidden, bar)
                    .map(|h| h as f64)
                    .unwrap_or(f64::INFINITY),
            );
        }
        (final_mses, crossing_hidden)
    };

    let (het_mse, het_hidden) = run_arm(&HIDDEN_CATALOG);
    assert!(
        median(&het_mse) < bar,
        "heterogeneous median train MSE {} >= {bar}",
        median(&het_mse)
    );
    assert!(
        median(&het_hidden) <= 4.0,
        "heterogeneous median hidden nodes at crossing {} > 4",
        median(&het_hidden)
    );

    let (gauss_mse, gauss_hidden) = run_arm(&[ActivationKind::Gaussian]);
    assert!(
        median(&gauss_mse) < bar,
        "gaussian-only median train MSE {} >= {bar}",
        median(&gauss_mse)
    );
    assert!(
        median(&gauss_hidden) <= 2.0,
        "gaussian-only median hidden nodes at crossing {} > 2",
        median(&gauss_hidden)
    );

    assert!(started.elapsed().as_secs() < 600, "ran too long");
    pass("criterion 5 (expressivity fixture)", started);
}

/// Criterion 6: on the blended fixture, the activation-mutation rate 0.2
/// arm is no worse than the mutation-free arm (median final test MSE over
/// 20 paired seeds); under 15 minutes.
#[test]
fn criterion_6_ablation_direction() {
    let started = Instant::now();
    let fixture = fixture_targets("composite_fig3").unwrap();

    let run_rate = |rate: f64| -> Vec<f64> {
        (0..20u64)
            .map(|seed| {
                let plan = make_folds(fixture.n_rows(), 5, 1, 0xACC6_000 + seed).unwrap();
                let (train_rows, test_rows) = plan.split(0, 0);
                let train = fixture.subset(&train_rows);
                let test = fixture.subset(&test_rows);
                let config = EvolutionConfig {
                    population_size: 50,
                    max_generations: 750,
                    p_mutate_activation: rate,
                    seed: 0xACC6_100 + seed,
                    ..EvolutionConfig::default()
                };
                let (_, metrics) = run(&config, &train, &test).unwrap();
                metrics.generations.last().unwrap().best_test_mse
            })
            .collect()
    };

    let with_mutation = run_rate(0.2);
    let without_mutation = run_rate(0.0);
    let m_with = median(&with_mutation);
    let m_without = median(&without_mutation);
    assert!(
        m_with <= m_without,
        "median test MSE at rate 0.2 ({m_with}) exceeds rate 0.0 ({m_without})"
    );
    assert!(started.elapsed().as_secs() < 900, "ran too long");
    pass("criterion 6 (ablation direction)", started);
}

/// Criterion 7: desk-scale tumor classification. The 699-row file loses its
/// 16 incomplete rows at load; over 10 splits at 500 generations the median
/// test label-MSE lands in [0.02, 0.10]; under an hour.
#[test]
fn criterion_7_desk_scale_cancer() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cancer.csv");
    std::fs::write(&path, standin::cancer_csv()).unwrap();
    let loaded = load_csv(&path, 9, 1, Task::Classification).unwrap();
    assert_eq!(loaded.dropped, 16);
    assert_eq!(loaded.dataset.n_rows(), 683);
    let data = normalize(&loaded.dataset).dataset;

    let plan = make_folds(683, 5, 2, 0xACC7).unwrap();
    let mut test_mses = Vec::new();
    for (replicate, fold) in plan.split_keys() {
        let (train_rows, test_rows) = plan.split(replicate, fold);
        let train = data.subset(&train_rows);
        let test = data.subset(&test_rows);
        let config = EvolutionConfig {
            max_generations: 500,
            seed: 0xACC7_000 + (replicate * 5 + fold) as u64,
            ..EvolutionConfig::default()
        };
        let (_, metrics) = run(&config, &train, &test).unwrap();
        test_mses.push(metrics.generations.last().unwrap().best_test_mse);
    }
    let m = median(&test_mses);
    assert!(
        (0.02..=0.10).contains(&m),
        "median test label-MSE {m} outside [0.02, 0.10]; per-split: {test_mses:?}"
    );
    assert!(started.elapsed().as_secs() < 3600, "ran too long");
    pass("criterion 7 (desk-scale cancer reproduction)", started);
}

/// Criterion 8: on the blended fixture at the same desk-scale budget, the
/// mixed-activation champions are no larger (median enabled connections)
/// than the best-MSE homogeneous arm; 10 splits.
#[test]
fn criterion_8_parsimony_direction() {
    let started = Instant::now();
    let fixture = fixture_targets("composite_fig3").unwrap();
    let plan = make_folds(fixture.n_rows(), 5, 2, 0xACC8).unwrap();

    let run_arm = |catalog: &[ActivationKind]| -> (Vec<f64>, Vec<f64>) {
        let mut test_mses = Vec::new();
        let mut conns = Vec::new();
        for (replicate, fold) in plan.split_keys() {
            let (train_rows, test_rows) = plan.split(replicate, fold);
            let train = fixture.subset(&train_rows);
            let test = fixture.subset(&test_rows);
            let config = EvolutionConfig {
                max_generations: 500,
                seed: 0xACC8_000 + (replicate * 5 + fold) as u64,
                ..EvolutionConfig::default()
            };
            let (champion, metrics) = run_with_catalog(&config, catalog, &train, &test).unwrap();
            test_mses.push(metrics.generations.last().unwrap().best_test_mse);
            conns.push(champion.enabled_count() as f64);
        }
        (test_mses, conns)
    };

    let (het_mse, het_conns) = run_arm(&HIDDEN_CATALOG);
    let mut best_homogeneous: Option<(f64, Vec<f64>, ActivationKind)> = None;
    for kind in HIDDEN_CATALOG {
        let (mses, conns) = run_arm(&[kind]);
        let m = median(&mses);
        if best_homogeneous.as_ref().is_none_or(|(best, _, _)| m < *best) {
            best_homogeneous = Some((m, conns, kind));
        }
    }
    let (best_mse, best_conns, best_kind) = best_homogeneous.unwrap();
    let het_size = median(&het_conns);
    let hom_size = median(&best_conns);
    assert!(
        het_size <= hom_size,
        "mixed-activation median size {het_size} exceeds best homogeneous arm \
         ({best_kind}, median MSE {best_mse}) size {hom_size}; het MSE {}",
        median(&het_mse)
    );
    pass("criterion 8 (parsimony direction)", started);
}

/// Criterion 9: two serial runs of the same spec produce byte-identical
/// metrics logs and champion genome files.
#[test]
fn criterion_9_determinism() {
    let started = Instant::now();
    use haneat::experiment::{run_experiment, ExperimentSpec, Mode};
    let run_once = |dir: &std::path::Path| {
        let spec = ExperimentSpec {
            dataset: "sigmoid_1d".into(),
            mode: Mode::Heterogeneous,
            evolution: EvolutionConfig {
                population_size: 30,
                max_generations: 30,
                ..EvolutionConfig::default()
            },
            folds: 5,
            replicates: 1,
            out_dir: dir.to_path_buf(),
            seed: 0xACC9,
            parallel: 1,
            log_every: 0,
        };
        run_experiment(&spec).unwrap();
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_once(a.path());
    run_once(b.path());

    let mut compared = 0usize;
    let mut files = vec!["folds.csv".to_string(), "summary.json".to_string()];
    for fold in 0..5 {
        for name in ["metrics.csv", "species.csv", "champion.json"] {
            files.push(format!("runs/rep0_fold{fold}/{name}"));
        }
    }
    for file in files {
        let x = std::fs::read(a.path().join(&file)).unwrap_or_else(|_| panic!("missing {file}"));
        let y = std::fs::read(b.path().join(&file)).unwrap();
        assert_eq!(x, y, "artifact {file} differs between runs");
        compared += 1;
    }
    assert_eq!(compared, 17);
    pass("criterion 9 (determinism)", started);
}

/// Criterion 10: the quantile operation matches a sort-based reference
/// exactly on 100 random vectors, and fold plans partition rows for 100
/// random (n, k) pairs.
#[test]
fn criterion_10_statistics() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1_0);

    // independent reference: full sort plus linear interpolation at (n-1)q
    fn reference_quantile(values: &[f64], q: f64) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = q * (sorted.len() as f64 - 1.0);
        let lo = rank.floor() as usize;
        let hi = rank.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
    }

    for _ in 0..100 {
        let n = rng.gen_range(1..200);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert_eq!(
                quantile(&values, q).unwrap(),
                reference_quantile(&values, q),
                "quantile({q}) mismatch on {n} values"
            );
        }
        let q = rng.gen_range(0.0..1.0);
        assert_eq!(quantile(&values, q).unwrap(), reference_quantile(&values, q));
    }

    for _ in 0..100 {
        let k = rng.gen_range(2..8);
        let n = rng.gen_range(k..500);
        let replicates = rng.gen_range(1..4);
        let plan = make_folds(n, k, replicates, rng.gen()).unwrap();
        for labels in &plan.assignments {
            assert_eq!(labels.len(), n);
            let mut counts = vec![0usize; k];
            for &label in labels {
                counts[label as usize] += 1;
            }
            assert_eq!(counts.iter().sum::<usize>(), n);
            assert!(counts.iter().all(|&c| c > 0), "empty fold");
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
    pass("criterion 10 (statistics)", started);
}
