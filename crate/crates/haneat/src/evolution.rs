//! The generational loop: evaluate, speciate, allocate offspring and
//! reproduce.
//!
//! Selection only ever sees training fitness; test error is evaluated for
//! the champion and logged, nothing else. Runs are fully deterministic for
//! a given (config, seed, data) triple, and the optional parallel
//! evaluation mode produces fitness values identical to serial evaluation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::activation::{hidden_catalog, ActivationKind};
use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::innovation::InnovationRegistry;
use crate::network::Phenotype;
use crate::speciation::{SpeciationConfig, SpeciationState};

/// Species larger than this copy their champion unmodified into the next
/// generation.
pub const ELITISM_MIN_SPECIES_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub max_generations: u32,
    /// Fraction of bred offspring produced by crossover rather than cloning.
    pub crossover_fraction: f64,
    pub p_add_node: f64,
    pub p_add_connection: f64,
    pub p_mutate_activation: f64,
    /// Per-gene weight perturbation chance.
    pub p_mutate_weight: f64,
    /// Weight perturbations are uniform in [-delta_weight, delta_weight].
    pub delta_weight: f64,
    pub p_enable: f64,
    pub p_disable: f64,
    pub speciation: SpeciationConfig,
    pub seed: u64,
    /// Evaluate genomes through the rayon pool; fitness values are
    /// identical to serial mode.
    pub parallel_eval: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            max_generations: 3000,
            crossover_fraction: 0.90,
            p_add_node: 0.01,
            p_add_connection: 0.30,
            p_mutate_activation: 0.20,
            p_mutate_weight: 0.20,
            delta_weight: 2.0,
            p_enable: 0.0002,
            p_disable: 0.002,
            speciation: SpeciationConfig::default(),
            seed: 0,
            parallel_eval: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Usage("population_size must be at least 2".into()));
        }
        let rates = [
            ("crossover_fraction", self.crossover_fraction),
            ("p_add_node", self.p_add_node),
            ("p_add_connection", self.p_add_connection),
            ("p_mutate_activation", self.p_mutate_activation),
            ("p_mutate_weight", self.p_mutate_weight),
            ("p_enable", self.p_enable),
            ("p_disable", self.p_disable),
        ];
        for (name, rate) in rates {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Usage(format!("{name} must lie in [0, 1], got {rate}")));
            }
        }
        if self.delta_weight < 0.0 {
            return Err(Error::Usage("delta_weight must be non-negative".into()));
        }
        if self.speciation.threshold_step <= 0.0 || self.speciation.initial_threshold <= 0.0 {
            return Err(Error::Usage("speciation thresholds must be positive".into()));
        }
        if self.speciation.target_species == 0 {
            return Err(Error::Usage("target_species must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fitness from a training MSE: 1 / (1 + mse), strictly decreasing.
pub fn fitness_of(mse: f64) -> Result<f64> {
    if mse < 0.0 {
        return Err(Error::Invariant(format!("negative mse {mse}")));
    }
    Ok(1.0 / (1.0 + mse))
}

/// Engine-internal fitness map; a non-finite MSE (numeric blow-up) scores 0.
fn fitness_from_mse(mse: f64) -> f64 {
    if mse.is_finite() {
        1.0 / (1.0 + mse)
    } else {
        0.0
    }
}

fn task_mse(phenotype: &Phenotype, data: &Dataset) -> Result<f64> {
    match data.task {
        Task::Regression => phenotype.mse(&data.inputs, &data.targets),
        Task::Classification => phenotype.label_mse(&data.inputs, &data.targets),
    }
}

/// Compile and score every genome; sets the cached fitness and returns the
/// per-genome training MSE.
pub fn evaluate_population(
    population: &mut [Genome],
    data: &Dataset,
    parallel: bool,
) -> Result<Vec<f64>> {
    let score = |g: &Genome| -> Result<f64> {
        let phenotype = Phenotype::compile(g)?;
        task_mse(&phenotype, data)
    };
    let mses: Vec<f64> = if parallel {
        population
            .par_iter()
            .map(score)
            .collect::<Result<Vec<f64>>>()?
    } else {
        population.iter().map(score).collect::<Result<Vec<f64>>>()?
    };
    for (genome, &mse) in population.iter_mut().zip(mses.iter()) {
        genome.fitness = fitness_from_mse(mse);
    }
    Ok(mses)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub best_train_mse: f64,
    pub best_test_mse: f64,
    pub n_nodes: usize,
    pub n_enabled_connections: usize,
    pub n_species: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub generation: u32,
    pub species_id: u32,
    pub size: usize,
    pub best_fitness: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub generations: Vec<GenerationRecord>,
    pub census: Vec<CensusRow>,
}

impl RunMetrics {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "generation,best_train_mse,best_test_mse,n_nodes,n_enabled_connections,n_species,threshold\n",
        );
        for r in &self.generations {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.generation,
                r.best_train_mse,
                r.best_test_mse,
                r.n_nodes,
                r.n_enabled_connections,
                r.n_species,
                r.threshold
            );
        }
        out
    }

    pub fn census_csv(&self) -> String {
        let mut out = String::from("generation,species_id,size,best_fitness,threshold\n");
        for r in &self.census {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.generation, r.species_id, r.size, r.best_fitness, r.threshold
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Champion {
    pub genome: Genome,
    pub train_mse: f64,
    /// Cached for logging only; never consulted by selection.
    pub test_mse: f64,
}

#[derive(Debug, Clone)]
pub struct RunState {
    pub generation: u32,
    pub population: Vec<Genome>,
    pub speciation: SpeciationState,
    pub champion: Option<Champion>,
    pub registry: InnovationRegistry,
    pub catalog: Vec<ActivationKind>,
    pub rng: ChaCha8Rng,
}

impl RunState {
    pub fn new(
        config: &EvolutionConfig,
        catalog: &[ActivationKind],
        n_inputs: usize,
        n_outputs: usize,
    ) -> Result<RunState> {
        config.validate()?;
        if catalog.is_empty() {
            return Err(Error::Usage("activation catalog must not be empty".into()));
        }
        for kind in catalog {
            if !hidden_catalog().contains(kind) {
                return Err(Error::Usage(format!(
                    "{kind} is not a hidden-node activation"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let population: Result<Vec<Genome>> = (0..config.population_size)
            .map(|_| Genome::minimal(n_inputs, n_outputs, &mut rng))
            .collect();
        Ok(RunState {
            generation: 0,
            population: population?,
            speciation: SpeciationState::new(&config.speciation),
            champion: None,
            registry: InnovationRegistry::for_io(n_inputs, n_outputs),
            catalog: catalog.to_vec(),
            rng,
        })
    }
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub champion_changed: bool,
    pub n_species: usize,
    pub threshold: f64,
    pub census: Vec<CensusRow>,
    pub best_train_mse: f64,
}

/// Largest-remainder apportionment of `slots` proportional to `weights`;
/// falls back to a uniform split when all weights are zero. Always sums to
/// `slots`.
fn allocate_offspring(weights: &[f64], slots: usize) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        let base = slots / n;
        let extra = slots % n;
        return (0..n).map(|i| base + usize::from(i < extra)).collect();
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * slots as f64).collect();
    let mut allocation: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = allocation.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(slots.saturating_sub(assigned)) {
        allocation[i] += 1;
    }
    allocation
}

fn tournament(members: &[usize], adjusted: &[f64], rng: &mut impl Rng) -> usize {
    let a = members[rng.gen_range(0..members.len())];
    let b = members[rng.gen_range(0..members.len())];
    if adjusted[b] > adjusted[a] {
        b
    } else {
        a
    }
}

fn mutate_child(
    genome: Genome,
    config: &EvolutionConfig,
    catalog: &[ActivationKind],
    registry: &mut InnovationRegistry,
    rng: &mut impl Rng,
) -> Genome {
    let mut g = genome;
    if rng.gen_bool(config.p_add_node) {
        g = g.mutate_add_node(registry, rng, catalog);
    }
    if rng.gen_bool(config.p_add_connection) {
        g = g.mutate_add_connection(registry, rng);
    }
    // at most one node's activation changes per genome per generation
    if rng.gen_bool(config.p_mutate_activation) {
        g = g.mutate_activation(registry, rng, catalog);
    }
    g = g.mutate_weights(rng, config.p_mutate_weight, config.delta_weight);
    g.mutate_toggle(rng, config.p_enable, config.p_disable)
}

/// One generation: evaluate the population, update the champion, speciate,
/// share fitness, and breed the next population in place.
pub fn step(state: &mut RunState, config: &EvolutionConfig, train: &Dataset) -> Result<StepReport> {
    let mses = evaluate_population(&mut state.population, train, config.parallel_eval)?;
    let fitnesses: Vec<f64> = state.population.iter().map(|g| g.fitness).collect();

    // champion: strictly better raw training fitness replaces
    let best_index = (0..fitnesses.len())
        .max_by(|&a, &b| fitnesses[a].partial_cmp(&fitnesses[b]).unwrap().then(b.cmp(&a)))
        .expect("population is never empty");
    let champion_changed = match &state.champion {
        Some(c) => fitnesses[best_index] > c.genome.fitness,
        None => true,
    };
    if champion_changed {
        state.champion = Some(Champion {
            genome: state.population[best_index].clone(),
            train_mse: mses[best_index],
            test_mse: f64::NAN,
        });
    }

    let coeffs = config.speciation.coefficients();
    state
        .speciation
        .assign_species(&state.population, &coeffs, &mut state.rng);
    state.speciation.update_stagnation(&fitnesses);
    state.speciation.adjust_threshold(config.speciation.threshold_step);
    let adjusted =
        state
            .speciation
            .shared_fitness(&fitnesses, config.speciation.dropoff_age, best_index);
    for (genome, &adj) in state.population.iter_mut().zip(adjusted.iter()) {
        genome.adjusted_fitness = adj;
    }

    let census: Vec<CensusRow> = state
        .speciation
        .species
        .iter()
        .map(|s| CensusRow {
            generation: state.generation,
            species_id: s.id,
            size: s.members.len(),
            best_fitness: s
                .members
                .iter()
                .map(|&i| fitnesses[i])
                .fold(f64::NEG_INFINITY, f64::max),
            threshold: state.speciation.threshold,
        })
        .collect();

    // reproduction
    state.registry.begin_generation();
    let species_weights: Vec<f64> = state
        .speciation
        .species
        .iter()
        .map(|s| s.members.iter().map(|&i| adjusted[i]).sum())
        .collect();
    let allocation = allocate_offspring(&species_weights, config.population_size);
    debug_assert_eq!(allocation.iter().sum::<usize>(), config.population_size);

    let mut next_population: Vec<Genome> = Vec::with_capacity(config.population_size);
    for (species, &slots) in state.speciation.species.iter().zip(allocation.iter()) {
        if slots == 0 {
            continue;
        }
        let mut remaining = slots;
        if species.members.len() > ELITISM_MIN_SPECIES_SIZE {
            let &champ = species
                .members
                .iter()
                .max_by(|&&a, &&b| fitnesses[a].partial_cmp(&fitnesses[b]).unwrap().then(b.cmp(&a)))
                .expect("species is non-empty");
            next_population.push(state.population[champ].clone());
            remaining -= 1;
        }
        for _ in 0..remaining {
            let child = if state.rng.gen_bool(config.crossover_fraction) {
                let p1 = tournament(&species.members, &adjusted, &mut state.rng);
                let p2 = tournament(&species.members, &adjusted, &mut state.rng);
                let (fitter, other) = if fitnesses[p2] > fitnesses[p1] {
                    (p2, p1)
                } else {
                    (p1, p2)
                };
                Genome::crossover(
                    &state.population[fitter],
                    &state.population[other],
                    &mut state.rng,
                )?
            } else {
                let parent = tournament(&species.members, &adjusted, &mut state.rng);
                state.population[parent].clone()
            };
            let child = mutate_child(
                child,
                config,
                &state.catalog,
                &mut state.registry,
                &mut state.rng,
            );
            debug_assert!(child.check_invariants().is_ok(), "operator broke an invariant");
            next_population.push(child);
        }
    }
    debug_assert_eq!(next_population.len(), config.population_size);

    let report = StepReport {
        champion_changed,
        n_species: state.speciation.species.len(),
        threshold: state.speciation.threshold,
        census,
        best_train_mse: mses[best_index],
    };
    state.population = next_population;
    state.generation += 1;
    Ok(report)
}

/// Full run with an explicit hidden-activation catalog and a per-generation
/// observer. The heterogeneous and homogeneous runners are this function
/// with different catalogs.
pub fn run_with_catalog_observed(
    config: &EvolutionConfig,
    catalog: &[ActivationKind],
    train: &Dataset,
    test: &Dataset,
    mut observe: impl FnMut(&GenerationRecord),
) -> Result<(Genome, RunMetrics)> {
    if train.n_rows() == 0 {
        return Err(Error::Usage("empty training set".into()));
    }
    if train.task == Task::Classification && train.n_targets() != 1 {
        return Err(Error::Usage(
            "classification supports a single target column".into(),
        ));
    }
    let mut state = RunState::new(config, catalog, train.n_inputs(), train.n_targets())?;
    let mut metrics = RunMetrics::default();

    if config.max_generations == 0 {
        let mses = evaluate_population(&mut state.population, train, config.parallel_eval)?;
        let best = (0..mses.len())
            .max_by(|&a, &b| {
                state.population[a]
                    .fitness
                    .partial_cmp(&state.population[b].fitness)
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .expect("population is never empty");
        return Ok((state.population[best].clone(), metrics));
    }

    for _ in 0..config.max_generations {
        let generation = state.generation;
        let report = step(&mut state, config, train)?;
        let champion = state.champion.as_mut().expect("champion set by step");
        if report.champion_changed {
            let phenotype = Phenotype::compile(&champion.genome)?;
            champion.test_mse = task_mse(&phenotype, test)?;
        }
        let record = GenerationRecord {
            generation,
            best_train_mse: champion.train_mse,
            best_test_mse: champion.test_mse,
            n_nodes: champion.genome.nodes.len(),
            n_enabled_connections: champion.genome.enabled_count(),
            n_species: report.n_species,
            threshold: report.threshold,
        };
        observe(&record);
        metrics.generations.push(record);
        metrics.census.extend(report.census);
    }
    let champion = state.champion.expect("at least one generation ran");
    Ok((champion.genome, metrics))
}

pub fn run_with_catalog(
    config: &EvolutionConfig,
    catalog: &[ActivationKind],
    train: &Dataset,
    test: &Dataset,
) -> Result<(Genome, RunMetrics)> {
    run_with_catalog_observed(config, catalog, train, test, |_| {})
}

/// Heterogeneous run: hidden nodes draw from the full catalog.
pub fn run(config: &EvolutionConfig, train: &Dataset, test: &Dataset) -> Result<(Genome, RunMetrics)> {
    run_with_catalog(config, hidden_catalog(), train, test)
}

pub fn run_observed(
    config: &EvolutionConfig,
    train: &Dataset,
    test: &Dataset,
    observe: impl FnMut(&GenerationRecord),
) -> Result<(Genome, RunMetrics)> {
    run_with_catalog_observed(config, hidden_catalog(), train, test, observe)
}

/// Homogeneous run: add-node always assigns `fixed`, and with a single-kind
/// catalog the activation mutation can never change anything.
pub fn run_homogeneous(
    config: &EvolutionConfig,
    fixed: ActivationKind,
    train: &Dataset,
    test: &Dataset,
) -> Result<(Genome, RunMetrics)> {
    run_homogeneous_observed(config, fixed, train, test, |_| {})
}

pub fn run_homogeneous_observed(
    config: &EvolutionConfig,
    fixed: ActivationKind,
    train: &Dataset,
    test: &Dataset,
    observe: impl FnMut(&GenerationRecord),
) -> Result<(Genome, RunMetrics)> {
    if !hidden_catalog().contains(&fixed) {
        return Err(Error::Usage(format!(
            "{fixed} is not a hidden-node activation"
        )));
    }
    run_with_catalog_observed(config, &[fixed], train, test, observe)
}
