//! Species assignment, threshold control, fitness sharing and stagnation.
//!
//! The population is partitioned by compatibility distance against per-
//! species representatives drawn from the previous generation. A simple
//! additive controller steers the species count toward the configured
//! target, and species that fail to improve for too long stop reproducing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::genome::{CompatCoefficients, Genome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciationConfig {
    pub target_species: usize,
    pub initial_threshold: f64,
    /// Additive threshold adjustment per generation, also the floor.
    pub threshold_step: f64,
    pub c_excess: f64,
    pub c_disjoint: f64,
    pub c_weight: f64,
    /// Generations without improvement before a species stops reproducing.
    pub dropoff_age: u32,
}

impl Default for SpeciationConfig {
    fn default() -> Self {
        SpeciationConfig {
            target_species: 10,
            initial_threshold: 20.0,
            threshold_step: 0.5,
            c_excess: 1.0,
            c_disjoint: 1.0,
            c_weight: 0.2,
            dropoff_age: 15,
        }
    }
}

impl SpeciationConfig {
    pub fn coefficients(&self) -> CompatCoefficients {
        CompatCoefficients {
            c_excess: self.c_excess,
            c_disjoint: self.c_disjoint,
            c_weight: self.c_weight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Species {
    pub id: u32,
    /// Clone of a member from the previous generation's membership.
    pub representative: Genome,
    /// Indices into the current population.
    pub members: Vec<usize>,
    pub best_fitness_ever: f64,
    pub generations_since_improvement: u32,
}

#[derive(Debug, Clone)]
pub struct SpeciationState {
    pub threshold: f64,
    pub target_species: usize,
    pub species: Vec<Species>,
    next_species_id: u32,
}

impl SpeciationState {
    pub fn new(config: &SpeciationConfig) -> Self {
        SpeciationState {
            threshold: config.initial_threshold,
            target_species: config.target_species,
            species: Vec::new(),
            next_species_id: 0,
        }
    }

    /// Partition the population: each genome joins the first species (in id
    /// order) whose representative is within the threshold, founding a new
    /// species otherwise. Empty species are dropped and every surviving
    /// species picks a fresh representative uniformly from its members.
    pub fn assign_species(
        &mut self,
        population: &[Genome],
        coeffs: &CompatCoefficients,
        rng: &mut impl Rng,
    ) {
        for s in self.species.iter_mut() {
            s.members.clear();
        }
        for (idx, genome) in population.iter().enumerate() {
            let found = self.species.iter_mut().find(|s| {
                Genome::compatibility_distance(genome, &s.representative, coeffs) < self.threshold
            });
            match found {
                Some(species) => species.members.push(idx),
                None => {
                    let id = self.next_species_id;
                    self.next_species_id += 1;
                    self.species.push(Species {
                        id,
                        representative: genome.clone(),
                        members: vec![idx],
                        best_fitness_ever: f64::NEG_INFINITY,
                        generations_since_improvement: 0,
                    });
                }
            }
        }
        self.species.retain(|s| !s.members.is_empty());
        for s in self.species.iter_mut() {
            let pick = s.members[rng.gen_range(0..s.members.len())];
            s.representative = population[pick].clone();
        }
    }

    /// Steer the species count toward the target by one additive step,
    /// never below the floor.
    pub fn adjust_threshold(&mut self, step: f64) {
        if self.species.len() > self.target_species {
            self.threshold += step;
        } else if self.species.len() < self.target_species {
            self.threshold = (self.threshold - step).max(step);
        }
    }

    /// Update per-species stagnation counters from the current raw
    /// fitnesses.
    pub fn update_stagnation(&mut self, fitnesses: &[f64]) {
        for s in self.species.iter_mut() {
            let best = s
                .members
                .iter()
                .map(|&i| fitnesses[i])
                .fold(f64::NEG_INFINITY, f64::max);
            if best > s.best_fitness_ever {
                s.best_fitness_ever = best;
                s.generations_since_improvement = 0;
            } else {
                s.generations_since_improvement += 1;
            }
        }
    }

    /// Fitness sharing: each member's fitness divided by its species size.
    /// Species stagnant for at least `dropoff_age` generations are zeroed
    /// unless they contain the population champion.
    pub fn shared_fitness(
        &self,
        fitnesses: &[f64],
        dropoff_age: u32,
        champion_index: usize,
    ) -> Vec<f64> {
        let mut adjusted = vec![0.0; fitnesses.len()];
        for s in &self.species {
            let stagnant = s.generations_since_improvement >= dropoff_age;
            let has_champion = s.members.contains(&champion_index);
            for &i in &s.members {
                adjusted[i] = if stagnant && !has_champion {
                    0.0
                } else {
                    fitnesses[i] / s.members.len() as f64
                };
            }
        }
        adjusted
    }
}
