//! Flat key/value experiment configuration files.
//!
//! Keys mirror the evolution and experiment field names one-to-one; unknown
//! keys are rejected. Values given on the command line override file values,
//! which override the defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, Mode};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // experiment
    pub dataset: Option<String>,
    pub mode: Option<String>,
    pub activation: Option<String>,
    pub folds: Option<usize>,
    pub replicates: Option<usize>,
    pub out_dir: Option<String>,
    pub seed: Option<u64>,
    pub parallel: Option<usize>,
    pub log_every: Option<u32>,
    // evolution
    pub population_size: Option<usize>,
    pub max_generations: Option<u32>,
    pub crossover_fraction: Option<f64>,
    pub p_add_node: Option<f64>,
    pub p_add_connection: Option<f64>,
    pub p_mutate_activation: Option<f64>,
    pub p_mutate_weight: Option<f64>,
    pub delta_weight: Option<f64>,
    pub p_enable: Option<f64>,
    pub p_disable: Option<f64>,
    pub parallel_eval: Option<bool>,
    // speciation
    pub target_species: Option<usize>,
    pub initial_threshold: Option<f64>,
    pub threshold_step: Option<f64>,
    pub c_excess: Option<f64>,
    pub c_disjoint: Option<f64>,
    pub c_weight: Option<f64>,
    pub dropoff_age: Option<u32>,
}

impl FileConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<FileConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn parse_mode(mode: &str, activation: Option<&str>) -> Result<Mode> {
        match mode {
            "heterogeneous" => Ok(Mode::Heterogeneous),
            "homogeneous" => {
                let kind = activation.ok_or_else(|| {
                    Error::Usage("homogeneous mode needs --activation".into())
                })?;
                let kind = ActivationKind::from_name(kind)?;
                if kind == ActivationKind::Linear {
                    return Err(Error::Usage(
                        "homogeneous mode needs a hidden-node activation".into(),
                    ));
                }
                Ok(Mode::Homogeneous(kind))
            }
            "sweep" => Ok(Mode::Sweep),
            other => Err(Error::Usage(format!(
                "unknown mode {other}; expected heterogeneous, homogeneous or sweep"
            ))),
        }
    }

    /// Fold the file values into a spec built from defaults.
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(v) = &self.dataset {
            spec.dataset = v.clone();
        }
        if let Some(mode) = &self.mode {
            spec.mode = Self::parse_mode(mode, self.activation.as_deref())?;
        }
        if let Some(v) = self.folds {
            spec.folds = v;
        }
        if let Some(v) = self.replicates {
            spec.replicates = v;
        }
        if let Some(v) = &self.out_dir {
            spec.out_dir = PathBuf::from(v);
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.parallel {
            spec.parallel = v;
        }
        if let Some(v) = self.log_every {
            spec.log_every = v;
        }
        let e = &mut spec.evolution;
        if let Some(v) = self.population_size {
            e.population_size = v;
        }
        if let Some(v) = self.max_generations {
            e.max_generations = v;
        }
        if let Some(v) = self.crossover_fraction {
            e.crossover_fraction = v;
        }
        if let Some(v) = self.p_add_node {
            e.p_add_node = v;
        }
        if let Some(v) = self.p_add_connection {
            e.p_add_connection = v;
        }
        if let Some(v) = self.p_mutate_activation {
            e.p_mutate_activation = v;
        }
        if let Some(v) = self.p_mutate_weight {
            e.p_mutate_weight = v;
        }
        if let Some(v) = self.delta_weight {
            e.delta_weight = v;
        }
        if let Some(v) = self.p_enable {
            e.p_enable = v;
        }
        if let Some(v) = self.p_disable {
            e.p_disable = v;
        }
        if let Some(v) = self.parallel_eval {
            e.parallel_eval = v;
        }
        let s = &mut e.speciation;
        if let Some(v) = self.target_species {
            s.target_species = v;
        }
        if let Some(v) = self.initial_threshold {
            s.initial_threshold = v;
        }
        if let Some(v) = self.threshold_step {
            s.threshold_step = v;
        }
        if let Some(v) = self.c_excess {
            s.c_excess = v;
        }
        if let Some(v) = self.c_disjoint {
            s.c_disjoint = v;
        }
        if let Some(v) = self.c_weight {
            s.c_weight = v;
        }
        if let Some(v) = self.dropoff_age {
            s.dropoff_age = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<FileConfig>("not_a_key = 3");
        assert!(err.is_err());
    }

    #[test]
    fn values_apply_over_defaults() {
        let cfg: FileConfig = toml::from_str(
            "dataset = \"cancer\"\nmode = \"homogeneous\"\nactivation = \"sigmoid\"\npopulation_size = 50\nc_weight = 0.4\n",
        )
        .unwrap();
        let mut spec = ExperimentSpec::default();
        cfg.apply(&mut spec).unwrap();
        assert_eq!(spec.dataset, "cancer");
        assert_eq!(spec.mode, Mode::Homogeneous(ActivationKind::Sigmoid));
        assert_eq!(spec.evolution.population_size, 50);
        assert_eq!(spec.evolution.speciation.c_weight, 0.4);
        // untouched values keep their defaults
        assert_eq!(spec.evolution.max_generations, 3000);
    }

    #[test]
    fn homogeneous_mode_requires_an_activation() {
        let cfg: FileConfig = toml::from_str("mode = \"homogeneous\"").unwrap();
        let mut spec = ExperimentSpec::default();
        assert!(cfg.apply(&mut spec).is_err());
        assert!(FileConfig::parse_mode("homogeneous", Some("linear")).is_err());
        assert!(FileConfig::parse_mode("nonsense", None).is_err());
    }
}
