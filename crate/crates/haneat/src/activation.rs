//! The closed catalog of activation functions shared by all nodes.
//!
//! Hidden nodes draw from four qualitatively different functions whose
//! outputs (apart from the unbounded relu) live in [0, 1], so they can be
//! mixed freely inside one network. Input, output and bias nodes are always
//! linear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation function of a single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    /// Identity, reserved for input, output and bias nodes.
    Linear,
    /// Heaviside step: 1 for x >= 0, else 0.
    Step,
    /// Rectifier: max(0, x). The one unbounded member of the catalog.
    Relu,
    /// Logistic sigmoid: 1 / (1 + e^(-x)).
    Sigmoid,
    /// Gaussian kernel: e^(-x^2).
    Gaussian,
}

/// The four kinds a hidden node may take, in stable order.
pub const HIDDEN_CATALOG: [ActivationKind; 4] = [
    ActivationKind::Step,
    ActivationKind::Relu,
    ActivationKind::Sigmoid,
    ActivationKind::Gaussian,
];

/// Catalog of activation functions available to hidden nodes.
pub fn hidden_catalog() -> &'static [ActivationKind] {
    &HIDDEN_CATALOG
}

impl ActivationKind {
    /// Index of this kind in the full catalog (linear first).
    pub fn index(self) -> usize {
        match self {
            ActivationKind::Linear => 0,
            ActivationKind::Step => 1,
            ActivationKind::Relu => 2,
            ActivationKind::Sigmoid => 3,
            ActivationKind::Gaussian => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Linear => "linear",
            ActivationKind::Step => "step",
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Gaussian => "gaussian",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(ActivationKind::Linear),
            "step" => Ok(ActivationKind::Step),
            "relu" => Ok(ActivationKind::Relu),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "gaussian" => Ok(ActivationKind::Gaussian),
            other => Err(Error::Usage(format!("unknown activation kind: {other}"))),
        }
    }

    /// Apply the function, rejecting non-finite input (a non-finite net
    /// input means arithmetic blew up somewhere upstream).
    pub fn apply(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Invariant(format!(
                "non-finite input {x} to activation {}",
                self.name()
            )));
        }
        Ok(self.eval(x))
    }

    /// Unchecked evaluation used by the network inner loop. Total over f64;
    /// non-finite inputs simply propagate.
    #[inline]
    pub(crate) fn eval(self, x: f64) -> f64 {
        match self {
            ActivationKind::Linear => x,
            ActivationKind::Step => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            ActivationKind::Gaussian => (-x * x).exp(),
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_case() {
        assert_eq!(ActivationKind::Linear.apply(0.7).unwrap(), 0.7);
    }

    #[test]
    fn gaussian_kernel_center() {
        assert_eq!(ActivationKind::Gaussian.apply(0.0).unwrap(), 1.0);
    }

    #[test]
    fn step_threshold_convention() {
        assert_eq!(ActivationKind::Step.apply(-0.001).unwrap(), 0.0);
        assert_eq!(ActivationKind::Step.apply(0.0).unwrap(), 1.0);
    }

    #[test]
    fn sigmoid_symmetry() {
        assert_eq!(ActivationKind::Sigmoid.apply(0.0).unwrap(), 0.5);
    }

    #[test]
    fn relu_rectifies() {
        assert_eq!(ActivationKind::Relu.apply(-3.0).unwrap(), 0.0);
    }

    #[test]
    fn hidden_catalog_is_the_four_nonlinear_kinds() {
        let catalog = hidden_catalog();
        assert_eq!(
            catalog,
            &[
                ActivationKind::Step,
                ActivationKind::Relu,
                ActivationKind::Sigmoid,
                ActivationKind::Gaussian
            ]
        );
        assert_eq!(catalog.len(), 4);
        assert!(!catalog.contains(&ActivationKind::Linear));
    }

    #[test]
    fn non_finite_input_is_an_error() {
        assert!(ActivationKind::Sigmoid.apply(f64::NAN).is_err());
        assert!(ActivationKind::Relu.apply(f64::INFINITY).is_err());
    }

    #[test]
    fn serializes_by_lowercase_name() {
        for kind in [ActivationKind::Linear, ActivationKind::Step] {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
        let parsed: ActivationKind = serde_json::from_str("\"gaussian\"").unwrap();
        assert_eq!(parsed, ActivationKind::Gaussian);
    }
}
