//! Elementwise activation functions and their derivatives.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    /// Row order of the optimizer/activation grid.
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Tanh];

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "Relu",
            Activation::Sigmoid => "Sigmoid",
            Activation::Tanh => "Tanh",
        }
    }

    pub fn apply_scalar(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at a point, given both the pre-activation input and the
    /// activation output (whichever the closed form needs).
    ///
    /// ReLU uses derivative 0 at exactly 0.
    pub fn derivative(&self, input: f64, output: f64) -> f64 {
        match self {
            Activation::Relu => {
                if input > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => output * (1.0 - output),
            Activation::Tanh => 1.0 - output * output,
        }
    }

    pub fn apply(&self, x: &Tensor) -> Tensor {
        let data = x.data().iter().map(|&v| self.apply_scalar(v)).collect();
        Tensor::from_vec(x.shape(), data)
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_definition() {
        assert_eq!(Activation::Relu.apply_scalar(-1.0), 0.0);
        assert_eq!(Activation::Relu.apply_scalar(2.0), 2.0);
    }

    #[test]
    fn symmetry_points() {
        assert_eq!(Activation::Sigmoid.apply_scalar(0.0), 0.5);
        assert_eq!(Activation::Tanh.apply_scalar(0.0), 0.0);
    }

    #[test]
    fn sigmoid_scalar_oracle() {
        // frozen from an external scalar evaluation of 1/(1+e^-2)
        assert!((Activation::Sigmoid.apply_scalar(2.0) - 0.880_797_077_977_882_3).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for act in Activation::ALL {
            for &x in &[-1.7, -0.3, 0.4, 2.2] {
                let y = act.apply_scalar(x);
                let num = (act.apply_scalar(x + h) - act.apply_scalar(x - h)) / (2.0 * h);
                assert!(
                    (act.derivative(x, y) - num).abs() < 1e-6,
                    "{act:?} derivative at {x}"
                );
            }
        }
    }

    #[test]
    fn relu_subgradient_zero_at_kink() {
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
    }
}
