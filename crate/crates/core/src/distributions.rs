//! Discretised distributions and their amplitude loaders.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Normal};

use crate::error::{arg, invalid};
use crate::sv::{Circuit, GateOp};
use crate::Result;

/// A distribution over `2^n` grid points `z_i = a_z·i + b_z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedDistribution {
    pub n_qubits: usize,
    pub probabilities: Vec<f64>,
    /// `(a_z, b_z)`.
    pub affine: (f64, f64),
}

impl DiscretizedDistribution {
    /// Validate and renormalise explicit probabilities.
    pub fn new(n_qubits: usize, probabilities: Vec<f64>, affine: (f64, f64)) -> Result<Self> {
        if n_qubits == 0 || probabilities.len() != 1 << n_qubits {
            return arg(format!("need 2^{n_qubits} probabilities, got {}", probabilities.len()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return invalid("probabilities must be finite and nonnegative");
        }
        let total: f64 = probabilities.iter().sum();
        if total <= 0.0 {
            return invalid("probabilities sum to zero");
        }
        let probabilities = probabilities.into_iter().map(|p| p / total).collect();
        Ok(Self { n_qubits, probabilities, affine })
    }

    /// Grid value of index `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.affine.0 * i as f64 + self.affine.1
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.probabilities.len()).map(|i| self.value(i)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(i, p)| p * self.value(i)).sum()
    }
}

/// Normal density sampled on `2^n` equally spaced points of `[low, high]`, renormalised.
pub fn discretize_normal(
    mean: f64,
    stddev: f64,
    n_qubits: usize,
    low: f64,
    high: f64,
) -> Result<DiscretizedDistribution> {
    if !(low < high) || !low.is_finite() || !high.is_finite() {
        return arg(format!("bounds [{low}, {high}] are not an interval"));
    }
    if !(stddev > 0.0) {
        return arg(format!("stddev must be positive, got {stddev}"));
    }
    if n_qubits == 0 {
        return arg("need at least one qubit");
    }
    let normal = Normal::new(mean, stddev).map_err(|e| crate::Error::Argument(e.to_string()))?;
    let points = 1usize << n_qubits;
    let a_z = (high - low) / (points - 1) as f64;
    let weights = (0..points).map(|i| normal.pdf(a_z * i as f64 + low)).collect();
    DiscretizedDistribution::new(n_qubits, weights, (a_z, low))
}

/// Exact loader `|0⟩_n ↦ Σ_i √p_i |i⟩_n`.
///
/// Qubit `j` is rotated conditionally on the value of qubits `0..j`; a level
/// whose angles agree for every prefix collapses into one uncontrolled gate.
pub fn loader_circuit(dist: &DiscretizedDistribution) -> Circuit {
    let n = dist.n_qubits;
    let mut c = Circuit::new(n);
    for level in 0..n {
        let stride = 1usize << level;
        let angles: Vec<Option<f64>> = (0..stride)
            .map(|prefix| {
                let mut total = 0.0;
                let mut one = 0.0;
                for (i, p) in dist.probabilities.iter().enumerate() {
                    if i % stride == prefix {
                        total += p;
                        if (i >> level) & 1 == 1 {
                            one += p;
                        }
                    }
                }
                (total > 0.0).then(|| 2.0 * (one / total).clamp(0.0, 1.0).sqrt().asin())
            })
            .collect();
        let reachable: Vec<f64> = angles.iter().flatten().copied().collect();
        let uniform = reachable.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15);
        if uniform {
            if let Some(&theta) = reachable.first() {
                push_rotation(&mut c, level, theta, &[], 0);
            }
            continue;
        }
        let prefix_qubits: Vec<usize> = (0..level).collect();
        for (prefix, theta) in angles.iter().enumerate() {
            if let Some(theta) = theta {
                push_rotation(&mut c, level, *theta, &prefix_qubits, prefix);
            }
        }
    }
    c
}

fn push_rotation(c: &mut Circuit, target: usize, theta: f64, controls: &[usize], value: usize) {
    // The target is still |0⟩ here, so H and X realise RY(π/2) and RY(π).
    let op = if theta.abs() < 1e-15 {
        return;
    } else if (theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15 {
        GateOp::h(target)
    } else if (theta - std::f64::consts::PI).abs() < 1e-15 {
        GateOp::x(target)
    } else {
        GateOp::ry(target, theta)
    };
    c.push_on_value(op, controls, value).expect("loader qubits are in range");
}
