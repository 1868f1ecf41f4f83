//! Canonical amplitude estimation.
//!
//! Given a state-preparation circuit `A` with `A|0⟩ = √(1−a)|ψ₀⟩|0⟩ + √a|ψ₁⟩|1⟩`
//! (the last factor is the objective qubit), the Grover operator `Q` rotates by
//! `2θ_a` inside the span of the good and bad components, where `a = sin²θ_a`.
//! Phase estimation of `Q` with `m` evaluation qubits yields an integer `y`
//! and the estimate `sin²(yπ/M)`, `M = 2^m`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error};
use crate::sv::{Circuit, GateOp, Statevector, MAX_QUBITS};
use crate::Result;

/// A preparation circuit and the qubit whose `|1⟩` population is estimated.
#[derive(Clone, Debug)]
pub struct EstimationProblem {
    pub a_circuit: Circuit,
    pub objective_qubit: usize,
}

impl EstimationProblem {
    pub fn new(a_circuit: Circuit, objective_qubit: usize) -> Result<Self> {
        if objective_qubit >= a_circuit.n_qubits() {
            return arg(format!(
                "objective qubit {objective_qubit} outside a {}-qubit circuit",
                a_circuit.n_qubits()
            ));
        }
        Ok(Self { a_circuit, objective_qubit })
    }

    /// `n` in `|ψ⟩_n`: every qubit of `A` except the objective.
    pub fn n_state_qubits(&self) -> usize {
        self.a_circuit.n_qubits() - 1
    }
}

/// Exact `P(objective = 1)` after `A|0⟩`.
pub fn true_amplitude(problem: &EstimationProblem) -> Result<f64> {
    problem.a_circuit.run()?.probability_one(problem.objective_qubit)
}

/// Build `Q = A (2|0⟩⟨0| − I) A† Z_obj` on the `n+1` problem qubits plus one work
/// ancilla (index `n+1`) that marks the all-zero state for the middle reflection.
///
/// On the good/bad span this equals `A(I − 2|0⟩⟨0|)A†(I − 2|ψ₀⟩|0⟩⟨ψ₀|⟨0|)`.
pub fn grover_operator(problem: &EstimationProblem) -> Result<Circuit> {
    let n1 = problem.a_circuit.n_qubits();
    let ancilla = n1;
    let total = n1 + 1;
    let identity: Vec<usize> = (0..n1).collect();
    let a = problem.a_circuit.remapped(total, &identity)?;

    let mut q = Circuit::new(total);
    // Good-state oracle: sign flip on objective = 1.
    q.push(GateOp::z(problem.objective_qubit))?;
    q.extend(&a.inverse())?;
    // Mark |0…0⟩ on the ancilla, put −1 on every unmarked component, unmark.
    q.push_on_value(GateOp::x(ancilla), &identity, 0)?;
    q.push(GateOp::diagonal(vec![ancilla], vec![PI, 0.0]))?;
    q.push_on_value(GateOp::x(ancilla), &identity, 0)?;
    q.extend(&a)?;
    Ok(q)
}

/// Output of [`run_ae`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AeResult {
    pub m: usize,
    /// Exact probability of each measurement outcome `y ∈ 0..M`.
    pub distribution: Vec<f64>,
    pub y_mode: usize,
    pub a_estimate: f64,
}

impl AeResult {
    fn from_distribution(m: usize, distribution: Vec<f64>) -> Self {
        let mut y_mode = 0;
        for (y, &p) in distribution.iter().enumerate() {
            if p > distribution[y_mode] + 1e-12 {
                y_mode = y;
            }
        }
        let a_estimate = estimate_for(y_mode, m);
        Self { m, distribution, y_mode, a_estimate }
    }

    pub fn big_m(&self) -> usize {
        1 << self.m
    }

    /// Probability mass on outcomes whose estimate lies within `tolerance` of `a`.
    pub fn mass_within(&self, a: f64, tolerance: f64) -> f64 {
        self.distribution
            .iter()
            .enumerate()
            .filter(|(y, _)| (estimate_for(*y, self.m) - a).abs() <= tolerance)
            .map(|(_, p)| p)
            .sum()
    }

    /// Estimates with their merged probabilities (outcomes `y` and `M−y` coincide),
    /// ascending in the estimate.
    pub fn estimate_distribution(&self) -> Vec<(f64, f64)> {
        let big_m = self.big_m();
        (0..=big_m / 2)
            .map(|y| {
                let mut p = self.distribution[y];
                if y != 0 && y != big_m - y {
                    p += self.distribution[big_m - y];
                }
                (estimate_for(y, self.m), p)
            })
            .collect()
    }

    /// Shot-based readout: the most frequent outcome among `shots` draws.
    pub fn sampled(&self, shots: usize, rng: &mut impl rand::Rng) -> Result<(usize, f64)> {
        use rand::distr::{weighted::WeightedIndex, Distribution};
        if shots == 0 {
            return arg("shots must be at least 1");
        }
        let dist = WeightedIndex::new(&self.distribution)
            .map_err(|e| Error::Argument(format!("degenerate AE distribution: {e}")))?;
        let mut counts = vec![0usize; self.distribution.len()];
        for _ in 0..shots {
            counts[dist.sample(rng)] += 1;
        }
        let y = (0..counts.len()).fold(0, |best, y| if counts[y] > counts[best] { y } else { best });
        Ok((y, estimate_for(y, self.m)))
    }
}

/// `sin²(yπ/M)`.
pub fn estimate_for(y: usize, m: usize) -> f64 {
    let s = (y as f64 * PI / (1u64 << m) as f64).sin();
    s * s
}

/// Exact output distribution of phase estimation of `unitary` on the state
/// `prep|0⟩`, with `m` evaluation qubits placed above the target register.
pub fn phase_estimation(prep: &Circuit, unitary: &Circuit, m: usize) -> Result<Vec<f64>> {
    let t = unitary.n_qubits();
    if prep.n_qubits() != t {
        return arg("preparation and unitary must act on the same register");
    }
    if m == 0 {
        return arg("phase estimation needs at least one evaluation qubit");
    }
    let total = t + m;
    if total > MAX_QUBITS {
        return Err(Error::Capacity { what: "phase estimation".into(), required: total, limit: MAX_QUBITS });
    }
    let target: Vec<usize> = (0..t).collect();
    let evals: Vec<usize> = (t..total).collect();
    let mut state = Statevector::zero(total)?;
    state.apply_circuit(&prep.remapped(total, &target)?)?;
    for &e in &evals {
        state.apply(&GateOp::h(e))?;
    }
    let u = unitary.remapped(total, &target)?;
    for (j, &e) in evals.iter().enumerate() {
        let cu = u.controlled(e)?;
        for _ in 0..1usize << j {
            state.apply_circuit(&cu)?;
        }
    }
    state.apply_circuit(&Circuit::inverse_qft(total, &evals)?)?;
    state.marginal(&evals)
}

/// Canonical amplitude estimation with `m` evaluation qubits.
pub fn run_ae(problem: &EstimationProblem, m: usize) -> Result<AeResult> {
    let required = problem.a_circuit.n_qubits() + 1 + m;
    if required > MAX_QUBITS {
        return Err(Error::Capacity { what: "amplitude estimation".into(), required, limit: MAX_QUBITS });
    }
    let q = grover_operator(problem)?;
    let identity: Vec<usize> = (0..problem.a_circuit.n_qubits()).collect();
    let prep = problem.a_circuit.remapped(q.n_qubits(), &identity)?;
    let distribution = phase_estimation(&prep, &q, m)?;
    Ok(AeResult::from_distribution(m, distribution))
}

/// Total simulated qubits used by [`run_ae`]: problem register, work ancilla and
/// evaluation qubits.
pub fn ae_qubit_count(problem: &EstimationProblem, m: usize) -> usize {
    problem.a_circuit.n_qubits() + 1 + m
}

/// `|a − ã| ≤ 2√(a(1−a))π/M + π²/M²`, holding with probability at least 8/π².
pub fn error_bound(a: f64, big_m: usize) -> f64 {
    let m = big_m as f64;
    2.0 * (a * (1.0 - a)).max(0.0).sqrt() * PI / m + PI * PI / (m * m)
}

/// Probability that phase estimation with `s + p` output qubits misses the phase
/// by more than `s` bits of accuracy.
pub fn qpe_failure_probability(s: u32, p: u32) -> f64 {
    assert!(s >= 1 && p >= 1, "s and p must be at least 1");
    let t = p + s;
    let denom = 2f64.powi(2 * t as i32 - 2);
    let sum: f64 = (1..=1u64 << (p - 1))
        .map(|l| 1.0 / (1.0 - (PI * (2 * l - 1) as f64 / 2f64.powi(t as i32)).cos()))
        .sum();
    1.0 - sum / denom
}
