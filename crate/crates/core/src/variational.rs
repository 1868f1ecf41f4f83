//! VQE and QAOA over diagonal observables.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::arg;
use crate::optim::{minimize_with_restarts, OptimizerConfig};
use crate::rng;
use crate::sv::{Circuit, GateOp, IsingObservable, Statevector, MAX_QUBITS};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnsatzKind {
    /// RY layer, then `depth` rounds of (full CNOT entangler, RY layer).
    RyFull { depth: usize },
    /// RX·RY layer, then `layers` rounds of (full CNOT entangler, RX·RY layer).
    RxRyFull { layers: usize },
    /// `p` alternations of `exp(−iθH)` and `exp(−iβΣX)` from `|+⟩^n`.
    /// Parameters are `[θ_1..θ_p, β_1..β_p]`.
    Qaoa { p: usize, cost: IsingObservable },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub kind: AnsatzKind,
    pub n_qubits: usize,
}

impl Ansatz {
    pub fn ry_full(n_qubits: usize, depth: usize) -> Self {
        Self { kind: AnsatzKind::RyFull { depth }, n_qubits }
    }

    pub fn rxry_full(n_qubits: usize, layers: usize) -> Self {
        Self { kind: AnsatzKind::RxRyFull { layers }, n_qubits }
    }

    pub fn qaoa(n_qubits: usize, p: usize, cost: IsingObservable) -> Self {
        Self { kind: AnsatzKind::Qaoa { p, cost }, n_qubits }
    }

    pub fn parameter_count(&self) -> usize {
        let n = self.n_qubits;
        match &self.kind {
            AnsatzKind::RyFull { depth } => n * (depth + 1),
            AnsatzKind::RxRyFull { layers } => 2 * n * (layers + 1),
            AnsatzKind::Qaoa { p, .. } => 2 * p,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Capacity { what: "ansatz".into(), required: self.n_qubits, limit: MAX_QUBITS });
        }
        if let AnsatzKind::Qaoa { cost, .. } = &self.kind {
            if cost.n_qubits() > self.n_qubits {
                return arg(format!("cost acts on {} qubits, ansatz has {}", cost.n_qubits(), self.n_qubits));
            }
        }
        Ok(())
    }

    /// The circuit `U(params)`.
    pub fn circuit(&self, params: &[f64]) -> Result<Circuit> {
        self.check()?;
        if params.len() != self.parameter_count() {
            return arg(format!("ansatz takes {} parameters, got {}", self.parameter_count(), params.len()));
        }
        let n = self.n_qubits;
        let mut c = Circuit::new(n);
        match &self.kind {
            AnsatzKind::RyFull { depth } => {
                for (layer, angles) in params.chunks(n).enumerate() {
                    if layer > 0 {
                        full_entangler(&mut c)?;
                    }
                    for (q, &t) in angles.iter().enumerate() {
                        c.push(GateOp::ry(q, t))?;
                    }
                }
                debug_assert_eq!(params.len(), n * (depth + 1));
            }
            AnsatzKind::RxRyFull { .. } => {
                for (layer, angles) in params.chunks(2 * n).enumerate() {
                    if layer > 0 {
                        full_entangler(&mut c)?;
                    }
                    for q in 0..n {
                        c.push(GateOp::rx(q, angles[2 * q]))?;
                        c.push(GateOp::ry(q, angles[2 * q + 1]))?;
                    }
                }
            }
            AnsatzKind::Qaoa { p, cost } => {
                let diagonal = cost.diagonal(n);
                let targets: Vec<usize> = (0..n).collect();
                for q in 0..n {
                    c.push(GateOp::h(q))?;
                }
                for layer in 0..*p {
                    let (theta, beta) = (params[layer], params[p + layer]);
                    c.push(GateOp::diagonal(targets.clone(), diagonal.iter().map(|e| -theta * e).collect()))?;
                    for q in 0..n {
                        c.push(GateOp::rx(q, 2.0 * beta))?;
                    }
                }
            }
        }
        Ok(c)
    }
}

/// CNOT from every qubit `i` to every `j > i`.
pub fn full_entangler(c: &mut Circuit) -> Result<()> {
    let n = c.n_qubits();
    for i in 0..n {
        for j in (i + 1)..n {
            c.push(GateOp::cnot(i, j))?;
        }
    }
    Ok(())
}

pub fn prepare_state(ansatz: &Ansatz, params: &[f64]) -> Result<Statevector> {
    ansatz.circuit(params)?.run()
}

/// A basis state with its probability and energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledState {
    /// `x_0 x_1 …`, qubit 0 first.
    pub bits: String,
    pub index: usize,
    pub probability: f64,
    pub energy: f64,
}

/// The `top_k` most probable basis states, descending; ties go to the lower index.
pub fn sample_solutions(state: &Statevector, diagonal: &[f64], top_k: usize) -> Result<Vec<SampledState>> {
    if top_k == 0 {
        return arg("top_k must be at least 1");
    }
    if diagonal.len() != state.amplitudes().len() {
        return arg("diagonal length does not match state dimension");
    }
    let n = state.n_qubits();
    let probs = state.probabilities();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(top_k)
        .map(|z| SampledState {
            bits: (0..n).map(|k| if (z >> k) & 1 == 1 { '1' } else { '0' }).collect(),
            index: z,
            probability: probs[z],
            energy: diagonal[z],
        })
        .collect())
}

/// How the optimiser sees `⟨H⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    #[default]
    Exact,
    /// Sample mean over this many measurements.
    Shots(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    pub best_value: f64,
    pub best_params: Vec<f64>,
    /// Most probable states of the final best state.
    pub top_states: Vec<SampledState>,
    /// Best-so-far value per iteration of the winning restart.
    pub trace: Vec<f64>,
    /// Best value and most probable state reached by each restart, in restart order.
    pub restarts: Vec<RestartSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub best_value: f64,
    pub top_states: Vec<SampledState>,
}

impl VariationalResult {
    /// Lowest-energy state among the top states.
    pub fn best_sample(&self) -> &SampledState {
        self.top_states
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.index.cmp(&b.index)))
            .expect("top_k >= 1")
    }
}

/// Settings shared by [`vqe_minimize`] and [`qaoa_minimize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalConfig {
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub expectation: Expectation,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_top_k() -> usize {
    8
}

impl VariationalConfig {
    pub fn new(optimizer: OptimizerConfig) -> Self {
        Self { optimizer, expectation: Expectation::Exact, top_k: default_top_k() }
    }
}

/// Minimise `⟨ψ(θ)|H|ψ(θ)⟩` over the ansatz parameters.
pub fn vqe_minimize(observable: &IsingObservable, ansatz: &Ansatz, config: &VariationalConfig) -> Result<VariationalResult> {
    ansatz.check()?;
    if observable.n_qubits() > ansatz.n_qubits {
        return arg(format!("observable acts on {} qubits, ansatz has {}", observable.n_qubits(), ansatz.n_qubits));
    }
    if config.top_k == 0 {
        return arg("top_k must be at least 1");
    }
    if let Expectation::Shots(0) = config.expectation {
        return arg("shot count must be at least 1");
    }
    let diagonal = observable.diagonal(ansatz.n_qubits);
    let seed = config.optimizer.seed;
    let mode = config.expectation;
    let make = |restart: u64| -> Box<dyn FnMut(&[f64]) -> f64 + Send> {
        let ansatz = ansatz.clone();
        let diagonal = diagonal.clone();
        let mut shots_rng = rng::indexed(seed, "shots", restart);
        Box::new(move |params: &[f64]| {
            let state = prepare_state(&ansatz, params).expect("parameter count checked");
            match mode {
                Expectation::Exact => state.expectation_diagonal(&diagonal).expect("dimension checked"),
                Expectation::Shots(shots) => shot_estimate(&state, &diagonal, shots, &mut shots_rng),
            }
        })
    };
    let runs = minimize_with_restarts(make, ansatz.parameter_count(), &config.optimizer)?;
    let exact_value = |params: &[f64]| -> Result<f64> { prepare_state(ansatz, params)?.expectation_diagonal(&diagonal) };
    let mut restarts = Vec::with_capacity(runs.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, run) in runs.iter().enumerate() {
        let state = prepare_state(ansatz, &run.best_x)?;
        let value = match mode {
            Expectation::Exact => run.best_value,
            Expectation::Shots(_) => exact_value(&run.best_x)?,
        };
        restarts.push(RestartSummary { best_value: value, top_states: sample_solutions(&state, &diagonal, config.top_k)? });
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((i, value));
        }
    }
    let (winner, best_value) = best.expect("at least one restart");
    let run = &runs[winner];
    Ok(VariationalResult {
        best_value,
        best_params: run.best_x.clone(),
        top_states: restarts[winner].top_states.clone(),
        trace: run.trace.clone(),
        restarts,
    })
}

/// [`vqe_minimize`] with the depth-`p` QAOA ansatz of `observable`.
pub fn qaoa_minimize(observable: &IsingObservable, n_qubits: usize, p: usize, config: &VariationalConfig) -> Result<VariationalResult> {
    vqe_minimize(observable, &Ansatz::qaoa(n_qubits, p, observable.clone()), config)
}

fn shot_estimate(state: &Statevector, diagonal: &[f64], shots: usize, rng: &mut impl Rng) -> f64 {
    let hist = state.sample(shots, rng).expect("shots >= 1");
    hist.iter().map(|(z, c)| diagonal[*z] * *c as f64).sum::<f64>() / shots as f64
}
