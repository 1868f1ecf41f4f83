use serde::{Deserialize, Serialize};

use crate::error::arg;
use crate::Result;

/// The gate alphabet understood by the simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// `targets = [control, target]`.
    Cnot,
    /// `targets = [a, b]`.
    Swap,
    /// `exp(i·phases[v])` on the basis component whose target bits read `v`
    /// (targets[0] is the low bit). `phases.len() == 2^targets.len()`.
    DiagonalPhase(Vec<f64>),
}

/// A gate with its target qubits and (positive) control qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Self {
        Self { kind, targets, controls: Vec::new() }
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, vec![q])
    }

    pub fn x(q: usize) -> Self {
        Self::new(GateKind::X, vec![q])
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Rx(theta), vec![q])
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Ry(theta), vec![q])
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Self::new(GateKind::Rz(theta), vec![q])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cnot, vec![control, target])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![a, b])
    }

    /// Pauli Z as a diagonal phase.
    pub fn z(q: usize) -> Self {
        Self::phase(q, std::f64::consts::PI)
    }

    /// `diag(1, e^{iφ})` on one qubit.
    pub fn phase(q: usize, phi: f64) -> Self {
        Self::new(GateKind::DiagonalPhase(vec![0.0, phi]), vec![q])
    }

    pub fn diagonal(targets: Vec<usize>, phases: Vec<f64>) -> Self {
        Self::new(GateKind::DiagonalPhase(phases), targets)
    }

    /// Add control qubits (the gate fires when all controls read 1).
    pub fn controlled_by(mut self, controls: impl IntoIterator<Item = usize>) -> Self {
        self.controls.extend(controls);
        self
    }

    /// Every qubit this op touches, targets first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(&self.controls).copied()
    }

    /// The inverse gate: parameters negated, self-inverse kinds unchanged.
    pub fn inverse(&self) -> Self {
        let kind = match &self.kind {
            GateKind::Rx(t) => GateKind::Rx(-t),
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Rz(t) => GateKind::Rz(-t),
            GateKind::DiagonalPhase(p) => GateKind::DiagonalPhase(p.iter().map(|x| -x).collect()),
            k => k.clone(),
        };
        Self { kind, targets: self.targets.clone(), controls: self.controls.clone() }
    }

    pub(crate) fn validate(&self, n_qubits: usize) -> Result<()> {
        let want = match &self.kind {
            GateKind::Cnot | GateKind::Swap => Some(2),
            GateKind::DiagonalPhase(p) => {
                if self.targets.is_empty() || p.len() != 1 << self.targets.len() {
                    return arg(format!(
                        "diagonal phase over {} qubits needs {} phases, got {}",
                        self.targets.len(),
                        1usize << self.targets.len().min(30),
                        p.len()
                    ));
                }
                None
            }
            _ => Some(1),
        };
        if let Some(w) = want {
            if self.targets.len() != w {
                return arg(format!("{:?} expects {w} targets, got {}", self.kind, self.targets.len()));
            }
        }
        let mut seen = 0u64;
        for q in self.qubits() {
            if q >= n_qubits {
                return arg(format!("qubit {q} out of range for {n_qubits} qubits"));
            }
            if seen & (1 << q) != 0 {
                return arg(format!("qubit {q} used twice in one gate"));
            }
            seen |= 1 << q;
        }
        Ok(())
    }
}
