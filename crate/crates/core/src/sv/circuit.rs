use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{GateKind, GateOp, Statevector};
use crate::error::arg;
use crate::Result;

/// Ordered gate list on a fixed register.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, ops: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Append an op, checking its indices against the register.
    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        op.validate(self.n_qubits)?;
        self.ops.push(op);
        Ok(self)
    }

    /// Append all ops of `other` (same register).
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return arg(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            ));
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    /// Apply `op` only on the basis components where `controls` read the bits of
    /// `value` (controls[0] is the low bit). Zero bits are handled by X conjugation.
    pub fn push_on_value(&mut self, op: GateOp, controls: &[usize], value: usize) -> Result<&mut Self> {
        let zeros: Vec<usize> = controls
            .iter()
            .enumerate()
            .filter(|(b, _)| (value >> b) & 1 == 0)
            .map(|(_, &q)| q)
            .collect();
        for &q in &zeros {
            self.push(GateOp::x(q))?;
        }
        self.push(op.controlled_by(controls.iter().copied()))?;
        for &q in &zeros {
            self.push(GateOp::x(q))?;
        }
        Ok(self)
    }

    /// Reversed op order with every op inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit { n_qubits: self.n_qubits, ops: self.ops.iter().rev().map(GateOp::inverse).collect() }
    }

    /// The same circuit with `control` added to every op.
    pub fn controlled(&self, control: usize) -> Result<Circuit> {
        if control >= self.n_qubits {
            return arg(format!("control {control} out of range"));
        }
        let mut out = Circuit::new(self.n_qubits);
        for op in &self.ops {
            if op.qubits().any(|q| q == control) {
                return arg(format!("control {control} is already used by the circuit"));
            }
            out.ops.push(op.clone().controlled_by([control]));
        }
        Ok(out)
    }

    /// Re-index onto a larger register: qubit `i` becomes `mapping[i]`.
    pub fn remapped(&self, n_qubits: usize, mapping: &[usize]) -> Result<Circuit> {
        if mapping.len() != self.n_qubits {
            return arg("mapping length must equal the circuit's qubit count");
        }
        let mut out = Circuit::new(n_qubits);
        for op in &self.ops {
            let m = GateOp {
                kind: op.kind.clone(),
                targets: op.targets.iter().map(|&q| mapping[q]).collect(),
                controls: op.controls.iter().map(|&q| mapping[q]).collect(),
            };
            out.push(m)?;
        }
        Ok(out)
    }

    /// Run on `|0…0⟩`.
    pub fn run(&self) -> Result<Statevector> {
        let mut s = Statevector::zero(self.n_qubits)?;
        s.apply_circuit(self)?;
        Ok(s)
    }

    /// QFT `|k⟩ ↦ M^{-1/2} Σ_y e^{2πi yk/M} |y⟩` on `register` (register[0] is the low bit).
    pub fn qft(n_qubits: usize, register: &[usize]) -> Result<Circuit> {
        for (i, q) in register.iter().enumerate() {
            if register[..i].contains(q) {
                return arg(format!("duplicate qubit {q} in QFT register"));
            }
        }
        let m = register.len();
        let mut c = Circuit::new(n_qubits);
        for j in (0..m).rev() {
            c.push(GateOp::h(register[j]))?;
            for k in (0..j).rev() {
                let angle = PI / f64::from(1u32 << (j - k));
                c.push(GateOp::phase(register[j], angle).controlled_by([register[k]]))?;
            }
        }
        for i in 0..m / 2 {
            c.push(GateOp::swap(register[i], register[m - 1 - i]))?;
        }
        Ok(c)
    }

    /// Inverse QFT `|k⟩ ↦ M^{-1/2} Σ_y e^{-2πi yk/M} |y⟩`.
    pub fn inverse_qft(n_qubits: usize, register: &[usize]) -> Result<Circuit> {
        Ok(Self::qft(n_qubits, register)?.inverse())
    }

    /// Count ops by kind name, for diagnostics.
    pub fn gate_counts(&self) -> std::collections::BTreeMap<&'static str, usize> {
        let mut m = std::collections::BTreeMap::new();
        for op in &self.ops {
            let name = match op.kind {
                GateKind::H => "h",
                GateKind::X => "x",
                GateKind::Rx(_) => "rx",
                GateKind::Ry(_) => "ry",
                GateKind::Rz(_) => "rz",
                GateKind::Cnot => "cx",
                GateKind::Swap => "swap",
                GateKind::DiagonalPhase(_) => "diag",
            };
            *m.entry(name).or_insert(0) += 1;
        }
        m
    }
}
