use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::{weighted::WeightedIndex, Distribution};

use super::{Circuit, GateKind, GateOp, IsingObservable};
use crate::error::{arg, Error};
use crate::Result;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// Dense vector of `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "statevector".into(),
                required: n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return arg(format!("basis index {index} out of range for {n_qubits} qubits"));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wrap an amplitude vector. The length must be a power of two; the vector is
    /// normalised.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return arg(format!("amplitude count {len} is not a power of two >= 2"));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "statevector".into(),
                required: n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return arg("amplitudes have zero or non-finite norm");
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|amplitude|²` per basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution of `register` (register[0] is the low bit of the outcome).
    pub fn marginal(&self, register: &[usize]) -> Result<Vec<f64>> {
        self.check_indices(register)?;
        let mut out = vec![0.0; 1 << register.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut v = 0usize;
            for (b, &q) in register.iter().enumerate() {
                v |= ((i >> q) & 1) << b;
            }
            out[v] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Probability that qubit `q` reads 1.
    pub fn probability_one(&self, q: usize) -> Result<f64> {
        self.check_indices(&[q])?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> q) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Draw `shots` basis outcomes; returns a histogram keyed by basis index.
    pub fn sample(&self, shots: usize, rng: &mut impl rand::Rng) -> Result<BTreeMap<usize, usize>> {
        if shots == 0 {
            return arg("shots must be at least 1");
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| Error::Argument(format!("cannot sample state: {e}")))?;
        let mut hist = BTreeMap::new();
        for _ in 0..shots {
            *hist.entry(dist.sample(rng)).or_insert(0) += 1;
        }
        Ok(hist)
    }

    /// Exact `⟨ψ|H|ψ⟩` for a diagonal observable.
    pub fn expectation(&self, obs: &IsingObservable) -> Result<f64> {
        if let Some(q) = obs.max_qubit() {
            self.check_indices(&[q])?;
        }
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(z, a)| a.norm_sqr() * obs.energy_index(z))
            .sum())
    }

    /// Expectation against a precomputed diagonal (one energy per basis index).
    pub fn expectation_diagonal(&self, diagonal: &[f64]) -> Result<f64> {
        if diagonal.len() != self.amps.len() {
            return arg("diagonal length does not match state dimension");
        }
        Ok(self.amps.iter().zip(diagonal).map(|(a, e)| a.norm_sqr() * e).sum())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return arg("qubit-count mismatch in inner product");
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Largest per-amplitude distance to `other` after removing the global phase.
    pub fn distance_up_to_phase(&self, other: &Statevector) -> Result<f64> {
        let ov = self.inner(other)?;
        let phase = if ov.norm() > 1e-300 { ov / ov.norm() } else { Complex64::new(1.0, 0.0) };
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return arg(format!(
                "circuit acts on {} qubits, state has {}",
                circuit.n_qubits(),
                self.n_qubits
            ));
        }
        for op in circuit.ops() {
            self.apply(op)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        let cmask = op.controls.iter().fold(0usize, |m, &c| m | (1 << c));
        match &op.kind {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let m = [[c(s), c(s)], [c(s), c(-s)]];
                self.apply_1q(op.targets[0], cmask, m);
            }
            GateKind::X => self.apply_x(op.targets[0], cmask),
            GateKind::Cnot => self.apply_x(op.targets[1], cmask | (1 << op.targets[0])),
            GateKind::Rx(t) => {
                let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
                let m = [
                    [c(co), Complex64::new(0.0, -si)],
                    [Complex64::new(0.0, -si), c(co)],
                ];
                self.apply_1q(op.targets[0], cmask, m);
            }
            GateKind::Ry(t) => {
                let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
                let m = [[c(co), c(-si)], [c(si), c(co)]];
                self.apply_1q(op.targets[0], cmask, m);
            }
            GateKind::Rz(t) => {
                let m = [
                    [Complex64::from_polar(1.0, -t / 2.0), c(0.0)],
                    [c(0.0), Complex64::from_polar(1.0, t / 2.0)],
                ];
                self.apply_1q(op.targets[0], cmask, m);
            }
            GateKind::Swap => {
                let (a, b) = (op.targets[0], op.targets[1]);
                for i in 0..self.amps.len() {
                    if i & cmask == cmask && (i >> a) & 1 == 1 && (i >> b) & 1 == 0 {
                        let j = (i & !(1 << a)) | (1 << b);
                        self.amps.swap(i, j);
                    }
                }
            }
            GateKind::DiagonalPhase(phases) => {
                let factors: Vec<Complex64> =
                    phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & cmask != cmask {
                        continue;
                    }
                    let mut v = 0usize;
                    for (b, &q) in op.targets.iter().enumerate() {
                        v |= ((i >> q) & 1) << b;
                    }
                    *a *= factors[v];
                }
            }
        }
        Ok(())
    }

    fn apply_1q(&mut self, t: usize, cmask: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << t;
        for i in 0..self.amps.len() {
            if i & bit != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | bit;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn apply_x(&mut self, t: usize, cmask: usize) {
        let bit = 1 << t;
        for i in 0..self.amps.len() {
            if i & bit == 0 && i & cmask == cmask {
                self.amps.swap(i, i | bit);
            }
        }
    }

    fn check_indices(&self, qs: &[usize]) -> Result<()> {
        for &q in qs {
            if q >= self.n_qubits {
                return arg(format!("qubit {q} out of range for {} qubits", self.n_qubits));
            }
        }
        Ok(())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
