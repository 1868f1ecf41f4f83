//! Quadratic unconstrained binary optimisation.
//!
//! A [`Qubo`] is minimised; maximisation problems are negated when built.
//! Bit `k` of a basis index is variable `x_k`, which matches the qubit order
//! of the simulator.

mod diversification;
mod portfolio;

pub use diversification::{
    build_diversification_qubo, decode_diversification, read_similarity_csv, synthetic_similarity, DiversificationDecode,
    DiversificationSpec, Violation,
};
pub use portfolio::{
    build_portfolio_qubo, efficient_frontier, enumerate_portfolios, pareto_front, portfolio_objective,
    read_portfolio_csv, synthetic_portfolio, FrontierPoint, PortfolioPoint, PortfolioSpec,
};

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{arg, invalid, Error};
use crate::sv::IsingObservable;
use crate::Result;

/// Largest problem enumerated exhaustively.
pub const MAX_BRUTE_FORCE: usize = 24;

/// `E(x) = cᵀx + xᵀQx + constant` with `Q` symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct Qubo {
    pub quadratic: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

/// `A x = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualityConstraint {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl EqualityConstraint {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return arg(format!("{} constraint rows but {} right-hand sides", a.nrows(), b.len()));
        }
        Ok(Self { a, b })
    }

    /// `Σ_i x_i = total` over `n` variables.
    pub fn cardinality(n: usize, total: f64) -> Self {
        Self { a: DMatrix::from_element(1, n, 1.0), b: DVector::from_element(1, total) }
    }

    pub fn is_satisfied(&self, x: &[u8], tol: f64) -> bool {
        let xv = DVector::from_iterator(x.len(), x.iter().map(|&b| f64::from(b)));
        (&self.a * xv - &self.b).amax() <= tol
    }
}

impl Qubo {
    pub fn zeros(n: usize) -> Self {
        Self { quadratic: DMatrix::zeros(n, n), linear: DVector::zeros(n), constant: 0.0 }
    }

    pub fn new(quadratic: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        let n = linear.len();
        if quadratic.nrows() != n || quadratic.ncols() != n {
            return arg(format!("quadratic is {}x{}, linear has {n} entries", quadratic.nrows(), quadratic.ncols()));
        }
        for i in 0..n {
            for j in 0..i {
                if (quadratic[(i, j)] - quadratic[(j, i)]).abs() > 1e-12 {
                    return invalid(format!("quadratic not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { quadratic, linear, constant })
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    /// Add `v·x_i·x_j`, split evenly across `Q_ij` and `Q_ji`.
    pub fn add_term(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.quadratic[(i, i)] += v;
        } else {
            self.quadratic[(i, j)] += v / 2.0;
            self.quadratic[(j, i)] += v / 2.0;
        }
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.n() {
            return arg(format!("bitstring has {} bits, problem has {}", x.len(), self.n()));
        }
        let mut e = self.constant;
        for i in 0..self.n() {
            if x[i] == 0 {
                continue;
            }
            e += self.linear[i] + self.quadratic[(i, i)];
            for j in (i + 1)..self.n() {
                if x[j] != 0 {
                    e += 2.0 * self.quadratic[(i, j)];
                }
            }
        }
        Ok(e)
    }

    /// Energy of the bitstring encoded in a basis index.
    pub fn energy_index(&self, z: usize) -> f64 {
        self.energy(&index_bits(z, self.n())).expect("length matches")
    }

    /// `Σ|Q_ij| + Σ|c_i|`, an upper bound on `max E − min E`.
    pub fn l1_mass(&self) -> f64 {
        self.quadratic.iter().map(|v| v.abs()).sum::<f64>() + self.linear.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Add `α‖Ax − b‖²` expanded with `x_i² = x_i`.
    pub fn fold_equality(&self, eq: &EqualityConstraint, alpha: f64) -> Result<Qubo> {
        if eq.a.ncols() != self.n() {
            return arg(format!("constraint has {} columns, problem has {} variables", eq.a.ncols(), self.n()));
        }
        if !(alpha > 0.0) {
            return arg(format!("penalty weight must be positive, got {alpha}"));
        }
        let mut out = self.clone();
        out.quadratic += alpha * eq.a.transpose() * &eq.a;
        out.linear -= 2.0 * alpha * eq.a.transpose() * &eq.b;
        out.constant += alpha * eq.b.norm_squared();
        Ok(out)
    }

    /// Spin form with `x_k = (1 − s_k)/2`, where `s_k = ±1` is the Z eigenvalue of qubit `k`.
    pub fn to_ising(&self) -> IsingObservable {
        let n = self.n();
        let mut offset = self.constant;
        let mut singles = vec![0.0; n];
        let mut terms = Vec::new();
        for i in 0..n {
            let lin = self.linear[i] + self.quadratic[(i, i)];
            offset += lin / 2.0;
            singles[i] -= lin / 2.0;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let w = 2.0 * self.quadratic[(i, j)];
                if w == 0.0 {
                    continue;
                }
                offset += w / 4.0;
                singles[i] -= w / 4.0;
                singles[j] -= w / 4.0;
                terms.push((vec![i, j], w / 4.0));
            }
        }
        let mut all: Vec<(Vec<usize>, f64)> =
            singles.into_iter().enumerate().filter(|(_, c)| *c != 0.0).map(|(k, c)| (vec![k], c)).collect();
        all.extend(terms);
        IsingObservable::new(all, offset)
    }

    /// Visit every bitstring in Gray-code order with its energy.
    fn for_each_energy(&self, mut visit: impl FnMut(usize, f64)) -> Result<()> {
        let n = self.n();
        if n > MAX_BRUTE_FORCE {
            return Err(Error::Capacity { what: "exhaustive search".into(), required: n, limit: MAX_BRUTE_FORCE });
        }
        let mut x = vec![false; n];
        // field[k] = Σ_{j≠k} 2·Q_kj·x_j
        let mut field = vec![0.0; n];
        let mut energy = self.constant;
        let mut index = 0usize;
        visit(0, energy);
        for step in 1usize..1 << n {
            let k = step.trailing_zeros() as usize;
            let gain = self.linear[k] + self.quadratic[(k, k)] + field[k];
            let sign = if x[k] { -1.0 } else { 1.0 };
            energy += sign * gain;
            x[k] = !x[k];
            index ^= 1 << k;
            for (j, f) in field.iter_mut().enumerate() {
                if j != k {
                    *f += sign * 2.0 * self.quadratic[(j, k)];
                }
            }
            visit(index, energy);
        }
        Ok(())
    }

    /// Energies of all `2^n` bitstrings, indexed by basis index.
    pub fn energy_table(&self) -> Result<Vec<f64>> {
        let mut table = vec![0.0; 1 << self.n()];
        self.for_each_energy(|z, e| table[z] = e)?;
        Ok(table)
    }

    /// Exhaustive minimiser; ties go to the lowest basis index.
    pub fn brute_force(&self) -> Result<(Vec<u8>, f64)> {
        // Incremental updates drift by a few ulp, so near-equal energies count as ties.
        let tol = 1e-10 * (1.0 + self.l1_mass() + self.constant.abs());
        let mut best = (0usize, f64::INFINITY);
        self.for_each_energy(|z, e| {
            if e < best.1 - tol || ((e - best.1).abs() <= tol && z < best.0) {
                best = (z, e);
            }
        })?;
        let x = index_bits(best.0, self.n());
        let value = self.energy(&x)?;
        Ok((x, value))
    }

    /// Serialise to the line-oriented text format.
    ///
    /// ```text
    /// n
    /// i j v    # v·x_i·x_j, i ≤ j
    /// i v      # v·x_i
    /// const v
    /// ```
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut s = format!("{n}\n");
        for i in 0..n {
            for j in i..n {
                let v = if i == j { self.quadratic[(i, i)] } else { 2.0 * self.quadratic[(i, j)] };
                if v != 0.0 {
                    writeln!(s, "{i} {j} {v}").unwrap();
                }
            }
        }
        for i in 0..n {
            if self.linear[i] != 0.0 {
                writeln!(s, "{i} {}", self.linear[i]).unwrap();
            }
        }
        if self.constant != 0.0 {
            writeln!(s, "const {}", self.constant).unwrap();
        }
        s
    }

    /// Parse the text format; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Qubo> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::Validation("empty QUBO file".into()))?;
        let n: usize = first.parse().map_err(|_| Error::Validation(format!("line 1: bad variable count {first:?}")))?;
        let mut q = Qubo::zeros(n);
        let num = |no: usize, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Validation(format!("line {no}: bad number {s:?}")))
        };
        let var = |no: usize, s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(i) if i < n => Ok(i),
                _ => Err(Error::Validation(format!("line {no}: bad variable index {s:?}"))),
            }
        };
        for (no, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["const", v] => q.constant += num(no, v)?,
                [i, v] => q.linear[var(no, i)?] += num(no, v)?,
                [i, j, v] => {
                    let (i, j) = (var(no, i)?, var(no, j)?);
                    if i > j {
                        return invalid(format!("line {no}: quadratic entries need i <= j"));
                    }
                    q.add_term(i, j, num(no, v)?);
                }
                _ => return invalid(format!("line {no}: expected 2 or 3 fields")),
            }
        }
        Ok(q)
    }
}

/// Bits of `z`, low bit first.
pub fn index_bits(z: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((z >> k) & 1) as u8).collect()
}

pub fn bits_index(x: &[u8]) -> usize {
    x.iter().enumerate().fold(0, |acc, (k, &b)| acc | ((b as usize & 1) << k))
}

/// Bitstring with `x_0` first, as commonly printed.
pub fn bit_string(x: &[u8]) -> String {
    x.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}
