use std::io::Read;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::portfolio::default_penalty;
use super::Qubo;
use crate::error::{arg, invalid, Error};
use crate::{rng, Result};

/// Choose `q_clusters` representatives maximising total similarity of each stock
/// to its representative.
///
/// Variables are `x_ij` at `i·n + j` (stock `i` represented by `j`) followed by
/// `y_j` at `n² + j` (stock `j` selected).
#[derive(Clone, Debug, PartialEq)]
pub struct DiversificationSpec {
    pub rho: DMatrix<f64>,
    pub q_clusters: usize,
    /// `None` picks twice the ℓ1 mass of the similarity objective.
    pub penalty: Option<f64>,
}

impl DiversificationSpec {
    pub fn n(&self) -> usize {
        self.rho.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.n() * self.n() + self.n()
    }

    pub fn x_index(&self, i: usize, j: usize) -> usize {
        i * self.n() + j
    }

    pub fn y_index(&self, j: usize) -> usize {
        self.n() * self.n() + j
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.rho.ncols() != n {
            return invalid(format!("similarity must be square and nonempty, got {}x{}", n, self.rho.ncols()));
        }
        for i in 0..n {
            if (self.rho[(i, i)] - 1.0).abs() > 1e-12 {
                return invalid(format!("rho[{i}][{i}] must be 1"));
            }
            for j in 0..n {
                if (self.rho[(i, j)] - self.rho[(j, i)]).abs() > 1e-12 {
                    return invalid(format!("rho not symmetric at ({i}, {j})"));
                }
                if self.rho[(i, j)] > 1.0 + 1e-12 {
                    return invalid(format!("rho[{i}][{j}] exceeds 1"));
                }
            }
        }
        if self.q_clusters == 0 || self.q_clusters > n {
            return arg(format!("cluster count {} must lie in 1..={n}", self.q_clusters));
        }
        if let Some(a) = self.penalty {
            if !(a > 0.0) {
                return arg(format!("penalty must be positive, got {a}"));
            }
        }
        Ok(())
    }

    /// `−Σ ρ_ij x_ij`.
    pub fn objective(&self) -> Qubo {
        let mut q = Qubo::zeros(self.n_vars());
        for i in 0..self.n() {
            for j in 0..self.n() {
                q.linear[self.x_index(i, j)] -= self.rho[(i, j)];
            }
        }
        q
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty.unwrap_or_else(|| default_penalty(&self.objective()))
    }
}

/// Objective plus `A·[(Σy − q)² + Σ_i(Σ_j x_ij − 1)² + Σ_j(x_jj − y_j)² + Σ_ij x_ij(1 − y_j)]`.
pub fn build_diversification_qubo(spec: &DiversificationSpec) -> Result<Qubo> {
    spec.validate()?;
    let n = spec.n();
    let a = spec.penalty_weight();
    let mut h = spec.objective();
    let q = spec.q_clusters as f64;

    // (Σ_j y_j − q)²
    for j in 0..n {
        h.add_term(spec.y_index(j), spec.y_index(j), a * (1.0 - 2.0 * q));
        for k in (j + 1)..n {
            h.add_term(spec.y_index(j), spec.y_index(k), 2.0 * a);
        }
    }
    h.constant += a * q * q;

    // (Σ_j x_ij − 1)² for each i
    for i in 0..n {
        for j in 0..n {
            h.add_term(spec.x_index(i, j), spec.x_index(i, j), -a);
            for k in (j + 1)..n {
                h.add_term(spec.x_index(i, j), spec.x_index(i, k), 2.0 * a);
            }
        }
        h.constant += a;
    }

    // (x_jj − y_j)²
    for j in 0..n {
        h.add_term(spec.x_index(j, j), spec.x_index(j, j), a);
        h.add_term(spec.y_index(j), spec.y_index(j), a);
        h.add_term(spec.x_index(j, j), spec.y_index(j), -2.0 * a);
    }

    // x_ij (1 − y_j)
    for i in 0..n {
        for j in 0..n {
            h.linear[spec.x_index(i, j)] += a;
            h.add_term(spec.x_index(i, j), spec.y_index(j), -a);
        }
    }
    Ok(h)
}

/// A violated constraint family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// `Σ y_j ≠ q`.
    Budget { selected: usize },
    /// Stock `i` is assigned to `count ≠ 1` representatives.
    Assignment { stock: usize, count: usize },
    /// `x_jj ≠ y_j`.
    Diagonal { stock: usize },
    /// `x_ij = 1` while `y_j = 0`.
    Representative { stock: usize, representative: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversificationDecode {
    pub selected: Vec<usize>,
    /// Representative of each stock, when exactly one is assigned.
    pub assignment: Vec<Option<usize>>,
    pub violations: Vec<Violation>,
}

impl DiversificationDecode {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn decode_diversification(spec: &DiversificationSpec, x: &[u8]) -> Result<DiversificationDecode> {
    let n = spec.n();
    if x.len() != spec.n_vars() {
        return arg(format!("bitstring has {} bits, expected {}", x.len(), spec.n_vars()));
    }
    let on = |k: usize| x[k] != 0;
    let selected: Vec<usize> = (0..n).filter(|&j| on(spec.y_index(j))).collect();
    let mut violations = Vec::new();
    if selected.len() != spec.q_clusters {
        violations.push(Violation::Budget { selected: selected.len() });
    }
    let mut assignment = Vec::with_capacity(n);
    for i in 0..n {
        let reps: Vec<usize> = (0..n).filter(|&j| on(spec.x_index(i, j))).collect();
        if reps.len() != 1 {
            violations.push(Violation::Assignment { stock: i, count: reps.len() });
        }
        assignment.push((reps.len() == 1).then(|| reps[0]));
    }
    for j in 0..n {
        if on(spec.x_index(j, j)) != on(spec.y_index(j)) {
            violations.push(Violation::Diagonal { stock: j });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if on(spec.x_index(i, j)) && !on(spec.y_index(j)) {
                violations.push(Violation::Representative { stock: i, representative: j });
            }
        }
    }
    Ok(DiversificationDecode { selected, assignment, violations })
}

/// Seeded symmetric similarity matrix with unit diagonal and off-diagonal entries in `[0, 1)`.
pub fn synthetic_similarity(n: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::substream(seed, "synthetic-similarity");
    let mut rho = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = r.random_range(0.0..1.0);
            rho[(i, j)] = v;
            rho[(j, i)] = v;
        }
    }
    rho
}

/// Read a square similarity matrix; the first row is a header.
pub fn read_similarity_csv(reader: impl Read) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::Validation(format!("row {}: bad number {s:?}", line + 1))))
                .collect::<Result<_>>()?,
        );
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return invalid(format!("similarity matrix must be square, got {n} rows"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
