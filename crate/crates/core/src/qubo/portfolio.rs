use std::io::Read;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{index_bits, EqualityConstraint, Qubo};
use crate::error::{arg, invalid, Error};
use crate::{rng, Result};

/// Mean-variance selection `min q·xᵀΣx − μᵀx` subject to `1ᵀx = B`.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioSpec {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub q: f64,
    pub budget: usize,
    /// `None` picks twice the ℓ1 mass of the unpenalised objective.
    pub penalty: Option<f64>,
}

impl PortfolioSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        check_covariance(&self.sigma, n)?;
        if !(self.q > 0.0) {
            return arg(format!("risk factor q must be positive, got {}", self.q));
        }
        if self.budget == 0 || self.budget >= n {
            return arg(format!("budget {} must lie strictly between 0 and {n}", self.budget));
        }
        if let Some(p) = self.penalty {
            if !(p > 0.0) {
                return arg(format!("penalty must be positive, got {p}"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty.unwrap_or_else(|| default_penalty(&portfolio_objective(&self.mu, &self.sigma, self.q)))
    }
}

pub(super) fn default_penalty(objective: &Qubo) -> f64 {
    let mass = objective.l1_mass();
    if mass > 0.0 {
        2.0 * mass
    } else {
        1.0
    }
}

fn check_covariance(sigma: &DMatrix<f64>, n: usize) -> Result<()> {
    if n == 0 {
        return invalid("no assets");
    }
    if sigma.nrows() != n || sigma.ncols() != n {
        return invalid(format!("covariance is {}x{}, expected {n}x{n}", sigma.nrows(), sigma.ncols()));
    }
    let scale = sigma.amax().max(1e-300);
    if (sigma - sigma.transpose()).amax() > 1e-12 * scale {
        return invalid("covariance is not symmetric");
    }
    let min_eig = SymmetricEigen::new(sigma.clone()).eigenvalues.min();
    if min_eig < -1e-9 * scale {
        return invalid(format!("covariance is not positive semidefinite (eigenvalue {min_eig:.3e})"));
    }
    Ok(())
}

/// `q·xᵀΣx − μᵀx` without the budget.
pub fn portfolio_objective(mu: &DVector<f64>, sigma: &DMatrix<f64>, q: f64) -> Qubo {
    Qubo { quadratic: sigma * q, linear: -mu, constant: 0.0 }
}

/// Objective with `penalty·(1ᵀx − B)²` folded in.
pub fn build_portfolio_qubo(spec: &PortfolioSpec) -> Result<Qubo> {
    spec.validate()?;
    portfolio_objective(&spec.mu, &spec.sigma, spec.q)
        .fold_equality(&EqualityConstraint::cardinality(spec.n(), spec.budget as f64), spec.penalty_weight())
}

/// `(xᵀΣx, μᵀx)` for one selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioPoint {
    pub x: Vec<u8>,
    pub risk: f64,
    pub ret: f64,
}

fn evaluate(mu: &DVector<f64>, sigma: &DMatrix<f64>, x: Vec<u8>) -> PortfolioPoint {
    let xv = DVector::from_iterator(x.len(), x.iter().map(|&b| f64::from(b)));
    PortfolioPoint { risk: (xv.transpose() * sigma * &xv)[(0, 0)], ret: mu.dot(&xv), x }
}

/// Every subset of the assets, in basis-index order.
pub fn enumerate_portfolios(mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<Vec<PortfolioPoint>> {
    let n = mu.len();
    check_covariance(sigma, n)?;
    if n > 20 {
        return Err(Error::Capacity { what: "portfolio enumeration".into(), required: n, limit: 20 });
    }
    Ok((0..1usize << n).map(|z| evaluate(mu, sigma, index_bits(z, n))).collect())
}

/// Points not dominated in (lower risk, higher return), sorted by risk.
pub fn pareto_front(points: &[PortfolioPoint]) -> Vec<PortfolioPoint> {
    let dominated = |p: &PortfolioPoint| {
        points.iter().any(|o| {
            o.risk <= p.risk && o.ret >= p.ret && (o.risk < p.risk || o.ret > p.ret)
        })
    };
    let mut front: Vec<PortfolioPoint> = points.iter().filter(|p| !dominated(p)).cloned().collect();
    front.sort_by(|a, b| a.risk.total_cmp(&b.risk).then(b.ret.total_cmp(&a.ret)));
    front
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub q: f64,
    #[serde(flatten)]
    pub point: PortfolioPoint,
}

/// Unconstrained optimum of `q·xᵀΣx − μᵀx` for each risk factor.
pub fn efficient_frontier(mu: &DVector<f64>, sigma: &DMatrix<f64>, q_values: &[f64]) -> Result<Vec<FrontierPoint>> {
    check_covariance(sigma, mu.len())?;
    q_values
        .iter()
        .map(|&q| {
            if !(q > 0.0) {
                return arg(format!("risk factor q must be positive, got {q}"));
            }
            let (x, _) = portfolio_objective(mu, sigma, q).brute_force()?;
            Ok(FrontierPoint { q, point: evaluate(mu, sigma, x) })
        })
        .collect()
}

/// Seeded test instance: returns in `[0, 0.02)` and a factor-model covariance
/// `FFᵀ/n + 10⁻⁴·I` with `F` uniform in `[−0.1, 0.1)`.
pub fn synthetic_portfolio(n: usize, seed: u64) -> (DVector<f64>, DMatrix<f64>) {
    let mut r = rng::substream(seed, "synthetic-portfolio");
    let mu = DVector::from_fn(n, |_, _| r.random_range(0.0..0.02));
    let f = DMatrix::from_fn(n, n, |_, _| r.random_range(-0.1..0.1));
    let sigma = &f * f.transpose() / n as f64 + DMatrix::identity(n, n) * 1e-4;
    (mu, sigma)
}

/// Read `mu,cov_1,…,cov_n`: row `k` holds `μ_k` and row `k` of `Σ`.
pub fn read_portfolio_csv(reader: impl Read) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut mu = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Validation(format!("row {}: bad number {s:?}", line + 1))))
            .collect::<Result<_>>()?;
        let (m, row) = vals.split_first().ok_or_else(|| Error::Validation(format!("row {} is empty", line + 1)))?;
        mu.push(*m);
        rows.push(row.to_vec());
    }
    let n = mu.len();
    if rows.iter().any(|r| r.len() != n) {
        return invalid(format!("expected {} columns per row (mu plus {n} covariances)", n + 1));
    }
    let sigma = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    check_covariance(&sigma, n)?;
    Ok((DVector::from_vec(mu), sigma))
}
