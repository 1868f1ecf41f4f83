//! Three-block ADMM heuristic for mixed-binary problems.
//!
//! Problem form:
//!
//! ```text
//! min  q(x) + φ(u)    x ∈ {0,1}^n, u ∈ [lower, upper]
//! s.t. Gx = b,  g(x) ≤ 0,  ℓ(x, u) ≤ 0,  A0·x + A1·u = 0
//! ```
//!
//! Each iteration solves a QUBO in `x`, a box-constrained convex quadratic in
//! the continuous copy `x̄`, a closed-form update of the auxiliary `y`, and a
//! dual step on the consensus residual `r = A0·x + A1·x̄ − y`. The iterate
//! with the lowest merit value is returned.

use std::io::Read;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{arg, invalid, Error};
use crate::optim::OptimizerConfig;
use crate::qubo::{index_bits, EqualityConstraint, Qubo};
use crate::rng;
use crate::variational::{vqe_minimize, Ansatz, VariationalConfig};
use crate::Result;

/// Rows `a·v − b ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRows {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LinearRows {
    pub fn values(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.a * v - &self.b
    }
}

/// Rows `lx·x + lu·u − l ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointRows {
    pub lx: DMatrix<f64>,
    pub lu: DMatrix<f64>,
    pub l: DVector<f64>,
}

/// `φ(u) = ½uᵀPu + pᵀu` with `P` positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexQuadratic {
    pub p_mat: DMatrix<f64>,
    pub p_vec: DVector<f64>,
}

impl ConvexQuadratic {
    pub fn zero(m: usize) -> Self {
        Self { p_mat: DMatrix::zeros(m, m), p_vec: DVector::zeros(m) }
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.p_mat * u)) + self.p_vec.dot(u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MboProblem {
    pub objective: Qubo,
    pub equality: Option<EqualityConstraint>,
    pub inequality: Option<LinearRows>,
    pub phi: ConvexQuadratic,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub joint: Option<JointRows>,
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    /// Starting value of `x̄`.
    pub initial_continuous: DVector<f64>,
}

impl MboProblem {
    /// A pure QUBO with no constraints and no continuous part.
    pub fn from_qubo(objective: Qubo) -> Self {
        let n = objective.n();
        Self {
            objective,
            equality: None,
            inequality: None,
            phi: ConvexQuadratic::zero(0),
            lower: DVector::zeros(0),
            upper: DVector::zeros(0),
            joint: None,
            a0: DMatrix::zeros(0, n),
            a1: DMatrix::zeros(0, 0),
            initial_continuous: DVector::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.objective.n()
    }

    pub fn m(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, r) = (self.n(), self.m(), self.a0.nrows());
        let shape = |what: &str, got: (usize, usize), want: (usize, usize)| -> Result<()> {
            if got != want {
                return arg(format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1));
            }
            Ok(())
        };
        shape("A0", self.a0.shape(), (r, n))?;
        shape("A1", self.a1.shape(), (r, m))?;
        shape("P", self.phi.p_mat.shape(), (m, m))?;
        shape("p", self.phi.p_vec.shape(), (m, 1))?;
        shape("upper", self.upper.shape(), (m, 1))?;
        shape("initial continuous", self.initial_continuous.shape(), (m, 1))?;
        if let Some(eq) = &self.equality {
            shape("G", eq.a.shape(), (eq.b.len(), n))?;
        }
        if let Some(g) = &self.inequality {
            shape("inequality rows", g.a.shape(), (g.b.len(), n))?;
        }
        if let Some(j) = &self.joint {
            shape("joint x rows", j.lx.shape(), (j.l.len(), n))?;
            shape("joint u rows", j.lu.shape(), (j.l.len(), m))?;
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(Error::Infeasible("continuous box has lower > upper".into()));
        }
        if m > 0 {
            let min_eig = SymmetricEigen::new(self.phi.p_mat.clone()).eigenvalues.min();
            if min_eig < -1e-9 * (1.0 + self.phi.p_mat.amax()) {
                return invalid(format!("continuous objective is not convex (eigenvalue {min_eig:.3e})"));
            }
        }
        Ok(())
    }

    /// `Σ max(g(x), 0) + Σ max(ℓ(x, u), 0)`.
    pub fn violation(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let mut v = 0.0;
        if let Some(g) = &self.inequality {
            v += g.values(x).iter().map(|r| r.max(0.0)).sum::<f64>();
        }
        if let Some(j) = &self.joint {
            v += (&j.lx * x + &j.lu * u - &j.l).iter().map(|r| r.max(0.0)).sum::<f64>();
        }
        v
    }

    /// Default merit weight: ten times the largest objective coefficient magnitude.
    pub fn default_merit_weight(&self) -> f64 {
        let q = &self.objective;
        let largest = q.linear.iter().chain(q.quadratic.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        10.0 * largest.max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case")]
pub enum QuboSolver {
    BruteForce,
    /// Lowest-energy state among the most probable states of an RY ansatz.
    Vqe { depth: usize, iterations: usize, restarts: usize },
    /// Same readout with the depth-`p` QAOA ansatz.
    Qaoa { p: usize, iterations: usize, restarts: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    pub beta: f64,
    pub c: f64,
    /// `None` uses [`MboProblem::default_merit_weight`].
    pub mu: Option<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub solver: QuboSolver,
    pub seed: u64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 12.0,
            beta: 11.0,
            c: 10.0,
            mu: None,
            tolerance: 1e-4,
            max_iter: 100,
            solver: QuboSolver::BruteForce,
            seed: 0,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("beta", self.beta), ("c", self.c), ("tolerance", self.tolerance)] {
            if !(v > 0.0) {
                return arg(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0) {
                return arg(format!("mu must be positive, got {mu}"));
            }
        }
        if self.max_iter == 0 {
            return arg("max_iter must be at least 1");
        }
        Ok(())
    }
}

/// Current iterate `(x, x̄, y, λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub k: usize,
    pub x: DVector<f64>,
    pub x_bar: DVector<f64>,
    pub y: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl AdmmState {
    pub fn initial(problem: &MboProblem) -> Self {
        let r = problem.a0.nrows();
        Self {
            k: 0,
            x: DVector::zeros(problem.n()),
            x_bar: problem.initial_continuous.clone(),
            y: DVector::zeros(r),
            lambda: DVector::zeros(r),
        }
    }

    pub fn residual(&self, problem: &MboProblem) -> DVector<f64> {
        &problem.a0 * &self.x + &problem.a1 * &self.x_bar - &self.y
    }
}

/// `q(x) + c/2‖Gx − b‖² + λᵀA0x + ϱ/2‖A0x + A1x̄ − y‖²` with `x̄, y, λ` frozen.
pub fn block1_qubo(problem: &MboProblem, state: &AdmmState, config: &AdmmConfig) -> Result<Qubo> {
    let mut q = problem.objective.clone();
    if let Some(eq) = &problem.equality {
        if eq.a.nrows() > 0 {
            q = q.fold_equality(eq, config.c / 2.0)?;
        }
    }
    if problem.a0.nrows() > 0 {
        q.linear += problem.a0.transpose() * &state.lambda;
        let target = &state.y - &problem.a1 * &state.x_bar;
        q = q.fold_equality(&EqualityConstraint::new(problem.a0.clone(), target)?, config.rho / 2.0)?;
    }
    Ok(q)
}

/// Minimise `φ(x̄) + λᵀA1x̄ + ϱ/2‖A0x + A1x̄ − y‖²` over the box and joint rows
/// by projected gradient with backtracking, starting from the current `x̄`.
pub fn block2_convex(problem: &MboProblem, state: &AdmmState, config: &AdmmConfig) -> Result<DVector<f64>> {
    let m = problem.m();
    if m == 0 {
        return Ok(DVector::zeros(0));
    }
    let a1 = &problem.a1;
    let target = &state.y - &problem.a0 * &state.x;
    let f = |u: &DVector<f64>| -> f64 {
        problem.phi.value(u) + state.lambda.dot(&(a1 * u)) + 0.5 * config.rho * (a1 * u - &target).norm_squared()
    };
    let grad = |u: &DVector<f64>| -> DVector<f64> {
        &problem.phi.p_mat * u + &problem.phi.p_vec + a1.transpose() * (&state.lambda + config.rho * (a1 * u - &target))
    };
    let region = ContinuousRegion::new(problem, &state.x);
    let mut u = region.project(&state.x_bar)?;
    let mut step = 1.0;
    for _ in 0..100_000 {
        let g = grad(&u);
        let stationarity = (&u - region.project(&(&u - &g))?).norm();
        if stationarity <= 1e-8 {
            return Ok(u);
        }
        let fu = f(&u);
        loop {
            let cand = region.project(&(&u - step * &g))?;
            let d = &cand - &u;
            if f(&cand) <= fu + g.dot(&d) + d.norm_squared() / (2.0 * step) + 1e-15 * fu.abs() {
                u = cand;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok(u);
            }
        }
    }
    Ok(u)
}

/// Box intersected with the joint rows at fixed `x`.
struct ContinuousRegion<'a> {
    lower: &'a DVector<f64>,
    upper: &'a DVector<f64>,
    /// `a·u ≤ b` per row.
    halfspaces: Vec<(DVector<f64>, f64)>,
}

impl<'a> ContinuousRegion<'a> {
    fn new(problem: &'a MboProblem, x: &DVector<f64>) -> Self {
        let halfspaces = problem
            .joint
            .as_ref()
            .map(|j| {
                let rhs = &j.l - &j.lx * x;
                (0..rhs.len()).map(|i| (j.lu.row(i).transpose(), rhs[i])).collect()
            })
            .unwrap_or_default();
        Self { lower: &problem.lower, upper: &problem.upper, halfspaces }
    }

    fn clamp(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(v.len(), v.iter().zip(self.lower).zip(self.upper).map(|((x, l), u)| x.clamp(*l, *u)))
    }

    /// Euclidean projection (Dykstra's alternating projections when rows are present).
    fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if self.halfspaces.is_empty() {
            return Ok(self.clamp(v));
        }
        let sets = self.halfspaces.len() + 1;
        let mut corrections = vec![DVector::zeros(v.len()); sets];
        let mut u = v.clone();
        for _ in 0..20_000 {
            let before = u.clone();
            for (s, corr) in corrections.iter_mut().enumerate() {
                let w = &u + &*corr;
                let p = if s == 0 {
                    self.clamp(&w)
                } else {
                    let (a, b) = &self.halfspaces[s - 1];
                    let excess = a.dot(&w) - b;
                    let nn = a.norm_squared();
                    if excess > 0.0 && nn > 0.0 {
                        &w - a * (excess / nn)
                    } else {
                        w.clone()
                    }
                };
                *corr = &w - &p;
                u = p;
            }
            if (&u - &before).norm() <= 1e-13 * (1.0 + u.norm()) {
                break;
            }
        }
        let worst = self.halfspaces.iter().map(|(a, b)| a.dot(&u) - b).fold(0.0f64, f64::max);
        let box_gap = (&u - self.clamp(&u)).amax();
        if worst > 1e-7 || box_gap > 1e-7 || self.halfspaces.iter().any(|(a, b)| a.norm_squared() == 0.0 && *b < -1e-12) {
            return Err(Error::Infeasible(format!("continuous region is empty (violation {:.3e})", worst.max(box_gap))));
        }
        Ok(u)
    }
}

/// `y = (λ + ϱ(A0x + A1x̄)) / (β + ϱ)`.
pub fn block3_y(problem: &MboProblem, state: &AdmmState, config: &AdmmConfig) -> DVector<f64> {
    let v = &problem.a0 * &state.x + &problem.a1 * &state.x_bar;
    (&state.lambda + config.rho * v) / (config.beta + config.rho)
}

/// `βy − λ − ϱ(A0x + A1x̄ − y)`, zero at the block-3 minimiser.
pub fn block3_gradient(problem: &MboProblem, state: &AdmmState, y: &DVector<f64>, config: &AdmmConfig) -> DVector<f64> {
    let v = &problem.a0 * &state.x + &problem.a1 * &state.x_bar;
    config.beta * y - &state.lambda - config.rho * (v - y)
}

/// `λ + ϱ(A0x + A1x̄ − y)`.
pub fn dual_update(problem: &MboProblem, state: &AdmmState, config: &AdmmConfig) -> DVector<f64> {
    &state.lambda + config.rho * state.residual(problem)
}

/// `q(x) + φ(x̄) + μ·violation`.
pub fn merit(problem: &MboProblem, x: &DVector<f64>, x_bar: &DVector<f64>, mu: f64) -> f64 {
    let bits: Vec<u8> = x.iter().map(|v| u8::from(*v > 0.5)).collect();
    problem.objective.energy(&bits).expect("length matches") + problem.phi.value(x_bar) + mu * problem.violation(x, x_bar)
}

/// One recorded iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmIteration {
    pub k: usize,
    pub x: Vec<u8>,
    pub x_bar: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub residual_norm: f64,
    pub objective: f64,
    pub violation: f64,
    pub merit: f64,
    pub block3_gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmResult {
    /// Index into `iterations` of the merit-best iterate.
    pub best: usize,
    pub converged: bool,
    pub iterations: Vec<AdmmIteration>,
}

impl AdmmResult {
    pub fn best_iteration(&self) -> &AdmmIteration {
        &self.iterations[self.best]
    }
}

fn solve_qubo(qubo: &Qubo, config: &AdmmConfig, k: usize) -> Result<Vec<u8>> {
    let seed = rng::indexed(config.seed, "admm-qubo", k as u64).next_u64();
    let (ansatz, iterations, restarts) = match &config.solver {
        QuboSolver::BruteForce => return Ok(qubo.brute_force()?.0),
        QuboSolver::Vqe { depth, iterations, restarts } => (Ansatz::ry_full(qubo.n(), *depth), *iterations, *restarts),
        QuboSolver::Qaoa { p, iterations, restarts } => (Ansatz::qaoa(qubo.n(), *p, qubo.to_ising()), *iterations, *restarts),
    };
    let opt = OptimizerConfig::spsa(iterations, seed).with_restarts(restarts);
    let r = vqe_minimize(&qubo.to_ising(), &ansatz, &VariationalConfig::new(opt))?;
    Ok(index_bits(r.best_sample().index, qubo.n()))
}

/// Iterate until `‖r‖ < tolerance` or `max_iter`, returning every iterate and the merit-best one.
pub fn run(problem: &MboProblem, config: &AdmmConfig) -> Result<AdmmResult> {
    problem.validate()?;
    config.validate()?;
    let mu = config.mu.unwrap_or_else(|| problem.default_merit_weight());
    let mut state = AdmmState::initial(problem);
    let mut iterations = Vec::new();
    let mut converged = false;
    while state.k < config.max_iter {
        state.k += 1;
        let qubo = block1_qubo(problem, &state, config)?;
        let bits = solve_qubo(&qubo, config, state.k)?;
        state.x = DVector::from_iterator(bits.len(), bits.iter().map(|&b| f64::from(b)));
        state.x_bar = block2_convex(problem, &state, config)?;
        let y = block3_y(problem, &state, config);
        let g3 = block3_gradient(problem, &state, &y, config).norm();
        state.y = y;
        state.lambda = dual_update(problem, &state, config);
        let residual_norm = state.residual(problem).norm();
        let violation = problem.violation(&state.x, &state.x_bar);
        let objective = problem.objective.energy(&bits)? + problem.phi.value(&state.x_bar);
        iterations.push(AdmmIteration {
            k: state.k,
            x: bits,
            x_bar: state.x_bar.iter().copied().collect(),
            y: state.y.iter().copied().collect(),
            lambda: state.lambda.iter().copied().collect(),
            residual_norm,
            objective,
            violation,
            merit: objective + mu * violation,
            block3_gradient_norm: g3,
        });
        if residual_norm < config.tolerance {
            converged = true;
            break;
        }
    }
    let best = iterations
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.merit.total_cmp(&b.merit))
        .map(|(i, _)| i)
        .expect("at least one iteration");
    Ok(AdmmResult { best, converged, iterations })
}

/// A bid: units wanted of each item and the offered price.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub quantities: Vec<f64>,
    pub price: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Auction {
    pub bids: Vec<Bid>,
    pub units: Vec<f64>,
}

impl Auction {
    pub fn new(bids: Vec<Bid>, units: Vec<f64>) -> Result<Self> {
        let a = Self { bids, units };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        let m = self.units.len();
        if self.units.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return invalid("units must be finite and nonnegative");
        }
        for (j, b) in self.bids.iter().enumerate() {
            if b.quantities.len() != m {
                return invalid(format!("bid {j} names {} items, auction has {m}", b.quantities.len()));
            }
            if !(b.price.is_finite() && b.price >= 0.0) || b.quantities.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
                return invalid(format!("bid {j} has a negative or non-finite entry"));
            }
        }
        Ok(())
    }

    /// `λ_i^j` with items as rows.
    pub fn capacity_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.units.len(), self.bids.len(), |i, j| self.bids[j].quantities[i])
    }

    pub fn profit(&self, x: &[u8]) -> f64 {
        self.bids.iter().zip(x).filter(|(_, &b)| b != 0).map(|(bid, _)| bid.price).sum()
    }

    /// `Σ_i max(Σ_j λ_i^j x_j − u_i, 0)`.
    pub fn excess(&self, x: &[u8]) -> f64 {
        let xv = DVector::from_iterator(x.len(), x.iter().map(|&b| f64::from(b)));
        (self.capacity_matrix() * xv)
            .iter()
            .zip(&self.units)
            .map(|(used, u)| (used - u).max(0.0))
            .sum()
    }

    /// Exhaustive optimum; ties go to the lowest basis index.
    pub fn exhaustive_optimum(&self) -> Result<(Vec<u8>, f64)> {
        let n = self.bids.len();
        if n > crate::qubo::MAX_BRUTE_FORCE {
            return Err(Error::Capacity {
                what: "auction enumeration".into(),
                required: n,
                limit: crate::qubo::MAX_BRUTE_FORCE,
            });
        }
        let mut best = (vec![0; n], 0.0);
        for z in 1usize..1 << n {
            let x = index_bits(z, n);
            let p = self.profit(&x);
            if p > best.1 && self.excess(&x) <= 1e-9 {
                best = (x, p);
            }
        }
        Ok(best)
    }

    /// Seeded instance: integer prices in `1..=10`, each bid asks for a nonempty
    /// random subset of items with integer quantities in `1..=max_quantity`.
    pub fn random(n_bids: usize, n_items: usize, units: f64, max_quantity: u32, seed: u64) -> Result<Self> {
        if n_items == 0 || max_quantity == 0 {
            return arg("need at least one item and a positive maximum quantity");
        }
        let mut r = rng::substream(seed, "auction");
        let bids = (0..n_bids)
            .map(|_| {
                let mut quantities = vec![0.0; n_items];
                let forced = r.random_range(0..n_items);
                for (i, q) in quantities.iter_mut().enumerate() {
                    if i == forced || r.random_bool(0.5) {
                        *q = f64::from(r.random_range(1..=max_quantity));
                    }
                }
                Bid { quantities, price: f64::from(r.random_range(1..=10u32)) }
            })
            .collect();
        Auction::new(bids, vec![units; n_items])
    }

    /// Read `price,qty_item_1,…,qty_item_m` rows plus one `units,u_1,…,u_m` row.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let m = rdr.headers()?.len().saturating_sub(1);
        if m == 0 {
            return invalid("auction header needs a price column and at least one item");
        }
        let mut bids = Vec::new();
        let mut units = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Validation(format!("row {}: bad number {s:?}", line + 1)))
            };
            let rest: Vec<f64> = rec.iter().skip(1).map(num).collect::<Result<_>>()?;
            if rest.len() != m {
                return invalid(format!("row {}: expected {m} item columns", line + 1));
            }
            if &rec[0] == "units" {
                if units.replace(rest).is_some() {
                    return invalid("more than one units row");
                }
            } else {
                bids.push(Bid { price: num(&rec[0])?, quantities: rest });
            }
        }
        let units = units.ok_or_else(|| Error::Validation("missing units row".into()))?;
        Auction::new(bids, units)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("price");
        for i in 1..=self.units.len() {
            s += &format!(",qty_item_{i}");
        }
        s.push('\n');
        for b in &self.bids {
            s += &b.price.to_string();
            for q in &b.quantities {
                s += &format!(",{q}");
            }
            s.push('\n');
        }
        s += "units";
        for u in &self.units {
            s += &format!(",{u}");
        }
        s.push('\n');
        s
    }
}

/// Winner determination as an ADMM problem.
///
/// The objective is `−Σ p_j x_j`. The continuous block `x̄ ∈ [0, u]` holds the
/// units consumed per item, tied to the bids by `A0 = λ` and `A1 = −I`, so the
/// consensus `λx − x̄ = 0` can only hold when capacity is respected. `x̄` starts
/// at full capacity.
pub fn build_auction(auction: &Auction) -> Result<MboProblem> {
    auction.validate()?;
    let (n, m) = (auction.bids.len(), auction.units.len());
    let mut objective = Qubo::zeros(n);
    for (j, b) in auction.bids.iter().enumerate() {
        objective.linear[j] = -b.price;
    }
    let cap = auction.capacity_matrix();
    let units = DVector::from_vec(auction.units.clone());
    Ok(MboProblem {
        objective,
        equality: None,
        inequality: Some(LinearRows { a: cap.clone(), b: units.clone() }),
        phi: ConvexQuadratic::zero(m),
        lower: DVector::zeros(m),
        upper: units.clone(),
        joint: None,
        a0: cap,
        a1: -DMatrix::identity(m, m),
        initial_continuous: units,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_qubo_converges_in_one_iteration() {
        let mut q = Qubo::zeros(3);
        q.linear[0] = -1.0;
        q.add_term(1, 2, -2.0);
        q.linear[1] = 0.5;
        let r = run(&MboProblem::from_qubo(q.clone()), &AdmmConfig::default()).unwrap();
        assert_eq!(r.iterations.len(), 1);
        assert!(r.converged);
        assert_eq!(r.best_iteration().x, q.brute_force().unwrap().0);
    }

    #[test]
    fn auction_csv_round_trip() {
        let a = Auction::random(4, 2, 6.0, 6, 1).unwrap();
        let back = Auction::read_csv(a.to_csv().as_bytes()).unwrap();
        assert_eq!(a, back);
        assert!(Auction::read_csv("price,qty_item_1\n3,1\n".as_bytes()).is_err());
        assert!(Auction::read_csv("price,qty_item_1\n3,1,2\nunits,1\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_region_is_reported() {
        let mut p = build_auction(&Auction::new(vec![], vec![1.0]).unwrap()).unwrap();
        p.joint = Some(JointRows { lx: DMatrix::zeros(1, 0), lu: DMatrix::from_element(1, 1, 1.0), l: DVector::from_element(1, -1.0) });
        let err = run(&p, &AdmmConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }
}
