//! Credit-risk analysis under the Gaussian conditional independence model.
//!
//! The operator `A = C·S·U` acts on the register layout
//! `z[0..n_z] | x[0..K] | s[0..n_s] | objective`, where `U` loads the latent
//! factor and the conditional default qubits, `S` writes the total loss into
//! the sum register and `C` flips the objective when the loss is at most `x`.
//! Amplitude estimation of `A` gives `P[L ≤ x]`, and a bisection over `x`
//! locates the value at risk.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::amp_est::{run_ae, true_amplitude, AeResult, EstimationProblem};
use crate::distributions::{discretize_normal, loader_circuit, DiscretizedDistribution};
use crate::error::{arg, invalid, Error};
use crate::sv::{Circuit, GateOp, MAX_QUBITS};
use crate::Result;

/// One obligor: loss given default, base default probability, factor sensitivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub lgd: u64,
    pub p0: f64,
    pub rho: f64,
}

impl Asset {
    pub fn new(lgd: u64, p0: f64, rho: f64) -> Result<Self> {
        let a = Self { lgd, p0, rho };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if self.lgd == 0 {
            return invalid("lgd must be at least 1");
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return invalid(format!("p0 = {} is outside (0, 1)", self.p0));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return invalid(format!("rho = {} is outside [0, 1)", self.rho));
        }
        Ok(())
    }
}

/// Standard normal CDF via `erfc`, accurate to a few ulp in the tails.
fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `p_k(z) = Φ((Φ⁻¹(p0) − √ρ·z) / √(1−ρ))`.
pub fn default_probability(asset: &Asset, z: f64) -> f64 {
    if asset.rho == 0.0 {
        return asset.p0;
    }
    let threshold = Normal::standard().inverse_cdf(asset.p0);
    phi((threshold - asset.rho.sqrt() * z) / (1.0 - asset.rho).sqrt())
}

/// A portfolio together with the latent-factor discretisation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreditPortfolio {
    pub assets: Vec<Asset>,
    pub n_z: usize,
    pub z_low: f64,
    pub z_high: f64,
}

/// Default truncation of the latent factor in standard deviations.
pub const DEFAULT_Z_BOUND: f64 = 3.0;

impl CreditPortfolio {
    pub fn new(assets: Vec<Asset>, n_z: usize, z_low: f64, z_high: f64) -> Result<Self> {
        let p = Self { assets, n_z, z_low, z_high };
        p.validate()?;
        Ok(p)
    }

    /// Latent factor truncated to `±3σ`.
    pub fn with_default_bounds(assets: Vec<Asset>, n_z: usize) -> Result<Self> {
        Self::new(assets, n_z, -DEFAULT_Z_BOUND, DEFAULT_Z_BOUND)
    }

    fn validate(&self) -> Result<()> {
        if self.assets.is_empty() {
            return invalid("portfolio has no assets");
        }
        if self.n_z == 0 {
            return arg("n_z must be at least 1");
        }
        if !(self.z_low < self.z_high) {
            return arg(format!("z bounds [{}, {}] are not an interval", self.z_low, self.z_high));
        }
        for a in &self.assets {
            a.validate()?;
        }
        if self.n_qubits() > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "credit-risk operator".into(),
                required: self.n_qubits(),
                limit: MAX_QUBITS,
            });
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.assets.len()
    }

    pub fn total_lgd(&self) -> u64 {
        self.assets.iter().map(|a| a.lgd).sum()
    }

    /// `n_s = ⌊log₂ Σλ⌋ + 1`.
    pub fn n_s(&self) -> usize {
        (u64::BITS - self.total_lgd().leading_zeros()) as usize
    }

    /// `n_z + K + n_s + 1`.
    pub fn n_qubits(&self) -> usize {
        self.n_z + self.k() + self.n_s() + 1
    }

    pub fn z_register(&self) -> Vec<usize> {
        (0..self.n_z).collect()
    }

    pub fn asset_register(&self) -> Vec<usize> {
        (self.n_z..self.n_z + self.k()).collect()
    }

    pub fn sum_register(&self) -> Vec<usize> {
        let start = self.n_z + self.k();
        (start..start + self.n_s()).collect()
    }

    pub fn objective_qubit(&self) -> usize {
        self.n_qubits() - 1
    }

    pub fn latent_distribution(&self) -> DiscretizedDistribution {
        discretize_normal(0.0, 1.0, self.n_z, self.z_low, self.z_high).expect("bounds validated")
    }

    /// Least-squares `(a_k, b_k)` of `θ(z_i) = 2·arcsin√p_k(z_i)` against `i`, per asset.
    pub fn angle_fits(&self) -> Vec<(f64, f64)> {
        let dist = self.latent_distribution();
        let points = dist.probabilities.len();
        let xs: Vec<f64> = (0..points).map(|i| i as f64).collect();
        let x_mean = xs.iter().sum::<f64>() / points as f64;
        let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
        self.assets
            .iter()
            .map(|asset| {
                let ys: Vec<f64> = (0..points)
                    .map(|i| 2.0 * default_probability(asset, dist.value(i)).sqrt().asin())
                    .collect();
                let y_mean = ys.iter().sum::<f64>() / points as f64;
                let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
                let slope = sxy / sxx;
                (slope, y_mean - slope * x_mean)
            })
            .collect()
    }

    /// Default probability of each asset at every grid index under the linearised angles.
    pub fn linearized_probabilities(&self) -> Vec<Vec<f64>> {
        let points = 1usize << self.n_z;
        self.angle_fits()
            .iter()
            .map(|&(a, b)| (0..points).map(|i| ((a * i as f64 + b) / 2.0).sin().powi(2)).collect())
            .collect()
    }
}

/// Read a `lgd,p0,rho` CSV. Non-integer loss given default is rejected.
pub fn read_assets_csv(reader: impl Read) -> Result<Vec<Asset>> {
    #[derive(Deserialize)]
    struct Row {
        lgd: f64,
        p0: f64,
        rho: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut assets = Vec::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        if row.lgd.fract() != 0.0 || row.lgd < 1.0 || row.lgd > u32::MAX as f64 {
            return invalid(format!("row {}: lgd {} is not a positive integer", line + 1, row.lgd));
        }
        let asset = Asset::new(row.lgd as u64, row.p0, row.rho)
            .map_err(|e| Error::Validation(format!("row {}: {e}", line + 1)))?;
        assets.push(asset);
    }
    if assets.is_empty() {
        return invalid("portfolio file has no rows");
    }
    Ok(assets)
}

/// `U`: latent loader followed by index-linear default rotations.
pub fn uncertainty_operator(portfolio: &CreditPortfolio) -> Result<Circuit> {
    let n = portfolio.n_qubits();
    let mut c = loader_circuit(&portfolio.latent_distribution()).remapped(n, &portfolio.z_register())?;
    for ((a, b), q) in portfolio.angle_fits().into_iter().zip(portfolio.asset_register()) {
        c.push(GateOp::ry(q, b))?;
        if a != 0.0 {
            for j in 0..portfolio.n_z {
                c.push(GateOp::ry(q, a * (1u64 << j) as f64).controlled_by([j]))?;
            }
        }
    }
    Ok(c)
}

/// `S`: `|x⟩|0⟩ ↦ |x⟩|Σλ_k x_k⟩`, one multi-controlled X per set bit of each pattern's sum.
pub fn weighted_sum_operator(portfolio: &CreditPortfolio) -> Result<Circuit> {
    let mut c = Circuit::new(portfolio.n_qubits());
    let assets = portfolio.asset_register();
    let sum = portfolio.sum_register();
    for pattern in 1usize..1 << portfolio.k() {
        let total: u64 = portfolio
            .assets
            .iter()
            .enumerate()
            .filter(|(k, _)| (pattern >> k) & 1 == 1)
            .map(|(_, a)| a.lgd)
            .sum();
        for (bit, &q) in sum.iter().enumerate() {
            if (total >> bit) & 1 == 1 {
                c.push_on_value(GateOp::x(q), &assets, pattern)?;
            }
        }
    }
    Ok(c)
}

/// `C`: flip `objective` for every sum-register value `i ≤ x` on a circuit of `n_qubits`.
pub fn comparator_operator(x: i64, sum_register: &[usize], objective: usize, n_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    let values = 1i64 << sum_register.len();
    if x >= values - 1 {
        c.push(GateOp::x(objective))?;
        return Ok(c);
    }
    for i in 0..=x {
        c.push_on_value(GateOp::x(objective), sum_register, i as usize)?;
    }
    Ok(c)
}

/// The composed `A = C·S·U` with objective `P[L ≤ x]`.
pub fn cdf_problem(portfolio: &CreditPortfolio, x: i64) -> Result<EstimationProblem> {
    let mut a = uncertainty_operator(portfolio)?;
    a.extend(&weighted_sum_operator(portfolio)?)?;
    a.extend(&comparator_operator(
        x,
        &portfolio.sum_register(),
        portfolio.objective_qubit(),
        portfolio.n_qubits(),
    )?)?;
    EstimationProblem::new(a, portfolio.objective_qubit())
}

/// AE estimate of `P[L ≤ x]` with `m` evaluation qubits.
pub fn cdf_estimate(portfolio: &CreditPortfolio, x: i64, m: usize) -> Result<AeResult> {
    run_ae(&cdf_problem(portfolio, x)?, m)
}

/// One bisection probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub low: i64,
    pub mid: i64,
    pub high: i64,
    /// AE estimate of `P[L ≤ mid]`.
    pub cdf: f64,
    /// Exact `P[L ≤ mid]` of the composed operator.
    pub true_cdf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarResult {
    pub var: i64,
    pub trace: Vec<BisectionStep>,
}

/// Smallest integer loss whose estimated CDF reaches `alpha`, searched over `[−1, Σλ + 1]`.
pub fn var_bisection(portfolio: &CreditPortfolio, alpha: f64, m: usize) -> Result<VarResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return arg(format!("alpha = {alpha} is outside [0, 1]"));
    }
    let mut low = -1i64;
    let mut high = portfolio.total_lgd() as i64 + 1;
    let mut trace = Vec::new();
    while high - low > 1 {
        let mid = (low + high).div_euclid(2);
        let problem = cdf_problem(portfolio, mid)?;
        let est = run_ae(&problem, m)?.a_estimate;
        trace.push(BisectionStep { low, mid, high, cdf: est, true_cdf: true_amplitude(&problem)? });
        if est >= alpha {
            high = mid;
        } else {
            low = mid;
        }
    }
    Ok(VarResult { var: high, trace })
}

/// Probability mass function of the total loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    pub pmf: BTreeMap<u64, f64>,
}

impl LossDistribution {
    pub fn cdf(&self, x: i64) -> f64 {
        if x < 0 {
            return 0.0;
        }
        self.pmf.range(..=x as u64).map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().map(|(l, p)| *l as f64 * p).sum()
    }

    /// Smallest loss with `P[L ≤ x] ≥ alpha`.
    pub fn var(&self, alpha: f64) -> u64 {
        let mut acc = 0.0;
        for (&l, &p) in &self.pmf {
            acc += p;
            if acc >= alpha - 1e-12 {
                return l;
            }
        }
        *self.pmf.keys().next_back().unwrap_or(&0)
    }
}

/// Exact loss distribution under the same linearised probabilities the circuit uses.
pub fn exact_loss_distribution(portfolio: &CreditPortfolio) -> Result<LossDistribution> {
    if portfolio.k() > 20 {
        return Err(Error::Capacity { what: "loss enumeration".into(), required: portfolio.k(), limit: 20 });
    }
    let latent = portfolio.latent_distribution();
    let probs = portfolio.linearized_probabilities();
    let total = portfolio.total_lgd() as usize;
    let mut pmf = vec![0.0; total + 1];
    for (i, pz) in latent.probabilities.iter().enumerate() {
        // Conditional on z_i the defaults are independent: convolve one asset at a time.
        let mut cond = vec![0.0; total + 1];
        cond[0] = 1.0;
        for (asset, p) in portfolio.assets.iter().zip(&probs) {
            let lgd = asset.lgd as usize;
            for l in (0..=total).rev() {
                let keep = cond[l] * (1.0 - p[i]);
                let from = if l >= lgd { cond[l - lgd] * p[i] } else { 0.0 };
                cond[l] = keep + from;
            }
        }
        for (l, c) in cond.iter().enumerate() {
            pmf[l] += pz * c;
        }
    }
    Ok(LossDistribution { pmf: pmf.into_iter().enumerate().map(|(l, p)| (l as u64, p)).collect() })
}

pub fn expected_loss(portfolio: &CreditPortfolio) -> Result<f64> {
    Ok(exact_loss_distribution(portfolio)?.mean())
}

/// Economic capital requirement: AE value at risk less the expected loss.
pub fn ecr(portfolio: &CreditPortfolio, alpha: f64, m: usize) -> Result<f64> {
    let var = var_bisection(portfolio, alpha, m)?.var;
    Ok(var as f64 - expected_loss(portfolio)?)
}

/// `E[L | L ≥ VaR_α]` on the classical distribution; `VaR_α` when the tail carries no mass.
pub fn cvar(dist: &LossDistribution, alpha: f64) -> f64 {
    let var = dist.var(alpha);
    let (mass, excess) = dist
        .pmf
        .range(var..)
        .fold((0.0, 0.0), |(m, w), (l, p)| (m + p, w + (l - var) as f64 * p));
    if mass <= 0.0 {
        var as f64
    } else {
        var as f64 + excess / mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> CreditPortfolio {
        CreditPortfolio::with_default_bounds(
            vec![Asset::new(1, 0.15, 0.1).unwrap(), Asset::new(2, 0.25, 0.05).unwrap()],
            2,
        )
        .unwrap()
    }

    #[test]
    fn sum_register_width() {
        let p = demo();
        assert_eq!(p.n_s(), 2);
        assert_eq!(p.n_qubits(), 7);
        let one = CreditPortfolio::with_default_bounds(vec![Asset::new(4, 0.1, 0.0).unwrap()], 1).unwrap();
        assert_eq!(one.n_s(), 3);
    }

    #[test]
    fn zero_sensitivity_is_z_independent() {
        let a = Asset::new(1, 0.3, 0.0).unwrap();
        assert_eq!(default_probability(&a, 2.5), 0.3);
        let p = CreditPortfolio::with_default_bounds(vec![a], 2).unwrap();
        let u = uncertainty_operator(&p).unwrap();
        let rotations: Vec<_> = u.ops().iter().filter(|op| op.targets == vec![2]).collect();
        assert_eq!(rotations.len(), 1);
        assert!(rotations[0].controls.is_empty());
        let prob = u.run().unwrap().probability_one(2).unwrap();
        assert!((prob - 0.3).abs() < 1e-9);
    }

    #[test]
    fn comparator_edge_thresholds() {
        let reg = [0, 1];
        for (x, want) in [(3i64, vec![1, 1, 1, 1]), (0, vec![1, 0, 0, 0]), (-1, vec![0, 0, 0, 0])] {
            let c = comparator_operator(x, &reg, 2, 3).unwrap();
            for (i, w) in want.iter().enumerate() {
                let mut s = crate::sv::Statevector::basis(3, i).unwrap();
                s.apply_circuit(&c).unwrap();
                assert!((s.probability_one(2).unwrap() - *w as f64).abs() < 1e-12, "x={x} i={i}");
            }
        }
    }

    #[test]
    fn out_of_range_inputs_are_rejected() {
        assert!(Asset::new(0, 0.1, 0.1).is_err());
        assert!(Asset::new(1, 1.0, 0.1).is_err());
        assert!(Asset::new(1, 0.1, 1.0).is_err());
        assert!(read_assets_csv("lgd,p0,rho\n1.5,0.1,0.1\n".as_bytes()).is_err());
        let ok = read_assets_csv("lgd,p0,rho\n1,0.15,0.1\n2,0.25,0.05\n".as_bytes()).unwrap();
        assert_eq!(ok[1], Asset { lgd: 2, p0: 0.25, rho: 0.05 });
        let big = vec![Asset::new(1, 0.1, 0.1).unwrap(); 20];
        assert!(matches!(CreditPortfolio::with_default_bounds(big, 2), Err(Error::Capacity { .. })));
    }

    #[test]
    fn cvar_of_a_deterministic_loss() {
        let d = LossDistribution { pmf: [(4, 1.0)].into_iter().collect() };
        assert_eq!(cvar(&d, 0.95), 4.0);
        assert_eq!(d.var(0.95), 4);
    }
}
