//! Variational quantum classifier.
//!
//! A record is embedded as `|Φ(x)⟩ = (U_Φ(x) H^⊗n)^reps |0⟩` on the feature
//! qubits, with `U_Φ(x) = exp(i Σ_S φ_S(x) Π_{k∈S} Z_k)` for `φ_i = x_i` and
//! `φ_ij = (π − x_i)(π − x_j)`. Discrete features may instead be packed three
//! bits per qubit by a QRAC. An RX·RY separator `W(θ)` follows, and the
//! decision is `f(x) = ⟨Φ(x)| W† g W |Φ(x)⟩ + b` for a ±1 readout `g`.

mod baselines;
mod data;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use baselines::{
    cross_validate, fit_hinge, fit_logistic, stratified_folds, Classifier, CvReport, LinearModel, MeanStd,
    TrainedClassifier,
};
pub use data::{synthesize_transactions, Categorical, DatasetSchema, LabeledDataset, Record};

use crate::error::{arg, invalid};
use crate::optim::{minimize_with_restarts, OptimizerConfig};
use crate::sv::{Circuit, GateOp, Statevector, MAX_QUBITS};
use crate::variational::Ansatz;
use crate::{Error, Result};

/// Which qubit pairs receive a `φ_ij Z_i Z_j` term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairTerms {
    None,
    /// Neighbours `(i, i+1)`.
    Linear,
    /// Every `i < j`.
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub n_qubits: usize,
    pub reps: usize,
    pub pairs: PairTerms,
}

impl FeatureMap {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, reps: 2, pairs: PairTerms::Full }
    }

    fn pair_list(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        match self.pairs {
            PairTerms::None => vec![],
            PairTerms::Linear => (1..n).map(|j| (j - 1, j)).collect(),
            PairTerms::Full => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        }
    }

    /// Phases of `U_Φ(x)` on every basis state of the feature register.
    pub fn phases(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_qubits {
            return arg(format!("feature map takes {} features, got {}", self.n_qubits, x.len()));
        }
        let pairs: Vec<(usize, usize, f64)> =
            self.pair_list().into_iter().map(|(i, j)| (i, j, (PI - x[i]) * (PI - x[j]))).collect();
        let z = |v: usize, k: usize| if (v >> k) & 1 == 0 { 1.0 } else { -1.0 };
        Ok((0..1usize << self.n_qubits)
            .map(|v| {
                let single: f64 = x.iter().enumerate().map(|(k, xk)| xk * z(v, k)).sum();
                single + pairs.iter().map(|&(i, j, c)| c * z(v, i) * z(v, j)).sum::<f64>()
            })
            .collect())
    }

    /// Append the map to `c` on its qubits `0..n_qubits`.
    pub fn append(&self, c: &mut Circuit, x: &[f64]) -> Result<()> {
        let phases = self.phases(x)?;
        let targets: Vec<usize> = (0..self.n_qubits).collect();
        for _ in 0..self.reps {
            for q in 0..self.n_qubits {
                c.push(GateOp::h(q))?;
            }
            c.push(GateOp::diagonal(targets.clone(), phases.clone()))?;
        }
        Ok(())
    }
}

pub fn feature_state(map: &FeatureMap, x: &[f64]) -> Result<Statevector> {
    let mut c = Circuit::new(map.n_qubits);
    map.append(&mut c, x)?;
    c.run()
}

/// `(θ, φ)` of the Bloch vector `((−1)^{b₀}, (−1)^{b₁}, (−1)^{b₂})/√3`.
pub fn qrac_angles(bits: [u8; 3]) -> (f64, f64) {
    let s = bits.map(|b| if b == 0 { 1.0 } else { -1.0 });
    ((s[2] / 3f64.sqrt()).acos(), s[1].atan2(s[0]))
}

/// `RY(θ)` then `RZ(φ)` on `qubit`, preparing the (3,1)-QRAC state of `bits`.
pub fn qrac_encode_block(c: &mut Circuit, qubit: usize, bits: [u8; 3]) -> Result<()> {
    let (theta, phi) = qrac_angles(bits);
    c.push(GateOp::ry(qubit, theta))?;
    c.push(GateOp::rz(qubit, phi))?;
    Ok(())
}

/// Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of a one-qubit state.
pub fn bloch_vector(state: &Statevector) -> Result<[f64; 3]> {
    if state.n_qubits() != 1 {
        return arg("bloch vector needs a one-qubit state");
    }
    let a = state.amplitudes();
    let cross = a[0].conj() * a[1];
    Ok([2.0 * cross.re, 2.0 * cross.im, a[0].norm_sqr() - a[1].norm_sqr()])
}

/// `±1` observable read from measured bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "qubits", rename_all = "kebab-case")]
pub enum Readout {
    /// Parity of every qubit.
    Parity,
    /// Parity of the listed qubits.
    ParityOf(Vec<usize>),
}

impl Readout {
    fn diagonal(&self, n_qubits: usize) -> Vec<f64> {
        let mask = match self {
            Readout::Parity => (1usize << n_qubits) - 1,
            Readout::ParityOf(qs) => qs.iter().fold(0, |m, q| m | (1 << q)),
        };
        (0..1usize << n_qubits).map(|z| if (z & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Risk {
    /// `(1/|S|) Σ |f(x_i) − y_i|`.
    Absolute,
    /// Mean `−log` likelihood of `p = σ(f)`.
    CrossEntropy,
}

/// How map inputs are brought into the angle range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Min–max to `[0, 2π]` fitted on the training set.
    MinMax,
    /// Features are used as given.
    Identity,
}

/// Affine per-feature map `v ↦ 2π(v − min)/(max − min)`; constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>], scaling: Scaling) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        match scaling {
            Scaling::Identity => Self { min: vec![0.0; d], max: vec![TAU; d] },
            Scaling::MinMax => {
                let mut min = vec![f64::INFINITY; d];
                let mut max = vec![f64::NEG_INFINITY; d];
                for r in rows {
                    for k in 0..d {
                        min[k] = min[k].min(r[k]);
                        max[k] = max[k].max(r[k]);
                    }
                }
                Self { min, max }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| if hi > lo { TAU * (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

/// Architecture and training settings of a classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub schema: DatasetSchema,
    /// Categorical columns (indices into `schema.categorical`) one-hot encoded onto QRAC qubits.
    /// The remaining categorical codes enter the feature map as numbers.
    pub qrac_features: Vec<usize>,
    pub latent_qubits: usize,
    pub reps: usize,
    pub pairs: PairTerms,
    /// Entangling rounds of the RX·RY separator.
    pub layers: usize,
    pub readout: Readout,
    pub risk: Risk,
    pub scaling: Scaling,
}

impl ModelConfig {
    /// Every column through the feature map.
    pub fn vqc(schema: DatasetSchema) -> Result<Self> {
        build_vqc_with_qrac(schema, &[], 0)
    }

    pub fn map_qubits(&self) -> usize {
        self.schema.continuous.len() + self.schema.categorical.len() - self.qrac_features.len()
    }

    pub fn qrac_bits(&self) -> usize {
        self.qrac_features.iter().map(|&i| self.schema.categorical[i].cardinality as usize).sum()
    }

    pub fn qrac_qubits(&self) -> usize {
        self.qrac_bits().div_ceil(3)
    }

    pub fn n_qubits(&self) -> usize {
        self.map_qubits() + self.qrac_qubits() + self.latent_qubits
    }

    pub fn parameter_count(&self) -> usize {
        self.separator().parameter_count()
    }

    fn separator(&self) -> Ansatz {
        Ansatz::rxry_full(self.n_qubits(), self.layers)
    }

    fn feature_map(&self) -> FeatureMap {
        FeatureMap { n_qubits: self.map_qubits(), reps: self.reps, pairs: self.pairs }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema.is_empty() {
            return invalid("schema has no features");
        }
        let mut seen = vec![false; self.schema.categorical.len()];
        for &i in &self.qrac_features {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return arg(format!("QRAC feature index {i} is out of range or repeated"));
            }
        }
        let n = self.n_qubits();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Capacity { what: "classifier".into(), required: n, limit: MAX_QUBITS });
        }
        if let Readout::ParityOf(qs) = &self.readout {
            if qs.iter().any(|&q| q >= n) {
                return arg("readout names a qubit outside the register");
            }
        }
        Ok(())
    }

    /// Raw feature-map inputs of a record: continuous values, then non-QRAC codes.
    fn map_inputs(&self, r: &Record) -> Vec<f64> {
        let mut v = r.continuous.clone();
        v.extend(
            r.categorical
                .iter()
                .enumerate()
                .filter(|(i, _)| !self.qrac_features.contains(i))
                .map(|(_, &c)| f64::from(c)),
        );
        v
    }

    /// One-hot bits of the QRAC columns, padded with zeros to a multiple of three.
    fn qrac_bit_string(&self, r: &Record) -> Vec<u8> {
        let mut bits = Vec::with_capacity(self.qrac_qubits() * 3);
        for &i in &self.qrac_features {
            let card = self.schema.categorical[i].cardinality;
            bits.extend((0..card).map(|c| u8::from(c == r.categorical[i])));
        }
        bits.resize(self.qrac_qubits() * 3, 0);
        bits
    }
}

/// Route the named categorical columns through QRAC (one-hot, three bits per qubit)
/// and append `latent` qubits that start in `|0⟩`.
pub fn build_vqc_with_qrac(schema: DatasetSchema, qrac: &[&str], latent: usize) -> Result<ModelConfig> {
    if schema.is_empty() {
        return invalid("schema has no features");
    }
    let qrac_features = qrac
        .iter()
        .map(|name| schema.categorical_index(name).ok_or_else(|| Error::Argument(format!("no categorical column {name:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let cfg = ModelConfig {
        schema,
        qrac_features,
        latent_qubits: latent,
        reps: 2,
        pairs: PairTerms::Full,
        layers: 1,
        readout: Readout::Parity,
        risk: Risk::CrossEntropy,
        scaling: Scaling::MinMax,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// A trained (or initialised) classifier with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqcModel {
    pub config: ModelConfig,
    pub scaler: Scaler,
    pub theta: Vec<f64>,
    pub bias: f64,
    /// Optimiser seed used in training, kept for provenance.
    pub seed: u64,
}

impl VqcModel {
    pub fn new(config: ModelConfig, scaler: Scaler, theta: Vec<f64>, bias: f64) -> Result<Self> {
        config.validate()?;
        if theta.len() != config.parameter_count() {
            return arg(format!("model takes {} parameters, got {}", config.parameter_count(), theta.len()));
        }
        if scaler.min.len() != config.map_qubits() || scaler.max.len() != config.map_qubits() {
            return arg("scaler width does not match the feature map");
        }
        Ok(Self { config, scaler, theta, bias, seed: 0 })
    }

    /// State before the separator.
    pub fn embed(&self, r: &Record) -> Result<Statevector> {
        embed(&self.config, &self.scaler, r)
    }

    pub fn decision(&self, r: &Record) -> Result<f64> {
        let readout = self.config.readout.diagonal(self.config.n_qubits());
        let w = self.config.separator().circuit(&self.theta)?;
        let mut s = self.embed(r)?;
        s.apply_circuit(&w)?;
        Ok(s.expectation_diagonal(&readout)? + self.bias)
    }

    /// `sign(f)`, with `sign(0) = +1`.
    pub fn predict(&self, r: &Record) -> Result<i8> {
        Ok(if self.decision(r)? >= 0.0 { 1 } else { -1 })
    }

    pub fn decisions(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        self.check_schema(data)?;
        data.records.iter().map(|r| self.decision(r)).collect()
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let f = self.decisions(data)?;
        Ok(accuracy(&f, &data.labels()))
    }

    pub fn empirical_risk(&self, data: &LabeledDataset, risk: Risk) -> Result<f64> {
        if data.is_empty() {
            return invalid("empirical risk of an empty dataset");
        }
        Ok(risk_value(&self.decisions(data)?, &data.labels(), risk))
    }

    pub fn check_schema(&self, data: &LabeledDataset) -> Result<()> {
        if data.schema != self.config.schema {
            return invalid("dataset schema does not match the model schema");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: VqcModel = serde_json::from_str(s)?;
        let seed = m.seed;
        let mut checked = VqcModel::new(m.config, m.scaler, m.theta, m.bias)?;
        checked.seed = seed;
        Ok(checked)
    }
}

fn embed(config: &ModelConfig, scaler: &Scaler, r: &Record) -> Result<Statevector> {
    let mut c = Circuit::new(config.n_qubits());
    let x = scaler.apply(&config.map_inputs(r));
    let map = config.feature_map();
    if map.n_qubits > 0 {
        map.append(&mut c, &x)?;
    }
    let bits = config.qrac_bit_string(r);
    for (k, block) in bits.chunks(3).enumerate() {
        qrac_encode_block(&mut c, map.n_qubits + k, [block[0], block[1], block[2]])?;
    }
    c.run()
}

pub fn accuracy(decisions: &[f64], labels: &[i8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = decisions.iter().zip(labels).filter(|(f, &y)| (if **f >= 0.0 { 1 } else { -1 }) == y).count();
    hits as f64 / labels.len() as f64
}

/// Risk of decisions `f` against labels `y`. Cross-entropy uses `p = σ(f)`,
/// so each record contributes `ln(1 + e^{−y f})`.
pub fn risk_value(f: &[f64], y: &[i8], risk: Risk) -> f64 {
    let n = f.len() as f64;
    match risk {
        Risk::Absolute => f.iter().zip(y).map(|(f, &y)| (f - f64::from(y)).abs()).sum::<f64>() / n,
        Risk::CrossEntropy => f.iter().zip(y).map(|(f, &y)| softplus(-f64::from(y) * f)).sum::<f64>() / n,
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Best risk so far per optimiser iteration, from the winning restart.
    pub loss_trace: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub restart_losses: Vec<f64>,
}

/// Fit `θ` and `b` by minimising the configured risk.
///
/// The bias is optimised as `b = p/π` for an extra parameter `p`, so random
/// starts in `[−π, π]` begin with `|b| ≤ 1`.
pub fn train(data: &LabeledDataset, config: &ModelConfig, optimizer: &OptimizerConfig) -> Result<(VqcModel, TrainReport)> {
    config.validate()?;
    if data.is_empty() {
        return invalid("cannot train on an empty dataset");
    }
    if data.schema != config.schema {
        return invalid("dataset schema does not match the model schema");
    }
    let rows: Vec<Vec<f64>> = data.records.iter().map(|r| config.map_inputs(r)).collect();
    let scaler = Scaler::fit(&rows, config.scaling);
    let embedded: Arc<Vec<Statevector>> =
        Arc::new(data.records.iter().map(|r| embed(config, &scaler, r)).collect::<Result<_>>()?);
    let labels: Arc<Vec<i8>> = Arc::new(data.labels());
    let readout = Arc::new(config.readout.diagonal(config.n_qubits()));
    let separator = config.separator();
    let dim = separator.parameter_count() + 1;
    let risk = config.risk;

    let objective = {
        let (embedded, labels, readout, separator) = (embedded.clone(), labels.clone(), readout.clone(), separator.clone());
        move |params: &[f64]| -> f64 {
            let (theta, b) = params.split_at(params.len() - 1);
            let w = separator.circuit(theta).expect("parameter count fixed");
            let f: Vec<f64> = embedded
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.apply_circuit(&w).expect("widths match");
                    s.expectation_diagonal(&readout).expect("widths match") + b[0] / PI
                })
                .collect();
            risk_value(&f, &labels, risk)
        }
    };
    let make = |_| Box::new(objective.clone()) as Box<dyn FnMut(&[f64]) -> f64 + Send>;
    let runs = minimize_with_restarts(make, dim, optimizer)?;
    let best = runs
        .iter()
        .min_by(|a, b| a.best_value.total_cmp(&b.best_value))
        .expect("at least one restart");
    let (theta, b) = best.best_x.split_at(dim - 1);
    let mut model = VqcModel::new(config.clone(), scaler, theta.to_vec(), b[0] / PI)?;
    model.seed = optimizer.seed;
    let initial_loss = best.trace.first().copied().unwrap_or(best.best_value);
    let report = TrainReport {
        loss_trace: best.trace.clone(),
        initial_loss,
        final_loss: best.best_value,
        restart_losses: runs.iter().map(|r| r.best_value).collect(),
    };
    Ok((model, report))
}

/// Points labelled by the sign of a random untrained classifier (identity scaling,
/// zero bias), kept only where `|f| ≥ margin`. Returns the dataset and the labelling model.
pub fn self_labeled_dataset(n_points: usize, n_features: usize, margin: f64, seed: u64) -> Result<(LabeledDataset, VqcModel)> {
    if n_points == 0 || n_features == 0 {
        return arg("need at least one point and one feature");
    }
    if !(0.0..1.0).contains(&margin) {
        return arg(format!("margin must lie in [0, 1), got {margin}"));
    }
    let schema = DatasetSchema { continuous: (1..=n_features).map(|i| format!("x{i}")).collect(), categorical: vec![] };
    let mut config = ModelConfig::vqc(schema)?;
    config.scaling = Scaling::Identity;
    let mut r = crate::rng::substream(seed, "self-labeled");
    let theta = (0..config.parameter_count()).map(|_| r.random_range(-PI..PI)).collect();
    let scaler = Scaler::fit(&[vec![0.0; n_features]], Scaling::Identity);
    let truth = VqcModel::new(config, scaler, theta, 0.0)?;
    let mut records = Vec::with_capacity(n_points);
    for _ in 0..1_000_000 {
        if records.len() == n_points {
            break;
        }
        let continuous: Vec<f64> = (0..n_features).map(|_| r.random_range(0.0..TAU)).collect();
        let mut rec = Record { continuous, categorical: vec![], label: 1 };
        let f = truth.decision(&rec)?;
        if f.abs() >= margin {
            rec.label = if f > 0.0 { 1 } else { -1 };
            records.push(rec);
        }
    }
    if records.len() < n_points {
        return invalid(format!("margin {margin} too large for the sampled classifier"));
    }
    Ok((LabeledDataset::new(truth.config.schema.clone(), records)?, truth))
}
