//! Classical linear baselines and stratified cross-validation.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{accuracy, train, LabeledDataset, ModelConfig, Record, VqcModel};
use crate::error::{arg, invalid};
use crate::optim::OptimizerConfig;
use crate::rng;
use crate::Result;

/// `sign(wᵀz + b)` on standardised features `z` (continuous columns, then one-hot codes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl LinearModel {
    pub fn decision(&self, r: &Record, data: &LabeledDataset) -> f64 {
        let z = raw_features(r, data);
        self.weights
            .iter()
            .zip(&z)
            .zip(self.mean.iter().zip(&self.scale))
            .map(|((w, v), (m, s))| w * (v - m) / s)
            .sum::<f64>()
            + self.bias
    }
}

fn raw_features(r: &Record, data: &LabeledDataset) -> Vec<f64> {
    let mut v = r.continuous.clone();
    for (code, c) in r.categorical.iter().zip(&data.schema.categorical) {
        v.extend((0..c.cardinality).map(|k| f64::from(u8::from(k == *code))));
    }
    v
}

fn standardized(data: &LabeledDataset) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = data.records.iter().map(|r| raw_features(r, data)).collect();
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..d)
        .map(|k| {
            let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
            if var > 0.0 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let z = rows
        .iter()
        .map(|r| (0..d).map(|k| (r[k] - mean[k]) / scale[k]).collect())
        .collect();
    (z, mean, scale)
}

const L2: f64 = 1e-3;
const EPOCHS: usize = 2000;

/// Full-batch gradient descent on the L2-regularised logistic loss.
pub fn fit_logistic(data: &LabeledDataset) -> Result<LinearModel> {
    fit_linear(data, |m| -1.0 / (1.0 + m.exp()), 0.5)
}

/// Full-batch subgradient descent on the L2-regularised hinge loss.
pub fn fit_hinge(data: &LabeledDataset) -> Result<LinearModel> {
    fit_linear(data, |m| if m < 1.0 { -1.0 } else { 0.0 }, 0.1)
}

/// `dloss(margin)` is the derivative of the per-record loss in the margin `y(wᵀz + b)`.
fn fit_linear(data: &LabeledDataset, dloss: impl Fn(f64) -> f64, step: f64) -> Result<LinearModel> {
    if data.is_empty() {
        return invalid("cannot fit on an empty dataset");
    }
    let (z, mean, scale) = standardized(data);
    let y: Vec<f64> = data.records.iter().map(|r| f64::from(r.label)).collect();
    let (n, d) = (z.len() as f64, mean.len());
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for t in 0..EPOCHS {
        let mut gw: Vec<f64> = w.iter().map(|wk| L2 * wk).collect();
        let mut gb = 0.0;
        for (zi, yi) in z.iter().zip(&y) {
            let margin = yi * (zi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b);
            let g = dloss(margin) * yi / n;
            for k in 0..d {
                gw[k] += g * zi[k];
            }
            gb += g;
        }
        let eta = step / ((t + 1) as f64).sqrt();
        for k in 0..d {
            w[k] -= eta * gw[k];
        }
        b -= eta * gb;
    }
    Ok(LinearModel { weights: w, bias: b, mean, scale })
}

/// A training recipe evaluated by [`cross_validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classifier {
    Vqc { config: ModelConfig, optimizer: OptimizerConfig },
    Logistic,
    Hinge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrainedClassifier {
    Vqc(VqcModel),
    Linear(LinearModel),
}

impl Classifier {
    pub fn fit(&self, data: &LabeledDataset) -> Result<TrainedClassifier> {
        Ok(match self {
            Classifier::Vqc { config, optimizer } => TrainedClassifier::Vqc(train(data, config, optimizer)?.0),
            Classifier::Logistic => TrainedClassifier::Linear(fit_logistic(data)?),
            Classifier::Hinge => TrainedClassifier::Linear(fit_hinge(data)?),
        })
    }
}

impl TrainedClassifier {
    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        match self {
            TrainedClassifier::Vqc(m) => m.accuracy(data),
            TrainedClassifier::Linear(m) => {
                let f: Vec<f64> = data.records.iter().map(|r| m.decision(r, data)).collect();
                Ok(accuracy(&f, &data.labels()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation over folds.
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

/// Train/test accuracy per method over `k` stratified folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub methods: Vec<String>,
    pub train: Vec<MeanStd>,
    pub test: Vec<MeanStd>,
    /// `[method][fold]`.
    pub train_folds: Vec<Vec<f64>>,
    pub test_folds: Vec<Vec<f64>>,
}

impl fmt::Display for CvReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.methods.iter().map(String::len).max().unwrap_or(0).max(13);
        write!(f, "{:<6}", "")?;
        for m in &self.methods {
            write!(f, "  {m:>width$}")?;
        }
        writeln!(f)?;
        for (name, row) in [("train", &self.train), ("test", &self.test)] {
            write!(f, "{name:<6}")?;
            for ms in row {
                let cell = format!("{:.2} ± {:.2}", ms.mean, ms.std);
                write!(f, "  {cell:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Seeded stratified assignment of records to `k` folds.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return arg(format!("need at least 2 folds, got {k}"));
    }
    let mut folds = vec![Vec::new(); k];
    let mut r = rng::substream(seed, "cv-folds");
    for class in [1i8, -1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return invalid(format!("class {class:+} has {} records, fewer than {k} folds", members.len()));
        }
        members.shuffle(&mut r);
        for (j, i) in members.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn cross_validate(methods: &[(String, Classifier)], data: &LabeledDataset, k: usize, seed: u64) -> Result<CvReport> {
    let folds = stratified_folds(&data.labels(), k, seed)?;
    let mut train_folds = vec![Vec::with_capacity(k); methods.len()];
    let mut test_folds = vec![Vec::with_capacity(k); methods.len()];
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.clone()).collect();
        let (train_set, test_set) = (data.subset(&train_idx), data.subset(test_idx));
        for (m, (_, method)) in methods.iter().enumerate() {
            let fitted = method.fit(&train_set)?;
            train_folds[m].push(fitted.accuracy(&train_set)?);
            test_folds[m].push(fitted.accuracy(&test_set)?);
        }
    }
    Ok(CvReport {
        folds: k,
        methods: methods.iter().map(|(n, _)| n.clone()).collect(),
        train: train_folds.iter().map(|v| MeanStd::of(v)).collect(),
        test: test_folds.iter().map(|v| MeanStd::of(v)).collect(),
        train_folds,
        test_folds,
    })
}
