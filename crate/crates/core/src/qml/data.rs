//! Labelled datasets, the transaction schema and its synthetic generator.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{arg, invalid};
use crate::rng;
use crate::{Error, Result};

/// A categorical column and the number of distinct codes it takes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Categorical {
    pub name: String,
    pub cardinality: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub continuous: Vec<String>,
    pub categorical: Vec<Categorical>,
}

impl DatasetSchema {
    /// `time, amount` continuous; `method` (3), `zip` (10), `mcc` (10) categorical.
    pub fn transactions() -> Self {
        let cat = |name: &str, cardinality| Categorical { name: name.into(), cardinality };
        Self {
            continuous: vec!["time".into(), "amount".into()],
            categorical: vec![cat("method", 3), cat("zip", 10), cat("mcc", 10)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.continuous.is_empty() && self.categorical.is_empty()
    }

    pub fn categorical_index(&self, name: &str) -> Option<usize> {
        self.categorical.iter().position(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub continuous: Vec<f64>,
    pub categorical: Vec<u32>,
    /// `+1` or `−1`.
    pub label: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub schema: DatasetSchema,
    pub records: Vec<Record>,
}

impl LabeledDataset {
    pub fn new(schema: DatasetSchema, records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.continuous.len() != schema.continuous.len() || r.categorical.len() != schema.categorical.len() {
                return invalid(format!("record {i} does not match the schema"));
            }
            if r.label != 1 && r.label != -1 {
                return invalid(format!("record {i} has label {}, expected ±1", r.label));
            }
            if r.continuous.iter().any(|v| !v.is_finite()) {
                return invalid(format!("record {i} has a non-finite feature"));
            }
            for (code, c) in r.categorical.iter().zip(&schema.categorical) {
                if *code >= c.cardinality {
                    return invalid(format!("record {i}: {} code {code} outside 0..{}", c.name, c.cardinality));
                }
            }
        }
        Ok(Self { schema, records })
    }

    /// Continuous-only dataset with columns `x1, x2, …`.
    pub fn from_features(features: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        if features.len() != labels.len() {
            return arg(format!("{} feature rows but {} labels", features.len(), labels.len()));
        }
        let d = features.first().map_or(0, Vec::len);
        let schema = DatasetSchema { continuous: (1..=d).map(|i| format!("x{i}")).collect(), categorical: vec![] };
        let records = features
            .into_iter()
            .zip(labels)
            .map(|(continuous, label)| Record { continuous, categorical: vec![], label })
            .collect();
        Self::new(schema, records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<i8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { schema: self.schema.clone(), records: indices.iter().map(|&i| self.records[i].clone()).collect() }
    }

    /// Transaction layout when the schema matches, otherwise one column per
    /// continuous feature followed by `label`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        if self.schema == DatasetSchema::transactions() {
            return self.write_transactions_csv(out);
        }
        if !self.schema.categorical.is_empty() {
            return invalid("only continuous-feature datasets have a generic CSV layout");
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.schema.continuous.clone();
        header.push("label".into());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.continuous.iter().map(f64::to_string).collect();
            row.push(r.label.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`LabeledDataset::write_csv`]: the header decides the layout.
    pub fn read_csv(text: &str) -> Result<Self> {
        let first = text.lines().next().unwrap_or("");
        let names: Vec<&str> = first.split(',').map(str::trim).collect();
        if names == TRANSACTION_HEADER {
            return Self::read_transactions_csv(text.as_bytes());
        }
        if names.len() < 2 || names.last() != Some(&"label") {
            return invalid("dataset header must end with a label column");
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
            let mut continuous = Vec::with_capacity(names.len() - 1);
            for (k, v) in rec.iter().take(names.len() - 1).enumerate() {
                let x = v.parse::<f64>().ok().filter(|x| x.is_finite());
                continuous.push(x.ok_or_else(|| Error::Validation(format!("line {line}: bad {} value {v:?}", names[k])))?);
            }
            let label = match &rec[names.len() - 1] {
                "1" | "+1" => 1,
                "-1" => -1,
                other => return invalid(format!("line {line}: bad label value {other:?}")),
            };
            records.push(Record { continuous, categorical: vec![], label });
        }
        let schema = DatasetSchema {
            continuous: names[..names.len() - 1].iter().map(|s| s.to_string()).collect(),
            categorical: vec![],
        };
        Self::new(schema, records)
    }

    /// Write the `time,amount,method,zip,mcc,label` layout.
    pub fn write_transactions_csv(&self, out: impl Write) -> Result<()> {
        if self.schema != DatasetSchema::transactions() {
            return invalid("dataset does not follow the transaction schema");
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRANSACTION_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.continuous[0].to_string(),
                r.continuous[1].to_string(),
                r.categorical[0].to_string(),
                r.categorical[1].to_string(),
                r.categorical[2].to_string(),
                r.label.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_transactions_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header != TRANSACTION_HEADER {
            return invalid(format!("expected header {}, got {}", TRANSACTION_HEADER.join(","), header.join(",")));
        }
        let schema = DatasetSchema::transactions();
        let mut records = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            // Header is line 1.
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
            let bad = |col: &str, v: &str| Error::Validation(format!("line {line}: bad {col} value {v:?}"));
            let real = |k: usize| rec[k].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(TRANSACTION_HEADER[k], &rec[k]));
            let code = |k: usize| rec[k].parse::<u32>().map_err(|_| bad(TRANSACTION_HEADER[k], &rec[k]));
            let label = match &rec[5] {
                "1" | "+1" => 1,
                "-1" => -1,
                other => return Err(bad("label", other)),
            };
            let r = Record { continuous: vec![real(0)?, real(1)?], categorical: vec![code(2)?, code(3)?, code(4)?], label };
            for (c, v) in schema.categorical.iter().zip(&r.categorical) {
                if *v >= c.cardinality {
                    return invalid(format!("line {line}: {} code {v} outside 0..{}", c.name, c.cardinality));
                }
            }
            records.push(r);
        }
        Self::new(schema, records)
    }
}

const TRANSACTION_HEADER: [&str; 6] = ["time", "amount", "method", "zip", "mcc", "label"];

/// Seeded transactions with a planted fraud rule.
///
/// Time is the hour of day, amount is log-normal around 40. A record is
/// fraudulent (`+1`) when at least two of these hold: amount above 150, time
/// before 6:00, method 2, MCC 7–9.
pub fn synthesize_transactions(n_records: usize, seed: u64) -> Result<LabeledDataset> {
    if n_records == 0 {
        return arg("need at least one record");
    }
    let mut r = rng::substream(seed, "transactions");
    let amounts = LogNormal::<f64>::new(3.7, 1.1).expect("valid parameters");
    let records = (0..n_records)
        .map(|_| {
            let time = (r.random_range(0.0..24.0f64) * 100.0).round() / 100.0;
            let amount = (amounts.sample(&mut r) * 100.0).round() / 100.0;
            let method = r.random_range(0..3u32);
            let zip = r.random_range(0..10u32);
            let mcc = r.random_range(0..10u32);
            let score = u8::from(amount > 150.0) + u8::from(time < 6.0) + u8::from(method == 2) + u8::from(mcc >= 7);
            Record { continuous: vec![time, amount], categorical: vec![method, zip, mcc], label: if score >= 2 { 1 } else { -1 } }
        })
        .collect();
    LabeledDataset::new(DatasetSchema::transactions(), records)
}
