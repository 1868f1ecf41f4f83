use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use qfin_core::optim::OptimizerConfig;
use qfin_core::qml::{
    bloch_vector, build_vqc_with_qrac, cross_validate, feature_state, qrac_encode_block, risk_value,
    self_labeled_dataset, stratified_folds, synthesize_transactions, train, Classifier, DatasetSchema, FeatureMap,
    LabeledDataset, ModelConfig, PairTerms, Record, Risk, Scaler, Scaling, VqcModel,
};
use qfin_core::sv::Circuit;

/// Feature state built directly from the definition: per repetition a Walsh–Hadamard
/// transform followed by multiplication with `exp(i φ(z))`.
fn feature_state_oracle(x: &[f64], reps: usize, pairs: &[(usize, usize)]) -> Vec<Complex64> {
    let n = x.len();
    let dim = 1usize << n;
    let spin = |z: usize, k: usize| if (z >> k) & 1 == 0 { 1.0 } else { -1.0 };
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    for _ in 0..reps {
        let mut next = vec![Complex64::new(0.0, 0.0); dim];
        for (z, out) in next.iter_mut().enumerate() {
            for (w, a) in psi.iter().enumerate() {
                let sign = if (z & w).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *out += a * sign / (dim as f64).sqrt();
            }
        }
        for (z, a) in next.iter_mut().enumerate() {
            let mut phase: f64 = (0..n).map(|k| x[k] * spin(z, k)).sum();
            for &(i, j) in pairs {
                phase += (PI - x[i]) * (PI - x[j]) * spin(z, i) * spin(z, j);
            }
            *a *= Complex64::from_polar(1.0, phase);
        }
        psi = next;
    }
    psi
}

fn close(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn feature_state_matches_definition() {
    let x = [0.3, 2.1, 5.0];
    let full = FeatureMap::new(3);
    let s = feature_state(&full, &x).unwrap();
    assert!(close(s.amplitudes(), &feature_state_oracle(&x, 2, &[(0, 1), (0, 2), (1, 2)])) < 1e-12);
    let linear = FeatureMap { pairs: PairTerms::Linear, ..full.clone() };
    let s = feature_state(&linear, &x).unwrap();
    assert!(close(s.amplitudes(), &feature_state_oracle(&x, 2, &[(0, 1), (1, 2)])) < 1e-12);
    assert!(feature_state(&full, &[1.0]).is_err());
}

#[test]
fn zero_phases_give_back_the_zero_state() {
    let map = FeatureMap { n_qubits: 3, reps: 2, pairs: PairTerms::None };
    let s = feature_state(&map, &[0.0; 3]).unwrap();
    assert!((s.probabilities()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn pair_coefficient_vanishes_at_pi() {
    let with = FeatureMap::new(2).phases(&[PI, PI]).unwrap();
    let without = FeatureMap { pairs: PairTerms::None, ..FeatureMap::new(2) }.phases(&[PI, PI]).unwrap();
    assert_eq!(with, without);
}

#[test]
fn feature_map_is_deterministic() {
    let map = FeatureMap::new(4);
    let x = [0.1, 0.2, 0.3, 0.4];
    assert_eq!(feature_state(&map, &x).unwrap(), feature_state(&map, &x).unwrap());
}

fn two_feature_config() -> ModelConfig {
    let schema = DatasetSchema { continuous: vec!["x1".into(), "x2".into()], categorical: vec![] };
    let mut cfg = ModelConfig::vqc(schema).unwrap();
    cfg.scaling = Scaling::Identity;
    cfg
}

fn identity_scaler(d: usize) -> Scaler {
    Scaler { min: vec![0.0; d], max: vec![TAU; d] }
}

fn record(x: &[f64]) -> Record {
    Record { continuous: x.to_vec(), categorical: vec![], label: 1 }
}

#[test]
fn untrained_model_on_zero_state_reads_even_parity() {
    let mut cfg = two_feature_config();
    cfg.pairs = PairTerms::None;
    let m = VqcModel::new(cfg.clone(), identity_scaler(2), vec![0.0; cfg.parameter_count()], 0.0).unwrap();
    assert!((m.decision(&record(&[0.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
    let biased = VqcModel { bias: 2.0, theta: vec![1.3; cfg.parameter_count()], ..m };
    for x in [[0.0, 0.0], [1.0, 2.0], [6.0, 3.0]] {
        assert_eq!(biased.predict(&record(&x)).unwrap(), 1);
    }
}

#[test]
fn decision_matches_enumeration() {
    let cfg = two_feature_config();
    let theta: Vec<f64> = (0..cfg.parameter_count()).map(|i| 0.37 * i as f64 - 1.0).collect();
    let m = VqcModel::new(cfg.clone(), identity_scaler(2), theta.clone(), -0.25).unwrap();
    let x = [1.2, 4.4];
    let mut s = feature_state(&FeatureMap::new(2), &x).unwrap();
    s.apply_circuit(&qfin_core::variational::Ansatz::rxry_full(2, 1).circuit(&theta).unwrap()).unwrap();
    let want: f64 = s
        .probabilities()
        .iter()
        .enumerate()
        .map(|(z, p)| p * if z.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
        .sum::<f64>()
        - 0.25;
    assert!((m.decision(&record(&x)).unwrap() - want).abs() < 1e-12);
}

#[test]
fn risk_reference_values() {
    let y = [1i8, -1, 1, -1];
    assert_eq!(risk_value(&[1.0, -1.0, 1.0, -1.0], &y, Risk::Absolute), 0.0);
    assert_eq!(risk_value(&[0.0; 4], &y, Risk::Absolute), 1.0);
    assert!((risk_value(&[0.0; 4], &y, Risk::CrossEntropy) - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn empty_dataset_risk_is_an_error() {
    let cfg = two_feature_config();
    let m = VqcModel::new(cfg.clone(), identity_scaler(2), vec![0.0; cfg.parameter_count()], 0.0).unwrap();
    let empty = LabeledDataset::new(cfg.schema.clone(), vec![]).unwrap();
    assert!(m.empirical_risk(&empty, Risk::Absolute).is_err());
}

fn qrac_state(bits: [u8; 3]) -> qfin_core::sv::Statevector {
    let mut c = Circuit::new(1);
    qrac_encode_block(&mut c, 0, bits).unwrap();
    c.run().unwrap()
}

fn all_codes() -> Vec<[u8; 3]> {
    (0..8u8).map(|v| [v & 1, (v >> 1) & 1, (v >> 2) & 1]).collect()
}

#[test]
fn qrac_states_sit_on_cube_corners() {
    let r = bloch_vector(&qrac_state([0, 0, 0])).unwrap();
    let c = 1.0 / 3f64.sqrt();
    assert!(r.iter().all(|v| (v - c).abs() < 1e-12), "{r:?}");
    let p_success = 0.5 + 0.5 / 3f64.sqrt();
    for bits in all_codes() {
        let r = bloch_vector(&qrac_state(bits)).unwrap();
        assert!((r.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12, "pure state");
        let flipped = bloch_vector(&qrac_state(bits.map(|b| 1 - b))).unwrap();
        assert!(r.iter().zip(&flipped).all(|(a, b)| (a + b).abs() < 1e-12), "antipodal");
        for axis in 0..3 {
            // Probability of reading the encoded bit along this axis.
            let sign = if bits[axis] == 0 { 1.0 } else { -1.0 };
            let p = 0.5 * (1.0 + sign * r[axis]);
            assert!((p - p_success).abs() < 1e-9);
        }
    }
}

#[test]
fn qrac_overlaps_follow_hamming_distance() {
    let codes = all_codes();
    for (i, a) in codes.iter().enumerate() {
        for b in &codes[i + 1..] {
            let d = a.iter().zip(b).filter(|(x, y)| x != y).count();
            let overlap = qrac_state(*a).inner(&qrac_state(*b)).unwrap().norm_sqr();
            let want = [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0][d];
            assert!((overlap - want).abs() < 1e-12, "{a:?} {b:?}: {overlap}");
        }
    }
}

#[test]
fn qrac_qubit_counting() {
    let t = DatasetSchema::transactions();
    let method = build_vqc_with_qrac(t.clone(), &["method"], 0).unwrap();
    assert_eq!((method.qrac_bits(), method.qrac_qubits()), (3, 1));
    let plain = build_vqc_with_qrac(t.clone(), &[], 0).unwrap();
    assert_eq!(plain, ModelConfig::vqc(t.clone()).unwrap());
    let wide = build_vqc_with_qrac(t, &["method", "zip"], 2).unwrap();
    assert_eq!(wide.qrac_bits(), 13);
    assert_eq!(wide.n_qubits(), 13usize.div_ceil(3) + 3 + 2);
}

#[test]
fn qrac_qubit_carries_the_method_code() {
    let cfg = build_vqc_with_qrac(DatasetSchema::transactions(), &["method"], 0).unwrap();
    let scaler = Scaler { min: vec![0.0; 4], max: vec![1.0; 4] };
    let m = VqcModel::new(cfg.clone(), scaler, vec![0.0; cfg.parameter_count()], 0.0).unwrap();
    for method in 0..3u32 {
        let r = Record { continuous: vec![0.0, 0.0], categorical: vec![method, 0, 0], label: 1 };
        let marg = m.embed(&r).unwrap().marginal(&[4]).unwrap();
        let mut bits = [0u8; 3];
        bits[method as usize] = 1;
        let want = qrac_state(bits).probabilities();
        assert!((marg[0] - want[0]).abs() < 1e-12);
    }
}

#[test]
fn synthetic_transactions_are_deterministic() {
    let a = synthesize_transactions(100, 7).unwrap();
    assert_eq!(a, synthesize_transactions(100, 7).unwrap());
    assert_ne!(a, synthesize_transactions(100, 8).unwrap());
    let labels = a.labels();
    assert!(labels.contains(&1) && labels.contains(&-1));
    for col in 1..3 {
        let mut seen = [false; 10];
        for r in &a.records {
            seen[r.categorical[col] as usize] = true;
        }
        assert!(seen.iter().all(|s| *s), "all 10 codes of column {col} appear");
    }
    assert_eq!(a.schema.categorical[1].cardinality, 10);
    assert_eq!(a.schema.categorical[2].cardinality, 10);
    assert!(synthesize_transactions(0, 1).is_err());
}

#[test]
fn transaction_csv_round_trips() {
    let a = synthesize_transactions(100, 3).unwrap();
    let mut buf = Vec::new();
    a.write_transactions_csv(&mut buf).unwrap();
    let back = LabeledDataset::read_transactions_csv(buf.as_slice()).unwrap();
    assert_eq!(a, back);
    let mut again = Vec::new();
    back.write_transactions_csv(&mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn malformed_transaction_rows_name_their_line() {
    let header = "time,amount,method,zip,mcc,label\n";
    for (body, line) in [
        ("1.0,20.0,0,1,2,1\n3.0,abc,0,1,2,1\n", "line 3"),
        ("1.0,20.0,5,1,2,1\n", "line 2"),
        ("1.0,20.0,0,1,2,0\n", "line 2"),
        ("1.0,20.0,0,1\n", "line 2"),
    ] {
        let err = LabeledDataset::read_transactions_csv(format!("{header}{body}").as_bytes()).unwrap_err();
        assert!(err.to_string().contains(line), "{err}");
    }
    assert!(LabeledDataset::read_transactions_csv("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn training_lowers_the_loss() {
    let data = synthesize_transactions(40, 11).unwrap();
    let cfg = build_vqc_with_qrac(DatasetSchema::transactions(), &["method"], 0).unwrap();
    let (model, report) = train(&data, &cfg, &OptimizerConfig::spsa(60, 3)).unwrap();
    assert_eq!(model.config.n_qubits(), 5);
    assert!(report.final_loss < report.initial_loss);
    assert_eq!(report.loss_trace.len(), 60);
    assert!((model.empirical_risk(&data, Risk::CrossEntropy).unwrap() - report.final_loss).abs() < 1e-9);
}

#[test]
fn self_labeled_data_is_learnable() {
    let (data, truth) = self_labeled_dataset(20, 2, 0.1, 100).unwrap();
    assert_eq!(truth.accuracy(&data).unwrap(), 1.0);
    let mut passed = 0;
    for seed in 0..5 {
        let (m, _) = train(&data, &truth.config, &OptimizerConfig::spsa(200, seed)).unwrap();
        if m.accuracy(&data).unwrap() >= 0.95 {
            passed += 1;
        }
    }
    assert!(passed >= 4, "{passed}/5 seeds reached 0.95");
}

#[test]
fn model_json_round_trip_and_schema_check() {
    let data = synthesize_transactions(20, 2).unwrap();
    let cfg = ModelConfig::vqc(DatasetSchema::transactions()).unwrap();
    let (model, _) = train(&data, &cfg, &OptimizerConfig::spsa(5, 1)).unwrap();
    let back = VqcModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(model, back);
    let other = self_labeled_dataset(5, 2, 0.0, 1).unwrap().0;
    assert!(back.accuracy(&other).is_err());
}

fn separable(n: usize) -> LabeledDataset {
    // First coordinate in [0, 0.4] or [0.6, 1]; the second is noise.
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            vec![if t < 0.5 { 0.8 * t } else { 0.2 + 0.8 * t }, ((i * 7) % 5) as f64]
        })
        .collect();
    let ys = xs.iter().map(|x| if x[0] > 0.5 { 1 } else { -1 }).collect();
    LabeledDataset::from_features(xs, ys).unwrap()
}

#[test]
fn baselines_separate_toy_data() {
    let data = separable(40);
    let methods = vec![("logistic".to_string(), Classifier::Logistic), ("hinge".to_string(), Classifier::Hinge)];
    let report = cross_validate(&methods, &data, 5, 1).unwrap();
    for ms in report.test.iter().chain(&report.train) {
        assert_eq!(ms.mean, 1.0);
    }
    let table = report.to_string();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].contains("logistic") && lines[0].contains("hinge"));
    assert!(lines[1].starts_with("train") && lines[2].starts_with("test"));
}

#[test]
fn folds_are_stratified_partitions() {
    let labels: Vec<i8> = (0..23).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
    let folds = stratified_folds(&labels, 5, 4).unwrap();
    let mut all: Vec<usize> = folds.concat();
    all.sort_unstable();
    assert_eq!(all, (0..23).collect::<Vec<_>>());
    for f in &folds {
        assert!(f.iter().any(|&i| labels[i] == 1) && f.iter().any(|&i| labels[i] == -1));
    }
    assert!(stratified_folds(&labels, 1, 0).is_err());
    let rare = vec![1, -1, -1, -1, -1, -1];
    assert!(stratified_folds(&rare, 2, 0).is_err());
}

#[test]
fn cross_validation_accuracies_are_probabilities() {
    let data = synthesize_transactions(30, 5).unwrap();
    let cfg = ModelConfig::vqc(DatasetSchema::transactions()).unwrap();
    let methods = vec![
        ("VQC".to_string(), Classifier::Vqc { config: cfg, optimizer: OptimizerConfig::spsa(10, 2) }),
        ("logistic".to_string(), Classifier::Logistic),
    ];
    let report = cross_validate(&methods, &data, 3, 9).unwrap();
    for v in report.train_folds.iter().chain(&report.test_folds).flatten() {
        assert!((0.0..=1.0).contains(v));
    }
    assert_eq!(report.test_folds[0].len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn readout_is_bounded(x in proptest::collection::vec(0.0..TAU, 3), theta in proptest::collection::vec(-PI..PI, 12), b in -2.0..2.0f64) {
        let schema = DatasetSchema { continuous: vec!["a".into(), "b".into(), "c".into()], categorical: vec![] };
        let mut cfg = ModelConfig::vqc(schema).unwrap();
        cfg.scaling = Scaling::Identity;
        let m = VqcModel::new(cfg, identity_scaler(3), theta, b).unwrap();
        let f = m.decision(&record(&x)).unwrap();
        prop_assert!((f - b).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn feature_states_are_normalised(x in proptest::collection::vec(0.0..TAU, 4)) {
        let s = feature_state(&FeatureMap::new(4), &x).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cross_entropy_falls_as_margin_grows(f in proptest::collection::vec(-1.5..1.5f64, 4), k in 0usize..4, bump in 0.01..1.0f64) {
        let y = [1i8, -1, -1, 1];
        let mut g = f.clone();
        g[k] += bump * f64::from(y[k]);
        prop_assert!(risk_value(&g, &y, Risk::CrossEntropy) < risk_value(&f, &y, Risk::CrossEntropy));
    }
}
