mod common;

use std::f64::consts::PI;

use common::{dense_unitary, mat_vec, max_diff};
use qfin_core::amp_est::{
    error_bound, grover_operator, phase_estimation, qpe_failure_probability, run_ae, true_amplitude,
    EstimationProblem,
};
use qfin_core::sv::{Circuit, Complex64, GateOp, Statevector};

fn ry_problem(a: f64) -> EstimationProblem {
    let mut c = Circuit::new(1);
    c.push(GateOp::ry(0, 2.0 * a.sqrt().asin())).unwrap();
    EstimationProblem::new(c, 0).unwrap()
}

/// A three-qubit, entangled, real-amplitude preparation with objective qubit 2.
fn entangled_problem() -> EstimationProblem {
    let mut c = Circuit::new(3);
    c.push(GateOp::ry(0, 1.1)).unwrap();
    c.push(GateOp::ry(1, 0.4)).unwrap();
    c.push(GateOp::cnot(0, 1)).unwrap();
    c.push(GateOp::ry(2, 0.7).controlled_by([0])).unwrap();
    c.push(GateOp::ry(2, 0.3).controlled_by([1])).unwrap();
    EstimationProblem::new(c, 2).unwrap()
}

/// Dense `A(I − 2|0⟩⟨0|)A†(I − 2|ψ₀0⟩⟨ψ₀0|)` built from the state vector of `A|0⟩`.
fn dense_q_apply(problem: &EstimationProblem, v: &[Complex64]) -> Vec<Complex64> {
    let a = dense_unitary(&problem.a_circuit);
    let a_dag = dense_unitary(&problem.a_circuit.inverse());
    let psi = problem.a_circuit.run().unwrap();
    let obj = problem.objective_qubit;
    // |ψ₀⟩|0⟩: bad component of A|0⟩, normalised.
    let mut bad: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, x)| if (i >> obj) & 1 == 0 { *x } else { Complex64::new(0.0, 0.0) })
        .collect();
    let nb = bad.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    bad.iter_mut().for_each(|x| *x /= nb);
    let reflect = |w: &[Complex64], axis: &[Complex64]| -> Vec<Complex64> {
        let ov: Complex64 = axis.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
        w.iter().zip(axis).map(|(x, a)| x - a * ov * 2.0).collect()
    };
    let mut zero = vec![Complex64::new(0.0, 0.0); v.len()];
    zero[0] = Complex64::new(1.0, 0.0);
    let w = reflect(v, &bad);
    let w = mat_vec(&a_dag, &w);
    let w = reflect(&w, &zero);
    mat_vec(&a, &w)
}

/// Embed a problem-register state with the work ancilla in |0⟩.
fn with_ancilla(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    out.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(v.len()));
    out
}

#[test]
fn grover_operator_matches_dense_definition_on_the_span() {
    for problem in [entangled_problem(), ry_problem(0.3), ry_problem(0.5)] {
        let q = grover_operator(&problem).unwrap();
        let psi = problem.a_circuit.run().unwrap();
        let mut v = psi.amplitudes().to_vec();
        for _ in 0..3 {
            let want = dense_q_apply(&problem, &v);
            let mut s = Statevector::from_amplitudes(with_ancilla(&v)).unwrap();
            s.apply_circuit(&q).unwrap();
            assert!(max_diff(s.amplitudes(), &with_ancilla(&want)) < 1e-10);
            v = want;
        }
    }
}

#[test]
fn grover_rotation_identity() {
    for problem in [ry_problem(0.3), entangled_problem()] {
        let a = true_amplitude(&problem).unwrap();
        let theta = a.sqrt().asin();
        let q = grover_operator(&problem).unwrap();
        let prep = problem.a_circuit.remapped(q.n_qubits(), &(0..problem.a_circuit.n_qubits()).collect::<Vec<_>>()).unwrap();
        let mut s = prep.run().unwrap();
        for k in 1..=3 {
            s.apply_circuit(&q).unwrap();
            let p = s.probability_one(problem.objective_qubit).unwrap();
            let want = ((2 * k + 1) as f64 * theta).sin().powi(2);
            assert!((p - want).abs() < 1e-9, "k={k}: {p} vs {want}");
        }
    }
    // a = 0.5: one application lands on sin²(3π/4) = 0.5.
    let problem = ry_problem(0.5);
    let q = grover_operator(&problem).unwrap();
    let mut s = problem.a_circuit.remapped(2, &[0]).unwrap().run().unwrap();
    s.apply_circuit(&q).unwrap();
    assert!((s.probability_one(0).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn grover_operator_is_identity_up_to_sign_when_a_is_zero() {
    let mut c = Circuit::new(2);
    c.push(GateOp::h(0)).unwrap();
    let problem = EstimationProblem::new(c, 1).unwrap();
    let q = grover_operator(&problem).unwrap();
    let start = problem.a_circuit.remapped(3, &[0, 1]).unwrap().run().unwrap();
    let mut s = start.clone();
    s.apply_circuit(&q).unwrap();
    assert!(start.distance_up_to_phase(&s).unwrap() < 1e-12);
}

#[test]
fn ae_distribution_is_symmetric_for_real_amplitudes() {
    let r = run_ae(&entangled_problem(), 4).unwrap();
    for y in 1..16 {
        assert!((r.distribution[y] - r.distribution[16 - y]).abs() < 1e-10, "y={y}");
    }
}

#[test]
fn ae_bound_coverage_sweep() {
    let floor = 8.0 / (PI * PI);
    for i in 1..=19 {
        let a = 0.05 * i as f64;
        let r = run_ae(&ry_problem(a), 4).unwrap();
        let mass = r.mass_within(a, error_bound(a, 16));
        assert!(mass >= floor, "a={a}: coverage {mass}");
    }
}

#[test]
fn ae_capacity_error() {
    assert!(run_ae(&ry_problem(0.2), 23).is_err());
}

/// Phase estimation of `diag(1, e^{2πiφ})` on its eigenstate `|1⟩`.
fn qpe_distribution(phi: f64, t: usize) -> Vec<f64> {
    let mut prep = Circuit::new(1);
    prep.push(GateOp::x(0)).unwrap();
    let mut u = Circuit::new(1);
    u.push(GateOp::phase(0, 2.0 * PI * phi)).unwrap();
    phase_estimation(&prep, &u, t).unwrap()
}

#[test]
fn qpe_failure_formula_matches_simulation() {
    // The phase sits exactly half a bin off the t = s + p grid (the worst case
    // the formula is derived for); success means landing on one of the 2^p
    // outcomes nearest the phase, 2^{p-1} on each side.
    let s = 2u32;
    for p in [1u32, 2] {
        let t = (s + p) as usize;
        let big_t = 1usize << t;
        for b in [0usize, 3, 5] {
            let phi = (b as f64 + 0.5) / big_t as f64;
            let dist = qpe_distribution(phi, t);
            let half = 1usize << (p - 1);
            let hit: f64 = (0..half)
                .flat_map(|j| [(b + big_t - j) % big_t, (b + 1 + j) % big_t])
                .map(|y| dist[y])
                .sum();
            let eps = qpe_failure_probability(s, p);
            assert!((1.0 - hit - eps).abs() < 1e-6, "s={s} p={p} b={b}: sim {} formula {eps}", 1.0 - hit);
        }
    }
}

#[test]
fn qpe_on_grid_phase_is_exact() {
    let dist = qpe_distribution(5.0 / 16.0, 4);
    assert!((dist[5] - 1.0).abs() < 1e-9);
}
