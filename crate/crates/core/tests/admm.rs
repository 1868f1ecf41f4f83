use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qfin_core::admm::{
    block1_qubo, block2_convex, block3_y, build_auction, dual_update, merit, run, AdmmConfig,
    AdmmState, Auction, Bid, ConvexQuadratic, JointRows, LinearRows, MboProblem, QuboSolver,
};
use qfin_core::qubo::{index_bits, EqualityConstraint, Qubo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

fn random_vector(r: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| r.random_range(-1.0..1.0))
}

/// Three binaries, two continuous variables, two consensus rows, one equality row.
fn random_problem(seed: u64) -> (MboProblem, AdmmState) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Qubo::zeros(3);
    for i in 0..3 {
        for j in i..3 {
            q.add_term(i, j, r.random_range(-2.0..2.0));
        }
        q.linear[i] = r.random_range(-1.0..1.0);
    }
    let problem = MboProblem {
        objective: q,
        equality: Some(EqualityConstraint::new(random_matrix(&mut r, 1, 3), random_vector(&mut r, 1)).unwrap()),
        inequality: None,
        phi: ConvexQuadratic::zero(2),
        lower: DVector::from_element(2, -5.0),
        upper: DVector::from_element(2, 5.0),
        joint: None,
        a0: random_matrix(&mut r, 2, 3),
        a1: random_matrix(&mut r, 2, 2),
        initial_continuous: DVector::zeros(2),
    };
    let state = AdmmState {
        k: 3,
        x: DVector::zeros(3),
        x_bar: random_vector(&mut r, 2),
        y: random_vector(&mut r, 2),
        lambda: random_vector(&mut r, 2),
    };
    (problem, state)
}

#[test]
fn block1_matches_direct_formula_on_all_binaries() {
    for seed in 0..10 {
        let (p, s) = random_problem(seed);
        let cfg = AdmmConfig::default();
        let qubo = block1_qubo(&p, &s, &cfg).unwrap();
        let eq = p.equality.as_ref().unwrap();
        for z in 0..8 {
            let bits = index_bits(z, 3);
            let x = DVector::from_iterator(3, bits.iter().map(|&b| f64::from(b)));
            let direct = p.objective.energy(&bits).unwrap()
                + cfg.c / 2.0 * (&eq.a * &x - &eq.b).norm_squared()
                + s.lambda.dot(&(&p.a0 * &x))
                + cfg.rho / 2.0 * (&p.a0 * &x + &p.a1 * &s.x_bar - &s.y).norm_squared();
            let got = qubo.energy(&bits).unwrap();
            assert!((got - direct).abs() < 1e-12, "seed {seed} z {z}: {got} vs {direct}");
        }
    }
}

#[test]
fn block1_reduces_to_objective_without_couplings() {
    let (mut p, mut s) = random_problem(4);
    p.equality = None;
    s.lambda.fill(0.0);
    s.y = &p.a1 * &s.x_bar;
    p.a0.fill(0.0);
    let qubo = block1_qubo(&p, &s, &AdmmConfig::default()).unwrap();
    for z in 0..8 {
        let bits = index_bits(z, 3);
        let diff = qubo.energy(&bits).unwrap() - p.objective.energy(&bits).unwrap();
        assert!(diff.abs() < 1e-12);
    }
}

#[test]
fn block1_feasible_equality_adds_nothing() {
    let (mut p, mut s) = random_problem(7);
    p.a0 = DMatrix::zeros(0, 3);
    p.a1 = DMatrix::zeros(0, 2);
    s.y = DVector::zeros(0);
    s.lambda = DVector::zeros(0);
    p.equality = Some(EqualityConstraint::cardinality(3, 2.0));
    let qubo = block1_qubo(&p, &s, &AdmmConfig::default()).unwrap();
    for z in [3, 5, 6] {
        let bits = index_bits(z, 3);
        assert!((qubo.energy(&bits).unwrap() - p.objective.energy(&bits).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn block2_without_continuous_variables_is_empty() {
    let p = MboProblem::from_qubo(Qubo::zeros(2));
    let s = AdmmState::initial(&p);
    assert_eq!(block2_convex(&p, &s, &AdmmConfig::default()).unwrap().len(), 0);
}

#[test]
fn block2_unconstrained_closed_form() {
    for seed in 0..10 {
        let (mut p, mut s) = random_problem(seed);
        p.phi = ConvexQuadratic { p_mat: DMatrix::identity(2, 2), p_vec: DVector::zeros(2) };
        p.a1 = DMatrix::identity(2, 2);
        p.lower.fill(-1e6);
        p.upper.fill(1e6);
        s.x = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let cfg = AdmmConfig::default();
        let got = block2_convex(&p, &s, &cfg).unwrap();
        let want = (cfg.rho * (&s.y - &p.a0 * &s.x) - &s.lambda) / (1.0 + cfg.rho);
        assert!((got - want).amax() < 1e-7, "seed {seed}");
    }
}

#[test]
fn block2_box_clamped_scalar() {
    // φ(u) = ½u², A1 = 1, A0 = 0, y = 3, λ = 0: unconstrained u* = ϱ·3/(1+ϱ) ≈ 2.77.
    let mut p = MboProblem::from_qubo(Qubo::zeros(1));
    p.phi = ConvexQuadratic { p_mat: DMatrix::identity(1, 1), p_vec: DVector::zeros(1) };
    p.lower = DVector::from_element(1, -1.0);
    p.upper = DVector::from_element(1, 1.5);
    p.initial_continuous = DVector::zeros(1);
    p.a0 = DMatrix::zeros(1, 1);
    p.a1 = DMatrix::identity(1, 1);
    let mut s = AdmmState::initial(&p);
    s.y[0] = 3.0;
    let cfg = AdmmConfig::default();
    assert!((block2_convex(&p, &s, &cfg).unwrap()[0] - 1.5).abs() < 1e-12);
    s.y[0] = -3.0;
    assert!((block2_convex(&p, &s, &cfg).unwrap()[0] + 1.0).abs() < 1e-12);
    s.y[0] = 0.5;
    let inside = cfg.rho * 0.5 / (1.0 + cfg.rho);
    assert!((block2_convex(&p, &s, &cfg).unwrap()[0] - inside).abs() < 1e-9);
}

#[test]
fn block2_with_joint_row_projects_onto_halfspace() {
    // min ½‖u − (1,1)‖² subject to u₁ + u₂ ≤ 1.5 − 0.5·x₀ with x₀ = 1, box [0, 2]².
    let mut p = MboProblem::from_qubo(Qubo::zeros(1));
    p.phi = ConvexQuadratic { p_mat: DMatrix::identity(2, 2), p_vec: DVector::from_element(2, -1.0) };
    p.lower = DVector::zeros(2);
    p.upper = DVector::from_element(2, 2.0);
    p.initial_continuous = DVector::zeros(2);
    p.a1 = DMatrix::zeros(0, 2);
    p.joint = Some(JointRows {
        lx: DMatrix::from_element(1, 1, 0.5),
        lu: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        l: DVector::from_element(1, 1.5),
    });
    let mut s = AdmmState::initial(&p);
    s.x = DVector::from_element(1, 1.0);
    let u = block2_convex(&p, &s, &AdmmConfig::default()).unwrap();
    assert!((u[0] - 0.5).abs() < 1e-7 && (u[1] - 0.5).abs() < 1e-7, "{u}");
}

#[test]
fn block3_limits() {
    let (p, mut s) = random_problem(2);
    let cfg = AdmmConfig::default();
    s.lambda.fill(0.0);
    s.y = &p.a0 * &s.x + &p.a1 * &s.x_bar;
    s.x_bar.fill(0.0);
    assert_eq!(block3_y(&p, &s, &cfg).amax(), 0.0);

    let (p, s) = random_problem(3);
    let small = AdmmConfig { beta: 1e-12, ..cfg };
    let want = &p.a0 * &s.x + &p.a1 * &s.x_bar + &s.lambda / small.rho;
    assert!((block3_y(&p, &s, &small) - want).amax() < 1e-10);
}

#[test]
fn block3_matches_gradient_descent() {
    for seed in 0..10 {
        let (p, mut s) = random_problem(seed);
        s.x = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let cfg = AdmmConfig::default();
        let v = &p.a0 * &s.x + &p.a1 * &s.x_bar;
        // Plain gradient descent on β/2‖y‖² − λᵀy + ϱ/2‖v − y‖².
        let mut y = DVector::zeros(2);
        let step = 0.5 / (cfg.beta + cfg.rho);
        for _ in 0..200 {
            let g = cfg.beta * &y - &s.lambda - cfg.rho * (&v - &y);
            y -= step * g;
        }
        assert!((block3_y(&p, &s, &cfg) - y).amax() < 1e-9, "seed {seed}");
    }
}

#[test]
fn dual_update_trivial_cases() {
    let (p, mut s) = random_problem(5);
    s.y = &p.a0 * &s.x + &p.a1 * &s.x_bar;
    let cfg = AdmmConfig::default();
    assert_eq!(dual_update(&p, &s, &cfg), s.lambda);
    s.y.fill(0.0);
    let one = AdmmConfig { rho: 1.0, ..cfg };
    let r = s.residual(&p);
    assert!((dual_update(&p, &s, &one) - (&s.lambda + r)).amax() < 1e-15);
}

fn three_bid_auction() -> Auction {
    Auction::new(
        vec![
            Bid { quantities: vec![1.0, 0.0], price: 3.0 },
            Bid { quantities: vec![0.0, 1.0], price: 3.0 },
            Bid { quantities: vec![2.0, 2.0], price: 5.0 },
        ],
        vec![2.0, 2.0],
    )
    .unwrap()
}

#[test]
fn three_bid_optimum_by_enumeration() {
    let a = three_bid_auction();
    let mut best = (0, f64::NEG_INFINITY);
    for z in 0..8 {
        let x = index_bits(z, 3);
        let used: Vec<f64> = (0..2).map(|i| (0..3).map(|j| a.bids[j].quantities[i] * f64::from(x[j])).sum()).collect();
        if used.iter().zip(&a.units).all(|(u, cap)| u <= cap) {
            let profit: f64 = (0..3).map(|j| a.bids[j].price * f64::from(x[j])).sum();
            if profit > best.1 {
                best = (z, profit);
            }
        }
    }
    assert_eq!(best, (0b011, 6.0));
    assert_eq!(a.exhaustive_optimum().unwrap(), (vec![1, 1, 0], 6.0));
}

#[test]
fn no_bids_means_no_profit() {
    let a = Auction::new(vec![], vec![3.0]).unwrap();
    assert_eq!(a.exhaustive_optimum().unwrap().1, 0.0);
    let r = run(&build_auction(&a).unwrap(), &AdmmConfig::default()).unwrap();
    assert_eq!(r.best_iteration().merit, 0.0);
}

#[test]
fn merit_charges_capacity_excess() {
    let a = three_bid_auction();
    let p = build_auction(&a).unwrap();
    let mu = 50.0;
    // B1 + B3 uses (3, 2) against (2, 2): excess 1. All three: (3, 3), excess 2.
    for (bits, excess) in [([1u8, 0, 1], 1.0), ([1, 1, 1], 2.0), ([1, 1, 0], 0.0)] {
        let x = DVector::from_iterator(3, bits.iter().map(|&b| f64::from(b)));
        let xbar = DVector::from_vec(a.units.clone());
        let want = -a.profit(&bits) + mu * excess;
        assert!((merit(&p, &x, &xbar, mu) - want).abs() < 1e-12);
        assert_eq!(a.excess(&bits), excess);
    }
}

fn check_trace_invariants(p: &MboProblem, cfg: &AdmmConfig, r: &qfin_core::admm::AdmmResult) {
    let min = r.iterations.iter().map(|it| it.merit).fold(f64::INFINITY, f64::min);
    assert_eq!(r.best_iteration().merit, min);
    let mut lambda = DVector::zeros(p.a0.nrows());
    for it in &r.iterations {
        assert!(it.block3_gradient_norm <= 1e-9, "k {}: {}", it.k, it.block3_gradient_norm);
        let x = DVector::from_iterator(it.x.len(), it.x.iter().map(|&b| f64::from(b)));
        let xbar = DVector::from_vec(it.x_bar.clone());
        let y = DVector::from_vec(it.y.clone());
        let residual = &p.a0 * &x + &p.a1 * &xbar - &y;
        lambda += cfg.rho * &residual;
        assert!((&lambda - DVector::from_vec(it.lambda.clone())).amax() < 1e-9, "dual replay at k {}", it.k);
        assert!((residual.norm() - it.residual_norm).abs() < 1e-9);
        assert!(it.x_bar.iter().zip(p.lower.iter().zip(&p.upper)).all(|(v, (l, u))| l <= v && v <= u));
    }
}

#[test]
fn unit_demand_reaches_exhaustive_optimum() {
    let cfg = AdmmConfig::default();
    for seed in 0..20u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let n = r.random_range(2..=12);
        let m = r.random_range(1..=4);
        let bids: Vec<Bid> = (0..n)
            .map(|_| {
                let mut quantities: Vec<f64> = (0..m).map(|_| f64::from(r.random_bool(0.5))).collect();
                quantities[r.random_range(0..m)] = 1.0;
                Bid { quantities, price: f64::from(r.random_range(1..=10u32)) }
            })
            .collect();
        let a = Auction::new(bids, vec![n as f64; m]).unwrap();
        let p = build_auction(&a).unwrap();
        let res = run(&p, &cfg).unwrap();
        check_trace_invariants(&p, &cfg, &res);
        let (x, profit) = a.exhaustive_optimum().unwrap();
        assert_eq!(res.best_iteration().x, x, "seed {seed}");
        assert!((-res.best_iteration().merit - profit).abs() < 1e-9);
    }
}

#[test]
fn sixteen_bid_instance_terminates_with_trace() {
    let a = Auction::random(16, 3, 6.0, 6, 42).unwrap();
    assert_eq!(a.bids.len(), 16);
    assert!(a.bids.iter().all(|b| b.quantities.iter().all(|q| *q <= 6.0) && b.quantities.iter().any(|q| *q >= 1.0)));
    let p = build_auction(&a).unwrap();
    let cfg = AdmmConfig::default();
    let res = run(&p, &cfg).unwrap();
    assert!(!res.iterations.is_empty() && res.iterations.len() <= 100);
    check_trace_invariants(&p, &cfg, &res);
    let json = serde_json::to_string(&res).unwrap();
    let back: qfin_core::admm::AdmmResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.iterations.len(), res.iterations.len());
}

#[test]
fn vqe_block_solver_keeps_loop_alive() {
    let a = three_bid_auction();
    let p = build_auction(&a).unwrap();
    let cfg = AdmmConfig {
        solver: QuboSolver::Vqe { depth: 1, iterations: 40, restarts: 1 },
        max_iter: 5,
        seed: 9,
        ..AdmmConfig::default()
    };
    let res = run(&p, &cfg).unwrap();
    assert!(!res.iterations.is_empty() && res.iterations.len() <= 5);
    check_trace_invariants(&p, &cfg, &res);
    let qaoa = AdmmConfig { solver: QuboSolver::Qaoa { p: 1, iterations: 20, restarts: 1 }, ..cfg };
    assert!(!run(&p, &qaoa).unwrap().iterations.is_empty());
}

#[test]
fn inequality_rows_enter_merit() {
    let mut p = MboProblem::from_qubo(Qubo::zeros(2));
    p.inequality = Some(LinearRows { a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), b: DVector::from_element(1, 1.0) });
    let x = DVector::from_vec(vec![1.0, 1.0]);
    assert_eq!(merit(&p, &x, &DVector::zeros(0), 3.0), 3.0);
    assert_eq!(merit(&p, &DVector::from_vec(vec![1.0, 0.0]), &DVector::zeros(0), 3.0), 0.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let p = MboProblem::from_qubo(Qubo::zeros(1));
    for cfg in [
        AdmmConfig { rho: 0.0, ..AdmmConfig::default() },
        AdmmConfig { beta: -1.0, ..AdmmConfig::default() },
        AdmmConfig { max_iter: 0, ..AdmmConfig::default() },
        AdmmConfig { mu: Some(0.0), ..AdmmConfig::default() },
    ] {
        assert!(run(&p, &cfg).is_err());
    }
    let mut bad = build_auction(&three_bid_auction()).unwrap();
    bad.a1 = DMatrix::identity(3, 3);
    assert!(run(&bad, &AdmmConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn auction_trace_invariants(seed in 0u64..1000, n in 1usize..9, m in 1usize..4) {
        let a = Auction::random(n, m, 4.0, 3, seed).unwrap();
        let p = build_auction(&a).unwrap();
        let cfg = AdmmConfig { max_iter: 30, ..AdmmConfig::default() };
        let res = run(&p, &cfg).unwrap();
        check_trace_invariants(&p, &cfg, &res);
        let (_, best_profit) = a.exhaustive_optimum().unwrap();
        let it = res.best_iteration();
        prop_assert!(it.merit >= -best_profit - 1e-9 || it.violation > 0.0);
    }
}
