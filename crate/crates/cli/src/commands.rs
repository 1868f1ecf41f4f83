use std::f64::consts::PI;

use qfin_core::admm::{self, AdmmConfig, Auction, QuboSolver};
use qfin_core::amp_est::{error_bound, estimate_for, qpe_failure_probability, run_ae, EstimationProblem};
use qfin_core::credit_risk::{
    cvar, exact_loss_distribution, read_assets_csv, var_bisection, Asset, CreditPortfolio,
};
use qfin_core::optim::OptimizerConfig;
use qfin_core::qml::{
    build_vqc_with_qrac, cross_validate, self_labeled_dataset, synthesize_transactions, train, Classifier, LabeledDataset,
    ModelConfig, Risk, Scaling, VqcModel,
};
use qfin_core::qubo::{
    bit_string, build_diversification_qubo, build_portfolio_qubo, decode_diversification, efficient_frontier,
    enumerate_portfolios, index_bits, pareto_front, portfolio_objective, read_portfolio_csv, read_similarity_csv,
    synthetic_portfolio, synthetic_similarity, DiversificationSpec, PortfolioSpec, Qubo,
};
use qfin_core::sv::{Circuit, GateOp, MAX_QUBITS};
use qfin_core::variational::{qaoa_minimize, vqe_minimize, Ansatz, VariationalConfig, VariationalResult};
use serde_json::{json, Value};

use crate::app::{usage, Result, Run};
use crate::args::*;

fn f(v: f64) -> String {
    v.to_string()
}

pub fn risk(cmd: &RiskCommand, run: &mut Run) -> Result<&'static str> {
    let RiskCommand::Var(a) = cmd;
    let assets = match &a.portfolio {
        Some(path) => read_assets_csv(run.read(path)?.as_bytes())?,
        None => vec![Asset::new(1, 0.15, 0.1)?, Asset::new(2, 0.25, 0.05)?],
    };
    if !(a.z_bound > 0.0) {
        return usage(format!("--z-bound must be positive, got {}", a.z_bound));
    }
    let hint = |what: String| format!("{what} (lower --nz or --m, or use fewer assets)");
    let portfolio = CreditPortfolio::new(assets, a.nz, -a.z_bound, a.z_bound).map_err(|e| match e {
        qfin_core::Error::Capacity { what, required, limit } => qfin_core::Error::Capacity { what: hint(what), required, limit },
        e => e,
    })?;
    let required = portfolio.n_qubits() + 1 + a.m;
    if required > MAX_QUBITS {
        let what = hint("value-at-risk estimation".into());
        return Err(qfin_core::Error::Capacity { what, required, limit: MAX_QUBITS }.into());
    }
    let result = var_bisection(&portfolio, a.alpha, a.m)?;
    let classical = exact_loss_distribution(&portfolio)?;
    let expected = classical.mean();
    let big_m = 1usize << a.m;
    let probes: Vec<Value> = result
        .trace
        .iter()
        .map(|s| {
            let bound = error_bound(s.true_cdf, big_m);
            json!({
                "low": s.low, "mid": s.mid, "high": s.high,
                "cdf_estimate": s.cdf, "cdf_true": s.true_cdf,
                "delta": s.cdf - s.true_cdf, "error_bound": bound,
                "within_bound": (s.cdf - s.true_cdf).abs() <= bound,
            })
        })
        .collect();
    let mut report = json!({
        "assets": portfolio.assets,
        "n_z": portfolio.n_z,
        "z_bounds": [portfolio.z_low, portfolio.z_high],
        "n_s": portfolio.n_s(),
        "simulated_qubits": portfolio.n_qubits() + 1 + a.m,
        "alpha": a.alpha,
        "m": a.m,
        "var": result.var,
        "expected_loss": expected,
        "ecr": result.var as f64 - expected,
        "probes": probes,
    });
    println!("VaR_{} = {}   E[L] = {expected:.6}   ECR = {:.6}", a.alpha, result.var, result.var as f64 - expected);
    println!("{:>5} {:>5} {:>5} {:>12} {:>12} {:>12}", "low", "mid", "high", "cdf (AE)", "cdf (true)", "bound");
    for s in &result.trace {
        println!("{:>5} {:>5} {:>5} {:>12.6} {:>12.6} {:>12.6}", s.low, s.mid, s.high, s.cdf, s.true_cdf, error_bound(s.true_cdf, big_m));
    }
    run.write_csv(
        "bisection.csv",
        &["low", "mid", "high", "cdf_estimate", "cdf_true", "error_bound"],
        result.trace.iter().map(|s| {
            vec![s.low.to_string(), s.mid.to_string(), s.high.to_string(), f(s.cdf), f(s.true_cdf), f(error_bound(s.true_cdf, big_m))]
        }),
    )?;
    if a.exact_oracle {
        let var = classical.var(a.alpha);
        let tail = cvar(&classical, a.alpha);
        report["oracle"] = json!({
            "pmf": classical.pmf.iter().map(|(l, p)| json!({"loss": l, "probability": p})).collect::<Vec<_>>(),
            "var": var,
            "cvar": tail,
            "expected_loss": expected,
            "var_delta": result.var - var as i64,
        });
        println!("classical VaR = {var}   CVaR = {tail:.6}   VaR delta = {}", result.var - var as i64);
        run.write_csv(
            "pmf.csv",
            &["loss", "probability", "cdf"],
            classical.pmf.keys().map(|&l| vec![l.to_string(), f(classical.pmf[&l]), f(classical.cdf(l as i64))]),
        )?;
    }
    run.write_json("result.json", &report)?;
    Ok("risk var")
}

pub fn opt(cmd: &OptCommand, run: &mut Run) -> Result<&'static str> {
    match cmd {
        OptCommand::Portfolio(a) => portfolio(a, run).map(|_| "opt portfolio"),
        OptCommand::Diversify(a) => diversify(a, run).map(|_| "opt diversify"),
        OptCommand::Auction(a) => auction(a, run).map(|_| "opt auction"),
    }
}

fn variational_config(v: &VariationalArgs, seed: u64) -> VariationalConfig {
    let mut cfg = VariationalConfig::new(OptimizerConfig::spsa(v.iterations, seed).with_restarts(v.restarts));
    cfg.top_k = v.top_k;
    cfg
}

/// Minimise `qubo` with a QUBO solver; returns the decoded bits and the variational details.
fn solve(qubo: &Qubo, solver: Solver, v: &VariationalArgs, seed: u64) -> Result<(Vec<u8>, Option<VariationalResult>)> {
    let n = qubo.n();
    let cfg = variational_config(v, seed);
    let r = match solver {
        Solver::BruteForce => return Ok((qubo.brute_force()?.0, None)),
        Solver::Vqe => vqe_minimize(&qubo.to_ising(), &Ansatz::ry_full(n, v.depth), &cfg)?,
        Solver::Qaoa => qaoa_minimize(&qubo.to_ising(), n, v.p, &cfg)?,
        Solver::Admm => return usage("admm applies to mixed-binary problems; use it with `opt auction`"),
    };
    Ok((index_bits(r.best_sample().index, n), Some(r)))
}

fn variational_json(r: &Option<VariationalResult>) -> Value {
    match r {
        None => Value::Null,
        Some(r) => json!({
            "best_value": r.best_value,
            "best_params": r.best_params,
            "top_states": r.top_states,
            "restarts": r.restarts,
        }),
    }
}

fn portfolio(a: &PortfolioArgs, run: &mut Run) -> Result<()> {
    let (mu, sigma) = match &a.instance {
        Some(path) => read_portfolio_csv(run.read(path)?.as_bytes())?,
        None => synthetic_portfolio(a.synthetic.unwrap_or(6), run.seed),
    };
    let n = mu.len();
    let spec = PortfolioSpec { mu: mu.clone(), sigma: sigma.clone(), q: a.q, budget: a.budget.unwrap_or(n / 2), penalty: a.penalty };
    let qubo = build_portfolio_qubo(&spec)?;
    let (x, details) = solve(&qubo, a.solver, &a.variational, run.seed)?;
    let (optimum, opt_energy) = qubo.brute_force()?;
    let describe = |x: &[u8]| -> Result<Value> {
        let xv: Vec<f64> = x.iter().map(|&b| f64::from(b)).collect();
        let xv = nalgebra::DVector::from_vec(xv);
        let risk = (xv.transpose() * &sigma * &xv)[(0, 0)];
        let ret = mu.dot(&xv);
        let selected = x.iter().filter(|&&b| b == 1).count();
        Ok(json!({
            "bits": bit_string(x),
            "selected": (0..n).filter(|&i| x[i] == 1).collect::<Vec<_>>(),
            "energy": qubo.energy(x)?,
            "objective": a.q * risk - ret,
            "risk": risk,
            "return": ret,
            "budget_feasible": selected == spec.budget,
        }))
    };
    let energy = qubo.energy(&x)?;
    let report = json!({
        "solver": a.solver.name(),
        "n": n,
        "q": a.q,
        "budget": spec.budget,
        "penalty": spec.penalty_weight(),
        "solution": describe(&x)?,
        "optimum": describe(&optimum)?,
        "optimality_gap": energy - opt_energy,
        "variational": variational_json(&details),
    });
    println!(
        "{}: x = {} energy {energy:.6} (optimum {} at {opt_energy:.6}), budget feasible: {}",
        a.solver.name(),
        bit_string(&x),
        bit_string(&optimum),
        report["solution"]["budget_feasible"]
    );
    run.write_json("result.json", &report)?;
    if a.frontier {
        let all = enumerate_portfolios(&mu, &sigma)?;
        let front = pareto_front(&all);
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (set, pts) in [("all", &all), ("pareto", &front)] {
            rows.extend(pts.iter().map(|p| vec![set.into(), String::new(), bit_string(&p.x), f(p.risk), f(p.ret)]));
        }
        let solver_points = if a.solver == Solver::BruteForce {
            efficient_frontier(&mu, &sigma, &a.q_sweep)?.into_iter().map(|fp| (fp.q, fp.point.x)).collect::<Vec<_>>()
        } else {
            let mut pts = Vec::new();
            for &q in &a.q_sweep {
                if !(q > 0.0) {
                    return usage(format!("risk factors in --q-sweep must be positive, got {q}"));
                }
                let (_, r) = solve(&portfolio_objective(&mu, &sigma, q), a.solver, &a.variational, run.seed)?;
                let top = &r.expect("variational solver").top_states[0];
                pts.push((q, index_bits(top.index, n)));
            }
            pts
        };
        let lookup = |x: &[u8]| all.iter().find(|p| p.x == x).expect("every subset enumerated");
        rows.extend(solver_points.iter().map(|(q, x)| {
            let p = lookup(x);
            vec![a.solver.name().into(), f(*q), bit_string(x), f(p.risk), f(p.ret)]
        }));
        run.write_csv("frontier.csv", &["set", "q", "bits", "risk", "return"], rows)?;
    }
    Ok(())
}

fn diversify(a: &DiversifyArgs, run: &mut Run) -> Result<()> {
    let rho = match &a.similarity {
        Some(path) => read_similarity_csv(run.read(path)?.as_bytes())?,
        None => synthetic_similarity(a.synthetic.unwrap_or(3), run.seed),
    };
    let spec = DiversificationSpec { rho, q_clusters: a.clusters, penalty: a.penalty };
    let qubo = build_diversification_qubo(&spec)?;
    let (x, details) = solve(&qubo, a.solver, &a.variational, run.seed)?;
    let (optimum, _) = qubo.brute_force()?;
    let describe = |x: &[u8]| -> Result<Value> {
        let d = decode_diversification(&spec, x)?;
        let similarity: f64 = (0..spec.n())
            .filter_map(|i| d.assignment[i].map(|j| spec.rho[(i, j)]))
            .sum();
        Ok(json!({
            "bits": bit_string(x),
            "energy": qubo.energy(x)?,
            "feasible": d.is_feasible(),
            "representatives": d.selected,
            "assignment": d.assignment,
            "violations": d.violations,
            "similarity": similarity,
        }))
    };
    let solution = describe(&x)?;
    let report = json!({
        "solver": a.solver.name(),
        "n": spec.n(),
        "clusters": a.clusters,
        "variables": spec.n_vars(),
        "penalty": spec.penalty_weight(),
        "similarity": (0..spec.n()).map(|i| spec.rho.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        "solution": solution,
        "optimum": describe(&optimum)?,
        "variational": variational_json(&details),
    });
    println!(
        "{} variables; {}: representatives {} assignment {} feasible: {}",
        spec.n_vars(),
        a.solver.name(),
        report["solution"]["representatives"],
        report["solution"]["assignment"],
        report["solution"]["feasible"]
    );
    run.write_json("result.json", &report)
}

fn auction(a: &AuctionArgs, run: &mut Run) -> Result<()> {
    if matches!(a.solver, Solver::Vqe | Solver::Qaoa) {
        return usage(format!(
            "an auction has continuous capacity variables; use --solver admm --qubo-solver {}",
            a.solver.name()
        ));
    }
    let auction = match &a.instance {
        Some(path) => Auction::read_csv(run.read(path)?.as_bytes())?,
        None => {
            let g = Auction::random(a.random.unwrap_or(16), a.items, a.units, a.max_qty, run.seed)?;
            run.write("auction.csv", g.to_csv());
            g
        }
    };
    let optimum = (auction.bids.len() <= 20).then(|| auction.exhaustive_optimum()).transpose()?;
    let describe = |x: &[u8]| {
        json!({
            "bits": bit_string(x),
            "accepted": (0..x.len()).filter(|&i| x[i] == 1).collect::<Vec<_>>(),
            "profit": auction.profit(x),
            "excess": auction.excess(x),
            "feasible": auction.excess(x) <= 1e-9,
        })
    };
    let mut report = json!({
        "solver": a.solver.name(),
        "bids": auction.bids.len(),
        "items": auction.units.len(),
        "units": auction.units,
        "optimum": optimum.as_ref().map(|(x, _)| describe(x)),
    });
    if a.solver == Solver::BruteForce {
        let Some((x, _)) = &optimum else {
            return Err(qfin_core::Error::Capacity { what: "bid enumeration".into(), required: auction.bids.len(), limit: 20 }.into());
        };
        report["solution"] = describe(x);
        println!("exhaustive optimum: bids {} profit {}", report["solution"]["accepted"], auction.profit(x));
        return run.write_json("result.json", &report);
    }
    let v = &a.variational;
    let solver = match a.qubo_solver {
        QuboSolverArg::BruteForce => QuboSolver::BruteForce,
        QuboSolverArg::Vqe => QuboSolver::Vqe { depth: v.depth, iterations: v.iterations, restarts: v.restarts },
        QuboSolverArg::Qaoa => QuboSolver::Qaoa { p: v.p, iterations: v.iterations, restarts: v.restarts },
    };
    let config = AdmmConfig {
        rho: a.rho,
        beta: a.beta,
        c: a.c,
        mu: a.mu,
        tolerance: a.tolerance,
        max_iter: a.max_iter,
        solver,
        seed: run.seed,
    };
    let problem = admm::build_auction(&auction)?;
    let result = admm::run(&problem, &config)?;
    let best = result.best_iteration();
    report["solution"] = describe(&best.x);
    report["admm"] = json!({
        "config": config,
        "mu": config.mu.unwrap_or_else(|| problem.default_merit_weight()),
        "converged": result.converged,
        "iterations": result.iterations.len(),
        "best_iteration": best.k,
    });
    if run.verbose {
        println!("{:>4} {:>12} {:>12} {:>10} {:>12}  x", "k", "residual", "objective", "violation", "merit");
        for it in &result.iterations {
            println!("{:>4} {:>12.4e} {:>12.4} {:>10.4} {:>12.4}  {}", it.k, it.residual_norm, it.objective, it.violation, it.merit, bit_string(&it.x));
        }
    }
    println!(
        "admm: {} iterations (converged: {}), best at k = {}: bids {} profit {} excess {}",
        result.iterations.len(),
        result.converged,
        best.k,
        report["solution"]["accepted"],
        auction.profit(&best.x),
        auction.excess(&best.x)
    );
    if let Some((x, profit)) = &optimum {
        println!("exhaustive optimum: {} profit {profit}", bit_string(x));
    }
    run.write_json("result.json", &report)?;
    run.write_json("trace.json", &result)?;
    run.write_csv(
        "trace.csv",
        &["k", "residual_norm", "objective", "violation", "merit", "block3_gradient_norm", "bits"],
        result.iterations.iter().map(|it| {
            vec![
                it.k.to_string(),
                f(it.residual_norm),
                f(it.objective),
                f(it.violation),
                f(it.merit),
                f(it.block3_gradient_norm),
                bit_string(&it.x),
            ]
        }),
    )
}

pub fn ml(cmd: &MlCommand, run: &mut Run) -> Result<&'static str> {
    match cmd {
        MlCommand::Synth(a) => synth(a, run).map(|_| "ml synth"),
        MlCommand::Train(a) => train_cmd(a, run).map(|_| "ml train"),
        MlCommand::Eval(a) => eval(a, run).map(|_| "ml eval"),
    }
}

fn dataset_csv(data: &LabeledDataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    Ok(buf)
}

fn label_counts(data: &LabeledDataset) -> (usize, usize) {
    let pos = data.labels().iter().filter(|&&y| y == 1).count();
    (pos, data.len() - pos)
}

fn synth(a: &SynthArgs, run: &mut Run) -> Result<()> {
    let data = match a.kind {
        DatasetKind::Transactions => synthesize_transactions(a.n, run.seed)?,
        DatasetKind::SelfLabeled => {
            let (data, truth) = self_labeled_dataset(a.n, a.features, a.margin, run.seed)?;
            run.write("truth.json", truth.to_json()? + "\n");
            data
        }
    };
    run.write("data.csv", dataset_csv(&data)?);
    let (pos, neg) = label_counts(&data);
    println!("{} records: {pos} positive, {neg} negative", data.len());
    let kind = match a.kind {
        DatasetKind::Transactions => "transactions",
        DatasetKind::SelfLabeled => "self-labeled",
    };
    run.write_json(
        "result.json",
        &json!({ "kind": kind, "records": data.len(), "positive": pos, "negative": neg, "schema": data.schema }),
    )
}

fn model_config(a: &TrainArgs, data: &LabeledDataset) -> Result<ModelConfig> {
    let mut config = match a.encoder {
        Encoder::Plain => ModelConfig::vqc(data.schema.clone())?,
        Encoder::Qrac => {
            let names: Vec<&str> = a.qrac_features.iter().map(String::as_str).collect();
            build_vqc_with_qrac(data.schema.clone(), &names, a.latent)?
        }
    };
    config.latent_qubits = a.latent;
    config.layers = a.layers;
    config.reps = a.reps;
    config.risk = match a.risk {
        RiskArg::CrossEntropy => Risk::CrossEntropy,
        RiskArg::Absolute => Risk::Absolute,
    };
    config.scaling = match a.scaling {
        ScalingArg::MinMax => Scaling::MinMax,
        ScalingArg::Identity => Scaling::Identity,
    };
    config.validate()?;
    Ok(config)
}

fn train_cmd(a: &TrainArgs, run: &mut Run) -> Result<()> {
    let data = LabeledDataset::read_csv(&run.read(&a.data)?)?;
    let config = model_config(a, &data)?;
    let optimizer = OptimizerConfig::spsa(a.iterations, run.seed).with_restarts(a.restarts);
    optimizer.validate()?;
    let (model, report) = train(&data, &config, &optimizer)?;
    let accuracy = model.accuracy(&data)?;
    let name = match a.encoder {
        Encoder::Plain => "vqc",
        Encoder::Qrac => "vqc-qrac",
    };
    println!(
        "{name}: {} qubits, {} parameters, loss {:.4} -> {:.4}, train accuracy {accuracy:.4}",
        config.n_qubits(),
        config.parameter_count() + 1,
        report.initial_loss,
        report.final_loss
    );
    if run.verbose {
        for (k, l) in report.loss_trace.iter().enumerate() {
            println!("{k:>5} {l:.6}");
        }
    }
    let mut result = json!({
        "model": name,
        "qubits": config.n_qubits(),
        "map_qubits": config.map_qubits(),
        "qrac_qubits": config.qrac_qubits(),
        "latent_qubits": config.latent_qubits,
        "parameters": config.parameter_count() + 1,
        "records": data.len(),
        "train_accuracy": accuracy,
        "initial_loss": report.initial_loss,
        "final_loss": report.final_loss,
        "restart_losses": report.restart_losses,
    });
    run.write("model.json", model.to_json()? + "\n");
    run.write_csv(
        "loss.csv",
        &["iteration", "loss"],
        report.loss_trace.iter().enumerate().map(|(k, l)| vec![k.to_string(), f(*l)]),
    )?;
    if let Some(k) = a.cv {
        let methods = vec![
            (name.to_string(), Classifier::Vqc { config, optimizer }),
            ("logistic".to_string(), Classifier::Logistic),
            ("hinge".to_string(), Classifier::Hinge),
        ];
        let cv = cross_validate(&methods, &data, k, run.seed)?;
        print!("{cv}");
        run.write("cv.txt", cv.to_string());
        let mut rows = Vec::new();
        for (m, method) in cv.methods.iter().enumerate() {
            for fold in 0..k {
                rows.push(vec![method.clone(), fold.to_string(), f(cv.train_folds[m][fold]), f(cv.test_folds[m][fold])]);
            }
        }
        run.write_csv("cv.csv", &["method", "fold", "train_accuracy", "test_accuracy"], rows)?;
        result["cv"] = serde_json::to_value(&cv)?;
    }
    run.write_json("result.json", &result)
}

fn eval(a: &EvalArgs, run: &mut Run) -> Result<()> {
    let model = VqcModel::from_json(&run.read(&a.model)?)?;
    let data = LabeledDataset::read_csv(&run.read(&a.data)?)?;
    model.check_schema(&data)?;
    let decisions = model.decisions(&data)?;
    let accuracy = model.accuracy(&data)?;
    let risk = model.empirical_risk(&data, model.config.risk)?;
    println!("{} records, accuracy {accuracy:.4}, risk {risk:.4}", data.len());
    run.write_csv(
        "predictions.csv",
        &["index", "decision", "prediction", "label"],
        decisions.iter().zip(&data.records).enumerate().map(|(i, (d, r))| {
            let pred = if *d >= 0.0 { 1 } else { -1 };
            vec![i.to_string(), f(*d), pred.to_string(), r.label.to_string()]
        }),
    )?;
    let (pos, neg) = label_counts(&data);
    run.write_json(
        "result.json",
        &json!({ "records": data.len(), "positive": pos, "negative": neg, "accuracy": accuracy, "risk": risk }),
    )
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().or_else(|_| usage(format!("bad number {t:?} in --grid")));
    let values = if let [start, stop, step] = s.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return usage("--grid start:stop:step needs step > 0 and stop ≥ start");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() || values.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return usage("--grid amplitudes must lie in [0, 1]");
    }
    Ok(values)
}

pub fn ae(cmd: &AeCommand, run: &mut Run) -> Result<&'static str> {
    let AeCommand::Calibrate(a) = cmd;
    if a.m == 0 || a.m > 8 {
        return usage(format!("--m must lie in 1..=8, got {}", a.m));
    }
    if a.s_max > 16 || a.p_max > 16 {
        return usage("--s-max and --p-max are limited to 16");
    }
    let grid = parse_grid(&a.grid)?;
    let big_m = 1usize << a.m;
    let floor = 8.0 / (PI * PI);
    let mut rows = Vec::with_capacity(grid.len());
    for &amp in &grid {
        let mut c = Circuit::new(1);
        c.push(GateOp::ry(0, 2.0 * amp.sqrt().asin()))?;
        let r = run_ae(&EstimationProblem::new(c, 0)?, a.m)?;
        let bound = error_bound(amp, big_m);
        rows.push((amp, r.mass_within(amp, bound), bound, r.a_estimate));
    }
    let min_coverage = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    println!("{:>8} {:>10} {:>10} {:>10}", "a", "coverage", "bound", "estimate");
    for (amp, mass, bound, est) in &rows {
        println!("{amp:>8.4} {mass:>10.6} {bound:>10.6} {est:>10.6}");
    }
    println!("minimum coverage {min_coverage:.6} (floor 8/π² = {floor:.6})");
    run.write_csv(
        "coverage.csv",
        &["a", "mass_within_bound", "bound", "estimate"],
        rows.iter().map(|(amp, mass, bound, est)| vec![f(*amp), f(*mass), f(*bound), f(*est)]),
    )?;
    let mut eps = Vec::new();
    for s in 1..=a.s_max {
        for p in 1..=a.p_max {
            eps.push(vec![s.to_string(), p.to_string(), f(qpe_failure_probability(s, p))]);
        }
    }
    run.write_csv("epsilon.csv", &["s", "p", "epsilon"], eps)?;
    run.write_json(
        "result.json",
        &json!({
            "m": a.m,
            "floor": floor,
            "min_coverage": min_coverage,
            "all_above_floor": min_coverage >= floor,
            "grid_estimates": (0..big_m).map(|y| estimate_for(y, a.m)).collect::<Vec<_>>(),
            "rows": rows.iter().map(|(amp, mass, bound, est)| json!({"a": amp, "mass_within_bound": mass, "bound": bound, "estimate": est})).collect::<Vec<_>>(),
        }),
    )?;
    Ok("ae calibrate")
}
