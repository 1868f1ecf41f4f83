//! Derivative-free minimisers: SPSA and Nelder–Mead.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::arg;
use crate::rng;
use crate::Result;

/// Simultaneous perturbation stochastic approximation with gains
/// `a_k = a/(k+1+A)^α`, `c_k = c/(k+1)^γ`, `A = 0.1·iterations`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaConfig {
    pub iterations: usize,
    /// `None` calibrates `a` so the first update moves parameters by about [`CALIBRATED_STEP`].
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

pub const CALIBRATED_STEP: f64 = 0.2;

fn default_c() -> f64 {
    0.1
}
fn default_alpha() -> f64 {
    0.602
}
fn default_gamma() -> f64 {
    0.101
}

impl SpsaConfig {
    pub fn new(iterations: usize) -> Self {
        Self { iterations, a: None, c: default_c(), alpha: default_alpha(), gamma: default_gamma() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NelderMeadConfig {
    pub iterations: usize,
    /// Edge length of the initial simplex along each axis.
    #[serde(default = "default_simplex_step")]
    pub initial_step: f64,
}

fn default_simplex_step() -> f64 {
    0.5
}

impl NelderMeadConfig {
    pub fn new(iterations: usize) -> Self {
        Self { iterations, initial_step: default_simplex_step() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Spsa(SpsaConfig),
    NelderMead(NelderMeadConfig),
}

impl Method {
    pub fn iterations(&self) -> usize {
        match self {
            Method::Spsa(c) => c.iterations,
            Method::NelderMead(c) => c.iterations,
        }
    }
}

/// Optimiser, run seed and number of independent random starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub seed: u64,
    pub restarts: usize,
}

impl OptimizerConfig {
    pub fn spsa(iterations: usize, seed: u64) -> Self {
        Self { method: Method::Spsa(SpsaConfig::new(iterations)), seed, restarts: 1 }
    }

    pub fn nelder_mead(iterations: usize, seed: u64) -> Self {
        Self { method: Method::NelderMead(NelderMeadConfig::new(iterations)), seed, restarts: 1 }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.iterations() == 0 {
            return arg("optimizer needs at least one iteration");
        }
        if self.restarts == 0 {
            return arg("need at least one restart");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Best value seen up to and including each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

struct Tracker<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    best_x: Vec<f64>,
    best_value: f64,
    evaluations: usize,
}

impl<'a> Tracker<'a> {
    fn new(f: &'a mut dyn FnMut(&[f64]) -> f64, x0: &[f64]) -> Self {
        let mut t = Self { f, best_x: x0.to_vec(), best_value: f64::INFINITY, evaluations: 0 };
        t.eval(x0);
        t
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        self.evaluations += 1;
        if v < self.best_value {
            self.best_value = v;
            self.best_x = x.to_vec();
        }
        v
    }

    fn finish(self, trace: Vec<f64>) -> OptimizeResult {
        OptimizeResult { best_x: self.best_x, best_value: self.best_value, trace, evaluations: self.evaluations }
    }
}

/// Minimise `f` from `x0` with SPSA; perturbations are drawn from `rng`.
pub fn spsa(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], cfg: &SpsaConfig, rng: &mut impl Rng) -> OptimizeResult {
    let d = x0.len();
    let mut t = Tracker::new(f, x0);
    if d == 0 {
        let trace = vec![t.best_value; cfg.iterations];
        return t.finish(trace);
    }
    let big_a = 0.1 * cfg.iterations as f64;
    let mut x = x0.to_vec();
    let delta = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        (0..d).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
    };
    let gradient = |t: &mut Tracker, x: &[f64], ck: f64, dv: &[f64]| -> Vec<f64> {
        let plus: Vec<f64> = x.iter().zip(dv).map(|(xi, di)| xi + ck * di).collect();
        let minus: Vec<f64> = x.iter().zip(dv).map(|(xi, di)| xi - ck * di).collect();
        let diff = (t.eval(&plus) - t.eval(&minus)) / (2.0 * ck);
        dv.iter().map(|di| diff / di).collect()
    };
    let a = match cfg.a {
        Some(a) => a,
        None => {
            let samples = 5;
            let mut mag = 0.0;
            for _ in 0..samples {
                let dv = delta(rng);
                mag += gradient(&mut t, &x, cfg.c, &dv)[0].abs();
            }
            mag /= samples as f64;
            if mag > 0.0 {
                CALIBRATED_STEP * (1.0 + big_a).powf(cfg.alpha) / mag
            } else {
                CALIBRATED_STEP
            }
        }
    };
    let mut trace = Vec::with_capacity(cfg.iterations);
    for k in 0..cfg.iterations {
        let ak = a / (k as f64 + 1.0 + big_a).powf(cfg.alpha);
        let ck = cfg.c / (k as f64 + 1.0).powf(cfg.gamma);
        let dv = delta(rng);
        let g = gradient(&mut t, &x, ck, &dv);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= ak * gi;
        }
        t.eval(&x);
        trace.push(t.best_value);
    }
    t.finish(trace)
}

/// Minimise `f` from `x0` with the Nelder–Mead simplex method.
pub fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], cfg: &NelderMeadConfig) -> OptimizeResult {
    let d = x0.len();
    let mut t = Tracker::new(f, x0);
    if d == 0 {
        let trace = vec![t.best_value; cfg.iterations];
        return t.finish(trace);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), t.best_value)];
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += cfg.initial_step;
        let fv = t.eval(&v);
        simplex.push((v, fv));
    }
    let lerp = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect() };
    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[d].clone();
        let centroid: Vec<f64> =
            (0..d).map(|j| simplex[..d].iter().map(|(v, _)| v[j]).sum::<f64>() / d as f64).collect();
        // Reflection, expansion and contractions along centroid → worst.
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = t.eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = t.eval(&expanded);
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let (candidate, fc) = if fr < worst.1 {
                let c = lerp(&centroid, &reflected, 0.5);
                let fc = t.eval(&c);
                (c, fc)
            } else {
                let c = lerp(&centroid, &worst.0, 0.5);
                let fc = t.eval(&c);
                (c, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (candidate, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v = lerp(&best, &vertex.0, 0.5);
                    let fv = t.eval(&v);
                    *vertex = (v, fv);
                }
            }
        }
        trace.push(t.best_value);
    }
    t.finish(trace)
}

/// Run `config.restarts` independent starts drawn uniformly from `[−π, π]^dim`
/// and return every run in restart order. Restarts execute on separate threads;
/// each owns its random streams, so the output does not depend on scheduling.
pub fn minimize_with_restarts<F>(make_objective: F, dim: usize, config: &OptimizerConfig) -> Result<Vec<OptimizeResult>>
where
    F: Fn(u64) -> Box<dyn FnMut(&[f64]) -> f64 + Send> + Sync,
{
    config.validate()?;
    let run = |r: usize| {
        let r = r as u64;
        let mut init = rng::indexed(config.seed, "restart-init", r);
        let x0: Vec<f64> = (0..dim).map(|_| init.random_range(-PI..PI)).collect();
        let mut f = make_objective(r);
        match &config.method {
            Method::Spsa(c) => spsa(&mut *f, &x0, c, &mut rng::indexed(config.seed, "spsa", r)),
            Method::NelderMead(c) => nelder_mead(&mut *f, &x0, c),
        }
    };
    if config.restarts == 1 {
        return Ok(vec![run(0)]);
    }
    Ok(std::thread::scope(|s| {
        let handles: Vec<_> = (0..config.restarts).map(|r| s.spawn(move || run(r))).collect();
        handles.into_iter().map(|h| h.join().expect("restart thread panicked")).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.3).powi(2)).sum()
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let r = nelder_mead(&mut quadratic, &[1.0, -1.0, 2.0], &NelderMeadConfig::new(400));
        assert!(r.best_value < 1e-10, "{}", r.best_value);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn spsa_descends_on_a_quadratic() {
        let mut g = rng::substream(3, "spsa");
        let r = spsa(&mut quadratic, &[1.0, -1.0, 2.0], &SpsaConfig::new(500), &mut g);
        assert!(r.best_value < 1e-3, "{}", r.best_value);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.trace.len(), 500);
    }

    #[test]
    fn zero_dimensional_problems_evaluate_once() {
        let mut f = |_: &[f64]| 4.0;
        let r = nelder_mead(&mut f, &[], &NelderMeadConfig::new(3));
        assert_eq!((r.best_value, r.evaluations), (4.0, 1));
    }

    #[test]
    fn restarts_are_reproducible() {
        let cfg = OptimizerConfig::spsa(50, 9).with_restarts(3);
        let make = |_| Box::new(|x: &[f64]| quadratic(x)) as Box<dyn FnMut(&[f64]) -> f64 + Send>;
        let a = minimize_with_restarts(make, 2, &cfg).unwrap();
        let b = minimize_with_restarts(make, 2, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].best_x, a[1].best_x);
        assert!(minimize_with_restarts(make, 2, &OptimizerConfig::spsa(0, 1)).is_err());
    }
}
