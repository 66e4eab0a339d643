//! Multi-start quadratic-penalty maximization of the Hardy value over the
//! two-qubit model.
//!
//! Each restart draws all angles uniformly from `[−π, π]` with its own
//! ChaCha stream `(seed, restart index)`, then climbs a geometric penalty
//! schedule `μ_k = penalty_start · penalty_growth^k`, minimizing
//! `−P_hardy + μ Σ g_k²` with BFGS on analytic gradients. A Gauss–Newton
//! projection onto `g = 0` follows, and a restart counts as converged when
//! every `|g_k| ≤ constraint_tol`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hardy::HardyParadox;
use crate::qubit::model::{expression_with_gradient, probability_with_gradient, QubitModel};
use crate::scenario::BellExpression;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub constraint_tol: f64,
    pub penalty_start: f64,
    pub penalty_growth: f64,
    pub penalty_stages: usize,
    pub inner_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 200,
            seed: 42,
            constraint_tol: 1e-6,
            penalty_start: 10.0,
            penalty_growth: 10.0,
            penalty_stages: 6,
            inner_iters: 200,
        }
    }
}

impl OptimizerConfig {
    /// Defaults with the restart budget scaled to the scenario: 200 restarts
    /// for two settings, 500 beyond.
    pub fn for_settings(n_settings: u16) -> Self {
        let restarts = if n_settings <= 2 { 200 } else { 500 };
        Self {
            restarts,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.constraint_tol > 0.0 && self.constraint_tol.is_finite()) {
            return bad("constraint_tol must be positive and finite");
        }
        if !(self.penalty_start > 0.0 && self.penalty_start.is_finite()) {
            return bad("penalty_start must be positive and finite");
        }
        if !(self.penalty_growth >= 1.0 && self.penalty_growth.is_finite()) {
            return bad("penalty_growth must be at least 1");
        }
        if self.penalty_stages == 0 {
            return bad("penalty_stages must be at least 1");
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub model: QubitModel,
    pub hardy_value: f64,
    pub condition_residuals: Vec<f64>,
    pub restarts_used: usize,
    pub converged: bool,
    /// Restart that produced `model`; `None` for [`refine_from`] results.
    pub best_restart: Option<usize>,
}

impl OptimizationResult {
    pub fn max_residual(&self) -> f64 {
        self.condition_residuals
            .iter()
            .fold(0.0, |m, r| f64::max(m, r.abs()))
    }
}

/// Objective and constraints of one paradox over the parameter vector.
struct Problem<'a> {
    paradox: &'a HardyParadox,
    dim: usize,
}

impl<'a> Problem<'a> {
    fn new(paradox: &'a HardyParadox) -> Self {
        let n = usize::from(paradox.scenario().n_settings());
        Self {
            paradox,
            dim: 2 * n + 1,
        }
    }

    fn objective(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let n = (self.dim - 1) / 2;
        let e = self.paradox.hardy_term();
        let (xi, yi) = (usize::from(e.x), usize::from(e.y));
        let (v, dt, da, db) = probability_with_gradient(p[0], p[xi], p[n + yi], e.i, e.j);
        let mut g = vec![0.0; self.dim];
        g[0] = dt;
        g[xi] = da;
        g[n + yi] = db;
        (v, g)
    }

    fn constraint(expr: &BellExpression, target: f64, p: &[f64]) -> (f64, Vec<f64>) {
        let (v, g) = expression_with_gradient(expr, p);
        (v - target, g)
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.paradox
            .conditions()
            .iter()
            .map(|c| Self::constraint(&c.expression, c.target, p).0)
            .collect()
    }

    /// `−f + μ Σ g²` and its gradient.
    fn penalized(&self, p: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let (f, mut grad) = self.objective(p);
        for v in grad.iter_mut() {
            *v = -*v;
        }
        let mut value = -f;
        for c in self.paradox.conditions() {
            let (g, dg) = Self::constraint(&c.expression, c.target, p);
            value += mu * g * g;
            for (out, d) in grad.iter_mut().zip(&dg) {
                *out += 2.0 * mu * g * d;
            }
        }
        (value, grad)
    }

    /// Minimum-norm Gauss–Newton steps toward `g(p) = 0`.
    fn restore_feasibility(&self, p: &mut Vec<f64>) {
        let conds = self.paradox.conditions();
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
        for _ in 0..200 {
            let lin: Vec<(f64, Vec<f64>)> = conds
                .iter()
                .map(|c| Self::constraint(&c.expression, c.target, p))
                .collect();
            let g: Vec<f64> = lin.iter().map(|(v, _)| *v).collect();
            let current = norm(&g);
            if current <= 1e-30 {
                return;
            }
            let k = g.len();
            let mut jjt = vec![0.0; k * k];
            for a in 0..k {
                for b in 0..k {
                    jjt[a * k + b] = dot(&lin[a].1, &lin[b].1);
                }
                jjt[a * k + a] += 1e-300;
            }
            let Some(lambda) = solve_small(jjt, g.clone(), k) else {
                return;
            };
            let mut step = vec![0.0; self.dim];
            for (l, (_, j)) in lambda.iter().zip(&lin) {
                for (s, d) in step.iter_mut().zip(j) {
                    *s -= l * d;
                }
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-6 {
                let trial: Vec<f64> = p.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                if norm(&self.residuals(&trial)) < current {
                    *p = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return;
            }
        }
    }

    /// Penalty schedule followed by projection; returns the final point.
    fn local_solve(&self, start: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
        let mut p = start.to_vec();
        let mut mu = cfg.penalty_start;
        for _ in 0..cfg.penalty_stages {
            p = bfgs(|q| self.penalized(q, mu), p, cfg.inner_iters);
            mu *= cfg.penalty_growth;
        }
        self.restore_feasibility(&mut p);
        p
    }

    fn result(
        &self,
        p: &[f64],
        cfg: &OptimizerConfig,
        restarts_used: usize,
        best_restart: Option<usize>,
    ) -> OptimizationResult {
        let model = QubitModel::from_params(p).expect("dimension fixed by the problem");
        let q = model.params();
        let hardy_value = self.objective(&q).0;
        let condition_residuals = self.residuals(&q);
        let converged = condition_residuals
            .iter()
            .all(|r| r.abs() <= cfg.constraint_tol);
        OptimizationResult {
            model,
            hardy_value,
            condition_residuals,
            restarts_used,
            converged,
            best_restart,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting for the tiny constraint
/// systems (one row per Hardy condition).
fn solve_small(mut a: Vec<f64>, mut b: Vec<f64>, k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        let piv =
            (col..k).max_by(|&r, &s| a[r * k + col].abs().total_cmp(&a[s * k + col].abs()))?;
        if a[piv * k + col] == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            b.swap(piv, col);
        }
        for r in col + 1..k {
            let f = a[r * k + col] / a[col * k + col];
            for c in col..k {
                a[r * k + c] -= f * a[col * k + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r * k + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * k + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// BFGS on the inverse Hessian with Armijo backtracking.
fn bfgs(f: impl Fn(&[f64]) -> (f64, Vec<f64>), mut x: Vec<f64>, max_iter: usize) -> Vec<f64> {
    let d = x.len();
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            h[i * d + i] = 1.0;
        }
    };
    let mut h = vec![0.0; d * d];
    identity(&mut h);
    let (mut fx, mut g) = f(&x);
    let mut stall = 0;
    for _ in 0..max_iter {
        if g.iter().all(|v| v.abs() < 1e-12) {
            break;
        }
        let mut dir: Vec<f64> = (0..d).map(|i| -dot(&h[i * d..(i + 1) * d], &g)).collect();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            identity(&mut h);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&dir).map(|(a, s)| a + t * s).collect();
            let (ft, gt) = f(&xt);
            if ft <= fx + 1e-4 * t * slope {
                next = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn)) = next else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            let hy: Vec<f64> = (0..d).map(|i| dot(&h[i * d..(i + 1) * d], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let improvement = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if improvement <= 1e-16 * (1.0 + fx.abs()) {
            stall += 1;
            if stall >= 3 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    x
}

fn restart_start(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..dim).map(|_| rng.random_range(-PI..=PI)).collect()
}

/// Better-than ordering for reductions: converged beats unconverged, then
/// higher Hardy value (converged) or smaller residual (unconverged). Ties
/// keep the earlier restart.
fn better(candidate: &OptimizationResult, incumbent: &OptimizationResult) -> bool {
    match (candidate.converged, incumbent.converged) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => candidate.hardy_value > incumbent.hardy_value,
        (false, false) => candidate.max_residual() < incumbent.max_residual(),
    }
}

/// Global search for the largest Hardy value compatible with the paradox's
/// conditions.
pub fn maximize_hardy(paradox: &HardyParadox, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let problem = Problem::new(paradox);
    let run = |r: usize| {
        let start = restart_start(cfg.seed, r, problem.dim);
        let p = problem.local_solve(&start, cfg);
        problem.result(&p, cfg, cfg.restarts, Some(r))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<OptimizationResult> = {
        use rayon::prelude::*;
        (0..cfg.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<OptimizationResult> = (0..cfg.restarts).map(run).collect();

    let best = results
        .into_iter()
        .reduce(|best, cand| if better(&cand, &best) { cand } else { best })
        .expect("at least one restart");
    Ok(best)
}

/// Local constrained polish from `start`. If `start` already satisfies the
/// conditions, the result is never worse than it by more than `1e-9`.
pub fn refine_from(
    paradox: &HardyParadox,
    start: &QubitModel,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    if start.scenario() != paradox.scenario() {
        return Err(Error::ScenarioMismatch {
            left: paradox.scenario(),
            right: start.scenario(),
        });
    }
    let problem = Problem::new(paradox);
    let initial = problem.result(&start.params(), cfg, 1, None);
    let p = problem.local_solve(&start.params(), cfg);
    let refined = problem.result(&p, cfg, 1, None);
    if initial.converged && (!refined.converged || refined.hardy_value < initial.hardy_value - 1e-9)
    {
        return Ok(initial);
    }
    Ok(refined)
}

/// Infinity norm of the projected gradient `∇f − Jᵀλ`, with `λ` the
/// least-squares multipliers. Small at constrained stationary points.
pub fn stationarity(paradox: &HardyParadox, model: &QubitModel) -> Result<f64> {
    if model.scenario() != paradox.scenario() {
        return Err(Error::ScenarioMismatch {
            left: paradox.scenario(),
            right: model.scenario(),
        });
    }
    let problem = Problem::new(paradox);
    let p = model.params();
    let (_, gf) = problem.objective(&p);
    let jac: Vec<Vec<f64>> = paradox
        .conditions()
        .iter()
        .map(|c| Problem::constraint(&c.expression, c.target, &p).1)
        .collect();
    let k = jac.len();
    let mut jjt = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            jjt[a * k + b] = dot(&jac[a], &jac[b]);
        }
    }
    let rhs: Vec<f64> = jac.iter().map(|j| dot(j, &gf)).collect();
    let lambda = solve_small(jjt, rhs, k).ok_or_else(|| {
        Error::InvalidConfig(format!("degenerate constraint Jacobian at {:?}", p))
    })?;
    let mut r = gf;
    for (l, j) in lambda.iter().zip(&jac) {
        for (v, d) in r.iter_mut().zip(j) {
            *v -= l * d;
        }
    }
    Ok(r.iter().fold(0.0, |m, v| f64::max(m, v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::realigned_hardy;

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = [
            OptimizerConfig {
                restarts: 0,
                ..Default::default()
            },
            OptimizerConfig {
                constraint_tol: 0.0,
                ..Default::default()
            },
            OptimizerConfig {
                penalty_growth: 0.5,
                ..Default::default()
            },
            OptimizerConfig {
                penalty_stages: 0,
                ..Default::default()
            },
            OptimizerConfig {
                inner_iters: 0,
                ..Default::default()
            },
            OptimizerConfig {
                penalty_start: f64::INFINITY,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
            assert!(maximize_hardy(&realigned_hardy(2).unwrap(), &cfg).is_err());
        }
        assert_eq!(OptimizerConfig::for_settings(2).restarts, 200);
        assert_eq!(OptimizerConfig::for_settings(4).restarts, 500);
    }

    #[test]
    fn restart_streams_are_reproducible_and_distinct() {
        assert_eq!(restart_start(1, 3, 5), restart_start(1, 3, 5));
        assert_ne!(restart_start(1, 3, 5), restart_start(1, 4, 5));
        assert!(restart_start(9, 0, 9)
            .iter()
            .all(|a| (-PI..=PI).contains(a)));
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let rosen = |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            let f = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
            let g = vec![
                -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
                200.0 * (y - x * x),
            ];
            (f, g)
        };
        let x = bfgs(rosen, vec![-1.2, 1.0], 500);
        assert!(
            (x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6,
            "{x:?}"
        );
    }

    #[test]
    fn solve_small_system() {
        let x = solve_small(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve_small(vec![0.0; 4], vec![1.0, 1.0], 2).is_none());
    }
}
