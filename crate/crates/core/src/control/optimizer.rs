//! Multi-start projected L-BFGS with a Nelder-Mead fallback.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{Cost, Objective, ObjectiveSpec};
use super::waveform::{Basis, Waveform};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub n_starts: usize,
    pub max_iters: usize,
    /// Stop when the relative change of the objective over one accepted step
    /// falls below this.
    pub tol: f64,
    pub seed: u64,
    pub g_max: f64,
    pub basis: Basis,
    /// Curvature pairs kept by L-BFGS.
    pub memory: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            n_starts: 4,
            max_iters: 200,
            tol: 1e-10,
            seed: 0,
            g_max: 5.0,
            basis: Basis::PiecewiseLinear { knots: 64 },
            memory: 10,
        }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::invalid("n_starts", "must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol", format!("must be >= 0, got {}", self.tol)));
        }
        if !(self.g_max >= 0.0) || !self.g_max.is_finite() {
            return Err(Error::invalid("g_max", format!("must be >= 0, got {}", self.g_max)));
        }
        if self.memory == 0 {
            return Err(Error::invalid("memory", "must be at least 1"));
        }
        Ok(())
    }
}

/// How one start ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub index: usize,
    pub initial_value: Option<f64>,
    pub final_value: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_waveform: Waveform,
    pub best_value: f64,
    pub iterations: usize,
    /// Objective after each accepted step of the winning start.
    pub objective_trace: Vec<f64>,
    /// Objective evaluations over all starts, finite-difference ones included.
    pub evaluation_count: usize,
    pub converged: bool,
    pub start_index: usize,
    pub starts: Vec<StartReport>,
}

/// Cost is minimised as `ln(J + LOG_FLOOR)`, which keeps the curvature of
/// objectives spanning several decades well scaled.
const LOG_FLOOR: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

struct Outcome {
    waveform: Waveform,
    value: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    evaluations: usize,
}

/// Deterministic starting waveforms: zero, constant `g_max/2`, then uniform
/// random coefficients from a per-start seeded stream.
pub fn initial_waveforms(template: &Waveform, n_starts: usize, seed: u64) -> Vec<Waveform> {
    (0..n_starts)
        .map(|i| {
            let mut w = template.clone();
            let b = template.bound;
            match i {
                0 => w.coefficients.iter_mut().for_each(|c| *c = 0.0),
                1 => match w.basis {
                    Basis::PiecewiseLinear { .. } => w.coefficients.iter_mut().for_each(|c| *c = 0.5 * b),
                    // sine series of a constant: (4/π)/m on odd harmonics, scaled into the box
                    Basis::FourierSine { .. } => {
                        let raw: Vec<f64> = (1..=w.coefficients.len())
                            .map(|m| if m % 2 == 1 { 4.0 / (std::f64::consts::PI * m as f64) } else { 0.0 })
                            .collect();
                        let total: f64 = raw.iter().sum();
                        for (c, r) in w.coefficients.iter_mut().zip(raw) {
                            *c = 0.5 * b * r / total;
                        }
                    }
                },
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
                    let n = w.coefficients.len() as f64;
                    for c in w.coefficients.iter_mut() {
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        *c = match template.basis {
                            Basis::PiecewiseLinear { .. } => u * b,
                            Basis::FourierSine { .. } => u * b / n,
                        };
                    }
                }
            }
            w.project();
            w
        })
        .collect()
}

/// Minimises `cost` over waveforms shaped like `template`.
pub fn optimize_with<C: Cost + ?Sized>(cost: &C, template: &Waveform, options: &OptimizeOptions) -> Result<OptimizationResult> {
    options.validate()?;
    if template.bound == 0.0 || template.free_indices().is_empty() {
        let mut w = template.clone();
        w.coefficients.iter_mut().for_each(|c| *c = 0.0);
        let value = cost.value(&w)?;
        return Ok(OptimizationResult {
            best_waveform: w,
            best_value: value,
            iterations: 0,
            objective_trace: vec![value],
            evaluation_count: 1,
            converged: true,
            start_index: 0,
            starts: vec![StartReport {
                index: 0,
                initial_value: Some(value),
                final_value: Some(value),
                iterations: 0,
                converged: true,
                failure: None,
            }],
        });
    }
    let starts = initial_waveforms(template, options.n_starts, options.seed);
    let outcomes: Vec<(Option<f64>, Result<Outcome>)> = starts
        .par_iter()
        .map(|w0| {
            let initial = cost.value(w0).ok();
            (initial, run_start(cost, w0, options))
        })
        .collect();
    let mut reports = Vec::with_capacity(outcomes.len());
    let mut best: Option<(usize, Outcome)> = None;
    let mut evaluations = 0;
    for (i, (initial, out)) in outcomes.into_iter().enumerate() {
        evaluations += 1;
        match out {
            Ok(o) => {
                evaluations += o.evaluations;
                reports.push(StartReport {
                    index: i,
                    initial_value: initial,
                    final_value: Some(o.value),
                    iterations: o.iterations,
                    converged: o.converged,
                    failure: None,
                });
                // strict comparison keeps the lowest index on ties
                if best.as_ref().is_none_or(|(_, b)| o.value < b.value) {
                    best = Some((i, o));
                }
            }
            Err(e) => reports.push(StartReport {
                index: i,
                initial_value: initial,
                final_value: None,
                iterations: 0,
                converged: false,
                failure: Some(e.to_string()),
            }),
        }
    }
    let (start_index, o) = best.ok_or(Error::AllStartsFailed(options.n_starts))?;
    let verified = cost.value(&o.waveform)?;
    evaluations += 1;
    Ok(OptimizationResult {
        best_waveform: o.waveform,
        best_value: verified,
        iterations: o.iterations,
        objective_trace: o.trace,
        evaluation_count: evaluations,
        converged: o.converged,
        start_index,
        starts: reports,
    })
}

/// Builds the objective and template for `config` and optimizes it.
pub fn optimize(config: &SystemConfig<f64>, spec: ObjectiveSpec, options: &OptimizeOptions) -> Result<OptimizationResult> {
    let objective = Objective::from_config(config, spec)?;
    let template = template_for(&spec, options)?;
    optimize_with(&objective, &template, options)
}

/// Zero waveform over the objective's control span. Cooling pins `g(0) = 0`.
pub fn template_for(spec: &ObjectiveSpec, options: &OptimizeOptions) -> Result<Waveform> {
    match *spec {
        ObjectiveSpec::Terminal { t_cool } => Waveform::zeros(options.basis, (0.0, t_cool), options.g_max, true),
        ObjectiveSpec::MaintenanceAverage { t_start, t_end, .. } => {
            Waveform::zeros(options.basis, (t_start, t_end), options.g_max, false)
        }
    }
}

/// Box-constrained problem in the free coordinates of a template.
struct Problem<'a, C: Cost + ?Sized> {
    cost: &'a C,
    template: &'a Waveform,
    free: Vec<usize>,
    bound: f64,
    evaluations: usize,
}

impl<C: Cost + ?Sized> Problem<'_, C> {
    fn waveform(&self, x: &[f64]) -> Waveform {
        let mut w = self.template.clone();
        for (&k, &v) in self.free.iter().zip(x) {
            w.coefficients[k] = v;
        }
        w
    }

    fn project(&self, x: &mut [f64]) {
        for v in x {
            *v = v.clamp(-self.bound, self.bound);
        }
    }

    /// `(J, ln(J + floor))`; infeasible or failed points map to `+∞`.
    fn value(&mut self, x: &[f64]) -> (f64, f64) {
        self.evaluations += 1;
        match self.cost.value(&self.waveform(x)) {
            Ok(j) if j.is_finite() => (j, (j + LOG_FLOOR).ln()),
            _ => (f64::INFINITY, f64::INFINITY),
        }
    }

    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
        self.evaluations += 1 + 2 * self.free.len();
        let (j, grad) = self.cost.value_and_gradient(&self.waveform(x))?;
        if !j.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        let scale = 1.0 / (j + LOG_FLOOR);
        let g = self.free.iter().map(|&k| grad[k] * scale).collect();
        Ok((j, (j + LOG_FLOOR).ln(), g))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn run_start<C: Cost + ?Sized>(cost: &C, w0: &Waveform, options: &OptimizeOptions) -> Result<Outcome> {
    let free: Vec<usize> = w0.free_indices().collect();
    let mut p = Problem {
        cost,
        template: w0,
        free,
        bound: w0.bound,
        evaluations: 0,
    };
    let mut x: Vec<f64> = p.free.iter().map(|&k| w0.coefficients[k]).collect();
    p.project(&mut x);
    let (mut j, mut f, mut g) = p.value_and_gradient(&x)?;
    let mut trace = vec![j];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut failures = 0;
    let mut converged = false;
    let mut iterations = 0;
    let b = p.bound;
    while iterations < options.max_iters {
        iterations += 1;
        // coordinates held at a bound by the gradient are frozen for this step
        let active: Vec<bool> = x
            .iter()
            .zip(&g)
            .map(|(&xi, &gi)| !((xi <= -b && gi > 0.0) || (xi >= b && gi < 0.0)))
            .collect();
        let gm: Vec<f64> = g.iter().zip(&active).map(|(&gi, &a)| if a { gi } else { 0.0 }).collect();
        if gm.iter().all(|v| *v == 0.0) {
            converged = true;
            break;
        }
        let mut d = two_loop(&gm, &memory);
        for (di, &a) in d.iter_mut().zip(&active) {
            if !a {
                *di = 0.0;
            }
        }
        if !(dot(&d, &gm) < 0.0) {
            memory.clear();
            d = gm.iter().map(|v| -v).collect();
        }
        let step = if memory.is_empty() {
            let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (0.25 * b / dmax).min(1.0)
        } else {
            1.0
        };
        match line_search(&mut p, &x, f, &g, &d, step) {
            Some((xn, jn, _)) => {
                failures = 0;
                let (jg, fg, gn) = p.value_and_gradient(&xn)?;
                debug_assert_eq!(jg, jn);
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    if memory.len() == options.memory {
                        memory.pop_front();
                    }
                    memory.push_back((s, y));
                }
                let rel = (j - jg).abs() / j.abs().max(f64::MIN_POSITIVE);
                x = xn;
                j = jg;
                f = fg;
                g = gn;
                trace.push(j);
                if rel < options.tol {
                    converged = true;
                    break;
                }
            }
            None => {
                failures += 1;
                memory.clear();
                if failures >= 2 {
                    let budget = 20 * (x.len() + 1);
                    match nelder_mead(&mut p, &x, f, budget, options.tol) {
                        Some((xn, jn, _)) if jn < j => {
                            let (jg, fg, gn) = p.value_and_gradient(&xn)?;
                            x = xn;
                            j = jg;
                            f = fg;
                            g = gn;
                            trace.push(j);
                            failures = 0;
                        }
                        _ => {
                            converged = true;
                            break;
                        }
                    }
                }
            }
        }
    }
    let waveform = p.waveform(&x);
    Ok(Outcome {
        waveform,
        value: j,
        trace,
        iterations,
        converged,
        evaluations: p.evaluations,
    })
}

/// L-BFGS two-loop recursion for `-H g`.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y), (a, rho)) in memory.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Backtracking along the projected path `P(x + α d)` with a sufficient
/// decrease test. Returns the accepted point, `J` and `ln J`.
fn line_search<C: Cost + ?Sized>(
    p: &mut Problem<'_, C>,
    x: &[f64],
    f: f64,
    g: &[f64],
    d: &[f64],
    mut alpha: f64,
) -> Option<(Vec<f64>, f64, f64)> {
    for _ in 0..MAX_BACKTRACKS {
        let mut xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        p.project(&mut xn);
        if xn == x {
            return None;
        }
        let moved: Vec<f64> = xn.iter().zip(x).map(|(a, b)| a - b).collect();
        let (jn, fn_) = p.value(&xn);
        if fn_ < f && fn_ <= f + ARMIJO * dot(g, &moved) {
            return Some((xn, jn, fn_));
        }
        alpha *= 0.5;
    }
    None
}

/// Box-projected Nelder-Mead on `ln J`. Returns the best vertex if it
/// improves on the start.
fn nelder_mead<C: Cost + ?Sized>(
    p: &mut Problem<'_, C>,
    x0: &[f64],
    f0: f64,
    budget: usize,
    tol: f64,
) -> Option<(Vec<f64>, f64, f64)> {
    let n = x0.len();
    let b = p.bound;
    let delta = 0.1 * b;
    let mut simplex: Vec<(Vec<f64>, f64, f64)> = Vec::with_capacity(n + 1);
    let (j0, _) = p.value(x0);
    simplex.push((x0.to_vec(), j0, f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] + delta <= b { v[i] + delta } else { v[i] - delta };
        let (j, f) = p.value(&v);
        simplex.push((v, j, f));
    }
    let mut used = n + 1;
    let point = |c: &[f64], w: &[f64], t: f64, p: &Problem<'_, C>| {
        let mut v: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect();
        p.project(&mut v);
        v
    };
    while used < budget {
        simplex.sort_by(|a, b| a.2.total_cmp(&b.2));
        let spread = (simplex[n].2 - simplex[0].2).abs();
        if spread <= tol * simplex[0].2.abs().max(1.0) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _, _) in &simplex[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflect = point(&centroid, &worst, -1.0, p);
        let (jr, fr) = p.value(&reflect);
        used += 1;
        if fr < simplex[0].2 {
            let expand = point(&centroid, &worst, -2.0, p);
            let (je, fe) = p.value(&expand);
            used += 1;
            simplex[n] = if fe < fr { (expand, je, fe) } else { (reflect, jr, fr) };
        } else if fr < simplex[n - 1].2 {
            simplex[n] = (reflect, jr, fr);
        } else {
            let contract = point(&centroid, &worst, 0.5, p);
            let (jc, fc) = p.value(&contract);
            used += 1;
            if fc < simplex[n].2 {
                simplex[n] = (contract, jc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v = point(&best, &vertex.0, 0.5, p);
                    let (j, f) = p.value(&v);
                    *vertex = (v, j, f);
                    used += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.2.total_cmp(&b.2));
    let best = simplex.swap_remove(0);
    (best.2 < f0).then_some(best)
}
