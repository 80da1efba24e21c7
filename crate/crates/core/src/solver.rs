//! Maximization of the nonlinear Kantorovich functional
//! `K(ψ) = ∫ F(ψ^c) dσ + Σ_i a_i G(ψ_i)` over discrete potentials, and
//! recovery of the convex body from the maximizer.
//!
//! On the weighted Voronoi cell `V_i` one has `ψ^c(η) = −ln ⟨p_i, η⟩` with
//! `p_i = e^{ψ_i} ξ_i`, hence `∂K/∂ψ_i = a_i g(ψ_i) − ∫_{V_i} f(φ) dσ`. At a
//! maximizer this is the pushforward identity `T_#(cosh^{m+1}h σ) = cosh(r) μ`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::cells::CellComplex;
use crate::convex::{panel_for, HyperbolicPolytope};
use crate::ctransform::{PotentialVector, PSI_FLOOR};
use crate::error::{Error, Result};
use crate::functions::{f_big_tanh, f_small_tanh, g_big, g_small};
use crate::geometry::{artanh_with_complement, dot};
use crate::measures::{
    check_conditions, CheckMode, ConditionReport, DiscreteMeasure, EXHAUSTIVE_LIMIT,
};
use crate::quadrature::{build_grid, Adaptive, QuadratureGrid, DEFAULT_LEVEL};
use crate::scalar::{compensated_sum, sphere_volume, CompensatedSum, Scalar};

/// How the sphere integrals in `K` and its gradient are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    /// Exact cell boundaries with adaptive Gauss–Legendre panels.
    #[default]
    Resolved,
    /// Node weights of the grid assigned to the argmin cell, ties split.
    Lumped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid_level: u32,
    /// Absolute gradient tolerance; `None` means `1e-8 μ(S^m)`.
    pub tol_grad: Option<f64>,
    /// Relative Euler–Lagrange residual tolerance.
    pub tol_el: f64,
    pub max_iter: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub psi_floor: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Skip the condition check (experiments with invalid measures).
    pub force: bool,
    pub discretization: Discretization,
    /// Alexandrov check mode for the precondition; `None` picks exhaustive
    /// where allowed and sampled otherwise.
    pub check_mode: Option<CheckMode>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_level: DEFAULT_LEVEL,
            tol_grad: None,
            tol_el: 1e-6,
            max_iter: 5000,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            psi_floor: PSI_FLOOR,
            seed: 0,
            restarts: 3,
            force: false,
            discretization: Discretization::Resolved,
            check_mode: None,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        let pos = [
            ("tol_el", self.tol_el),
            ("armijo_c1", self.armijo_c1),
            ("initial_step", self.initial_step),
            ("psi_floor", self.psi_floor),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if let Some(t) = self.tol_grad {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument("tol_grad must be positive".into()));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument(
                "backtrack must lie in (0, 1)".into(),
            ));
        }
        if self.psi_floor < PSI_FLOOR {
            return Err(Error::InvalidArgument(format!(
                "psi_floor below {PSI_FLOOR:e}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<S> {
    pub psi: PotentialVector<S>,
    /// `K` after every accepted step (index 0 is the start of the best run).
    pub k_history: Vec<f64>,
    /// `‖∇K‖∞` alongside `k_history`.
    pub grad_history: Vec<f64>,
    pub el_residuals: Vec<f64>,
    pub gradient: Vec<f64>,
    /// `None` when the final potential does not define a polytope.
    pub body: Option<HyperbolicPolytope<S>>,
    pub body_error: Option<String>,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the run that produced this report (0 is the unperturbed start).
    pub run: usize,
    pub tol_grad: f64,
    pub conditions: Option<ConditionReport>,
    /// Indices held at `−psi_floor` by the projection at the end.
    pub clamped: Vec<usize>,
    pub config: SolverConfig,
    pub wall_time: f64,
}

/// `K`, its gradient and the residuals for one potential.
#[derive(Debug, Clone)]
pub struct Evaluation<S> {
    pub k: S,
    pub gradient: Vec<S>,
    pub el_residuals: Vec<S>,
}

fn check_support<S: Scalar>(psi: &PotentialVector<S>, mu: &DiscreteMeasure<S>) -> Result<()> {
    if psi.len() != mu.len() || psi.dim() != mu.dim() {
        return Err(Error::InvalidArgument(
            "potential and measure have different supports".into(),
        ));
    }
    Ok(())
}

fn assemble<S: Scalar>(
    psi: &[S],
    a: &[S],
    sigma_part: S,
    cell_mass: &[S],
) -> Result<Evaluation<S>> {
    let mut k = CompensatedSum::new();
    k.add(sigma_part);
    let mut gradient = Vec::with_capacity(psi.len());
    let mut el = Vec::with_capacity(psi.len());
    for i in 0..psi.len() {
        let gi = g_small(psi[i])?;
        k.add(a[i] * g_big(psi[i])?);
        let target = a[i] * gi;
        gradient.push(target - cell_mass[i]);
        el.push((target - cell_mass[i]).abs() / target);
    }
    Ok(Evaluation {
        k: k.value(),
        gradient,
        el_residuals: el,
    })
}

/// Evaluation with exact cell boundaries; `grid` only sets the panel size.
pub fn evaluate_resolved<S: Scalar>(
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Evaluation<S>> {
    check_support(psi, mu)?;
    let m = mu.dim();
    let cells: CellComplex<S> = psi.cells()?;
    let pts = cells.points();
    let panel = panel_for(grid);
    let opts = Adaptive::default();
    let small = cells.integrate(|i, eta| f_small_tanh(dot(&pts[i], eta), m), panel, opts);
    // F(φ) changes sign where φ = 1; measure its error against the scale of f
    let scale = compensated_sum(small.iter().copied()).to_f64_lossy();
    let big_opts = Adaptive {
        abs_tol: 1e-15 * scale,
        ..opts
    };
    let big = cells.integrate(|i, eta| f_big_tanh(dot(&pts[i], eta), m), panel, big_opts);
    let sigma_part = compensated_sum(big);
    if !sigma_part.is_finite() || small.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure { node: 0 });
    }
    assemble(psi.values(), mu.weights(), sigma_part, &small)
}

/// Evaluation with node-lumped sums over the grid.
pub fn evaluate_lumped<S: Scalar>(
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Evaluation<S>> {
    check_support(psi, mu)?;
    let m = mu.dim();
    let cells: CellComplex<S> = psi.cells()?;
    let per_node: Vec<(SmallVec<[usize; 4]>, S, S)> = grid
        .nodes()
        .par_iter()
        .zip(grid.weights().par_iter())
        .map(|(eta, &w)| {
            let (x, idx) = cells.locate(eta.coords());
            (idx, w * f_big_tanh(x, m), w * f_small_tanh(x, m))
        })
        .collect();
    let mut sigma_part = CompensatedSum::new();
    let mut acc = vec![CompensatedSum::new(); psi.len()];
    for (node, (idx, big, small)) in per_node.into_iter().enumerate() {
        if !big.is_finite() || !small.is_finite() {
            return Err(Error::IntegrationFailure { node });
        }
        sigma_part.add(big);
        let share = small / S::lit(idx.len() as f64);
        for i in idx {
            acc[i].add(share);
        }
    }
    let mass: Vec<S> = acc.iter().map(|c| c.value()).collect();
    assemble(psi.values(), mu.weights(), sigma_part.value(), &mass)
}

fn evaluate<S: Scalar>(
    d: Discretization,
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Evaluation<S>> {
    match d {
        Discretization::Resolved => evaluate_resolved(psi, mu, grid),
        Discretization::Lumped => evaluate_lumped(psi, mu, grid),
    }
}

/// `K(ψ)` with resolved cells.
pub fn functional_k<S: Scalar>(
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
) -> Result<S> {
    Ok(evaluate_resolved(psi, mu, grid)?.k)
}

/// `∂K/∂ψ_i = a_i g(ψ_i) − ∫_{V_i} f(φ) dσ` with resolved cells.
pub fn gradient_k<S: Scalar>(
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Vec<S>> {
    Ok(evaluate_resolved(psi, mu, grid)?.gradient)
}

/// `|∫_{V_i} f(φ) dσ − a_i g(ψ_i)| / (a_i g(ψ_i))` with resolved cells.
pub fn el_residual<S: Scalar>(
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
) -> Result<Vec<S>> {
    Ok(evaluate_resolved(psi, mu, grid)?.el_residuals)
}

/// Ball heuristic `ψ⁰ = ln tanh r₀`, `cosh^m r₀ = μ(S^m)/σ(S^m)`.
pub fn initial_potential<S: Scalar>(mu: &DiscreteMeasure<S>) -> S {
    let ratio = mu.total_mass() / sphere_volume::<S>(mu.dim());
    let c = ratio.powf(S::one() / S::lit(mu.dim() as f64));
    // a measure lighter than the sphere has no ball; start from a small one
    let r0 = if c > S::one() { c.acosh() } else { S::zero() };
    r0.max(S::lit(0.05)).tanh().ln()
}

/// Radii `artanh(e^{ψ_i})` at the support of `μ`.
pub fn extract_body<S: Scalar>(
    psi: &PotentialVector<S>,
    mu: &DiscreteMeasure<S>,
) -> Result<HyperbolicPolytope<S>> {
    check_support(psi, mu)?;
    let radii = psi
        .values()
        .iter()
        .map(|&v| artanh_with_complement(v.exp(), -v.exp_m1()))
        .collect();
    HyperbolicPolytope::from_vertices(mu.dim(), mu.points().to_vec(), radii)
}

struct Run<S> {
    psi: PotentialVector<S>,
    eval: Evaluation<S>,
    k_history: Vec<f64>,
    grad_history: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn inf_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |m, x| m.max(x.abs()))
}

/// Largest admitted reversal of the slope along a step, relative to the
/// initial slope, for the approximate Armijo test.
const OVERSHOOT: f64 = 0.8;

fn is_converged<S: Scalar>(e: &Evaluation<S>, tol_grad: S, tol_el: S) -> bool {
    inf_norm(&e.gradient) <= tol_grad && inf_norm(&e.el_residuals) <= tol_el
}

/// Projected gradient ascent with Armijo backtracking. Trial steps after the
/// first use the Barzilai–Borwein length of the previous accepted step.
fn ascend<S: Scalar>(
    start: Vec<S>,
    mu: &DiscreteMeasure<S>,
    grid: &QuadratureGrid<S>,
    cfg: &SolverConfig,
    tol_grad: S,
) -> Result<Run<S>> {
    let support = mu.points().to_vec();
    let ceiling = -S::lit(cfg.psi_floor);
    let project = |v: &[S]| -> Vec<S> { v.iter().map(|&x| x.min(ceiling)).collect() };
    let tol_el = S::lit(cfg.tol_el);
    let mut psi = PotentialVector::new(support.clone(), project(&start))?;
    let mut eval = evaluate(cfg.discretization, &psi, mu, grid)?;
    let mut k_history = vec![eval.k.to_f64_lossy()];
    let mut grad_history = vec![inf_norm(&eval.gradient).to_f64_lossy()];
    let mut step = S::lit(cfg.initial_step);
    let mut iterations = 0;
    let mut converged = is_converged(&eval, tol_grad, tol_el);
    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        // no ψ_i may cover more than half its distance to 0 in one step:
        // near-ideal trial points are expensive to integrate and rarely accepted
        let cap = psi
            .values()
            .iter()
            .zip(&eval.gradient)
            .filter(|(&p, &g)| g > S::zero() && p < ceiling)
            .map(|(&p, &g)| -p / (S::two() * g))
            .fold(S::infinity(), S::min);
        let mut t = step.min(cap);
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<S> = psi
                .values()
                .iter()
                .zip(&eval.gradient)
                .map(|(&p, &g)| p + t * g)
                .collect();
            let trial = project(&trial);
            let dir: Vec<S> = trial
                .iter()
                .zip(psi.values())
                .map(|(&a, &b)| a - b)
                .collect();
            let gain = compensated_sum(dir.iter().zip(&eval.gradient).map(|(&d, &g)| d * g));
            if !(gain > S::zero()) {
                break;
            }
            let cand = PotentialVector::new(support.clone(), trial)?;
            if let Ok(e) = evaluate(cfg.discretization, &cand, mu, grid) {
                let armijo = e.k >= eval.k + S::lit(cfg.armijo_c1) * gain;
                // Near the maximum the Armijo increase drops below the
                // quadrature noise of K. The gradient stays accurate, so a
                // step that does not lower K and does not overshoot along
                // `dir` is accepted too (after Hager–Zhang's approximate Wolfe
                // test, without its allowance for a decrease).
                let slope = compensated_sum(dir.iter().zip(&e.gradient).map(|(&d, &g)| d * g));
                let approximate = e.k >= eval.k && slope >= -S::lit(OVERSHOOT) * gain;
                if armijo || approximate {
                    accepted = Some((cand, e, dir));
                    break;
                }
            }
            t = t * S::lit(cfg.backtrack);
        }
        let Some((cand, e, dir)) = accepted else {
            log::debug!("line search stalled after {iterations} iterations");
            break;
        };
        // Barzilai–Borwein: s = Δψ, y = Δ∇K; y·s < 0 near a maximum
        let ss = compensated_sum(dir.iter().map(|&d| d * d));
        let sy = compensated_sum(
            dir.iter()
                .zip(e.gradient.iter().zip(&eval.gradient))
                .map(|(&d, (&a, &b))| d * (a - b)),
        );
        step = if sy < S::zero() {
            ss / -sy
        } else {
            t * S::two()
        };
        psi = cand;
        eval = e;
        k_history.push(eval.k.to_f64_lossy());
        grad_history.push(inf_norm(&eval.gradient).to_f64_lossy());
        converged = is_converged(&eval, tol_grad, tol_el);
    }
    Ok(Run {
        psi,
        eval,
        k_history,
        grad_history,
        converged,
        iterations,
    })
}

/// Solves the discrete inverse problem for `μ`.
pub fn solve<S: Scalar>(mu: &DiscreteMeasure<S>, config: &SolverConfig) -> Result<SolveReport<S>> {
    let clock = Instant::now();
    config.validate()?;
    let m = mu.dim();
    let conditions = if config.force {
        None
    } else {
        let mode = config
            .check_mode
            .unwrap_or(if m == 1 || mu.len() <= EXHAUSTIVE_LIMIT {
                CheckMode::Exhaustive
            } else {
                CheckMode::Sampled {
                    subsets: 20_000,
                    seed: config.seed,
                }
            });
        let report = check_conditions(mu, mode)?;
        if !report.all_ok() {
            return Err(Error::PreconditionFailed(Box::new(report)));
        }
        Some(report)
    };
    let grid = build_grid::<S>(m, config.grid_level)?;
    let tol_grad = S::lit(
        config
            .tol_grad
            .unwrap_or(1e-8 * mu.total_mass().to_f64_lossy()),
    );
    let psi0 = initial_potential(mu);

    let mut best: Option<(usize, Run<S>)> = None;
    for run in 0..=config.restarts {
        let start: Vec<S> = if run == 0 {
            vec![psi0; mu.len()]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(run as u64));
            (0..mu.len())
                .map(|_| psi0 * S::lit(1.0 + rng.gen_range(-0.25..0.25)))
                .collect()
        };
        let r = match ascend(start, mu, &grid, config, tol_grad) {
            Ok(r) => r,
            Err(e) if run > 0 => {
                log::debug!("restart {run} failed: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let done = r.converged;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                (r.converged && !b.converged) || (r.converged == b.converged && r.eval.k > b.eval.k)
            }
        };
        if better {
            best = Some((run, r));
        }
        if done {
            break;
        }
        log::info!("run {run} did not converge; restarting");
    }
    let (run, r) = best.expect("the first run either succeeds or returns an error");
    let (body, body_error) = match extract_body(&r.psi, mu) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ceiling = -config.psi_floor;
    let clamped = r
        .psi
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.to_f64_lossy() >= ceiling)
        .map(|(i, _)| i)
        .collect();
    Ok(SolveReport {
        k_history: r.k_history,
        grad_history: r.grad_history,
        el_residuals: r
            .eval
            .el_residuals
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect(),
        gradient: r.eval.gradient.iter().map(|v| v.to_f64_lossy()).collect(),
        body,
        body_error,
        converged: r.converged,
        iterations: r.iterations,
        run,
        tol_grad: tol_grad.to_f64_lossy(),
        conditions,
        clamped,
        config: config.clone(),
        wall_time: clock.elapsed().as_secs_f64(),
        psi: r.psi,
    })
}
