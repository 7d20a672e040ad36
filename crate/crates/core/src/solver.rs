//! Discrete residual of the Neumann problem, the pseudo-time solver for
//! coercive zero-order terms, and the shifted monotone iteration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{stencil, GridFunction, RadialGrid};
use crate::operators::{signed_power, signed_power_derivative, EllipticOperator, PointOperator};
use crate::profile::{CoefficientField, RadialProfile};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Sup-norm residual tolerance.
    pub tol: f64,
    /// Maximum number of pseudo-time steps (accepted or rejected).
    pub max_iter: usize,
    /// `|u|∞` above which the solve is abandoned as a blow-up.
    pub u_max: f64,
    /// Initial pseudo-time step; `None` picks a diffusive CFL-like step.
    pub dt0: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 2000,
            u_max: 1e6,
            dt0: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: GridFunction,
    pub residual_sup: f64,
    /// Round-off level of the residual for the final iterate; the solve is
    /// accepted once the residual is below `max(tol, residual_floor)`.
    pub residual_floor: f64,
    pub iterations: usize,
    pub dt: f64,
    pub converged: bool,
    pub bound_violation: bool,
    /// `(|g|∞ / c₀)^{1/(α+1)} + tol^{1/(α+1)}` with `c₀ = min(−(c + λ))`,
    /// when the zero-order term is coercive.
    pub barrier_bound: Option<f64>,
    pub within_barrier: Option<bool>,
}

/// The discrete problem `G(u) + λ|u|^α u − g = 0` on a grid, with all
/// profiles sampled at the nodes.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    grid: RadialGrid,
    points: Vec<PointOperator>,
    drift: Vec<f64>,
    /// `c + λ` at each node.
    zero_order: Vec<f64>,
    rhs: Vec<f64>,
    alpha: f64,
    floor: f64,
    max_weight: f64,
}

/// Residual and tridiagonal Jacobian scratch space.
#[derive(Clone, Debug)]
pub(crate) struct Workspace {
    res: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    trial: Vec<f64>,
    delta: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            res: vec![0.0; n],
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            trial: vec![0.0; n],
            delta: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct RelaxOutcome {
    pub residual_sup: f64,
    pub residual_floor: f64,
    pub iterations: usize,
    pub dt: f64,
    pub converged: bool,
    pub bound_violation: bool,
}

impl Problem {
    pub(crate) fn new(
        op: &EllipticOperator,
        coeff: &CoefficientField,
        grid: &RadialGrid,
        lambda: f64,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        op.validate()?;
        op.validate_profiles(grid.radius())?;
        if rhs.len() != grid.len() {
            return Err(Error::InvalidGrid("right-hand side length mismatch".into()));
        }
        let drift = coeff.b.sample(grid);
        let zero_order: Vec<f64> = coeff.c.sample(grid).into_iter().map(|c| c + lambda).collect();
        if drift.iter().chain(&zero_order).chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("coefficients must be finite on the grid".into()));
        }
        let (_, upper) = op.structure_bounds();
        Ok(Self {
            grid: *grid,
            points: grid.nodes().map(|r| op.at(r)).collect(),
            drift,
            zero_order,
            rhs,
            alpha: op.alpha,
            floor: op.grad_floor,
            max_weight: upper,
        })
    }

    pub(crate) fn zero_order(&self) -> &[f64] {
        &self.zero_order
    }

    pub(crate) fn rhs_mut(&mut self) -> &mut [f64] {
        &mut self.rhs
    }

    pub(crate) fn shift_zero_order(&mut self, shift: f64) {
        for z in &mut self.zero_order {
            *z += shift;
        }
    }

    #[inline]
    fn node_residual(&self, u: &[f64], i: usize) -> f64 {
        let h = self.grid.spacing();
        let r = self.grid.r(i);
        let (u1, u2) = stencil(u, h, i);
        let point = &self.points[i];
        let f = point.linearize(self.grid.dim(), r, u1, u2).value;
        let (phi, _) = point.grad_factor(u1);
        f + self.drift[i] * u1 * phi + self.zero_order[i] * signed_power(u[i], self.alpha) - self.rhs[i]
    }

    pub(crate) fn residual_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.node_residual(u, i);
        }
    }

    /// Residual plus Jacobian rows; returns the round-off floor of the
    /// residual, estimated from the magnitudes of the stencil terms.
    fn linearize(&self, u: &[f64], ws: &mut Workspace) -> f64 {
        let n = u.len();
        let h = self.grid.spacing();
        let h2 = h * h;
        let dim = self.grid.dim();
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let r = self.grid.r(i);
            let (u1, u2) = stencil(u, h, i);
            let point = &self.points[i];
            let lin = point.linearize(dim, r, u1, u2);
            let (phi, dphi) = point.grad_factor(u1);
            let b = self.drift[i];
            let zero = self.zero_order[i];
            ws.res[i] = lin.value + b * u1 * phi + zero * signed_power(u[i], self.alpha) - self.rhs[i];

            let d_u1 = lin.d_u1 + b * (phi + u1 * dphi);
            let d_u = zero * signed_power_derivative(u[i], self.alpha, self.floor);
            let (lo, di, up) = if i == 0 {
                (0.0, -2.0 * lin.d_u2 / h2 + d_u, 2.0 * lin.d_u2 / h2)
            } else if i + 1 == n {
                (2.0 * lin.d_u2 / h2, -2.0 * lin.d_u2 / h2 + d_u, 0.0)
            } else {
                (
                    lin.d_u2 / h2 - d_u1 / (2.0 * h),
                    -2.0 * lin.d_u2 / h2 + d_u,
                    lin.d_u2 / h2 + d_u1 / (2.0 * h),
                )
            };
            ws.lower[i] = lo;
            ws.diag[i] = di;
            ws.upper[i] = up;
            let um = if i > 0 { u[i - 1].abs() } else { 0.0 };
            let upv = if i + 1 < n { u[i + 1].abs() } else { 0.0 };
            let node_scale = (lo * um).abs() + (di * u[i]).abs() + (up * upv).abs() + self.rhs[i].abs();
            scale = scale.max(node_scale);
        }
        64.0 * f64::EPSILON * scale
    }

    fn default_dt(&self, u: &[f64]) -> f64 {
        let h = self.grid.spacing();
        let max_u1 = (0..u.len())
            .map(|i| stencil(u, h, i).0.abs())
            .fold(0.0, f64::max);
        let grad = (max_u1 + 1.0).powf(self.alpha);
        h * h / (2.0 * self.max_weight * self.grid.dim() as f64 * grad)
    }

    /// Pseudo-time continuation `u_t = G(u) + λ|u|^α u − g` with linearly
    /// implicit steps `(I/dt − J)δ = residual`. A step is accepted unless it
    /// more than doubles the residual. `dt` is scaled by the reduction ratio,
    /// clamped to `[1.1, 100]` when the residual drops; rejected steps halve it.
    pub(crate) fn relax(&self, u: &mut [f64], ws: &mut Workspace, opts: &SolveOptions) -> Result<RelaxOutcome> {
        let mut dt = opts.dt0.unwrap_or_else(|| self.default_dt(u));
        let mut floor = self.linearize(u, ws);
        let mut rnorm = sup(&ws.res);
        let mut iterations = 0;
        let outcome = |residual_sup, residual_floor, iterations, dt, converged, bound_violation| RelaxOutcome {
            residual_sup,
            residual_floor,
            iterations,
            dt,
            converged,
            bound_violation,
        };
        loop {
            if rnorm <= opts.tol.max(floor) {
                return Ok(outcome(rnorm, floor, iterations, dt, true, false));
            }
            if sup(u) > opts.u_max {
                return Ok(outcome(rnorm, floor, iterations, dt, false, true));
            }
            if iterations >= opts.max_iter || dt < 1e-300 {
                return Ok(outcome(rnorm, floor, iterations, dt, false, false));
            }
            iterations += 1;

            let inv_dt = 1.0 / dt;
            for i in 0..u.len() {
                ws.lower[i] = -ws.lower[i];
                ws.upper[i] = -ws.upper[i];
                ws.diag[i] = inv_dt - ws.diag[i];
            }
            ws.delta.copy_from_slice(&ws.res);
            solve_tridiagonal(&ws.lower, &ws.diag, &ws.upper, &mut ws.delta, &mut ws.scratch)?;
            for ((t, x), d) in ws.trial.iter_mut().zip(u.iter()).zip(&ws.delta) {
                *t = x + d;
            }
            self.residual_into(&ws.trial, &mut ws.scratch);
            let trial_norm = sup(&ws.scratch);
            let step_size = sup(&ws.delta);
            if trial_norm.is_finite() && trial_norm <= 2.0 * rnorm {
                let ratio = if trial_norm > 0.0 { rnorm / trial_norm } else { 100.0 };
                dt *= if ratio >= 1.0 { ratio.clamp(1.1, 100.0) } else { ratio };
                u.copy_from_slice(&ws.trial);
            } else if step_size <= 4.0 * f64::EPSILON * (1.0 + sup(u)) {
                // the update is below round-off of u; the residual cannot improve further
                floor = self.linearize(u, ws);
                let converged = rnorm <= 1e3 * opts.tol.max(floor);
                return Ok(outcome(rnorm, floor, iterations, dt, converged, false));
            } else {
                dt *= 0.5;
            }
            floor = self.linearize(u, ws);
            rnorm = sup(&ws.res);
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
/// The solution overwrites `rhs`.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularSystem(0));
    }
    scratch[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * scratch[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::SingularSystem(i));
        }
        scratch[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
    Ok(())
}

/// Node-wise `G(u) + λ|u|^α u − g`, Neumann and symmetry stencils at the ends.
pub fn residual(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    lambda: f64,
    g: &RadialProfile,
    u: &GridFunction,
) -> Result<GridFunction> {
    let grid = *u.grid();
    let problem = Problem::new(op, coeff, &grid, lambda, g.sample(&grid))?;
    let mut out = vec![0.0; grid.len()];
    problem.residual_into(u.values(), &mut out);
    Ok(GridFunction::from_raw(grid, out))
}

/// Solves the Neumann problem when `c + λ < 0` at every node.
///
/// For `α = 0` the start is `u ≡ 0`. For `α > 0` it is the constant `κ`
/// with `ψ(κ) Σ(c + λ) = Σ g`, since the linearization vanishes at zero.
pub fn solve_neumann(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda: f64,
    g: &RadialProfile,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let initial = if op.alpha > 0.0 {
        let z: f64 = coeff.c.sample(grid).iter().map(|c| c + lambda).sum();
        let rhs: f64 = g.sample(grid).iter().sum();
        let mut level = if z < 0.0 { rhs / z } else { 0.0 };
        if !(level.abs() > 0.0) || !level.is_finite() {
            level = 1.0;
        }
        let kappa = level.signum() * level.abs().powf(1.0 / (op.alpha + 1.0));
        GridFunction::from_fn(*grid, |_| kappa)
    } else {
        grid.zeros()
    };
    solve_neumann_from(op, coeff, lambda, g, initial, opts)
}

/// [`solve_neumann`] with an explicit initial guess, whose grid is used.
pub fn solve_neumann_from(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    lambda: f64,
    g: &RadialProfile,
    initial: GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let grid = *initial.grid();
    let problem = Problem::new(op, coeff, &grid, lambda, g.sample(&grid))?;
    let offending: Vec<usize> = problem
        .zero_order()
        .iter()
        .enumerate()
        .filter(|(_, z)| !(**z < 0.0))
        .map(|(i, _)| i)
        .collect();
    if !offending.is_empty() {
        return Err(Error::NotCoercive { nodes: offending });
    }
    let mut u = initial.into_values();
    let mut ws = Workspace::new(grid.len());
    // for α > 0 the centered stencil is not monotone near critical points and
    // admits kinked discrete solutions; walk the gradient floor down from 1
    let mut warmup = 0;
    if op.alpha > 0.0 {
        let mut floor = 1.0;
        while floor > op.grad_floor {
            let regular = op.clone().with_grad_floor(floor)?;
            let stage = Problem::new(&regular, coeff, &grid, lambda, problem.rhs.clone())?;
            warmup += stage.relax(&mut u, &mut ws, opts)?.iterations;
            floor *= 0.1;
        }
    }
    let mut out = problem.relax(&mut u, &mut ws, opts)?;
    out.iterations += warmup;

    let c0 = problem.zero_order().iter().fold(f64::INFINITY, |m, z| m.min(-z));
    let g_sup = sup(&problem.rhs);
    let exponent = 1.0 / (op.alpha + 1.0);
    let barrier = (g_sup / c0).powf(exponent) + opts.tol.powf(exponent);
    let solution = GridFunction::from_raw(grid, u);
    let within = solution.sup_norm() <= barrier;
    Ok(SolveReport {
        solution,
        residual_sup: out.residual_sup,
        residual_floor: out.residual_floor,
        iterations: out.iterations,
        dt: out.dt,
        converged: out.converged,
        bound_violation: out.bound_violation,
        barrier_bound: Some(barrier),
        within_barrier: Some(within),
    })
}

#[derive(Clone, Debug)]
pub struct IterationOptions {
    /// Stop when the sup-norm change between iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Blow-up threshold declaring the sequence unbounded.
    pub u_max: f64,
    /// Options for each inner Neumann solve; `None` uses `tol/10`.
    pub inner: Option<SolveOptions>,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200_000,
            u_max: 1e6,
            inner: None,
        }
    }
}

impl IterationOptions {
    fn inner_options(&self) -> SolveOptions {
        self.inner.clone().unwrap_or_else(|| SolveOptions {
            tol: self.tol / 10.0,
            max_iter: 2000,
            u_max: self.u_max * 1e6,
            dt0: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Unbounded,
    MaxIter,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    /// `|u_n|∞` for every iterate after the starting one.
    pub sup_norms: Vec<f64>,
    /// Smallest node value of every iterate after the starting one.
    pub minima: Vec<f64>,
    #[serde(skip)]
    pub final_iterate: GridFunction,
    pub verdict: Verdict,
    /// Whether step `n` moved every node in the expected direction (up for
    /// `g ≤ 0`, down for `g ≥ 0`), up to `tol`.
    pub monotone: Vec<bool>,
    pub last_change: f64,
}

impl IterationReport {
    pub fn iterations(&self) -> usize {
        self.sup_norms.len()
    }

    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|&m| m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Increasing,
    Decreasing,
}

/// Iterates the shifted map
///
/// `G(u_{n+1}) − (|c|∞+1)|u_{n+1}|^α u_{n+1} = g − (λ+|c|∞+1)|u_n|^α u_n`
///
/// from `start`. Every inner problem has zero-order coefficient
/// `c − |c|∞ − 1 ≤ −1`, so it is solvable by [`solve_neumann`].
#[allow(clippy::too_many_arguments)]
pub(crate) fn shifted_iteration(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda: f64,
    g: &[f64],
    start: Vec<f64>,
    direction: Direction,
    opts: &IterationOptions,
) -> Result<IterationReport> {
    let c_sup = coeff.c.sup_norm(grid);
    let shift = c_sup + 1.0;
    let mut problem = Problem::new(op, coeff, grid, 0.0, g.to_vec())?;
    problem.shift_zero_order(-shift);
    let inner = opts.inner_options();
    let mut ws = Workspace::new(grid.len());
    let mut current = start;
    let mut next = current.clone();
    let mut sup_norms = Vec::new();
    let mut minima = Vec::new();
    let mut monotone = Vec::new();
    let mut dt = inner.dt0;
    let mut last_change = f64::INFINITY;
    let factor = lambda + shift;
    let alpha = op.alpha;

    for step in 1..=opts.max_iter {
        for (i, rhs) in problem.rhs_mut().iter_mut().enumerate() {
            *rhs = g[i] - factor * signed_power(current[i], alpha);
        }
        let step_opts = SolveOptions { dt0: dt, ..inner.clone() };
        let out = problem
            .relax(&mut next, &mut ws, &step_opts)
            .map_err(|e| Error::InnerSolve { step, source: Box::new(e) })?;
        if !out.converged && !out.bound_violation {
            return Err(Error::InnerSolve {
                step,
                source: Box::new(Error::SignCondition(format!(
                    "inner solve stalled with residual {:.3e}",
                    out.residual_sup
                ))),
            });
        }
        // the next solve restarts from a step large enough to act as Newton
        dt = Some(out.dt.max(1.0));

        let mut change: f64 = 0.0;
        let mut ordered = true;
        for (a, b) in next.iter().zip(&current) {
            let d = a - b;
            change = change.max(d.abs());
            ordered &= match direction {
                Direction::Increasing => d >= -opts.tol,
                Direction::Decreasing => d <= opts.tol,
            };
        }
        monotone.push(ordered);
        let norm = sup(&next);
        sup_norms.push(norm);
        minima.push(next.iter().copied().fold(f64::INFINITY, f64::min));
        last_change = change;
        std::mem::swap(&mut current, &mut next);

        if norm > opts.u_max || out.bound_violation {
            return Ok(finish(grid, current, sup_norms, minima, monotone, Verdict::Unbounded, last_change));
        }
        if change < opts.tol {
            return Ok(finish(grid, current, sup_norms, minima, monotone, Verdict::Converged, last_change));
        }
        next.copy_from_slice(&current);
    }
    Ok(finish(grid, current, sup_norms, minima, monotone, Verdict::MaxIter, last_change))
}

fn finish(
    grid: &RadialGrid,
    values: Vec<f64>,
    sup_norms: Vec<f64>,
    minima: Vec<f64>,
    monotone: Vec<bool>,
    verdict: Verdict,
    last_change: f64,
) -> IterationReport {
    IterationReport {
        sup_norms,
        minima,
        final_iterate: GridFunction::from_raw(*grid, values),
        verdict,
        monotone,
        last_change,
    }
}

/// Monotone iteration from `u_1 = 0` for `g ≤ 0`; the iterates are
/// nonnegative and nondecreasing, and stay bounded exactly when `λ` is
/// below the principal eigenvalue of the positive eigenfunction.
pub fn monotone_iteration(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda: f64,
    g: &RadialProfile,
    opts: &IterationOptions,
) -> Result<IterationReport> {
    let g = g.sample(grid);
    if let Some(i) = g.iter().position(|v| *v > 0.0) {
        return Err(Error::SignCondition(format!(
            "monotone iteration needs g ≤ 0, but g = {} at node {i}",
            g[i]
        )));
    }
    shifted_iteration(op, coeff, grid, lambda, &g, vec![0.0; grid.len()], Direction::Increasing, opts)
}

/// Mirror of [`monotone_iteration`] for `g ≥ 0`: nonpositive,
/// nonincreasing iterates.
pub fn monotone_iteration_down(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda: f64,
    g: &RadialProfile,
    opts: &IterationOptions,
) -> Result<IterationReport> {
    let g = g.sample(grid);
    if let Some(i) = g.iter().position(|v| *v < 0.0) {
        return Err(Error::SignCondition(format!(
            "mirrored monotone iteration needs g ≥ 0, but g = {} at node {i}",
            g[i]
        )));
    }
    shifted_iteration(op, coeff, grid, lambda, &g, vec![0.0; grid.len()], Direction::Decreasing, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::PucciSign;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn constant_c(c: f64) -> CoefficientField {
        CoefficientField::with_c(RadialProfile::Const(c))
    }

    #[test]
    fn tridiagonal_solves_small_system() {
        let lower = [0.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0];
        let upper = [1.0, 1.0, 0.0];
        let mut rhs = [5.0, 6.0, 5.0];
        let mut scratch = [0.0; 3];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch).unwrap();
        for v in rhs {
            assert_relative_eq!(v, 1.0, epsilon = 1e-14);
        }
        let mut rhs = [1.0, 1.0, 1.0];
        assert!(solve_tridiagonal(&lower, &[0.0, 1.0, 1.0], &upper, &mut rhs, &mut scratch).is_err());
    }

    #[test]
    fn residual_examples() {
        let grid = RadialGrid::new(1.0, 2, 21).unwrap();
        let lap = EllipticOperator::laplacian();
        let res = residual(&lap, &constant_c(-1.0), 0.0, &RadialProfile::Const(-1.0), &GridFunction::constant(grid, 1.0)).unwrap();
        assert_eq!(res.sup_norm(), 0.0);

        let p4 = EllipticOperator::p_laplacian(4.0).unwrap();
        let res = residual(&p4, &constant_c(-1.0), 0.0, &RadialProfile::Const(-8.0), &GridFunction::constant(grid, 2.0)).unwrap();
        assert_eq!(res.sup_norm(), 0.0);

        let sq = GridFunction::from_fn(grid, |r| r * r);
        let res = residual(&lap, &constant_c(0.0), 0.0, &RadialProfile::Const(0.0), &sq).unwrap();
        for &v in &res.values()[..20] {
            assert_relative_eq!(v, 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = RadialGrid::new(1.0, 3, 9).unwrap();
        let ops = [
            EllipticOperator::pucci(PucciSign::Minus, 1.0, 2.0, 0.5).unwrap(),
            EllipticOperator::p_laplacian(3.0).unwrap(),
        ];
        let coeff = CoefficientField::new(
            RadialProfile::Poly(vec![0.3, 0.2]),
            RadialProfile::Poly(vec![-1.0, 0.0, -0.5]),
            RadialProfile::Const(0.0),
        );
        let u: Vec<f64> = grid.nodes().map(|r| 1.0 + 0.3 * (2.0 * r).sin() + 0.1 * r * r * r).collect();
        for op in &ops {
            let problem = Problem::new(op, &coeff, &grid, 0.2, vec![0.1; grid.len()]).unwrap();
            let mut ws = Workspace::new(grid.len());
            problem.linearize(&u, &mut ws);
            let eps = 1e-7;
            for j in 0..grid.len() {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[j] += eps;
                dn[j] -= eps;
                let mut rp = vec![0.0; grid.len()];
                let mut rm = vec![0.0; grid.len()];
                problem.residual_into(&up, &mut rp);
                problem.residual_into(&dn, &mut rm);
                for i in 0..grid.len() {
                    let fd = (rp[i] - rm[i]) / (2.0 * eps);
                    let exact = if i == j {
                        ws.diag[i]
                    } else if j + 1 == i {
                        ws.lower[i]
                    } else if i + 1 == j {
                        ws.upper[i]
                    } else {
                        0.0
                    };
                    assert!((fd - exact).abs() < 1e-4 * (1.0 + exact.abs()), "op {:?} ({i},{j}): fd {fd} vs {exact}", op.kind);
                }
            }
        }
    }

    #[test]
    fn constant_solution_recovered() {
        let grid = RadialGrid::new(1.0, 2, 101).unwrap();
        let rep = solve_neumann(&EllipticOperator::laplacian(), &constant_c(-1.0), &grid, 0.0, &RadialProfile::Const(-1.0), &SolveOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.solution.distance(&GridFunction::constant(grid, 1.0)) < 1e-9);
    }

    #[test]
    fn pucci_solution_within_barrier() {
        let grid = RadialGrid::new(1.0, 2, 101).unwrap();
        let op = EllipticOperator::pucci(PucciSign::Minus, 1.0, 2.0, 0.0).unwrap();
        let rep = solve_neumann(&op, &constant_c(-2.0), &grid, 0.5, &RadialProfile::Const(-3.0), &SolveOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.residual_sup <= 1e-9);
        assert!(rep.solution.sup_norm() <= 2.0 + 1e-9);
        assert_eq!(rep.within_barrier, Some(true));
        assert_relative_eq!(rep.barrier_bound.unwrap(), 2.0 + 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn non_coercive_problem_rejected() {
        let grid = RadialGrid::new(1.0, 2, 11).unwrap();
        let coeff = CoefficientField::with_c(RadialProfile::Poly(vec![-1.0, 2.0]));
        let err = solve_neumann(&EllipticOperator::laplacian(), &coeff, &grid, 0.0, &RadialProfile::Const(-1.0), &SolveOptions::default()).unwrap_err();
        match err {
            Error::NotCoercive { nodes } => assert_eq!(nodes, vec![5, 6, 7, 8, 9, 10]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn manufactured_cosine_is_second_order() {
        let op = EllipticOperator::laplacian();
        let coeff = constant_c(-1.0);
        let exact = |r: f64| 1.0 + (PI * r).cos() / (PI * PI);
        // Δu* in 2D: u'' + u'/r
        let g = RadialProfile::custom(move |r: f64| {
            let u2 = -(PI * r).cos();
            let tangential = if r > 0.0 { -(PI * r).sin() / (PI * r) } else { -1.0 };
            u2 + tangential - exact(r)
        });
        let err = |n: usize| {
            let grid = RadialGrid::new(1.0, 2, n).unwrap();
            let rep = solve_neumann(&op, &coeff, &grid, 0.0, &g, &SolveOptions::default()).unwrap();
            assert!(rep.converged);
            rep.solution.distance(&GridFunction::from_fn(grid, exact))
        };
        let (e1, e2) = (err(41), err(81));
        assert!((e1 / e2 - 4.0).abs() < 0.5, "{e1} {e2}");
    }

    #[test]
    fn monotone_iteration_constant_cases() {
        let grid = RadialGrid::new(1.0, 2, 41).unwrap();
        let lap = EllipticOperator::laplacian();
        let rep = monotone_iteration(&lap, &constant_c(-1.0), &grid, 0.0, &RadialProfile::Const(-1.0), &IterationOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        assert!(rep.all_monotone());
        assert!(rep.final_iterate.distance(&GridFunction::constant(grid, 1.0)) < 1e-8);

        let rep = monotone_iteration(&lap, &constant_c(-1.0), &grid, 0.5, &RadialProfile::Const(-1.0), &IterationOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        assert!(rep.final_iterate.distance(&GridFunction::constant(grid, 2.0)) < 1e-7);

        let rep = monotone_iteration(&lap, &constant_c(0.0), &grid, 0.5, &RadialProfile::Const(-1.0), &IterationOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Unbounded);
        assert!(*rep.sup_norms.last().unwrap() > 1e6);
    }

    #[test]
    fn monotone_iteration_rejects_positive_g() {
        let grid = RadialGrid::new(1.0, 2, 11).unwrap();
        let err = monotone_iteration(&EllipticOperator::laplacian(), &constant_c(-1.0), &grid, 0.0, &RadialProfile::Const(1.0), &IterationOptions::default());
        assert!(matches!(err, Err(Error::SignCondition(_))));
        let err = monotone_iteration_down(&EllipticOperator::laplacian(), &constant_c(-1.0), &grid, 0.0, &RadialProfile::Const(-1.0), &IterationOptions::default());
        assert!(matches!(err, Err(Error::SignCondition(_))));
    }

    #[test]
    fn mirrored_iteration_is_negative_and_decreasing() {
        let grid = RadialGrid::new(1.0, 2, 41).unwrap();
        let op = EllipticOperator::pucci(PucciSign::Plus, 1.0, 2.0, 0.0).unwrap();
        let coeff = CoefficientField::with_c(RadialProfile::Poly(vec![-1.0, 0.0, -1.0]));
        let rep = monotone_iteration_down(&op, &coeff, &grid, 0.3, &RadialProfile::Const(1.0), &IterationOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        assert!(rep.all_monotone());
        assert!(rep.final_iterate.max() < 0.0);
    }
}
