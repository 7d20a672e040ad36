//! Principal eigenvalue brackets by bisection on the behavior of the
//! monotone iteration, normalized eigenfunctions, and the general solve
//! below both eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RadialGrid};
use crate::operators::EllipticOperator;
use crate::profile::CoefficientField;
use crate::solver::{
    shifted_iteration, solve_neumann, Direction, IterationOptions, IterationReport, Problem, SolveOptions, SolveReport,
    Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSign {
    /// Positive eigenfunction, threshold for the iteration with `g ≡ −1`.
    Positive,
    /// Negative eigenfunction, threshold for the mirrored iteration with `g ≡ +1`.
    Negative,
}

impl EigenSign {
    fn direction(self) -> Direction {
        match self {
            Self::Positive => Direction::Increasing,
            Self::Negative => Direction::Decreasing,
        }
    }

    fn forcing(self, magnitude: f64) -> f64 {
        match self {
            Self::Positive => -magnitude,
            Self::Negative => magnitude,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Target bracket width; `None` means `1e-3 (1 + |c|∞)`.
    pub bracket_width: Option<f64>,
    /// Tolerance on the eigenfunction residual at the bracket midpoint;
    /// `None` means twice the bracket width.
    pub eig_residual_tol: Option<f64>,
    /// Magnitude `s` of the forcing `g ≡ ∓s` used by the probes.
    pub forcing: f64,
    pub iteration: IterationOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            bracket_width: None,
            eig_residual_tol: None,
            forcing: 1.0,
            iteration: IterationOptions::default(),
        }
    }
}

impl EigenOptions {
    pub fn width_for(&self, c_sup: f64) -> f64 {
        self.bracket_width.unwrap_or(1e-3 * (1.0 + c_sup))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenEstimate {
    pub sign: EigenSign,
    /// The iteration converges here.
    pub lambda_lo: f64,
    /// The iteration blows up here.
    pub lambda_hi: f64,
    /// Residual of the eigen-equation for the eigenfunction at the midpoint.
    pub residual_sup: f64,
    pub probes: usize,
    #[serde(skip)]
    pub eigenfunction: GridFunction,
}

impl EigenEstimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }

    pub fn width(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }
}

/// Runs the (mirrored, for [`EigenSign::Negative`]) monotone iteration at
/// `lambda` with constant forcing, from zero.
pub fn probe(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda: f64,
    sign: EigenSign,
    opts: &EigenOptions,
) -> Result<IterationReport> {
    if !(opts.forcing > 0.0) {
        return Err(Error::EigenConfig("forcing magnitude must be positive".into()));
    }
    let g = vec![sign.forcing(opts.forcing); grid.len()];
    shifted_iteration(op, coeff, grid, lambda, &g, vec![0.0; grid.len()], sign.direction(), &opts.iteration)
}

pub fn lambda_up(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    opts: &EigenOptions,
) -> Result<EigenEstimate> {
    bracket(op, coeff, grid, EigenSign::Positive, opts)
}

pub fn lambda_down(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    opts: &EigenOptions,
) -> Result<EigenEstimate> {
    bracket(op, coeff, grid, EigenSign::Negative, opts)
}

fn bracket(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    sign: EigenSign,
    opts: &EigenOptions,
) -> Result<EigenEstimate> {
    let c_sup = coeff.c.sup_norm(grid);
    let width = opts.width_for(c_sup);
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::EigenConfig("bracket width must be positive".into()));
    }
    let mut lo = -c_sup - 1.0;
    let mut hi = c_sup + 1.0;
    let mut probes = 2;
    let mut lo_report = probe(op, coeff, grid, lo, sign, opts)?;
    if lo_report.verdict != Verdict::Converged {
        return Err(Error::EigenConfig(format!(
            "iteration at the lower end {lo} did not converge ({:?})",
            lo_report.verdict
        )));
    }
    let hi_report = probe(op, coeff, grid, hi, sign, opts)?;
    if hi_report.verdict != Verdict::Unbounded {
        return Err(Error::EigenConfig(format!(
            "iteration at the upper end {hi} did not blow up ({:?})",
            hi_report.verdict
        )));
    }

    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let report = probe(op, coeff, grid, mid, sign, opts)?;
        probes += 1;
        match report.verdict {
            Verdict::Converged => {
                lo = mid;
                lo_report = report;
            }
            Verdict::Unbounded => hi = mid,
            Verdict::MaxIter => {
                // the threshold sits near mid; straddle it inside the target width
                let d = 0.45 * width;
                let (below, above) = rayon::join(
                    || probe(op, coeff, grid, mid - d, sign, opts),
                    || probe(op, coeff, grid, mid + d, sign, opts),
                );
                let (below, above) = (below?, above?);
                probes += 2;
                match (below.verdict, above.verdict) {
                    (Verdict::Converged, Verdict::Unbounded) => {
                        lo = mid - d;
                        lo_report = below;
                        hi = mid + d;
                    }
                    (Verdict::Unbounded, _) => hi = mid - d,
                    (_, Verdict::Converged) => {
                        lo = mid + d;
                        lo_report = above;
                    }
                    _ => {
                        return Err(Error::EigenConfig(format!(
                            "iteration is inconclusive around {mid}; raise max_iter or widen the bracket"
                        )))
                    }
                }
            }
        }
    }

    let mid = 0.5 * (lo + hi);
    let (eigenfunction, residual_sup) = normalize_and_check(op, coeff, &lo_report.final_iterate, mid, width, opts)?;
    Ok(EigenEstimate {
        sign,
        lambda_lo: lo,
        lambda_hi: hi,
        residual_sup,
        probes,
        eigenfunction,
    })
}

fn normalize_and_check(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    iterate: &GridFunction,
    lambda_mid: f64,
    width: f64,
    opts: &EigenOptions,
) -> Result<(GridFunction, f64)> {
    let norm = iterate.sup_norm();
    if !(norm > 0.0) {
        return Err(Error::EigenConfig("iterate at the lower bracket end vanishes".into()));
    }
    let phi = iterate.scaled(1.0 / norm);
    let residual = eigen_residual(op, coeff, &phi, lambda_mid)?;
    let tol = opts.eig_residual_tol.unwrap_or(2.0 * width);
    if residual > tol {
        return Err(Error::EigenResidual { achieved: residual, tol });
    }
    Ok((phi, residual))
}

/// Sup norm of `G(φ) + λ|φ|^α φ` with the lower-order terms of `coeff`
/// (its forcing is ignored).
pub fn eigen_residual(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    phi: &GridFunction,
    lambda: f64,
) -> Result<f64> {
    let grid = phi.grid();
    let problem = Problem::new(op, coeff, grid, lambda, vec![0.0; grid.len()])?;
    let mut res = vec![0.0; grid.len()];
    problem.residual_into(phi.values(), &mut res);
    Ok(res.iter().fold(0.0_f64, |m, r| m.max(r.abs())))
}

/// Normalized positive eigenfunction from the iteration at a certified
/// convergent `lambda_lo`, with its residual at `lambda_mid`.
pub fn eigenfunction_up(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda_lo: f64,
    lambda_mid: f64,
    opts: &EigenOptions,
) -> Result<(GridFunction, f64)> {
    eigenfunction(op, coeff, grid, lambda_lo, lambda_mid, EigenSign::Positive, opts)
}

/// Negative counterpart of [`eigenfunction_up`].
pub fn eigenfunction_down(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda_lo: f64,
    lambda_mid: f64,
    opts: &EigenOptions,
) -> Result<(GridFunction, f64)> {
    eigenfunction(op, coeff, grid, lambda_lo, lambda_mid, EigenSign::Negative, opts)
}

fn eigenfunction(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda_lo: f64,
    lambda_mid: f64,
    sign: EigenSign,
    opts: &EigenOptions,
) -> Result<(GridFunction, f64)> {
    if !(lambda_mid > lambda_lo) {
        return Err(Error::EigenConfig("lambda_mid must exceed lambda_lo".into()));
    }
    let report = probe(op, coeff, grid, lambda_lo, sign, opts)?;
    if report.verdict != Verdict::Converged {
        return Err(Error::EigenConfig(format!(
            "iteration at {lambda_lo} is not convergent ({:?})",
            report.verdict
        )));
    }
    let width = 2.0 * (lambda_mid - lambda_lo);
    normalize_and_check(op, coeff, &report.final_iterate, lambda_mid, width, opts)
}

/// Solves `G(u) + λ|u|^α u = g` for `λ` below both principal eigenvalues,
/// whose certified lower bracket ends are passed as `thresholds`.
///
/// When `λ + |c|∞ < 0` the problem is solved directly. Otherwise the
/// shifted iteration starts from the negative solution `u0` with right
/// side `|g|∞` and must stay between `u0` and the positive solution `v0`
/// with right side `−|g|∞`.
pub fn solve_general(
    op: &EllipticOperator,
    coeff: &CoefficientField,
    grid: &RadialGrid,
    lambda: f64,
    thresholds: (f64, f64),
    opts: &IterationOptions,
) -> Result<SolveReport> {
    let bound = thresholds.0.min(thresholds.1);
    if !(lambda < bound) {
        return Err(Error::EigenConfig(format!(
            "lambda = {lambda} must lie below both eigenvalue brackets (min lower end {bound})"
        )));
    }
    let g = coeff.g.sample(grid);
    let g_sup = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let c_sup = coeff.c.sup_norm(grid);

    if lambda + c_sup < 0.0 {
        let inner = SolveOptions {
            tol: opts.tol,
            ..SolveOptions::default()
        };
        return solve_neumann(op, coeff, grid, lambda, &coeff.g, &inner);
    }

    let run = |forcing: f64, start: Vec<f64>, direction| {
        let rhs = if forcing.is_nan() { g.clone() } else { vec![forcing; grid.len()] };
        shifted_iteration(op, coeff, grid, lambda, &rhs, start, direction, opts)
    };
    let v0 = run(-g_sup, grid.zeros().into_values(), Direction::Increasing)?;
    let u0 = run(g_sup, grid.zeros().into_values(), Direction::Decreasing)?;
    for (name, rep) in [("v0", &v0), ("u0", &u0)] {
        if rep.verdict != Verdict::Converged {
            return Err(Error::EigenConfig(format!(
                "barrier {name} did not converge ({:?}); lambda is not below the eigenvalue",
                rep.verdict
            )));
        }
    }
    let report = run(f64::NAN, u0.final_iterate.values().to_vec(), Direction::Increasing)?;
    let solution = report.final_iterate;
    let lower = u0.final_iterate.values();
    let upper = v0.final_iterate.values();
    for (i, &value) in solution.values().iter().enumerate() {
        let (lo, hi) = (lower[i] - opts.tol, upper[i] + opts.tol);
        if value < lo || value > hi {
            return Err(Error::SandwichViolation {
                node: i,
                value,
                lower: lo,
                upper: hi,
            });
        }
    }
    let problem = Problem::new(op, coeff, grid, lambda, g)?;
    let mut res = vec![0.0; grid.len()];
    problem.residual_into(solution.values(), &mut res);
    let residual_sup = res.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(SolveReport {
        solution,
        residual_sup,
        residual_floor: 0.0,
        iterations: report.sup_norms.len(),
        dt: 0.0,
        converged: report.verdict == Verdict::Converged,
        bound_violation: report.verdict == Verdict::Unbounded,
        barrier_bound: None,
        within_barrier: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::PucciSign;
    use crate::profile::RadialProfile;

    fn c_field(c: RadialProfile) -> CoefficientField {
        CoefficientField::with_c(c)
    }

    fn grid(n: usize) -> RadialGrid {
        RadialGrid::new(1.0, 2, n).unwrap()
    }

    #[test]
    fn constant_c_gives_unit_eigenvalue() {
        let g = grid(101);
        let est = lambda_up(&EllipticOperator::laplacian(), &c_field(RadialProfile::Const(-1.0)), &g, &EigenOptions::default()).unwrap();
        assert!(est.lambda_lo <= 1.0 && 1.0 <= est.lambda_hi, "{est:?}");
        assert!(est.width() <= 2e-3);
        assert!(est.eigenfunction.distance(&GridFunction::constant(g, 1.0)) < 1e-6);
        assert_eq!(est.eigenfunction.sup_norm(), 1.0);
    }

    #[test]
    fn zero_c_mirror_brackets_zero() {
        let g = grid(51);
        let est = lambda_down(&EllipticOperator::laplacian(), &c_field(RadialProfile::Const(0.0)), &g, &EigenOptions::default()).unwrap();
        assert!(est.lambda_lo <= 0.0 && 0.0 <= est.lambda_hi);
        assert!(est.eigenfunction.max() < 0.0);
        assert_eq!(est.eigenfunction.min(), -1.0);
    }

    #[test]
    fn nonconstant_c_eigenfunction_positive() {
        let g = grid(101);
        let coeff = c_field(RadialProfile::Poly(vec![-1.0, 0.0, -1.0]));
        let est = lambda_up(&EllipticOperator::laplacian(), &coeff, &g, &EigenOptions::default()).unwrap();
        assert!(est.eigenfunction.min() > 0.0);
        assert!(est.eigenfunction.max() - est.eigenfunction.min() > 1e-3);
        assert!(est.residual_sup <= 2.0 * est.width().max(1e-3 * 3.0));
        // c ∈ [−2, −1]: constants bound the eigenvalue between 1 and 2
        assert!(est.lambda_lo > 1.0 - 1e-3 && est.lambda_hi < 2.0 + 1e-3);
        let (phi, res) = eigenfunction_up(&EllipticOperator::laplacian(), &coeff, &g, est.lambda_lo, est.midpoint(), &EigenOptions::default()).unwrap();
        assert_eq!(phi.values(), est.eigenfunction.values());
        assert_eq!(res, est.residual_sup);
    }

    #[test]
    fn pucci_minus_down_matches_pucci_plus_up() {
        let g = grid(51);
        let coeff = c_field(RadialProfile::Poly(vec![-0.5, 1.0, -2.0]));
        let minus = EllipticOperator::pucci(PucciSign::Minus, 1.0, 2.0, 0.0).unwrap();
        let plus = EllipticOperator::pucci(PucciSign::Plus, 1.0, 2.0, 0.0).unwrap();
        let opts = EigenOptions::default();
        let down = lambda_down(&minus, &coeff, &g, &opts).unwrap();
        let up = lambda_up(&plus, &coeff, &g, &opts).unwrap();
        assert_eq!(down.lambda_lo, up.lambda_lo);
        assert_eq!(down.lambda_hi, up.lambda_hi);
        assert!(down.eigenfunction.distance(&up.eigenfunction.scaled(-1.0)) < 1e-12);
    }

    #[test]
    fn forcing_scale_leaves_bracket_unchanged() {
        let g = grid(51);
        let coeff = c_field(RadialProfile::Poly(vec![-1.0, 0.3]));
        let op = EllipticOperator::p_laplacian(3.0).unwrap();
        let one = lambda_up(&op, &coeff, &g, &EigenOptions::default()).unwrap();
        let ten = lambda_up(&op, &coeff, &g, &EigenOptions { forcing: 10.0, ..EigenOptions::default() }).unwrap();
        assert_eq!(one.lambda_lo, ten.lambda_lo);
        assert_eq!(one.lambda_hi, ten.lambda_hi);
    }

    #[test]
    fn eigenfunction_residual_reported() {
        let g = grid(51);
        let coeff = c_field(RadialProfile::Poly(vec![-1.0, 0.0, -1.0]));
        let opts = EigenOptions { eig_residual_tol: Some(1e-12), ..EigenOptions::default() };
        let err = lambda_up(&EllipticOperator::laplacian(), &coeff, &g, &opts).unwrap_err();
        assert!(matches!(err, Error::EigenResidual { .. }), "{err}");
    }

    #[test]
    fn general_solve_cases() {
        let g = grid(51);
        let lap = EllipticOperator::laplacian();
        let zero = c_field(RadialProfile::Const(-1.0));
        let rep = solve_general(&lap, &zero, &g, 0.5, (1.0, 1.0), &IterationOptions::default()).unwrap();
        assert_eq!(rep.solution.sup_norm(), 0.0);

        let coeff = CoefficientField::new(RadialProfile::Const(0.0), RadialProfile::Const(-1.0), RadialProfile::Const(1.0));
        let rep = solve_general(&lap, &coeff, &g, 0.0, (1.0, 1.0), &IterationOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.solution.distance(&GridFunction::constant(g, -1.0)) < 1e-8);

        let coeff = CoefficientField::new(
            RadialProfile::Const(0.0),
            RadialProfile::Const(-1.0),
            RadialProfile::custom(|r| (3.0 * r).sin() - 0.3),
        );
        let rep = solve_general(&lap, &coeff, &g, 0.5, (1.0, 1.0), &IterationOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.residual_sup < 1e-7, "{}", rep.residual_sup);

        assert!(solve_general(&lap, &coeff, &g, 1.0, (1.0, 2.0), &IterationOptions::default()).is_err());
    }
}
