//! Batch front-end: JSON run configurations, the five commands, and the
//! files they write.
//!
//! A configuration looks like
//!
//! ```json
//! {
//!   "grid": { "R": 1.0, "dim": 2, "n": 401 },
//!   "operator": { "kind": "pucci_minus", "a": 1.0, "A": 2.0, "alpha": 0.0 },
//!   "coefficients": { "b": "const:0", "c": "band", "g": "const:-1" },
//!   "eigen": { "bracket_width": 0.001 },
//!   "certify": { "dim": 2, "a": 1, "A": 2, "alpha": 0, "R": 1, "rho": 0.25,
//!                "k": 4, "beta1": 10, "beta2_fraction": 0.5 },
//!   "sweep": { "command": "certify", "parameters": { "certify.rho": [0.2, 0.3] } }
//! }
//! ```
//!
//! Every section is optional. Profiles are `const:<v>`, `poly:<c0,c1,..>`,
//! `table:<csv path>` (relative to the config file) or `band`, the default
//! coefficient band of the `certify` section.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certify::{self, Certificate, SupersolutionInputs};
use crate::eigen::{self, EigenEstimate, EigenOptions, EigenSign};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::operators::{self, EllipticOperator, PucciSign, SampleDomain};
use crate::profile::{CoefficientField, RadialProfile};
use crate::solver::{self, IterationOptions, SolveOptions, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Eigen,
    Certify,
    Sweep,
    CheckOperator,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyConfig>,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub dim: usize,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { radius: 1.0, dim: 2, n: 401 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    #[default]
    Laplacian,
    PucciPlus {
        a: f64,
        #[serde(rename = "A")]
        big_a: f64,
        #[serde(default)]
        alpha: f64,
    },
    PucciMinus {
        a: f64,
        #[serde(rename = "A")]
        big_a: f64,
        #[serde(default)]
        alpha: f64,
    },
    PLaplacian {
        p: f64,
    },
    Anisotropic {
        q: f64,
        a: f64,
        #[serde(rename = "A")]
        big_a: f64,
        c0: f64,
        b1: String,
        b2: String,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default = "zero_profile")]
    pub b: String,
    #[serde(default = "minus_one_profile")]
    pub c: String,
    #[serde(default = "zero_profile")]
    pub g: String,
}

fn zero_profile() -> String {
    "const:0".into()
}

fn minus_one_profile() -> String {
    "const:-1".into()
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            b: zero_profile(),
            c: minus_one_profile(),
            g: zero_profile(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Direct when `c + λ < 0` everywhere, otherwise general.
    #[default]
    Auto,
    Direct,
    /// Monotone iteration from zero; needs `g ≤ 0`.
    Monotone,
    /// Brackets both eigenvalues, then the sandwiched iteration.
    General,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_solve_iter")]
    pub max_iter: usize,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    #[serde(default)]
    pub method: SolveMethod,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_solve_iter() -> usize {
    2000
}

fn default_u_max() -> f64 {
    1e6
}

fn default_outer_iter() -> usize {
    200_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            tol: default_tol(),
            max_iter: default_solve_iter(),
            u_max: default_u_max(),
            method: SolveMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    #[serde(default = "default_sign")]
    pub sign: EigenSign,
    #[serde(default)]
    pub bracket_width: Option<f64>,
    #[serde(default)]
    pub eig_residual_tol: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_outer_iter")]
    pub max_iter: usize,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
}

fn default_sign() -> EigenSign {
    EigenSign::Positive
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            sign: EigenSign::Positive,
            bracket_width: None,
            eig_residual_tol: None,
            tol: default_tol(),
            max_iter: default_outer_iter(),
            u_max: default_u_max(),
        }
    }
}

impl EigenConfig {
    fn options(&self) -> EigenOptions {
        EigenOptions {
            bracket_width: self.bracket_width,
            eig_residual_tol: self.eig_residual_tol,
            forcing: 1.0,
            iteration: IterationOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                u_max: self.u_max,
                inner: None,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub dim: usize,
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub rho: f64,
    pub k: f64,
    pub beta1: f64,
    /// Absolute `β₂`; exactly one of this and `beta2_fraction` is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    /// `β₂` as a fraction of its upper bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2_fraction: Option<f64>,
    /// Nodes of the verification grid.
    #[serde(default = "default_verify_nodes")]
    pub n: usize,
}

fn default_verify_nodes() -> usize {
    2001
}

impl CertifyConfig {
    fn inputs(&self) -> Result<SupersolutionInputs> {
        let mut inputs = SupersolutionInputs {
            dim: self.dim,
            a: self.a,
            big_a: self.big_a,
            alpha: self.alpha,
            radius: self.radius,
            rho: self.rho,
            k: self.k,
            beta1: self.beta1,
            beta2: 1.0,
        };
        inputs.beta2 = match (self.beta2, self.beta2_fraction) {
            (Some(b), None) => b,
            (None, Some(f)) => f * inputs.beta2_upper_bound().map_err(|e| Error::Config(e.to_string()))?,
            _ => return Err(Error::Config("certify needs exactly one of beta2 and beta2_fraction".into())),
        };
        Ok(inputs)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: Command,
    /// Dotted config paths and the values each takes; tuples run over the
    /// cartesian product with the last key varying fastest.
    pub parameters: BTreeMap<String, Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// A config with every profile and operator resolved.
struct Resolved {
    grid: RadialGrid,
    op: EllipticOperator,
    coeff: CoefficientField,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn resolve(&self, base: &Path) -> Result<Resolved> {
        let grid = RadialGrid::new(self.grid.radius, self.grid.dim, self.grid.n)?;
        let profile = |spec: &str| self.profile(spec, base);
        let op = match &self.operator {
            OperatorConfig::Laplacian => EllipticOperator::laplacian(),
            OperatorConfig::PucciPlus { a, big_a, alpha } => EllipticOperator::pucci(PucciSign::Plus, *a, *big_a, *alpha)?,
            OperatorConfig::PucciMinus { a, big_a, alpha } => EllipticOperator::pucci(PucciSign::Minus, *a, *big_a, *alpha)?,
            OperatorConfig::PLaplacian { p } => EllipticOperator::p_laplacian(*p)?,
            OperatorConfig::Anisotropic { q, a, big_a, c0, b1, b2 } => {
                EllipticOperator::anisotropic(*q, *a, *big_a, *c0, profile(b1)?, profile(b2)?)?
            }
        };
        op.validate_profiles(grid.radius())?;
        let coeff = CoefficientField::new(
            profile(&self.coefficients.b)?,
            profile(&self.coefficients.c)?,
            profile(&self.coefficients.g)?,
        );
        for (name, value) in [("tol", self.solver.tol), ("eigen.tol", self.eigen.tol)] {
            if !(value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if let Some(w) = self.eigen.bracket_width {
            if !(w > 0.0) {
                return Err(Error::Config("eigen.bracket_width must be positive".into()));
            }
        }
        Ok(Resolved { grid, op, coeff })
    }

    fn profile(&self, spec: &str, base: &Path) -> Result<RadialProfile> {
        let spec = spec.trim();
        if spec == "band" {
            let certify = self
                .certify
                .as_ref()
                .ok_or_else(|| Error::Config("profile 'band' needs a certify section".into()))?;
            let params = certify::build_params(&certify.inputs()?).map_err(|e| Error::Config(e.to_string()))?;
            return Ok(certify::default_c_band(&params));
        }
        if let Some(path) = spec.strip_prefix("table:") {
            let path = Path::new(path.trim());
            let full = if path.is_relative() { base.join(path) } else { path.to_path_buf() };
            return RadialProfile::read_table(&full);
        }
        RadialProfile::parse(spec)
    }
}

/// Files produced by a command, plus the exit status they report.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub status: i32,
    pub diagnostics: Vec<String>,
}

impl Outcome {
    fn new(status: i32) -> Self {
        Self {
            files: Vec::new(),
            status,
            diagnostics: Vec::new(),
        }
    }

    fn json(&mut self, name: &str, value: &Value) {
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        self.files.push((name.into(), text));
    }
}

/// Maps library errors to exit codes: bad input is 3, I/O is 1, and any
/// failure while computing is 2.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Config(_)
        | Error::Json(_)
        | Error::InvalidGrid(_)
        | Error::InvalidOperator(_)
        | Error::InvalidProfile(_)
        | Error::NotCoercive { .. }
        | Error::SignCondition(_) => EXIT_INVALID,
        _ => EXIT_FAILED,
    }
}

/// Validates the config and runs `command`, returning the files to write.
/// `Err` means nothing should be written.
pub fn execute(command: Command, config: &RunConfig, base: &Path) -> Result<Outcome> {
    let resolved = config.resolve(base)?;
    match command {
        Command::Solve => run_solve(config, &resolved),
        Command::Eigen => run_eigen(config, &resolved),
        Command::Certify => run_certify(config),
        Command::CheckOperator => run_check(config, &resolved),
        Command::Sweep => run_sweep(config, base),
    }
}

/// Parses the config at `config_path`, runs `command` and writes the
/// outputs into `out_dir`. Returns the process exit code.
pub fn run(command: Command, config_path: &Path, out_dir: &Path, seed: Option<u64>) -> i32 {
    let result = RunConfig::from_path(config_path).and_then(|mut config| {
        if let Some(seed) = seed {
            config.check.seed = seed;
        }
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        execute(command, &config, &base)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.diagnostics {
                eprintln!("{line}");
            }
            match write_outputs(out_dir, &outcome.files) {
                Ok(()) => outcome.status,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let io = |path: PathBuf| move |source| Error::Io { path, source };
    fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io(path.clone()))?;
    }
    Ok(())
}

fn config_json(config: &RunConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn solve_options(config: &RunConfig) -> SolveOptions {
    SolveOptions {
        tol: config.solver.tol,
        max_iter: config.solver.max_iter,
        u_max: config.solver.u_max,
        dt0: None,
    }
}

fn iteration_options(config: &RunConfig) -> IterationOptions {
    IterationOptions {
        tol: config.solver.tol,
        max_iter: config.eigen.max_iter,
        u_max: config.solver.u_max,
        inner: None,
    }
}

struct SolveRun {
    method: SolveMethod,
    report: SolveReport,
    thresholds: Option<(f64, f64)>,
}

fn solve_with(config: &RunConfig, r: &Resolved) -> Result<SolveRun> {
    let lambda = config.solver.lambda;
    let coercive = r.coeff.c.sample(&r.grid).iter().all(|c| c + lambda < 0.0);
    let method = match config.solver.method {
        SolveMethod::Auto if coercive => SolveMethod::Direct,
        SolveMethod::Auto => SolveMethod::General,
        m => m,
    };
    match method {
        SolveMethod::Direct => {
            let report = solver::solve_neumann(&r.op, &r.coeff, &r.grid, lambda, &r.coeff.g, &solve_options(config))?;
            Ok(SolveRun { method, report, thresholds: None })
        }
        SolveMethod::Monotone => {
            let it = solver::monotone_iteration(&r.op, &r.coeff, &r.grid, lambda, &r.coeff.g, &iteration_options(config))?;
            let converged = it.verdict == solver::Verdict::Converged;
            let residual = solver::residual(&r.op, &r.coeff, lambda, &r.coeff.g, &it.final_iterate)?.sup_norm();
            let report = SolveReport {
                residual_sup: residual,
                residual_floor: 0.0,
                iterations: it.iterations(),
                dt: 0.0,
                converged,
                bound_violation: it.verdict == solver::Verdict::Unbounded,
                barrier_bound: None,
                within_barrier: None,
                solution: it.final_iterate,
            };
            Ok(SolveRun { method, report, thresholds: None })
        }
        SolveMethod::General | SolveMethod::Auto => {
            let opts = config.eigen.options();
            let up = eigen::lambda_up(&r.op, &r.coeff, &r.grid, &opts)?;
            let down = eigen::lambda_down(&r.op, &r.coeff, &r.grid, &opts)?;
            let thresholds = (up.lambda_lo, down.lambda_lo);
            let report = eigen::solve_general(&r.op, &r.coeff, &r.grid, lambda, thresholds, &iteration_options(config))?;
            Ok(SolveRun {
                method: SolveMethod::General,
                report,
                thresholds: Some(thresholds),
            })
        }
    }
}

fn failure_json(config: &RunConfig, err: &Error) -> Value {
    json!({ "config": config_json(config), "error": err.to_string() })
}

fn run_solve(config: &RunConfig, r: &Resolved) -> Result<Outcome> {
    match solve_with(config, r) {
        Ok(run) => {
            let ok = run.report.converged;
            let mut out = Outcome::new(if ok { EXIT_OK } else { EXIT_FAILED });
            if !ok {
                out.diagnostics.push(format!(
                    "solve did not converge: residual {:.3e} after {} iterations",
                    run.report.residual_sup, run.report.iterations
                ));
            }
            out.files.push(("solution.csv".into(), run.report.solution.to_csv_string()));
            out.json(
                "report.json",
                &json!({
                    "config": config_json(config),
                    "method": run.method,
                    "report": run.report,
                    "sup_norm": run.report.solution.sup_norm(),
                    "thresholds": run.thresholds,
                }),
            );
            Ok(out)
        }
        Err(e) if exit_code(&e) == EXIT_INVALID => Err(e),
        Err(e) => {
            let mut out = Outcome::new(EXIT_FAILED);
            out.diagnostics.push(format!("solve failed: {e}"));
            out.json("report.json", &failure_json(config, &e));
            Ok(out)
        }
    }
}

fn eigen_estimate(config: &RunConfig, r: &Resolved) -> Result<EigenEstimate> {
    let opts = config.eigen.options();
    match config.eigen.sign {
        EigenSign::Positive => eigen::lambda_up(&r.op, &r.coeff, &r.grid, &opts),
        EigenSign::Negative => eigen::lambda_down(&r.op, &r.coeff, &r.grid, &opts),
    }
}

fn run_eigen(config: &RunConfig, r: &Resolved) -> Result<Outcome> {
    match eigen_estimate(config, r) {
        Ok(est) => {
            let mut out = Outcome::new(EXIT_OK);
            out.files.push(("eigenfunction.csv".into(), est.eigenfunction.to_csv_string()));
            out.json(
                "eigen.json",
                &json!({
                    "config": config_json(config),
                    "estimate": est,
                    "eigenfunction_min": est.eigenfunction.min(),
                    "eigenfunction_max": est.eigenfunction.max(),
                }),
            );
            Ok(out)
        }
        Err(e) if exit_code(&e) == EXIT_INVALID => Err(e),
        Err(e) => {
            let mut out = Outcome::new(EXIT_FAILED);
            out.diagnostics.push(format!("eigen failed: {e}"));
            out.json("eigen.json", &failure_json(config, &e));
            Ok(out)
        }
    }
}

struct CertifyRun {
    certificate: Option<Certificate>,
    bound: Option<f64>,
    diagnostics: Vec<String>,
}

fn certify_with(config: &RunConfig) -> Result<CertifyRun> {
    let section = config
        .certify
        .as_ref()
        .ok_or_else(|| Error::Config("certify needs a certify section".into()))?;
    let inputs = section.inputs()?;
    let bound = inputs.beta2_upper_bound().map_err(|e| Error::Config(e.to_string()))?;
    let grid = RadialGrid::new(section.radius, section.dim, section.n)?;
    match certify::build_params(&inputs) {
        Ok(params) => {
            let v = certify::build_supersolution(&params);
            let c = certify::default_c_band(&params);
            let cert = certify::verify(&params, &v, &c, &grid).map_err(|e| Error::Config(e.to_string()))?;
            let diagnostics = cert.reasons.clone();
            Ok(CertifyRun {
                certificate: Some(cert),
                bound: Some(bound),
                diagnostics,
            })
        }
        Err(e) => Ok(CertifyRun {
            certificate: None,
            bound: Some(bound),
            diagnostics: vec![e.to_string()],
        }),
    }
}

fn run_certify(config: &RunConfig) -> Result<Outcome> {
    let run = certify_with(config)?;
    let accepted = run.certificate.as_ref().is_some_and(Certificate::accepted);
    let mut out = Outcome::new(if accepted { EXIT_OK } else { EXIT_FAILED });
    out.diagnostics = run.diagnostics.iter().map(|d| format!("certify: {d}")).collect();
    out.json(
        "certificate.json",
        &json!({
            "config": config_json(config),
            "verdict": if accepted { "accept" } else { "reject" },
            "beta2_bound": run.bound,
            "certificate": run.certificate,
            "diagnostics": run.diagnostics,
        }),
    );
    Ok(out)
}

fn run_check(config: &RunConfig, r: &Resolved) -> Result<Outcome> {
    let domain = SampleDomain {
        dim: r.grid.dim(),
        radius: r.grid.radius(),
        seed: config.check.seed,
    };
    let reports = [
        operators::check_homogeneity(&r.op, domain, config.check.samples),
        operators::check_ellipticity(&r.op, domain, config.check.samples),
    ];
    let ok = reports.iter().all(|rep| rep.ok());
    let mut out = Outcome::new(if ok { EXIT_OK } else { EXIT_FAILED });
    out.json(
        "properties.json",
        &json!({ "config": config_json(config), "ok": ok, "reports": reports }),
    );
    Ok(out)
}

/// Summary columns of one sweep row, by sub-command.
fn sweep_columns(command: Command) -> &'static [&'static str] {
    match command {
        Command::Solve => &["converged", "residual_sup", "iterations", "sup_norm"],
        Command::Eigen => &["lambda_lo", "lambda_hi", "residual_sup"],
        Command::Certify => &["verdict", "beta2", "m1", "m2", "m3", "grid_margin", "integral_c"],
        Command::CheckOperator => &["homogeneity_failed", "ellipticity_failed", "max_rel_error"],
        Command::Sweep => &[],
    }
}

enum Cell {
    Num(f64),
    Text(String),
}

fn format_cell(cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => format!("{v:.16e}"),
        Cell::Text(t) => t.clone(),
    }
}

fn sweep_row(command: Command, config: &RunConfig, base: &Path) -> Result<Vec<Cell>> {
    let resolved = config.resolve(base)?;
    let num = Cell::Num;
    Ok(match command {
        Command::Solve => {
            let run = solve_with(config, &resolved)?;
            vec![
                Cell::Text(run.report.converged.to_string()),
                num(run.report.residual_sup),
                num(run.report.iterations as f64),
                num(run.report.solution.sup_norm()),
            ]
        }
        Command::Eigen => {
            let est = eigen_estimate(config, &resolved)?;
            vec![num(est.lambda_lo), num(est.lambda_hi), num(est.residual_sup)]
        }
        Command::Certify => {
            let run = certify_with(config)?;
            match run.certificate {
                Some(c) => vec![
                    Cell::Text(if c.accepted() { "accept" } else { "reject" }.into()),
                    num(c.params.inputs.beta2),
                    num(c.m1),
                    num(c.m2),
                    num(c.m3),
                    num(c.grid_margin),
                    num(c.integral_c),
                ],
                None => {
                    let mut row = vec![Cell::Text("reject".into())];
                    row.extend((0..6).map(|_| Cell::Text(String::new())));
                    row
                }
            }
        }
        Command::CheckOperator => {
            let domain = SampleDomain {
                dim: resolved.grid.dim(),
                radius: resolved.grid.radius(),
                seed: config.check.seed,
            };
            let h = operators::check_homogeneity(&resolved.op, domain, config.check.samples);
            let e = operators::check_ellipticity(&resolved.op, domain, config.check.samples);
            vec![
                num(h.failed as f64),
                num(e.failed as f64),
                num(h.max_rel_error.max(e.max_rel_error)),
            ]
        }
        Command::Sweep => return Err(Error::Config("sweeps cannot be nested".into())),
    })
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("sweep path '{path}' does not name an object field")))?;
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        node = map.entry(*part).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn run_sweep(config: &RunConfig, base: &Path) -> Result<Outcome> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a sweep section".into()))?;
    if sweep.command == Command::Sweep {
        return Err(Error::Config("sweeps cannot be nested".into()));
    }
    if sweep.parameters.values().any(Vec::is_empty) {
        return Err(Error::Config("every sweep parameter needs at least one value".into()));
    }
    let keys: Vec<&String> = sweep.parameters.keys().collect();
    let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
    for key in &keys {
        tuples = tuples
            .into_iter()
            .flat_map(|prefix| {
                sweep.parameters[*key].iter().map(move |v| {
                    let mut t = prefix.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
    }

    let mut template = config_json(config);
    if let Some(map) = template.as_object_mut() {
        map.remove("sweep");
    }
    let configs = tuples
        .iter()
        .map(|tuple| {
            let mut value = template.clone();
            for (key, v) in keys.iter().zip(tuple) {
                set_path(&mut value, key, v.clone())?;
            }
            serde_json::from_value::<RunConfig>(value).map_err(|e| Error::Config(format!("sweep tuple {tuple:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let workers = sweep
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let rows: Vec<Result<Vec<Cell>>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| sweep_row(sweep.command, c, base))
            .collect()
    });

    let columns = sweep_columns(sweep.command);
    let mut csv = String::new();
    let header: Vec<&str> = keys.iter().map(|k| k.as_str()).chain(["status"]).chain(columns.iter().copied()).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    let mut all_ok = true;
    let mut out = Outcome::new(EXIT_OK);
    for (tuple, row) in tuples.iter().zip(rows) {
        let params: Vec<String> = tuple
            .iter()
            .map(|v| match v.as_f64() {
                Some(x) => format!("{x:.16e}"),
                None => v.to_string().replace(',', ";"),
            })
            .collect();
        let (status, cells) = match row {
            Ok(cells) => {
                let failed = match sweep.command {
                    Command::Solve => matches!(&cells[0], Cell::Text(t) if t == "false"),
                    Command::Certify => matches!(&cells[0], Cell::Text(t) if t == "reject"),
                    Command::CheckOperator => {
                        matches!((&cells[0], &cells[1]), (Cell::Num(a), Cell::Num(b)) if *a > 0.0 || *b > 0.0)
                    }
                    _ => false,
                };
                (if failed { "failed" } else { "ok" }.to_string(), cells.iter().map(format_cell).collect())
            }
            Err(e) => {
                out.diagnostics.push(format!("sweep tuple {tuple:?}: {e}"));
                ("error".to_string(), vec![String::new(); columns.len()])
            }
        };
        all_ok &= status == "ok";
        let _ = writeln!(csv, "{},{},{}", params.join(","), status, cells.join(","));
    }
    if !all_ok {
        out.status = EXIT_FAILED;
    }
    out.files.push(("sweep.csv".into(), csv));
    out.json(
        "sweep.json",
        &json!({ "config": config_json(config), "rows": tuples.len(), "all_ok": all_ok }),
    );
    Ok(out)
}
