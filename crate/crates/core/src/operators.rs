//! The operator catalog in radial coordinates.
//!
//! For a radial function `u(|x|)` the Hessian has the eigenvalue `u''`
//! (radial direction, multiplicity 1) and `u'/r` (tangential directions,
//! multiplicity `N - 1`), and `|Du| = |u'|`. Every operator here is written
//! as `|u'|^α · S(u'', u'/r)` where `S` is the second-order part.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::RadialProfile;

/// Default floor for `|u'|` in the gradient factor `|u'|^α`.
pub const DEFAULT_GRAD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PucciSign {
    Plus,
    Minus,
}

/// Pucci extremal operator applied to a spectrum given as
/// `(eigenvalue, multiplicity)` pairs.
///
/// `Minus` is `a·Σλ⁺ − A·Σλ⁻` and `Plus` is `A·Σλ⁺ − a·Σλ⁻`.
pub fn pucci_extremal(eigs: &[(f64, usize)], a: f64, big_a: f64, sign: PucciSign) -> f64 {
    let (pos, neg) = match sign {
        PucciSign::Plus => (big_a, a),
        PucciSign::Minus => (a, big_a),
    };
    eigs.iter()
        .map(|&(lambda, mult)| {
            let w = if lambda >= 0.0 { pos } else { neg };
            mult as f64 * w * lambda
        })
        .sum()
}

/// Hessian spectrum of `u(|x|)` at radius `r > 0` in `ℝ^dim`.
pub fn radial_hessian_eigs(u1: f64, u2: f64, r: f64, dim: usize) -> Result<[(f64, usize); 2]> {
    if !(r > 0.0) {
        return Err(Error::InvalidOperator(
            "radial Hessian needs r > 0; at the origin u'/r is replaced by u''".into(),
        ));
    }
    Ok([(u2, 1), (u1 / r, dim - 1)])
}

#[derive(Clone, Debug)]
pub enum OperatorKind {
    PucciPlus,
    PucciMinus,
    /// `Δ_p u`, with `α = p − 2`.
    PLaplacian { p: f64 },
    /// `|Du|^{q−2} tr(B₁D²u) + c₀|Du|^{q−4}⟨D²u B₂Du, B₂Du⟩` with
    /// `B₁ = b₁(r)I`, `B₂ = b₂(r)I` and `α = q − 2`.
    Anisotropic {
        c0: f64,
        b1: RadialProfile,
        b2: RadialProfile,
    },
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PucciPlus => "pucci_plus",
            Self::PucciMinus => "pucci_minus",
            Self::PLaplacian { .. } => "p_laplacian",
            Self::Anisotropic { .. } => "anisotropic",
        }
    }
}

/// Hölder data of the operator class. Carried for documentation and for
/// checking profiles; evaluation never uses it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityMeta {
    pub theta: f64,
    pub nu: f64,
    pub c1: f64,
    pub c2: f64,
}

impl RegularityMeta {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("nu", self.nu)] {
            if !(v > 0.5 && v <= 1.0) {
                return Err(Error::InvalidOperator(format!("{name} must lie in (1/2, 1], got {v}")));
            }
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::InvalidOperator("C1 and C2 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EllipticOperator {
    pub kind: OperatorKind,
    /// Ellipticity lower bound `a`.
    pub a: f64,
    /// Ellipticity upper bound `A`.
    pub big_a: f64,
    pub alpha: f64,
    pub regularity: Option<RegularityMeta>,
    /// `|u'|` is replaced by `max(|u'|, grad_floor)` inside `|u'|^α`.
    pub grad_floor: f64,
}

/// Operator with its radial profiles resolved at one radius.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PointOperator {
    shape: Shape,
    alpha: f64,
    floor: f64,
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    /// Weights applied to positive and negative eigenvalues.
    Pucci { pos: f64, neg: f64 },
    /// Fixed weights for the radial and tangential eigenvalues.
    Linear { radial: f64, tangential: f64 },
}

/// Value of `F` and its partial derivatives in `u'` and `u''`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Linearization {
    pub value: f64,
    pub d_u1: f64,
    pub d_u2: f64,
}

impl EllipticOperator {
    pub fn pucci(sign: PucciSign, a: f64, big_a: f64, alpha: f64) -> Result<Self> {
        let kind = match sign {
            PucciSign::Plus => OperatorKind::PucciPlus,
            PucciSign::Minus => OperatorKind::PucciMinus,
        };
        Self::from_parts(kind, a, big_a, alpha)
    }

    /// The Laplacian, i.e. either Pucci operator with `a = A = 1`, `α = 0`.
    pub fn laplacian() -> Self {
        Self::pucci(PucciSign::Minus, 1.0, 1.0, 0.0).expect("valid constants")
    }

    /// `Δ_p`; the ellipticity bounds are `min(1, p−1)` and `max(1, p−1)`.
    pub fn p_laplacian(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidOperator(format!("p must be > 1, got {p}")));
        }
        Self::from_parts(
            OperatorKind::PLaplacian { p },
            (p - 1.0).min(1.0),
            (p - 1.0).max(1.0),
            p - 2.0,
        )
    }

    /// `a ≤ b₁ ≤ A` and `b₂² ≤ a` are checked by [`validate_profiles`](Self::validate_profiles).
    pub fn anisotropic(
        q: f64,
        a: f64,
        big_a: f64,
        c0: f64,
        b1: RadialProfile,
        b2: RadialProfile,
    ) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidOperator(format!("q must be > 1, got {q}")));
        }
        if !(c0 > -1.0 && c0.is_finite()) {
            return Err(Error::InvalidOperator(format!("c0 must be > -1, got {c0}")));
        }
        Self::from_parts(OperatorKind::Anisotropic { c0, b1, b2 }, a, big_a, q - 2.0)
    }

    pub fn from_parts(kind: OperatorKind, a: f64, big_a: f64, alpha: f64) -> Result<Self> {
        let op = Self {
            kind,
            a,
            big_a,
            alpha,
            regularity: None,
            grad_floor: DEFAULT_GRAD_FLOOR,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn with_regularity(mut self, meta: RegularityMeta) -> Result<Self> {
        meta.validate()?;
        self.regularity = Some(meta);
        Ok(self)
    }

    pub fn with_grad_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::InvalidOperator(format!("gradient floor must be > 0, got {floor}")));
        }
        self.grad_floor = floor;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidOperator(format!("a must be > 0, got {}", self.a)));
        }
        if !(self.big_a >= self.a && self.big_a.is_finite()) {
            return Err(Error::InvalidOperator(format!(
                "A must satisfy A ≥ a, got a={} A={}",
                self.a, self.big_a
            )));
        }
        if !(self.alpha > -1.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidOperator(format!("alpha must be > -1, got {}", self.alpha)));
        }
        match &self.kind {
            OperatorKind::PLaplacian { p } => {
                if self.alpha != p - 2.0 {
                    return Err(Error::InvalidOperator(format!(
                        "p-Laplacian needs alpha = p - 2, got alpha={} p={p}",
                        self.alpha
                    )));
                }
                if self.a > (p - 1.0).min(1.0) || self.big_a < (p - 1.0).max(1.0) {
                    return Err(Error::InvalidOperator(
                        "p-Laplacian needs a ≤ min(1, p−1) and A ≥ max(1, p−1)".into(),
                    ));
                }
            }
            OperatorKind::Anisotropic { c0, .. } => {
                if !(*c0 > -1.0) {
                    return Err(Error::InvalidOperator(format!("c0 must be > -1, got {c0}")));
                }
            }
            OperatorKind::PucciPlus | OperatorKind::PucciMinus => {}
        }
        if let Some(meta) = &self.regularity {
            meta.validate()?;
        }
        Ok(())
    }

    /// Checks the anisotropic matrix profiles on `[0, radius]`.
    pub fn validate_profiles(&self, radius: f64) -> Result<()> {
        let OperatorKind::Anisotropic { b1, b2, .. } = &self.kind else {
            return Ok(());
        };
        const SAMPLES: usize = 1000;
        for j in 0..=SAMPLES {
            let r = radius * j as f64 / SAMPLES as f64;
            let (v1, v2) = (b1.eval(r), b2.eval(r));
            if !(v1 >= self.a && v1 <= self.big_a) {
                return Err(Error::InvalidOperator(format!(
                    "b1({r}) = {v1} outside [a, A] = [{}, {}]",
                    self.a, self.big_a
                )));
            }
            if !(v2 * v2 <= self.a) {
                return Err(Error::InvalidOperator(format!(
                    "b2({r})² = {} exceeds a = {}",
                    v2 * v2,
                    self.a
                )));
            }
        }
        Ok(())
    }

    /// Largest Hölder quotient `|b(r) − b(s)| / |r − s|^θ` of the
    /// anisotropic profiles over pairs of sample radii, compared with the
    /// declared `C₁`. `None` when there is nothing to check.
    pub fn check_regularity(&self, radius: f64, samples: usize) -> Option<(f64, bool)> {
        let meta = self.regularity?;
        let OperatorKind::Anisotropic { b1, b2, .. } = &self.kind else {
            return None;
        };
        let rs: Vec<f64> = (0..=samples).map(|j| radius * j as f64 / samples as f64).collect();
        let mut worst: f64 = 0.0;
        for profile in [b1, b2] {
            let vals: Vec<f64> = rs.iter().map(|&r| profile.eval(r)).collect();
            for i in 0..rs.len() {
                for j in i + 1..rs.len() {
                    let q = (vals[j] - vals[i]).abs() / (rs[j] - rs[i]).powf(meta.theta);
                    worst = worst.max(q);
                }
            }
        }
        Some((worst, worst <= meta.c1))
    }

    /// Constants `(a', A')` for which the two-sided ellipticity bound holds
    /// for this operator.
    pub fn structure_bounds(&self) -> (f64, f64) {
        match &self.kind {
            OperatorKind::Anisotropic { c0, .. } => (
                self.a * (1.0 + c0.min(0.0)),
                self.big_a + self.a * c0.max(0.0),
            ),
            _ => (self.a, self.big_a),
        }
    }

    pub(crate) fn at(&self, r: f64) -> PointOperator {
        let shape = match &self.kind {
            OperatorKind::PucciPlus => Shape::Pucci {
                pos: self.big_a,
                neg: self.a,
            },
            OperatorKind::PucciMinus => Shape::Pucci {
                pos: self.a,
                neg: self.big_a,
            },
            OperatorKind::PLaplacian { p } => Shape::Linear {
                radial: p - 1.0,
                tangential: 1.0,
            },
            OperatorKind::Anisotropic { c0, b1, b2 } => {
                let (v1, v2) = (b1.eval(r), b2.eval(r));
                Shape::Linear {
                    radial: v1 + c0 * v2 * v2,
                    tangential: v1,
                }
            }
        };
        PointOperator {
            shape,
            alpha: self.alpha,
            floor: self.grad_floor,
        }
    }

    /// `F` for a radial function at radius `r ≥ 0`. At the origin the
    /// tangential eigenvalue `u'/r` is replaced by its limit `u''`.
    pub fn eval_radial_f(&self, dim: usize, r: f64, u1: f64, u2: f64) -> f64 {
        self.at(r).linearize(dim, r, u1, u2).value
    }

    /// `F` written through the Hessian spectrum: gradient modulus `grad`,
    /// radial eigenvalue and tangential eigenvalue (multiplicity `dim − 1`).
    pub fn eval_spectral(&self, dim: usize, r: f64, grad: f64, radial: f64, tangential: f64) -> f64 {
        let point = self.at(r);
        point.grad_factor(grad).0 * point.principal(dim, radial, tangential).0
    }

    /// Left-hand side `F + b_r u'|u'|^α + (c + λ)|u|^α u` at one radius.
    #[allow(clippy::too_many_arguments)]
    pub fn eval_radial_g(
        &self,
        coeff: &crate::profile::CoefficientField,
        dim: usize,
        r: f64,
        u: f64,
        u1: f64,
        u2: f64,
        lambda: f64,
    ) -> f64 {
        let point = self.at(r);
        let f = point.linearize(dim, r, u1, u2).value;
        let (phi, _) = point.grad_factor(u1);
        f + coeff.b.eval(r) * u1 * phi + (coeff.c.eval(r) + lambda) * signed_power(u, self.alpha)
    }
}

impl PointOperator {
    /// `max(|p|, floor)^α` and its derivative in `p`.
    #[inline]
    pub(crate) fn grad_factor(&self, p: f64) -> (f64, f64) {
        if self.alpha == 0.0 {
            return (1.0, 0.0);
        }
        let m = p.abs();
        if m > self.floor {
            let phi = m.powf(self.alpha);
            (phi, self.alpha * phi / p)
        } else {
            (self.floor.powf(self.alpha), 0.0)
        }
    }

    /// Second-order part `S(radial, tangential)` and its two partials.
    #[inline]
    fn principal(&self, dim: usize, radial: f64, tangential: f64) -> (f64, f64, f64) {
        let tmult = (dim - 1) as f64;
        match self.shape {
            Shape::Pucci { pos, neg } => {
                let wr = if radial >= 0.0 { pos } else { neg };
                let wt = if tangential >= 0.0 { pos } else { neg };
                (wr * radial + tmult * wt * tangential, wr, tmult * wt)
            }
            Shape::Linear { radial: wr, tangential: wt } => {
                (wr * radial + tmult * wt * tangential, wr, tmult * wt)
            }
        }
    }

    #[inline]
    pub(crate) fn linearize(&self, dim: usize, r: f64, u1: f64, u2: f64) -> Linearization {
        let (phi, dphi) = self.grad_factor(u1);
        if r > 0.0 {
            let (s, ds_rad, ds_tan) = self.principal(dim, u2, u1 / r);
            Linearization {
                value: phi * s,
                d_u1: dphi * s + phi * ds_tan / r,
                d_u2: phi * ds_rad,
            }
        } else {
            let (s, ds_rad, ds_tan) = self.principal(dim, u2, u2);
            Linearization {
                value: phi * s,
                d_u1: dphi * s,
                d_u2: phi * (ds_rad + ds_tan),
            }
        }
    }
}

/// `|u|^α u`, computed as `sign(u)|u|^{α+1}`.
#[inline]
pub fn signed_power(u: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        u
    } else {
        u.signum() * u.abs().powf(alpha + 1.0)
    }
}

/// Derivative of [`signed_power`], `(α+1)|u|^α`, with `|u|` floored at
/// `floor` so that it stays finite for `α < 0`.
#[inline]
pub(crate) fn signed_power_derivative(u: f64, alpha: f64, floor: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        (alpha + 1.0) * u.abs().max(floor).powf(alpha)
    }
}

/// Where the property checks draw their random radial states.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SampleDomain {
    pub dim: usize,
    pub radius: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleOutcome {
    Pass { rel_error: f64 },
    Fail { rel_error: f64 },
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub operator: String,
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
    /// Up to ten failing samples, formatted for humans.
    pub failures: Vec<String>,
}

impl PropertyReport {
    fn new(property: &str, op: &EllipticOperator, samples: usize) -> Self {
        Self {
            property: property.into(),
            operator: op.kind.name().into(),
            samples,
            passed: 0,
            failed: 0,
            skipped: 0,
            max_rel_error: 0.0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, outcome: SampleOutcome, describe: impl FnOnce() -> String) {
        match outcome {
            SampleOutcome::Pass { rel_error } => {
                self.passed += 1;
                self.max_rel_error = self.max_rel_error.max(rel_error);
            }
            SampleOutcome::Fail { rel_error } => {
                self.failed += 1;
                self.max_rel_error = self.max_rel_error.max(rel_error);
                if self.failures.len() < 10 {
                    self.failures.push(describe());
                }
            }
            SampleOutcome::Skipped => self.skipped += 1,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

pub const HOMOGENEITY_TOL: f64 = 1e-12;
pub const ELLIPTICITY_TOL: f64 = 1e-10;

/// Compares `F(t·p, μ·X)` with `|t|^α μ F(p, X)` in spectral form.
#[allow(clippy::too_many_arguments)]
pub fn homogeneity_sample(
    op: &EllipticOperator,
    dim: usize,
    r: f64,
    u1: f64,
    radial: f64,
    tangential: f64,
    t: f64,
    mu: f64,
) -> SampleOutcome {
    if u1.abs() <= op.grad_floor || (t * u1).abs() <= op.grad_floor {
        return SampleOutcome::Skipped;
    }
    let lhs = op.eval_spectral(dim, r, t * u1, mu * radial, mu * tangential);
    let rhs = t.abs().powf(op.alpha) * mu * op.eval_spectral(dim, r, u1, radial, tangential);
    let scale = lhs.abs().max(rhs.abs());
    let rel_error = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    if rel_error <= HOMOGENEITY_TOL {
        SampleOutcome::Pass { rel_error }
    } else {
        SampleOutcome::Fail { rel_error }
    }
}

/// Tests `a'|p|^α tr N ≤ F(p, M+N) − F(p, M) ≤ A'|p|^α tr N` for a
/// nonnegative perturbation `N` with radial part `n_radial` and tangential
/// part `n_tangential`.
#[allow(clippy::too_many_arguments)]
pub fn ellipticity_sample(
    op: &EllipticOperator,
    dim: usize,
    r: f64,
    u1: f64,
    radial: f64,
    tangential: f64,
    n_radial: f64,
    n_tangential: f64,
) -> SampleOutcome {
    if u1.abs() <= op.grad_floor {
        return SampleOutcome::Skipped;
    }
    let base = op.eval_spectral(dim, r, u1, radial, tangential);
    let bumped = op.eval_spectral(dim, r, u1, radial + n_radial, tangential + n_tangential);
    let diff = bumped - base;
    let trace = n_radial + (dim - 1) as f64 * n_tangential;
    let grad = u1.abs().powf(op.alpha);
    let (lo, hi) = op.structure_bounds();
    let (lower, upper) = (lo * grad * trace, hi * grad * trace);
    let scale = base.abs().max(bumped.abs()).max(upper).max(f64::MIN_POSITIVE);
    let violation = (lower - diff).max(diff - upper).max(0.0);
    let rel_error = violation / scale;
    if rel_error <= ELLIPTICITY_TOL {
        SampleOutcome::Pass { rel_error }
    } else {
        SampleOutcome::Fail { rel_error }
    }
}

fn random_state(rng: &mut ChaCha8Rng, domain: &SampleDomain) -> (f64, f64, f64, f64) {
    let r = domain.radius * rng.gen_range(1e-3..=1.0);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let u1 = sign * 10f64.powf(rng.gen_range(-3.0..1.0));
    let radial = rng.gen_range(-5.0..5.0);
    let tangential = rng.gen_range(-5.0..5.0);
    (r, u1, radial, tangential)
}

/// Random-sample check of gradient/Hessian homogeneity.
pub fn check_homogeneity(op: &EllipticOperator, domain: SampleDomain, sample_count: usize) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(domain.seed);
    let mut report = PropertyReport::new("homogeneity", op, sample_count);
    for _ in 0..sample_count {
        let (r, u1, radial, tangential) = random_state(&mut rng, &domain);
        let t_sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let t = t_sign * 10f64.powf(rng.gen_range(-1.0..1.0));
        let mu = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.0..5.0) };
        let outcome = homogeneity_sample(op, domain.dim, r, u1, radial, tangential, t, mu);
        report.record(outcome, || {
            format!("r={r} u1={u1} radial={radial} tangential={tangential} t={t} mu={mu}")
        });
    }
    report
}

/// Random-sample check of the two-sided ellipticity bound.
pub fn check_ellipticity(op: &EllipticOperator, domain: SampleDomain, sample_count: usize) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(domain.seed.wrapping_add(1));
    let mut report = PropertyReport::new("ellipticity", op, sample_count);
    for _ in 0..sample_count {
        let (r, u1, radial, tangential) = random_state(&mut rng, &domain);
        let n_radial = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..5.0) };
        let n_tangential = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..5.0) };
        let outcome = ellipticity_sample(op, domain.dim, r, u1, radial, tangential, n_radial, n_tangential);
        report.record(outcome, || {
            format!(
                "r={r} u1={u1} radial={radial} tangential={tangential} n_radial={n_radial} n_tangential={n_tangential}"
            )
        });
    }
    report
}
