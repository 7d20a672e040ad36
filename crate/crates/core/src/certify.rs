//! Explicit positive supersolution for a zero-order coefficient that is
//! positive near the center of the ball, with closed-form margins and a
//! grid check; the Hopf barrier exponent; volume integral of `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, RadialGrid};
use crate::operators::{signed_power, EllipticOperator, PucciSign};
use crate::profile::RadialProfile;

/// Structure data and band parameters, before the shell widths are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupersolutionInputs {
    pub dim: usize,
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub rho: f64,
    pub k: f64,
    pub beta1: f64,
    pub beta2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupersolutionParams {
    #[serde(flatten)]
    pub inputs: SupersolutionInputs,
    pub eps: f64,
    pub eps_prime: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// Bound on `β₂` in the limit of vanishing shells.
    pub beta2_bound: f64,
    /// Bound on `β₂` with the actual `D`.
    pub beta2_bound_exact: f64,
}

impl SupersolutionInputs {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("A", self.big_a),
            ("R", self.radius),
            ("rho", self.rho),
            ("k", self.k),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Certify(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.dim < 1 {
            return Err(Error::Certify("dimension must be at least 1".into()));
        }
        if self.big_a < self.a {
            return Err(Error::Certify(format!("need a ≤ A, got a = {}, A = {}", self.a, self.big_a)));
        }
        if !(self.alpha > -1.0) || !self.alpha.is_finite() {
            return Err(Error::Certify(format!("alpha must exceed -1, got {}", self.alpha)));
        }
        if self.rho >= self.radius {
            return Err(Error::Certify(format!("need rho < R, got rho = {}, R = {}", self.rho, self.radius)));
        }
        Ok(())
    }

    /// `k^{α+1} e^{−(α+1)kρ} a (k + (N−1)/ρ)`.
    fn inner_strength(&self) -> f64 {
        let q = self.alpha + 1.0;
        let n = self.dim as f64;
        self.k.powf(q) * (-q * self.k * self.rho).exp() * self.a * (self.k + (n - 1.0) / self.rho)
    }

    fn bound_for_d(&self, d: f64) -> f64 {
        self.inner_strength() / (d + 1.0 - (-self.k * self.rho).exp()).powf(self.alpha + 1.0)
    }

    /// Value of `D` as both shell widths tend to zero.
    pub fn limit_d(&self) -> Result<f64> {
        let (n, r, rho, a, big_a) = (self.dim as f64, self.radius, self.rho, self.a, self.big_a);
        let inner = (2.0 * n * big_a * r - (n - 1.0) * a * (r + rho)) / (self.beta1 * r * (r - rho));
        if !(inner > 0.0) {
            return Err(Error::Certify("limit bracket is not positive".into()));
        }
        Ok(self.k * ((r - rho) / 4.0 + inner.powf(1.0 / (self.alpha + 1.0))))
    }

    pub fn beta2_upper_bound(&self) -> Result<f64> {
        self.validate_geometry()?;
        let bound = self.bound_for_d(self.limit_d()?);
        if !bound.is_finite() || !(bound > 0.0) {
            return Err(Error::Certify(format!("bound evaluates to {bound}")));
        }
        Ok(bound)
    }

    fn validate_geometry(&self) -> Result<()> {
        // β₂ does not enter the bound
        Self { beta2: 1.0, ..*self }.validate()
    }

    /// `{N[(A−a)(R−ε) + A(R−ε) − aρ] + a(R+ρ−ε)}`.
    fn brace(&self, eps: f64) -> f64 {
        let n = self.dim as f64;
        let outer = self.radius - eps;
        n * ((self.big_a - self.a) * outer + self.big_a * outer - self.a * self.rho) + self.a * (self.radius + self.rho - eps)
    }
}

/// Limit-form bound on `β₂` for the given structure data.
#[allow(clippy::too_many_arguments)]
pub fn beta2_upper_bound(dim: usize, a: f64, big_a: f64, alpha: f64, radius: f64, rho: f64, k: f64, beta1: f64) -> Result<f64> {
    SupersolutionInputs {
        dim,
        a,
        big_a,
        alpha,
        radius,
        rho,
        k,
        beta1,
        beta2: 1.0,
    }
    .beta2_upper_bound()
}

/// Fills `E`, `C`, `D` for explicit shell widths `0 < ε < ε′ < R − ρ` and
/// checks the positivity, empty-jet and exact `β₂` conditions.
pub fn params_for_shells(inputs: &SupersolutionInputs, eps: f64, eps_prime: f64) -> Result<SupersolutionParams> {
    inputs.validate()?;
    let gap = inputs.radius - inputs.rho;
    if !(0.0 < eps && eps < eps_prime && eps_prime < gap) {
        return Err(Error::Certify(format!(
            "need 0 < eps < eps' < R - rho, got eps = {eps}, eps' = {eps_prime}"
        )));
    }
    let q = inputs.alpha + 1.0;
    let span = gap - eps;
    let e = inputs.k / (gap - eps_prime);
    let c = span.powf(inputs.alpha / q) / (inputs.beta1.powf(1.0 / q) * (inputs.radius - eps).powf(1.0 / q))
        * inputs.brace(eps).powf(1.0 / q);
    let d = e / 4.0 * span * span + e * c + eps;
    if !(e * span > inputs.k) {
        return Err(Error::Certify("E(R - rho - eps) > k fails".into()));
    }
    if !(d > e / 4.0 * span * span) {
        return Err(Error::Certify("D > E/4 (R - rho - eps)^2 fails".into()));
    }
    let beta2_bound = inputs.beta2_upper_bound()?;
    let beta2_bound_exact = inputs.bound_for_d(d);
    if !(inputs.beta2 < beta2_bound_exact) {
        return Err(Error::Certify(format!(
            "beta2 = {} is not below {beta2_bound_exact} for eps = {eps}",
            inputs.beta2
        )));
    }
    Ok(SupersolutionParams {
        inputs: *inputs,
        eps,
        eps_prime,
        e,
        c,
        d,
        beta2_bound,
        beta2_bound_exact,
    })
}

/// Chooses `ε′ = (R−ρ)/4 · 2^{−j}`, `ε = ε′/2` for the first `j < 20` that
/// satisfies [`params_for_shells`].
pub fn build_params(inputs: &SupersolutionInputs) -> Result<SupersolutionParams> {
    inputs.validate()?;
    let bound = inputs.beta2_upper_bound()?;
    if !(inputs.beta2 < bound) {
        return Err(Error::Certify(format!(
            "beta2 = {} is not below the bound {bound}",
            inputs.beta2
        )));
    }
    let mut eps_prime = (inputs.radius - inputs.rho) / 4.0;
    let mut last = None;
    for _ in 0..20 {
        match params_for_shells(inputs, eps_prime / 2.0, eps_prime) {
            Ok(p) => return Ok(p),
            Err(e) => last = Some(e),
        }
        eps_prime /= 2.0;
    }
    Err(Error::Certify(format!(
        "no admissible shell width after 20 halvings (bound {bound}); last failure: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// The three-branch radial supersolution, plus an optional constant offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PiecewiseRadialFn {
    pub params: SupersolutionParams,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Inner,
    Middle,
    Outer,
}

pub fn build_supersolution(params: &SupersolutionParams) -> PiecewiseRadialFn {
    PiecewiseRadialFn { params: *params, offset: 0.0 }
}

impl PiecewiseRadialFn {
    pub fn shifted(&self, by: f64) -> Self {
        Self { offset: self.offset + by, ..*self }
    }

    /// `0`, `ρ` and `R − ε`, where the function has no second-order jet.
    pub fn breakpoints(&self) -> [f64; 3] {
        let p = &self.params;
        [0.0, p.inputs.rho, p.inputs.radius - p.eps]
    }

    pub fn region(&self, r: f64) -> Region {
        let p = &self.params;
        if r <= p.inputs.rho {
            Region::Inner
        } else if r <= p.inputs.radius - p.eps {
            Region::Middle
        } else {
            Region::Outer
        }
    }

    /// Value and first two radial derivatives on the branch containing `r`.
    pub fn jet(&self, r: f64) -> (f64, f64, f64) {
        let p = &self.params;
        let (rho, radius, eps, k, e, d) = (p.inputs.rho, p.inputs.radius, p.eps, p.inputs.k, p.e, p.d);
        let (v, v1, v2) = match self.region(r) {
            Region::Outer => (d, 0.0, 0.0),
            Region::Middle => {
                let s = radius + rho - eps;
                (e * r * r - e * s * r + d + e * rho * (radius - eps), e * (2.0 * r - s), 2.0 * e)
            }
            Region::Inner => {
                let x = (k * (r - rho)).exp();
                (d + 1.0 - x, -k * x, -k * k * x)
            }
        };
        (v + self.offset, v1, v2)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).0
    }

    pub fn sample(&self, grid: &RadialGrid) -> GridFunction {
        GridFunction::from_fn(*grid, |r| self.value(r))
    }

    /// Middle-branch minimum `D − (E/4)(R − ρ − ε)²`, attained at `(R + ρ − ε)/2`.
    pub fn middle_minimum(&self) -> f64 {
        let p = &self.params;
        let span = p.inputs.radius - p.inputs.rho - p.eps;
        p.d - p.e / 4.0 * span * span + self.offset
    }

    /// `sup v = D + 1 − e^{−kρ}`, attained at the center.
    pub fn sup(&self) -> f64 {
        self.value(0.0)
    }
}

/// Continuous profile inside the admissible band: `β₂/2` near the center,
/// `−β₁` on the middle annulus and `−β₁/2` near the boundary, with linear
/// transitions of width `min(ε, ρ)/4`.
pub fn default_c_band(params: &SupersolutionParams) -> RadialProfile {
    let p = &params.inputs;
    let w = params.eps.min(p.rho) / 4.0;
    let outer = p.radius - params.eps;
    let mut knots = vec![
        (0.0, p.beta2 / 2.0),
        (p.rho - w, p.beta2 / 2.0),
        (p.rho, -p.beta1),
        (outer, -p.beta1),
        (outer + w, -p.beta1 / 2.0),
    ];
    if outer + w < p.radius {
        knots.push((p.radius, -p.beta1 / 2.0));
    }
    RadialProfile::Table(knots)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub params: SupersolutionParams,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub grid_margin: f64,
    pub integral_c: f64,
    pub verdict: CertificateVerdict,
    /// `min(m₁, m₂, m₃)/(sup v)^{α+1}` when accepted.
    pub lambda_lower_bound: Option<f64>,
    pub reasons: Vec<String>,
}

impl Certificate {
    pub fn accepted(&self) -> bool {
        self.verdict == CertificateVerdict::Accept
    }

    pub fn min_margin(&self) -> f64 {
        self.m1.min(self.m2).min(self.m3)
    }
}

/// Closed-form margins of the three regions for the band profile `c`.
/// `m₁` uses the supremum of `c` on the outer shell, sampled densely.
pub fn closed_form_margins(params: &SupersolutionParams, c: &RadialProfile) -> (f64, f64, f64) {
    let p = &params.inputs;
    let q = p.alpha + 1.0;
    let outer = p.radius - params.eps;
    let samples = 1000;
    let c_outer = (1..=samples)
        .map(|i| c.eval(outer + params.eps * i as f64 / samples as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let m1 = -c_outer * params.d.powf(q);

    let span = p.radius - p.rho - params.eps;
    let m2 = p.beta1 * (params.d - params.e / 4.0 * span * span).powf(q)
        - params.e.powf(q) * span.powf(p.alpha) / outer * p.brace(params.eps);
    let m3 = p.inner_strength() - p.beta2 * (params.d + 1.0 - (-p.k * p.rho).exp()).powf(q);
    (m1, m2, m3)
}

/// Checks the supersolution inequality for `v` and `c` in closed form and
/// node-wise on `grid`, whose radius and dimension must match the params.
///
/// The node-wise check evaluates the maximal Pucci operator with the
/// structure constants `(a, A, α)`, which dominates every operator in the
/// class, and skips nodes within one cell of a breakpoint.
pub fn verify(
    params: &SupersolutionParams,
    v: &PiecewiseRadialFn,
    c: &RadialProfile,
    grid: &RadialGrid,
) -> Result<Certificate> {
    let p = &params.inputs;
    if grid.dim() != p.dim || (grid.radius() - p.radius).abs() > 1e-12 * p.radius {
        return Err(Error::Certify("grid radius and dimension must match the parameters".into()));
    }
    let h = grid.spacing();
    let outer = p.radius - params.eps;
    let counts = grid.nodes().fold([0usize; 3], |mut acc, r| {
        if r < p.rho {
            acc[0] += 1;
        } else if r > p.rho && r < outer {
            acc[1] += 1;
        } else if r > outer {
            acc[2] += 1;
        }
        acc
    });
    if counts.iter().any(|&n| n < 20) {
        return Err(Error::Certify(format!(
            "grid too coarse: inner/middle/outer regions hold {counts:?} nodes, need at least 20 each"
        )));
    }

    let mut reasons = Vec::new();
    let (m1, m2, m3) = closed_form_margins(params, c);
    for (name, m) in [("m1", m1), ("m2", m2), ("m3", m3)] {
        if !(m > 0.0) {
            reasons.push(format!("{name} = {m:e} is not positive"));
        }
    }

    // band membership on a dense sample
    let samples = 4000;
    for i in 0..=samples {
        let r = p.radius * i as f64 / samples as f64;
        let value = c.eval(r);
        let ok = if r <= p.rho {
            value <= p.beta2
        } else if r <= outer {
            value <= -p.beta1
        } else {
            value < 0.0
        };
        if !ok {
            reasons.push(format!("c({r}) = {value} leaves the band"));
            break;
        }
    }

    let fine = RadialGrid::new(p.radius, p.dim, 8 * (grid.len() - 1) + 1)?;
    let v_min = fine.nodes().map(|r| v.value(r)).fold(f64::INFINITY, f64::min).min(v.middle_minimum());
    if !(v_min > 0.0) {
        reasons.push(format!("v is not positive (minimum {v_min:e})"));
    }

    let op = EllipticOperator::pucci(PucciSign::Plus, p.a, p.big_a, p.alpha)?;
    let breakpoints = v.breakpoints();
    let mut grid_margin = f64::INFINITY;
    for r in grid.nodes() {
        if breakpoints.iter().any(|b| (r - b).abs() <= h) {
            continue;
        }
        let (value, v1, v2) = v.jet(r);
        let f = op.eval_radial_f(p.dim, r, v1, v2);
        grid_margin = grid_margin.min(-(f + c.eval(r) * signed_power(value, p.alpha)));
    }
    if !(grid_margin > 0.0) {
        reasons.push(format!("grid margin {grid_margin:e} is not positive"));
    }

    let integral_c = integral_of_c(c, grid);
    let verdict = if reasons.is_empty() {
        CertificateVerdict::Accept
    } else {
        CertificateVerdict::Reject
    };
    let lambda_lower_bound =
        (verdict == CertificateVerdict::Accept).then(|| m1.min(m2).min(m3) / v.sup().powf(p.alpha + 1.0));
    Ok(Certificate {
        params: *params,
        m1,
        m2,
        m3,
        grid_margin,
        integral_c,
        verdict,
        lambda_lower_bound,
        reasons,
    })
}

/// Smallest `k ≥ 0` with `a k^{α+2} − (A(N−1)/ρ + |b|∞) k^{α+1} − |c|∞ ≥ 1e−8`,
/// located by bisection to `1e−10`.
pub fn barrier_exponent(a: f64, big_a: f64, dim: usize, rho: f64, b_sup: f64, c_sup: f64, alpha: f64) -> Result<f64> {
    const MARGIN: f64 = 1e-8;
    if !(a > 0.0) || !(big_a >= a) || !(rho > 0.0) || !(b_sup >= 0.0) || !(c_sup >= 0.0) || !(alpha > -1.0) || dim < 1 {
        return Err(Error::InvalidOperator(
            "barrier exponent needs 0 < a ≤ A, rho > 0, |b|, |c| ≥ 0 and alpha > -1".into(),
        ));
    }
    let slope = big_a * (dim as f64 - 1.0) / rho + b_sup;
    let f = |k: f64| a * k.powf(alpha + 2.0) - slope * k.powf(alpha + 1.0) - c_sup;
    let mut lo = slope / a;
    let mut hi = lo.max(1.0);
    while f(hi) < MARGIN {
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= MARGIN {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Volume of the unit ball in `ℝ^N`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        n => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Trapezoid rule for `∫_{B(0,R)} c dx = ∫_0^R c(r) N ω_N r^{N−1} dr` on the grid nodes.
pub fn integral_of_c(c: &RadialProfile, grid: &RadialGrid) -> f64 {
    let n = grid.dim();
    let weight = n as f64 * unit_ball_volume(n);
    let f = |r: f64| c.eval(r) * weight * r.powi(n as i32 - 1);
    let h = grid.spacing();
    let values: Vec<f64> = grid.nodes().map(f).collect();
    let last = values.len() - 1;
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[last]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn example(a: f64, big_a: f64, beta2: f64) -> SupersolutionInputs {
        SupersolutionInputs {
            dim: 2,
            a,
            big_a,
            alpha: 0.0,
            radius: 1.0,
            rho: 0.25,
            k: 4.0,
            beta1: 10.0,
            beta2,
        }
    }

    #[test]
    fn upper_bound_example() {
        let inputs = example(1.0, 1.0, 2.0);
        // numerator 32/e, denominator 4(3/16 + 2.75/7.5) + 1 − 1/e
        let num = 32.0 / std::f64::consts::E;
        let den = 4.0 * (0.1875 + 2.75 / 7.5) + 1.0 - (-1.0_f64).exp();
        assert!((num - 11.77).abs() < 5e-3);
        assert!((den - 2.849).abs() < 1e-3);
        assert!((num / den - 4.13).abs() < 5e-3);
        assert_relative_eq!(inputs.beta2_upper_bound().unwrap(), num / den, max_relative = 1e-14);
        assert_relative_eq!(beta2_upper_bound(2, 1.0, 1.0, 0.0, 1.0, 0.25, 4.0, 10.0).unwrap(), num / den, max_relative = 1e-14);
    }

    #[test]
    fn build_params_example() {
        let p = build_params(&example(1.0, 1.0, 2.0)).unwrap();
        let span = 1.0 - 0.25 - p.eps;
        assert!(p.e * span > 4.0);
        assert!(p.d > p.e / 4.0 * span * span);
        assert!(p.eps < p.eps_prime);
        assert!(2.0 < p.beta2_bound_exact);

        let err = build_params(&example(1.0, 1.0, 10.0)).unwrap_err();
        assert!(err.to_string().contains("not below the bound"), "{err}");
    }

    #[test]
    fn d_tends_to_limit_for_small_shells() {
        let inputs = example(1.0, 2.0, 1.0);
        let limit = inputs.limit_d().unwrap();
        let mut prev = f64::INFINITY;
        for eps_prime in [1e-2, 1e-4, 1e-6, 1e-8] {
            let p = params_for_shells(&inputs, eps_prime / 2.0, eps_prime).unwrap();
            let gap = (p.d - limit).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn supersolution_identities() {
        let p = build_params(&example(1.0, 2.0, 1.0)).unwrap();
        let v = build_supersolution(&p);
        assert_eq!(v.value(1.0), p.d);
        let rho = 0.25;
        let middle_at_rho = p.e * rho * rho - p.e * (1.0 + rho - p.eps) * rho + p.d + p.e * rho * (1.0 - p.eps);
        assert_relative_eq!(middle_at_rho, p.d, max_relative = 1e-12);
        assert_relative_eq!(v.value(rho), p.d, max_relative = 1e-12);
        let mid = (1.0 + rho - p.eps) / 2.0;
        assert_relative_eq!(v.value(mid), v.middle_minimum(), max_relative = 1e-12);
        assert_eq!(v.jet(mid).1, 0.0);
        assert!(v.value(0.0) > p.d);
    }

    #[test]
    fn band_profile_is_admissible() {
        let p = build_params(&example(1.0, 2.0, 1.0)).unwrap();
        let c = default_c_band(&p);
        assert_eq!(c.eval(0.0), 0.5);
        assert_eq!(c.eval((0.25 + 1.0 - p.eps) / 2.0), -10.0);
        for i in 0..=1000 {
            let r = i as f64 / 1000.0;
            let value = c.eval(r);
            if r <= 0.25 {
                assert!(value <= 1.0);
            } else if r <= 1.0 - p.eps {
                assert!(value <= -10.0);
            } else {
                assert!(value < 0.0);
            }
        }
        for i in 0..=100 {
            assert_eq!(c.eval(0.125 * i as f64 / 100.0), 0.5);
        }
        let grid = RadialGrid::new(1.0, 2, 2001).unwrap();
        assert!(integral_of_c(&c, &grid) < 0.0);
    }

    #[test]
    fn verify_accepts_and_rejects() {
        let grid = RadialGrid::new(1.0, 2, 2001).unwrap();
        let p = build_params(&example(1.0, 1.0, 2.0)).unwrap();
        let v = build_supersolution(&p);
        let c = default_c_band(&p);
        let cert = verify(&p, &v, &c, &grid).unwrap();
        assert!(cert.accepted(), "{:?}", cert.reasons);
        assert!(cert.min_margin() > 0.0 && cert.grid_margin > 0.0);
        assert!(cert.integral_c < 0.0);
        // closed forms are worst-case bounds on the middle and inner regions
        assert!(cert.grid_margin >= cert.m2.min(cert.m3) - 1e-6);

        let weak = SupersolutionParams {
            inputs: SupersolutionInputs { beta1: 0.01, ..p.inputs },
            ..p
        };
        let cert = verify(&weak, &v, &default_c_band(&weak), &grid).unwrap();
        assert!(cert.m2 <= 0.0);
        assert!(!cert.accepted());

        let cert = verify(&p, &v.shifted(-p.d), &c, &grid).unwrap();
        assert!(!cert.accepted());
        assert!(cert.reasons.iter().any(|r| r.contains("not positive")));

        let coarse = RadialGrid::new(1.0, 2, 41).unwrap();
        assert!(verify(&p, &v, &c, &coarse).is_err());
    }

    #[test]
    fn barrier_exponent_examples() {
        let k = barrier_exponent(1.0, 1.0, 2, 0.5, 0.0, 1.0, 0.0).unwrap();
        assert!((k - (1.0 + 2.0_f64.sqrt())).abs() < 1e-8);

        let k = barrier_exponent(1.0, 1.0, 2, 0.5, 0.0, 0.0, 0.0).unwrap();
        assert!(k > 2.0 && k - 2.0 < 1e-8);

        // k³ − 5k² − 1 = 0 by an independent bisection
        let k = barrier_exponent(1.0, 2.0, 3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let (mut lo, mut hi) = (5.0_f64, 6.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) - 5.0 * mid * mid - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((k - lo).abs() < 1e-8);
    }

    #[test]
    fn integral_examples() {
        let grid = RadialGrid::new(1.0, 2, 101).unwrap();
        assert_relative_eq!(integral_of_c(&RadialProfile::Const(-1.0), &grid), -std::f64::consts::PI, max_relative = 1e-14);
        assert_eq!(integral_of_c(&RadialProfile::Const(0.0), &grid), 0.0);
        let grid3 = RadialGrid::new(1.0, 3, 2001).unwrap();
        assert_relative_eq!(integral_of_c(&RadialProfile::Const(1.0), &grid3), 4.0 * std::f64::consts::PI / 3.0, max_relative = 1e-6);
        assert_relative_eq!(unit_ball_volume(4), std::f64::consts::PI.powi(2) / 2.0, max_relative = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn continuity_and_minimum_identity(
            rho in 0.05..0.8f64,
            k in 0.5..8.0f64,
            beta1 in 1.0..50.0f64,
            alpha in -0.5..1.5f64,
            big_a in 1.0..3.0f64,
            frac in 0.05..0.95f64,
        ) {
            let mut inputs = SupersolutionInputs { dim: 2, a: 1.0, big_a, alpha, radius: 1.0, rho, k, beta1, beta2: 1.0 };
            let bound = inputs.beta2_upper_bound().unwrap();
            inputs.beta2 = frac * bound;
            if let Ok(p) = build_params(&inputs) {
                let v = build_supersolution(&p);
                let d = p.d;
                prop_assert!((v.value(rho) - d).abs() <= 1e-12 * d);
                let outer = 1.0 - p.eps;
                let left = v.value(outer);
                let right = v.value(outer + 1e-15_f64.max(outer * f64::EPSILON));
                prop_assert!((left - right).abs() <= 1e-12 * d);
                let inner_limit = d + 1.0 - (k * (rho * (1.0 - 1e-16) - rho)).exp();
                prop_assert!((v.value(rho * (1.0 - 1e-16)) - inner_limit).abs() <= 1e-12 * d);
                let mid = (1.0 + rho - p.eps) / 2.0;
                prop_assert!((v.value(mid) - v.middle_minimum()).abs() <= 1e-12 * d);
            }
        }

        #[test]
        fn bound_increases_with_beta1(beta1 in 0.5..50.0f64, factor in 1.1..4.0f64) {
            let small = beta2_upper_bound(2, 1.0, 2.0, 0.0, 1.0, 0.3, 3.0, beta1).unwrap();
            let large = beta2_upper_bound(2, 1.0, 2.0, 0.0, 1.0, 0.3, 3.0, beta1 * factor).unwrap();
            prop_assert!(large > small);
        }
    }
}
