//! Radial coefficient profiles `b_r(r)`, `c(r)`, `g(r)`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// A scalar function of the radius.
#[derive(Clone)]
pub enum RadialProfile {
    Const(f64),
    /// Polynomial in `r`, lowest degree first.
    Poly(Vec<f64>),
    /// Linear interpolation between `(r, value)` knots, constant outside.
    Table(Vec<(f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(v) => f.debug_tuple("Const").field(v).finish(),
            Self::Poly(c) => f.debug_tuple("Poly").field(c).finish(),
            Self::Table(t) => f.debug_struct("Table").field("knots", &t.len()).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl RadialProfile {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    /// Builds a table profile, validating that knots are finite and strictly
    /// increasing in `r`.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidProfile("table needs at least one knot".into()));
        }
        if knots.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidProfile("table knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidProfile(
                "table radii must be strictly increasing".into(),
            ));
        }
        Ok(Self::Table(knots))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Const(v) => *v,
            Self::Poly(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c),
            Self::Table(knots) => interpolate(knots, r),
            Self::Custom(f) => f(r),
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes().map(|r| self.eval(r)).collect()
    }

    /// Sup norm over the grid nodes.
    pub fn sup_norm(&self, grid: &RadialGrid) -> f64 {
        grid.nodes().map(|r| self.eval(r).abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Const(v) if *v == 0.0)
    }

    /// Parses the textual profile forms `const:<v>`, `poly:<c0,c1,...>` and
    /// `table:<path>`; table files are CSV with a header row and columns `r,value`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (tag, body) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidProfile(format!("'{spec}' has no '<kind>:' prefix")))?;
        match tag.trim() {
            "const" => Ok(Self::Const(parse_number(body)?)),
            "poly" => {
                let coeffs = body
                    .split(',')
                    .map(parse_number)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Poly(coeffs))
            }
            "table" => Self::read_table(Path::new(body.trim())),
            other => Err(Error::InvalidProfile(format!("unknown profile kind '{other}'"))),
        }
    }

    pub fn read_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut knots = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let (Some(r), Some(v)) = (cols.next(), cols.next()) else {
                return Err(Error::InvalidProfile(format!(
                    "{}:{}: expected two columns",
                    path.display(),
                    lineno + 1
                )));
            };
            knots.push((parse_number(r)?, parse_number(v)?));
        }
        Self::table(knots)
    }
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidProfile(format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::InvalidProfile(format!("'{}' is not finite", s.trim())));
    }
    Ok(v)
}

fn interpolate(knots: &[(f64, f64)], r: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if r <= first.0 {
        return first.1;
    }
    if r >= last.0 {
        return last.1;
    }
    let idx = knots.partition_point(|(x, _)| *x <= r);
    let (r0, v0) = knots[idx - 1];
    let (r1, v1) = knots[idx];
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

/// Radial profiles of the lower-order coefficients. The drift is
/// `b(x) = b_r(|x|) x/|x|`.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub b: RadialProfile,
    pub c: RadialProfile,
    pub g: RadialProfile,
}

impl CoefficientField {
    pub fn new(b: RadialProfile, c: RadialProfile, g: RadialProfile) -> Self {
        Self { b, c, g }
    }

    /// `b ≡ 0`, `g ≡ 0` and the given zero-order coefficient.
    pub fn with_c(c: RadialProfile) -> Self {
        Self {
            b: RadialProfile::Const(0.0),
            c,
            g: RadialProfile::Const(0.0),
        }
    }

    pub fn sup_norms(&self, grid: &RadialGrid) -> (f64, f64, f64) {
        (
            self.b.sup_norm(grid),
            self.c.sup_norm(grid),
            self.g.sup_norm(grid),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_is_horner() {
        let p = RadialProfile::Poly(vec![1.0, 0.0, -1.0]);
        assert_eq!(p.eval(0.5), 0.75);
        assert_eq!(RadialProfile::parse("poly:1,0,-1").unwrap().eval(2.0), -3.0);
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let t = RadialProfile::table(vec![(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_eq!(t.eval(0.25), 1.5);
        assert_eq!(t.eval(-1.0), 1.0);
        assert_eq!(t.eval(2.0), 3.0);
        assert!(RadialProfile::table(vec![(1.0, 0.0), (0.5, 0.0)]).is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(RadialProfile::parse("const").is_err());
        assert!(RadialProfile::parse("const:abc").is_err());
        assert!(RadialProfile::parse("spline:1").is_err());
        assert_eq!(RadialProfile::parse("const:-2.5").unwrap().eval(0.3), -2.5);
    }

    #[test]
    fn sup_norm_on_grid() {
        let grid = RadialGrid::new(1.0, 2, 5).unwrap();
        let c = RadialProfile::Poly(vec![-1.0, 0.0, -1.0]);
        assert_eq!(c.sup_norm(&grid), 2.0);
    }
}
