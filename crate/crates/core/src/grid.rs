//! Uniform radial grid on `[0, R]` and grid functions with the Neumann
//! and symmetry stencils built in.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes `r_i = i·h`, `i = 0..n`, with `h = R/(n-1)`, for the ball
/// `B(0, R) ⊂ ℝ^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    radius: f64,
    dim: usize,
    n: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(radius: f64, dim: usize, n: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!("R must be > 0, got {radius}")));
        }
        if dim < 1 {
            return Err(Error::InvalidGrid("N_dim must be ≥ 1".into()));
        }
        if n < 3 {
            return Err(Error::InvalidGrid("n must be ≥ 3".into()));
        }
        Ok(Self {
            radius,
            dim,
            n,
            h: radius / (n - 1) as f64,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Node radius; the last node is exactly `R`.
    pub fn r(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.radius
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.r(i))
    }

    /// Distance to the boundary sphere.
    pub fn distance_to_boundary(&self, i: usize) -> f64 {
        self.radius - self.r(i)
    }

    /// The grid with `2n - 1` nodes that contains every node of this one.
    pub fn refined(&self) -> Self {
        Self::new(self.radius, self.dim, 2 * self.n - 1).expect("refinement of a valid grid")
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction::constant(*self, 0.0)
    }
}

/// First and second radial differences at node `i`.
///
/// Interior nodes use central differences. The boundary node reflects
/// `u_n := u_{n-2}` so that `u1 = 0` there, and the origin reflects
/// `u_{-1} := u_1` (radial symmetry).
#[inline]
pub(crate) fn stencil(values: &[f64], h: f64, i: usize) -> (f64, f64) {
    let n = values.len();
    let h2 = h * h;
    if i == 0 {
        (0.0, 2.0 * (values[1] - values[0]) / h2)
    } else if i + 1 == n {
        (0.0, 2.0 * (values[n - 2] - values[n - 1]) / h2)
    } else {
        let (um, u, up) = (values[i - 1], values[i], values[i + 1]);
        ((up - um) / (2.0 * h), (up - 2.0 * u + um) / h2)
    }
}

/// Node values of a radial function.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("grid function values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: RadialGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub(crate) fn from_raw(grid: RadialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i |self_i - other_i|`; both functions must live on the same grid.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "grid functions on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Values at the nodes of the grid with `(n + 1)/2` nodes, for a
    /// function on a grid produced by [`RadialGrid::refined`].
    pub fn coarsened(&self) -> Result<Self> {
        if self.grid.len().is_multiple_of(2) {
            return Err(Error::InvalidGrid("only odd node counts can be coarsened".into()));
        }
        let coarse = RadialGrid::new(self.grid.radius(), self.grid.dim(), self.grid.len() / 2 + 1)?;
        Ok(Self {
            grid: coarse,
            values: self.values.iter().step_by(2).copied().collect(),
        })
    }

    /// Discrete first and second radial derivatives at every node.
    ///
    /// At `r = R` the ghost node enforces the Neumann condition, so the
    /// first derivative there is zero for every grid function.
    pub fn derivatives(&self) -> (GridFunction, GridFunction) {
        let h = self.grid.spacing();
        let (d1, d2): (Vec<f64>, Vec<f64>) = (0..self.grid.len())
            .map(|i| stencil(&self.values, h, i))
            .unzip();
        (
            Self::from_raw(self.grid, d1),
            Self::from_raw(self.grid, d2),
        )
    }

    /// Largest difference quotient between adjacent nodes, which equals
    /// the Lipschitz constant of the piecewise-linear interpolant.
    pub fn lipschitz_quotient(&self) -> f64 {
        let h = self.grid.spacing();
        self.values
            .windows(2)
            .fold(0.0, |m, w| m.max((w[1] - w[0]).abs() / h))
    }

    /// Writes `r,u` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,u")?;
        for (r, u) in self.grid.nodes().zip(&self.values) {
            writeln!(out, "{r:.16e},{u:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads back a function written by [`write_csv`](Self::write_csv) onto
    /// a grid of the given dimension; the radius and node count come from
    /// the file.
    pub fn read_csv<R: BufRead>(input: R, dim: usize) -> Result<Self> {
        let mut rs = Vec::new();
        let mut us = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: "<csv>".into(),
                source,
            })?;
            if lineno == 0 {
                if line.trim() != "r,u" {
                    return Err(Error::InvalidGrid(format!("unexpected csv header '{line}'")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (r, u) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidGrid(format!("line {}: expected r,u", lineno + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidGrid(format!("line {}: bad number '{s}'", lineno + 1)))
            };
            rs.push(parse(r)?);
            us.push(parse(u)?);
        }
        let radius = *rs
            .last()
            .ok_or_else(|| Error::InvalidGrid("empty csv".into()))?;
        let grid = RadialGrid::new(radius, dim, rs.len())?;
        Self::new(grid, us)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn build_grid_examples() {
        let g = RadialGrid::new(1.0, 2, 5).unwrap();
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(RadialGrid::new(2.0, 3, 3).unwrap().spacing(), 1.0);
        let fine = RadialGrid::new(1.0, 1, 101).unwrap();
        assert_relative_eq!(fine.spacing(), 0.01);
        assert_eq!(fine.r(100), 1.0);
        assert_eq!(fine.r(0), 0.0);
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        let err = RadialGrid::new(1.0, 2, 2).unwrap_err();
        assert_eq!(err.to_string(), "grid: n must be ≥ 3");
        assert!(RadialGrid::new(0.0, 2, 10).is_err());
        assert!(RadialGrid::new(-1.0, 2, 10).is_err());
        assert!(RadialGrid::new(1.0, 0, 10).is_err());
    }

    #[test]
    fn distance_is_one_lipschitz() {
        let g = RadialGrid::new(1.5, 3, 31).unwrap();
        for i in 0..g.len() - 1 {
            let d0 = g.distance_to_boundary(i);
            let d1 = g.distance_to_boundary(i + 1);
            assert!(d0 >= 0.0 && d1 >= 0.0);
            assert!((d0 - d1).abs() <= g.spacing() * (1.0 + 1e-12));
        }
        assert_eq!(g.distance_to_boundary(30), 0.0);
    }

    #[test]
    fn derivatives_of_constants_vanish() {
        let g = RadialGrid::new(1.0, 2, 11).unwrap();
        let (d1, d2) = GridFunction::constant(g, 3.5).derivatives();
        assert!(d1.sup_norm() == 0.0 && d2.sup_norm() == 0.0);
    }

    #[test]
    fn derivatives_of_square() {
        let g = RadialGrid::new(1.0, 2, 101).unwrap();
        let u = GridFunction::from_fn(g, |r| r * r);
        let (d1, d2) = u.derivatives();
        for i in 1..100 {
            assert_relative_eq!(d1.values()[i], 2.0 * g.r(i), epsilon = 1e-12);
            assert_relative_eq!(d2.values()[i], 2.0, epsilon = 1e-9);
        }
        // the reflected stencil imposes u'(R) = 0, not the interior slope
        assert_eq!(d1.values()[100], 0.0);
        assert_eq!(d1.values()[0], 0.0);
        assert_relative_eq!(d2.values()[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn affine_exact_in_interior() {
        let g = RadialGrid::new(2.0, 3, 21).unwrap();
        let u = GridFunction::from_fn(g, |r| 3.0 - 0.5 * r);
        let (d1, d2) = u.derivatives();
        for i in 1..20 {
            assert_relative_eq!(d1.values()[i], -0.5, epsilon = 1e-12);
            assert!(d2.values()[i].abs() < 1e-11);
        }
    }

    fn cos_derivative_error(n: usize) -> f64 {
        let g = RadialGrid::new(1.0, 2, n).unwrap();
        let (d1, _) = GridFunction::from_fn(g, |r| (PI * r).cos()).derivatives();
        (1..n - 1)
            .map(|i| (d1.values()[i] + PI * (PI * g.r(i)).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn cosine_derivative_is_second_order() {
        let g = RadialGrid::new(1.0, 2, 41).unwrap();
        let (d1, _) = GridFunction::from_fn(g, |r| (PI * r).cos()).derivatives();
        assert_eq!(d1.values()[40], 0.0);
        let ratios = [41, 81, 161].map(|n| cos_derivative_error(n) / cos_derivative_error(2 * n - 1));
        for ratio in ratios {
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn lipschitz_examples() {
        let g = RadialGrid::new(1.0, 2, 11).unwrap();
        assert_eq!(GridFunction::constant(g, 5.0).lipschitz_quotient(), 0.0);
        assert_relative_eq!(GridFunction::from_fn(g, |r| r).lipschitz_quotient(), 1.0, epsilon = 1e-12);
        let h = g.spacing();
        assert_relative_eq!(
            GridFunction::from_fn(g, |r| r * r).lipschitz_quotient(),
            2.0 - h,
            epsilon = 1e-12
        );
    }

    #[test]
    fn csv_format_and_round_trip() {
        let g = RadialGrid::new(1.0, 2, 3).unwrap();
        let u = GridFunction::from_fn(g, |r| 1.0 / 3.0 + r);
        let text = u.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,u"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,3.3333333333333331e-1"));
        let back = GridFunction::read_csv(text.as_bytes(), 2).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn coarsen_inverts_refine() {
        let g = RadialGrid::new(1.0, 2, 11).unwrap();
        let fine = GridFunction::from_fn(g.refined(), |r| r.sin());
        let coarse = fine.coarsened().unwrap();
        assert_eq!(coarse.grid(), &g);
        assert!(coarse.distance(&GridFunction::from_fn(g, |r| r.sin())) < 1e-15);
    }
}
