//! Semi-discrete first-derivative operator on a uniform grid.
//!
//! Unknowns are nodes `1..N-1`; node 0 carries the Dirichlet value and is
//! eliminated into a boundary column. Rows 1 and 2 use a closure pair, rows
//! `3..=N-4` the six-point upwind interior stencil (offsets -3..=2) and the
//! last three rows a five-point backward stencil (offsets -4..=0).
//!
//! The interior stencil at row 3 reaches node 0 as well, so the boundary
//! column has three nonzero entries, not two.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::closures::ClosurePair;

pub const MIN_NODES: usize = 8;
pub const INTERIOR_OFFSETS: [i64; 6] = [-3, -2, -1, 0, 1, 2];
pub const OUTFLOW_OFFSETS: [i64; 5] = [-4, -3, -2, -1, 0];
pub const INTERIOR_STENCIL_ID: &str = "upwind6[-3..2]";

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("grid needs at least {MIN_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("field length {got} does not match {expected} unknowns")]
    LengthMismatch { expected: usize, got: usize },
    #[error("only rightward propagation (wave sign +1) is supported, got {0}")]
    UnsupportedWaveSign(i8),
}

/// Finite-difference weights for the `deriv`-th derivative on integer offsets,
/// solved exactly from the moment system `sum_j w_j d_j^k = k! [k == deriv]`.
pub fn fd_weights(offsets: &[i64], deriv: usize) -> Vec<BigRational> {
    let n = offsets.len();
    assert!(deriv < n, "need more points than the derivative order");
    let mut aug: Vec<Vec<BigRational>> = (0..n)
        .map(|k| {
            let mut row: Vec<BigRational> = offsets
                .iter()
                .map(|&d| BigRational::from_integer(BigInt::from(d).pow(k as u32)))
                .collect();
            let rhs = if k == deriv {
                BigRational::from_integer((1..=deriv as u64).product::<u64>().into())
            } else {
                BigRational::zero()
            };
            row.push(rhs);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !aug[r][col].is_zero())
            .expect("distinct offsets give a nonsingular Vandermonde system");
        aug.swap(col, pivot);
        let inv = BigRational::one() / aug[col][col].clone();
        for v in aug[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c in col..=n {
                    let delta = &f * &aug[col][c];
                    aug[r][c] = &aug[r][c] - delta;
                }
            }
        }
    }
    aug.into_iter().map(|mut row| row.pop().unwrap()).collect()
}

fn to_f64(w: &[BigRational]) -> Vec<f64> {
    w.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
}

/// Interior weights for offsets -3..=2, exact on quintics.
pub fn interior_coefficients() -> [f64; 6] {
    to_f64(&fd_weights(&INTERIOR_OFFSETS, 1)).try_into().unwrap()
}

/// Outflow weights for offsets -4..=0, exact on quartics.
pub fn outflow_coefficients() -> [f64; 5] {
    to_f64(&fd_weights(&OUTFLOW_OFFSETS, 1)).try_into().unwrap()
}

/// Uniform grid `x_j = j dx`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(n: usize, dx: f64) -> Result<Self, OperatorError> {
        if n < MIN_NODES {
            return Err(OperatorError::TooFewNodes(n));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(OperatorError::BadSpacing(dx));
        }
        Ok(Grid1D { n, dx })
    }

    /// Grid at fixed CFL: `dx = speed * dt / cfl`, with enough cells to cover
    /// `length`. The last node may sit slightly past `length` when `length / dx`
    /// is not an integer.
    pub fn for_cfl(speed: f64, dt: f64, cfl: f64, length: f64) -> Result<Self, OperatorError> {
        let dx = speed * dt / cfl;
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(OperatorError::BadSpacing(dx));
        }
        let cells = (length / dx - 1e-9).ceil().max(1.0) as usize;
        Self::new(cells + 1, dx)
    }

    /// Grid with `n` nodes spanning `[0, length]`.
    pub fn spanning(n: usize, length: f64) -> Result<Self, OperatorError> {
        if n < MIN_NODES {
            return Err(OperatorError::TooFewNodes(n));
        }
        Self::new(n, length / (n - 1) as f64)
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn unknowns(&self) -> usize {
        self.n - 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        (self.n - 1) as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }
}

/// Banded row: weights on consecutive unknowns starting at `start` (0-based
/// unknown index, i.e. grid node `start + 1`).
#[derive(Debug, Clone, PartialEq)]
struct BandRow {
    start: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperator {
    grid: Grid1D,
    rows: Vec<BandRow>,
    g_col: Vec<f64>,
    pair_name: String,
}

/// Which stencil produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Closure,
    Interior,
    Outflow,
}

impl SpatialOperator {
    pub fn assemble(pair: &ClosurePair, grid: Grid1D, wave_sign: i8) -> Result<Self, OperatorError> {
        if wave_sign != 1 {
            return Err(OperatorError::UnsupportedWaveSign(wave_sign));
        }
        let n = grid.nodes();
        let interior = interior_coefficients();
        let outflow = outflow_coefficients();
        let mut rows = Vec::with_capacity(n - 1);
        let mut g_col = vec![0.0; n - 1];
        for (m, row) in [(1usize, pair.node1()), (2, pair.node2())] {
            g_col[m - 1] = row.weights()[0];
            rows.push(BandRow {
                start: 0,
                weights: row.weights()[1..].to_vec(),
            });
        }
        for node in 3..n {
            let (offsets, weights): (&[i64], &[f64]) = if node + 3 < n {
                (&INTERIOR_OFFSETS, &interior)
            } else {
                (&OUTFLOW_OFFSETS, &outflow)
            };
            let first = node as i64 + offsets[0];
            let mut band = BandRow {
                start: first.max(1) as usize - 1,
                weights: Vec::with_capacity(weights.len()),
            };
            for (&off, &w) in offsets.iter().zip(weights) {
                if node as i64 + off == 0 {
                    g_col[node - 1] += w;
                } else {
                    band.weights.push(w);
                }
            }
            rows.push(band);
        }
        Ok(SpatialOperator {
            grid,
            rows,
            g_col,
            pair_name: pair.name().to_string(),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn unknowns(&self) -> usize {
        self.rows.len()
    }

    pub fn g_col(&self) -> &[f64] {
        &self.g_col
    }

    pub fn pair_name(&self) -> &str {
        &self.pair_name
    }

    pub fn interior_stencil_id(&self) -> &'static str {
        INTERIOR_STENCIL_ID
    }

    /// Stencil family of grid node `node` (1-based over unknowns).
    pub fn row_kind(&self, node: usize) -> RowKind {
        let n = self.grid.nodes();
        match node {
            1 | 2 => RowKind::Closure,
            k if k + 3 < n => RowKind::Interior,
            _ => RowKind::Outflow,
        }
    }

    /// Full weights of the row at grid node `node` over grid nodes `0..N`,
    /// boundary column included.
    pub fn full_row(&self, node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.nodes()];
        let row = &self.rows[node - 1];
        out[0] = self.g_col[node - 1];
        for (k, w) in row.weights.iter().enumerate() {
            out[row.start + k + 1] += w;
        }
        out
    }

    /// `out = (W u + g_col u0) / dx`.
    pub fn apply_into(&self, u: &[f64], u0: f64, out: &mut [f64]) -> Result<(), OperatorError> {
        let n = self.unknowns();
        for len in [u.len(), out.len()] {
            if len != n {
                return Err(OperatorError::LengthMismatch { expected: n, got: len });
            }
        }
        let inv_dx = 1.0 / self.grid.dx();
        for (i, (row, o)) in self.rows.iter().zip(out.iter_mut()).enumerate() {
            let acc: f64 = row
                .weights
                .iter()
                .zip(&u[row.start..row.start + row.weights.len()])
                .map(|(w, v)| w * v)
                .sum();
            *o = (acc + self.g_col[i] * u0) * inv_dx;
        }
        Ok(())
    }

    pub fn apply(&self, u: &[f64], u0: f64) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.unknowns()];
        self.apply_into(u, u0, &mut out)?;
        Ok(out)
    }

    /// Applies the operator along a strided line of a larger array:
    /// `u[offset + k*stride]` for `k = 0..unknowns`. Used for dimension-wise
    /// application in 2D.
    pub(crate) fn apply_strided(&self, u: &[f64], offset: usize, stride: usize, u0: f64, out: &mut [f64], scale: f64) {
        let inv_dx = scale / self.grid.dx();
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = self.g_col[i] * u0;
            for (k, w) in row.weights.iter().enumerate() {
                acc += w * u[offset + (row.start + k) * stride];
            }
            out[offset + i * stride] += acc * inv_dx;
        }
    }

    /// Dense `W` (boundary column excluded), row-major, dimensionless.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.unknowns();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                dense[row.start..row.start + row.weights.len()].copy_from_slice(&row.weights);
                dense
            })
            .collect()
    }

    /// `(row, col, weight)` triples in grid-node numbering, column 0 being
    /// the boundary column.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if self.g_col[i] != 0.0 {
                out.push((i + 1, 0, self.g_col[i]));
            }
            for (k, &w) in row.weights.iter().enumerate() {
                out.push((i + 1, row.start + k + 1, w));
            }
        }
        out
    }

    /// CSV dump of [`Self::triples`] preceded by a schema comment line.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# kind=operator schema_version={} pair={} interior={} dx={}\nrow,col,weight\n",
            crate::report::SCHEMA_VERSION,
            self.pair_name,
            INTERIOR_STENCIL_ID,
            crate::report::fmt_f64(self.grid.dx())
        );
        for (r, c, w) in self.triples() {
            let _ = writeln!(s, "{r},{c},{}", crate::report::fmt_f64(w));
        }
        s
    }
}

/// Circulant matrix of the interior stencil on `n` periodic nodes. Debug
/// aid: its spectrum is the Fourier symbol of the interior row.
pub fn periodic_interior(n: usize) -> Vec<Vec<f64>> {
    let w = interior_coefficients();
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (&off, &wk) in INTERIOR_OFFSETS.iter().zip(&w) {
            let j = (i as i64 + off).rem_euclid(n as i64) as usize;
            row[j] += wk;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::builtin_pair;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn interior_weights_exact() {
        let w = fd_weights(&INTERIOR_OFFSETS, 1);
        let expect = [ratio(-1, 30), ratio(1, 4), ratio(-1, 1), ratio(1, 3), ratio(1, 2), ratio(-1, 20)];
        assert_eq!(w, expect);
        let out = fd_weights(&OUTFLOW_OFFSETS, 1);
        let expect = [ratio(1, 4), ratio(-4, 3), ratio(3, 1), ratio(-4, 1), ratio(25, 12)];
        assert_eq!(out, expect);
    }

    #[test]
    fn interior_moments() {
        let w = fd_weights(&INTERIOR_OFFSETS, 1);
        for k in 0..6u32 {
            let m: BigRational = w
                .iter()
                .zip(INTERIOR_OFFSETS)
                .map(|(wi, d)| wi * BigRational::from_integer(BigInt::from(d).pow(k)))
                .sum();
            let expect = if k == 1 { BigRational::one() } else { BigRational::zero() };
            assert_eq!(m, expect, "moment {k}");
        }
    }

    #[test]
    fn quintic_exact_at_any_node() {
        let w = interior_coefficients();
        let h = 0.01;
        for x0 in [0.3, 1.7, -2.0] {
            let d: f64 = INTERIOR_OFFSETS
                .iter()
                .zip(w)
                .map(|(&o, wk)| wk * (x0 + o as f64 * h).powi(5))
                .sum::<f64>()
                / h;
            let exact = 5.0 * x0.powi(4);
            assert!(((d - exact) / exact).abs() < 1e-10, "{d} vs {exact}");
        }
    }

    fn std_op(n: usize) -> SpatialOperator {
        let pair = builtin_pair("ssprk3/standard").unwrap();
        SpatialOperator::assemble(&pair, Grid1D::spanning(n, 1.0).unwrap(), 1).unwrap()
    }

    #[test]
    fn standard_row_one_split() {
        let op = std_op(20);
        let row = op.full_row(1);
        assert_eq!(&row[..5], &[-1.5, 2.0, -0.5, 0.0, 0.0]);
        assert_eq!(op.g_col()[0], -1.5);
        assert_eq!(op.to_dense()[0][..3], [2.0, -0.5, 0.0]);
        // Row 3 reaches node 0 through the interior stencil.
        assert_eq!(op.g_col()[2], -1.0 / 30.0);
        assert!(op.g_col()[3..].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn row_kinds() {
        let op = std_op(12);
        assert_eq!(op.row_kind(2), RowKind::Closure);
        assert_eq!(op.row_kind(3), RowKind::Interior);
        assert_eq!(op.row_kind(8), RowKind::Interior);
        assert_eq!(op.row_kind(9), RowKind::Outflow);
        assert_eq!(op.row_kind(11), RowKind::Outflow);
    }

    #[test]
    fn rows_consistent() {
        for name in crate::closures::builtin_pair_names() {
            let pair = builtin_pair(&name).unwrap();
            let op = SpatialOperator::assemble(&pair, Grid1D::spanning(16, 1.0).unwrap(), 1).unwrap();
            for node in 1..16 {
                let row = op.full_row(node);
                let s0: f64 = row.iter().sum();
                let s1: f64 = row.iter().enumerate().map(|(j, w)| (j as f64 - node as f64) * w).sum();
                assert!(s0.abs() < 1e-12 && (s1 - 1.0).abs() < 1e-12, "{name} row {node}: {s0} {s1}");
            }
        }
    }

    #[test]
    fn apply_examples() {
        let op = std_op(33);
        let grid = *op.grid();
        let k = 3.5;
        let out = op.apply(&vec![k; 32], k).unwrap();
        assert!(out.iter().all(|v| v.abs() <= 1e-12 * k / grid.dx()));
        let x: Vec<f64> = (1..33).map(|j| grid.x(j)).collect();
        let out = op.apply(&x, 0.0).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() <= 1e-10));
        assert_eq!(
            op.apply(&[1.0; 3], 0.0),
            Err(OperatorError::LengthMismatch { expected: 32, got: 3 })
        );
    }

    #[test]
    fn interior_rate_on_sine() {
        let err = |n: usize| {
            let op = std_op(n);
            let g = *op.grid();
            let u: Vec<f64> = (1..n).map(|j| (std::f64::consts::PI * g.x(j)).sin()).collect();
            let d = op.apply(&u, 0.0).unwrap();
            (3..n - 3)
                .map(|j| (d[j - 1] - std::f64::consts::PI * (std::f64::consts::PI * g.x(j)).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(101), err(201));
        let slope = (e1 / e2).log2();
        assert!(slope >= 4.8, "slope {slope}");
    }

    #[test]
    fn small_grid_and_bad_sign_rejected() {
        assert_eq!(Grid1D::new(7, 0.1), Err(OperatorError::TooFewNodes(7)));
        assert!(Grid1D::new(8, 0.0).is_err());
        let pair = builtin_pair("standard").unwrap();
        let g = Grid1D::new(10, 0.1).unwrap();
        assert_eq!(
            SpatialOperator::assemble(&pair, g, -1),
            Err(OperatorError::UnsupportedWaveSign(-1))
        );
    }

    #[test]
    fn grid_for_cfl() {
        let g = Grid1D::for_cfl(1.0, 0.01, 0.5, 1.0).unwrap();
        assert_eq!(g.nodes(), 51);
        assert!((g.dx() - 0.02).abs() < 1e-15);
        let g = Grid1D::for_cfl(2.0, 0.01, 0.5, 1.0).unwrap();
        assert_eq!(g.nodes(), 26);
    }

    #[test]
    fn periodic_symbol_damped() {
        let m = periodic_interior(16);
        for row in &m {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn csv_dump_lists_boundary_column() {
        let csv = std_op(10).to_csv();
        assert!(csv.starts_with("# kind=operator schema_version="));
        assert!(csv.contains("\n1,0,-1.5000000000000000e0\n"));
    }
}
