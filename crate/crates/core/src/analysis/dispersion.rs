use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::closures::ClosurePair;
use crate::operator::{interior_coefficients, INTERIOR_OFFSETS};
use crate::report::Table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavenumberPoint {
    pub theta: f64,
    /// `Re kappa`.
    pub dispersion: f64,
    /// `Im kappa`; negative values damp rightward-travelling waves.
    pub dissipation: f64,
}

/// `kappa(theta) = -i * sum_j w_j exp(i theta d_j)` for weights at offsets
/// `d_j` from the row's own node.
pub fn modified_wavenumber(weights: &[f64], offsets: &[i64], thetas: &[f64]) -> Vec<WavenumberPoint> {
    debug_assert_eq!(weights.len(), offsets.len());
    thetas
        .iter()
        .map(|&theta| {
            let s: Complex64 = weights
                .iter()
                .zip(offsets)
                .map(|(&w, &d)| w * Complex64::from_polar(1.0, theta * d as f64))
                .sum();
            let k = Complex64::new(0.0, -1.0) * s;
            WavenumberPoint { theta, dispersion: k.re, dissipation: k.im }
        })
        .collect()
}

/// `n` equispaced angles in `(0, pi]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| PI * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionCurve {
    /// `node1`, `node2` or `interior`.
    pub row: String,
    pub points: Vec<WavenumberPoint>,
}

/// Curves for both closure rows and the interior stencil.
pub fn dispersion_curves(pair: &ClosurePair, thetas: &[f64]) -> Vec<DispersionCurve> {
    let mut out = Vec::with_capacity(3);
    for (label, row) in [("node1", pair.node1()), ("node2", pair.node2())] {
        let m = row.node() as i64;
        let offsets: Vec<i64> = (0..5).map(|j| j - m).collect();
        out.push(DispersionCurve { row: label.into(), points: modified_wavenumber(row.weights(), &offsets, thetas) });
    }
    out.push(DispersionCurve {
        row: "interior".into(),
        points: modified_wavenumber(&interior_coefficients(), &INTERIOR_OFFSETS, thetas),
    });
    out
}

pub fn dispersion_table(pair: &ClosurePair, curves: &[DispersionCurve]) -> Table {
    let mut t = Table::new("dispersion", &["row", "theta", "re_kappa", "im_kappa"]).meta("pair", pair.name());
    for c in curves {
        for p in &c.points {
            t.push(vec![c.row.as_str().into(), p.theta.into(), p.dispersion.into(), p.dissipation.into()]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_is_sine() {
        let th = theta_grid(16);
        for p in modified_wavenumber(&[-0.5, 0.0, 0.5], &[-1, 0, 1], &th) {
            assert!((p.dispersion - p.theta.sin()).abs() < 1e-15);
            assert!(p.dissipation.abs() < 1e-15);
        }
    }

    #[test]
    fn consistent_rows_have_unit_slope() {
        let pair = crate::closures::builtin_pair("ssprk3/acc_stab").unwrap();
        for c in dispersion_curves(&pair, &[1e-3, 2e-3]) {
            let slope = (c.points[1].dispersion - c.points[0].dispersion) / 1e-3;
            assert!((slope - 1.0).abs() < 1e-4, "{} {slope}", c.row);
        }
    }

    #[test]
    fn interior_fifth_order() {
        // Re kappa - theta = O(theta^6) for the upwind-biased six-point row.
        let th = [0.05, 0.1];
        let p = modified_wavenumber(&interior_coefficients(), &INTERIOR_OFFSETS, &th);
        let e: Vec<f64> = p.iter().map(|p| (p.dispersion - p.theta).abs()).collect();
        let slope = (e[1] / e[0]).ln() / (th[1] / th[0]).ln();
        assert!(slope >= 5.8, "{slope}");
        // Upwinding damps.
        assert!(p.iter().all(|p| p.dissipation < 0.0));
    }
}
