use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;

use super::AnalysisError;
use crate::closures::ClosurePair;
use crate::eigen::{self, Dense, EigenError};
use crate::operator::{periodic_interior, Grid1D, RowKind, SpatialOperator};
use crate::report::{fmt_f64, Table};
use crate::tableau::Tableau;

pub const CFL_SEARCH_MIN: f64 = 0.05;
pub const CFL_SEARCH_MAX: f64 = 2.0;
pub const CFL_SEARCH_TOL: f64 = 1e-3;
/// Amplification above `1 + STABILITY_SLACK` counts as unstable.
pub const STABILITY_SLACK: f64 = 1e-7;
pub const DEFAULT_SPECTRUM_NODES: usize = 256;
pub const MAX_SPECTRUM_NODES: usize = 2048;
/// Eigenpair residuals must stay below this multiple of `||M||_F`.
pub const RESIDUAL_FACTOR: f64 = 1e-8;
pub const SPECTRUM_CONVENTION: &str =
    "M = -c*W/dx on unknowns 1..N-1 (boundary column excluded); z = dt*eig(M), dt = cfl*dx/c";

fn check_nodes(n: usize) -> Result<(), AnalysisError> {
    if n > MAX_SPECTRUM_NODES {
        return Err(AnalysisError::Config(format!("at most {MAX_SPECTRUM_NODES} nodes supported, got {n}")));
    }
    Ok(())
}

fn unit_operator(pair: &ClosurePair, n: usize) -> Result<SpatialOperator, AnalysisError> {
    check_nodes(n)?;
    Ok(SpatialOperator::assemble(pair, Grid1D::spanning(n, 1.0)?, 1)?)
}

/// Writes the matrix next to the system temp dir so a failed solve can be
/// reproduced.
fn dump_matrix(m: &Dense, tag: &str) -> Option<PathBuf> {
    let safe: String = tag.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    let path = std::env::temp_dir().join(format!("rkcl-eig-{safe}-{}.csv", m.size()));
    let body: String = m
        .rows()
        .iter()
        .map(|r| r.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(&path, body).ok().map(|_| path)
}

fn solve_failed(err: EigenError, m: &Dense, tag: &str) -> AnalysisError {
    match err {
        EigenError::NoConvergence { .. } => AnalysisError::NoConvergence { source: err, dump: dump_matrix(m, tag) },
        other => other.into(),
    }
}

/// Eigenvalues of the dimensionless `W` on an `n`-node unit grid.
pub fn operator_eigenvalues(pair: &ClosurePair, n: usize) -> Result<Vec<Complex64>, AnalysisError> {
    let op = unit_operator(pair, n)?;
    let w = Dense::from_rows(&op.to_dense())?;
    eigen::eigenvalues(&w).map_err(|e| solve_failed(e, &w, pair.name()))
}

pub fn max_amplification(tableau: &Tableau, zs: &[Complex64]) -> f64 {
    zs.iter().map(|&z| tableau.stability_function(z).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub pair: String,
    pub tableau: String,
    pub nodes: usize,
    pub cfl: f64,
    pub speed: f64,
    pub dx: f64,
    pub dt: f64,
    pub convention: &'static str,
    /// Eigenvalues of `M`, in 1/time units.
    pub eigenvalues: Vec<Complex64>,
    /// `dt * eigenvalues`.
    pub z: Vec<Complex64>,
    pub amplification: Vec<f64>,
    pub max_amplification: f64,
    pub stable: bool,
    pub max_residual: f64,
    pub residual_bound: f64,
}

impl SpectrumReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new("spectrum", &["re_lambda", "im_lambda", "re_z", "im_z", "abs_r"])
            .meta("pair", &self.pair)
            .meta("tableau", &self.tableau)
            .meta("nodes", self.nodes)
            .meta("cfl", fmt_f64(self.cfl))
            .meta("speed", fmt_f64(self.speed))
            .meta("dt", fmt_f64(self.dt))
            .meta("boundary_column", "excluded")
            .meta("max_abs_r", fmt_f64(self.max_amplification))
            .meta("stable", self.stable);
        for ((l, z), r) in self.eigenvalues.iter().zip(&self.z).zip(&self.amplification) {
            t.push(vec![l.re.into(), l.im.into(), z.re.into(), z.im.into(), (*r).into()]);
        }
        t
    }
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Full spectrum of `M = -c W / dx` on an `n`-node grid over `[0, 1]`, with
/// the eigenpair residual and Gershgorin checks enforced.
pub fn spectrum(
    pair: &ClosurePair,
    tableau: &Tableau,
    n: usize,
    cfl: f64,
    speed: f64,
) -> Result<SpectrumReport, AnalysisError> {
    if !(speed > 0.0 && cfl > 0.0) {
        return Err(AnalysisError::Config(format!("speed and CFL must be positive (c = {speed}, cfl = {cfl})")));
    }
    let op = unit_operator(pair, n)?;
    let dx = op.grid().dx();
    let m = Dense::from_rows(&op.to_dense())?.scaled(-speed / dx);
    let pairs = eigen::eigenpairs(&m).map_err(|e| solve_failed(e, &m, pair.name()))?;
    let bound = RESIDUAL_FACTOR * m.frobenius();
    let mut max_residual = 0.0f64;
    for p in &pairs {
        let r = eigen::residual(&m, p);
        max_residual = max_residual.max(r);
        if !(r <= bound) {
            return Err(AnalysisError::ResidualContract { residual: r, bound });
        }
    }
    let mut values: Vec<Complex64> = pairs.into_iter().map(|p| p.value).collect();
    sort_spectrum(&mut values);
    check_containment(&m, &values)?;
    let dt = cfl * dx / speed;
    let z: Vec<Complex64> = values.iter().map(|l| l * dt).collect();
    let amplification: Vec<f64> = z.iter().map(|&z| tableau.stability_function(z).norm()).collect();
    let max_amp = amplification.iter().copied().fold(0.0, f64::max);
    Ok(SpectrumReport {
        pair: pair.name().to_string(),
        tableau: tableau.name().to_string(),
        nodes: n,
        cfl,
        speed,
        dx,
        dt,
        convention: SPECTRUM_CONVENTION,
        eigenvalues: values,
        z,
        amplification,
        max_amplification: max_amp,
        stable: max_amp <= 1.0 + STABILITY_SLACK,
        max_residual,
        residual_bound: bound,
    })
}

fn check_containment(m: &Dense, values: &[Complex64]) -> Result<(), AnalysisError> {
    let discs = eigen::gershgorin_discs(m);
    let slack = 1e-9 * m.frobenius();
    match values.iter().find(|&&z| !eigen::in_disc_union(&discs, z, slack)) {
        Some(z) => Err(AnalysisError::Gershgorin { re: z.re, im: z.im }),
        None => Ok(()),
    }
}

/// Scaled eigenvalues `-cfl * eig(P)` of the periodic interior stencil on `n`
/// nodes. Debug aid with a closed-form answer.
pub fn periodic_spectrum(n: usize, cfl: f64) -> Result<Vec<Complex64>, AnalysisError> {
    check_nodes(n)?;
    let p = Dense::from_rows(&periodic_interior(n))?.scaled(-cfl);
    let mut v = eigen::eigenvalues(&p).map_err(|e| solve_failed(e, &p, "periodic"))?;
    check_containment(&p, &v)?;
    sort_spectrum(&mut v);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCfl {
    pub pair: String,
    pub tableau: String,
    pub nodes: usize,
    pub cfl: f64,
    /// Stable across the whole search range.
    pub saturated: bool,
    /// Unstable already at the lower end of the range.
    pub unstable_at_min: bool,
    /// Final bracket `(stable, unstable)`.
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Largest CFL in `[CFL_SEARCH_MIN, CFL_SEARCH_MAX]` with `max |R(z)| <= 1 +
/// STABILITY_SLACK`, by bisection. `W` is diagonalised once; `z = -cfl*eig(W)`.
pub fn critical_cfl(pair: &ClosurePair, tableau: &Tableau, n: usize) -> Result<CriticalCfl, AnalysisError> {
    let mu = operator_eigenvalues(pair, n)?;
    let mut evaluations = 0;
    let mut stable_at = |cfl: f64| {
        evaluations += 1;
        let zs: Vec<Complex64> = mu.iter().map(|m| -cfl * m).collect();
        max_amplification(tableau, &zs) <= 1.0 + STABILITY_SLACK
    };
    let (mut lo, mut hi) = (CFL_SEARCH_MIN, CFL_SEARCH_MAX);
    let (saturated, unstable_at_min) = (stable_at(hi), !stable_at(lo));
    if !saturated && !unstable_at_min {
        while hi - lo > CFL_SEARCH_TOL {
            let mid = 0.5 * (lo + hi);
            if stable_at(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let cfl = if saturated {
        CFL_SEARCH_MAX
    } else if unstable_at_min {
        CFL_SEARCH_MIN
    } else {
        lo
    };
    Ok(CriticalCfl {
        pair: pair.name().to_string(),
        tableau: tableau.name().to_string(),
        nodes: n,
        cfl,
        saturated,
        unstable_at_min,
        bracket: (lo, hi),
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disc {
    /// Grid node of the row (1-based over unknowns).
    pub row: usize,
    pub kind: RowKind,
    pub center: f64,
    pub radius: f64,
}

impl Disc {
    pub fn rightmost(&self) -> f64 {
        self.center + self.radius
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GershgorinReport {
    pub pair: String,
    pub tableau: String,
    pub nodes: usize,
    pub cfl: f64,
    /// Rows 1 and 2, then the interior row reaching furthest right.
    pub highlighted: Vec<Disc>,
    pub discs: Vec<Disc>,
    /// Whether every highlighted disc lies inside `|R(z)| <= 1` (sampled on
    /// its boundary and center).
    pub highlighted_inside_lobe: Vec<bool>,
}

impl GershgorinReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new("gershgorin", &["row", "kind", "center", "radius", "highlighted"])
            .meta("pair", &self.pair)
            .meta("tableau", &self.tableau)
            .meta("nodes", self.nodes)
            .meta("cfl", fmt_f64(self.cfl))
            .meta("scaling", "dt*c/dx");
        for d in &self.discs {
            let kind = match d.kind {
                RowKind::Closure => "closure",
                RowKind::Interior => "interior",
                RowKind::Outflow => "outflow",
            };
            let hl = self.highlighted.iter().any(|h| h.row == d.row);
            t.push(vec![d.row.into(), kind.into(), d.center.into(), d.radius.into(), hl.into()]);
        }
        t
    }
}

fn disc_inside_lobe(tableau: &Tableau, d: &Disc) -> bool {
    const SAMPLES: usize = 128;
    let c = Complex64::new(d.center, 0.0);
    std::iter::once(c)
        .chain((0..SAMPLES).map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / SAMPLES as f64;
            c + Complex64::from_polar(d.radius, phi)
        }))
        .all(|z| tableau.stability_function(z).norm() <= 1.0 + STABILITY_SLACK)
}

/// Discs of the scaled matrix `dt * (-c W / dx) = -cfl * W`.
pub fn gershgorin(pair: &ClosurePair, tableau: &Tableau, cfl: f64, n: usize) -> Result<GershgorinReport, AnalysisError> {
    let op = unit_operator(pair, n)?;
    let w = Dense::from_rows(&op.to_dense())?.scaled(-cfl);
    let discs: Vec<Disc> = eigen::gershgorin_discs(&w)
        .into_iter()
        .enumerate()
        .map(|(i, (center, radius))| Disc { row: i + 1, kind: op.row_kind(i + 1), center, radius })
        .collect();
    let mut highlighted = vec![discs[0], discs[1]];
    if let Some(worst) = discs
        .iter()
        .filter(|d| d.kind == RowKind::Interior)
        .max_by(|a, b| a.rightmost().total_cmp(&b.rightmost()).then(b.row.cmp(&a.row)))
    {
        highlighted.push(*worst);
    }
    let inside = highlighted.iter().map(|d| disc_inside_lobe(tableau, d)).collect();
    Ok(GershgorinReport {
        pair: pair.name().to_string(),
        tableau: tableau.name().to_string(),
        nodes: n,
        cfl,
        highlighted,
        discs,
        highlighted_inside_lobe: inside,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub cfl: f64,
    pub z: Complex64,
    pub abs_r: f64,
}

/// Dominant scaled eigenvalue (largest `|z|`, upper half-plane member of a
/// conjugate pair) for each CFL number.
pub fn eigen_trajectory(
    pair: &ClosurePair,
    tableau: &Tableau,
    cfls: &[f64],
    n: usize,
) -> Result<Vec<TrajectoryPoint>, AnalysisError> {
    let mu = operator_eigenvalues(pair, n)?;
    let dominant = mu
        .iter()
        .filter(|m| m.im <= 0.0)
        .max_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)))
        .copied()
        .unwrap_or_default();
    Ok(cfls
        .iter()
        .map(|&cfl| {
            // z = -cfl * mu, so Im mu <= 0 gives Im z >= 0.
            let z = -cfl * dominant;
            TrajectoryPoint { cfl, z, abs_r: tableau.stability_function(z).norm() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::builtin_pair;
    use crate::operator::{interior_coefficients, INTERIOR_OFFSETS};

    #[test]
    fn standard_row_one_disc() {
        let g = gershgorin(&builtin_pair("standard").unwrap(), &Tableau::ssprk3(), 1.0, 64).unwrap();
        let d = g.highlighted[0];
        assert_eq!(d.row, 1);
        assert!((d.center + 2.0).abs() < 1e-15);
        assert!((d.radius - 0.5).abs() < 1e-15);
        assert_eq!(g.highlighted[1].row, 2);
        assert_eq!(g.highlighted[2].kind, RowKind::Interior);
        assert!(g.discs.iter().all(|d| d.radius >= 0.0));
    }

    #[test]
    fn periodic_matches_symbol() {
        let n = 48;
        let cfl = 0.7;
        let mut got = periodic_spectrum(n, cfl).unwrap();
        let w = interior_coefficients();
        let mut want: Vec<Complex64> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let s: Complex64 =
                    INTERIOR_OFFSETS.iter().zip(&w).map(|(&d, &wk)| wk * Complex64::from_polar(1.0, th * d as f64)).sum();
                -cfl * s
            })
            .collect();
        sort_spectrum(&mut got);
        sort_spectrum(&mut want);
        for z in &got {
            let near = want.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(near < 1e-9, "{z}");
            assert!(z.re <= 1e-12);
        }
    }

    #[test]
    fn spectrum_verdicts() {
        let ssp = Tableau::ssprk3();
        let std = spectrum(&builtin_pair("standard").unwrap(), &ssp, 128, 0.5, 1.0).unwrap();
        assert!(std.stable, "{}", std.max_amplification);
        assert_eq!(std.eigenvalues.len(), 127);
        assert!(std.max_residual <= std.residual_bound);
        let acc = spectrum(&builtin_pair("acc_only").unwrap(), &ssp, 128, 1.0, 1.0).unwrap();
        assert!(!acc.stable);
    }

    #[test]
    fn dt_scaling() {
        let r = spectrum(&builtin_pair("standard").unwrap(), &Tableau::ssprk3(), 33, 0.8, 2.0).unwrap();
        assert!((r.dx - 1.0 / 32.0).abs() < 1e-15);
        assert!((r.dt - 0.8 / 32.0 / 2.0).abs() < 1e-15);
        for (l, z) in r.eigenvalues.iter().zip(&r.z) {
            assert!((l * r.dt - z).norm() < 1e-12);
        }
    }

    #[test]
    fn critical_cfl_bracket() {
        let pair = builtin_pair("standard").unwrap();
        let tab = Tableau::ssprk3();
        let c = critical_cfl(&pair, &tab, 96).unwrap();
        assert!(!c.saturated && !c.unstable_at_min);
        assert!(c.bracket.1 - c.bracket.0 <= CFL_SEARCH_TOL);
        let mu = operator_eigenvalues(&pair, 96).unwrap();
        let amp = |cfl: f64| max_amplification(&tab, &mu.iter().map(|m| -cfl * m).collect::<Vec<_>>());
        assert!(amp(c.cfl - 2.0 * CFL_SEARCH_TOL) <= 1.0 + STABILITY_SLACK);
        assert!(amp(c.cfl + 2.0 * CFL_SEARCH_TOL) > 1.0 + STABILITY_SLACK);
    }

    #[test]
    fn trajectory_is_a_ray() {
        let pair = builtin_pair("acc_stab").unwrap();
        let t = eigen_trajectory(&pair, &Tableau::ssprk3(), &[0.2, 0.4, 1.0], 64).unwrap();
        let (a, b) = (t[0].z, t[1].z);
        assert!((a.re * b.im - a.im * b.re).abs() < 1e-10);
        assert!((t[2].z - 5.0 * t[0].z).norm() < 1e-12);
        assert!(t.iter().all(|p| p.z.im >= 0.0));
    }

    #[test]
    fn too_many_nodes() {
        let pair = builtin_pair("standard").unwrap();
        assert!(matches!(spectrum(&pair, &Tableau::ssprk3(), 4096, 0.5, 1.0), Err(AnalysisError::Config(_))));
    }
}
