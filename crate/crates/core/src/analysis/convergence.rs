use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::closures::ClosurePair;
use crate::marching::{march_system, MarchConfig, MarchError};
use crate::problems::{Discretization, Problem};
use crate::tableau::Tableau;

/// Five-level refinement ladder used throughout the 1D studies.
pub const PAPER_DTS: [f64; 5] = [0.01, 0.005, 0.0025, 0.00125, 0.000625];
/// Reduced ladder for CFL sweeps.
pub const SWEEP_DTS: [f64; 4] = [0.01, 0.005, 0.0025, 0.00125];
/// Three-level ladder for quick objective evaluations.
pub const FAST_DTS: [f64; 3] = [0.01, 0.005, 0.0025];
/// Truncated ladder for 2D runs (finest grid 101 x 101 at CFL 0.5).
pub const DTS_2D: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];

/// Root-mean-square difference over all nodes.
pub fn l2_error(num: &[f64], exact: &[f64]) -> Result<f64, AnalysisError> {
    if num.len() != exact.len() {
        return Err(AnalysisError::LengthMismatch(num.len(), exact.len()));
    }
    if num.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = num.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / num.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    /// Least-squares slope of `log e` against `log dt`.
    pub order: f64,
    /// RMS residual of the fit in natural-log units.
    pub residual: f64,
}

pub fn empirical_order(errors: &[f64], dts: &[f64]) -> Result<OrderFit, AnalysisError> {
    if errors.len() != dts.len() {
        return Err(AnalysisError::LengthMismatch(errors.len(), dts.len()));
    }
    if errors.len() < 2 {
        return Err(AnalysisError::TooFewPoints(errors.len()));
    }
    for (&error, &dt) in errors.iter().zip(dts) {
        if !(error > 0.0 && error.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(AnalysisError::NonPositive { error, dt });
        }
    }
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Config("step sizes must differ".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = sxy / sxx;
    let icept = my - order * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - icept - order * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(OrderFit { order, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub dts: Vec<f64>,
    /// Record the L2 error every this many steps (0 disables the trace).
    pub trace_every: usize,
}

impl StudyConfig {
    pub fn new(cfl: f64, dts: &[f64]) -> Self {
        StudyConfig { cfl, t_end: 1.0, dts: dts.to_vec(), trace_every: 0 }
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(AnalysisError::Config(format!("CFL must be positive, got {}", self.cfl)));
        }
        if self.dts.is_empty() {
            return Err(AnalysisError::Config("empty time-step list".into()));
        }
        if self.dts.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(AnalysisError::Config("time steps must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LevelStatus {
    Ok,
    Unstable { step: usize, time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub dt: f64,
    pub nodes: usize,
    pub dx: f64,
    pub steps: usize,
    /// `None` for unstable levels.
    pub error: Option<f64>,
    pub status: LevelStatus,
    /// `(step, t, l2)` samples when tracing was requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub pair: String,
    pub tableau: String,
    pub cfl: f64,
    pub t_end: f64,
    pub levels: Vec<LevelResult>,
    /// Fit over the stable levels; `None` with fewer than two of them.
    pub fit: Option<OrderFit>,
    pub unstable_levels: usize,
    pub flagged: bool,
}

impl ConvergenceReport {
    pub fn order(&self) -> Option<f64> {
        self.fit.map(|f| f.order)
    }

    pub fn to_table(&self) -> crate::report::Table {
        use crate::report::{Cell, Table};
        let mut t = Table::new("convergence", &["dt", "nodes", "dx", "steps", "error", "status"])
            .meta("problem", &self.problem)
            .meta("pair", &self.pair)
            .meta("tableau", &self.tableau)
            .meta("cfl", crate::report::fmt_f64(self.cfl))
            .meta("t_end", crate::report::fmt_f64(self.t_end))
            .meta("order", self.order().map(crate::report::fmt_f64).unwrap_or_else(|| "none".into()));
        for l in &self.levels {
            let status = match l.status {
                LevelStatus::Ok => "ok",
                LevelStatus::Unstable { .. } => "unstable",
            };
            t.push(vec![
                l.dt.into(),
                l.nodes.into(),
                l.dx.into(),
                l.steps.into(),
                l.error.map(Cell::Num).unwrap_or(Cell::Num(f64::NAN)),
                status.into(),
            ]);
        }
        t
    }
}

fn run_level(
    problem: &Problem,
    pair: &ClosurePair,
    tableau: &Tableau,
    cfg: &StudyConfig,
    dt: f64,
) -> Result<LevelResult, AnalysisError> {
    let disc = Discretization::at_cfl(problem, pair, dt, cfg.cfl)?;
    let mc = MarchConfig::new(tableau.clone(), dt, cfg.cfl, cfg.t_end)?;
    let grid = *disc.grid();
    let mut trace = Vec::new();
    let every = cfg.trace_every;
    let outcome = march_system(&disc, disc.exact_unknowns(0.0), &mc, |step, t, u| {
        if every > 0 && step % every == 0 {
            let e = l2_error(&disc.full_field(u, t), &disc.exact_full(t)).unwrap_or(f64::NAN);
            trace.push((step, t, e));
        }
    });
    let base = LevelResult {
        dt,
        nodes: grid.nodes(),
        dx: grid.dx(),
        steps: mc.steps(),
        error: None,
        status: LevelStatus::Ok,
        trace: Vec::new(),
    };
    match outcome {
        Ok(out) => {
            let e = l2_error(&disc.full_field(&out.state, out.t_end), &disc.exact_full(out.t_end))?;
            Ok(LevelResult { error: Some(e), trace, ..base })
        }
        Err(MarchError::Diverged { step, time, .. }) => {
            Ok(LevelResult { status: LevelStatus::Unstable { step, time }, trace, ..base })
        }
        Err(e) => Err(e.into()),
    }
}

/// Marches every level (concurrently), fits the order over the stable ones.
pub fn convergence_study(
    problem: &Problem,
    pair: &ClosurePair,
    tableau: &Tableau,
    cfg: &StudyConfig,
) -> Result<ConvergenceReport, AnalysisError> {
    cfg.validate()?;
    let levels = cfg
        .dts
        .par_iter()
        .map(|&dt| run_level(problem, pair, tableau, cfg, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let (errs, dts): (Vec<f64>, Vec<f64>) = levels.iter().filter_map(|l| l.error.map(|e| (e, l.dt))).unzip();
    let unstable_levels = levels.len() - errs.len();
    let fit = if errs.len() >= 2 && errs.iter().all(|&e| e > 0.0) {
        Some(empirical_order(&errs, &dts)?)
    } else {
        None
    };
    Ok(ConvergenceReport {
        problem: problem.label(),
        pair: pair.name().to_string(),
        tableau: tableau.name().to_string(),
        cfl: cfg.cfl,
        t_end: cfg.t_end,
        levels,
        fit,
        unstable_levels,
        flagged: unstable_levels > 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cfl: f64,
    pub order: Option<f64>,
    pub unstable_levels: usize,
    pub errors: Vec<Option<f64>>,
}

/// One convergence study per CFL number.
pub fn cfl_order_sweep(
    problem: &Problem,
    pair: &ClosurePair,
    tableau: &Tableau,
    cfls: &[f64],
    dts: &[f64],
) -> Result<Vec<SweepRow>, AnalysisError> {
    if let Some(bad) = cfls.iter().find(|&&c| !(c > 0.0 && c <= 2.0)) {
        return Err(AnalysisError::Config(format!("CFL values must lie in (0, 2], got {bad}")));
    }
    cfls.par_iter()
        .map(|&cfl| {
            let rep = convergence_study(problem, pair, tableau, &StudyConfig::new(cfl, dts))?;
            Ok(SweepRow {
                cfl,
                order: rep.order(),
                unstable_levels: rep.unstable_levels,
                errors: rep.levels.iter().map(|l| l.error).collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_examples() {
        assert_eq!(l2_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let e = l2_error(&[1.1; 7], &[1.0; 7]).unwrap();
        assert!((e - 0.1).abs() < 1e-15);
        let e = l2_error(&[0.0, 3.0, 4.0], &[0.0; 3]).unwrap();
        assert!((e - 5.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(l2_error(&[0.0], &[]).is_err());
    }

    #[test]
    fn order_examples() {
        let fit = empirical_order(&[8.0, 1.0, 0.125], &[0.4, 0.2, 0.1]).unwrap();
        assert!((fit.order - 3.0).abs() < 1e-12);
        let fit = empirical_order(&[1e-2, 2.5e-3], &[1e-2, 5e-3]).unwrap();
        assert!((fit.order - 2.0).abs() < 1e-12);
        assert!(empirical_order(&[1.0], &[1.0]).is_err());
        assert!(empirical_order(&[1.0, 0.0], &[1.0, 0.5]).is_err());
        assert!(empirical_order(&[1.0, -1.0], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn noisy_power_law() {
        let dts = PAPER_DTS;
        // Deterministic +-1% multiplicative noise.
        let noise = [1.01, 0.99, 1.005, 0.995, 1.0];
        let errs: Vec<f64> = dts.iter().zip(noise).map(|(d, n)| 3.0 * d.powf(2.53) * n).collect();
        let fit = empirical_order(&errs, &dts).unwrap();
        assert!((fit.order - 2.53).abs() < 0.05);
    }

    #[test]
    fn config_validation() {
        let pair = crate::closures::builtin_pair("standard").unwrap();
        let p = Problem::advection(crate::problems::TraceShape::SinPi);
        let tab = Tableau::ssprk3();
        let bad = StudyConfig::new(0.5, &[0.005, 0.01]);
        assert!(matches!(convergence_study(&p, &pair, &tab, &bad), Err(AnalysisError::Config(_))));
        let bad = StudyConfig::new(0.5, &[0.03]);
        let r = convergence_study(&p, &pair, &tab, &bad);
        assert!(matches!(r, Err(AnalysisError::March(_))), "{r:?}");
    }

    #[test]
    fn unstable_levels_flagged() {
        let pair = crate::closures::builtin_pair("ssprk3/acc_only").unwrap();
        let p = Problem::advection(crate::problems::TraceShape::SinPi);
        let rep = convergence_study(&p, &pair, &Tableau::ssprk3(), &StudyConfig::new(1.5, &FAST_DTS)).unwrap();
        assert!(rep.flagged);
        assert_eq!(rep.unstable_levels, 3);
        assert!(rep.fit.is_none());
        assert!(rep.levels.iter().all(|l| l.error.is_none()));
    }

    #[test]
    fn trace_records_steps() {
        let pair = crate::closures::builtin_pair("standard").unwrap();
        let p = Problem::advection(crate::problems::TraceShape::SinPi);
        let mut cfg = StudyConfig::new(0.5, &[0.05, 0.025]);
        cfg.trace_every = 2;
        let rep = convergence_study(&p, &pair, &Tableau::ssprk3(), &cfg).unwrap();
        assert_eq!(rep.levels[0].trace.len(), 10);
        assert_eq!(rep.levels[1].trace.len(), 20);
        let last = rep.levels[1].trace.last().unwrap();
        assert_eq!(last.2, rep.levels[1].error.unwrap());
    }
}
