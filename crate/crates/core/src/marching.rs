//! Explicit RK time stepping with the boundary overwritten at every stage,
//! plus one-step truncation probes at the boundary-adjacent nodes.

use serde::Serialize;
use thiserror::Error;

use crate::closures::ClosurePair;
use crate::operator::Grid1D;
use crate::problems::{Discretization, Problem, ProblemError, SemiDiscrete};
use crate::tableau::Tableau;

/// A level whose solution exceeds this magnitude is treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum MarchError {
    #[error("diverged at step {step} (t = {time}){}", stage.map(|s| format!(", stage {s}")).unwrap_or_default())]
    Diverged { step: usize, stage: Option<usize>, time: f64 },
    #[error("invalid march configuration: {0}")]
    Config(String),
    #[error("truncation probe needs the 1D advection problem")]
    NotAdvection,
    #[error("node must be 1 or 2, got {0}")]
    BadNode(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Serialize)]
pub struct MarchConfig {
    #[serde(skip)]
    pub tableau: Tableau,
    pub dt: f64,
    pub cfl: f64,
    pub t_end: f64,
}

impl MarchConfig {
    pub fn new(tableau: Tableau, dt: f64, cfl: f64, t_end: f64) -> Result<Self, MarchError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(MarchError::Config(format!("dt must be positive, got {dt}")));
        }
        if !(cfl > 0.0 && cfl.is_finite()) {
            return Err(MarchError::Config(format!("CFL must be positive, got {cfl}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(MarchError::Config(format!("t_end must be non-negative, got {t_end}")));
        }
        let steps = (t_end / dt).round();
        if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
            return Err(MarchError::Config(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
        }
        Ok(MarchConfig { tableau, dt, cfl, t_end })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Receives every stage evaluation: stage index (1-based), stage time, the
/// boundary data supplied to the right-hand side, and the stage state.
pub trait StageObserver {
    fn on_stage(&mut self, stage: usize, time: f64, boundary: &[f64], state: &[f64]);
}

impl StageObserver for () {
    fn on_stage(&mut self, _: usize, _: f64, _: &[f64], _: &[f64]) {}
}

impl<F: FnMut(usize, f64, &[f64], &[f64])> StageObserver for F {
    fn on_stage(&mut self, stage: usize, time: f64, boundary: &[f64], state: &[f64]) {
        self(stage, time, boundary, state)
    }
}

/// Reusable RK workspace for a fixed system size.
#[derive(Debug, Clone)]
pub struct Stepper {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    bnd: Vec<f64>,
}

impl Stepper {
    pub fn new(tableau: &Tableau, len: usize) -> Self {
        let s = tableau.stages();
        Stepper {
            a: tableau.a().to_vec(),
            b: tableau.b().to_vec(),
            c: tableau.c().to_vec(),
            k: vec![vec![0.0; len]; s],
            stage: vec![0.0; len],
            bnd: Vec::new(),
        }
    }

    /// Advances `u` from `t` to `t + dt` in place. On a non-finite stage value
    /// returns the offending 1-based stage index and leaves `u` untouched.
    pub fn step<S: SemiDiscrete + ?Sized>(
        &mut self,
        sys: &S,
        u: &mut [f64],
        t: f64,
        dt: f64,
        observer: &mut dyn StageObserver,
    ) -> Result<(), usize> {
        let s = self.b.len();
        for k in 0..s {
            self.stage.copy_from_slice(u);
            for j in 0..k {
                let a = self.a[k][j];
                if a != 0.0 {
                    for (st, kj) in self.stage.iter_mut().zip(&self.k[j]) {
                        *st += dt * a * kj;
                    }
                }
            }
            let tk = t + self.c[k] * dt;
            sys.boundary(tk, &mut self.bnd);
            observer.on_stage(k + 1, tk, &self.bnd, &self.stage);
            sys.eval(&self.stage, &self.bnd, tk, &mut self.k[k]);
            if !self.stage.iter().chain(&self.k[k]).all(|v| v.is_finite()) {
                return Err(k + 1);
            }
        }
        for k in 0..s {
            let b = self.b[k];
            if b != 0.0 {
                for (ui, ki) in u.iter_mut().zip(&self.k[k]) {
                    *ui += dt * b * ki;
                }
            }
        }
        Ok(())
    }
}

/// One RK step from `(t, u)`; the stage boundary data is `sys.boundary(t + c_k dt)`.
pub fn rk_step<S: SemiDiscrete + ?Sized>(
    sys: &S,
    tableau: &Tableau,
    u: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>, MarchError> {
    let mut out = u.to_vec();
    Stepper::new(tableau, u.len())
        .step(sys, &mut out, t, dt, &mut ())
        .map_err(|stage| MarchError::Diverged { step: 1, stage: Some(stage), time: t })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarchOutcome {
    /// Unknowns at `t_end`.
    pub state: Vec<f64>,
    pub steps: usize,
    pub t_end: f64,
}

/// Marches `sys` from `u0` at `t = 0`. `on_step(step, t, state)` runs after
/// every completed step.
pub fn march_system<S: SemiDiscrete + ?Sized>(
    sys: &S,
    u0: Vec<f64>,
    cfg: &MarchConfig,
    mut on_step: impl FnMut(usize, f64, &[f64]),
) -> Result<MarchOutcome, MarchError> {
    let steps = cfg.steps();
    let mut u = u0;
    let mut stepper = Stepper::new(&cfg.tableau, u.len());
    for n in 0..steps {
        let t = n as f64 * cfg.dt;
        stepper
            .step(sys, &mut u, t, cfg.dt, &mut ())
            .map_err(|stage| MarchError::Diverged { step: n + 1, stage: Some(stage), time: t })?;
        let t_next = (n + 1) as f64 * cfg.dt;
        if u.iter().any(|v| !(v.abs() <= DIVERGENCE_BOUND)) {
            return Err(MarchError::Diverged { step: n + 1, stage: None, time: t_next });
        }
        on_step(n + 1, t_next, &u);
    }
    Ok(MarchOutcome { state: u, steps, t_end: steps as f64 * cfg.dt })
}

/// Marches a discretized problem from its exact initial data.
pub fn march(disc: &Discretization, cfg: &MarchConfig) -> Result<MarchOutcome, MarchError> {
    march_system(disc, disc.exact_unknowns(0.0), cfg, |_, _, _| {})
}

/// Nodes in the small grid used by truncation probes; far more than the
/// domain of dependence of nodes 1 and 2 over one step.
fn probe_nodes(tableau: &Tableau) -> usize {
    16 + 6 * tableau.stages()
}

fn advection_speed(problem: &Problem) -> Result<f64, MarchError> {
    match problem {
        Problem::Advection1D { speed, .. } => Ok(*speed),
        _ => Err(MarchError::NotAdvection),
    }
}

/// One-step defect `u_m^{n+1} - u(x_m, t^n + dt)` starting from exact data at `t_n`.
pub fn measure_truncation(
    problem: &Problem,
    pair: &ClosurePair,
    tableau: &Tableau,
    node: usize,
    dt: f64,
    cfl: f64,
    t_n: f64,
) -> Result<f64, MarchError> {
    let speed = advection_speed(problem)?;
    if node != 1 && node != 2 {
        return Err(MarchError::BadNode(node));
    }
    let grid = Grid1D::new(probe_nodes(tableau), speed * dt / cfl).map_err(ProblemError::from)?;
    let disc = Discretization::new(problem, pair, grid)?;
    let u = disc.exact_unknowns(t_n);
    let next = rk_step(&disc, tableau, &u, t_n, dt)?;
    Ok(next[node - 1] - problem.exact(grid.x(node), 0.0, t_n + dt))
}

/// Which closed form produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionForm {
    /// Stage-by-stage expansion for the three-stage SSP method.
    Ssprk3Expansion,
    /// Tableau-scalar form with the amplitudes taken per step (`dt * gamma`).
    TableauScalars,
}

/// Leading-order one-step defect at node `m`. All terms are coefficients of
/// `dt^2`.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationPrediction {
    pub node: usize,
    pub dt: f64,
    pub cfl: f64,
    pub form: PredictionForm,
    pub p_term: f64,
    pub q_term: f64,
    pub r_term: f64,
    pub s_term: f64,
    pub sigma_term: f64,
    /// Predicted `tau_m / dt^2`.
    pub total: f64,
    pub sigma_convention: &'static str,
}

impl TruncationPrediction {
    pub fn tau(&self) -> f64 {
        self.total * self.dt * self.dt
    }
}

fn is_ssprk3(t: &Tableau) -> bool {
    let r = Tableau::ssprk3();
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-14);
    t.stages() == 3 && close(t.b(), r.b()) && close(t.c(), r.c()) && t.a().iter().zip(r.a()).all(|(x, y)| close(x, y))
}

pub fn predict_truncation(
    pair: &ClosurePair,
    tableau: &Tableau,
    problem: &Problem,
    node: usize,
    dt: f64,
    cfl: f64,
    t_n: f64,
) -> Result<TruncationPrediction, MarchError> {
    let speed = advection_speed(problem)?;
    let Problem::Advection1D { shape, .. } = problem else { unreachable!() };
    if node != 1 && node != 2 {
        return Err(MarchError::BadNode(node));
    }
    let dx = speed * dt / cfl;
    let g_tt = shape.g_tt(t_n);
    let u_xx = problem.exact_uxx(node as f64 * dx, t_n).expect("advection has u_xx");
    let row = if node == 1 { pair.node1() } else { pair.node2() };
    let sigma = row.second_moment().sigma;
    let w0m = row.w0();
    let w01 = pair.node1().w0();
    let sc = tableau.boundary_scalars();
    // -c sigma dx dt u_xx, divided by dt^2, with dx = c dt / cfl.
    let sigma_term = -speed * speed * sigma / cfl * u_xx;
    let p_term = sc.p * speed * speed * u_xx;
    let q_term = sc.q * g_tt;
    let (form, r_term, s_term) = if is_ssprk3(tableau) {
        let r = -2.0 * cfl / 3.0 * w0m * g_tt;
        let s = if node == 2 { -cfl / 3.0 * w01 * g_tt } else { 0.0 };
        (PredictionForm::Ssprk3Expansion, r, s)
    } else {
        // dt * gamma = -cfl * w0 * g_tt
        let r = sc.r * (-cfl * w0m * g_tt);
        let s = if node == 2 { sc.s * (-cfl * w01 * g_tt) } else { 0.0 };
        (PredictionForm::TableauScalars, r, s)
    };
    Ok(TruncationPrediction {
        node,
        dt,
        cfl,
        form,
        p_term,
        q_term,
        r_term,
        s_term,
        sigma_term,
        total: p_term + q_term + r_term + s_term + sigma_term,
        sigma_convention: crate::closures::SIGMA_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::{builtin_pair, row_with_targets, ClosurePair};
    use crate::problems::TraceShape;
    use num_complex::Complex64;

    /// `u' = k u` with no boundary.
    struct Scalar(f64);

    impl SemiDiscrete for Scalar {
        fn len(&self) -> usize {
            1
        }
        fn boundary(&self, _: f64, out: &mut Vec<f64>) {
            out.clear();
        }
        fn eval(&self, u: &[f64], _: &[f64], _: f64, out: &mut [f64]) {
            out[0] = self.0 * u[0];
        }
    }

    #[test]
    fn scalar_ode_matches_stability_function() {
        for tab in [Tableau::ssprk3(), Tableau::rk4()] {
            for k in [-1.0, -3.7, 0.4] {
                let dt = 0.3;
                let next = rk_step(&Scalar(k), &tab, &[2.0], 0.0, dt).unwrap()[0];
                let r = tab.stability_function(Complex64::new(k * dt, 0.0)).re;
                assert!((next - 2.0 * r).abs() <= 1e-13 * (1.0 + next.abs()));
            }
        }
    }

    fn adv_disc(pair: &ClosurePair, n: usize, dx: f64) -> Discretization {
        Discretization::new(&Problem::advection(TraceShape::SinPi), pair, Grid1D::new(n, dx).unwrap()).unwrap()
    }

    #[test]
    fn constant_state_is_steady() {
        // Constant boundary data: use a custom system wrapping the operator.
        struct Const<'a>(&'a Discretization, f64);
        impl SemiDiscrete for Const<'_> {
            fn len(&self) -> usize {
                self.0.len()
            }
            fn boundary(&self, _: f64, out: &mut Vec<f64>) {
                out.clear();
                out.push(self.1);
            }
            fn eval(&self, u: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
                self.0.eval(u, b, t, out)
            }
        }
        let pair = builtin_pair("ssprk3/acc_only").unwrap();
        let d = adv_disc(&pair, 30, 0.05);
        let sys = Const(&d, 0.7);
        let next = rk_step(&sys, &Tableau::ssprk3(), &vec![0.7; d.len()], 0.0, 0.025).unwrap();
        assert!(next.iter().all(|v| (v - 0.7).abs() <= 1e-12));
    }

    #[test]
    fn linear_data_advects_exactly() {
        // u(x, 0) = x, g(t) = -c t, exact u = x - c t.
        struct Linear<'a>(&'a Discretization);
        impl SemiDiscrete for Linear<'_> {
            fn len(&self) -> usize {
                self.0.len()
            }
            fn boundary(&self, t: f64, out: &mut Vec<f64>) {
                out.clear();
                out.push(-t);
            }
            fn eval(&self, u: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
                self.0.eval(u, b, t, out)
            }
        }
        let pair = builtin_pair("ssprk3/standard").unwrap();
        let d = adv_disc(&pair, 25, 0.04);
        let x: Vec<f64> = (1..25).map(|j| d.grid().x(j)).collect();
        let dt = 0.02;
        for tab in [Tableau::ssprk3(), Tableau::rk4()] {
            let next = rk_step(&Linear(&d), &tab, &x, 0.0, dt).unwrap();
            for (v, xj) in next.iter().zip(&x) {
                assert!((v - (xj - dt)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn stage_boundary_values_follow_abscissae() {
        let pair = builtin_pair("standard").unwrap();
        let d = adv_disc(&pair, 20, 0.02);
        let tab = Tableau::ssprk3();
        let (t_n, dt) = (0.3, 0.01);
        let mut seen = Vec::new();
        let mut obs = |k: usize, t: f64, b: &[f64], _: &[f64]| seen.push((k, t, b[0]));
        let mut u = d.exact_unknowns(t_n);
        Stepper::new(&tab, d.len()).step(&d, &mut u, t_n, dt, &mut obs).unwrap();
        let g = |t: f64| TraceShape::SinPi.g(t);
        assert_eq!(seen.len(), 3);
        assert_eq!(seen[0], (1, t_n, g(t_n)));
        assert_eq!(seen[1], (2, t_n + dt, g(t_n + dt)));
        assert_eq!(seen[2], (3, t_n + 0.5 * dt, g(t_n + 0.5 * dt)));
    }

    #[test]
    fn step_count_and_config_checks() {
        let tab = Tableau::ssprk3();
        let cfg = MarchConfig::new(tab.clone(), 0.01, 0.5, 0.1).unwrap();
        assert_eq!(cfg.steps(), 10);
        let pair = builtin_pair("standard").unwrap();
        let d = Discretization::at_cfl(&Problem::advection(TraceShape::SinPi), &pair, 0.01, 0.5).unwrap();
        let mut count = 0;
        let out = march_system(&d, d.exact_unknowns(0.0), &cfg, |_, _, _| count += 1).unwrap();
        assert_eq!((out.steps, count), (10, 10));
        assert!(MarchConfig::new(tab.clone(), 0.03, 0.5, 0.1).is_err());
        assert!(MarchConfig::new(tab.clone(), 0.0, 0.5, 1.0).is_err());
        assert!(MarchConfig::new(tab, 0.01, -1.0, 1.0).is_err());
    }

    #[test]
    fn divergence_detected() {
        let cfg = MarchConfig::new(Tableau::forward_euler(), 1.0, 1.0, 100.0).unwrap();
        let err = march_system(&Scalar(3.0), vec![1.0], &cfg, |_, _, _| {}).unwrap_err();
        assert!(matches!(err, MarchError::Diverged { stage: None, .. }));
        let err = rk_step(&Scalar(f64::INFINITY), &Tableau::ssprk3(), &[1.0], 0.0, 1.0).unwrap_err();
        assert!(matches!(err, MarchError::Diverged { stage: Some(1), .. }));
    }

    #[test]
    fn prediction_reduces_to_q_term() {
        // w0 = 0 and sigma = 0 at both nodes.
        let n1 = row_with_targets(1, 0.0, 0.0).unwrap();
        let n2 = row_with_targets(2, 0.0, 0.0).unwrap();
        let pair = ClosurePair::new("zero", n1, n2).unwrap();
        let p = Problem::advection(TraceShape::SinPi);
        for node in [1, 2] {
            let pr = predict_truncation(&pair, &Tableau::ssprk3(), &p, node, 1e-3, 0.5, 0.3).unwrap();
            let expect = TraceShape::SinPi.g_tt(0.3) / 6.0;
            assert!((pr.total - expect).abs() < 1e-12, "{}", pr.total);
        }
    }

    #[test]
    fn node_two_adds_cross_coupling() {
        let n1 = row_with_targets(1, -0.4, 0.0).unwrap();
        let n2 = row_with_targets(2, -0.4, 0.0).unwrap();
        let pair = ClosurePair::new("same-w0", n1, n2).unwrap();
        let p = Problem::advection(TraceShape::SinPi);
        let (dt, cfl, t) = (1e-3, 0.5, 0.3);
        let p1 = predict_truncation(&pair, &Tableau::ssprk3(), &p, 1, dt, cfl, t).unwrap();
        let p2 = predict_truncation(&pair, &Tableau::ssprk3(), &p, 2, dt, cfl, t).unwrap();
        let expect = -cfl / 3.0 * -0.4 * TraceShape::SinPi.g_tt(t) * dt * dt;
        assert!((p2.tau() - p1.tau() - expect).abs() < 1e-15);
    }

    #[test]
    fn probe_rejects_other_problems() {
        let pair = builtin_pair("standard").unwrap();
        assert_eq!(
            measure_truncation(&Problem::burgers(), &pair, &Tableau::ssprk3(), 1, 1e-3, 0.5, 0.0),
            Err(MarchError::NotAdvection)
        );
        let p = Problem::advection(TraceShape::SinPi);
        assert_eq!(
            measure_truncation(&p, &pair, &Tableau::ssprk3(), 3, 1e-3, 0.5, 0.0),
            Err(MarchError::BadNode(3))
        );
    }
}
