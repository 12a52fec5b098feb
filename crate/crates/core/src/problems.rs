//! Benchmark problems: exact solutions, boundary traces, manufactured
//! sources, and their method-of-lines right-hand sides.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closures::ClosurePair;
use crate::eigen::{self, Dense};
use crate::operator::{Grid1D, OperatorError, SpatialOperator};

/// Amplitude of each characteristic mode in the Euler exact field.
pub const EULER_AMPLITUDE: f64 = 0.01;
/// Spatial wavenumber of the Euler exact field.
pub const EULER_WAVENUMBER: f64 = 2.0 * PI;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("density and pressure must be positive (rho = {rho}, p = {p})")]
    NonPositiveState { rho: f64, p: f64 },
    #[error("mean state has complex characteristic speeds")]
    ComplexSpeeds,
    #[error("all characteristic speeds must be positive for left inflow; got {0:?}")]
    NotSupersonic([f64; 3]),
    #[error("advection speeds must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("unknown problem `{0}` (expected adv1d, burgers, adv2d, euler)")]
    UnknownProblem(String),
    #[error("unknown boundary trace `{0}` (expected sin_pi, cubic, two_mode, exp_mod)")]
    UnknownTrace(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Inflow boundary signals used for the 1D advection study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceShape {
    /// `sin(-pi t)`
    SinPi,
    /// `(-t)^3 - 2(-t)`
    Cubic,
    /// `sin(-2 pi t) + 0.5 sin(-6 pi t)`
    TwoMode,
    /// `exp(t/2) sin(-4 pi t)`
    ExpMod,
}

impl TraceShape {
    pub const ALL: [TraceShape; 4] = [TraceShape::SinPi, TraceShape::Cubic, TraceShape::TwoMode, TraceShape::ExpMod];

    pub fn key(self) -> &'static str {
        match self {
            TraceShape::SinPi => "sin_pi",
            TraceShape::Cubic => "cubic",
            TraceShape::TwoMode => "two_mode",
            TraceShape::ExpMod => "exp_mod",
        }
    }

    pub fn g(self, t: f64) -> f64 {
        match self {
            TraceShape::SinPi => (-PI * t).sin(),
            TraceShape::Cubic => (-t).powi(3) - 2.0 * (-t),
            TraceShape::TwoMode => (-2.0 * PI * t).sin() + 0.5 * (-6.0 * PI * t).sin(),
            TraceShape::ExpMod => (0.5 * t).exp() * (-4.0 * PI * t).sin(),
        }
    }

    pub fn g_t(self, t: f64) -> f64 {
        match self {
            TraceShape::SinPi => -PI * (PI * t).cos(),
            TraceShape::Cubic => 2.0 - 3.0 * t * t,
            TraceShape::TwoMode => -2.0 * PI * (2.0 * PI * t).cos() - 3.0 * PI * (6.0 * PI * t).cos(),
            TraceShape::ExpMod => {
                let e = (0.5 * t).exp();
                let (s, c) = (-4.0 * PI * t).sin_cos();
                e * (0.5 * s - 4.0 * PI * c)
            }
        }
    }

    pub fn g_tt(self, t: f64) -> f64 {
        match self {
            TraceShape::SinPi => PI * PI * (PI * t).sin(),
            TraceShape::Cubic => -6.0 * t,
            TraceShape::TwoMode => 4.0 * PI * PI * (2.0 * PI * t).sin() + 18.0 * PI * PI * (6.0 * PI * t).sin(),
            TraceShape::ExpMod => {
                let e = (0.5 * t).exp();
                let (s, c) = (-4.0 * PI * t).sin_cos();
                e * ((0.25 - 16.0 * PI * PI) * s - 4.0 * PI * c)
            }
        }
    }
}

impl fmt::Display for TraceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for TraceShape {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraceShape::ALL
            .into_iter()
            .find(|t| t.key() == s || (s == "sin" && *t == TraceShape::SinPi))
            .ok_or_else(|| ProblemError::UnknownTrace(s.to_string()))
    }
}

/// Discrete form of the Burgers nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BurgersForm {
    /// `-u D u`: each node sees its own local characteristic speed.
    #[default]
    Advective,
    /// `-D(u^2/2)`
    Conservative,
}

impl FromStr for BurgersForm {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "advective" => Ok(BurgersForm::Advective),
            "conservative" => Ok(BurgersForm::Conservative),
            other => Err(ProblemError::UnknownProblem(format!("burgers form `{other}`"))),
        }
    }
}

/// The linearized-Euler flux matrix about `(rho, u, p)`.
pub fn euler_matrix(rho: f64, u: f64, p: f64, gamma: f64) -> Result<[[f64; 3]; 3], ProblemError> {
    if !(rho > 0.0 && p > 0.0) {
        return Err(ProblemError::NonPositiveState { rho, p });
    }
    Ok([[u, rho, 0.0], [0.0, u, 1.0 / rho], [0.0, gamma * p, u]])
}

pub fn sound_speed(rho: f64, p: f64, gamma: f64) -> f64 {
    (gamma * p / rho).sqrt()
}

/// One right eigenpair of the flux matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub speed: f64,
    /// Scaled so the largest-magnitude component equals +1.
    pub vector: [f64; 3],
}

/// Right eigenpairs sorted by ascending speed.
pub fn characteristic_modes(a: &[[f64; 3]; 3]) -> Result<[Mode; 3], ProblemError> {
    let m = Dense::from_rows(&a.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).map_err(|_| ProblemError::ComplexSpeeds)?;
    let pairs = eigen::eigenpairs(&m).map_err(|_| ProblemError::ComplexSpeeds)?;
    let scale = m.frobenius().max(1.0);
    let mut modes = Vec::with_capacity(3);
    for p in pairs {
        if p.value.im.abs() > 1e-12 * scale {
            return Err(ProblemError::ComplexSpeeds);
        }
        // A real eigenvector may carry a global complex phase; rotate it out.
        let pivot = p.vector.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let vector: Vec<f64> = p.vector.iter().map(|c| (c / pivot).re).collect();
        modes.push(Mode { speed: p.value.re, vector: [vector[0], vector[1], vector[2]] });
    }
    modes.sort_by(|a, b| a.speed.total_cmp(&b.speed));
    Ok([modes[0], modes[1], modes[2]])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerSetup {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
    pub gamma: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub matrix: [[f64; 3]; 3],
    pub modes: [Mode; 3],
}

impl EulerSetup {
    pub fn new(rho: f64, u: f64, p: f64, gamma: f64, amplitude: f64) -> Result<Self, ProblemError> {
        let matrix = euler_matrix(rho, u, p, gamma)?;
        let modes = characteristic_modes(&matrix)?;
        let speeds = modes.map(|m| m.speed);
        if speeds[0] <= 0.0 {
            return Err(ProblemError::NotSupersonic(speeds));
        }
        Ok(EulerSetup { rho, u, p, gamma, amplitude, wavenumber: EULER_WAVENUMBER, matrix, modes })
    }

    /// Mean state `(1, 2.5, 1)` with `gamma = 1.4`.
    pub fn standard() -> Self {
        Self::new(1.0, 2.5, 1.0, 1.4, EULER_AMPLITUDE).expect("supersonic mean state")
    }

    pub fn exact(&self, x: f64, t: f64) -> [f64; 3] {
        let mut q = [0.0; 3];
        for m in &self.modes {
            let s = self.amplitude * (self.wavenumber * (x - m.speed * t)).sin();
            for (qi, ri) in q.iter_mut().zip(m.vector) {
                *qi += s * ri;
            }
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Problem {
    Advection1D { speed: f64, shape: TraceShape },
    BurgersMms { form: BurgersForm },
    Advection2D { cx: f64, cy: f64 },
    LinearizedEuler(EulerSetup),
}

/// Which boundary a trace refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// `x = 0` (the only inflow boundary in 1D).
    Left,
    /// `y = 0` in 2D.
    Bottom,
}

impl Problem {
    pub fn advection(shape: TraceShape) -> Self {
        Problem::Advection1D { speed: 1.0, shape }
    }

    pub fn burgers() -> Self {
        Problem::BurgersMms { form: BurgersForm::Advective }
    }

    pub fn advection_2d() -> Self {
        Problem::Advection2D { cx: 1.0, cy: 1.0 }
    }

    pub fn euler() -> Self {
        Problem::LinearizedEuler(EulerSetup::standard())
    }

    /// Parses `adv1d`, `burgers`, `adv2d`, `euler` with defaults.
    pub fn by_name(name: &str) -> Result<Self, ProblemError> {
        match name {
            "adv1d" | "advection" => Ok(Self::advection(TraceShape::SinPi)),
            "burgers" => Ok(Self::burgers()),
            "adv2d" => Ok(Self::advection_2d()),
            "euler" => Ok(Self::euler()),
            other => Err(ProblemError::UnknownProblem(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Problem::Advection1D { .. } => "adv1d",
            Problem::BurgersMms { .. } => "burgers",
            Problem::Advection2D { .. } => "adv2d",
            Problem::LinearizedEuler(_) => "euler",
        }
    }

    /// Label including the trace shape where relevant.
    pub fn label(&self) -> String {
        match self {
            Problem::Advection1D { shape, .. } => format!("adv1d:{shape}"),
            other => other.id().to_string(),
        }
    }

    /// Speed used to size the grid at a given CFL: the maximum characteristic
    /// speed in 1D, and `cx + cy` in 2D.
    pub fn cfl_speed(&self) -> f64 {
        match self {
            Problem::Advection1D { speed, .. } => *speed,
            Problem::BurgersMms { .. } => 2.0,
            Problem::Advection2D { cx, cy } => cx + cy,
            Problem::LinearizedEuler(e) => e.modes[2].speed,
        }
    }

    pub fn components(&self) -> usize {
        match self {
            Problem::LinearizedEuler(_) => 3,
            _ => 1,
        }
    }

    /// Scalar exact solution in 1D (component 0 for Euler) or at `(x, y)` in 2D.
    pub fn exact(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            Problem::Advection1D { speed, shape } => shape.g(t - x / speed),
            Problem::BurgersMms { .. } => burgers_exact(x, t),
            Problem::Advection2D { cx, cy } => (PI * (x - cx * t)).sin() * (PI * (y - cy * t)).sin(),
            Problem::LinearizedEuler(e) => e.exact(x, t)[0],
        }
    }

    /// Exact state vector in 1D (length 1, or 3 for Euler).
    pub fn exact_state(&self, x: f64, t: f64) -> Vec<f64> {
        match self {
            Problem::LinearizedEuler(e) => e.exact(x, t).to_vec(),
            _ => vec![self.exact(x, 0.0, t)],
        }
    }

    /// Manufactured source; zero for the linear problems.
    pub fn source(&self, x: f64, t: f64) -> f64 {
        match self {
            Problem::BurgersMms { .. } => burgers_source(x, t),
            _ => 0.0,
        }
    }

    /// Boundary data at `s` along an edge (`s` is `y` on the left edge and
    /// `x` on the bottom edge in 2D, ignored in 1D).
    pub fn trace(&self, t: f64, edge: Edge, s: f64) -> Vec<f64> {
        match (self, edge) {
            (Problem::Advection2D { .. }, Edge::Left) => vec![self.exact(0.0, s, t)],
            (Problem::Advection2D { .. }, Edge::Bottom) => vec![self.exact(s, 0.0, t)],
            (Problem::Advection1D { shape, .. }, _) => vec![shape.g(t)],
            _ => self.exact_state(0.0, t),
        }
    }

    /// `u_xx` of the 1D exact solution; used by the truncation prediction.
    pub fn exact_uxx(&self, x: f64, t: f64) -> Option<f64> {
        match self {
            Problem::Advection1D { speed, shape } => Some(shape.g_tt(t - x / speed) / (speed * speed)),
            _ => None,
        }
    }
}

pub fn burgers_exact(x: f64, t: f64) -> f64 {
    1.5 + 0.5 * (PI * (x - t)).sin()
}

/// `u*_t + u* u*_x` for the manufactured Burgers solution.
pub fn burgers_source(x: f64, t: f64) -> f64 {
    let c = (PI * (x - t)).cos();
    let u = burgers_exact(x, t);
    -0.5 * PI * c + u * 0.5 * PI * c
}

/// A semi-discrete system `U' = F(U, b(t), t)` whose boundary data `b(t)` is
/// overwritten at every stage.
pub trait SemiDiscrete: Sync {
    /// Number of unknowns.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Boundary data at time `t`.
    fn boundary(&self, t: f64, out: &mut Vec<f64>);

    /// `out = F(u, boundary, t)`.
    fn eval(&self, u: &[f64], boundary: &[f64], t: f64, out: &mut [f64]);
}

/// A problem discretized on a grid with a given closure pair.
#[derive(Debug, Clone)]
pub struct Discretization {
    problem: Problem,
    op: SpatialOperator,
    grid: Grid1D,
    interior_x: Vec<f64>,
    source_buf_len: usize,
}

impl Discretization {
    pub fn new(problem: &Problem, pair: &ClosurePair, grid: Grid1D) -> Result<Self, ProblemError> {
        match problem {
            Problem::Advection1D { speed, .. } if *speed <= 0.0 => return Err(ProblemError::NonPositiveSpeed(*speed)),
            Problem::Advection2D { cx, cy } if *cx <= 0.0 || *cy <= 0.0 => {
                return Err(ProblemError::NonPositiveSpeed(cx.min(*cy)))
            }
            _ => {}
        }
        let op = SpatialOperator::assemble(pair, grid, 1)?;
        let interior_x = (1..grid.nodes()).map(|j| grid.x(j)).collect();
        let m = grid.unknowns();
        let source_buf_len = match problem {
            Problem::Advection2D { .. } => m * m,
            Problem::LinearizedEuler(_) => 3 * m,
            _ => m,
        };
        Ok(Discretization { problem: problem.clone(), op, grid, interior_x, source_buf_len })
    }

    /// Grid sized for `cfl` at time step `dt` on the unit domain.
    pub fn at_cfl(problem: &Problem, pair: &ClosurePair, dt: f64, cfl: f64) -> Result<Self, ProblemError> {
        let grid = Grid1D::for_cfl(problem.cfl_speed(), dt, cfl, 1.0)?;
        Self::new(problem, pair, grid)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn operator(&self) -> &SpatialOperator {
        &self.op
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Exact unknowns at time `t` (boundary excluded).
    pub fn exact_unknowns(&self, t: f64) -> Vec<f64> {
        let m = self.grid.unknowns();
        match &self.problem {
            Problem::Advection2D { .. } => {
                let mut u = Vec::with_capacity(m * m);
                for &x in &self.interior_x {
                    for &y in &self.interior_x {
                        u.push(self.problem.exact(x, y, t));
                    }
                }
                u
            }
            Problem::LinearizedEuler(e) => {
                let mut u = vec![0.0; 3 * m];
                for (j, &x) in self.interior_x.iter().enumerate() {
                    let q = e.exact(x, t);
                    for k in 0..3 {
                        u[k * m + j] = q[k];
                    }
                }
                u
            }
            p => self.interior_x.iter().map(|&x| p.exact(x, 0.0, t)).collect(),
        }
    }

    /// Unknowns plus the boundary nodes filled from the exact trace at `t`;
    /// in 2D the corner node takes the exact value.
    pub fn full_field(&self, u: &[f64], t: f64) -> Vec<f64> {
        let n = self.grid.nodes();
        let m = n - 1;
        match &self.problem {
            Problem::Advection2D { .. } => {
                let mut full = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        full[i * n + j] = if i == 0 || j == 0 {
                            self.problem.exact(self.grid.x(i), self.grid.x(j), t)
                        } else {
                            u[(i - 1) * m + (j - 1)]
                        };
                    }
                }
                full
            }
            Problem::LinearizedEuler(e) => {
                let b = e.exact(0.0, t);
                let mut full = Vec::with_capacity(3 * n);
                for k in 0..3 {
                    full.push(b[k]);
                    full.extend_from_slice(&u[k * m..(k + 1) * m]);
                }
                full
            }
            p => {
                let mut full = Vec::with_capacity(n);
                full.push(p.trace(t, Edge::Left, 0.0)[0]);
                full.extend_from_slice(u);
                full
            }
        }
    }

    /// Exact values on every node, in the layout of [`Self::full_field`].
    pub fn exact_full(&self, t: f64) -> Vec<f64> {
        let n = self.grid.nodes();
        match &self.problem {
            Problem::Advection2D { .. } => (0..n * n)
                .map(|k| self.problem.exact(self.grid.x(k / n), self.grid.x(k % n), t))
                .collect(),
            Problem::LinearizedEuler(e) => {
                let mut full = vec![0.0; 3 * n];
                for j in 0..n {
                    let q = e.exact(self.grid.x(j), t);
                    for k in 0..3 {
                        full[k * n + j] = q[k];
                    }
                }
                full
            }
            p => (0..n).map(|j| p.exact(self.grid.x(j), 0.0, t)).collect(),
        }
    }
}

impl SemiDiscrete for Discretization {
    fn len(&self) -> usize {
        self.source_buf_len
    }

    fn boundary(&self, t: f64, out: &mut Vec<f64>) {
        out.clear();
        match &self.problem {
            Problem::Advection2D { .. } => {
                for &y in &self.interior_x {
                    out.push(self.problem.exact(0.0, y, t));
                }
                for &x in &self.interior_x {
                    out.push(self.problem.exact(x, 0.0, t));
                }
            }
            p => out.extend(p.trace(t, Edge::Left, 0.0)),
        }
    }

    fn eval(&self, u: &[f64], boundary: &[f64], t: f64, out: &mut [f64]) {
        let m = self.grid.unknowns();
        match &self.problem {
            Problem::Advection1D { speed, .. } => {
                self.op.apply_into(u, boundary[0], out).expect("sized by construction");
                out.iter_mut().for_each(|v| *v *= -speed);
            }
            Problem::BurgersMms { form } => {
                let g = boundary[0];
                match form {
                    BurgersForm::Advective => {
                        self.op.apply_into(u, g, out).expect("sized by construction");
                        for (o, &v) in out.iter_mut().zip(u) {
                            *o *= -v;
                        }
                    }
                    BurgersForm::Conservative => {
                        let flux: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
                        self.op.apply_into(&flux, 0.5 * g * g, out).expect("sized by construction");
                        out.iter_mut().for_each(|v| *v = -*v);
                    }
                }
                for (o, &x) in out.iter_mut().zip(&self.interior_x) {
                    *o += burgers_source(x, t);
                }
            }
            Problem::Advection2D { cx, cy } => {
                out.fill(0.0);
                let (left, bottom) = boundary.split_at(m);
                // x-derivative along each row of fixed y index j.
                for (j, &b) in left.iter().enumerate() {
                    self.op.apply_strided(u, j, m, b, out, -cx);
                }
                // y-derivative along each column of fixed x index i.
                for (i, &b) in bottom.iter().enumerate() {
                    self.op.apply_strided(u, i * m, 1, b, out, -cy);
                }
            }
            Problem::LinearizedEuler(e) => {
                let mut d = vec![0.0; 3 * m];
                for k in 0..3 {
                    self.op
                        .apply_into(&u[k * m..(k + 1) * m], boundary[k], &mut d[k * m..(k + 1) * m])
                        .expect("sized by construction");
                }
                for j in 0..m {
                    for r in 0..3 {
                        out[r * m + j] = -(0..3).map(|c| e.matrix[r][c] * d[c * m + j]).sum::<f64>();
                    }
                }
            }
        }
    }
}
