//! Five-point boundary closures at nodes 1 and 2.
//!
//! A closure row holds weights `w_0..w_4` over grid nodes `0..4`; the derivative
//! at node `m` is `sum_j w_j u_j / dx`. Consistency pins the zeroth moment to 0
//! and the first moment about `m` to 1, leaving `(w_2, w_3, w_4)` free.
//!
//! Second-moment convention: `mu2 = sum_j (j - m)^2 w_j` and `sigma = mu2 / 2`.
//! With this choice `sigma = 0` exactly for closures that are exact on
//! quadratics, and `D_m u = u_x + sigma * dx * u_xx + O(dx^2)`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the consistency residuals of an exactly built row.
pub const CONSISTENCY_TOL: f64 = 1e-10;
/// Tolerance on rows transcribed from four-decimal tables. Rounding alone
/// would stay below 5e-4, but several published rows carry first-moment
/// residuals up to 3.8e-3.
pub const ROUNDED_TOL: f64 = 5e-3;

/// Human-readable statement of the second-moment convention, attached to
/// every residual report.
pub const SIGMA_CONVENTION: &str =
    "sigma_m = 0.5 * sum_j (j-m)^2 w_j (dimensionless; zero for quadratic-exact rows)";

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error("node must be 1 or 2, got {0}")]
    BadNode(u8),
    #[error("node-{node} row is inconsistent: sum w = {r0:e}, first moment - 1 = {r1:e} (tolerance {tol:e})")]
    Inconsistent { node: u8, r0: f64, r1: f64, tol: f64 },
    #[error("CFL number must be positive, got {0}")]
    NonPositiveCfl(f64),
    #[error("wave speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("unknown closure pair `{0}`")]
    UnknownPair(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One closure row at node `m` in `{1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureRow {
    node: u8,
    weights: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    pub mu2: f64,
    pub sigma: f64,
}

impl ClosureRow {
    /// Validated constructor at [`CONSISTENCY_TOL`].
    pub fn new(node: u8, weights: [f64; 5]) -> Result<Self, ClosureError> {
        Self::with_tolerance(node, weights, CONSISTENCY_TOL)
    }

    pub fn with_tolerance(node: u8, weights: [f64; 5], tol: f64) -> Result<Self, ClosureError> {
        let row = Self::unchecked(node, weights)?;
        let (r0, r1) = row.consistency_residuals();
        if r0.abs() > tol || r1.abs() > tol {
            return Err(ClosureError::Inconsistent { node, r0, r1, tol });
        }
        Ok(row)
    }

    /// Builds a row without the consistency check; the node must still be valid.
    pub fn unchecked(node: u8, weights: [f64; 5]) -> Result<Self, ClosureError> {
        if node != 1 && node != 2 {
            return Err(ClosureError::BadNode(node));
        }
        Ok(ClosureRow { node, weights })
    }

    pub fn node(&self) -> u8 {
        self.node
    }

    pub fn weights(&self) -> &[f64; 5] {
        &self.weights
    }

    /// Boundary weight `w_0`.
    pub fn w0(&self) -> f64 {
        self.weights[0]
    }

    fn offset(&self, j: usize) -> f64 {
        j as f64 - self.node as f64
    }

    /// `(sum w_j, sum (j - m) w_j - 1)`.
    pub fn consistency_residuals(&self) -> (f64, f64) {
        let r0 = self.weights.iter().sum();
        let r1 = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| self.offset(j) * w)
            .sum::<f64>()
            - 1.0;
        (r0, r1)
    }

    pub fn second_moment(&self) -> SecondMoment {
        let mu2: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| self.offset(j).powi(2) * w)
            .sum();
        SecondMoment {
            mu2,
            sigma: 0.5 * mu2,
        }
    }

    /// The free parameters `(w_2, w_3, w_4)`.
    pub fn free_parameters(&self) -> [f64; 3] {
        [self.weights[2], self.weights[3], self.weights[4]]
    }

    /// Re-solves `(w_0, w_1)` from this row's free parameters.
    pub fn reprojected(&self) -> Self {
        project_consistent(self.free_parameters(), self.node).expect("node already validated")
    }
}

impl fmt::Display for ClosureRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = &self.weights;
        write!(
            f,
            "node{} [{:.4}, {:.4}, {:.4}, {:.4}, {:.4}]",
            self.node, w[0], w[1], w[2], w[3], w[4]
        )
    }
}

/// Fixes `(w_2, w_3, w_4)` and solves the two consistency equations for
/// `(w_0, w_1)`. The 2x2 system has determinant 1 for both nodes.
pub fn project_consistent(free: [f64; 3], node: u8) -> Result<ClosureRow, ClosureError> {
    if node != 1 && node != 2 {
        return Err(ClosureError::BadNode(node));
    }
    let m = node as f64;
    // w0 + w1 = s0 ; -m w0 + (1 - m) w1 = s1  =>  w1 = s1 + m s0, w0 = s0 - w1
    let s0 = -(free[0] + free[1] + free[2]);
    let s1 = 1.0
        - free
            .iter()
            .enumerate()
            .map(|(k, f)| (k as f64 + 2.0 - m) * f)
            .sum::<f64>();
    let w1 = s1 + m * s0;
    let w0 = s0 - w1;
    Ok(ClosureRow {
        node,
        weights: [w0, w1, free[0], free[1], free[2]],
    })
}

/// Closures for nodes 1 and 2 used together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosurePair {
    name: String,
    node1: ClosureRow,
    node2: ClosureRow,
    /// Weights as transcribed, before re-projection onto the consistency manifold.
    raw: Option<[[f64; 5]; 2]>,
}

impl ClosurePair {
    pub fn new(name: impl Into<String>, node1: ClosureRow, node2: ClosureRow) -> Result<Self, ClosureError> {
        if node1.node != 1 {
            return Err(ClosureError::BadNode(node1.node));
        }
        if node2.node != 2 {
            return Err(ClosureError::BadNode(node2.node));
        }
        for row in [&node1, &node2] {
            let (r0, r1) = row.consistency_residuals();
            if r0.abs() > CONSISTENCY_TOL || r1.abs() > CONSISTENCY_TOL {
                return Err(ClosureError::Inconsistent {
                    node: row.node,
                    r0,
                    r1,
                    tol: CONSISTENCY_TOL,
                });
            }
        }
        Ok(ClosurePair {
            name: name.into(),
            node1,
            node2,
            raw: None,
        })
    }

    /// Accepts rounded weights whose consistency residuals are within
    /// [`ROUNDED_TOL`] and re-projects them exactly; the raw weights are kept.
    pub fn from_rounded(name: impl Into<String>, w1: [f64; 5], w2: [f64; 5]) -> Result<Self, ClosureError> {
        let r1 = ClosureRow::with_tolerance(1, w1, ROUNDED_TOL)?;
        let r2 = ClosureRow::with_tolerance(2, w2, ROUNDED_TOL)?;
        Ok(ClosurePair {
            name: name.into(),
            node1: r1.reprojected(),
            node2: r2.reprojected(),
            raw: Some([w1, w2]),
        })
    }

    /// Pair built from the six free parameters `(w_2, w_3, w_4)` of each node.
    pub fn from_free(name: impl Into<String>, free: &[f64; 6]) -> Self {
        ClosurePair {
            name: name.into(),
            node1: project_consistent([free[0], free[1], free[2]], 1).expect("valid node"),
            node2: project_consistent([free[3], free[4], free[5]], 2).expect("valid node"),
            raw: None,
        }
    }

    pub fn free_parameters(&self) -> [f64; 6] {
        let a = self.node1.free_parameters();
        let b = self.node2.free_parameters();
        [a[0], a[1], a[2], b[0], b[1], b[2]]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node1(&self) -> &ClosureRow {
        &self.node1
    }

    pub fn node2(&self) -> &ClosureRow {
        &self.node2
    }

    pub fn raw(&self) -> Option<&[[f64; 5]; 2]> {
        self.raw.as_ref()
    }

    /// Resolves a built-in name (`ssprk3/standard`, `rk4/acc_only`, ...) or a
    /// stencil file path.
    pub fn resolve(name_or_path: &str) -> Result<Self, ClosureError> {
        match builtin_pair(name_or_path) {
            Some(p) => Ok(p),
            None if Path::new(name_or_path).exists() => Self::load(name_or_path),
            None => Err(ClosureError::UnknownPair(name_or_path.to_string())),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClosureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ClosureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the stencil format: `name <string>`, `node1 <5 reals>`,
    /// `node2 <5 reals>`. Rows are accepted at the rounded-table tolerance and
    /// re-projected.
    pub fn parse(text: &str) -> Result<Self, ClosureError> {
        let mut name = None;
        let mut rows: [Option<[f64; 5]>; 2] = [None, None];
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ClosureError::Parse { line: idx + 1, msg };
            let mut tokens = line.split_whitespace();
            match tokens.next().unwrap_or_default() {
                "name" => {
                    let rest: Vec<&str> = tokens.collect();
                    if rest.is_empty() {
                        return Err(err("missing name".into()));
                    }
                    name = Some(rest.join(" "));
                }
                key @ ("node1" | "node2") => {
                    let vals = tokens
                        .map(|t| t.parse::<f64>().map_err(|_| err(format!("`{t}` is not a number"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    let arr: [f64; 5] = vals
                        .try_into()
                        .map_err(|v: Vec<f64>| err(format!("{key} needs 5 weights, got {}", v.len())))?;
                    rows[if key == "node1" { 0 } else { 1 }] = Some(arr);
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let last = text.lines().count().max(1);
        let missing = |what: &str| ClosureError::Parse {
            line: last,
            msg: format!("missing `{what}`"),
        };
        let name = name.ok_or_else(|| missing("name"))?;
        let w1 = rows[0].ok_or_else(|| missing("node1"))?;
        let w2 = rows[1].ok_or_else(|| missing("node2"))?;
        Self::from_rounded(name, w1, w2)
    }

    /// Stencil-file rendering with round-trip-exact numbers.
    pub fn to_file_string(&self) -> String {
        let fmt_row = |r: &ClosureRow| {
            r.weights
                .iter()
                .map(|w| format!("{w:.17e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "name {}\nnode1 {}\nnode2 {}\n",
            self.name,
            fmt_row(&self.node1),
            fmt_row(&self.node2)
        )
    }
}

impl fmt::Display for ClosurePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}; {}", self.name, self.node1, self.node2)
    }
}

/// Integrator a built-in closure set was designed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMethod {
    Ssprk3,
    Rk4,
}

impl DesignMethod {
    pub fn key(self) -> &'static str {
        match self {
            DesignMethod::Ssprk3 => "ssprk3",
            DesignMethod::Rk4 => "rk4",
        }
    }
}

pub const VARIANTS: [&str; 3] = ["standard", "acc_only", "acc_stab"];

const STANDARD_NODE1: [f64; 5] = [-1.5, 2.0, -0.5, 0.0, 0.0];
const STANDARD_NODE2: [f64; 5] = [0.1667, -1.0, 0.5, 0.3333, 0.0];

fn table_weights(method: DesignMethod, variant: &str) -> Option<([f64; 5], [f64; 5])> {
    let w = match (method, variant) {
        (_, "standard") => (STANDARD_NODE1, STANDARD_NODE2),
        (DesignMethod::Ssprk3, "acc_only") => (
            [-0.3813, -1.0401, 2.8808, -2.1158, 0.6565],
            [1.3259, -4.1180, 2.6053, 0.8400, -0.6533],
        ),
        (DesignMethod::Ssprk3, "acc_stab") => (
            [-1.7107, 1.9061, 0.0468, 0.0274, -0.2695],
            [-1.1578, 1.0039, 1.1578, -1.6957, 0.6917],
        ),
        (DesignMethod::Rk4, "acc_only") => (
            [-2.6469, 5.1706, -1.9271, -2.0702, 1.4735],
            [-0.5606, 0.3582, 0.8251, -1.4795, 0.8569],
        ),
        (DesignMethod::Rk4, "acc_stab") => (
            [0.5836, -1.9300, 0.8126, 0.8300, -0.2963],
            [7.4539, -14.3294, 4.5956, 2.9830, -0.7032],
        ),
        _ => return None,
    };
    Some(w)
}

/// The three published closure sets for an integrator, in the order
/// `standard`, `acc_only`, `acc_stab`.
pub fn builtin_pairs(method: DesignMethod) -> Vec<ClosurePair> {
    VARIANTS
        .iter()
        .map(|v| {
            let (w1, w2) = table_weights(method, v).expect("all variants tabulated");
            ClosurePair::from_rounded(format!("{}/{}", method.key(), v), w1, w2)
                .expect("tabulated weights are consistent to four decimals")
        })
        .collect()
}

/// Looks up `<method>/<variant>`; a bare variant name means `ssprk3`.
pub fn builtin_pair(name: &str) -> Option<ClosurePair> {
    let (method, variant) = match name.split_once('/') {
        Some(("ssprk3", v)) => (DesignMethod::Ssprk3, v),
        Some(("rk4", v)) => (DesignMethod::Rk4, v),
        Some(_) => return None,
        None => (DesignMethod::Ssprk3, name),
    };
    let idx = VARIANTS.iter().position(|v| *v == variant)?;
    builtin_pairs(method).into_iter().nth(idx)
}

pub fn builtin_pair_names() -> Vec<String> {
    ["ssprk3", "rk4"]
        .iter()
        .flat_map(|m| VARIANTS.iter().map(move |v| format!("{m}/{v}")))
        .collect()
}

/// Residuals of the SSP-RK3 cancellation conditions at nodes 1 and 2, with
/// the common `dt` factor divided out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CancellationResidual {
    pub res1: f64,
    pub res2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub cfl: f64,
    pub speed: f64,
    pub sigma_convention: &'static str,
}

/// `res1 = -c s1/l + 1/6 - (2l/3) w0(1)`,
/// `res2 = -c s2/l + 1/6 - (2l/3) w0(2) - (l/3) w0(1)`.
pub fn cancellation_residuals(pair: &ClosurePair, cfl: f64, speed: f64) -> Result<CancellationResidual, ClosureError> {
    check_positive(cfl, speed)?;
    let sigma1 = pair.node1.second_moment().sigma;
    let sigma2 = pair.node2.second_moment().sigma;
    let w01 = pair.node1.w0();
    let w02 = pair.node2.w0();
    let res1 = -speed * sigma1 / cfl + 1.0 / 6.0 - 2.0 * cfl / 3.0 * w01;
    let res2 = -speed * sigma2 / cfl + 1.0 / 6.0 - 2.0 * cfl / 3.0 * w02 - cfl / 3.0 * w01;
    Ok(CancellationResidual {
        res1,
        res2,
        sigma1,
        sigma2,
        cfl,
        speed,
        sigma_convention: SIGMA_CONVENTION,
    })
}

fn check_positive(cfl: f64, speed: f64) -> Result<(), ClosureError> {
    if !(cfl > 0.0) {
        return Err(ClosureError::NonPositiveCfl(cfl));
    }
    if !(speed > 0.0) {
        return Err(ClosureError::NonPositiveSpeed(speed));
    }
    Ok(())
}

/// Moment and boundary-weight targets of the SSP-RK3 design conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ssprk3Targets {
    /// Target for `sum (j-1)^2 w_j` at node 1.
    pub f1: f64,
    /// Target for `w_0` at node 2.
    pub h: f64,
    /// Target for `sum (j-2)^2 w_j` at node 2.
    pub f2: f64,
}

/// `f1 = 1 + (3/l^2)(1/6 - (2l/3) w01)`, `h = (1 + 1/l)/2 + sigma1 c / l`,
/// `f2 = f1 + 3 w01 / l`.
///
/// These are the closed forms as published. They do not zero
/// [`cancellation_residuals`]; use [`solve_cancellation`] for weights that do.
pub fn ssprk3_targets(cfl: f64, sigma1: f64, w01: f64, speed: f64) -> Result<Ssprk3Targets, ClosureError> {
    check_positive(cfl, speed)?;
    let f1 = 1.0 + 3.0 / (cfl * cfl) * (1.0 / 6.0 - 2.0 * cfl / 3.0 * w01);
    let h = 0.5 * (1.0 + 1.0 / cfl) + sigma1 * speed / cfl;
    let f2 = f1 + 3.0 * w01 / cfl;
    Ok(Ssprk3Targets { f1, h, f2 })
}

/// Boundary weights on the SSP-RK3 cancellation family for prescribed
/// second-moment deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CancellationRoot {
    pub w01: f64,
    pub w02: f64,
}

/// Solves `res1 = 0` for `w0(1)`, then `res2 = 0` for `w0(2)`.
pub fn solve_cancellation(cfl: f64, speed: f64, sigma1: f64, sigma2: f64) -> Result<CancellationRoot, ClosureError> {
    check_positive(cfl, speed)?;
    let w01 = (1.0 / 6.0 - speed * sigma1 / cfl) * 3.0 / (2.0 * cfl);
    let w02 = (1.0 / 6.0 - speed * sigma2 / cfl - cfl / 3.0 * w01) * 3.0 / (2.0 * cfl);
    Ok(CancellationRoot { w01, w02 })
}

/// Consistent row at `node` with prescribed `w_0` and second moment `mu2`,
/// choosing `w_4 = 0`.
pub fn row_with_targets(node: u8, w0: f64, mu2: f64) -> Result<ClosureRow, ClosureError> {
    if node != 1 && node != 2 {
        return Err(ClosureError::BadNode(node));
    }
    let m = node as f64;
    // Unknowns w1, w2, w3 (w4 = 0):
    //   w1 + w2 + w3 = -w0
    //   (1-m) w1 + (2-m) w2 + (3-m) w3 = 1 + m w0
    //   (1-m)^2 w1 + (2-m)^2 w2 + (3-m)^2 w3 = mu2 - m^2 w0
    let offs = [1.0 - m, 2.0 - m, 3.0 - m];
    let mat = [
        [1.0, 1.0, 1.0],
        offs,
        [offs[0] * offs[0], offs[1] * offs[1], offs[2] * offs[2]],
    ];
    let rhs = [-w0, 1.0 + m * w0, mu2 - m * m * w0];
    let x = solve3(mat, rhs);
    ClosureRow::new(node, [w0, x[0], x[1], x[2], 0.0])
}

/// Cramer's rule; the Vandermonde matrices used here are well conditioned.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut x = [0.0; 3];
    for (col, xi) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *xi = det(m) / d;
    }
    x
}

/// Pair lying exactly on the SSP-RK3 cancellation family for the given
/// `(cfl, speed, sigma1, sigma2)`.
pub fn cancellation_pair(cfl: f64, speed: f64, sigma1: f64, sigma2: f64) -> Result<ClosurePair, ClosureError> {
    let root = solve_cancellation(cfl, speed, sigma1, sigma2)?;
    let n1 = row_with_targets(1, root.w01, 2.0 * sigma1)?;
    let n2 = row_with_targets(2, root.w02, 2.0 * sigma2)?;
    ClosurePair::new(format!("cancel(l={cfl},s1={sigma1},s2={sigma2})"), n1, n2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_examples() {
        let std1 = ClosureRow::new(1, [-1.5, 2.0, -0.5, 0.0, 0.0]).unwrap();
        assert_eq!(std1.consistency_residuals(), (0.0, 0.0));
        let acc = ClosureRow::unchecked(1, [-0.3813, -1.0401, 2.8808, -2.1158, 0.6565]).unwrap();
        let (r0, r1) = acc.consistency_residuals();
        assert!(r0.abs() <= 2e-4 && r1.abs() <= 2e-4, "{r0} {r1}");
        let zero = ClosureRow::unchecked(1, [0.0; 5]).unwrap();
        assert_eq!(zero.consistency_residuals(), (0.0, -1.0));
        assert!(ClosureRow::new(1, [0.0; 5]).is_err());
        assert!(matches!(ClosureRow::unchecked(3, [0.0; 5]), Err(ClosureError::BadNode(3))));
    }

    #[test]
    fn second_moment_examples() {
        // Offsets -1 and 0: (-1)^2 * (-1) + 0 * 1.
        let two_point = ClosureRow::new(1, [-1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(two_point.second_moment().mu2, -1.0);
        let std1 = ClosureRow::new(1, [-1.5, 2.0, -0.5, 0.0, 0.0]).unwrap();
        assert_eq!(std1.second_moment().mu2, -2.0);
        assert_eq!(std1.second_moment().sigma, -1.0);
        let central = ClosureRow::new(2, [0.0, -0.5, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(central.second_moment().mu2, 0.0);
    }

    #[test]
    fn projection_examples() {
        let r = project_consistent([0.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(r.weights(), &[-1.0, 1.0, 0.0, 0.0, 0.0]);
        let r = project_consistent([-0.5, 0.0, 0.0], 1).unwrap();
        assert_eq!(r.weights(), &[-1.5, 2.0, -0.5, 0.0, 0.0]);
        let r = project_consistent([0.5, 1.0 / 3.0, 0.0], 2).unwrap();
        let expect = [1.0 / 6.0, -1.0, 0.5, 1.0 / 3.0, 0.0];
        for (a, b) in r.weights().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let (r0, r1) = r.consistency_residuals();
        assert!(r0.abs() < 1e-15 && r1.abs() < 1e-15);
        assert!(project_consistent([0.0; 3], 0).is_err());
    }

    #[test]
    fn builtin_tables_transcribed() {
        let acc = builtin_pair("ssprk3/acc_only").unwrap();
        assert_eq!(acc.raw().unwrap()[1], [1.3259, -4.1180, 2.6053, 0.8400, -0.6533]);
        let rk4 = builtin_pair("rk4/acc_stab").unwrap();
        assert_eq!(rk4.raw().unwrap()[1], [7.4539, -14.3294, 4.5956, 2.9830, -0.7032]);
        let std = builtin_pair("ssprk3/standard").unwrap();
        assert_eq!(std.node1().weights(), &[-1.5, 2.0, -0.5, 0.0, 0.0]);
        assert_eq!(builtin_pair("standard").unwrap().name(), "ssprk3/standard");
        assert!(builtin_pair("rk5/standard").is_none());
        assert!(builtin_pair("ssprk3/other").is_none());
    }

    #[test]
    fn builtin_residuals_before_and_after_projection() {
        for method in [DesignMethod::Ssprk3, DesignMethod::Rk4] {
            for pair in builtin_pairs(method) {
                let raw = pair.raw().unwrap();
                for (node, w) in [(1u8, raw[0]), (2, raw[1])] {
                    let (r0, r1) = ClosureRow::unchecked(node, w).unwrap().consistency_residuals();
                    assert!(r0.abs() <= ROUNDED_TOL && r1.abs() <= ROUNDED_TOL, "{}", pair.name());
                }
                for row in [pair.node1(), pair.node2()] {
                    let (r0, r1) = row.consistency_residuals();
                    assert!(r0.abs() <= 1e-13 && r1.abs() <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn published_rows_beyond_rounding() {
        let mut loose = Vec::new();
        for method in [DesignMethod::Ssprk3, DesignMethod::Rk4] {
            for pair in builtin_pairs(method) {
                for (node, w) in [(1u8, pair.raw().unwrap()[0]), (2, pair.raw().unwrap()[1])] {
                    let (r0, r1) = ClosureRow::unchecked(node, w).unwrap().consistency_residuals();
                    if r0.abs().max(r1.abs()) > 5e-4 {
                        loose.push(format!("{}:{node}", pair.name()));
                    }
                }
            }
        }
        assert_eq!(loose, ["ssprk3/acc_stab:1", "ssprk3/acc_stab:2", "rk4/acc_only:2", "rk4/acc_stab:2"]);
    }

    #[test]
    fn residual_formula_examples() {
        // sigma = 0 node-1 row with w0 = -1: the central difference.
        let n1 = ClosureRow::new(1, [-0.5, 0.0, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(n1.second_moment().sigma, 0.0);
        let n1 = row_with_targets(1, -1.0, 0.0).unwrap();
        let pair = ClosurePair::new("t", n1, project_consistent([0.5, 1.0 / 3.0, 0.0], 2).unwrap()).unwrap();
        let res = cancellation_residuals(&pair, 0.25, 1.0).unwrap();
        assert!((res.res1 - 1.0 / 3.0).abs() < 1e-14, "{}", res.res1);
        // sigma = 0 root of res1 is w0 = 1/(4 lambda).
        let root = solve_cancellation(0.25, 1.0, 0.0, 0.0).unwrap();
        assert!((root.w01 - 1.0).abs() < 1e-15);
        assert!(cancellation_residuals(&pair, 0.0, 1.0).is_err());
        assert!(cancellation_residuals(&pair, 0.5, -1.0).is_err());
    }

    #[test]
    fn targets_examples() {
        let t = ssprk3_targets(1.0, 0.0, -1.0, 1.0).unwrap();
        assert!((t.h - 1.0).abs() < 1e-15);
        let t = ssprk3_targets(1.0, 0.3, 0.0, 1.0).unwrap();
        assert_eq!(t.f1, t.f2);
        let small = ssprk3_targets(1e-6, 0.0, 0.0, 1.0).unwrap();
        assert!(small.h > 1e5);
        assert!(ssprk3_targets(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn published_targets_do_not_zero_the_residuals() {
        // With sigma = 0 the published h differs from the root of res2 = 0.
        let cfl = 0.5;
        let t = ssprk3_targets(cfl, 0.0, -1.0, 1.0).unwrap();
        let root = solve_cancellation(cfl, 1.0, 0.0, 0.0).unwrap();
        assert!((t.h - root.w02).abs() > 0.1);
    }

    #[test]
    fn stencil_file_round_trip() {
        let pair = builtin_pair("ssprk3/acc_stab").unwrap();
        let back = ClosurePair::parse(&pair.to_file_string()).unwrap();
        assert_eq!(back.node1(), pair.node1());
        assert_eq!(back.node2(), pair.node2());
        assert!(matches!(
            ClosurePair::parse("name x\nnode1 1 2 3\nnode2 0 0 0 0 0\n"),
            Err(ClosureError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ClosurePair::parse("name x\nnode1 0 0 0 0 0\nnode2 0 0 0 0 0\n"),
            Err(ClosureError::Inconsistent { .. })
        ));
    }
}
