//! Explicit Runge-Kutta tableaux and the boundary error-pathway scalars.
//!
//! A tableau is held in floating point for marching, and additionally as exact
//! rationals when every entry in its source was written as an integer or a
//! fraction. The scalars `P`, `Q`, `R`, `S` weight the quadrature defect, the
//! direct stage-boundary mismatch, and the one- and two-hop recursive
//! contamination of that mismatch. `R` decides whether a purely spatial
//! closure can cancel the mismatch, so it is computed exactly whenever possible.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

/// Tolerance on `sum(b) = 1` and on the order conditions for float tableaux.
pub const FLOAT_TOL: f64 = 1e-12;

const SSPRK3_SRC: &str = include_str!("../data/tableaux/ssprk3.tab");
const RK4_SRC: &str = include_str!("../data/tableaux/rk4.tab");
const EULER_SRC: &str = include_str!("../data/tableaux/euler.tab");
const HEUN_SRC: &str = include_str!("../data/tableaux/heun.tab");

/// Names accepted by [`Tableau::builtin`].
pub const BUILTIN_TABLEAUX: [&str; 4] = ["ssprk3", "rk4", "euler", "heun"];

#[derive(Debug, Error)]
pub enum TableauError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("tableau is not explicit: a[{row}][{col}] = {value} must vanish")]
    NotExplicit { row: usize, col: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    Inconsistent { sum: f64 },
    #[error("tableau shape mismatch: {0}")]
    Shape(String),
    #[error("unknown built-in tableau `{0}`")]
    UnknownBuiltin(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct ExactParts {
    a: Vec<Vec<BigRational>>,
    b: Vec<BigRational>,
    c: Vec<BigRational>,
}

/// Explicit `s`-stage Butcher tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    name: String,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    exact: Option<ExactParts>,
}

/// Error-pathway scalars of a tableau.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableauScalars {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    /// Exact values as `p/q` strings, present for rational tableaux.
    pub exact: Option<ExactScalars>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactScalars {
    #[serde(serialize_with = "ser_ratio")]
    pub p: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub q: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub r: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub s: BigRational,
}

fn ser_ratio<S: serde::Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Minimal arithmetic needed by the tableau sums; implemented for `f64` and
/// `BigRational` so the same code yields exact and float results.
trait Field:
    Clone
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn near(&self, other: &Self) -> bool;
}

impl Field for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn near(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOL
    }
}

impl Field for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn near(&self, other: &Self) -> bool {
        self == other
    }
}

fn dot<T: Field>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

/// `A v` for strictly lower-triangular `A`.
fn lower_matvec<T: Field>(a: &[Vec<T>], v: &[T]) -> Vec<T> {
    a.iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .take(k)
                .zip(v)
                .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
        })
        .collect()
}

fn scalars_generic<T: Field>(a: &[Vec<T>], b: &[T], c: &[T]) -> [T; 4] {
    let half = T::from_ratio(1, 2);
    let p = half.clone() - dot(b, c);
    let c2: Vec<T> = c.iter().map(|x| x.clone() * x.clone()).collect();
    let q = half * dot(b, &c2);
    // R = sum_k b_k sum_{j<k} a_kj c_j ; S = sum_k b_k sum_{j<k} a_kj sum_{l<j} a_jl c_l
    let mut r = T::zero();
    let mut s = T::zero();
    for k in 0..b.len() {
        for j in 0..k {
            r = r + b[k].clone() * a[k][j].clone() * c[j].clone();
            for l in 0..j {
                s = s + b[k].clone() * a[k][j].clone() * a[j][l].clone() * c[l].clone();
            }
        }
    }
    [p, q, r, s]
}

/// Largest `p <= 4` for which every rooted-tree condition up to order `p` holds.
fn order_generic<T: Field>(a: &[Vec<T>], b: &[T], c: &[T]) -> u32 {
    let ones = vec![T::one(); b.len()];
    let sq = |v: &[T]| -> Vec<T> { v.iter().map(|x| x.clone() * x.clone()).collect() };
    let mul = |u: &[T], v: &[T]| -> Vec<T> {
        u.iter().zip(v).map(|(x, y)| x.clone() * y.clone()).collect()
    };
    let frac = |n, d| T::from_ratio(n, d);
    let c2 = sq(c);
    let c3 = mul(&c2, c);
    let ac = lower_matvec(a, c);
    let ac2 = lower_matvec(a, &c2);
    let aac = lower_matvec(a, &ac);

    let levels: [Vec<(T, T)>; 4] = [
        vec![(dot(b, &ones), frac(1, 1))],
        vec![(dot(b, c), frac(1, 2))],
        vec![(dot(b, &c2), frac(1, 3)), (dot(b, &ac), frac(1, 6))],
        vec![
            (dot(b, &c3), frac(1, 4)),
            (dot(b, &mul(c, &ac)), frac(1, 8)),
            (dot(b, &ac2), frac(1, 12)),
            (dot(b, &aac), frac(1, 24)),
        ],
    ];
    let mut order = 0;
    for level in &levels {
        if level.iter().all(|(lhs, rhs)| lhs.near(rhs)) {
            order += 1;
        } else {
            break;
        }
    }
    order
}

impl Tableau {
    /// Builds a float tableau. `a` must be `s x s` (rows may be shorter; missing
    /// entries are zero).
    pub fn from_f64(
        name: impl Into<String>,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self, TableauError> {
        let a = pad_rows(a, b.len(), 0.0)?;
        let t = Tableau {
            name: name.into(),
            a,
            b,
            c,
            exact: None,
        };
        t.validate()?;
        Ok(t)
    }

    /// Builds a tableau from exact rationals; float copies are derived.
    pub fn from_rationals(
        name: impl Into<String>,
        a: Vec<Vec<BigRational>>,
        b: Vec<BigRational>,
        c: Vec<BigRational>,
    ) -> Result<Self, TableauError> {
        let a = pad_rows(a, b.len(), BigRational::zero())?;
        let to_f = |v: &BigRational| v.to_f64().unwrap_or(f64::NAN);
        for (row, r) in a.iter().enumerate() {
            for (col, v) in r.iter().enumerate() {
                if col >= row && !v.is_zero() {
                    return Err(TableauError::NotExplicit {
                        row: row + 1,
                        col: col + 1,
                        value: to_f(v),
                    });
                }
            }
        }
        let sum: BigRational = b.iter().fold(BigRational::zero(), |acc, x| acc + x);
        if !sum.is_one() {
            return Err(TableauError::Inconsistent { sum: to_f(&sum) });
        }
        let t = Tableau {
            name: name.into(),
            a: a.iter().map(|r| r.iter().map(to_f).collect()).collect(),
            b: b.iter().map(to_f).collect(),
            c: c.iter().map(to_f).collect(),
            exact: Some(ExactParts { a, b, c }),
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), TableauError> {
        let s = self.b.len();
        if s == 0 {
            return Err(TableauError::Shape("at least one stage required".into()));
        }
        if self.c.len() != s {
            return Err(TableauError::Shape(format!(
                "c has {} entries, b has {s}",
                self.c.len()
            )));
        }
        for (row, r) in self.a.iter().enumerate() {
            for (col, &v) in r.iter().enumerate() {
                if col >= row && v != 0.0 {
                    return Err(TableauError::NotExplicit {
                        row: row + 1,
                        col: col + 1,
                        value: v,
                    });
                }
            }
        }
        let sum: f64 = self.b.iter().sum();
        if (sum - 1.0).abs() > FLOAT_TOL {
            return Err(TableauError::Inconsistent { sum });
        }
        Ok(())
    }

    pub fn builtin(name: &str) -> Result<Self, TableauError> {
        let src = match name {
            "ssprk3" => SSPRK3_SRC,
            "rk4" => RK4_SRC,
            "euler" => EULER_SRC,
            "heun" => HEUN_SRC,
            other => return Err(TableauError::UnknownBuiltin(other.to_string())),
        };
        Self::parse(src)
    }

    /// Shu-Osher three-stage, third-order SSP method.
    pub fn ssprk3() -> Self {
        Self::builtin("ssprk3").expect("built-in tableau is valid")
    }

    /// Classical four-stage, fourth-order method.
    pub fn rk4() -> Self {
        Self::builtin("rk4").expect("built-in tableau is valid")
    }

    pub fn forward_euler() -> Self {
        Self::builtin("euler").expect("built-in tableau is valid")
    }

    /// Heun's two-stage second-order method (`R = 0`).
    pub fn heun() -> Self {
        Self::builtin("heun").expect("built-in tableau is valid")
    }

    /// Resolves a built-in name or, failing that, reads a tableau file.
    pub fn resolve(name_or_path: &str) -> Result<Self, TableauError> {
        match Self::builtin(name_or_path) {
            Ok(t) => Ok(t),
            Err(TableauError::UnknownBuiltin(_)) => Self::load(name_or_path),
            Err(e) => Err(e),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableauError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TableauError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the line-oriented tableau format:
    ///
    /// ```text
    /// name ssprk3
    /// stages 3
    /// c 0 1 1/2
    /// b 1/6 1/6 2/3
    /// A
    /// 0
    /// 1
    /// 1/4 1/4
    /// ```
    ///
    /// Blank lines and `#` comments are ignored. If every entry is an integer
    /// or a fraction the tableau is exact; any decimal makes it a float tableau.
    pub fn parse(text: &str) -> Result<Self, TableauError> {
        let mut name = None;
        let mut stages: Option<usize> = None;
        let mut b = None;
        let mut c = None;
        let mut rows: Vec<Vec<Number>> = Vec::new();
        let mut in_matrix = false;
        let mut last_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| TableauError::Parse { line: line_no, msg };
            let mut tokens = line.split_whitespace();
            let head = tokens.next().unwrap_or_default();
            if in_matrix {
                let s = stages.unwrap_or(0);
                if rows.len() < s {
                    let row = line
                        .split_whitespace()
                        .map(Number::parse)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(err)?;
                    if row.len() > s {
                        return Err(TableauError::Parse {
                            line: line_no,
                            msg: format!("row has {} entries, expected at most {s}", row.len()),
                        });
                    }
                    rows.push(row);
                    continue;
                }
                in_matrix = false;
            }
            match head {
                "name" => {
                    let rest: Vec<&str> = tokens.collect();
                    if rest.is_empty() {
                        return Err(err("missing name".into()));
                    }
                    name = Some(rest.join(" "));
                }
                "stages" => {
                    let v = tokens
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .filter(|&s| s >= 1)
                        .ok_or_else(|| err("stages must be a positive integer".into()))?;
                    stages = Some(v);
                }
                "b" | "c" => {
                    let vals = tokens
                        .map(Number::parse)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(err)?;
                    if head == "b" {
                        b = Some(vals);
                    } else {
                        c = Some(vals);
                    }
                }
                "A" => {
                    if stages.is_none() {
                        return Err(err("`stages` must precede `A`".into()));
                    }
                    if tokens.next().is_some() {
                        return Err(err("`A` takes its rows on the following lines".into()));
                    }
                    in_matrix = true;
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }

        let missing = |what: &str| TableauError::Parse {
            line: last_line,
            msg: format!("missing `{what}`"),
        };
        let name = name.ok_or_else(|| missing("name"))?;
        let s = stages.ok_or_else(|| missing("stages"))?;
        let b = b.ok_or_else(|| missing("b"))?;
        let c = c.ok_or_else(|| missing("c"))?;
        if rows.len() != s {
            return Err(TableauError::Parse {
                line: last_line,
                msg: format!("A has {} rows, expected {s}", rows.len()),
            });
        }
        if b.len() != s || c.len() != s {
            return Err(TableauError::Shape(format!(
                "stages = {s} but b has {} and c has {} entries",
                b.len(),
                c.len()
            )));
        }

        let all_exact = b
            .iter()
            .chain(&c)
            .chain(rows.iter().flatten())
            .all(|n| matches!(n, Number::Exact(_)));
        if all_exact {
            let ex = |v: &Vec<Number>| v.iter().map(Number::exact).collect::<Vec<_>>();
            Self::from_rationals(name, rows.iter().map(ex).collect(), ex(&b), ex(&c))
        } else {
            let fl = |v: &Vec<Number>| v.iter().map(Number::value).collect::<Vec<_>>();
            Self::from_f64(name, rows.iter().map(fl).collect(), fl(&b), fl(&c))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `P = 1/2 - sum b c`, `Q = 1/2 sum b c^2`, `R = b^T A c`, `S = b^T A A c`.
    pub fn boundary_scalars(&self) -> TableauScalars {
        let [p, q, r, s] = scalars_generic(&self.a, &self.b, &self.c);
        let exact = self.exact.as_ref().map(|e| {
            let [p, q, r, s] = scalars_generic(&e.a, &e.b, &e.c);
            ExactScalars { p, q, r, s }
        });
        match exact {
            Some(ex) => TableauScalars {
                p: ex.p.to_f64().unwrap_or(p),
                q: ex.q.to_f64().unwrap_or(q),
                r: ex.r.to_f64().unwrap_or(r),
                s: ex.s.to_f64().unwrap_or(s),
                exact: Some(ex),
            },
            None => TableauScalars {
                p,
                q,
                r,
                s,
                exact: None,
            },
        }
    }

    pub fn classical_order(&self) -> u32 {
        match &self.exact {
            Some(e) => order_generic(&e.a, &e.b, &e.c),
            None => order_generic(&self.a, &self.b, &self.c),
        }
    }

    /// Whether a purely spatial closure fix exists, i.e. `R != 0`.
    ///
    /// Rational tableaux are decided exactly and ignore `tol`; float tableaux
    /// use `|R| > tol` (default [`FLOAT_TOL`]).
    pub fn solvable(&self, tol: Option<f64>) -> bool {
        let scalars = self.boundary_scalars();
        match scalars.exact {
            Some(ex) => !ex.r.is_zero(),
            None => scalars.r.abs() > tol.unwrap_or(FLOAT_TOL),
        }
    }

    /// `R(z) = 1 + z b^T (I - zA)^{-1} 1`, by forward substitution on the unit
    /// lower-triangular system.
    pub fn stability_function(&self, z: Complex64) -> Complex64 {
        let s = self.stages();
        let mut y = vec![Complex64::new(0.0, 0.0); s];
        for k in 0..s {
            let mut acc = Complex64::new(1.0, 0.0);
            for j in 0..k {
                acc += z * self.a[k][j] * y[j];
            }
            y[k] = acc;
        }
        let by: Complex64 = self.b.iter().zip(&y).map(|(b, y)| *b * y).sum();
        1.0 + z * by
    }

    /// Coefficients `[1, b^T 1, b^T A 1, ..., b^T A^{s-1} 1]` of the stability
    /// polynomial in ascending powers of `z`.
    pub fn stability_polynomial(&self) -> Vec<f64> {
        let s = self.stages();
        let mut coeffs = Vec::with_capacity(s + 1);
        coeffs.push(1.0);
        let mut v = vec![1.0; s];
        for _ in 0..s {
            coeffs.push(self.b.iter().zip(&v).map(|(b, x)| b * x).sum());
            v = lower_matvec(&self.a, &v);
        }
        coeffs
    }

    /// Renders the tableau in the file format accepted by [`Tableau::parse`].
    pub fn to_file_string(&self) -> String {
        let fmt_vec = |v: Vec<String>| v.join(" ");
        let (a, b, c): (Vec<Vec<String>>, Vec<String>, Vec<String>) = match &self.exact {
            Some(e) => (
                e.a.iter()
                    .map(|r| r.iter().map(|x| x.to_string()).collect())
                    .collect(),
                e.b.iter().map(|x| x.to_string()).collect(),
                e.c.iter().map(|x| x.to_string()).collect(),
            ),
            None => (
                self.a
                    .iter()
                    .map(|r| r.iter().map(|x| format!("{x:?}")).collect())
                    .collect(),
                self.b.iter().map(|x| format!("{x:?}")).collect(),
                self.c.iter().map(|x| format!("{x:?}")).collect(),
            ),
        };
        let mut out = format!(
            "name {}\nstages {}\nc {}\nb {}\nA\n",
            self.name,
            self.stages(),
            fmt_vec(c),
            fmt_vec(b)
        );
        for row in a {
            out.push_str(&fmt_vec(row));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} stages)", self.name, self.stages())
    }
}

fn pad_rows<T: Clone>(a: Vec<Vec<T>>, s: usize, zero: T) -> Result<Vec<Vec<T>>, TableauError> {
    if a.len() != s {
        return Err(TableauError::Shape(format!(
            "A has {} rows, expected {s}",
            a.len()
        )));
    }
    a.into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            if row.len() > s {
                return Err(TableauError::Shape(format!(
                    "row {} of A has {} entries",
                    i + 1,
                    row.len()
                )));
            }
            row.resize(s, zero.clone());
            Ok(row)
        })
        .collect()
}

/// A parsed numeric token: exact when written as an integer or `p/q`.
#[derive(Debug, Clone)]
enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    fn parse(tok: &str) -> Result<Self, String> {
        if let Some((p, q)) = tok.split_once('/') {
            let p: BigInt = p
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{tok}`"))?;
            let q: BigInt = q
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{tok}`"))?;
            if q.is_zero() {
                return Err(format!("zero denominator in `{tok}`"));
            }
            return Ok(Number::Exact(BigRational::new(p, q)));
        }
        if let Ok(i) = tok.parse::<BigInt>() {
            return Ok(Number::Exact(BigRational::from_integer(i)));
        }
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Number::Float)
            .ok_or_else(|| format!("`{tok}` is not a number"))
    }

    fn exact(&self) -> BigRational {
        match self {
            Number::Exact(r) => r.clone(),
            Number::Float(_) => unreachable!("only called when every entry is exact"),
        }
    }

    fn value(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(v) => *v,
        }
    }
}

/// Convenience for tests and callers building exact tableaux by hand.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssprk3_scalars_are_exact() {
        let sc = Tableau::ssprk3().boundary_scalars();
        let ex = sc.exact.expect("ssprk3 is rational");
        assert_eq!(ex.p, ratio(0, 1));
        assert_eq!(ex.q, ratio(1, 6));
        assert_eq!(ex.r, ratio(1, 6));
        assert_eq!(ex.s, ratio(0, 1));
    }

    #[test]
    fn rk4_scalars() {
        let ex = Tableau::rk4().boundary_scalars().exact.unwrap();
        assert_eq!(ex.p, ratio(0, 1));
        assert_eq!(ex.q, ratio(1, 6));
        assert_eq!(ex.r, ratio(1, 6));
        assert_eq!(ex.s, ratio(1, 24));
    }

    #[test]
    fn forward_euler_scalars_and_order() {
        let t = Tableau::forward_euler();
        let ex = t.boundary_scalars().exact.unwrap();
        assert_eq!(ex.p, ratio(1, 2));
        assert!(ex.q.is_zero() && ex.r.is_zero() && ex.s.is_zero());
        assert_eq!(t.classical_order(), 1);
        assert!(!t.solvable(None));
    }

    #[test]
    fn classical_orders() {
        assert_eq!(Tableau::ssprk3().classical_order(), 3);
        assert_eq!(Tableau::rk4().classical_order(), 4);
        assert_eq!(Tableau::heun().classical_order(), 2);
    }

    #[test]
    fn solvability() {
        assert!(Tableau::ssprk3().solvable(None));
        assert!(Tableau::rk4().solvable(None));
        // Two-stage methods have no one-hop pathway.
        assert!(!Tableau::heun().solvable(None));
    }

    #[test]
    fn stability_function_values() {
        let ssp = Tableau::ssprk3();
        let r0 = ssp.stability_function(Complex64::new(0.0, 0.0));
        assert!((r0 - 1.0).norm() < 1e-15);
        let r = ssp.stability_function(Complex64::new(-2.0, 0.0));
        assert!((r.re + 1.0 / 3.0).abs() < 1e-14 && r.im.abs() < 1e-15);
        let r = Tableau::rk4().stability_function(Complex64::new(-1.0, 0.0));
        assert!((r.re - 0.375).abs() < 1e-14);
    }

    #[test]
    fn rejects_implicit_entry() {
        let src = "name bad\nstages 2\nc 0 1\nb 1/2 1/2\nA\n0 1\n1\n";
        match Tableau::parse(src) {
            Err(TableauError::NotExplicit { row: 1, col: 2, .. }) => {}
            other => panic!("expected explicitness error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_inconsistent_weights() {
        let src = "name bad\nstages 2\nc 0 1\nb 1/2 1/3\nA\n0\n1\n";
        assert!(matches!(
            Tableau::parse(src),
            Err(TableauError::Inconsistent { .. })
        ));
        let src = "name bad\nstages 2\nc 0 1\nb 0.5 0.4\nA\n0\n1\n";
        assert!(matches!(
            Tableau::parse(src),
            Err(TableauError::Inconsistent { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let src = "name x\nstages 1\nc zero\nb 1\nA\n0\n";
        match Tableau::parse(src) {
            Err(TableauError::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Tableau::parse("name x\nstages 2\nc 0 1\nb 1/2 1/2\nA\n0\n"),
            Err(TableauError::Parse { .. })
        ));
    }

    #[test]
    fn decimal_entries_give_float_tableau() {
        let src = "name ssp-dec\nstages 3\nc 0 1 0.5\nb 0.1666666666666667 0.1666666666666667 0.6666666666666666\nA\n0\n1\n0.25 0.25\n";
        let t = Tableau::parse(src).unwrap();
        assert!(!t.is_exact());
        assert_eq!(t.classical_order(), 3);
        let sc = t.boundary_scalars();
        assert!((sc.r - 1.0 / 6.0).abs() < 1e-15);
        assert!(t.solvable(None));
    }

    #[test]
    fn file_string_round_trips() {
        for name in BUILTIN_TABLEAUX {
            let t = Tableau::builtin(name).unwrap();
            let back = Tableau::parse(&t.to_file_string()).unwrap();
            assert_eq!(t, back);
        }
    }
}
