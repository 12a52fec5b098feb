//! Dense real nonsymmetric eigenproblem: Householder reduction to upper
//! Hessenberg form followed by the Francis double-shift QR iteration, with
//! optional back-substitution for eigenvectors. Follows the EISPACK
//! `orthes`/`hqr2` pair as restated in JAMA.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Iterations allowed per eigenvalue before giving up.
pub const MAX_ITER_PER_EIGENVALUE: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square: {rows} rows, row {bad} has {len} entries")]
    NotSquare { rows: usize, bad: usize, len: usize },
    #[error("matrix contains a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("QR iteration did not converge for eigenvalue index {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EigenError> {
        let n = rows.len();
        let mut m = Dense::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(EigenError::NotSquare { rows: n, bad: i, len: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(EigenError::NonFinite(i, j));
                }
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl Index<(usize, usize)> for Dense {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Dense {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit 2-norm eigenvector.
    pub vector: Vec<Complex64>,
}

/// Reduces `h` to upper Hessenberg form in place; returns the accumulated
/// orthogonal transform when `want_v` is set.
fn orthes(h: &mut Dense, want_v: bool) -> Option<Dense> {
    let n = h.n;
    let mut ort = vec![0.0; n];
    let high = n.saturating_sub(1);
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let f = (m..=high).rev().map(|j| ort[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
    if !want_v {
        return None;
    }
    let mut v = Dense::zeros(n);
    for i in 0..n {
        v[(i, i)] = 1.0;
    }
    for m in (1..high).rev() {
        if h[(m, m - 1)] == 0.0 {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h[(i, m - 1)];
        }
        for j in m..=high {
            let g = (m..=high).map(|i| ort[i] * v[(i, j)]).sum::<f64>();
            let g = (g / ort[m]) / h[(m, m - 1)];
            for i in m..=high {
                v[(i, j)] += g * ort[i];
            }
        }
    }
    Some(v)
}

fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Francis QR on Hessenberg `h`. Returns real and imaginary parts. When `v` is
/// given, `h` ends in real Schur form and `v` holds the eigenvectors
/// (real/imaginary parts in adjacent columns for complex pairs).
fn hqr2(h: &mut Dense, mut v: Option<&mut Dense>) -> Result<(Vec<f64>, Vec<f64>), EigenError> {
    let nn = h.n;
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    if nn == 0 {
        return Ok((d, e));
    }
    let want_v = v.is_some();
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z): (f64, f64, f64, f64, f64);
    let (mut w, mut x, mut y): (f64, f64, f64);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut iter = 0usize;
    // Lowest row touched by the active window; column sweeps start here when
    // only eigenvalues are wanted.
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        let row_end = if want_v { nn } else { nu + 1 };
        let col_start = if want_v { 0 } else { l };

        if l == nu {
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                if want_v {
                    x = h[(nu, nu - 1)];
                    s = x.abs() + z.abs();
                    p = x / s;
                    q = z / s;
                    r = (p * p + q * q).sqrt();
                    p /= r;
                    q /= r;
                    for j in nu - 1..nn {
                        z = h[(nu - 1, j)];
                        h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                        h[(nu, j)] = q * h[(nu, j)] - p * z;
                    }
                    for i in 0..=nu {
                        z = h[(i, nu - 1)];
                        h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                        h[(i, nu)] = q * h[(i, nu)] - p * z;
                    }
                    let vm = v.as_deref_mut().unwrap();
                    for i in 0..nn {
                        z = vm[(i, nu - 1)];
                        vm[(i, nu - 1)] = q * z + p * vm[(i, nu)];
                        vm[(i, nu)] = q * vm[(i, nu)] - p * z;
                    }
                }
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > MAX_ITER_PER_EIGENVALUE {
                return Err(EigenError::NoConvergence { index: nu, iterations: iter - 1 });
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            let mut xk = 0.0;
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk == 0.0 {
                        continue;
                    }
                    p /= xk;
                    q /= xk;
                    r /= xk;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * xk;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                let xx = p / s;
                let yy = q / s;
                let zz = r / s;
                q /= p;
                r /= p;
                for j in k..row_end {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * zz;
                    }
                    h[(k, j)] -= pp * xx;
                    h[(k + 1, j)] -= pp * yy;
                }
                for i in col_start..=nu.min(k + 3) {
                    let mut pp = xx * h[(i, k)] + yy * h[(i, k + 1)];
                    if notlast {
                        pp += zz * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k)] -= pp;
                    h[(i, k + 1)] -= pp * q;
                }
                if let Some(vm) = v.as_deref_mut() {
                    for i in 0..nn {
                        let mut pp = xx * vm[(i, k)] + yy * vm[(i, k + 1)];
                        if notlast {
                            pp += zz * vm[(i, k + 2)];
                            vm[(i, k + 2)] -= pp * r;
                        }
                        vm[(i, k)] -= pp;
                        vm[(i, k + 1)] -= pp * q;
                    }
                }
            }
        }
    }

    let Some(vm) = v else {
        return Ok((d, e));
    };
    if norm == 0.0 {
        return Ok((d, e));
    }
    back_substitute(h, &d, &e, norm);
    for j in (0..nn).rev() {
        for i in 0..nn {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += vm[(i, k)] * h[(k, j)];
            }
            vm[(i, j)] = acc;
        }
    }
    Ok((d, e))
}

/// Eigenvectors of the quasi-triangular Schur factor, stored in place of `h`.
fn back_substitute(h: &mut Dense, d: &[f64], e: &[f64], norm: f64) {
    let nn = h.n;
    let eps = f64::EPSILON;
    for n in (0..nn).rev() {
        let p = d[n];
        let q = e[n];
        let (mut z, mut r, mut s) = (0.0f64, 0.0f64, 0.0f64);
        if q == 0.0 {
            let mut l = n;
            h[(n, n)] = 1.0;
            for i in (0..n).rev() {
                let w = h[(i, i)] - p;
                let rr: f64 = (l..=n).map(|j| h[(i, j)] * h[(j, n)]).sum();
                if e[i] < 0.0 {
                    z = w;
                    s = rr;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        h[(i, n)] = if w != 0.0 { -rr / w } else { -rr / (eps * norm) };
                    } else {
                        let x = h[(i, i + 1)];
                        let y = h[(i + 1, i)];
                        let qq = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        let t = (x * s - z * rr) / qq;
                        h[(i, n)] = t;
                        h[(i + 1, n)] = if x.abs() > z.abs() { (-rr - w * t) / x } else { (-s - y * t) / z };
                    }
                    let t = h[(i, n)].abs();
                    if (eps * t) * t > 1.0 {
                        for j in i..=n {
                            h[(j, n)] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            let mut l = n - 1;
            if h[(n, n - 1)].abs() > h[(n - 1, n)].abs() {
                h[(n - 1, n - 1)] = q / h[(n, n - 1)];
                h[(n - 1, n)] = -(h[(n, n)] - p) / h[(n, n - 1)];
            } else {
                let (cr, ci) = cdiv(0.0, -h[(n - 1, n)], h[(n - 1, n - 1)] - p, q);
                h[(n - 1, n - 1)] = cr;
                h[(n - 1, n)] = ci;
            }
            h[(n, n - 1)] = 0.0;
            h[(n, n)] = 1.0;
            for i in (0..n.saturating_sub(1)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h[(i, j)] * h[(j, n - 1)];
                    sa += h[(i, j)] * h[(j, n)];
                }
                let w = h[(i, i)] - p;
                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[(i, n - 1)] = cr;
                        h[(i, n)] = ci;
                    } else {
                        let x = h[(i, i + 1)];
                        let y = h[(i + 1, i)];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = eps * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) = cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[(i, n - 1)] = cr;
                        h[(i, n)] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[(i + 1, n - 1)] = (-ra - w * h[(i, n - 1)] + q * h[(i, n)]) / x;
                            h[(i + 1, n)] = (-sa - w * h[(i, n)] - q * h[(i, n - 1)]) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * h[(i, n - 1)], -s - y * h[(i, n)], z, q);
                            h[(i + 1, n - 1)] = cr;
                            h[(i + 1, n)] = ci;
                        }
                    }
                    let t = h[(i, n - 1)].abs().max(h[(i, n)].abs());
                    if (eps * t) * t > 1.0 {
                        for j in i..=n {
                            h[(j, n - 1)] /= t;
                            h[(j, n)] /= t;
                        }
                    }
                }
            }
        }
    }
}

/// All eigenvalues of `a`, unordered.
pub fn eigenvalues(a: &Dense) -> Result<Vec<Complex64>, EigenError> {
    let mut h = a.clone();
    orthes(&mut h, false);
    let (d, e) = hqr2(&mut h, None)?;
    Ok(d.into_iter().zip(e).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Eigenvalues with unit-norm right eigenvectors.
pub fn eigenpairs(a: &Dense) -> Result<Vec<EigenPair>, EigenError> {
    let n = a.size();
    let mut h = a.clone();
    let mut v = orthes(&mut h, true).expect("transform requested");
    let (d, e) = hqr2(&mut h, Some(&mut v))?;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        if e[j] == 0.0 {
            let vec: Vec<Complex64> = (0..n).map(|i| Complex64::new(v[(i, j)], 0.0)).collect();
            out.push(EigenPair { value: Complex64::new(d[j], 0.0), vector: normalize(vec) });
            j += 1;
        } else {
            let re: Vec<f64> = (0..n).map(|i| v[(i, j)]).collect();
            let im: Vec<f64> = (0..n).map(|i| v[(i, j + 1)]).collect();
            let plus: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
            let minus: Vec<Complex64> = plus.iter().map(|c| c.conj()).collect();
            out.push(EigenPair { value: Complex64::new(d[j], e[j]), vector: normalize(plus) });
            out.push(EigenPair { value: Complex64::new(d[j + 1], e[j + 1]), vector: normalize(minus) });
            j += 2;
        }
    }
    Ok(out)
}

fn normalize(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
    v
}

/// `||A v - lambda v||_2` for a computed pair.
pub fn residual(a: &Dense, pair: &EigenPair) -> f64 {
    let n = a.size();
    (0..n)
        .map(|i| {
            let av: Complex64 = (0..n).map(|j| pair.vector[j] * a[(i, j)]).sum();
            (av - pair.value * pair.vector[i]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Gershgorin row discs `(center, radius)`.
pub fn gershgorin_discs(a: &Dense) -> Vec<(f64, f64)> {
    let n = a.size();
    (0..n)
        .map(|i| {
            let radius = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            (a[(i, i)], radius)
        })
        .collect()
}

/// Whether `z` lies in the union of the discs, allowing `slack` for rounding.
pub fn in_disc_union(discs: &[(f64, f64)], z: Complex64, slack: f64) -> bool {
    discs
        .iter()
        .any(|&(c, r)| (z - Complex64::new(c, 0.0)).norm() <= r + slack)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_and_rotation() {
        let a = Dense::from_rows(&[vec![3.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let ev = sorted(eigenvalues(&a).unwrap());
        assert_eq!(ev, vec![Complex64::new(-1.0, 0.0), Complex64::new(3.0, 0.0)]);
        let rot = Dense::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let ev = sorted(eigenvalues(&rot).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x-1)(x-2)(x-3)(x^2+1) = x^5 - 6x^4 + 12x^3 - 12x^2 + 11x - 6
        let coeffs = [-6.0, 11.0, -12.0, 12.0, -6.0];
        let n = 5;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 1..n {
            rows[i][i - 1] = 1.0;
        }
        for i in 0..n {
            rows[i][n - 1] = -coeffs[i];
        }
        let a = Dense::from_rows(&rows).unwrap();
        let ev = sorted(eigenvalues(&a).unwrap());
        let expect = [(0.0, -1.0), (0.0, 1.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)];
        for (got, (re, im)) in ev.iter().zip(expect) {
            assert!((got - Complex64::new(re, im)).norm() < 1e-9, "{got}");
        }
        for pair in eigenpairs(&a).unwrap() {
            assert!(residual(&a, &pair) <= 1e-8 * a.frobenius());
        }
    }

    #[test]
    fn vectors_agree_with_values_only_path() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let n = 40;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
        let a = Dense::from_rows(&rows).unwrap();
        let fast = sorted(eigenvalues(&a).unwrap());
        let pairs = eigenpairs(&a).unwrap();
        let slow = sorted(pairs.iter().map(|p| p.value).collect());
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).norm() < 1e-10, "{f} {s}");
        }
        let fro = a.frobenius();
        for p in &pairs {
            assert!(residual(&a, p) <= 1e-8 * fro);
        }
        let discs = gershgorin_discs(&a);
        assert!(fast.iter().all(|&z| in_disc_union(&discs, z, 1e-10 * fro)));
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let sum: Complex64 = fast.iter().sum();
        assert!((sum.re - trace).abs() < 1e-10 && sum.im.abs() < 1e-10);
    }

    #[test]
    fn bad_input_rejected() {
        assert!(matches!(
            Dense::from_rows(&[vec![1.0, 2.0], vec![1.0]]),
            Err(EigenError::NotSquare { .. })
        ));
        assert_eq!(
            Dense::from_rows(&[vec![f64::NAN]]),
            Err(EigenError::NonFinite(0, 0))
        );
        assert!(eigenvalues(&Dense::zeros(0)).unwrap().is_empty());
    }

    #[test]
    fn jordan_block_residual() {
        let a = Dense::from_rows(&[vec![2.0, 1.0, 0.0], vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 2.0]]).unwrap();
        for p in eigenpairs(&a).unwrap() {
            assert!((p.value - Complex64::new(2.0, 0.0)).norm() < 1e-5);
            assert!(residual(&a, &p) <= 1e-8 * a.frobenius());
        }
    }
}
