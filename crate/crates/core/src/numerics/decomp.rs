//! Dense factorizations for small-to-moderate complex matrices.
//!
//! Everything here is built on three primitives: complex Householder
//! reflections, two-sided / one-sided complex Jacobi rotations, and a
//! single-shift Hessenberg QR iteration. Matrix sizes in this crate are at
//! most a few hundred, where Jacobi methods are accurate and fast enough.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use super::ComplexMatrix;
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const MAX_SWEEPS: usize = 80;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, aligned with `values`.
    pub vectors: ComplexMatrix,
}

/// Thin singular value decomposition `m = u * diag(s) * vᴴ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x min(rows, cols)`, orthonormal columns.
    pub u: ComplexMatrix,
    /// Descending, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    /// `cols x min(rows, cols)`, orthonormal columns.
    pub v: ComplexMatrix,
}

// Rotation (c, s, phase) diagonalizing the Hermitian 2x2 block [[app, apq], [conj(apq), aqq]].
// With w = phase (unit modulus) the unitary acting on coordinates (p, q) is
//   J = [[c, s], [-s * conj(w), c * conj(w)]].
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    let w = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + libm::sqrt(theta * theta + 1.0));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    (c, t * c, w)
}

#[inline]
fn rotate_pair(x: &mut C64, y: &mut C64, c: f64, s: f64, wc: C64) {
    // [x', y'] = [x, y] * J  for a row vector.
    let (a, b) = (*x, *y);
    *x = a * c - b * wc * s;
    *y = a * s + b * wc * c;
}

/// Eigenvalues and eigenvectors of a Hermitian matrix by cyclic complex Jacobi.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigDecomposition> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.ensure_finite()?;
    let defect = m.hermitian_defect();
    if defect > 1e-8 * (1.0 + m.norm_max()) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.norm_fro();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if mag <= f64::EPSILON * 0.5 * libm::sqrt(app.abs() * aqq.abs())
                    || mag <= 1e-300 * scale
                {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                rotated = true;
                let (c, s, w) = jacobi_rotation(app, aqq, apq);
                let wc = w.conj();
                for i in 0..n {
                    let (mut x, mut y) = (a[(i, p)], a[(i, q)]);
                    rotate_pair(&mut x, &mut y, c, s, wc);
                    a[(i, p)] = x;
                    a[(i, q)] = y;
                }
                for j in 0..n {
                    // rows transform with Jᴴ: the conjugate of the column rule.
                    let (mut x, mut y) = (a[(p, j)].conj(), a[(q, j)].conj());
                    rotate_pair(&mut x, &mut y, c, s, wc);
                    a[(p, j)] = x.conj();
                    a[(q, j)] = y.conj();
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for i in 0..n {
                    let (mut x, mut y) = (v[(i, p)], v[(i, q)]);
                    rotate_pair(&mut x, &mut y, c, s, wc);
                    v[(i, p)] = x;
                    v[(i, q)] = y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep the factorization's order
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigDecomposition { values, vectors })
}

fn columns_of(m: &ComplexMatrix) -> Vec<Vec<C64>> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

fn matrix_from_columns(rows: usize, cols: &[Vec<C64>]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    // xᴴ y
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm2(x: &[C64]) -> f64 {
    libm::sqrt(x.iter().map(|z| z.norm_sqr()).sum())
}

/// Householder vector for `x`: returns (v, beta) with `(I - 2vvᴴ) x = beta e₁`,
/// `v` unit norm; `None` when `x` is zero.
fn householder(x: &[C64]) -> Option<(Vec<C64>, C64)> {
    let nx = norm2(x);
    if nx == 0.0 {
        return None;
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
    let beta = -phase * nx;
    let mut v = x.to_vec();
    v[0] -= beta;
    let nv = norm2(&v);
    if nv == 0.0 {
        return None;
    }
    for z in v.iter_mut() {
        *z /= nv;
    }
    Some((v, beta))
}

fn apply_reflector(v: &[C64], y: &mut [C64]) {
    let f = dot(v, y) * 2.0;
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= *vi * f;
    }
}

/// Thin Householder QR of a tall matrix (`rows >= cols`): returns `(Q, R)` with
/// `Q` of size `rows x cols` (orthonormal columns) and `R` upper triangular.
pub fn qr_thin(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (p, n) = m.shape();
    if p < n {
        return Err(Error::DimensionMismatch("qr_thin expects rows >= cols"));
    }
    let mut cols = columns_of(m);
    let mut reflectors: Vec<Option<Vec<C64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let h = householder(&cols[k][k..]);
        if let Some((v, beta)) = &h {
            cols[k][k] = *beta;
            for z in cols[k][k + 1..].iter_mut() {
                *z = ZERO;
            }
            for col in cols.iter_mut().skip(k + 1) {
                apply_reflector(v, &mut col[k..]);
            }
        }
        reflectors.push(h.map(|(v, _)| v));
    }
    let r = ComplexMatrix::from_fn(n, n, |i, j| if i <= j { cols[j][i] } else { ZERO });
    let mut q: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; p];
            e[j] = ONE;
            e
        })
        .collect();
    for k in (0..n).rev() {
        if let Some(v) = &reflectors[k] {
            for col in q.iter_mut() {
                apply_reflector(v, &mut col[k..]);
            }
        }
    }
    Ok((matrix_from_columns(p, &q), r))
}

// One-sided (Hestenes) Jacobi on the columns of `w`. On return the columns
// are mutually orthogonal, and `v` (if requested) accumulates the rotations.
fn one_sided_jacobi(w: &mut [Vec<C64>], mut v: Option<&mut [Vec<C64>]>) {
    let n = w.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = dot(&w[p], &w[q]);
                let mag = gamma.norm();
                if mag == 0.0 || mag <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let (c, s, wph) = jacobi_rotation(alpha, beta, gamma);
                let wc = wph.conj();
                let (lo, hi) = w.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    rotate_pair(x, y, c, s, wc);
                }
                if let Some(v) = v.as_deref_mut() {
                    let (lo, hi) = v.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        rotate_pair(x, y, c, s, wc);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

// Orthonormalizes `cols` in place (two passes of modified Gram-Schmidt for
// the columns flagged `weak`), replacing columns that vanish with vectors
// from the standard basis.
fn repair_orthonormal(cols: &mut [Vec<C64>], weak: &[bool], dim: usize) {
    let mut next_basis = 0usize;
    for j in 0..cols.len() {
        if !weak[j] {
            continue;
        }
        let mut attempts = 0;
        loop {
            for _ in 0..2 {
                for i in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let f = dot(&done[i], &rest[0]);
                    for (z, u) in rest[0].iter_mut().zip(&done[i]) {
                        *z -= *u * f;
                    }
                }
            }
            let nrm = norm2(&cols[j]);
            if nrm > 1e-6 {
                for z in cols[j].iter_mut() {
                    *z /= nrm;
                }
                break;
            }
            attempts += 1;
            if attempts > dim + 1 {
                break;
            }
            let mut e = vec![ZERO; dim];
            e[next_basis % dim] = ONE;
            next_basis += 1;
            cols[j] = e;
        }
    }
}

// SVD of a tall matrix with rows >= cols, columns given.
fn svd_tall(rows: usize, w_cols: Vec<Vec<C64>>, want_v: bool) -> (Vec<Vec<C64>>, Vec<f64>, Vec<Vec<C64>>) {
    let n = w_cols.len();
    let (q, mut w) = if rows > n {
        let m = matrix_from_columns(rows, &w_cols);
        // rows > cols guarantees qr_thin succeeds
        let (q, r) = qr_thin(&m).expect("tall input");
        (Some(q), columns_of(&r))
    } else {
        (None, w_cols)
    };
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = ONE;
            e
        })
        .collect();
    one_sided_jacobi(&mut w, if want_v { Some(&mut v) } else { None });

    let sv: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let smax = order.first().map_or(0.0, |&i| sv[i]);
    let inner = w.first().map_or(0, Vec::len);

    let mut u_small: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut weak = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for &j in &order {
        let s = sv[j];
        values.push(s);
        if s > 0.0 {
            u_small.push(w[j].iter().map(|z| z / s).collect());
        } else {
            u_small.push(vec![ZERO; inner]);
        }
        weak.push(!(s > 1e-8 * smax));
    }
    repair_orthonormal(&mut u_small, &weak, inner);
    let u = match q {
        Some(q) => u_small.iter().map(|c| q.mul_vec(c)).collect(),
        None => u_small,
    };
    let v_sorted = if want_v {
        order.iter().map(|&j| v[j].clone()).collect()
    } else {
        Vec::new()
    };
    (u, values, v_sorted)
}

/// Thin SVD of an arbitrary matrix.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    m.ensure_finite()?;
    let (p, n) = m.shape();
    if p == 0 || n == 0 {
        return Err(Error::DimensionMismatch("svd of empty matrix"));
    }
    if p >= n {
        let (u, s, v) = svd_tall(p, columns_of(m), true);
        Ok(Svd {
            u: matrix_from_columns(p, &u),
            singular_values: s,
            v: matrix_from_columns(n, &v),
        })
    } else {
        let (u, s, v) = svd_tall(n, columns_of(&m.adjoint()), true);
        Ok(Svd {
            u: matrix_from_columns(p, &v),
            singular_values: s,
            v: matrix_from_columns(n, &u),
        })
    }
}

/// Left singular vectors (`rows x min(rows, cols)`) and singular values,
/// skipping the right factor.
pub fn svd_left(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    m.ensure_finite()?;
    let (p, n) = m.shape();
    if p == 0 || n == 0 {
        return Err(Error::DimensionMismatch("svd of empty matrix"));
    }
    if p >= n {
        let (u, s, _) = svd_tall(p, columns_of(m), false);
        Ok((matrix_from_columns(p, &u), s))
    } else {
        // mᴴ = Q R; left vectors of m are the right vectors of R.
        let (_, r) = qr_thin(&m.adjoint())?;
        let (_, s, v) = svd_tall(p, columns_of(&r), true);
        Ok((matrix_from_columns(p, &v), s))
    }
}

/// Singular values only, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    m.ensure_finite()?;
    let (p, n) = m.shape();
    if p == 0 || n == 0 {
        return Ok(Vec::new());
    }
    let cols = if p >= n { columns_of(m) } else { columns_of(&m.adjoint()) };
    let rows = p.max(n);
    let (_, s, _) = svd_tall(rows, cols, false);
    Ok(s)
}

/// Moore-Penrose pseudo-inverse; singular values below `1e-12 * σ_max` are
/// treated as zero.
pub fn pseudo_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let f = svd(m)?;
    let smax = f.singular_values.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let tol = 1e-12 * smax;
    let (p, n) = m.shape();
    let mut out = ComplexMatrix::zeros(n, p);
    for (k, &s) in f.singular_values.iter().enumerate() {
        if s <= tol {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..n {
            let vik = f.v[(i, k)] * inv;
            for j in 0..p {
                out[(i, j)] += vik * f.u[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Reduces a square matrix to upper Hessenberg form by Householder
/// similarity transforms (eigenvalues preserved).
fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let Some((v, _)) = householder(&x) else {
            continue;
        };
        // left: rows k+1.. of every column
        for j in 0..n {
            let mut col: Vec<C64> = (k + 1..n).map(|i| h[(i, j)]).collect();
            apply_reflector(&v, &mut col);
            for (off, z) in col.into_iter().enumerate() {
                h[(k + 1 + off, j)] = z;
            }
        }
        // right: columns k+1.. of every row; (row * H) = conj(H * conj(row)ᵀ)
        for i in 0..n {
            let mut row: Vec<C64> = (k + 1..n).map(|j| h[(i, j)].conj()).collect();
            apply_reflector(&v, &mut row);
            for (off, z) in row.into_iter().enumerate() {
                h[(i, k + 1 + off)] = z.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let mu1 = mean + disc;
    let mu2 = mean - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Eigenvalues of a general complex square matrix, read off the diagonal of
/// its complex Schur form. Eigenvectors are never formed, so defective or
/// clustered spectra need no special handling.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.ensure_finite()?;
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(m);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if sub <= eps * diag || sub < f64::MIN_POSITIVE {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 200 * n {
            return Err(Error::NoConvergence);
        }
        let mu = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = libm::sqrt(x.norm_sqr() + y.norm_sqr());
            let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
            for j in k..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = c.conj() * a + s.conj() * b;
                h[(k + 1, j)] = -s * a + c * b;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in l..=(k + 1).min(hi) {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s;
                h[(i, k + 1)] = -a * s.conj() + b * c.conj();
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok((0..n).map(|i| h[(i, i)]).collect())
}
