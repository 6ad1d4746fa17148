//! Thin helpers over `faer` for the dense complex Hermitian algebra used by
//! every solver in the crate.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub use faer::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

#[inline]
pub fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Column vector from a slice.
pub fn col(v: &[c64]) -> CMat {
    CMat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn col_to_vec(a: &CMat, j: usize) -> Vec<c64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn scaled(a: &CMat, s: f64) -> CMat {
    let mut out = a.clone();
    for j in 0..out.ncols() {
        for x in out.col_as_slice_mut(j) {
            *x *= s;
        }
    }
    out
}

/// `dst += s * src`.
pub fn add_scaled(dst: &mut CMat, src: &CMat, s: f64) {
    assert_eq!((dst.nrows(), dst.ncols()), (src.nrows(), src.ncols()));
    for j in 0..dst.ncols() {
        for (d, x) in dst.col_as_slice_mut(j).iter_mut().zip(src.col_as_slice(j)) {
            *d += x * s;
        }
    }
}

pub fn add_diag(dst: &mut CMat, d: &[f64]) {
    for (i, &v) in d.iter().enumerate() {
        dst[(i, i)] += re(v);
    }
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// `tr(A B)` in O(n²) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> c64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `tr(A B)` for Hermitian `b`, using `B_ji = conj(B_ij)` so that both
/// operands are read column by column.
pub fn trace_product_hermitian(a: &CMat, b: &CMat) -> c64 {
    assert_eq!((a.nrows(), a.ncols()), (b.ncols(), b.nrows()));
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for (x, y) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            acc += x * y.conj();
        }
    }
    acc
}

/// Real diagonal of a (Hermitian) matrix.
pub fn real_diag(a: &CMat) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, i)].re).collect()
}

pub fn diag_matrix(d: &[f64]) -> CMat {
    let mut out = zeros(d.len(), d.len());
    add_diag(&mut out, d);
    out
}

/// `I ∘ A`: keeps the diagonal of `a`.
pub fn hadamard_identity(a: &CMat) -> CMat {
    diag_matrix(&real_diag(a))
}

/// Makes `a` exactly Hermitian in place: off-diagonal pairs are averaged and
/// diagonal imaginary parts dropped.
pub fn hermitize(a: &mut CMat) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = re(a[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

pub fn is_hermitian_exact(a: &CMat) -> bool {
    let n = a.nrows();
    if n != a.ncols() {
        return false;
    }
    (0..n).all(|i| (0..n).all(|j| a[(i, j)] == a[(j, i)].conj()))
}

pub fn is_identity_exact(a: &CMat) -> bool {
    let n = a.nrows();
    n == a.ncols()
        && (0..n).all(|i| {
            (0..n).all(|j| a[(i, j)] == if i == j { re(1.0) } else { re(0.0) })
        })
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        acc += a.col_as_slice(j).iter().map(|x| x.norm_sqr()).sum::<f64>();
    }
    acc.sqrt()
}

pub fn frobenius_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        acc += a
            .col_as_slice(j)
            .iter()
            .zip(b.col_as_slice(j))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>();
    }
    acc.sqrt()
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Internal(format!("hermitian eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let vals = (0..n).map(|i| s.column_vector()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let vals = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Internal(format!("hermitian eigenvalue solve failed: {e:?}")))?;
    Ok(vals)
}

/// `U diag(f(λ)) U^H`.
fn spectral_map(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = vals.len();
    let mut scaled_vecs = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let g = f(v);
        for i in 0..n {
            scaled_vecs[(i, j)] *= g;
        }
    }
    let mut out: CMat = &scaled_vecs * vecs.adjoint();
    hermitize(&mut out);
    out
}

/// Clips negative eigenvalues of a Hermitian matrix to zero and rescales the
/// trace back to `target_trace`.
pub fn psd_repair(a: &CMat, target_trace: f64) -> Result<CMat> {
    let mut sym = a.clone();
    hermitize(&mut sym);
    let (vals, vecs) = hermitian_eigen(&sym)?;
    if vals.iter().all(|&v| v >= 0.0) {
        let tr = trace(&sym).re;
        return Ok(scaled(&sym, target_trace / tr));
    }
    let mut out = spectral_map(&vals, &vecs, |v| v.max(0.0));
    let tr = trace(&out).re;
    if tr <= 0.0 {
        return Err(Error::Internal("PSD repair produced a zero matrix".into()));
    }
    out = scaled(&out, target_trace / tr);
    hermitize(&mut out);
    Ok(out)
}

/// Hermitian square root with negative-eigenvalue clipping.
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    if a.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    let (vals, vecs) = hermitian_eigen(a)?;
    let top = vals.iter().cloned().fold(0.0_f64, f64::max);
    if vals.iter().any(|&v| v < -1e-8 * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::Internal(format!(
            "covariance square root: matrix is not PSD (min eigenvalue {:.3e})",
            vals[0]
        )));
    }
    Ok(spectral_map(&vals, &vecs, |v| v.max(0.0).sqrt()))
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Internal(format!("Cholesky factorization failed: {e:?}")))?;
    let mut inv = llt.inverse();
    hermitize(&mut inv);
    Ok(inv)
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Internal(format!("Cholesky factorization failed: {e:?}")))?;
    let mut x = b.clone();
    llt.solve_in_place(&mut x);
    Ok(x)
}

/// Solves the small real system `A X = B` with complex right-hand sides by
/// partial-pivot LU. Fails if the pivots reveal numerical singularity.
pub fn real_solve(a: &[Vec<f64>], b: &CMat, context: &str) -> Result<CMat> {
    let n = a.len();
    let lhs = CMat::from_fn(n, n, |i, j| re(a[i][j]));
    let lu = lhs.partial_piv_lu();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let u = lu.U();
    for i in 0..n {
        if u[(i, i)].norm() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(context.to_string()));
        }
    }
    let mut x = b.clone();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// `v^H A v`.
pub fn quad_form(a: &CMat, v: &[c64]) -> c64 {
    let n = v.len();
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..n {
        let mut av = c64::new(0.0, 0.0);
        for i in 0..n {
            av += v[i].conj() * a[(i, j)];
        }
        acc += av * v[j];
    }
    acc
}

pub fn dot_h(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hpd(n: usize) -> CMat {
        let a = CMat::from_fn(n, n, |i, j| {
            c64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
        });
        let mut h: CMat = &a * a.adjoint();
        add_diag(&mut h, &vec![1.0; n]);
        h
    }

    #[test]
    fn inverse_and_solve_agree() {
        let h = hpd(6);
        let inv = hpd_inverse(&h).unwrap();
        let prod: CMat = &h * &inv;
        assert!(frobenius_diff(&prod, &identity(6)) < 1e-10);
        let b = CMat::from_fn(6, 2, |i, j| c64::new(i as f64, j as f64));
        let x = hpd_solve(&h, &b).unwrap();
        let back: CMat = &h * &x;
        assert!(frobenius_diff(&back, &b) < 1e-10);
    }

    #[test]
    fn sqrt_squares_back() {
        let h = hpd(5);
        let s = psd_sqrt(&h).unwrap();
        let sq: CMat = &s * &s;
        assert!(frobenius_diff(&sq, &h) / frobenius(&h) < 1e-12);
    }

    #[test]
    fn repair_clips_and_normalizes() {
        let mut a = diag_matrix(&[3.0, 1.0, -0.5]);
        a[(0, 1)] = c64::new(0.1, 0.2);
        a[(1, 0)] = c64::new(0.1, -0.2);
        let r = psd_repair(&a, 3.0).unwrap();
        assert!(is_hermitian_exact(&r));
        assert!((trace(&r).re - 3.0).abs() < 1e-12);
        let ev = hermitian_eigenvalues(&r).unwrap();
        assert!(ev[0] >= -1e-12 * ev[2]);
    }

    #[test]
    fn singular_real_system_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let b = zeros(2, 1);
        assert!(matches!(real_solve(&a, &b, "test"), Err(Error::Singular(_))));
    }

    #[test]
    fn trace_product_matches_gemm() {
        let a = hpd(4);
        let b = CMat::from_fn(4, 4, |i, j| c64::new(i as f64 - j as f64, 0.5 * j as f64));
        let ab: CMat = &a * &b;
        assert!((trace(&ab) - trace_product(&a, &b)).norm() < 1e-12);
        let h = hpd(4);
        let bh: CMat = &b * &h;
        assert!((trace(&bh) - trace_product_hermitian(&b, &h)).norm() < 1e-12);
    }
}
