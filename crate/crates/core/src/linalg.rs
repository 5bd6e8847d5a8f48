//! Thin helpers over `faer` shared by the physics modules.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

pub(crate) const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Eigenpairs of a symmetric/Hermitian matrix, eigenvalues ascending.
pub(crate) struct Eigh<T> {
    pub values: Vec<f64>,
    pub vectors: Mat<T>,
}

pub(crate) fn eigh_real(m: MatRef<'_, f64>) -> Result<Eigh<f64>> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(Eigh {
        values,
        vectors: evd.U().to_owned(),
    })
}

pub(crate) fn eigh_complex(m: MatRef<'_, c64>) -> Result<Eigh<c64>> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Eigh {
        values,
        vectors: evd.U().to_owned(),
    })
}

pub fn eigvalsh_real(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub(crate) fn eigvalsh_complex(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// `a · b` for real matrices.
pub(crate) fn mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// `a · b` for complex matrices.
pub(crate) fn cmul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    out
}

pub(crate) fn max_abs_real(m: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

pub(crate) fn max_abs_complex(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `max |m - mᵀ|`.
pub(crate) fn asymmetry_real(m: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            best = best.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    best
}

/// `max |m - mᵀ|` (plain transpose, no conjugation).
pub(crate) fn asymmetry_complex(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            best = best.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    best
}

/// `max |m - m†|`.
pub(crate) fn anti_hermiticity(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// Symplectic form `⊕ [[0, 1], [-1, 0]]` over `modes` modes.
pub fn symplectic_form(modes: usize) -> Mat<f64> {
    let mut om = Mat::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    om
}

/// Symmetric square root of a symmetric positive-definite matrix.
pub(crate) fn sqrt_spd(m: MatRef<'_, f64>) -> Result<(Mat<f64>, Eigh<f64>)> {
    let eig = eigh_real(m)?;
    let n = m.nrows();
    if let Some(&lo) = eig.values.first() {
        if !(lo > 0.0) {
            return Err(Error::invalid(format!(
                "matrix is not positive definite (smallest eigenvalue {lo:.3e})"
            )));
        }
    }
    let mut scaled = eig.vectors.clone();
    for j in 0..n {
        let s = eig.values[j].sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    let root = mul(scaled.as_ref(), eig.vectors.transpose());
    Ok((root, eig))
}

/// Makes the largest-magnitude entry of a real vector positive; ties go to the
/// lowest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = k;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Rotates a complex vector so its largest-magnitude entry is real positive;
/// ties go to the lowest index.
pub(crate) fn fix_phase(v: &mut [c64]) {
    let mut best = 0usize;
    for (k, x) in v.iter().enumerate() {
        if x.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = k;
        }
    }
    let r = v[best].norm();
    if r > 0.0 {
        let rot = v[best].conj() / r;
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

pub(crate) fn norm_c(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
