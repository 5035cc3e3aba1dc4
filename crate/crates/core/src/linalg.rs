//! Thin helpers over faer used by the assembly, dynamics and spectra modules.

use faer::linalg::solvers::Llt;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type Matrix = Mat<f64>;

pub(crate) fn cholesky(m: MatRef<'_, f64>) -> Result<Llt<f64>> {
    m.llt(Side::Lower)
        .map_err(|e| Error::Factorization(format!("Cholesky of Gram matrix: {e:?}")))
}

/// `dst[r0.., c0..] += scale * src`
pub(crate) fn add_block(dst: &mut Matrix, r0: usize, c0: usize, src: MatRef<'_, f64>, scale: f64) {
    for j in 0..src.ncols() {
        for i in 0..src.nrows() {
            dst[(r0 + i, c0 + j)] += scale * src[(i, j)];
        }
    }
}

pub(crate) fn matvec(m: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), x.len());
    let mut y = vec![0.0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// `xᵀ M y`
pub(crate) fn bilinear(m: MatRef<'_, f64>, x: &[f64], y: &[f64]) -> f64 {
    let my = matvec(m, y);
    x.iter().zip(&my).map(|(a, b)| a * b).sum()
}

pub(crate) fn col_from_slice(x: &[f64]) -> Mat<f64> {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

pub(crate) fn col_to_vec(m: MatRef<'_, f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// `L⁻¹ A L⁻ᵀ` for a lower Cholesky factor `L`.
pub(crate) fn congruence_by_inverse_factor(l: MatRef<'_, f64>, a: MatRef<'_, f64>) -> Matrix {
    use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
    use faer::Par;

    let mut y = a.to_owned();
    solve_lower_triangular_in_place(l, y.as_mut(), Par::Seq);
    let mut c = y.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    c.transpose().to_owned()
}

pub(crate) fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

/// Eigenvalues of the symmetric-definite pencil `K x = λ M x`, ascending.
#[cfg(test)]
pub(crate) fn symmetric_pencil_eigenvalues(k: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let llt = cholesky(m)?;
    let c = congruence_by_inverse_factor(llt.L(), k);
    let sym = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let mut ev = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
