//! Raw operators of continuous piecewise-linear elements on all `n + 1` nodes.

use faer::Mat;

use super::Mesh;
use crate::linalg::Matrix;

pub(super) fn mass(mesh: &Mesh) -> Matrix {
    let h = mesh.spacing();
    let mut m = Mat::zeros(mesh.cells() + 1, mesh.cells() + 1);
    for e in 0..mesh.cells() {
        m[(e, e)] += h / 3.0;
        m[(e + 1, e + 1)] += h / 3.0;
        m[(e, e + 1)] += h / 6.0;
        m[(e + 1, e)] += h / 6.0;
    }
    m
}

pub(super) fn stiffness(mesh: &Mesh) -> Matrix {
    let h = mesh.spacing();
    let mut k = Mat::zeros(mesh.cells() + 1, mesh.cells() + 1);
    for e in 0..mesh.cells() {
        k[(e, e)] += 1.0 / h;
        k[(e + 1, e + 1)] += 1.0 / h;
        k[(e, e + 1)] -= 1.0 / h;
        k[(e + 1, e)] -= 1.0 / h;
    }
    k
}

/// `G[i][j] = ∫ Nⱼ' Nᵢ`. On each cell the derivative is `±1/h` and `∫ Nᵢ = h/2`.
pub(super) fn gradient(mesh: &Mesh) -> Matrix {
    let mut g = Mat::zeros(mesh.cells() + 1, mesh.cells() + 1);
    for e in 0..mesh.cells() {
        for i in [e, e + 1] {
            g[(i, e)] -= 0.5;
            g[(i, e + 1)] += 0.5;
        }
    }
    g
}

/// `G[k][j] = ∫_{cell k} Nⱼ'`.
pub(super) fn gradient_to_cells(mesh: &Mesh) -> Matrix {
    Mat::from_fn(mesh.cells(), mesh.cells() + 1, |k, j| {
        if j == k {
            -1.0
        } else if j == k + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// `M[k][j] = ∫_{cell k} Nⱼ`.
pub(super) fn mass_to_cells(mesh: &Mesh) -> Matrix {
    let h = mesh.spacing();
    Mat::from_fn(mesh.cells(), mesh.cells() + 1, |k, j| {
        if j == k || j == k + 1 {
            h / 2.0
        } else {
            0.0
        }
    })
}

pub(super) fn evaluate(mesh: &Mesh, nodal: &[f64], x: f64) -> f64 {
    let h = mesh.spacing();
    let x = x.clamp(0.0, mesh.length());
    let e = ((x / h).floor() as usize).min(mesh.cells() - 1);
    let t = (x - e as f64 * h) / h;
    nodal[e] * (1.0 - t) + nodal[e + 1] * t
}
