//! Sine/cosine modal basis on `(0, L)`: `sin(jπx/L)` for Dirichlet fields and
//! `cos(jπx/L)` for Neumann fields. All integrals are closed-form.

use std::f64::consts::PI;

use faer::Mat;

use super::{FieldFlavor, Mesh};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrigKind {
    Sin,
    Cos,
}

pub(super) fn modes(mesh: &Mesh, flavor: FieldFlavor) -> Vec<(TrigKind, usize)> {
    let n = mesh.cells();
    match flavor {
        FieldFlavor::Dirichlet => (1..=n).map(|j| (TrigKind::Sin, j)).collect(),
        FieldFlavor::NeumannZeroMean | FieldFlavor::FreeZeroMean => {
            (1..=n).map(|j| (TrigKind::Cos, j)).collect()
        }
        FieldFlavor::Free => (0..=n).map(|j| (TrigKind::Cos, j)).collect(),
    }
}

/// `∫₀ᴸ cos(aπx/L) sin(bπx/L) dx`
fn cos_sin(l: f64, a: usize, b: usize) -> f64 {
    if a == b || (a + b).is_multiple_of(2) {
        return 0.0;
    }
    let (a, b) = (a as f64, b as f64);
    l / PI * 2.0 * b / (b * b - a * a)
}

fn product(l: f64, f: (TrigKind, usize), g: (TrigKind, usize)) -> f64 {
    use TrigKind::*;
    match (f, g) {
        ((Sin, a), (Sin, b)) => {
            if a == b && a > 0 {
                l / 2.0
            } else {
                0.0
            }
        }
        ((Cos, a), (Cos, b)) => {
            if a != b {
                0.0
            } else if a == 0 {
                l
            } else {
                l / 2.0
            }
        }
        ((Cos, a), (Sin, b)) | ((Sin, b), (Cos, a)) => cos_sin(l, a, b),
    }
}

/// Derivative of a mode as `(scale, mode)`.
fn derivative(l: f64, f: (TrigKind, usize)) -> (f64, (TrigKind, usize)) {
    let w = f.1 as f64 * PI / l;
    match f.0 {
        TrigKind::Sin => (w, (TrigKind::Cos, f.1)),
        TrigKind::Cos => (-w, (TrigKind::Sin, f.1)),
    }
}

pub(super) fn integral(mesh: &Mesh, kind: TrigKind, idx: usize) -> f64 {
    let l = mesh.length();
    match kind {
        TrigKind::Cos => {
            if idx == 0 {
                l
            } else {
                0.0
            }
        }
        TrigKind::Sin => {
            if idx % 2 == 1 {
                2.0 * l / (idx as f64 * PI)
            } else {
                0.0
            }
        }
    }
}

pub(super) fn cross_mass(mesh: &Mesh, from: &[(TrigKind, usize)], to: &[(TrigKind, usize)]) -> Matrix {
    let l = mesh.length();
    Mat::from_fn(to.len(), from.len(), |i, j| product(l, from[j], to[i]))
}

pub(super) fn cross_gradient(
    mesh: &Mesh,
    from: &[(TrigKind, usize)],
    to: &[(TrigKind, usize)],
) -> Matrix {
    let l = mesh.length();
    Mat::from_fn(to.len(), from.len(), |i, j| {
        let (s, d) = derivative(l, from[j]);
        s * product(l, d, to[i])
    })
}

pub(super) fn cross_stiffness(mesh: &Mesh, modes: &[(TrigKind, usize)]) -> Matrix {
    let l = mesh.length();
    Mat::from_fn(modes.len(), modes.len(), |i, j| {
        let (si, di) = derivative(l, modes[i]);
        let (sj, dj) = derivative(l, modes[j]);
        si * sj * product(l, di, dj)
    })
}

fn value(l: f64, f: (TrigKind, usize), x: f64) -> f64 {
    let arg = f.1 as f64 * PI * x / l;
    match f.0 {
        TrigKind::Sin => arg.sin(),
        TrigKind::Cos => arg.cos(),
    }
}

pub(super) fn evaluate(mesh: &Mesh, flavor: FieldFlavor, coeffs: &[f64], x: f64) -> f64 {
    modes(mesh, flavor)
        .iter()
        .zip(coeffs)
        .map(|(&m, c)| c * value(mesh.length(), m, x))
        .sum()
}

/// L² projection onto the modes, using composite Gauss–Legendre quadrature fine enough to
/// resolve the highest mode.
pub(super) fn project(mesh: &Mesh, flavor: FieldFlavor, f: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let l = mesh.length();
    let ms = modes(mesh, flavor);
    let panels = 8 * (mesh.cells() + 1);
    let (nodes, weights) = crate::quadrature::gauss_legendre(8);
    let mut acc = vec![0.0; ms.len()];
    let hp = l / panels as f64;
    for p in 0..panels {
        let a = p as f64 * hp;
        for (t, w) in nodes.iter().zip(&weights) {
            let x = a + 0.5 * hp * (t + 1.0);
            let fx = f(x) * 0.5 * hp * w;
            for (c, &m) in acc.iter_mut().zip(&ms) {
                *c += fx * value(l, m, x);
            }
        }
    }
    // Modes are orthogonal, so the projection divides by the diagonal of the mass matrix.
    acc.iter()
        .zip(&ms)
        .map(|(c, &m)| c / product(l, m, m))
        .collect()
}
