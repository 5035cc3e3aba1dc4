//! Discrete function spaces on `(0, L)` and the Galerkin operators between them.
//!
//! Every space has a *raw* basis (all P1 nodes, all P0 cells, or a list of sine/cosine
//! modes) and a restriction to its admissible degrees of freedom: Dirichlet spaces drop
//! the two end nodes, zero-mean spaces use the columns of the mean-removal projector.
//! Operators are assembled on the raw basis and then restricted, `Rᵀ X R`.

mod p1;
mod trig;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use trig::TrigKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundarySet {
    /// `φ = 0`, `ψ_x = 0`, `θ_x = 0`, `ξ = 0` at both ends; `ψ` and `θ` carry zero mean.
    #[serde(rename = "mixed")]
    MixedDirichletNeumann,
    /// `φ = ψ = θ = ξ = 0` at both ends.
    #[serde(rename = "dirichlet")]
    FullDirichlet,
}

impl BoundarySet {
    pub const ALL: [BoundarySet; 2] = [BoundarySet::MixedDirichletNeumann, BoundarySet::FullDirichlet];

    pub fn tag(self) -> &'static str {
        match self {
            BoundarySet::MixedDirichletNeumann => "mixed",
            BoundarySet::FullDirichlet => "dirichlet",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "mixed" | "mixed_dn" | "MixedDN" => Some(BoundarySet::MixedDirichletNeumann),
            "dirichlet" | "full_dirichlet" | "FullDirichlet" => Some(BoundarySet::FullDirichlet),
            _ => None,
        }
    }

    /// Space flavor of each primary field. Velocities share the space of their
    /// displacement, history variables the space of their temperature.
    pub fn flavor(self, field: Field) -> FieldFlavor {
        match (self, field) {
            (_, Field::Displacement) | (_, Field::BendingTemperature) => FieldFlavor::Dirichlet,
            (BoundarySet::MixedDirichletNeumann, Field::Rotation)
            | (BoundarySet::MixedDirichletNeumann, Field::ShearTemperature) => {
                FieldFlavor::NeumannZeroMean
            }
            (BoundarySet::FullDirichlet, _) => FieldFlavor::Dirichlet,
        }
    }
}

/// The four spatial fields carrying boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// Vertical displacement `φ` (and its velocity).
    Displacement,
    /// Cross-section rotation `ψ` (and its velocity).
    Rotation,
    /// Temperature `θ` coupled to the shear force (and its history).
    ShearTemperature,
    /// Temperature `ξ` coupled to the bending moment (and its history).
    BendingTemperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    length: f64,
    cells: usize,
}

impl Mesh {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Mesh(format!("length {length} must be positive")));
        }
        if cells < 2 {
            return Err(Error::Mesh(format!("need at least 2 cells, got {cells}")));
        }
        Ok(Self { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.cells).map(|j| j as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldFlavor {
    Dirichlet,
    /// `H¹_*`: natural (Neumann) boundary, zero mean.
    NeumannZeroMean,
    Free,
    /// `L²_*`: no boundary condition, zero mean.
    FreeZeroMean,
}

impl FieldFlavor {
    pub fn is_zero_mean(self) -> bool {
        matches!(self, FieldFlavor::NeumannZeroMean | FieldFlavor::FreeZeroMean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Continuous piecewise-linear elements on the uniform mesh.
    #[serde(rename = "p1")]
    P1,
    /// Piecewise constants, one per cell. Used for heat fluxes.
    #[serde(rename = "p0")]
    P0,
    /// Sines for Dirichlet fields, cosines for Neumann fields; `mesh.cells()` modes.
    #[serde(rename = "trig")]
    Trig,
}

impl Basis {
    pub fn tag(self) -> &'static str {
        match self {
            Basis::P1 => "p1",
            Basis::P0 => "p0",
            Basis::Trig => "trig",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpace {
    mesh: Mesh,
    flavor: FieldFlavor,
    basis: Basis,
    restriction: Matrix,
}

impl FieldSpace {
    pub fn new(mesh: Mesh, flavor: FieldFlavor, basis: Basis) -> Result<Self> {
        if basis == Basis::P0 && matches!(flavor, FieldFlavor::Dirichlet | FieldFlavor::NeumannZeroMean) {
            return Err(Error::Logic(format!(
                "piecewise constants carry no boundary condition ({flavor:?})"
            )));
        }
        let raw = raw_dim(&mesh, flavor, basis);
        let restriction = match (basis, flavor) {
            (Basis::Trig, _) => Mat::identity(raw, raw),
            (_, FieldFlavor::Dirichlet) => Mat::from_fn(raw, raw - 2, |i, j| (i == j + 1) as u8 as f64),
            (_, FieldFlavor::Free) => Mat::identity(raw, raw),
            (_, _) => {
                let p = raw_zero_mean_projector(&mesh, basis, flavor);
                p.subcols(0, raw - 1).to_owned()
            }
        };
        Ok(Self {
            mesh,
            flavor,
            basis,
            restriction,
        })
    }

    pub fn p1(mesh: Mesh, flavor: FieldFlavor) -> Result<Self> {
        Self::new(mesh, flavor, Basis::P1)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn flavor(&self) -> FieldFlavor {
        self.flavor
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Number of degrees of freedom.
    pub fn dim(&self) -> usize {
        self.restriction.ncols()
    }

    pub fn raw_dim(&self) -> usize {
        self.restriction.nrows()
    }

    /// Maps degrees of freedom to raw coefficients (nodal values for P1).
    pub fn restriction(&self) -> &Matrix {
        &self.restriction
    }

    pub fn prolong(&self, dofs: &[f64]) -> Result<Vec<f64>> {
        if dofs.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: dofs.len(),
            });
        }
        Ok(crate::linalg::matvec(self.restriction.as_ref(), dofs))
    }

    /// Inverse of [`prolong`](Self::prolong) on its range. Raw vectors outside the range
    /// are first projected: end values dropped (Dirichlet) or mean removed (zero-mean).
    pub fn restrict(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.raw_dim() {
            return Err(Error::Dimension {
                expected: self.raw_dim(),
                found: raw.len(),
            });
        }
        Ok(match (self.basis, self.flavor) {
            (Basis::Trig, _) | (_, FieldFlavor::Free) => raw.to_vec(),
            (_, FieldFlavor::Dirichlet) => raw[1..raw.len() - 1].to_vec(),
            (_, _) => {
                // Z y = P [y; 0], so y_j = v_j - v_last recovers P v.
                let last = raw[raw.len() - 1];
                raw[..raw.len() - 1].iter().map(|v| v - last).collect()
            }
        })
    }

    /// Degrees of freedom approximating `f`: nodal interpolation for P1, cell midpoints
    /// for P0, L² projection for the trigonometric basis.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let raw = match self.basis {
            Basis::P1 => self.mesh.nodes().into_iter().map(&f).collect(),
            Basis::P0 => {
                let h = self.mesh.spacing();
                (0..self.mesh.cells).map(|k| f((k as f64 + 0.5) * h)).collect()
            }
            Basis::Trig => trig::project(&self.mesh, self.flavor, &f),
        };
        self.restrict(&raw).expect("raw length matches by construction")
    }

    /// Point value of the field with the given degrees of freedom.
    pub fn evaluate(&self, dofs: &[f64], x: f64) -> Result<f64> {
        let raw = self.prolong(dofs)?;
        Ok(match self.basis {
            Basis::P1 => p1::evaluate(&self.mesh, &raw, x),
            Basis::P0 => {
                let h = self.mesh.spacing();
                let k = ((x / h).floor() as usize).min(self.mesh.cells - 1);
                raw[k]
            }
            Basis::Trig => trig::evaluate(&self.mesh, self.flavor, &raw, x),
        })
    }
}

fn raw_dim(mesh: &Mesh, flavor: FieldFlavor, basis: Basis) -> usize {
    match basis {
        Basis::P1 => mesh.cells + 1,
        Basis::P0 => mesh.cells,
        Basis::Trig => trig::modes(mesh, flavor).len(),
    }
}

fn raw_mass(space: &FieldSpace) -> Matrix {
    match space.basis {
        Basis::P1 => p1::mass(&space.mesh),
        Basis::P0 => Mat::from_fn(space.mesh.cells, space.mesh.cells, |i, j| {
            if i == j {
                space.mesh.spacing()
            } else {
                0.0
            }
        }),
        Basis::Trig => {
            let modes = trig::modes(&space.mesh, space.flavor);
            trig::cross_mass(&space.mesh, &modes, &modes)
        }
    }
}

/// Mass-weighted mean functional on the raw basis: `∫ v = lᵀ v_raw`.
fn raw_mean_weights(mesh: &Mesh, basis: Basis, flavor: FieldFlavor) -> Vec<f64> {
    match basis {
        Basis::P1 => {
            let h = mesh.spacing();
            (0..=mesh.cells)
                .map(|j| if j == 0 || j == mesh.cells { h / 2.0 } else { h })
                .collect()
        }
        Basis::P0 => vec![mesh.spacing(); mesh.cells],
        Basis::Trig => trig::modes(mesh, flavor)
            .iter()
            .map(|&(kind, idx)| {
                if kind == TrigKind::Cos && idx == 0 {
                    mesh.length
                } else {
                    trig::integral(mesh, kind, idx)
                }
            })
            .collect(),
    }
}

/// Raw coefficients of the constant function 1, if the raw basis contains it.
fn raw_constant(mesh: &Mesh, basis: Basis, flavor: FieldFlavor) -> Option<Vec<f64>> {
    match basis {
        Basis::P1 => Some(vec![1.0; mesh.cells + 1]),
        Basis::P0 => Some(vec![1.0; mesh.cells]),
        Basis::Trig => {
            let modes = trig::modes(mesh, flavor);
            let pos = modes.iter().position(|&m| m == (TrigKind::Cos, 0))?;
            let mut v = vec![0.0; modes.len()];
            v[pos] = 1.0;
            Some(v)
        }
    }
}

fn raw_zero_mean_projector(mesh: &Mesh, basis: Basis, flavor: FieldFlavor) -> Matrix {
    let n = raw_dim(mesh, flavor, basis);
    let weights = raw_mean_weights(mesh, basis, flavor);
    match raw_constant(mesh, basis, flavor) {
        Some(one) => Mat::from_fn(n, n, |i, j| {
            (i == j) as u8 as f64 - one[i] * weights[j] / mesh.length
        }),
        None => Mat::identity(n, n),
    }
}

fn restrict_operator(raw: &Matrix, to: &FieldSpace, from: &FieldSpace) -> Matrix {
    to.restriction.transpose() * raw * &from.restriction
}

/// Galerkin mass matrix `∫ uᵢ uⱼ` on the admissible degrees of freedom.
pub fn build_mass_matrix(space: &FieldSpace) -> Matrix {
    restrict_operator(&raw_mass(space), space, space)
}

/// Stiffness matrix `∫ uᵢ' uⱼ'`.
pub fn build_stiffness_matrix(space: &FieldSpace) -> Result<Matrix> {
    let raw = match space.basis {
        Basis::P1 => p1::stiffness(&space.mesh),
        Basis::P0 => {
            return Err(Error::Logic("piecewise constants have no stiffness matrix".into()))
        }
        Basis::Trig => {
            let modes = trig::modes(&space.mesh, space.flavor);
            trig::cross_stiffness(&space.mesh, &modes)
        }
    };
    Ok(restrict_operator(&raw, space, space))
}

fn check_compatible(from: &FieldSpace, to: &FieldSpace) -> Result<()> {
    if from.mesh != to.mesh {
        return Err(Error::Shape(format!(
            "spaces live on different meshes ({:?} vs {:?})",
            from.mesh, to.mesh
        )));
    }
    let ok = from.basis == to.basis
        || matches!((from.basis, to.basis), (Basis::P1, Basis::P0) | (Basis::P0, Basis::P1));
    if !ok {
        return Err(Error::Shape(format!(
            "cannot couple {:?} and {:?} bases",
            from.basis, to.basis
        )));
    }
    Ok(())
}

/// Coupling `G[i][j] = ∫ (d/dx fromⱼ) · toᵢ`, shape `to.dim() × from.dim()`.
pub fn build_gradient_coupling(from: &FieldSpace, to: &FieldSpace) -> Result<Matrix> {
    check_compatible(from, to)?;
    let raw = match (from.basis, to.basis) {
        (Basis::P1, Basis::P1) => p1::gradient(&from.mesh),
        (Basis::P1, Basis::P0) => p1::gradient_to_cells(&from.mesh),
        (Basis::P0, _) => {
            return Err(Error::Logic("piecewise constants cannot be differentiated".into()))
        }
        (Basis::Trig, Basis::Trig) => trig::cross_gradient(
            &from.mesh,
            &trig::modes(&from.mesh, from.flavor),
            &trig::modes(&to.mesh, to.flavor),
        ),
        _ => unreachable!("checked by check_compatible"),
    };
    Ok(restrict_operator(&raw, to, from))
}

/// Cross mass `M[i][j] = ∫ fromⱼ · toᵢ`, shape `to.dim() × from.dim()`.
pub fn build_cross_mass(from: &FieldSpace, to: &FieldSpace) -> Result<Matrix> {
    check_compatible(from, to)?;
    let raw = match (from.basis, to.basis) {
        (Basis::P1, Basis::P1) => p1::mass(&from.mesh),
        (Basis::P1, Basis::P0) => p1::mass_to_cells(&from.mesh),
        (Basis::P0, Basis::P1) => p1::mass_to_cells(&from.mesh).transpose().to_owned(),
        (Basis::P0, Basis::P0) => raw_mass(from),
        (Basis::Trig, Basis::Trig) => trig::cross_mass(
            &from.mesh,
            &trig::modes(&from.mesh, from.flavor),
            &trig::modes(&to.mesh, to.flavor),
        ),
        _ => unreachable!("checked by check_compatible"),
    };
    Ok(restrict_operator(&raw, to, from))
}

/// Mean-removal projector `P = I - 1 lᵀ / L` on the raw coefficients of a Free or
/// Neumann space, where `lᵀ v = ∫ v`. Idempotent and self-adjoint in the mass inner product.
pub fn zero_mean_projector(space: &FieldSpace) -> Result<Matrix> {
    if space.flavor == FieldFlavor::Dirichlet {
        return Err(Error::Logic(
            "the mean constraint is not part of a Dirichlet space".into(),
        ));
    }
    Ok(raw_zero_mean_projector(&space.mesh, space.basis, space.flavor))
}

/// `∫₀ᴸ v dx` for raw coefficients `raw`.
pub fn raw_integral(space: &FieldSpace, raw: &[f64]) -> f64 {
    raw_mean_weights(&space.mesh, space.basis, space.flavor)
        .iter()
        .zip(raw)
        .map(|(w, v)| w * v)
        .sum()
}
