//! Semi-discrete thermoelastic Timoshenko system: the energy Gram matrix `M`, the
//! generator `A` (with `M U' = A U`) and the dissipation form `D`.
//!
//! The state is `(φ, Φ, ψ, Ψ, θ, η₁..η_m, ξ, ζ₁..ζ_m')`. Each Prony term `cᵢ e^{-bᵢ s}` of
//! the memory density contributes one history field `ηᵢ(t) = ∫₀^∞ e^{-bᵢ r} θ(t - r) dr`,
//! which obeys `ηᵢ' = -bᵢ ηᵢ + θ` and carries the energy weight `ϖ cᵢ/bᵢ` on `‖ηᵢ,ₓ‖²`.
//! The generator is assembled as a skew part plus `-D`, which is the discrete form of
//! `Re⟨AU, U⟩ = -ϖ₁Γ[η]/2 - ϖ₂Γ[ζ]/2`.

mod builder;
mod flux;
mod history;
mod history_grid;
mod layout;
mod reference;

use std::sync::OnceLock;

use faer::linalg::solvers::{Llt, Solve};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{make_cattaneo, KernelSpec, PronyKernel};
use crate::linalg::{self, Matrix};
use crate::spaces::{
    build_cross_mass, build_gradient_coupling, build_mass_matrix, build_stiffness_matrix, Basis,
    BoundarySet, Field, FieldFlavor, FieldSpace, Mesh,
};

pub(crate) use builder::PencilBuilder;
pub use flux::assemble_cattaneo_flux;
pub use history::{history_lift, HistoryLift, PastHistory};
pub use history_grid::{assemble_history_grid, HistoryGrid};
pub use layout::{Block, BlockLayout, BlockRange};
pub use reference::assemble_fourier_reference;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
    pub k: f64,
    pub b: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub varpi1: f64,
    pub varpi2: f64,
    pub length: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            rho1: 1.0,
            rho2: 1.0,
            rho3: 1.0,
            rho4: 1.0,
            k: 1.0,
            b: 1.0,
            gamma: 1.0,
            sigma: 1.0,
            varpi1: 1.0,
            varpi2: 1.0,
            length: 1.0,
        }
    }
}

impl PhysicalParams {
    pub const NAMES: [&'static str; 11] = [
        "rho1", "rho2", "rho3", "rho4", "k", "b", "gamma", "sigma", "varpi1", "varpi2", "length",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "rho1" => self.rho1,
            "rho2" => self.rho2,
            "rho3" => self.rho3,
            "rho4" => self.rho4,
            "k" => self.k,
            "b" => self.b,
            "gamma" => self.gamma,
            "sigma" => self.sigma,
            "varpi1" => self.varpi1,
            "varpi2" => self.varpi2,
            "length" => self.length,
            _ => return None,
        })
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "rho1" => &mut self.rho1,
            "rho2" => &mut self.rho2,
            "rho3" => &mut self.rho3,
            "rho4" => &mut self.rho4,
            "k" => &mut self.k,
            "b" => &mut self.b,
            "gamma" => &mut self.gamma,
            "sigma" => &mut self.sigma,
            "varpi1" => &mut self.varpi1,
            "varpi2" => &mut self.varpi2,
            "length" => &mut self.length,
            _ => return None,
        })
    }

    /// Densities, moduli and length must be positive; couplings and conductivities may
    /// vanish (diagnostic configurations only).
    pub fn validate(&self) -> Result<()> {
        for name in Self::NAMES {
            let v = self.get(name).unwrap();
            let nonneg = matches!(name, "gamma" | "sigma" | "varpi1" | "varpi2");
            let ok = v.is_finite() && if nonneg { v >= 0.0 } else { v > 0.0 };
            if !ok {
                return Err(Error::Assembly(format!("parameter {name} = {v} out of range")));
            }
        }
        Ok(())
    }

    pub fn is_strictly_positive(&self) -> bool {
        Self::NAMES.iter().all(|n| self.get(n).unwrap() > 0.0)
    }

    /// `ρ₁ b = ρ₂ k`
    pub fn wave_speed_mismatch(&self) -> f64 {
        self.rho1 * self.b / (self.rho2 * self.k)
    }
}

/// Choice of discrete spaces for the mechanical and thermal fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Continuous piecewise-linear elements for every field.
    #[serde(rename = "p1")]
    P1,
    /// P1 for `φ` and `ψ`; piecewise constants for temperatures and histories, whose
    /// gradients are measured through a P1 heat-flux space (`K = B M_q⁻¹ Bᵀ`).
    #[serde(rename = "p1p0")]
    P1P0,
    /// Sines and cosines, mixed boundary conditions only.
    #[serde(rename = "trig")]
    Trig,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::P1, Scheme::P1P0, Scheme::Trig];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::P1 => "p1",
            Scheme::P1P0 => "p1p0",
            Scheme::Trig => "trig",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.tag() == tag)
    }

    pub fn mechanical_basis(self) -> Basis {
        match self {
            Scheme::P1 | Scheme::P1P0 => Basis::P1,
            Scheme::Trig => Basis::Trig,
        }
    }

    pub fn thermal_basis(self) -> Basis {
        match self {
            Scheme::P1 => Basis::P1,
            Scheme::P1P0 => Basis::P0,
            Scheme::Trig => Basis::Trig,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Cells of the uniform mesh (or number of modes for the trigonometric scheme).
    pub cells: usize,
    pub scheme: Scheme,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            cells: 32,
            scheme: Scheme::P1P0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub params: PhysicalParams,
    /// Law of the temperature `θ` coupled to the shear force.
    pub law_theta: KernelSpec,
    /// Law of the temperature `ξ` coupled to the bending moment.
    pub law_xi: KernelSpec,
    pub bcs: BoundarySet,
    pub discretization: Discretization,
    /// When false the thermal fields are dropped and only the elastic core is assembled.
    pub thermal: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let kernel = make_cattaneo(1.0).expect("valid relaxation time");
        Self {
            params: PhysicalParams::default(),
            law_theta: KernelSpec::GurtinPipkin {
                kernel: kernel.clone(),
            },
            law_xi: KernelSpec::GurtinPipkin { kernel },
            bcs: BoundarySet::MixedDirichletNeumann,
            discretization: Discretization::default(),
            thermal: true,
        }
    }
}

impl ModelConfig {
    /// Elastic core only: no thermal fields, so `γ` and `σ` play no role.
    pub fn elastic_core(params: PhysicalParams, bcs: BoundarySet, discretization: Discretization) -> Self {
        Self {
            params,
            bcs,
            discretization,
            thermal: false,
            ..Self::default()
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.params.length, self.discretization.cells)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.law_theta.validate()?;
        self.law_xi.validate()?;
        self.mesh()?;
        if self.discretization.scheme == Scheme::Trig && self.bcs != BoundarySet::MixedDirichletNeumann {
            return Err(Error::Assembly(
                "the trigonometric basis is only available for mixed boundary conditions".into(),
            ));
        }
        Ok(())
    }

    /// Memory kernel actually used on the `θ` channel (`None` when the channel has no
    /// history fields: Fourier law, vanishing conductivity, or no thermal fields).
    pub fn shear_memory(&self) -> Result<Option<PronyKernel>> {
        channel_memory(self.thermal, self.params.varpi1, &self.law_theta)
    }

    pub fn bending_memory(&self) -> Result<Option<PronyKernel>> {
        channel_memory(self.thermal, self.params.varpi2, &self.law_xi)
    }
}

fn channel_memory(thermal: bool, varpi: f64, law: &KernelSpec) -> Result<Option<PronyKernel>> {
    if !thermal || varpi == 0.0 {
        return Ok(None);
    }
    law.memory_kernel()
}

/// How the thermal part of a [`SemidiscreteSystem`] was represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// Exact exponential-mode history fields.
    HistoryModes,
    /// Explicit Cattaneo heat fluxes in the flux space of each temperature.
    HeatFlux,
    /// History sampled on a grid in `s` with upwind transport.
    HistoryGrid,
    /// Hand-assembled Fourier/Fourier system.
    FourierReference,
}

/// The discrete spaces of the four spatial fields.
#[derive(Debug, Clone)]
pub struct FieldSpaces {
    pub displacement: FieldSpace,
    pub rotation: FieldSpace,
    pub shear_temperature: FieldSpace,
    pub bending_temperature: FieldSpace,
    bcs: BoundarySet,
}

impl FieldSpaces {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        let mesh = config.mesh()?;
        let scheme = config.discretization.scheme;
        let mechanical = |f: Field| FieldSpace::new(mesh, config.bcs.flavor(f), scheme.mechanical_basis());
        let thermal = |f: Field| {
            let basis = scheme.thermal_basis();
            // Piecewise constants hold no trace; boundary conditions move to the flux space.
            let flavor = match (basis, config.bcs.flavor(f)) {
                (Basis::P0, FieldFlavor::Dirichlet) => FieldFlavor::Free,
                (Basis::P0, FieldFlavor::NeumannZeroMean) => FieldFlavor::FreeZeroMean,
                (_, flavor) => flavor,
            };
            FieldSpace::new(mesh, flavor, basis)
        };
        Ok(Self {
            displacement: mechanical(Field::Displacement)?,
            rotation: mechanical(Field::Rotation)?,
            shear_temperature: thermal(Field::ShearTemperature)?,
            bending_temperature: thermal(Field::BendingTemperature)?,
            bcs: config.bcs,
        })
    }

    /// Space of the heat flux `-θ_x` that pairs exactly with the temperature space:
    /// piecewise constants for P1 temperatures, P1 for piecewise-constant ones. Zero-mean
    /// when the temperature vanishes at the ends, vanishing at the ends for insulated ones.
    pub fn flux_space(&self, field: Field) -> Result<FieldSpace> {
        let temp = self.get(field);
        let insulated = self.bcs.flavor(field) == FieldFlavor::NeumannZeroMean;
        let (basis, flavor) = match temp.basis() {
            Basis::P1 if insulated => (Basis::P0, FieldFlavor::Free),
            Basis::P1 => (Basis::P0, FieldFlavor::FreeZeroMean),
            Basis::P0 if insulated => (Basis::P1, FieldFlavor::Dirichlet),
            Basis::P0 => (Basis::P1, FieldFlavor::FreeZeroMean),
            Basis::Trig => return Err(Error::Assembly("no flux space for the trigonometric scheme".into())),
        };
        FieldSpace::new(*temp.mesh(), flavor, basis)
    }

    /// Gram matrix of `‖w_x‖²` on the temperature space of `field`. For piecewise
    /// constants the gradient is the Riesz representative in the flux space,
    /// `‖w_x‖² = (Bw)ᵀ M_q⁻¹ (Bw)` with `(Bw)ⱼ = ∫ w qⱼ'`.
    pub fn conduction_stiffness(&self, field: Field) -> Result<Matrix> {
        let temp = self.get(field);
        if temp.basis() != Basis::P0 {
            return build_stiffness_matrix(temp);
        }
        let q = self.flux_space(field)?;
        let g = build_gradient_coupling(&q, temp)?;
        let mq = linalg::cholesky(build_mass_matrix(&q).as_ref())?;
        let x = mq.solve(g.transpose());
        let k = &g * &x;
        let n = k.nrows();
        Ok(Matrix::from_fn(n, n, |i, j| 0.5 * (k[(i, j)] + k[(j, i)])))
    }

    pub fn get(&self, field: Field) -> &FieldSpace {
        match field {
            Field::Displacement => &self.displacement,
            Field::Rotation => &self.rotation,
            Field::ShearTemperature => &self.shear_temperature,
            Field::BendingTemperature => &self.bending_temperature,
        }
    }
}

#[derive(Debug)]
pub struct SemidiscreteSystem {
    gram: Matrix,
    generator: Matrix,
    dissipation: Matrix,
    layout: BlockLayout,
    config: ModelConfig,
    formulation: Formulation,
    spaces: FieldSpaces,
    shear_memory: Option<PronyKernel>,
    bending_memory: Option<PronyKernel>,
    gram_factor: Llt<f64>,
    whitened: OnceLock<Matrix>,
}

/// Assembles the history-mode discretization of `config`.
pub fn assemble(config: &ModelConfig) -> Result<SemidiscreteSystem> {
    config.validate()?;
    let spaces = FieldSpaces::new(config)?;
    let shear_memory = config.shear_memory()?;
    let bending_memory = config.bending_memory()?;
    let layout = BlockLayout::for_model(config, &spaces)?;
    let mut builder = PencilBuilder::new(layout.clone());

    elastic_blocks(&mut builder, &config.params, &spaces)?;
    if config.thermal {
        let p = &config.params;
        thermoelastic_couplings(&mut builder, p, &spaces)?;
        let kt = spaces.conduction_stiffness(Field::ShearTemperature)?;
        let kx = spaces.conduction_stiffness(Field::BendingTemperature)?;
        builder.gram(Block::ShearTemperature, Block::ShearTemperature, &build_mass_matrix(&spaces.shear_temperature), p.rho3)?;
        builder.gram(Block::BendingTemperature, Block::BendingTemperature, &build_mass_matrix(&spaces.bending_temperature), p.rho4)?;
        conduction(&mut builder, Block::ShearTemperature, Block::ShearHistory, p.varpi1, &config.law_theta, shear_memory.as_ref(), &kt)?;
        conduction(&mut builder, Block::BendingTemperature, Block::BendingHistory, p.varpi2, &config.law_xi, bending_memory.as_ref(), &kx)?;
    }

    let (gram, generator, dissipation) = builder.finish();
    SemidiscreteSystem::new(
        gram,
        generator,
        dissipation,
        layout,
        config.clone(),
        Formulation::HistoryModes,
        spaces,
        shear_memory,
        bending_memory,
    )
}

/// Kinetic and elastic energy `k‖φ_x+ψ‖² + ρ₁‖Φ‖² + b‖ψ_x‖² + ρ₂‖Ψ‖²` and the skew
/// coupling between positions and velocities.
pub(crate) fn elastic_blocks(b: &mut PencilBuilder, p: &PhysicalParams, s: &FieldSpaces) -> Result<()> {
    let k_phi = build_stiffness_matrix(&s.displacement)?;
    let m_phi = build_mass_matrix(&s.displacement);
    let k_psi = build_stiffness_matrix(&s.rotation)?;
    let m_psi = build_mass_matrix(&s.rotation);
    // [ψᵢ][φⱼ] = ∫ φⱼ' ψᵢ
    let g = build_gradient_coupling(&s.displacement, &s.rotation)?;
    let gt = g.transpose().to_owned();
    let psi_psi = &m_psi * p.k + &k_psi * p.b;

    use Block::*;
    b.gram(Displacement, Displacement, &k_phi, p.k)?;
    b.gram(Displacement, Rotation, &gt, p.k)?;
    b.gram(Rotation, Displacement, &g, p.k)?;
    b.gram(Rotation, Rotation, &psi_psi, 1.0)?;
    b.gram(Velocity, Velocity, &m_phi, p.rho1)?;
    b.gram(AngularVelocity, AngularVelocity, &m_psi, p.rho2)?;

    b.skew(Displacement, Velocity, &k_phi, p.k)?;
    b.skew(Displacement, AngularVelocity, &gt, p.k)?;
    b.skew(Rotation, Velocity, &g, p.k)?;
    b.skew(Rotation, AngularVelocity, &psi_psi, 1.0)?;
    Ok(())
}

/// `γθ` in the shear force and `σξ` in the bending moment, with the matching
/// `γ(φ_x+ψ)_t` and `σψ_xt` sources in the heat equations.
pub(crate) fn thermoelastic_couplings(b: &mut PencilBuilder, p: &PhysicalParams, s: &FieldSpaces) -> Result<()> {
    use Block::*;
    // Φ row: γ⟨θ, v_x⟩;  θ row: -γ⟨Φ_x, w⟩
    let g_phi_theta = build_gradient_coupling(&s.displacement, &s.shear_temperature)?;
    b.skew(Velocity, ShearTemperature, &g_phi_theta.transpose().to_owned(), p.gamma)?;
    // Ψ row: γ⟨θ, v⟩;  θ row: -γ⟨Ψ, w⟩
    let m_theta_psi = build_cross_mass(&s.shear_temperature, &s.rotation)?;
    b.skew(AngularVelocity, ShearTemperature, &m_theta_psi, p.gamma)?;
    // Ψ row: σ⟨ξ, v_x⟩ (ξ vanishes at both ends);  ξ row: -σ⟨Ψ_x, z⟩
    let g_psi_xi = build_gradient_coupling(&s.rotation, &s.bending_temperature)?;
    b.skew(AngularVelocity, BendingTemperature, &g_psi_xi.transpose().to_owned(), p.sigma)?;
    Ok(())
}

/// Heat conduction on one channel: history modes for the memory part and a parabolic
/// term for the instantaneous part.
fn conduction(
    b: &mut PencilBuilder,
    temperature: Block,
    history: fn(usize) -> Block,
    varpi: f64,
    law: &KernelSpec,
    memory: Option<&PronyKernel>,
    stiffness: &Matrix,
) -> Result<()> {
    if varpi == 0.0 {
        return Ok(());
    }
    let instantaneous = law.instantaneous_fraction();
    if instantaneous > 0.0 {
        b.dissipative(temperature, stiffness, varpi * instantaneous)?;
    }
    if let Some(kernel) = memory {
        for (i, term) in kernel.terms().iter().enumerate() {
            let w = varpi * term.relaxation_weight();
            b.gram(history(i), history(i), stiffness, w)?;
            // history row: ϖw K (θ - b η);  temperature row: -ϖw K η
            b.skew(history(i), temperature, stiffness, w)?;
            b.dissipative(history(i), stiffness, w * term.rate)?;
        }
    }
    Ok(())
}

impl SemidiscreteSystem {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        gram: Matrix,
        generator: Matrix,
        dissipation: Matrix,
        layout: BlockLayout,
        config: ModelConfig,
        formulation: Formulation,
        spaces: FieldSpaces,
        shear_memory: Option<PronyKernel>,
        bending_memory: Option<PronyKernel>,
    ) -> Result<Self> {
        let gram_factor = linalg::cholesky(gram.as_ref())?;
        Ok(Self {
            gram,
            generator,
            dissipation,
            layout,
            config,
            formulation,
            spaces,
            shear_memory,
            bending_memory,
            gram_factor,
            whitened: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Gram matrix of the energy inner product.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// `A` in `M U' = A U`.
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn dissipation_form(&self) -> &Matrix {
        &self.dissipation
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn spaces(&self) -> &FieldSpaces {
        &self.spaces
    }

    pub fn shear_memory(&self) -> Option<&PronyKernel> {
        self.shear_memory.as_ref()
    }

    pub fn bending_memory(&self) -> Option<&PronyKernel> {
        self.bending_memory.as_ref()
    }

    pub(crate) fn gram_factor(&self) -> &Llt<f64> {
        &self.gram_factor
    }

    /// `L⁻¹ A L⁻ᵀ` with `M = L Lᵀ`: the generator in coordinates where the energy norm is
    /// Euclidean. Computed once.
    pub fn whitened_generator(&self) -> &Matrix {
        self.whitened.get_or_init(|| {
            linalg::congruence_by_inverse_factor(self.gram_factor.L(), self.generator.as_ref())
        })
    }

    pub fn zero_state(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn check(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: state.len(),
            });
        }
        Ok(())
    }

    /// `½ Uᵀ M U`, half the squared energy norm.
    pub fn energy(&self, state: &[f64]) -> Result<f64> {
        self.check(state)?;
        Ok(0.5 * linalg::bilinear(self.gram.as_ref(), state, state))
    }

    /// `Uᵀ D U`, the instantaneous energy loss rate.
    pub fn dissipation(&self, state: &[f64]) -> Result<f64> {
        self.check(state)?;
        Ok(linalg::bilinear(self.dissipation.as_ref(), state, state))
    }

    /// `⟨U, V⟩` in the energy inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(linalg::bilinear(self.gram.as_ref(), u, v))
    }

    /// `M⁻¹ A U`.
    pub fn apply_generator(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.check(state)?;
        let rhs = linalg::col_from_slice(&linalg::matvec(self.generator.as_ref(), state));
        let x = self.gram_factor.solve(&rhs);
        let out = linalg::col_to_vec(x.as_ref());
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("Gram solve produced non-finite values".into()));
        }
        Ok(out)
    }

    pub fn block<'a>(&self, state: &'a [f64], block: Block) -> Result<&'a [f64]> {
        self.check(state)?;
        let r = self.layout.range(block).ok_or_else(|| Error::Layout(format!("no block {block:?}")))?;
        Ok(&state[r.offset..r.offset + r.size])
    }

    pub fn block_mut<'a>(&self, state: &'a mut [f64], block: Block) -> Result<&'a mut [f64]> {
        self.check(state)?;
        let r = self.layout.range(block).ok_or_else(|| Error::Layout(format!("no block {block:?}")))?;
        Ok(&mut state[r.offset..r.offset + r.size])
    }

    /// Space of the degrees of freedom in `block`.
    pub fn space_of(&self, block: Block) -> Option<&FieldSpace> {
        block.field().map(|f| self.spaces.get(f))
    }

    /// Sets a block from a function of `x`, using the block's space.
    pub fn set_block_fn(&self, state: &mut [f64], block: Block, f: impl Fn(f64) -> f64) -> Result<()> {
        let space = self
            .space_of(block)
            .ok_or_else(|| Error::Layout(format!("{block:?} has no spatial interpolant")))?;
        let dofs = space.interpolate(f);
        self.block_mut(state, block)?.copy_from_slice(&dofs);
        Ok(())
    }
}
