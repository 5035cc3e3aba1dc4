use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::spaces::{build_gradient_coupling, build_mass_matrix, Basis, Field};

use super::{
    elastic_blocks, thermoelastic_couplings, Block, BlockLayout, FieldSpaces, Formulation, ModelConfig,
    PencilBuilder, SemidiscreteSystem, Scheme,
};

/// Cattaneo channels written with an explicit heat flux `q`:
/// `ρ₃θ_t + q_x + γ(φ_x+ψ)_t = 0`, `τq_t + q + ϖθ_x = 0`, energy weight `τ/ϖ` on `‖q‖²`.
///
/// The flux lives in [`FieldSpaces::flux_space`], which pairs exactly with the
/// temperature space, so the map `q = -(ϖ/τ)η_x` makes this system isometric to the
/// history-mode one.
///
/// Each channel must follow the Cattaneo or the Fourier law.
pub fn assemble_cattaneo_flux(config: &ModelConfig) -> Result<SemidiscreteSystem> {
    config.validate()?;
    if !config.thermal {
        return Err(Error::Assembly("flux formulation needs the thermal fields".into()));
    }
    if config.discretization.scheme == Scheme::Trig {
        return Err(Error::Assembly("flux formulation needs a finite element scheme".into()));
    }
    let p = &config.params;
    let spaces = FieldSpaces::new(config)?;
    let channels = [
        (&config.law_theta, p.varpi1, Field::ShearTemperature, Block::ShearTemperature, Block::ShearFlux, p.rho3),
        (&config.law_xi, p.varpi2, Field::BendingTemperature, Block::BendingTemperature, Block::BendingFlux, p.rho4),
    ];

    let mut blocks = vec![
        (Block::Displacement, spaces.displacement.dim()),
        (Block::Velocity, spaces.displacement.dim()),
        (Block::Rotation, spaces.rotation.dim()),
        (Block::AngularVelocity, spaces.rotation.dim()),
    ];
    let mut fluxes = Vec::new();
    for (law, varpi, field, temp, flux, _) in channels {
        blocks.push((temp, spaces.get(field).dim()));
        match law {
            KernelSpec::Cattaneo { tau } => {
                if varpi <= 0.0 {
                    return Err(Error::Assembly("Cattaneo flux needs a positive conductivity".into()));
                }
                let q = spaces.flux_space(field)?;
                blocks.push((flux, q.dim()));
                fluxes.push(Some((*tau, q)));
            }
            KernelSpec::Fourier => fluxes.push(None),
            other => {
                return Err(Error::Assembly(format!(
                    "flux formulation supports Cattaneo and Fourier laws, got {}",
                    other.kind().tag()
                )))
            }
        }
    }
    let layout = BlockLayout::new(&blocks)?;
    let mut b = PencilBuilder::new(layout.clone());
    elastic_blocks(&mut b, p, &spaces)?;
    thermoelastic_couplings(&mut b, p, &spaces)?;

    for ((_, varpi, field, temp, flux, rho), q) in channels.into_iter().zip(fluxes) {
        let space = spaces.get(field);
        b.gram(temp, temp, &build_mass_matrix(space), rho)?;
        match q {
            Some((tau, q)) => {
                let m0 = build_mass_matrix(&q);
                b.gram(flux, flux, &m0, tau / varpi)?;
                if space.basis() == Basis::P0 {
                    // temperature row: -⟨q_x, w⟩;  flux row: ⟨θ, r_x⟩
                    let g = build_gradient_coupling(&q, space)?;
                    b.skew(temp, flux, &g, -1.0)?;
                } else {
                    // temperature row: ⟨q, w_x⟩;  flux row: -⟨θ_x, r⟩
                    let g = build_gradient_coupling(space, &q)?;
                    b.skew(temp, flux, &g.transpose().to_owned(), 1.0)?;
                }
                b.dissipative(flux, &m0, 1.0 / varpi)?;
            }
            None => {
                if varpi > 0.0 {
                    b.dissipative(temp, &spaces.conduction_stiffness(field)?, varpi)?;
                }
            }
        }
    }

    let (gram, generator, dissipation) = b.finish();
    SemidiscreteSystem::new(
        gram,
        generator,
        dissipation,
        layout,
        config.clone(),
        Formulation::HeatFlux,
        spaces,
        None,
        None,
    )
}
