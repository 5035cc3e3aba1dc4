use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::PronyKernel;
use crate::spaces::{build_mass_matrix, Field};

use super::{
    elastic_blocks, thermoelastic_couplings, Block, BlockLayout, FieldSpaces, Formulation, ModelConfig,
    PencilBuilder, SemidiscreteSystem,
};

/// Uniform grid `sⱼ = jΔ`, `j = 1..=points`, on `(0, horizon]` for the history variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryGrid {
    pub points: usize,
    /// Defaults to `40 / δ` with `δ` the Dafermos rate of the kernel.
    pub horizon: Option<f64>,
}

impl Default for HistoryGrid {
    fn default() -> Self {
        Self {
            points: 64,
            horizon: None,
        }
    }
}

/// Dafermos history `η(s)` sampled on a grid in `s`, with the right-endpoint rule for
/// `∫ μ(s)‖η_x(s)‖² ds` and upwind differences for `η_t = -η_s + θ`, `η(0) = 0`.
/// First order in the grid spacing; independent of the exponential structure of `μ`.
/// For non-increasing `μ` the transport is dissipative.
pub fn assemble_history_grid(config: &ModelConfig, grid: HistoryGrid) -> Result<SemidiscreteSystem> {
    config.validate()?;
    if grid.points == 0 {
        return Err(Error::Assembly("history grid needs at least one point".into()));
    }
    let p = &config.params;
    let spaces = FieldSpaces::new(config)?;
    let shear = config.shear_memory()?;
    let bending = config.bending_memory()?;
    let count = |k: &Option<PronyKernel>| if k.is_some() { grid.points } else { 0 };
    let mut blocks = vec![
        (Block::Displacement, spaces.displacement.dim()),
        (Block::Velocity, spaces.displacement.dim()),
        (Block::Rotation, spaces.rotation.dim()),
        (Block::AngularVelocity, spaces.rotation.dim()),
    ];
    if config.thermal {
        let (nt, nx) = (spaces.shear_temperature.dim(), spaces.bending_temperature.dim());
        blocks.push((Block::ShearTemperature, nt));
        blocks.extend((0..count(&shear)).map(|j| (Block::ShearHistory(j), nt)));
        blocks.push((Block::BendingTemperature, nx));
        blocks.extend((0..count(&bending)).map(|j| (Block::BendingHistory(j), nx)));
    }
    let layout = BlockLayout::new(&blocks)?;
    let mut b = PencilBuilder::new(layout.clone());
    elastic_blocks(&mut b, p, &spaces)?;

    if config.thermal {
        thermoelastic_couplings(&mut b, p, &spaces)?;
        let channels = [
            (Block::ShearTemperature, Block::ShearHistory as fn(usize) -> Block, Field::ShearTemperature, &spaces.shear_temperature, p.rho3, p.varpi1, &config.law_theta, &shear),
            (Block::BendingTemperature, Block::BendingHistory as fn(usize) -> Block, Field::BendingTemperature, &spaces.bending_temperature, p.rho4, p.varpi2, &config.law_xi, &bending),
        ];
        for (temp, history, field, space, rho, varpi, law, kernel) in channels {
            b.gram(temp, temp, &build_mass_matrix(space), rho)?;
            if varpi == 0.0 {
                continue;
            }
            let k = spaces.conduction_stiffness(field)?;
            let inst = law.instantaneous_fraction();
            if inst > 0.0 {
                b.dissipative(temp, &k, varpi * inst)?;
            }
            let Some(kernel) = kernel else { continue };
            let horizon = match grid.horizon {
                Some(h) if h > 0.0 && h.is_finite() => h,
                Some(h) => return Err(Error::Assembly(format!("history horizon {h} must be positive"))),
                None => 40.0 / kernel.dafermos_rate()?,
            };
            let ds = horizon / grid.points as f64;
            for j in 0..grid.points {
                let mu = kernel.memory((j + 1) as f64 * ds)?;
                let w = varpi * mu * ds;
                b.gram(history(j), history(j), &k, w)?;
                b.skew(history(j), temp, &k, w)?;
                // w·(ηⱼ₋₁ - ηⱼ)/Δ
                b.transport(history(j), history(j), &k, -varpi * mu)?;
                if j > 0 {
                    b.transport(history(j), history(j - 1), &k, varpi * mu)?;
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
        Formulation::HistoryGrid,
        spaces,
        shear,
        bending,
    )
}
