use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, LawKind};
use crate::spaces::Field;

use super::{FieldSpaces, ModelConfig};

/// One block of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    /// `φ`
    Displacement,
    /// `Φ = φ_t`
    Velocity,
    /// `ψ`
    Rotation,
    /// `Ψ = ψ_t`
    AngularVelocity,
    /// `θ`
    ShearTemperature,
    /// `ηᵢ`, history of `θ` against the `i`-th exponential.
    ShearHistory(usize),
    /// Cattaneo heat flux of `θ`.
    ShearFlux,
    /// `ξ`
    BendingTemperature,
    /// `ζⱼ`
    BendingHistory(usize),
    /// Cattaneo heat flux of `ξ`.
    BendingFlux,
}

impl Block {
    /// Spatial field whose space the block lives in (`None` for fluxes).
    pub fn field(self) -> Option<Field> {
        Some(match self {
            Block::Displacement | Block::Velocity => Field::Displacement,
            Block::Rotation | Block::AngularVelocity => Field::Rotation,
            Block::ShearTemperature | Block::ShearHistory(_) => Field::ShearTemperature,
            Block::BendingTemperature | Block::BendingHistory(_) => Field::BendingTemperature,
            Block::ShearFlux | Block::BendingFlux => return None,
        })
    }

    pub fn label(self) -> String {
        match self {
            Block::Displacement => "phi".into(),
            Block::Velocity => "Phi".into(),
            Block::Rotation => "psi".into(),
            Block::AngularVelocity => "Psi".into(),
            Block::ShearTemperature => "theta".into(),
            Block::ShearHistory(i) => format!("eta{i}"),
            Block::ShearFlux => "q".into(),
            Block::BendingTemperature => "xi".into(),
            Block::BendingHistory(j) => format!("zeta{j}"),
            Block::BendingFlux => "p".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRange {
    pub block: Block,
    pub offset: usize,
    pub size: usize,
}

/// Ordered, contiguous partition of the state vector into blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    ranges: Vec<BlockRange>,
}

impl BlockLayout {
    /// Blocks are laid out in the given order; duplicates and empty blocks are rejected.
    pub fn new(blocks: &[(Block, usize)]) -> Result<Self> {
        let mut ranges = Vec::with_capacity(blocks.len());
        let mut offset = 0;
        for &(block, size) in blocks {
            if size == 0 {
                return Err(Error::Layout(format!("block {block:?} is empty")));
            }
            if ranges.iter().any(|r: &BlockRange| r.block == block) {
                return Err(Error::Layout(format!("block {block:?} appears twice")));
            }
            ranges.push(BlockRange { block, offset, size });
            offset += size;
        }
        Ok(Self { ranges })
    }

    /// Layout of the history-mode formulation. History blocks follow their temperature;
    /// a channel has them exactly when its law has a memory part.
    pub fn with_history(
        sizes: [usize; 4],
        law_theta: &KernelSpec,
        shear_modes: usize,
        law_xi: &KernelSpec,
        bending_modes: usize,
    ) -> Result<Self> {
        let [n_phi, n_psi, n_theta, n_xi] = sizes;
        for (law, modes, name) in [(law_theta, shear_modes, "theta"), (law_xi, bending_modes, "xi")] {
            if law.kind() == LawKind::Fourier && modes > 0 {
                return Err(Error::Layout(format!(
                    "Fourier law on {name} cannot carry {modes} history blocks"
                )));
            }
            if modes > law.mode_count() {
                return Err(Error::Layout(format!(
                    "{name} law has {} memory terms, {modes} history blocks requested",
                    law.mode_count()
                )));
            }
        }
        let mut blocks = vec![
            (Block::Displacement, n_phi),
            (Block::Velocity, n_phi),
            (Block::Rotation, n_psi),
            (Block::AngularVelocity, n_psi),
        ];
        if n_theta > 0 {
            blocks.push((Block::ShearTemperature, n_theta));
            blocks.extend((0..shear_modes).map(|i| (Block::ShearHistory(i), n_theta)));
        }
        if n_xi > 0 {
            blocks.push((Block::BendingTemperature, n_xi));
            blocks.extend((0..bending_modes).map(|j| (Block::BendingHistory(j), n_xi)));
        }
        Self::new(&blocks)
    }

    pub(crate) fn for_model(config: &ModelConfig, spaces: &FieldSpaces) -> Result<Self> {
        let thermal = |n: usize| if config.thermal { n } else { 0 };
        let modes = |k: Option<crate::kernels::PronyKernel>| k.map_or(0, |k| k.len());
        Self::with_history(
            [
                spaces.displacement.dim(),
                spaces.rotation.dim(),
                thermal(spaces.shear_temperature.dim()),
                thermal(spaces.bending_temperature.dim()),
            ],
            &config.law_theta,
            modes(config.shear_memory()?),
            &config.law_xi,
            modes(config.bending_memory()?),
        )
    }

    pub fn dim(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.offset + r.size)
    }

    pub fn range(&self, block: Block) -> Option<BlockRange> {
        self.ranges.iter().copied().find(|r| r.block == block)
    }

    pub fn contains(&self, block: Block) -> bool {
        self.range(block).is_some()
    }

    pub fn ranges(&self) -> &[BlockRange] {
        &self.ranges
    }

    pub fn shear_modes(&self) -> usize {
        self.ranges.iter().filter(|r| matches!(r.block, Block::ShearHistory(_))).count()
    }

    pub fn bending_modes(&self) -> usize {
        self.ranges.iter().filter(|r| matches!(r.block, Block::BendingHistory(_))).count()
    }

    /// Block owning state index `i`.
    pub fn block_of(&self, i: usize) -> Option<Block> {
        self.ranges
            .iter()
            .find(|r| i >= r.offset && i < r.offset + r.size)
            .map(|r| r.block)
    }
}
