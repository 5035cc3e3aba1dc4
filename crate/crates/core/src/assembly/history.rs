use crate::error::{Error, Result};
use crate::kernels::PronyKernel;
use crate::quadrature;
use crate::spaces::FieldSpace;

use super::{Block, Formulation, SemidiscreteSystem};

/// Beyond `r = TAIL / bᵢ` the weight `e^{-bᵢ r}` is below `e^{-60}`.
const TAIL: f64 = 60.0;
const PANELS: usize = 64;
const ORDER: usize = 8;

/// Past temperature of one channel, as a function of position and elapsed time `r > 0`.
pub enum PastHistory {
    /// Zero past.
    Zero,
    /// `θ(x, -r) = f(x)` for all `r > 0`.
    Constant(Box<dyn Fn(f64) -> f64 + Send + Sync>),
    /// `θ(x, -r) = f(x, r)`, vanishing for `r > support` when a support is given.
    Sampled {
        past: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        support: Option<f64>,
    },
}

impl std::fmt::Debug for PastHistory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PastHistory::Zero => write!(f, "Zero"),
            PastHistory::Constant(_) => write!(f, "Constant(..)"),
            PastHistory::Sampled { support, .. } => write!(f, "Sampled {{ support: {support:?} }}"),
        }
    }
}

impl PastHistory {
    /// `∫₀^∞ e^{-rate·r} θ(x, -r) dr`, the initial value of the history mode with this rate.
    pub fn mode_value(&self, x: f64, rate: f64) -> Result<f64> {
        let value = match self {
            PastHistory::Zero => 0.0,
            PastHistory::Constant(f) => f(x) / rate,
            PastHistory::Sampled { past, support } => {
                let upper = match support {
                    Some(s) if !(*s > 0.0) || !s.is_finite() => {
                        return Err(Error::Lift(format!("history support {s} must be positive")))
                    }
                    Some(s) => s.min(TAIL / rate),
                    None => TAIL / rate,
                };
                let value = quadrature::integrate(|r| (-rate * r).exp() * past(x, r), 0.0, upper, PANELS, ORDER);
                if support.is_none() {
                    let tail = upper * (-rate * upper).exp() * past(x, upper).abs();
                    if !(tail <= 1e-8 * (value.abs() + 1.0)) {
                        return Err(Error::Lift(format!(
                            "history integral at x = {x} does not converge for rate {rate}"
                        )));
                    }
                }
                value
            }
        };
        if !value.is_finite() {
            return Err(Error::Lift(format!("non-finite history integral at x = {x}")));
        }
        Ok(value)
    }
}

/// Initial history blocks of both channels, one vector per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryLift {
    pub shear: Vec<Vec<f64>>,
    pub bending: Vec<Vec<f64>>,
}

impl HistoryLift {
    /// Writes the history blocks into `state`.
    pub fn apply(&self, sys: &SemidiscreteSystem, state: &mut [f64]) -> Result<()> {
        for (i, v) in self.shear.iter().enumerate() {
            sys.block_mut(state, Block::ShearHistory(i))?.copy_from_slice(v);
        }
        for (j, v) in self.bending.iter().enumerate() {
            sys.block_mut(state, Block::BendingHistory(j))?.copy_from_slice(v);
        }
        Ok(())
    }
}

fn lift_channel(space: &FieldSpace, kernel: Option<&PronyKernel>, past: &PastHistory) -> Result<Vec<Vec<f64>>> {
    let Some(kernel) = kernel else {
        return Ok(Vec::new());
    };
    kernel
        .terms()
        .iter()
        .map(|term| {
            let failure = std::cell::RefCell::new(None);
            let dofs = space.interpolate(|x| {
                past.mode_value(x, term.rate).unwrap_or_else(|e| {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            });
            match failure.into_inner() {
                Some(e) => Err(e),
                None => Ok(dofs),
            }
        })
        .collect()
}

/// Translates past temperature histories into the initial history-mode blocks. For
/// `μ(s) = Σ cᵢ e^{-bᵢ s}` mode `i` receives `∫₀^∞ e^{-bᵢ r} θ(x, -r) dr`, which equals
/// `∫₀^∞ bᵢ e^{-bᵢ s} η₀(x, s) ds` with `η₀(s) = ∫₀^s θ(-r) dr`.
pub fn history_lift(sys: &SemidiscreteSystem, theta_past: &PastHistory, xi_past: &PastHistory) -> Result<HistoryLift> {
    if sys.formulation() != Formulation::HistoryModes {
        return Err(Error::Lift(format!(
            "history lift applies to the history-mode formulation, not {:?}",
            sys.formulation()
        )));
    }
    let spaces = sys.spaces();
    Ok(HistoryLift {
        shear: lift_channel(&spaces.shear_temperature, sys.shear_memory(), theta_past)?,
        bending: lift_channel(&spaces.bending_temperature, sys.bending_memory(), xi_past)?,
    })
}
