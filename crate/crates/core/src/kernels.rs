//! Exponential-sum (Prony) memory kernels and the thermal constitutive laws built from them.
//!
//! A kernel is stored through its memory density `μ(s) = Σ cᵢ e^{-bᵢ s}`. The relaxation
//! function is the tail integral `g(s) = ∫ₛ^∞ μ = Σ (cᵢ/bᵢ) e^{-bᵢ s}`, so `μ = -g'`,
//! `g(0)` is the total mass of `μ`, and `∫₀^∞ g = Σ cᵢ/bᵢ²` is the mass of `g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used by the unit-mass flag.
pub const UNIT_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    /// Amplitude `c` of `c e^{-b s}` in the memory density.
    pub weight: f64,
    /// Decay rate `b > 0`.
    pub rate: f64,
}

impl PronyTerm {
    pub fn new(weight: f64, rate: f64) -> Self {
        Self { weight, rate }
    }

    /// Coefficient of this term in the relaxation function, `c/b`.
    pub fn relaxation_weight(&self) -> f64 {
        self.weight / self.rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronyKernel {
    terms: Vec<PronyTerm>,
    #[serde(default)]
    unit_mass: bool,
}

impl PronyKernel {
    /// Accepts any list of terms with `c ≥ 0` and `b > 0`. An empty list is the zero kernel.
    pub fn new(terms: Vec<PronyTerm>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if !t.weight.is_finite() || t.weight < 0.0 {
                return Err(Error::InvalidKernel(format!(
                    "term {i}: weight {} must be finite and non-negative",
                    t.weight
                )));
            }
            if !t.rate.is_finite() || t.rate <= 0.0 {
                return Err(Error::InvalidKernel(format!(
                    "term {i}: rate {} must be finite and positive",
                    t.rate
                )));
            }
        }
        Ok(Self {
            terms,
            unit_mass: false,
        })
    }

    /// Builds a kernel from `(c, b)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(c, b)| PronyTerm::new(c, b)).collect())
    }

    /// Flags the kernel as unit-mass, checking `Σ cᵢ/bᵢ² = 1` to [`UNIT_MASS_TOL`].
    pub fn require_unit_mass(mut self) -> Result<Self> {
        let mass = self.total_mass();
        if (mass - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::InvalidKernel(format!(
                "kernel flagged unit-mass has total mass {mass}"
            )));
        }
        self.unit_mass = true;
        Ok(self)
    }

    pub fn is_unit_mass(&self) -> bool {
        self.unit_mass
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        self.terms.iter().map(|t| (t.weight, t.rate)).collect()
    }

    fn check_time(s: f64) -> Result<()> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Domain(format!("kernel evaluated at negative time {s}")));
        }
        Ok(())
    }

    /// Relaxation function `g(s) = Σ (cᵢ/bᵢ) e^{-bᵢ s}`.
    pub fn relaxation(&self, s: f64) -> Result<f64> {
        Self::check_time(s)?;
        Ok(self
            .terms
            .iter()
            .map(|t| t.relaxation_weight() * (-t.rate * s).exp())
            .sum())
    }

    /// Memory density `μ(s) = Σ cᵢ e^{-bᵢ s}`.
    pub fn memory(&self, s: f64) -> Result<f64> {
        Self::check_time(s)?;
        Ok(self
            .terms
            .iter()
            .map(|t| t.weight * (-t.rate * s).exp())
            .sum())
    }

    /// Derivative `μ'(s) = -Σ bᵢ cᵢ e^{-bᵢ s}`.
    pub fn memory_derivative(&self, s: f64) -> Result<f64> {
        Self::check_time(s)?;
        Ok(-self
            .terms
            .iter()
            .map(|t| t.rate * t.weight * (-t.rate * s).exp())
            .sum::<f64>())
    }

    /// `∫₀^∞ g(s) ds = Σ cᵢ/bᵢ²`.
    pub fn total_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.weight / (t.rate * t.rate)).sum()
    }

    /// Rescales all weights so that [`total_mass`](Self::total_mass) is one.
    pub fn normalize_unit_mass(&self) -> Result<Self> {
        let mass = self.total_mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "cannot normalize a kernel of total mass {mass}"
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| PronyTerm::new(t.weight / mass, t.rate))
            .collect();
        Ok(Self {
            terms,
            unit_mass: true,
        })
    }

    /// Largest `δ` with `μ' + δ μ ≤ 0` on `s > 0`. For an exponential sum this is the
    /// smallest rate among the terms with positive weight.
    pub fn dafermos_rate(&self) -> Result<f64> {
        self.terms
            .iter()
            .filter(|t| t.weight > 0.0)
            .map(|t| t.rate)
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::InvalidKernel("kernel has no positive-weight term".into()))
    }

    /// Kernel of the rescaled relaxation function `g_ε(s) = g(s/ε)/ε`: rates become `b/ε`
    /// and weights `c/ε²`. The mass `∫ g` is unchanged.
    pub fn rescale(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Domain(format!("rescale factor {eps} not in (0, 1]")));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| PronyTerm::new(t.weight / (eps * eps), t.rate / eps))
            .collect();
        Ok(Self {
            terms,
            unit_mass: self.unit_mass,
        })
    }

    /// Multiplies every weight by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::Domain(format!("kernel scale factor {factor}")));
        }
        Self::new(
            self.terms
                .iter()
                .map(|t| PronyTerm::new(t.weight * factor, t.rate))
                .collect(),
        )
    }

    /// Sum of two kernels (concatenated term lists).
    pub fn combined(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self {
            terms,
            unit_mass: false,
        }
    }
}

/// The Gurtin–Pipkin kernel equivalent to a Cattaneo law with relaxation time `tau`:
/// `g(s) = e^{-s/τ}/τ`, i.e. the single term `c = 1/τ²`, `b = 1/τ`.
pub fn make_cattaneo(tau: f64) -> Result<PronyKernel> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("relaxation time {tau} must be positive")));
    }
    PronyKernel::from_pairs(&[(1.0 / (tau * tau), 1.0 / tau)])?.require_unit_mass()
}

/// Heat conduction law on one thermal channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelSpec {
    GurtinPipkin { kernel: PronyKernel },
    Fourier,
    Cattaneo { tau: f64 },
    ColemanGurtin { ell: f64, kernel: PronyKernel },
}

/// Short tags used in tables and records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LawKind {
    #[serde(rename = "GP")]
    GurtinPipkin,
    #[serde(rename = "F")]
    Fourier,
    #[serde(rename = "C")]
    Cattaneo,
    #[serde(rename = "CG")]
    ColemanGurtin,
}

impl LawKind {
    pub const ALL: [LawKind; 4] = [
        LawKind::GurtinPipkin,
        LawKind::Fourier,
        LawKind::Cattaneo,
        LawKind::ColemanGurtin,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LawKind::GurtinPipkin => "GP",
            LawKind::Fourier => "F",
            LawKind::Cattaneo => "C",
            LawKind::ColemanGurtin => "CG",
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::GurtinPipkin { kernel } => {
                kernel.dafermos_rate()?;
            }
            KernelSpec::Fourier => {}
            KernelSpec::Cattaneo { tau } => {
                make_cattaneo(*tau)?;
            }
            KernelSpec::ColemanGurtin { ell, kernel } => {
                if !(*ell > 0.0 && *ell < 1.0) {
                    return Err(Error::Domain(format!(
                        "Coleman-Gurtin weight {ell} not in (0, 1)"
                    )));
                }
                kernel.dafermos_rate()?;
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> LawKind {
        match self {
            KernelSpec::GurtinPipkin { .. } => LawKind::GurtinPipkin,
            KernelSpec::Fourier => LawKind::Fourier,
            KernelSpec::Cattaneo { .. } => LawKind::Cattaneo,
            KernelSpec::ColemanGurtin { .. } => LawKind::ColemanGurtin,
        }
    }

    /// The memory density driving the history modes, with the Coleman–Gurtin weight `ℓ`
    /// folded in. `None` for the instantaneous Fourier law.
    pub fn memory_kernel(&self) -> Result<Option<PronyKernel>> {
        Ok(match self {
            KernelSpec::GurtinPipkin { kernel } => Some(kernel.clone()),
            KernelSpec::Fourier => None,
            KernelSpec::Cattaneo { tau } => Some(make_cattaneo(*tau)?),
            KernelSpec::ColemanGurtin { ell, kernel } => Some(kernel.scaled(*ell)?),
        })
    }

    /// Fraction of the conductivity acting instantaneously (`1` for Fourier, `1-ℓ` for
    /// Coleman–Gurtin, `0` otherwise).
    pub fn instantaneous_fraction(&self) -> f64 {
        match self {
            KernelSpec::Fourier => 1.0,
            KernelSpec::ColemanGurtin { ell, .. } => 1.0 - ell,
            _ => 0.0,
        }
    }

    /// Number of history modes this law contributes.
    pub fn mode_count(&self) -> usize {
        match self {
            KernelSpec::GurtinPipkin { kernel } | KernelSpec::ColemanGurtin { kernel, .. } => {
                kernel.len()
            }
            KernelSpec::Fourier => 0,
            KernelSpec::Cattaneo { .. } => 1,
        }
    }
}
