//! Implicit midpoint integration of `M U' = A U` and decay-rate estimation.
//!
//! The midpoint rule maps the energy identity `E' = -UᵀDU` to the exact per-step balance
//! `E(u⁺) - E(u) = -dt · D((u + u⁺)/2)`, so energies never increase.

use std::io::Write;

use faer::linalg::solvers::{PartialPivLu, Solve};
use serde::{Deserialize, Serialize};

use crate::assembly::SemidiscreteSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Midpoint stepper for one `(system, dt)` pair; the shifted matrix is factored once.
pub struct MidpointStepper<'a> {
    sys: &'a SemidiscreteSystem,
    dt: f64,
    explicit: Matrix,
    implicit: PartialPivLu<f64>,
}

impl<'a> MidpointStepper<'a> {
    /// A negative `dt` integrates backward in time.
    pub fn new(sys: &'a SemidiscreteSystem, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Domain(format!("time step {dt} must be finite and nonzero")));
        }
        let half = 0.5 * dt;
        let explicit = sys.gram() + &(sys.generator() * half);
        let shifted = sys.gram() - &(sys.generator() * half);
        let implicit = shifted.partial_piv_lu();
        Ok(Self {
            sys,
            dt,
            explicit,
            implicit,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Solves `(M - dt/2 A) u⁺ = (M + dt/2 A) u`.
    pub fn step(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.sys.dim() {
            return Err(Error::Dimension {
                expected: self.sys.dim(),
                found: state.len(),
            });
        }
        let rhs = linalg::col_from_slice(&linalg::matvec(self.explicit.as_ref(), state));
        let next = linalg::col_to_vec(self.implicit.solve(&rhs).as_ref());
        Ok(next)
    }
}

/// One midpoint step. Factors the shifted matrix on every call; use
/// [`MidpointStepper`] for repeated steps.
pub fn step_midpoint(sys: &SemidiscreteSystem, state: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    MidpointStepper::new(sys, dt)?.step(state)
}

/// `E(u⁺) - E(u) + dt·D(u_mid)`, with the energy difference in the polarized form
/// `½(u⁺ - u)ᵀM(u⁺ + u)` to avoid cancellation.
pub fn balance_residual(sys: &SemidiscreteSystem, before: &[f64], after: &[f64], dt: f64) -> Result<f64> {
    let diff: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    let sum: Vec<f64> = after.iter().zip(before).map(|(a, b)| a + b).collect();
    let mid: Vec<f64> = sum.iter().map(|v| 0.5 * v).collect();
    let delta = 0.5 * sys.inner(&diff, &sum)?;
    Ok(delta + dt * sys.dissipation(&mid)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub times: Vec<f64>,
    /// `½‖U‖²` at each time.
    pub energies: Vec<f64>,
    /// `UᵀDU` at the midpoint of each step; one entry fewer than `energies`.
    pub dissipations: Vec<f64>,
    /// Largest per-step `|ΔE + dt·D(u_mid)|`.
    pub max_balance_residual: f64,
    /// Fitted decay exponent, when the energy history allows a fit.
    pub fit: Option<DecayFit>,
    /// State at `t_final`; not serialized.
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

impl TrajectoryReport {
    pub fn steps(&self) -> usize {
        self.dissipations.len()
    }

    /// `E(0) - E(T) - Σ dt·D(mid)`.
    pub fn telescoping_defect(&self) -> f64 {
        let dissipated: f64 = self
            .times
            .windows(2)
            .zip(&self.dissipations)
            .map(|(t, d)| (t[1] - t[0]) * d)
            .sum();
        self.energies[0] - self.energies[self.energies.len() - 1] - dissipated
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,energy,dissipation_mid")?;
        for (i, (t, e)) in self.times.iter().zip(&self.energies).enumerate() {
            match self.dissipations.get(i) {
                Some(d) => writeln!(w, "{t:e},{e:e},{d:e}")?,
                None => writeln!(w, "{t:e},{e:e},")?,
            }
        }
        Ok(())
    }
}

/// Integrates from `state0` over `[0, t_final]` with fixed step `dt` (the last step is
/// shortened to land on `t_final`).
pub fn simulate(sys: &SemidiscreteSystem, state0: &[f64], dt: f64, t_final: f64) -> Result<TrajectoryReport> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!("final time {t_final} must be positive")));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let last_dt = t_final - (steps - 1) as f64 * dt;
    let stepper = MidpointStepper::new(sys, dt)?;
    let last = if (last_dt - dt).abs() > 1e-12 * dt {
        Some(MidpointStepper::new(sys, last_dt)?)
    } else {
        None
    };

    let mut u = state0.to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    let mut dissipations = Vec::with_capacity(steps);
    times.push(0.0);
    energies.push(sys.energy(&u)?);
    let mut max_balance_residual = 0.0f64;
    for k in 0..steps {
        let s = match (&last, k + 1 == steps) {
            (Some(l), true) => l,
            _ => &stepper,
        };
        let next = s.step(&u)?;
        let t = if k + 1 == steps { t_final } else { (k + 1) as f64 * dt };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k + 1, time: t });
        }
        let mid: Vec<f64> = u.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        dissipations.push(sys.dissipation(&mid)?);
        max_balance_residual = max_balance_residual.max(balance_residual(sys, &u, &next, s.dt())?.abs());
        u = next;
        times.push(t);
        energies.push(sys.energy(&u)?);
    }
    let fit = fit_decay(&times, &energies, &FitOptions::default()).ok();
    Ok(TrajectoryReport {
        times,
        energies,
        dissipations,
        max_balance_residual,
        fit,
        final_state: u,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Leading fraction of the samples discarded as transient.
    pub discard_fraction: f64,
    pub min_samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            discard_fraction: 0.2,
            min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `ω̂ = -slope/2`, since the energy decays like `e^{-2ωt}`.
    pub rate: f64,
    /// Half-open sample range used by the fit.
    pub window: (usize, usize),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
}

/// Least-squares fit of `ln E(t)` over the samples after the transient. The window ends
/// at the last positive energy if the tail underflows.
pub fn fit_decay(times: &[f64], energies: &[f64], opts: &FitOptions) -> Result<DecayFit> {
    if times.len() != energies.len() {
        return Err(Error::Dimension {
            expected: times.len(),
            found: energies.len(),
        });
    }
    if !(0.0..1.0).contains(&opts.discard_fraction) {
        return Err(Error::Domain(format!("discard fraction {} not in [0, 1)", opts.discard_fraction)));
    }
    let start = (opts.discard_fraction * energies.len() as f64).floor() as usize;
    let end = energies
        .iter()
        .rposition(|&e| e > 0.0 && e.is_finite())
        .map_or(0, |i| i + 1);
    if end <= start || end - start < opts.min_samples.max(2) {
        return Err(Error::UndefinedRate(format!(
            "{} positive samples after the transient, need {}",
            end.saturating_sub(start),
            opts.min_samples.max(2)
        )));
    }
    let window = start..end;
    if energies[window.clone()].iter().any(|&e| !(e > 0.0)) {
        return Err(Error::UndefinedRate("energy vanishes inside the fit window".into()));
    }
    let n = (end - start) as f64;
    let t = &times[window.clone()];
    let y: Vec<f64> = energies[window].iter().map(|e| e.ln()).collect();
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|ti| (ti - tm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::UndefinedRate("fit window spans no time".into()));
    }
    let sxy: f64 = t.iter().zip(&y).map(|(ti, yi)| (ti - tm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = (t
        .iter()
        .zip(&y)
        .map(|(ti, yi)| (yi - intercept - slope * ti).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        rate: -0.5 * slope,
        window: (start, end),
        residual,
    })
}

/// Decay rate of a trajectory with the given options.
pub fn fit_decay_rate(report: &TrajectoryReport, opts: &FitOptions) -> Result<DecayFit> {
    fit_decay(&report.times, &report.energies, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Discretization, ModelConfig, PhysicalParams, Scheme};
    use crate::kernels::{KernelSpec, PronyKernel};
    use crate::spaces::BoundarySet;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn damped(seed: u64, bcs: BoundarySet) -> ModelConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = PhysicalParams::default();
        for name in ["rho1", "rho2", "rho3", "rho4", "k", "b", "gamma", "sigma"] {
            *p.get_mut(name).unwrap() = 10f64.powf(rng.random_range(-1.0..1.0));
        }
        let kernel = PronyKernel::from_pairs(&[(1.0, 1.0), (8.0, 4.0)]).unwrap();
        ModelConfig {
            params: p,
            law_theta: KernelSpec::GurtinPipkin { kernel: kernel.clone() },
            law_xi: KernelSpec::ColemanGurtin { ell: 0.5, kernel },
            bcs,
            discretization: Discretization { cells: 8, scheme: Scheme::P1P0 },
            thermal: true,
        }
    }

    fn core() -> SemidiscreteSystem {
        let c = ModelConfig::elastic_core(PhysicalParams::default(), BoundarySet::MixedDirichletNeumann, Discretization { cells: 8, scheme: Scheme::P1 });
        assemble(&c).unwrap()
    }

    #[test]
    fn undamped_core_conserves_energy_and_reverses() {
        let sys = core();
        let u = random_state(sys.dim(), 1);
        let e0 = sys.energy(&u).unwrap();
        let fwd = MidpointStepper::new(&sys, 0.05).unwrap();
        let bwd = MidpointStepper::new(&sys, -0.05).unwrap();
        let mut v = u.clone();
        for _ in 0..20 {
            let next = fwd.step(&v).unwrap();
            assert!((sys.energy(&next).unwrap() - e0).abs() <= 1e-12 * e0);
            v = next;
        }
        for _ in 0..20 {
            v = bwd.step(&v).unwrap();
        }
        let err = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = u.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10 * scale, "{err}");
    }

    /// `exp(tX)` by scaling and squaring with a Taylor core.
    fn expm(x: &Matrix, t: f64) -> Matrix {
        let n = x.nrows();
        let norm = x.as_ref().norm_max() * n as f64 * t.abs();
        let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
        let y = x * (t / 2f64.powi(squarings));
        let mut term = Matrix::identity(n, n);
        let mut sum = Matrix::identity(n, n);
        for k in 1..=20 {
            term = &term * &y * (1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn single_step_error_is_third_order() {
        let sys = assemble(&damped(3, BoundarySet::FullDirichlet)).unwrap();
        assert!(sys.dim() <= 200);
        let n = sys.dim();
        let mut x = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = sys.apply_generator(&e).unwrap();
            for i in 0..n {
                x[(i, j)] = col[i];
            }
        }
        let u: Vec<f64> = random_state(n, 5);
        let err = |dt: f64| {
            let exact = linalg::matvec(expm(&x, dt).as_ref(), &u);
            let got = step_midpoint(&sys, &u, dt).unwrap();
            exact.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let h = 0.1 / x.as_ref().norm_max() / n as f64;
        let (e1, e2) = (err(2.0 * h), err(h));
        let order = (e1 / e2).log2();
        assert!((2.7..3.3).contains(&order), "{e1} {e2} order {order}");
    }

    #[test]
    fn zero_state_stays_zero() {
        let sys = assemble(&damped(1, BoundarySet::MixedDirichletNeumann)).unwrap();
        let r = simulate(&sys, &sys.zero_state(), 0.1, 1.0).unwrap();
        assert!(r.energies.iter().all(|&e| e == 0.0));
        assert_eq!(r.times.len(), 11);
        assert!(r.fit.is_none());
    }

    #[test]
    fn trajectory_accounting() {
        for (seed, bcs) in [(2, BoundarySet::MixedDirichletNeumann), (7, BoundarySet::FullDirichlet)] {
            let sys = assemble(&damped(seed, bcs)).unwrap();
            let u = random_state(sys.dim(), seed);
            let r = simulate(&sys, &u, 0.01, 2.005).unwrap();
            assert_eq!(r.steps(), 201);
            assert!((r.times.last().unwrap() - 2.005).abs() < 1e-12);
            let e0 = r.energies[0];
            assert!(r.max_balance_residual <= 1e-12 * (e0 + 1.0));
            assert!(r.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12 * e0));
            assert!(r.telescoping_defect().abs() <= 1e-10 * e0);
            let mut csv = Vec::new();
            r.write_csv(&mut csv).unwrap();
            let text = String::from_utf8(csv).unwrap();
            assert_eq!(text.lines().count(), r.times.len() + 1);
            assert!(text.starts_with("t,energy,dissipation_mid\n"));
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let sys = core();
        let u = sys.zero_state();
        assert!(step_midpoint(&sys, &u, 0.0).is_err());
        assert!(step_midpoint(&sys, &u, -1.0).is_err());
        assert!(simulate(&sys, &u, 0.1, 0.0).is_err());
        assert!(MidpointStepper::new(&sys, f64::NAN).is_err());
        assert!(matches!(step_midpoint(&sys, &[1.0], 0.1), Err(Error::Dimension { .. })));
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let e: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * 0.37 * t).exp()).collect();
        let fit = fit_decay(&t, &e, &FitOptions::default()).unwrap();
        assert!((fit.rate - 0.37).abs() <= 1e-9);
        assert_eq!(fit.window, (40, 200));
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn fit_follows_the_dominant_mode() {
        let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let e: Vec<f64> = t
            .iter()
            .map(|t| (-2.0 * 0.1 * t).exp() + 1e-6 * (-2.0 * 5.0 * t).exp())
            .collect();
        let fit = fit_decay(&t, &e, &FitOptions::default()).unwrap();
        assert!((fit.rate - 0.1).abs() <= 1e-3);
    }

    #[test]
    fn fit_shrinks_window_on_underflow_and_rejects_zero() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut e: Vec<f64> = t.iter().map(|t| (-0.5 * t).exp()).collect();
        for v in &mut e[80..] {
            *v = 0.0;
        }
        let fit = fit_decay(&t, &e, &FitOptions::default()).unwrap();
        assert_eq!(fit.window, (20, 80));
        assert!((fit.rate - 0.25).abs() < 1e-12);
        assert!(matches!(fit_decay(&t, &vec![0.0; 100], &FitOptions::default()), Err(Error::UndefinedRate(_))));
        assert!(fit_decay(&t[..5], &e[..5], &FitOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn energies_never_increase(seed in 0u64..10_000, k in 0usize..3) {
            let dt = [1e-3, 1e-2, 1e-1][k];
            let bcs = if seed % 2 == 0 { BoundarySet::MixedDirichletNeumann } else { BoundarySet::FullDirichlet };
            let sys = assemble(&damped(seed, bcs)).unwrap();
            let u = random_state(sys.dim(), seed + 1);
            let r = simulate(&sys, &u, dt, 50.0 * dt).unwrap();
            let e0 = r.energies[0];
            prop_assert!(r.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12 * e0));
            prop_assert!(r.max_balance_residual <= 1e-12 * (e0 + 1.0));
        }
    }
}
