//! Batch studies: parameter sweeps, the law-combination matrix, Cattaneo equivalence,
//! singular limits, and single-model simulate / spectrum / resolvent runs.
//!
//! Every study produces [`OutputRecord`]s (one JSON line each) and optional CSV curves.
//! Independent cells run concurrently; records keep their deterministic cell order.

pub mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assembly::{assemble, assemble_cattaneo_flux, assemble_fourier_reference, ModelConfig, Scheme};
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::kernels::{make_cattaneo, KernelSpec, LawKind, PronyKernel};
use crate::linalg::max_abs;
use crate::spaces::BoundarySet;
use crate::spectra::{self, matched_distance, resolvent_scan, Eigenvalue, ScanGrid, SpectrumReport};

pub use output::{plot_script, write_output, Curve, OutputPaths, PlotKind, OUT_DIR_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Simulate,
    Spectrum,
    Resolvent,
    Sweep,
    #[serde(rename = "combo")]
    ComboMatrix,
    #[serde(rename = "cattaneo-eq")]
    CattaneoEquivalence,
    #[serde(rename = "limit")]
    SingularLimit,
}

impl StudyKind {
    pub const ALL: [StudyKind; 7] = [
        StudyKind::Simulate,
        StudyKind::Spectrum,
        StudyKind::Resolvent,
        StudyKind::Sweep,
        StudyKind::ComboMatrix,
        StudyKind::CattaneoEquivalence,
        StudyKind::SingularLimit,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            StudyKind::Simulate => "simulate",
            StudyKind::Spectrum => "spectrum",
            StudyKind::Resolvent => "resolvent",
            StudyKind::Sweep => "sweep",
            StudyKind::ComboMatrix => "combo",
            StudyKind::CattaneoEquivalence => "cattaneo-eq",
            StudyKind::SingularLimit => "limit",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "combo-matrix" => Some(StudyKind::ComboMatrix),
            "cattaneo-equivalence" => Some(StudyKind::CattaneoEquivalence),
            "singular-limit" => Some(StudyKind::SingularLimit),
            _ => Self::ALL.into_iter().find(|k| k.tag() == tag),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub draws: usize,
    /// Log-uniform `[lo, hi]` range per swept parameter.
    pub ranges: BTreeMap<String, (f64, f64)>,
    /// Adds one equal-wave-speed and one 100x-separated draw.
    pub slices: bool,
    /// Adds one draw with `varpi1 = varpi2 = 0`, which must be flagged.
    pub diagnostic: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            draws: 50,
            ranges: config::default_ranges(),
            slices: true,
            diagnostic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComboSpec {
    /// Relaxation time of the Cattaneo entries.
    pub tau: f64,
    /// Weight of the Coleman–Gurtin entries.
    pub ell: f64,
}

impl Default for ComboSpec {
    fn default() -> Self {
        Self { tau: 1.0, ell: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CattaneoSpec {
    pub taus: Vec<f64>,
    pub varsigmas: Vec<f64>,
    /// Largest admissible eigenvalue mismatch.
    pub tolerance: f64,
}

impl Default for CattaneoSpec {
    fn default() -> Self {
        Self {
            taus: vec![0.1, 1.0],
            varsigmas: vec![0.1, 1.0],
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitTarget {
    Fourier,
    ColemanGurtin { ell: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    /// Strictly decreasing in `(0, 1]`.
    pub eps: Vec<f64>,
    pub target: LimitTarget,
    /// Base kernel; defaults to the θ-law kernel. Normalized to unit mass.
    pub kernel: Option<PronyKernel>,
    pub tracked: usize,
    pub tolerance: f64,
}

impl Default for LimitSpec {
    fn default() -> Self {
        Self {
            eps: (0..=6).map(|k| 0.5f64.powi(k)).collect(),
            target: LimitTarget::Fourier,
            kernel: None,
            tracked: 10,
            tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialData {
    /// Uniform entries in `[-1, 1]` from the study seed.
    Random,
    /// Real part of the least-damped eigenvector.
    LeastDampedMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub dt: f64,
    pub t_final: f64,
    pub init: InitialData,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 10.0,
            init: InitialData::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub model: ModelConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub plot: bool,
    /// Abscissas above this value are flagged (sweep, combo).
    pub threshold: f64,
    /// Boundary sets visited by sweep and combo; empty means the model's own.
    pub bcs: Vec<BoundarySet>,
    pub sweep: SweepSpec,
    pub combo: ComboSpec,
    pub cattaneo: CattaneoSpec,
    pub limit: LimitSpec,
    pub simulate: SimulateSpec,
    pub scan: ScanGrid,
    /// Spectrum runs also solve at `2n`.
    pub richardson: bool,
}

impl StudySpec {
    pub fn new(kind: StudyKind, model: ModelConfig) -> Self {
        Self {
            kind,
            model,
            seed: 0,
            output: None,
            plot: false,
            threshold: -1e-6,
            bcs: Vec::new(),
            sweep: SweepSpec::default(),
            combo: ComboSpec::default(),
            cattaneo: CattaneoSpec::default(),
            limit: LimitSpec::default(),
            simulate: SimulateSpec::default(),
            scan: ScanGrid::default(),
            richardson: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        for (name, &(lo, hi)) in &self.sweep.ranges {
            if crate::assembly::PhysicalParams::default().get(name).is_none() {
                return Err(Error::Spec(format!("unknown swept parameter `{name}`")));
            }
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Spec(format!("range of `{name}` must satisfy 0 < lo <= hi, found [{lo}, {hi}]")));
            }
        }
        if self.kind == StudyKind::Sweep && self.sweep.ranges.is_empty() {
            return Err(Error::Spec("sweep needs at least one parameter range".into()));
        }
        if self.kind == StudyKind::Sweep && self.sweep.draws == 0 && !self.sweep.slices && !self.sweep.diagnostic {
            return Err(Error::Spec("sweep has no draws".into()));
        }
        if self.kind == StudyKind::CattaneoEquivalence {
            if self.cattaneo.taus.is_empty() || self.cattaneo.varsigmas.is_empty() {
                return Err(Error::Spec("relaxation time lists must be non-empty".into()));
            }
            for &t in self.cattaneo.taus.iter().chain(&self.cattaneo.varsigmas) {
                make_cattaneo(t)?;
            }
        }
        let eps = &self.limit.eps;
        if eps.is_empty() {
            return Err(Error::Spec("ε ladder is empty".into()));
        }
        if eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Spec(format!("ε ladder {eps:?} must lie in (0, 1]")));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Spec(format!("ε ladder {eps:?} must be strictly decreasing")));
        }
        if let LimitTarget::ColemanGurtin { ell } = self.limit.target {
            if !(ell > 0.0 && ell < 1.0) {
                return Err(Error::Spec(format!("Coleman–Gurtin weight {ell} not in (0, 1)")));
            }
        }
        if self.limit.tracked == 0 {
            return Err(Error::Spec("at least one eigenvalue must be tracked".into()));
        }
        if !(self.combo.tau > 0.0) || !(self.combo.ell > 0.0 && self.combo.ell < 1.0) {
            return Err(Error::Spec("combo needs tau > 0 and ell in (0, 1)".into()));
        }
        if !(self.simulate.dt > 0.0 && self.simulate.t_final > 0.0) {
            return Err(Error::Spec("simulate needs dt > 0 and t_final > 0".into()));
        }
        Ok(())
    }

    fn boundary_sets(&self) -> Vec<BoundarySet> {
        if self.bcs.is_empty() {
            vec![self.model.bcs]
        } else {
            self.bcs.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAILURE")]
    Failure,
}

impl Status {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Failure
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Seconds since the Unix epoch; the only field that differs between reruns.
    pub timestamp: u64,
    pub seed: u64,
    pub cells: usize,
    pub scheme: Scheme,
    pub dim: Option<usize>,
    pub modes_theta: usize,
    pub modes_xi: usize,
}

/// One JSON line of study output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub study: StudyKind,
    pub index: usize,
    pub label: String,
    pub status: Status,
    /// Flat model echo; `config::echo_from_json` and `config::parse_model` restore it.
    pub config: serde_json::Map<String, Value>,
    pub metrics: BTreeMap<String, Value>,
    pub provenance: Provenance,
}

impl OutputRecord {
    fn new(spec: &StudySpec, index: usize, label: impl Into<String>, model: &ModelConfig, dim: Option<usize>) -> Self {
        let modes = |k: Result<Option<PronyKernel>>| k.ok().flatten().map_or(0, |k| k.len());
        Self {
            study: spec.kind,
            index,
            label: label.into(),
            status: Status::Pass,
            config: config::echo_to_json(&config::echo(model)),
            metrics: BTreeMap::new(),
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
                seed: spec.seed,
                cells: model.discretization.cells,
                scheme: model.discretization.scheme,
                dim,
                modes_theta: modes(model.shear_memory()),
                modes_xi: modes(model.bending_memory()),
            },
        }
    }

    fn metric(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metrics.insert(key.to_string(), value.into());
        self
    }

    fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn is_failure(&self) -> bool {
        self.status == Status::Failure
    }

    /// Real-valued metric, if present.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    /// Model config restored from the echo.
    pub fn model(&self) -> Result<ModelConfig> {
        let flat = config::echo_from_json(&self.config)?;
        config::parse_model(&config::echo_to_toml(&flat)?)
    }

    /// JSON line with the timestamp zeroed, for reproducibility comparisons.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.provenance.timestamp = 0;
        serde_json::to_string(&copy).expect("records serialize")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOutput {
    pub records: Vec<OutputRecord>,
    pub curves: Vec<Curve>,
}

impl StudyOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.is_failure()).count()
    }
}

pub fn run_study(spec: &StudySpec) -> Result<StudyOutput> {
    spec.validate()?;
    match spec.kind {
        StudyKind::Simulate => run_simulate(spec),
        StudyKind::Spectrum => run_spectrum(spec),
        StudyKind::Resolvent => run_resolvent(spec),
        StudyKind::Sweep => run_parameter_sweep(spec),
        StudyKind::ComboMatrix => run_combination_matrix(spec),
        StudyKind::CattaneoEquivalence => run_cattaneo_equivalence(spec),
        StudyKind::SingularLimit => run_singular_limit(spec),
    }
}

fn spectrum_of(model: &ModelConfig) -> Result<SpectrumReport> {
    spectra::eigenvalues(&assemble(model)?)
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

fn least_damped_metrics(record: OutputRecord, report: &SpectrumReport) -> OutputRecord {
    let z = report.least_damped();
    record
        .metric("abscissa", report.abscissa)
        .metric("least_damped_re", z.re)
        .metric("least_damped_im", z.im)
}

pub fn run_spectrum(spec: &StudySpec) -> Result<StudyOutput> {
    let report = spectrum_of(&spec.model)?;
    let mut record = least_damped_metrics(OutputRecord::new(spec, 0, "spectrum", &spec.model, Some(report.dim)), &report)
        .metric("conjugation_defect", report.conjugation_defect())
        .status(Status::from_ok(report.abscissa <= 1e-10));
    if spec.richardson {
        let check = richardson_check(&spec.model)?;
        record = record
            .metric("abscissa_2n", check.fine)
            .metric("richardson_relative", check.relative)
            .metric("richardson_converged", check.converged);
    }
    let mut csv = format!("# abscissa = {:e}\n", report.abscissa);
    csv.push_str(&csv_string(|w| report.write_csv(w))?);
    Ok(StudyOutput {
        records: vec![record],
        curves: vec![Curve::new("spectrum", csv, PlotKind::Spectrum)],
    })
}

/// Abscissas at `n` and `2n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RichardsonCheck {
    pub coarse: f64,
    pub fine: f64,
    pub relative: f64,
    /// Relative change within 5%.
    pub converged: bool,
}

pub fn richardson_check(model: &ModelConfig) -> Result<RichardsonCheck> {
    let mut fine_model = model.clone();
    fine_model.discretization.cells *= 2;
    let (coarse, fine) = rayon::join(|| spectrum_of(model), || spectrum_of(&fine_model));
    let (coarse, fine) = (coarse?.abscissa, fine?.abscissa);
    let relative = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    Ok(RichardsonCheck {
        coarse,
        fine,
        relative,
        converged: relative <= 0.05,
    })
}

pub fn run_resolvent(spec: &StudySpec) -> Result<StudyOutput> {
    let sys = assemble(&spec.model)?;
    let report = spectra::eigenvalues(&sys)?;
    let grid = spec.scan.build(&report)?;
    let scan = resolvent_scan(&sys, &grid)?;
    let worst_ratio = scan
        .samples
        .iter()
        .map(|s| s.norm * report.distance_from_axis(s.lambda))
        .fold(f64::INFINITY, f64::min);
    let finite = scan.samples.iter().all(|s| s.norm.is_finite());
    let z = report.least_damped();
    let offset = (scan.argmax - z.im.abs()).abs() / z.im.abs().max(f64::MIN_POSITIVE);
    let record = least_damped_metrics(OutputRecord::new(spec, 0, "resolvent", &spec.model, Some(sys.dim())), &report)
        .metric("sup_norm", scan.sup_norm)
        .metric("argmax", scan.argmax)
        .metric("argmax_relative_offset", offset)
        .metric("min_norm_times_distance", worst_ratio)
        .metric("samples", scan.samples.len())
        .metric("near_singular", scan.samples.iter().filter(|s| s.near_singular).count())
        .status(Status::from_ok(finite && worst_ratio >= 1.0 - 1e-8));
    let csv = csv_string(|w| scan.write_csv(w))?;
    Ok(StudyOutput {
        records: vec![record],
        curves: vec![Curve::new("resolvent", csv, PlotKind::Resolvent)],
    })
}

pub fn run_simulate(spec: &StudySpec) -> Result<StudyOutput> {
    let sys = assemble(&spec.model)?;
    let mut record = OutputRecord::new(spec, 0, "simulate", &spec.model, Some(sys.dim()));
    let u0: Vec<f64> = match spec.simulate.init {
        InitialData::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..sys.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect()
        }
        InitialData::LeastDampedMode => {
            let (z, x) = spectra::least_damped_mode(&sys)?;
            record = record.metric("abscissa", z.re).metric("least_damped_im", z.im);
            x.iter().map(|c| c.re).collect()
        }
    };
    let traj = simulate(&sys, &u0, spec.simulate.dt, spec.simulate.t_final)?;
    let e0 = traj.energies[0];
    let monotone = traj.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12 * e0);
    record = record
        .metric("dt", spec.simulate.dt)
        .metric("t_final", spec.simulate.t_final)
        .metric("energy_initial", e0)
        .metric("energy_final", *traj.energies.last().expect("non-empty"))
        .metric("max_balance_residual", traj.max_balance_residual)
        .metric("telescoping_defect", traj.telescoping_defect())
        .metric("decay_rate", traj.fit.map(|f| f.rate))
        .metric("fit_residual", traj.fit.map(|f| f.residual))
        .status(Status::from_ok(monotone && traj.max_balance_residual <= 1e-12 * (e0 + 1.0)));
    let csv = csv_string(|w| traj.write_csv(w))?;
    Ok(StudyOutput {
        records: vec![record],
        curves: vec![Curve::new("trajectory", csv, PlotKind::Trajectory)],
    })
}

/// One parameter draw of a sweep.
#[derive(Debug, Clone, PartialEq)]
struct Draw {
    label: String,
    model: ModelConfig,
}

fn sweep_draws(spec: &StudySpec) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ranges = &spec.sweep.ranges;
    let sample = |rng: &mut ChaCha8Rng| {
        let mut model = spec.model.clone();
        for (name, &(lo, hi)) in ranges {
            let value = if hi > lo { (rng.random_range(lo.ln()..hi.ln())).exp() } else { lo };
            *model.params.get_mut(name).expect("validated name") = value;
        }
        model
    };
    let mut draws: Vec<Draw> = (0..spec.sweep.draws)
        .map(|i| Draw {
            label: format!("draw-{i}"),
            model: sample(&mut rng),
        })
        .collect();
    if spec.sweep.slices {
        let mut equal = sample(&mut rng);
        let p = &mut equal.params;
        p.rho2 = p.rho1 * p.b / p.k;
        draws.push(Draw {
            label: "equal-wave-speed".into(),
            model: equal,
        });
        // Shear speed² = k/ρ1 and bending speed² = b/ρ2 pushed to opposite ends of their ranges.
        let mut separated = sample(&mut rng);
        let bound = |name: &str, hi: bool, fallback: f64| {
            ranges.get(name).map_or(fallback, |&(l, h)| if hi { h } else { l })
        };
        let p = &mut separated.params;
        p.k = bound("k", true, 10.0);
        p.rho1 = bound("rho1", false, 0.1);
        p.b = bound("b", false, 0.1);
        p.rho2 = bound("rho2", true, 10.0);
        draws.push(Draw {
            label: "separated-wave-speed".into(),
            model: separated,
        });
    }
    if spec.sweep.diagnostic {
        let mut undamped = spec.model.clone();
        undamped.params.varpi1 = 0.0;
        undamped.params.varpi2 = 0.0;
        draws.push(Draw {
            label: "diagnostic-undamped".into(),
            model: undamped,
        });
    }
    draws
}

/// Abscissas of independent cells, evaluated concurrently in input order.
fn abscissa_records(spec: &StudySpec, cells: Vec<Draw>) -> Result<Vec<OutputRecord>> {
    cells
        .into_par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let report = spectrum_of(&cell.model)?;
            let stable = report.abscissa <= spec.threshold;
            let speeds = cell.model.params.wave_speed_mismatch();
            Ok(least_damped_metrics(OutputRecord::new(spec, i, cell.label, &cell.model, Some(report.dim)), &report)
                .metric("strictly_positive", cell.model.params.is_strictly_positive())
                .metric("wave_speed_mismatch", speeds)
                .status(Status::from_ok(stable)))
        })
        .collect()
}

/// Abscissa of every parameter draw on every requested boundary set. Any abscissa above
/// the threshold is a FAILURE record.
pub fn run_parameter_sweep(spec: &StudySpec) -> Result<StudyOutput> {
    if spec.sweep.ranges.is_empty() {
        return Err(Error::Spec("sweep needs at least one parameter range".into()));
    }
    let draws = sweep_draws(spec);
    let mut cells = Vec::new();
    for bcs in spec.boundary_sets() {
        for d in &draws {
            let mut model = d.model.clone();
            model.bcs = bcs;
            cells.push(Draw {
                label: format!("{}/{}", d.label, bcs.tag()),
                model,
            });
        }
    }
    let records = abscissa_records(spec, cells)?;
    let mut csv = String::from("label,bcs,abscissa,status\n");
    for r in &records {
        let (label, bcs) = r.label.rsplit_once('/').unwrap_or((&r.label, ""));
        csv.push_str(&format!("{label},{bcs},{:e},{:?}\n", r.get("abscissa").unwrap_or(f64::NAN), r.status));
    }
    Ok(StudyOutput {
        records,
        curves: vec![Curve::new("sweep", csv, PlotKind::None)],
    })
}

/// The law of each kind used in the combination matrix.
fn palette(spec: &StudySpec, kind: LawKind) -> KernelSpec {
    let kernel = [&spec.model.law_theta, &spec.model.law_xi]
        .into_iter()
        .find_map(|law| match law {
            KernelSpec::GurtinPipkin { kernel } | KernelSpec::ColemanGurtin { kernel, .. } => Some(kernel.clone()),
            _ => None,
        })
        .unwrap_or_else(|| make_cattaneo(1.0).expect("valid relaxation time"));
    match kind {
        LawKind::GurtinPipkin => KernelSpec::GurtinPipkin { kernel },
        LawKind::Fourier => KernelSpec::Fourier,
        LawKind::Cattaneo => KernelSpec::Cattaneo { tau: spec.combo.tau },
        LawKind::ColemanGurtin => KernelSpec::ColemanGurtin {
            ell: spec.combo.ell,
            kernel,
        },
    }
}

/// All 16 `(θ-law, ξ-law)` pairs on each boundary set, plus a cross-check of the
/// Fourier/Fourier entry against the independent reference assembly.
pub fn run_combination_matrix(spec: &StudySpec) -> Result<StudyOutput> {
    let mut cells = Vec::new();
    for bcs in spec.boundary_sets() {
        for t in LawKind::ALL {
            for x in LawKind::ALL {
                let mut model = spec.model.clone();
                model.bcs = bcs;
                model.law_theta = palette(spec, t);
                model.law_xi = palette(spec, x);
                cells.push(Draw {
                    label: format!("{}/{}/{}", t.tag(), x.tag(), bcs.tag()),
                    model,
                });
            }
        }
    }
    let mut records = abscissa_records(spec, cells)?;
    for r in records.iter_mut().filter(|r| r.label.starts_with("F/F/")) {
        let model = r.model()?;
        if model.discretization.scheme == Scheme::Trig {
            continue;
        }
        let (ours, reference) = rayon::join(|| spectrum_of(&model), || assemble_fourier_reference(&model).and_then(|s| spectra::eigenvalues(&s)));
        let (ours, reference) = (ours?, reference?);
        let mismatch = matched_distance(&ours.eigenvalues, &reference.eigenvalues)?;
        let scale = 1.0 + ours.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        r.metrics.insert("reference_mismatch".into(), mismatch.into());
        if mismatch > spec.cattaneo.tolerance * scale {
            r.status = Status::Failure;
        }
    }
    let mut curves = Vec::new();
    for bcs in spec.boundary_sets() {
        let mut csv = String::from("theta\\xi");
        for x in LawKind::ALL {
            csv.push_str(&format!(",{}", x.tag()));
        }
        csv.push('\n');
        for t in LawKind::ALL {
            csv.push_str(t.tag());
            for x in LawKind::ALL {
                let label = format!("{}/{}/{}", t.tag(), x.tag(), bcs.tag());
                let a = records.iter().find(|r| r.label == label).and_then(|r| r.get("abscissa"));
                csv.push_str(&format!(",{:e}", a.unwrap_or(f64::NAN)));
            }
            csv.push('\n');
        }
        curves.push(Curve::new(&format!("table_{}", bcs.tag()), csv, PlotKind::None));
    }
    Ok(StudyOutput { records, curves })
}

/// Spectra of the history-mode model with kernels `make_cattaneo(τ)`, `make_cattaneo(ς)`
/// against the explicit heat-flux model, for every `(τ, ς)` pair.
pub fn run_cattaneo_equivalence(spec: &StudySpec) -> Result<StudyOutput> {
    let pairs: Vec<(f64, f64)> = spec
        .cattaneo
        .taus
        .iter()
        .flat_map(|&t| spec.cattaneo.varsigmas.iter().map(move |&s| (t, s)))
        .collect();
    let records = pairs
        .into_par_iter()
        .enumerate()
        .map(|(i, (tau, varsigma))| {
            let mut flux_model = spec.model.clone();
            flux_model.law_theta = KernelSpec::Cattaneo { tau };
            flux_model.law_xi = KernelSpec::Cattaneo { tau: varsigma };
            let mut modes_model = flux_model.clone();
            modes_model.law_theta = KernelSpec::GurtinPipkin { kernel: make_cattaneo(tau)? };
            modes_model.law_xi = KernelSpec::GurtinPipkin {
                kernel: make_cattaneo(varsigma)?,
            };
            let (modes, flux) = (assemble(&modes_model)?, assemble_cattaneo_flux(&flux_model)?);
            if modes.dim() != flux.dim() {
                return Err(Error::Assembly(format!(
                    "history-mode and flux formulations have dimensions {} and {}",
                    modes.dim(),
                    flux.dim()
                )));
            }
            let (a, b) = rayon::join(|| spectra::eigenvalues(&modes), || spectra::eigenvalues(&flux));
            let (a, b) = (a?, b?);
            let mismatch = matched_distance(&a.eigenvalues, &b.eigenvalues)?;
            let scale = a.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok(OutputRecord::new(spec, i, format!("tau={tau}/varsigma={varsigma}"), &modes_model, Some(modes.dim()))
                .metric("tau", tau)
                .metric("varsigma", varsigma)
                .metric("max_mismatch", mismatch)
                .metric("relative_mismatch", mismatch / scale.max(f64::MIN_POSITIVE))
                .metric("abscissa", a.abscissa)
                .status(Status::from_ok(mismatch <= spec.cattaneo.tolerance)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyOutput {
        records,
        curves: Vec::new(),
    })
}

/// Kernel at rung `eps`: `g_ε` on the Fourier path, `(1-ℓ)g_ε + ℓg` on the CG path.
pub fn limit_kernel(base: &PronyKernel, target: LimitTarget, eps: f64) -> Result<PronyKernel> {
    let rescaled = base.rescale(eps)?;
    Ok(match target {
        LimitTarget::Fourier => rescaled,
        LimitTarget::ColemanGurtin { ell } => rescaled.scaled(1.0 - ell)?.combined(&base.scaled(ell)?),
    })
}

/// The limit model itself: Fourier/Fourier, or Coleman–Gurtin with the base kernel.
pub fn limit_target_model(model: &ModelConfig, base: &PronyKernel, target: LimitTarget) -> ModelConfig {
    let law = match target {
        LimitTarget::Fourier => KernelSpec::Fourier,
        LimitTarget::ColemanGurtin { ell } => KernelSpec::ColemanGurtin { ell, kernel: base.clone() },
    };
    ModelConfig {
        law_theta: law.clone(),
        law_xi: law,
        ..model.clone()
    }
}

/// The `count` eigenvalues of smallest modulus.
pub fn lowest_eigenvalues(report: &SpectrumReport, count: usize) -> Vec<Eigenvalue> {
    let mut ev = report.eigenvalues.clone();
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
    ev.truncate(count);
    ev
}

/// `max_i min_j |λ_j - t_i| / |t_i|` over the tracked target eigenvalues `t`.
pub fn tracked_distance(tracked: &[Eigenvalue], spectrum: &[Eigenvalue]) -> f64 {
    tracked
        .iter()
        .map(|t| {
            let d = spectrum
                .iter()
                .map(|z| (z.re - t.re).hypot(z.im - t.im))
                .fold(f64::INFINITY, f64::min);
            d / t.norm()
        })
        .fold(0.0, f64::max)
}

fn base_limit_kernel(spec: &StudySpec) -> Result<PronyKernel> {
    let kernel = match &spec.limit.kernel {
        Some(k) => k.clone(),
        None => spec
            .model
            .law_theta
            .memory_kernel()?
            .ok_or_else(|| Error::Spec("the limit study needs a memory kernel; set study.kernel.terms".into()))?,
    };
    kernel.normalize_unit_mass()
}

/// Rescaled-kernel models along the ε ladder against the limit model, one record per
/// rung and a closing summary record that carries the verdict.
pub fn run_singular_limit(spec: &StudySpec) -> Result<StudyOutput> {
    let base = base_limit_kernel(spec)?;
    let target = spec.limit.target;
    let target_model = limit_target_model(&spec.model, &base, target);
    let target_report = spectrum_of(&target_model)?;
    let tracked = lowest_eigenvalues(&target_report, spec.limit.tracked);
    let mut records = spec
        .limit
        .eps
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let kernel = limit_kernel(&base, target, eps)?;
            let model = ModelConfig {
                law_theta: KernelSpec::GurtinPipkin { kernel: kernel.clone() },
                law_xi: KernelSpec::GurtinPipkin { kernel },
                ..spec.model.clone()
            };
            let sys = assemble(&model)?;
            let report = spectra::eigenvalues(&sys)?;
            let distance = tracked_distance(&tracked, &report.eigenvalues);
            let mut record = OutputRecord::new(spec, i, format!("eps={eps}"), &model, Some(sys.dim()))
                .metric("eps", eps)
                .metric("distance", distance)
                .metric("abscissa", report.abscissa);
            if eps == 1.0 && target == LimitTarget::Fourier {
                let unscaled = ModelConfig {
                    law_theta: KernelSpec::GurtinPipkin { kernel: base.clone() },
                    law_xi: KernelSpec::GurtinPipkin { kernel: base.clone() },
                    ..spec.model.clone()
                };
                let plain = assemble(&unscaled)?;
                let defect = max_abs((sys.generator() - plain.generator()).as_ref())
                    .max(max_abs((sys.gram() - plain.gram()).as_ref()));
                record = record.metric("rescale_identity_defect", defect);
            }
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = records.iter().map(|r| r.get("distance").expect("set above")).collect();
    let tail = &distances[distances.len().saturating_sub(3)..];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let final_distance = *distances.last().expect("non-empty ladder");
    let within = final_distance <= spec.limit.tolerance;
    let target_label = match target {
        LimitTarget::Fourier => "fourier".to_string(),
        LimitTarget::ColemanGurtin { ell } => format!("cg(ell={ell})"),
    };
    records.push(
        OutputRecord::new(spec, records.len(), format!("summary/{target_label}"), &target_model, Some(target_report.dim))
            .metric("final_distance", final_distance)
            .metric("tail_decreasing", decreasing)
            .metric("tracked", tracked.len())
            .status(Status::from_ok(decreasing && within)),
    );
    let mut csv = String::from("eps,distance\n");
    for (r, d) in spec.limit.eps.iter().zip(&distances) {
        csv.push_str(&format!("{r:e},{d:e}\n"));
    }
    Ok(StudyOutput {
        records,
        curves: vec![Curve::new("limit", csv, PlotKind::Limit)],
    })
}

#[cfg(test)]
mod tests;
