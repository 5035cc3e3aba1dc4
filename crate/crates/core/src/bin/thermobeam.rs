//! Command-line front end for the studies.
//!
//! Exit status: 0 on success, 1 when a study emits FAILURE records, 2 on configuration or
//! I/O errors, 3 on numerical errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermobeam::assembly::ModelConfig;
use thermobeam::studies::{config, run_study, write_output, OutputPaths, StudyKind, StudySpec};
use thermobeam::Error;

#[derive(Parser)]
#[command(name = "thermobeam", version, about = "Spectral and energy studies of a thermoelastic Timoshenko beam with memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one model with the implicit midpoint rule and fit the energy decay.
    Simulate(Common),
    /// All eigenvalues and the spectral abscissa of one model.
    Spectrum(Common),
    /// Resolvent norms along the imaginary axis.
    Resolvent(Common),
    /// Abscissas over random parameter draws.
    Sweep(Common),
    /// Abscissas of all 16 heat-law pairs.
    Combo(Common),
    /// History-mode versus heat-flux spectra for Cattaneo laws.
    #[command(name = "cattaneo-eq")]
    CattaneoEq(Common),
    /// Rescaled-kernel ladder toward the Fourier or Coleman–Gurtin model.
    Limit(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML config; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output `.csv`, `.jsonl` or directory; relative paths resolve inside $THERMOBEAM_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random draws and initial data.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write gnuplot scripts next to the CSV curves.
    #[arg(long)]
    plot: bool,
}

impl Command {
    fn split(self) -> (StudyKind, Common) {
        match self {
            Command::Simulate(c) => (StudyKind::Simulate, c),
            Command::Spectrum(c) => (StudyKind::Spectrum, c),
            Command::Resolvent(c) => (StudyKind::Resolvent, c),
            Command::Sweep(c) => (StudyKind::Sweep, c),
            Command::Combo(c) => (StudyKind::ComboMatrix, c),
            Command::CattaneoEq(c) => (StudyKind::CattaneoEquivalence, c),
            Command::Limit(c) => (StudyKind::SingularLimit, c),
        }
    }
}

fn load(kind: StudyKind, args: &Common) -> Result<StudySpec, Error> {
    let mut spec = match &args.config {
        Some(path) => config::load_study(path)?,
        None => StudySpec::new(kind, ModelConfig::default()),
    };
    spec.kind = kind;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if args.out.is_some() {
        spec.output = args.out.clone();
    }
    spec.plot |= args.plot;
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    let spec = match load(kind, &args) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("thermobeam: {e}");
            return ExitCode::from(2);
        }
    };
    let output = match run_study(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("thermobeam: {e}");
            return ExitCode::from(if e.is_config_error() { 2 } else { 3 });
        }
    };
    let paths = OutputPaths::resolve(kind, spec.output.as_deref());
    let written = match write_output(&output, &paths, spec.plot) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("thermobeam: {e}");
            return ExitCode::from(2);
        }
    };
    for r in &output.records {
        let mut line = format!("{:<8} {}", serde_json::to_string(&r.status).unwrap_or_default().trim_matches('"'), r.label);
        for key in ["abscissa", "sup_norm", "decay_rate", "max_mismatch", "distance", "final_distance"] {
            if let Some(v) = r.get(key) {
                line.push_str(&format!("  {key}={v:.6e}"));
            }
        }
        println!("{line}");
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    let failures = output.failures();
    if failures > 0 {
        eprintln!("thermobeam: {failures} FAILURE record(s)");
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
