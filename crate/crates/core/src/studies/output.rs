//! File emission: JSON-lines records, CSV curves and gnuplot scripts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{StudyKind, StudyOutput};
use crate::error::Result;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "THERMOBEAM_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Spectrum,
    Trajectory,
    Resolvent,
    Limit,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub csv: String,
    pub plot: PlotKind,
}

impl Curve {
    pub fn new(name: &str, csv: String, plot: PlotKind) -> Self {
        Self {
            name: name.to_string(),
            csv,
            plot,
        }
    }
}

/// Where a study writes its files.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub records: PathBuf,
    pub dir: PathBuf,
    pub stem: String,
    /// Explicit path of the first curve (`--out something.csv`).
    pub primary_csv: Option<PathBuf>,
}

impl OutputPaths {
    /// `out` may name a `.csv` file (first curve there, records beside it), a `.jsonl`
    /// file (records there, curves beside it) or a directory. Relative paths are taken
    /// inside `$THERMOBEAM_OUT_DIR` when it is set.
    pub fn resolve(kind: StudyKind, out: Option<&Path>) -> Self {
        let env_dir = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        Self::resolve_in(kind, out, env_dir.as_deref())
    }

    pub fn resolve_in(kind: StudyKind, out: Option<&Path>, env_dir: Option<&Path>) -> Self {
        let base = env_dir.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        let out = out.map(|p| if p.is_relative() { base.join(p) } else { p.to_path_buf() });
        let tag = kind.tag().to_string();
        match out {
            Some(p) => {
                let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or(&tag).to_string();
                let dir = p.parent().map_or_else(|| base.clone(), Path::to_path_buf);
                match ext.as_deref() {
                    Some("csv") => Self {
                        records: p.with_extension("jsonl"),
                        dir,
                        stem,
                        primary_csv: Some(p),
                    },
                    Some("jsonl") | Some("json") => Self {
                        records: p.clone(),
                        dir,
                        stem,
                        primary_csv: None,
                    },
                    _ => Self {
                        records: p.join(format!("{tag}.jsonl")),
                        dir: p,
                        stem: tag,
                        primary_csv: None,
                    },
                }
            }
            None => Self {
                records: base.join(format!("{tag}.jsonl")),
                dir: base,
                stem: tag,
                primary_csv: None,
            },
        }
    }

    pub fn curve_path(&self, index: usize, name: &str) -> PathBuf {
        match (&self.primary_csv, index) {
            (Some(p), 0) => p.clone(),
            _ => self.dir.join(format!("{}_{name}.csv", self.stem)),
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(())
}

/// Writes records, curves and (when `plot`) gnuplot scripts; returns the written paths.
pub fn write_output(output: &StudyOutput, paths: &OutputPaths, plot: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    create_parent(&paths.records)?;
    let mut w = BufWriter::new(fs::File::create(&paths.records)?);
    for r in &output.records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    written.push(paths.records.clone());
    for (i, curve) in output.curves.iter().enumerate() {
        let path = paths.curve_path(i, &curve.name);
        create_parent(&path)?;
        fs::write(&path, &curve.csv)?;
        written.push(path.clone());
        if plot {
            if let Some(script) = plot_script(curve.plot, &path) {
                let gp = path.with_extension("gp");
                fs::write(&gp, script)?;
                written.push(gp);
            }
        }
    }
    Ok(written)
}

/// Gnuplot script rendering `csv` to a PNG next to it.
pub fn plot_script(kind: PlotKind, csv: &Path) -> Option<String> {
    let data = csv.file_name()?.to_string_lossy().into_owned();
    let png = csv.with_extension("png").file_name()?.to_string_lossy().into_owned();
    let body = match kind {
        PlotKind::Spectrum => "set xlabel 'Re λ'\nset ylabel 'Im λ'\nset grid\nplot DATA using 1:2 with points pt 7 ps 0.5 title 'eigenvalues'\n",
        PlotKind::Trajectory => "set xlabel 't'\nset ylabel 'E(t)'\nset logscale y\nplot DATA using 1:2 with lines title 'energy'\n",
        PlotKind::Resolvent => "set xlabel 'λ'\nset ylabel '‖(iλ - A)^{-1}‖'\nset logscale xy\nplot DATA using 1:2 with linespoints title 'resolvent norm'\n",
        PlotKind::Limit => "set xlabel 'ε'\nset ylabel 'relative distance'\nset logscale xy\nplot DATA using 1:2 with linespoints title 'tracked eigenvalues'\n",
        PlotKind::None => return None,
    };
    Some(format!(
        "# gnuplot {data}\nset datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\nset output '{png}'\nDATA = '{data}'\n{body}"
    ))
}
