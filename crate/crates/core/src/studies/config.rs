//! Flat key/value configuration files.
//!
//! Files are TOML; nested tables and dotted keys are flattened to dotted paths, so
//! `params.rho1 = 2` and `[params]\nrho1 = 2` are the same key. Every leaf must be a
//! known key. Integers are accepted wherever a real number is expected.
//!
//! | key | type | default |
//! |---|---|---|
//! | `params.{rho1,rho2,rho3,rho4,k,b,gamma,sigma,varpi1,varpi2,length}` | real | 1 |
//! | `law.{theta,xi}.variant` | `gp`, `fourier`, `cattaneo`, `cg` | `gp` |
//! | `law.{theta,xi}.kernel.terms` | list of `[c, b]` (`gp`, `cg`) | `[[1, 1]]` |
//! | `law.{theta,xi}.tau` | real (`cattaneo`) | |
//! | `law.{theta,xi}.ell` | real in (0, 1) (`cg`) | |
//! | `bcs` | `mixed`, `dirichlet` | `mixed` |
//! | `mesh.n` | cells or modes | 32 |
//! | `mesh.scheme` | `p1`, `p1p0`, `trig` | `p1p0` |
//! | `thermal` | bool | true |
//! | `study.kind` | `simulate`, `spectrum`, `resolvent`, `sweep`, `combo`, `cattaneo-eq`, `limit` | `spectrum` |
//! | `study.seed` | integer | 0 |
//! | `study.output` | path | |
//! | `study.plot` | bool | false |
//! | `study.threshold` | abscissa gate | -1e-6 |
//! | `study.bcs` | list of boundary sets (sweep, combo) | `[bcs]` |
//! | `study.draws` | integer (sweep) | 50 |
//! | `study.sweep.<param>` | `[lo, hi]` log-uniform range (sweep) | `[0.1, 10]` for the 8 mechanical/coupling parameters |
//! | `study.slices` | add equal and 100x-separated wave-speed draws (sweep) | true |
//! | `study.diagnostic` | add an undamped `varpi1 = varpi2 = 0` draw (sweep) | false |
//! | `study.combo.tau`, `study.combo.ell` | Cattaneo time and CG weight in the law matrix | 1, 0.5 |
//! | `study.tau`, `study.varsigma` | lists of relaxation times (cattaneo-eq) | `[0.1, 1]` |
//! | `study.match_tol` | eigenvalue mismatch gate (cattaneo-eq, combo) | 1e-8 |
//! | `study.eps` | strictly decreasing ladder in (0, 1] (limit) | `2^-k`, k = 0..6 |
//! | `study.target` | `fourier`, `cg` (limit) | `fourier` |
//! | `study.ell` | CG weight of the target (limit) | 0.5 |
//! | `study.kernel.terms` | base kernel, normalized to unit mass (limit) | θ-law kernel |
//! | `study.tracked` | tracked eigenvalues (limit) | 10 |
//! | `study.limit_tol` | final relative distance gate (limit) | 1e-2 |
//! | `study.dt`, `study.t_final` | step and horizon (simulate) | 0.01, 10 |
//! | `study.init` | `random`, `mode` (simulate) | `random` |
//! | `study.richardson` | also solve at 2n and compare abscissas (spectrum) | false |
//! | `study.scan.{log_min,log_max,log_points,anchors,window,window_points}` | resolvent grid | see `ScanGrid` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::assembly::{Discretization, ModelConfig, PhysicalParams, Scheme};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PronyKernel};
use crate::spaces::BoundarySet;
use crate::spectra::ScanGrid;

use super::{CattaneoSpec, ComboSpec, LimitSpec, LimitTarget, SimulateSpec, StudyKind, StudySpec, SweepSpec, InitialData};

/// Flattened view of a config document.
pub type FlatConfig = BTreeMap<String, Value>;

const SWEEP_PARAMS: [&str; 8] = ["rho1", "rho2", "rho3", "rho4", "k", "b", "gamma", "sigma"];

/// Flattens a TOML document to dotted keys.
pub fn flatten(text: &str) -> Result<FlatConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
    let mut flat = FlatConfig::new();
    flatten_into(&mut flat, "", table);
    Ok(flat)
}

fn flatten_into(flat: &mut FlatConfig, prefix: &str, table: toml::Table) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten_into(flat, &key, t),
            leaf => {
                flat.insert(key, leaf);
            }
        }
    }
}

fn is_known(key: &str) -> bool {
    const FIXED: &[&str] = &[
        "bcs",
        "mesh.n",
        "mesh.scheme",
        "thermal",
        "study.kind",
        "study.seed",
        "study.output",
        "study.plot",
        "study.threshold",
        "study.bcs",
        "study.draws",
        "study.slices",
        "study.diagnostic",
        "study.combo.tau",
        "study.combo.ell",
        "study.tau",
        "study.varsigma",
        "study.match_tol",
        "study.eps",
        "study.target",
        "study.ell",
        "study.kernel.terms",
        "study.tracked",
        "study.limit_tol",
        "study.dt",
        "study.t_final",
        "study.init",
        "study.richardson",
        "study.scan.log_min",
        "study.scan.log_max",
        "study.scan.log_points",
        "study.scan.anchors",
        "study.scan.window",
        "study.scan.window_points",
    ];
    if FIXED.contains(&key) {
        return true;
    }
    if let Some(p) = key.strip_prefix("params.") {
        return PhysicalParams::NAMES.contains(&p);
    }
    if let Some(p) = key.strip_prefix("study.sweep.") {
        return PhysicalParams::NAMES.contains(&p);
    }
    for channel in ["law.theta.", "law.xi."] {
        if let Some(rest) = key.strip_prefix(channel) {
            return matches!(rest, "variant" | "kernel.terms" | "tau" | "ell");
        }
    }
    false
}

/// Typed, consumable access to a flat config; every key must be taken exactly once
/// before [`Reader::finish`].
struct Reader {
    flat: FlatConfig,
}

impl Reader {
    fn new(flat: FlatConfig) -> Result<Self> {
        if let Some(k) = flat.keys().find(|k| !is_known(k)) {
            return Err(Error::UnknownKey(k.clone()));
        }
        Ok(Self { flat })
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.flat.remove(key)
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| as_real(key, &v)).transpose()
    }

    fn uint(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(v) => Err(Error::config(key, format!("expected a non-negative integer, found {v}"))),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(v) => Err(Error::config(key, format!("expected true or false, found {v}"))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Error::config(key, format!("expected a string, found {v}"))),
        }
    }

    fn reals(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items.iter().map(|v| as_real(key, v)).collect::<Result<_>>().map(Some),
            Some(v) => Err(Error::config(key, format!("expected a list of numbers, found {v}"))),
        }
    }

    fn strings(&mut self, key: &str) -> Result<Option<Vec<String>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    v => Err(Error::config(key, format!("expected strings, found {v}"))),
                })
                .collect::<Result<_>>()
                .map(Some),
            Some(Value::String(s)) => Ok(Some(vec![s])),
            Some(v) => Err(Error::config(key, format!("expected a list of strings, found {v}"))),
        }
    }

    fn terms(&mut self, key: &str) -> Result<Option<PronyKernel>> {
        let Some(v) = self.take(key) else {
            return Ok(None);
        };
        let Value::Array(rows) = v else {
            return Err(Error::config(key, "expected a list of [c, b] pairs"));
        };
        let mut pairs = Vec::with_capacity(rows.len());
        for row in &rows {
            match row {
                Value::Array(cb) if cb.len() == 2 => pairs.push((as_real(key, &cb[0])?, as_real(key, &cb[1])?)),
                _ => return Err(Error::config(key, "expected a list of [c, b] pairs")),
            }
        }
        PronyKernel::from_pairs(&pairs)
            .map(Some)
            .map_err(|e| Error::config(key, e.to_string()))
    }

    fn finish(self) -> Result<()> {
        match self.flat.keys().next() {
            Some(k) => Err(Error::config(k.clone(), "key is not valid in this position")),
            None => Ok(()),
        }
    }
}

fn as_real(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        v => Err(Error::config(key, format!("expected a number, found {v}"))),
    }
}

fn parse_bcs(key: &str, tag: &str) -> Result<BoundarySet> {
    BoundarySet::from_tag(tag).ok_or_else(|| Error::config(key, format!("unknown boundary set `{tag}` (mixed, dirichlet)")))
}

fn read_law(r: &mut Reader, channel: &str) -> Result<KernelSpec> {
    let key = |s: &str| format!("law.{channel}.{s}");
    let variant = r.string(&key("variant"))?;
    let terms = r.terms(&key("kernel.terms"))?;
    let tau = r.real(&key("tau"))?;
    let ell = r.real(&key("ell"))?;
    let default_kernel = || PronyKernel::from_pairs(&[(1.0, 1.0)]);
    let unused = |name: &str, present: bool| -> Result<()> {
        if present {
            Err(Error::config(key(name), format!("not used by the `{}` law", variant.as_deref().unwrap_or("gp"))))
        } else {
            Ok(())
        }
    };
    let spec = match variant.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("gp") | Some("gurtin-pipkin") => {
            unused("tau", tau.is_some())?;
            unused("ell", ell.is_some())?;
            KernelSpec::GurtinPipkin {
                kernel: terms.map_or_else(default_kernel, Ok)?,
            }
        }
        Some("f") | Some("fourier") => {
            unused("tau", tau.is_some())?;
            unused("ell", ell.is_some())?;
            unused("kernel.terms", terms.is_some())?;
            KernelSpec::Fourier
        }
        Some("c") | Some("cattaneo") => {
            unused("ell", ell.is_some())?;
            unused("kernel.terms", terms.is_some())?;
            KernelSpec::Cattaneo {
                tau: tau.ok_or_else(|| Error::config(key("tau"), "required by the cattaneo law"))?,
            }
        }
        Some("cg") | Some("coleman-gurtin") => {
            unused("tau", tau.is_some())?;
            KernelSpec::ColemanGurtin {
                ell: ell.ok_or_else(|| Error::config(key("ell"), "required by the cg law"))?,
                kernel: terms.map_or_else(default_kernel, Ok)?,
            }
        }
        Some(other) => {
            return Err(Error::config(key("variant"), format!("unknown law `{other}` (gp, fourier, cattaneo, cg)")));
        }
    };
    spec.validate().map_err(|e| Error::config(key("variant"), e.to_string()))?;
    Ok(spec)
}

fn read_model(r: &mut Reader) -> Result<ModelConfig> {
    let mut params = PhysicalParams::default();
    for name in PhysicalParams::NAMES {
        if let Some(v) = r.real(&format!("params.{name}"))? {
            *params.get_mut(name).expect("known parameter") = v;
        }
    }
    params.validate().map_err(|e| Error::config("params", e.to_string()))?;
    let law_theta = read_law(r, "theta")?;
    let law_xi = read_law(r, "xi")?;
    let bcs = match r.string("bcs")? {
        Some(tag) => parse_bcs("bcs", &tag)?,
        None => BoundarySet::MixedDirichletNeumann,
    };
    let mut discretization = Discretization::default();
    if let Some(n) = r.uint("mesh.n")? {
        discretization.cells = n as usize;
    }
    if let Some(tag) = r.string("mesh.scheme")? {
        discretization.scheme =
            Scheme::from_tag(&tag).ok_or_else(|| Error::config("mesh.scheme", format!("unknown scheme `{tag}` (p1, p1p0, trig)")))?;
    }
    let thermal = r.boolean("thermal")?.unwrap_or(true);
    let config = ModelConfig {
        params,
        law_theta,
        law_xi,
        bcs,
        discretization,
        thermal,
    };
    config.validate().map_err(|e| Error::config("mesh", e.to_string()))?;
    Ok(config)
}

/// Parses the model keys only; any `study.*` key is rejected.
pub fn parse_model(text: &str) -> Result<ModelConfig> {
    let mut r = Reader::new(flatten(text)?)?;
    let config = read_model(&mut r)?;
    r.finish()?;
    Ok(config)
}

/// Parses a full study file.
pub fn parse_study(text: &str) -> Result<StudySpec> {
    let mut r = Reader::new(flatten(text)?)?;
    let model = read_model(&mut r)?;
    let mut spec = StudySpec::new(StudyKind::Spectrum, model);
    if let Some(kind) = r.string("study.kind")? {
        spec.kind = StudyKind::from_tag(&kind).ok_or_else(|| Error::config("study.kind", format!("unknown study `{kind}`")))?;
    }
    if let Some(seed) = r.uint("study.seed")? {
        spec.seed = seed;
    }
    spec.output = r.string("study.output")?.map(PathBuf::from);
    spec.plot = r.boolean("study.plot")?.unwrap_or(false);
    if let Some(t) = r.real("study.threshold")? {
        spec.threshold = t;
    }
    if let Some(tags) = r.strings("study.bcs")? {
        spec.bcs = tags.iter().map(|t| parse_bcs("study.bcs", t)).collect::<Result<_>>()?;
    }

    let mut sweep = SweepSpec::default();
    if let Some(d) = r.uint("study.draws")? {
        sweep.draws = d as usize;
    }
    let mut ranges = BTreeMap::new();
    for name in PhysicalParams::NAMES {
        let key = format!("study.sweep.{name}");
        if let Some(range) = r.reals(&key)? {
            match range[..] {
                [lo, hi] => {
                    ranges.insert(name.to_string(), (lo, hi));
                }
                _ => return Err(Error::Spec(format!("`{key}` must be [lo, hi], found {} values", range.len()))),
            }
        }
    }
    if !ranges.is_empty() {
        sweep.ranges = ranges;
    }
    if let Some(b) = r.boolean("study.slices")? {
        sweep.slices = b;
    }
    if let Some(b) = r.boolean("study.diagnostic")? {
        sweep.diagnostic = b;
    }
    spec.sweep = sweep;

    let mut combo = ComboSpec::default();
    if let Some(t) = r.real("study.combo.tau")? {
        combo.tau = t;
    }
    if let Some(l) = r.real("study.combo.ell")? {
        combo.ell = l;
    }
    spec.combo = combo;

    let mut cat = CattaneoSpec::default();
    if let Some(t) = r.reals("study.tau")? {
        cat.taus = t;
    }
    if let Some(s) = r.reals("study.varsigma")? {
        cat.varsigmas = s;
    }
    if let Some(tol) = r.real("study.match_tol")? {
        cat.tolerance = tol;
    }
    spec.cattaneo = cat;

    let mut limit = LimitSpec::default();
    if let Some(eps) = r.reals("study.eps")? {
        limit.eps = eps;
    }
    let ell = r.real("study.ell")?;
    match r.string("study.target")?.as_deref() {
        None | Some("fourier") => {
            if ell.is_some() {
                return Err(Error::config("study.ell", "only used with study.target = \"cg\""));
            }
        }
        Some("cg") => limit.target = LimitTarget::ColemanGurtin { ell: ell.unwrap_or(0.5) },
        Some(other) => return Err(Error::config("study.target", format!("unknown target `{other}` (fourier, cg)"))),
    }
    limit.kernel = r.terms("study.kernel.terms")?;
    if let Some(n) = r.uint("study.tracked")? {
        limit.tracked = n as usize;
    }
    if let Some(tol) = r.real("study.limit_tol")? {
        limit.tolerance = tol;
    }
    spec.limit = limit;

    let mut sim = SimulateSpec::default();
    if let Some(dt) = r.real("study.dt")? {
        sim.dt = dt;
    }
    if let Some(t) = r.real("study.t_final")? {
        sim.t_final = t;
    }
    match r.string("study.init")?.as_deref() {
        None | Some("random") => {}
        Some("mode") => sim.init = InitialData::LeastDampedMode,
        Some(other) => return Err(Error::config("study.init", format!("unknown initial data `{other}` (random, mode)"))),
    }
    spec.simulate = sim;
    spec.richardson = r.boolean("study.richardson")?.unwrap_or(false);

    let mut scan = ScanGrid::default();
    if let Some(v) = r.real("study.scan.log_min")? {
        scan.log_min = v;
    }
    if let Some(v) = r.real("study.scan.log_max")? {
        scan.log_max = v;
    }
    if let Some(v) = r.uint("study.scan.log_points")? {
        scan.log_points = v as usize;
    }
    if let Some(v) = r.uint("study.scan.anchors")? {
        scan.anchors = v as usize;
    }
    if let Some(v) = r.real("study.scan.window")? {
        scan.window = v;
    }
    if let Some(v) = r.uint("study.scan.window_points")? {
        scan.window_points = v as usize;
    }
    spec.scan = scan;

    r.finish()?;
    spec.validate()?;
    Ok(spec)
}

/// Reads and parses a study file.
pub fn load_study(path: &Path) -> Result<StudySpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_study(&text)
}

fn law_echo(flat: &mut FlatConfig, channel: &str, law: &KernelSpec) {
    let key = |s: &str| format!("law.{channel}.{s}");
    let terms = |k: &PronyKernel| {
        Value::Array(
            k.to_pairs()
                .into_iter()
                .map(|(c, b)| Value::Array(vec![Value::Float(c), Value::Float(b)]))
                .collect(),
        )
    };
    match law {
        KernelSpec::GurtinPipkin { kernel } => {
            flat.insert(key("variant"), Value::String("gp".into()));
            flat.insert(key("kernel.terms"), terms(kernel));
        }
        KernelSpec::Fourier => {
            flat.insert(key("variant"), Value::String("fourier".into()));
        }
        KernelSpec::Cattaneo { tau } => {
            flat.insert(key("variant"), Value::String("cattaneo".into()));
            flat.insert(key("tau"), Value::Float(*tau));
        }
        KernelSpec::ColemanGurtin { ell, kernel } => {
            flat.insert(key("variant"), Value::String("cg".into()));
            flat.insert(key("ell"), Value::Float(*ell));
            flat.insert(key("kernel.terms"), terms(kernel));
        }
    }
}

/// Flat key/value echo of a model; [`parse_model`] of [`echo_to_toml`] restores it.
pub fn echo(config: &ModelConfig) -> FlatConfig {
    let mut flat = FlatConfig::new();
    for name in PhysicalParams::NAMES {
        flat.insert(format!("params.{name}"), Value::Float(config.params.get(name).expect("known parameter")));
    }
    law_echo(&mut flat, "theta", &config.law_theta);
    law_echo(&mut flat, "xi", &config.law_xi);
    flat.insert("bcs".into(), Value::String(config.bcs.tag().into()));
    flat.insert("mesh.n".into(), Value::Integer(config.discretization.cells as i64));
    flat.insert("mesh.scheme".into(), Value::String(config.discretization.scheme.tag().into()));
    flat.insert("thermal".into(), Value::Boolean(config.thermal));
    flat
}

/// Writes a flat config as TOML with quoted dotted keys.
pub fn echo_to_toml(flat: &FlatConfig) -> Result<String> {
    toml::to_string(flat).map_err(|e| Error::config("<echo>", e.to_string()))
}

/// JSON form of a flat config, as stored in output records.
pub fn echo_to_json(flat: &FlatConfig) -> serde_json::Map<String, serde_json::Value> {
    flat.iter()
        .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("TOML values map to JSON")))
        .collect()
}

/// Inverse of [`echo_to_json`].
pub fn echo_from_json(map: &serde_json::Map<String, serde_json::Value>) -> Result<FlatConfig> {
    map.iter()
        .map(|(k, v)| {
            let value: Value = serde_json::from_value(v.clone()).map_err(|e| Error::config(k.clone(), e.to_string()))?;
            Ok((k.clone(), value))
        })
        .collect()
}

/// The default eight swept parameters with the range `[0.1, 10]`.
pub(crate) fn default_ranges() -> BTreeMap<String, (f64, f64)> {
    SWEEP_PARAMS.iter().map(|p| (p.to_string(), (0.1, 10.0))).collect()
}
