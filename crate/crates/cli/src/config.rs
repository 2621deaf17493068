//! Run configuration documents (JSON or TOML, chosen by file extension).
//!
//! ```toml
//! [medium]
//! eps = 1.0
//! mu = 1.0
//! nu_e = { type = "exp_poly", terms = [{ poly_re = [1.0], z_re = -1.0 }] }
//! nu_h = "kernels/magnetic.json"   # a kernel document file, relative to this file
//!
//! [simulate]
//! dt = 0.01
//! T = 50.0
//! modes = [{ k = 1.0, amplitude = 1.0 }]
//! # or: cavity = { L = 1.0, n_max = 200, amplitudes = { rule = "power", exponent = 1.5 } }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use dispersia_core::dispersion::SampledGrid;
use dispersia_core::modal::{cavity_modes, AmplitudeRule};
use dispersia_core::{Kernel, KernelDocument, MediumSpec, ModeSpec, RunOptions};
use serde::de::{self, DeserializeOwned, MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::error::{CliError, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Toml,
}

fn format_of(path: &Path) -> Result<Format, Diagnostic> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Format::Json),
        Some("toml") => Ok(Format::Toml),
        _ => Err(Diagnostic::field("", "unrecognized extension; expected .json or .toml").in_file(path)),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a JSON or TOML document, reporting the failing field path and line.
pub fn parse_document<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, Diagnostic> {
    let diag = |line: Option<usize>, field: String, message: String| Diagnostic {
        file: Some(path.to_path_buf()),
        line,
        field: if field == "." { String::new() } else { field },
        message,
    };
    match format_of(path)? {
        Format::Json => {
            let mut de = serde_json::Deserializer::from_str(text);
            let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
                let line = Some(e.inner().line());
                diag(line, e.path().to_string(), strip_position(&e.inner().to_string()))
            })?;
            de.end().map_err(|e| diag(Some(e.line()), String::new(), strip_position(&e.to_string())))?;
            Ok(value)
        }
        Format::Toml => {
            let de = toml::de::Deserializer::parse(text)
                .map_err(|e| diag(e.span().map(|s| line_of(text, s.start)), String::new(), e.message().to_string()))?;
            serde_path_to_error::deserialize(de).map_err(|e| {
                let line = e.inner().span().map(|s| line_of(text, s.start));
                diag(line, e.path().to_string(), e.inner().message().to_string())
            })
        }
    }
}

/// serde_json appends " at line L column C"; the line is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// A kernel given inline as a document or by a path to a document file.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelRef {
    File(PathBuf),
    Inline(KernelDocument),
}

impl<'de> Deserialize<'de> for KernelRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RefVisitor;
        impl<'de> Visitor<'de> for RefVisitor {
            type Value = KernelRef;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a kernel document or a path to one")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<KernelRef, E> {
                Ok(KernelRef::File(PathBuf::from(v)))
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<KernelRef, A::Error> {
                KernelDocument::deserialize(de::value::MapAccessDeserializer::new(map)).map(KernelRef::Inline)
            }
        }
        d.deserialize_any(RefVisitor)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "one")]
    pub mu: f64,
    /// Omitted kernels are zero.
    #[serde(default)]
    pub nu_e: Option<KernelRef>,
    #[serde(default)]
    pub nu_h: Option<KernelRef>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    #[serde(rename = "L")]
    pub length: f64,
    pub n_max: usize,
    #[serde(default = "unit_amplitudes")]
    pub amplitudes: AmplitudeRule,
}

fn unit_amplitudes() -> AmplitudeRule {
    AmplitudeRule::Constant { value: 1.0 }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub output_stride: usize,
    #[serde(default)]
    pub history_norm: bool,
    #[serde(default)]
    pub modes: Option<Vec<ModeSpec>>,
    #[serde(default)]
    pub cavity: Option<CavityConfig>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub k: Option<Vec<f64>>,
    #[serde(default)]
    pub k_range: Option<KRange>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    #[serde(default = "yes")]
    pub tail_monotone: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// A run configuration; each subcommand reads its own section.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub medium: Option<MediumConfig>,
    #[serde(default)]
    pub analyze: Option<AnalyzeConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub source: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path)?;
        let mut cfg: RunConfig = parse_document(path, &text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.source = path.to_path_buf();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn diag(&self, field: &str, message: impl Into<String>) -> CliError {
        Diagnostic::field(field, message).in_file(&self.source).into()
    }

    /// Loads and validates the medium, resolving kernel files.
    pub fn medium(&self) -> Result<MediumSpec, CliError> {
        let m = self.medium.as_ref().ok_or_else(|| self.diag("medium", "missing section"))?;
        positive(m.eps).map_err(|msg| self.diag("medium.eps", msg))?;
        positive(m.mu).map_err(|msg| self.diag("medium.mu", msg))?;
        let nu_e = self.kernel(m.nu_e.as_ref(), "medium.nu_e")?;
        let nu_h = self.kernel(m.nu_h.as_ref(), "medium.nu_h")?;
        Ok(MediumSpec::new(m.eps, m.mu, nu_e, nu_h)?)
    }

    fn kernel(&self, r: Option<&KernelRef>, field: &'static str) -> Result<Kernel, CliError> {
        let doc = match r {
            None => return Ok(Kernel::zero()),
            Some(KernelRef::Inline(doc)) => doc.clone(),
            Some(KernelRef::File(p)) => {
                let path = self.resolve(p);
                if !path.is_file() {
                    return Err(self.diag(field, format!("kernel file `{}` not found", path.display())));
                }
                let text = read_text(&path)?;
                parse_document::<KernelDocument>(&path, &text)?
            }
        };
        doc.to_kernel().map_err(|e| match e {
            dispersia_core::Error::NotInClassK(_) => CliError::Certification { field, source: e },
            e => self.diag(field, e.to_string()),
        })
    }

    pub fn simulate_section(&self) -> Result<&SimulateConfig, CliError> {
        self.simulate.as_ref().ok_or_else(|| self.diag("simulate", "missing section"))
    }

    /// Validated run options; `threads` from the command line wins.
    pub fn run_options(&self, threads: Option<usize>) -> Result<RunOptions, CliError> {
        let s = self.simulate_section()?;
        positive(s.dt).map_err(|msg| self.diag("simulate.dt", msg))?;
        if !(s.t_end.is_finite() && s.t_end > s.dt) {
            return Err(self.diag("simulate.T", format!("must be finite and exceed dt = {}, got {}", s.dt, s.t_end)));
        }
        if s.output_stride == 0 {
            return Err(self.diag("simulate.output_stride", "must be at least 1"));
        }
        let threads = threads.or(s.threads);
        if threads == Some(0) {
            return Err(self.diag("simulate.threads", "must be at least 1"));
        }
        let mut opts = RunOptions::new(s.dt, s.t_end);
        opts.output_stride = s.output_stride;
        opts.history_norm = s.history_norm;
        opts.threads = threads;
        Ok(opts)
    }

    /// The mode list, given explicitly or by cavity shorthand.
    pub fn modes(&self) -> Result<Vec<ModeSpec>, CliError> {
        let s = self.simulate_section()?;
        let modes = match (&s.modes, &s.cavity) {
            (Some(_), Some(_)) => return Err(self.diag("simulate", "give either `modes` or `cavity`, not both")),
            (None, None) => return Err(self.diag("simulate", "one of `modes` or `cavity` is required")),
            (Some(list), None) => list.clone(),
            (None, Some(c)) => {
                positive(c.length).map_err(|msg| self.diag("simulate.cavity.L", msg))?;
                cavity_modes(c.length, c.n_max, c.amplitudes)?
            }
        };
        for (i, m) in modes.iter().enumerate() {
            if !(m.k.is_finite() && m.k >= 0.0) {
                return Err(self.diag(&format!("simulate.modes[{i}].k"), format!("must be finite and nonnegative, got {}", m.k)));
            }
            if !m.amplitude.is_finite() {
                return Err(self.diag(&format!("simulate.modes[{i}].amplitude"), "must be finite"));
            }
        }
        Ok(modes)
    }

    pub fn k_grid(&self) -> Result<Vec<f64>, CliError> {
        let s = self.spectrum.as_ref().ok_or_else(|| self.diag("spectrum", "missing section"))?;
        let ks = match (&s.k, &s.k_range) {
            (Some(_), Some(_)) => return Err(self.diag("spectrum", "give either `k` or `k_range`, not both")),
            (None, None) => return Err(self.diag("spectrum", "one of `k` or `k_range` is required")),
            (Some(k), None) => k.clone(),
            (None, Some(r)) => {
                if r.count == 0 {
                    return Err(self.diag("spectrum.k_range.count", "must be at least 1"));
                }
                if !(r.start.is_finite() && r.end.is_finite() && r.start <= r.end) {
                    return Err(self.diag("spectrum.k_range", format!("need finite start ≤ end, got [{}, {}]", r.start, r.end)));
                }
                if r.spacing == Spacing::Log && r.start <= 0.0 {
                    return Err(self.diag("spectrum.k_range.start", "log spacing needs a positive start"));
                }
                let f = |i: usize| if r.count == 1 { 0.0 } else { i as f64 / (r.count - 1) as f64 };
                (0..r.count)
                    .map(|i| match r.spacing {
                        Spacing::Linear => r.start + (r.end - r.start) * f(i),
                        Spacing::Log => r.start * (r.end / r.start).powf(f(i)),
                    })
                    .collect()
            }
        };
        for (i, &k) in ks.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                return Err(self.diag(&format!("spectrum.k[{i}]"), format!("must be finite and nonnegative, got {k}")));
            }
        }
        Ok(ks)
    }

    pub fn grid(&self) -> Result<SampledGrid, CliError> {
        match self.analyze.as_ref().and_then(|a| a.grid.as_ref()) {
            None => Ok(SampledGrid::default()),
            Some(g) => {
                if !(g.omega_min > 0.0 && g.omega_max > g.omega_min && g.omega_max.is_finite()) {
                    return Err(self.diag("analyze.grid", "need 0 < omega_min < omega_max < ∞"));
                }
                if g.points < 2 {
                    return Err(self.diag("analyze.grid.points", "must be at least 2"));
                }
                Ok(SampledGrid {
                    omega_min: g.omega_min,
                    omega_max: g.omega_max,
                    points: g.points,
                    tail_monotone: g.tail_monotone,
                })
            }
        }
    }
}

fn positive(v: f64) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("must be finite and positive, got {v}"))
    }
}

/// Parses `a,b` into a fit window.
pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad window start `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad window end `{b}`"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("window needs finite a < b, got {a},{b}"));
    }
    Ok((a, b))
}
