use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use dispersia_core::dispersion::{analyze_with, PassivityReport};
use dispersia_core::modal::spectral_abscissa;
use dispersia_core::{
    build_mode, fit_decay, run_multimode, ClassKCertificate, DecayKind, DecayReport, EnergyTrace, Kernel, MediumSpec,
};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{read_text, RunConfig};
use crate::error::{CliError, Diagnostic};

/// How a command that produced its output finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotPassive,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotPassive => 3,
            Status::Inconclusive => 5,
        }
    }
}

/// Where a command writes its document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn pick(cli: Option<&Path>, config: Option<PathBuf>) -> Sink {
        match (cli, config) {
            (Some(p), _) => Sink::File(p.to_path_buf()),
            (None, Some(p)) => Sink::File(p),
            (None, None) => Sink::Stdout,
        }
    }

    /// Writes the whole document or nothing: files go through a temporary
    /// sibling that is renamed into place.
    pub fn write(&self, text: &str) -> Result<(), CliError> {
        match self {
            Sink::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
            }
            Sink::File(path) => {
                let io = |source| CliError::Io { path: path.clone(), source };
                let dir = match path.parent() {
                    Some(d) if !d.as_os_str().is_empty() => d,
                    _ => Path::new("."),
                };
                let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
                tmp.write_all(text.as_bytes()).map_err(io)?;
                tmp.persist(path).map_err(|e| io(e.error))?;
                Ok(())
            }
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct Certificates {
    pub nu_E: Option<ClassKCertificate>,
    pub nu_H: Option<ClassKCertificate>,
}

/// Passivity report with the class-K certificates it rests on.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    #[serde(flatten)]
    pub report: PassivityReport,
    pub certificates: Certificates,
}

fn to_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn certify(kernel: &Kernel, field: &'static str) -> Result<Option<ClassKCertificate>, CliError> {
    if kernel.is_zero() {
        return Ok(None);
    }
    kernel.certify().map(Some).map_err(|source| CliError::Certification { field, source })
}

pub fn analyze(cfg: &RunConfig) -> Result<(AnalyzeReport, Status), CliError> {
    let medium = cfg.medium()?;
    let grid = cfg.grid()?;
    let certificates = Certificates { nu_E: certify(&medium.nu_e, "medium.nu_e")?, nu_H: certify(&medium.nu_h, "medium.nu_h")? };
    let report = analyze_with(&medium.nu_e, &medium.nu_h, &grid)?;
    info!("analysis: passive = {}, strictly passive = {}, m = {:?}", report.passive, report.strictly_passive, report.m);
    let status = if report.passive { Status::Ok } else { Status::NotPassive };
    Ok((AnalyzeReport { report, certificates }, status))
}

pub fn cmd_analyze(cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let (report, status) = analyze(cfg)?;
    let sink = Sink::pick(out, cfg.analyze.as_ref().and_then(|a| a.out.as_ref()).map(|p| cfg.resolve(p)));
    sink.write(&to_document(&report))?;
    Ok(status)
}

fn require_closure(medium: &MediumSpec) -> Result<(), CliError> {
    for (kernel, field) in [(&medium.nu_e, "medium.nu_e"), (&medium.nu_h, "medium.nu_h")] {
        if let Kernel::Sampled(k) = kernel {
            return Err(CliError::Unsupported {
                field,
                reason: format!("sampled kernel `{}` has no finite memory closure", k.name()),
            });
        }
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, threads: Option<usize>) -> Result<EnergyTrace, CliError> {
    let medium = cfg.medium()?;
    let opts = cfg.run_options(threads)?;
    let modes = cfg.modes()?;
    require_closure(&medium)?;
    info!("simulating {} modes to T = {} with dt = {}", modes.len(), opts.t_end, opts.dt);
    Ok(run_multimode(&medium, &modes, &opts)?)
}

pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>, threads: Option<usize>) -> Result<Status, CliError> {
    let trace = simulate(cfg, threads)?;
    let config_out = cfg.simulate.as_ref().and_then(|s| s.out.as_ref()).map(|p| cfg.resolve(p));
    Sink::pick(out, config_out).write(&trace.to_csv())?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub k: f64,
    pub abscissa: f64,
    pub n_eigs: usize,
}

pub fn spectrum(cfg: &RunConfig, threads: Option<usize>) -> Result<Vec<SpectrumRow>, CliError> {
    let medium = cfg.medium()?;
    let ks = cfg.k_grid()?;
    let threads = threads.or(cfg.spectrum.as_ref().and_then(|s| s.threads));
    if threads == Some(0) {
        return Err(Diagnostic::field("threads", "must be at least 1").into());
    }
    require_closure(&medium)?;
    let row = |k: f64| -> Result<SpectrumRow, CliError> {
        let sp = spectral_abscissa(&build_mode(&medium, k)?)?;
        Ok(SpectrumRow { k, abscissa: sp.abscissa, n_eigs: sp.eigenvalues.len() })
    };
    let rows = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Diagnostic::field("threads", e.to_string()))?;
            pool.install(|| ks.par_iter().map(|&k| row(k)).collect::<Result<Vec<_>, _>>())?
        }
        None => ks.par_iter().map(|&k| row(k)).collect::<Result<Vec<_>, _>>()?,
    };
    Ok(rows)
}

pub const SPECTRUM_HEADER: &str = "k,abscissa,n_eigs";

pub fn spectrum_table(rows: &[SpectrumRow]) -> String {
    let mut s = String::from(SPECTRUM_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{:.16e},{:.16e},{}", r.k, r.abscissa, r.n_eigs);
    }
    s
}

pub fn cmd_spectrum(cfg: &RunConfig, out: Option<&Path>, threads: Option<usize>) -> Result<Status, CliError> {
    let rows = spectrum(cfg, threads)?;
    let config_out = cfg.spectrum.as_ref().and_then(|s| s.out.as_ref()).map(|p| cfg.resolve(p));
    Sink::pick(out, config_out).write(&spectrum_table(&rows))?;
    Ok(Status::Ok)
}

pub fn read_trace(path: &Path) -> Result<EnergyTrace, CliError> {
    let text = read_text(path)?;
    EnergyTrace::from_csv(&text).map_err(|e| Diagnostic::field("", e.to_string()).in_file(path).into())
}

pub fn fit(trace: &EnergyTrace, window: Option<(f64, f64)>) -> Result<(DecayReport, Status), CliError> {
    let report = fit_decay(trace, window)?;
    let status = if report.kind == DecayKind::Inconclusive { Status::Inconclusive } else { Status::Ok };
    Ok((report, status))
}

/// Trace and window come from the command line first, then the config.
pub fn cmd_fit(
    cfg: Option<&RunConfig>,
    trace: Option<&Path>,
    window: Option<(f64, f64)>,
    out: Option<&Path>,
) -> Result<Status, CliError> {
    let section = cfg.and_then(|c| c.fit.as_ref());
    let trace_path = match (trace, cfg, section.and_then(|f| f.trace.as_ref())) {
        (Some(p), _, _) => p.to_path_buf(),
        (None, Some(c), Some(p)) => c.resolve(p),
        _ => return Err(Diagnostic::field("fit.trace", "no trace file given").into()),
    };
    let window = window.or(section.and_then(|f| f.window).map(|[a, b]| (a, b)));
    if let Some((a, b)) = window {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Diagnostic::field("fit.window", format!("need finite a < b, got [{a}, {b}]")).into());
        }
    }
    let (report, status) = fit(&read_trace(&trace_path)?, window)?;
    let config_out = match (cfg, section.and_then(|f| f.out.as_ref())) {
        (Some(c), Some(p)) => Some(c.resolve(p)),
        _ => None,
    };
    Sink::pick(out, config_out).write(&to_document(&report))?;
    Ok(status)
}
