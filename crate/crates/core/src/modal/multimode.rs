use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_mode, MediumSpec};
use crate::error::{Error, Result};
use crate::kernel::DecayBound;

/// Energy samples of a simulation run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub history_norm: Option<Vec<f64>>,
}

pub const TRACE_HEADER: &str = "t,energy,history_norm";

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Tabular text with header `t,energy,history_norm` and 17 significant
    /// digits per value; the last column is empty when not computed.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{:.16e},{:.16e},", self.times[i], self.energy[i]);
            if let Some(h) = &self.history_norm {
                let _ = write!(out, "{:.16e}", h[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            Some((_, h)) => {
                return Err(Error::InvalidArgument(format!("line 1: expected header `{TRACE_HEADER}`, got `{h}`")))
            }
            None => return Err(Error::InvalidArgument("trace is empty (missing header)".into())),
        }
        let mut trace = EnergyTrace::default();
        let mut norms = Vec::new();
        let mut any_norm = false;
        for (i, line) in lines {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::InvalidArgument(format!("line {}: expected 3 columns, got {}", i + 1, cols.len())));
            }
            let num = |s: &str, name: &str| {
                f64::from_str(s).map_err(|_| Error::InvalidArgument(format!("line {}: bad {name} value `{s}`", i + 1)))
            };
            let t = num(cols[0], "t")?;
            if trace.times.last().is_some_and(|&prev| t <= prev) {
                return Err(Error::InvalidArgument(format!("line {}: times must increase", i + 1)));
            }
            trace.times.push(t);
            trace.energy.push(num(cols[1], "energy")?);
            if cols[2].is_empty() {
                norms.push(f64::NAN);
            } else {
                any_norm = true;
                norms.push(num(cols[2], "history_norm")?);
            }
        }
        if any_norm {
            if norms.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidArgument("history_norm column is only partly filled".into()));
            }
            trace.history_norm = Some(norms);
        }
        Ok(trace)
    }
}

/// One cavity mode: curl eigenvalue and initial electric amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: f64,
    pub amplitude: f64,
}

/// Initial amplitude of mode `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeRule {
    /// Same amplitude for every mode.
    Constant { value: f64 },
    /// `scale · n^{−exponent}`
    Power {
        #[serde(default = "one")]
        scale: f64,
        exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl AmplitudeRule {
    pub fn amplitude(&self, n: usize) -> f64 {
        match *self {
            AmplitudeRule::Constant { value } => value,
            AmplitudeRule::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
        }
    }
}

/// Modes `k_n = nπ/L`, `n = 1..=n_max`, of a reference cavity of length `L`.
pub fn cavity_modes(length: f64, n_max: usize, rule: AmplitudeRule) -> Result<Vec<ModeSpec>> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidArgument(format!("cavity length must be positive, got {length}")));
    }
    Ok((1..=n_max)
        .map(|n| ModeSpec { k: n as f64 * std::f64::consts::PI / length, amplitude: rule.amplitude(n) })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `output_stride`-th step (the final step is always kept).
    pub output_stride: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub history_norm: bool,
}

impl RunOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, output_stride: 1, threads: None, history_norm: false }
    }

    pub fn validate(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(Error::InvalidArgument(format!("T must exceed dt, got T = {}", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidArgument("output_stride must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        Ok((self.t_end / self.dt).round() as usize)
    }

    fn output_steps(&self, steps: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..=steps).step_by(self.output_stride).collect();
        if out.last() != Some(&steps) {
            out.push(steps);
        }
        out
    }
}

/// Per-mode result: energy and history norm at each output step.
struct ModeRun {
    energy: Vec<f64>,
    history: Vec<f64>,
}

/// Sums in a fixed binary tree so the result does not depend on scheduling.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// History weight `w(s) = C e^{−δs}` shared by both fields: the largest `C`
/// and smallest `δ` of the kernels' certificates.
fn history_weight(medium: &MediumSpec) -> Result<Option<DecayBound>> {
    let mut w: Option<DecayBound> = None;
    for k in [&medium.nu_e, &medium.nu_h] {
        if k.is_zero() {
            continue;
        }
        let b = k.certify()?.bound();
        w = Some(match w {
            None => b,
            Some(a) => DecayBound { c: a.c.max(b.c), delta: a.delta.min(b.delta) },
        });
    }
    Ok(w)
}

/// `∫₀^∞ w(s) η(s)² ds` for `η(s) = ∫₀^{min(s,t)} F(t−y) dy`, from the samples
/// `F(j·dt)`, `j = 0..=n`.
fn weighted_history(past: &[f64], dt: f64, w: DecayBound) -> f64 {
    let n = past.len() - 1;
    let mut eta = 0.0;
    let mut integral = 0.0;
    let mut prev = 0.0; // w(0) η(0)² = 0
    for j in 1..=n {
        eta += 0.5 * dt * (past[n - j + 1] + past[n - j]);
        let cur = w.weight(j as f64 * dt) * eta * eta;
        integral += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    // η is constant beyond s = t
    let t = n as f64 * dt;
    integral + w.c / w.delta * (-w.delta * t).exp() * eta * eta
}

fn run_mode(
    medium: &MediumSpec,
    mode: ModeSpec,
    opts: &RunOptions,
    outputs: &[usize],
    weight: Option<DecayBound>,
) -> Result<ModeRun> {
    let sys = build_mode(medium, mode.k)?;
    if !mode.amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!("mode k = {} has non-finite amplitude", mode.k)));
    }
    let prop = sys.propagator(opts.dt)?;
    let steps = *outputs.last().unwrap_or(&0);
    let mut u: DVector<f64> = sys.initial_state(mode.amplitude);
    let mut energy = Vec::with_capacity(outputs.len());
    let mut history = Vec::new();
    let track = opts.history_norm.then_some(weight).flatten();
    let (mut past_e, mut past_h) = (Vec::new(), Vec::new());
    let mut next = outputs.iter().peekable();
    for step in 0..=steps {
        if step > 0 {
            u = prop.matrix() * &u;
        }
        if track.is_some() {
            past_e.push(u[sys.index.e]);
            past_h.push(u[sys.index.h]);
        }
        if next.peek() == Some(&&step) {
            next.next();
            energy.push(sys.energy(&u));
            if let Some(w) = track {
                history.push(weighted_history(&past_e, opts.dt, w) + weighted_history(&past_h, opts.dt, w));
            } else if opts.history_norm {
                history.push(0.0);
            }
        }
    }
    if !energy.iter().all(|e| e.is_finite()) {
        return Err(Error::Numeric(format!("energy of mode k = {} became non-finite", mode.k)));
    }
    Ok(ModeRun { energy, history })
}

/// Integrates every mode exactly from `(E, H) = (amplitude, 0)` with zero
/// memory and returns the summed energy trace.
///
/// Modes run in parallel; the sum over modes is taken in a fixed pairwise
/// order, so the trace is bit-identical for any thread count.
pub fn run_multimode(medium: &MediumSpec, modes: &[ModeSpec], opts: &RunOptions) -> Result<EnergyTrace> {
    let steps = opts.validate()?;
    if modes.is_empty() {
        return Ok(EnergyTrace::default());
    }
    let outputs = opts.output_steps(steps);
    let weight = if opts.history_norm { history_weight(medium)? } else { None };
    let work = || -> Result<Vec<ModeRun>> {
        modes.par_iter().map(|&m| run_mode(medium, m, opts, &outputs, weight)).collect()
    };
    let runs = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let column = |i: usize, pick: fn(&ModeRun) -> &Vec<f64>| -> f64 {
        let v: Vec<f64> = runs.iter().map(|r| pick(r)[i]).collect();
        pairwise_sum(&v)
    };
    let times = outputs.iter().map(|&s| s as f64 * opts.dt).collect();
    let energy = (0..outputs.len()).map(|i| column(i, |r| &r.energy)).collect();
    let history_norm = opts.history_norm.then(|| (0..outputs.len()).map(|i| column(i, |r| &r.history)).collect());
    Ok(EnergyTrace { times, energy, history_norm })
}
