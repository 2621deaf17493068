use super::MediumSpec;
use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Fields of one mode together with their full sampled past.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    pub t: f64,
    pub e: f64,
    pub h: f64,
    /// `E(j·dt)` for `j = 0..=n`, the last entry being the current value.
    pub past_e: Vec<f64>,
    pub past_h: Vec<f64>,
}

impl HistoryState {
    /// `(E, H) = (amplitude, 0)` at `t = 0` with no prior history.
    pub fn new(amplitude: f64) -> Self {
        Self { t: 0.0, e: amplitude, h: 0.0, past_e: vec![amplitude], past_h: vec![0.0] }
    }

    pub fn energy(&self, eps: f64, mu: f64) -> f64 {
        0.5 * (eps * self.e * self.e + mu * self.h * self.h)
    }

    /// Summed past histories `η(s) = ∫₀^{min(s,t)} F(t−y) dy` at `s = j·dt`,
    /// `j = 0..=n_s`, by the trapezoidal rule on the stored samples.
    pub fn summed_history(&self, dt: f64, n_s: usize) -> (Vec<f64>, Vec<f64>) {
        (summed(&self.past_e, dt, n_s), summed(&self.past_h, dt, n_s))
    }
}

fn summed(past: &[f64], dt: f64, n_s: usize) -> Vec<f64> {
    let mut eta = Vec::with_capacity(n_s + 1);
    eta.push(0.0);
    let mut acc = 0.0;
    let n = past.len() - 1;
    for j in 1..=n_s {
        if j <= n {
            acc += 0.5 * dt * (past[n - j + 1] + past[n - j]);
        }
        eta.push(acc);
    }
    eta
}

/// Reference integrator for any kernel type: classical RK4 on the fields,
/// with `∫₀ᵗ ν′(t−s) F(s) ds` evaluated by the trapezoidal rule over the
/// stored past. Cost grows quadratically with the number of steps.
#[derive(Debug, Clone)]
pub struct HistoryIntegrator {
    eps: f64,
    mu: f64,
    k: f64,
    dt: f64,
    s_max: f64,
    nu0_e: f64,
    nu0_h: f64,
    /// `ν′(i·dt/2)`; empty for kernels with `ν′ ≡ 0`.
    lag_e: Vec<f64>,
    lag_h: Vec<f64>,
}

fn lag_table(kernel: &Kernel, dt: f64, steps: usize) -> Result<Vec<f64>> {
    if kernel.is_zero() || kernel.as_exp_poly().is_some_and(|k| k.terms().is_empty()) {
        return Ok(Vec::new());
    }
    (0..=2 * steps + 2).map(|i| kernel.eval(0.5 * dt * i as f64, 1)).collect()
}

impl HistoryIntegrator {
    /// Prepares kernel samples for steps of size `dt` up to `t = s_max`.
    pub fn new(medium: &MediumSpec, k: f64, dt: f64, s_max: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(s_max.is_finite() && s_max >= 0.0) {
            return Err(Error::InvalidArgument(format!("s_max must be nonnegative, got {s_max}")));
        }
        let steps = (s_max / dt * (1.0 + 1e-12)).floor() as usize;
        Ok(Self {
            eps: medium.eps,
            mu: medium.mu,
            k,
            dt,
            s_max,
            nu0_e: medium.nu_e.eval(0.0, 0)?,
            nu0_h: medium.nu_h.eval(0.0, 0)?,
            lag_e: lag_table(&medium.nu_e, dt, steps)?,
            lag_h: lag_table(&medium.nu_h, dt, steps)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rhs(&self, e: f64, h: f64, conv_e: f64, conv_h: f64) -> (f64, f64) {
        (
            (-self.nu0_e * e - conv_e + self.k * h) / self.eps,
            (-self.nu0_h * h - conv_h - self.k * e) / self.mu,
        )
    }

    /// Advances `state` by one step of size `dt`.
    pub fn step(&self, state: &mut HistoryState) -> Result<()> {
        let n = state.past_e.len() - 1;
        let t_next = (n + 1) as f64 * self.dt;
        if t_next > self.s_max * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::HistoryTruncated { t: t_next, s_max: self.s_max });
        }
        let dt = self.dt;
        let (e0, h0) = (state.e, state.h);
        let pe = past_sums(&self.lag_e, &state.past_e, dt);
        let ph = past_sums(&self.lag_h, &state.past_h, dt);
        let partial = |lag: &[f64], c: usize, f_n: f64, f_s: f64| -> f64 {
            if lag.is_empty() || c == 0 {
                0.0
            } else {
                0.25 * c as f64 * dt * (lag[c] * f_n + lag[0] * f_s)
            }
        };

        let (k1e, k1h) = self.rhs(e0, h0, pe[0], ph[0]);
        let (e2, h2) = (e0 + 0.5 * dt * k1e, h0 + 0.5 * dt * k1h);
        let (k2e, k2h) = self.rhs(e2, h2, pe[1] + partial(&self.lag_e, 1, e0, e2), ph[1] + partial(&self.lag_h, 1, h0, h2));
        let (e3, h3) = (e0 + 0.5 * dt * k2e, h0 + 0.5 * dt * k2h);
        let (k3e, k3h) = self.rhs(e3, h3, pe[1] + partial(&self.lag_e, 1, e0, e3), ph[1] + partial(&self.lag_h, 1, h0, h3));
        let (e4, h4) = (e0 + dt * k3e, h0 + dt * k3h);
        let (k4e, k4h) = self.rhs(e4, h4, pe[2] + partial(&self.lag_e, 2, e0, e4), ph[2] + partial(&self.lag_h, 2, h0, h4));

        let e = e0 + dt / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        let h = h0 + dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        if !(e.is_finite() && h.is_finite()) {
            return Err(Error::Numeric(format!("fields became non-finite at t = {t_next}")));
        }
        state.e = e;
        state.h = h;
        state.t = t_next;
        state.past_e.push(e);
        state.past_h.push(h);
        Ok(())
    }
}

/// Trapezoidal `∫₀^{t_n} ν′(t_n + c·dt − s) F(s) ds` for `c = 0, ½, 1`.
fn past_sums(lag: &[f64], past: &[f64], dt: f64) -> [f64; 3] {
    let n = past.len() - 1;
    if lag.is_empty() || n == 0 {
        return [0.0; 3];
    }
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        // lag index of ν′((n − j)·dt + c·dt/2) is 2(n − j) + c
        let mut s = 0.5 * (lag[2 * n + c] * past[0] + lag[c] * past[n]);
        for (j, &f) in past.iter().enumerate().take(n).skip(1) {
            s += lag[2 * (n - j) + c] * f;
        }
        *slot = dt * s;
    }
    out
}

/// One step of the reference integrator from scratch; prefer
/// [`HistoryIntegrator`] when taking many steps.
pub fn step_history(medium: &MediumSpec, k: f64, state: &mut HistoryState, dt: f64, s_max: f64) -> Result<()> {
    HistoryIntegrator::new(medium, k, dt, s_max)?.step(state)
}
