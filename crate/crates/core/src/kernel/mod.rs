//! Susceptibility kernels: evaluation, class-K certification and Laplace
//! transforms (closed form and by quadrature).

mod document;
mod exp_poly;
mod sampled;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use document::{ComplexTermDoc, KernelDocument};
pub use exp_poly::{ExpPolyKernel, RealTerm};
pub use sampled::{builtin, builtin_default_bound, DecayBound, Evaluator, SampledKernel};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance of the quadrature Laplace path.
pub const LAPLACE_QUAD_TOL: f64 = 1e-10;

const CERT_GRID_POINTS: usize = 10_000;
const CERT_PAD: f64 = 1.05;
const CERT_DELTA_FRACTION: f64 = 0.9;

#[derive(Debug, Clone)]
pub enum Kernel {
    ExpPoly(ExpPolyKernel),
    Sampled(SampledKernel),
}

/// Witness that `|ν″(t)| ≤ C e^{−δt}` on `[0, checked_horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassKCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    pub checked_horizon: f64,
    /// `max_t (|ν″(t)| − C e^{−δt})` over the checked grid.
    pub max_violation: f64,
}

impl ClassKCertificate {
    pub fn bound(&self) -> DecayBound {
        DecayBound { c: self.c, delta: self.delta }
    }
}

impl From<ExpPolyKernel> for Kernel {
    fn from(k: ExpPolyKernel) -> Self {
        Kernel::ExpPoly(k)
    }
}

impl From<SampledKernel> for Kernel {
    fn from(k: SampledKernel) -> Self {
        Kernel::Sampled(k)
    }
}

impl Kernel {
    pub fn zero() -> Self {
        Kernel::ExpPoly(ExpPolyKernel::zero())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Kernel::ExpPoly(k) if k.is_zero())
    }

    pub fn as_exp_poly(&self) -> Option<&ExpPolyKernel> {
        match self {
            Kernel::ExpPoly(k) => Some(k),
            Kernel::Sampled(_) => None,
        }
    }

    /// `ν`, `ν′` or `ν″` at `t ≥ 0`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        match self {
            Kernel::ExpPoly(k) => k.eval(t, order),
            Kernel::Sampled(k) => k.eval(t, order),
        }
    }

    pub fn certify(&self) -> Result<ClassKCertificate> {
        match self {
            Kernel::ExpPoly(k) => certify_exp_poly(k),
            Kernel::Sampled(k) => certify_sampled(k),
        }
    }

    /// `Lν(λ)` for `Re λ ≥ 0`: exact partial fractions for exponential
    /// polynomials, adaptive quadrature otherwise.
    pub fn laplace(&self, lambda: Complex64) -> Result<Complex64> {
        match self {
            Kernel::ExpPoly(k) => k.laplace(lambda),
            Kernel::Sampled(k) => quad_laplace(k, lambda),
        }
    }

    /// `λ Lν(λ) = ν(0) + Lν′(λ)`, continuous on the closed right half plane.
    pub fn lambda_laplace(&self, lambda: Complex64) -> Result<Complex64> {
        if lambda.re < 0.0 {
            return Err(Error::UnsupportedPoint {
                re: lambda.re,
                im: lambda.im,
                reason: "left half plane",
            });
        }
        match self {
            Kernel::ExpPoly(k) => Ok(k.lambda_laplace(lambda)),
            Kernel::Sampled(k) => quad_lambda_laplace(k, lambda),
        }
    }

    /// `iω Lν(iω)`.
    pub fn i_omega_laplace(&self, omega: f64) -> Result<Complex64> {
        self.lambda_laplace(Complex64::new(0.0, omega))
    }

    /// The same kernel seen through the quadrature path; exponential
    /// polynomials are wrapped using their certificate.
    pub fn to_sampled(&self) -> Result<SampledKernel> {
        match self {
            Kernel::Sampled(k) => Ok(k.clone()),
            Kernel::ExpPoly(k) => {
                let cert = certify_exp_poly(k)?;
                Ok(SampledKernel::from_exp_poly(k.clone(), cert.bound()))
            }
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let ratio = (hi / lo).ln();
    std::iter::once(0.0).chain((0..n).map(move |i| lo * (ratio * i as f64 / (n - 1) as f64).exp()))
}

/// Upper bound of `Σ_k a_k t^k e^{−α t}` over `t ≥ t0`, term by term.
fn monomial_tail_sup(coeffs: &[f64], alpha: f64, t0: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let peak = k as f64 / alpha;
            let t = peak.max(t0);
            a.abs() * t.powi(k as i32) * (-alpha * t).exp()
        })
        .sum()
}

fn certify_exp_poly(k: &ExpPolyKernel) -> Result<ClassKCertificate> {
    let Some(min_decay) = k.min_decay() else {
        // ν″ ≡ 0: any (C, δ) works.
        return Ok(ClassKCertificate { c: f64::MIN_POSITIVE, delta: 1.0, checked_horizon: 0.0, max_violation: 0.0 });
    };
    let delta = CERT_DELTA_FRACTION * min_decay;
    let horizon = 20.0 / delta;
    let mut peak = 0.0_f64;
    for t in log_grid(1e-3 / delta, horizon, CERT_GRID_POINTS) {
        peak = peak.max(k.eval_unchecked(t, 2).abs() * (delta * t).exp());
    }
    // Beyond the grid: |ν″(t)| e^{δt} ≤ Σ_j Σ_k (|p_jk| + |q_jk|) t^k e^{(x_j + δ) t}.
    let second = k.derivative().derivative();
    let tail: f64 = second
        .terms()
        .iter()
        .map(|t| {
            let n = t.cos_poly.len().max(t.sin_poly.len());
            let mag: Vec<f64> = (0..n)
                .map(|i| t.cos_poly.get(i).map_or(0.0, |c| c.abs()) + t.sin_poly.get(i).map_or(0.0, |c| c.abs()))
                .collect();
            monomial_tail_sup(&mag, -t.decay - delta, horizon)
        })
        .sum();
    let c = (CERT_PAD * peak.max(tail)).max(f64::MIN_POSITIVE);
    let bound = DecayBound { c, delta };
    let max_violation = log_grid(1e-3 / delta, horizon, CERT_GRID_POINTS)
        .map(|t| k.eval_unchecked(t, 2).abs() - bound.weight(t))
        .fold(f64::NEG_INFINITY, f64::max);
    check_derivative_limits(&|t| k.eval_unchecked(t, 1), &|t| k.eval_unchecked(t, 2), bound, horizon)?;
    Ok(ClassKCertificate { c, delta, checked_horizon: horizon, max_violation })
}

fn certify_sampled(k: &SampledKernel) -> Result<ClassKCertificate> {
    let bound = k.bound();
    let horizon = 50.0 / bound.delta;
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    for t in log_grid(1e-3 / bound.delta, horizon, CERT_GRID_POINTS) {
        let v = k.eval_all(t)[2].abs();
        let w = bound.weight(t);
        if v - w > worst.0 {
            worst = (v - w, t, v, w);
        }
    }
    let (max_violation, t, value, bound_value) = worst;
    if !(max_violation <= 1e-9) {
        return Err(Error::CertificationFailed { t, value, bound: bound_value });
    }
    check_derivative_limits(&|t| k.eval_all(t)[1], &|t| k.eval_all(t)[2], bound, horizon)?;
    Ok(ClassKCertificate { c: bound.c, delta: bound.delta, checked_horizon: horizon, max_violation })
}

/// `ν′(t) + ∫_t^∞ ν″(y) dy`, which vanishes for kernels in class K.
pub fn derivative_tail_residual(kernel: &Kernel, bound: DecayBound, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let d1 = kernel.eval(t, 1)?;
    let integral = tail_integral(&|y| kernel.eval(y, 2).unwrap_or(f64::NAN), bound, t);
    Ok(d1 + integral)
}

fn tail_integral(second: &dyn Fn(f64) -> f64, bound: DecayBound, t: f64) -> f64 {
    // ∫_{t+H}^∞ C e^{−δy} dy ≤ C e^{−δH}/δ
    let h = bound.tail_horizon(1e-14);
    let pieces = (h * bound.delta).ceil().max(4.0) as usize;
    quadrature::integrate_real(second, t, t + h, 1e-13, pieces).0
}

fn check_derivative_limits(
    first: &dyn Fn(f64) -> f64,
    second: &dyn Fn(f64) -> f64,
    bound: DecayBound,
    horizon: f64,
) -> Result<()> {
    let limit = bound.c * (-bound.delta * horizon).exp() / bound.delta;
    let at_horizon = first(horizon).abs();
    if at_horizon > limit * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::NotInClassK(format!(
            "|ν′({horizon})| = {at_horizon:e} does not decay (expected ≤ {limit:e})"
        )));
    }
    let tol = 1e-9 * (bound.c / bound.delta).max(1.0);
    for t in [0.0, 1.0 / bound.delta, 5.0 / bound.delta] {
        let residual = first(t) + tail_integral(second, bound, t);
        if residual.abs() > tol {
            return Err(Error::NotInClassK(format!(
                "ν′({t}) ≠ −∫_t^∞ ν″ (residual {residual:e})"
            )));
        }
    }
    Ok(())
}

fn quad_pieces(horizon: f64, lambda: Complex64) -> usize {
    ((horizon * lambda.im.abs() / std::f64::consts::PI).ceil() as usize + 8).min(200_000)
}

fn second_derivative_transform(k: &SampledKernel, lambda: Complex64, tol: f64) -> Complex64 {
    let bound = k.bound();
    let h = bound.tail_horizon(0.1 * tol);
    let est = quadrature::integrate(
        |s| (-lambda * s).exp() * k.eval_all(s)[2],
        0.0,
        h,
        0.9 * tol,
        quad_pieces(h, lambda),
    );
    if !est.converged {
        log::warn!("Lν″({lambda}) quadrature stopped at error {:e}", est.error);
    }
    est.value
}

fn direct_transform(k: &SampledKernel, lambda: Complex64, tol: f64) -> Complex64 {
    let bound = k.bound();
    let sigma = lambda.re;
    let m = k.eval_all(0.0)[0].abs() + bound.c / (bound.delta * bound.delta);
    let h = ((m / (sigma * 0.1 * tol)).ln() / sigma).max(1.0);
    let est = quadrature::integrate(
        |s| (-lambda * s).exp() * k.eval_all(s)[0],
        0.0,
        h,
        0.9 * tol,
        quad_pieces(h, lambda),
    );
    est.value
}

fn quad_laplace(k: &SampledKernel, lambda: Complex64) -> Result<Complex64> {
    if lambda.re < 0.0 || lambda.norm() == 0.0 {
        return Err(Error::UnsupportedPoint {
            re: lambda.re,
            im: lambda.im,
            reason: "quadrature path needs Re λ ≥ 0 and λ ≠ 0",
        });
    }
    let n2 = lambda.norm_sqr();
    if lambda.re > 0.5 * k.bound().delta {
        return Ok(direct_transform(k, lambda, LAPLACE_QUAD_TOL));
    }
    // λ Lν = ν(0) + (ν′(0) + Lν″(λ))/λ
    let [v0, d0, _] = k.eval_all(0.0);
    let l2 = second_derivative_transform(k, lambda, LAPLACE_QUAD_TOL * n2.min(1.0));
    Ok((v0 + (d0 + l2) / lambda) / lambda)
}

fn quad_lambda_laplace(k: &SampledKernel, lambda: Complex64) -> Result<Complex64> {
    let [v0, d0, _] = k.eval_all(0.0);
    if lambda.norm() == 0.0 {
        // lim λLν(λ) = ν(0) + ∫₀^∞ ν′ = ν(0) − ∫₀^∞ s ν″(s) ds
        let bound = k.bound();
        let h = bound.tail_horizon(1e-14) * 2.0;
        let (moment, _) =
            quadrature::integrate_real(|s| s * k.eval_all(s)[2], 0.0, h, 1e-12, (h * bound.delta).ceil() as usize + 4);
        return Ok(Complex64::new(v0 - moment, 0.0));
    }
    if lambda.re > 0.5 * k.bound().delta {
        return Ok(lambda * direct_transform(k, lambda, LAPLACE_QUAD_TOL / lambda.norm().max(1.0)));
    }
    let l2 = second_derivative_transform(k, lambda, LAPLACE_QUAD_TOL * lambda.norm().min(1.0));
    Ok(v0 + (d0 + l2) / lambda)
}
