//! Frequency-axis analysis of `iω Lν(iω)`: rational decomposition, the three
//! passivity conditions and the decay exponent `m`.
//!
//! For exponential-polynomial kernels every decision is made on exact
//! polynomial structure (real-root isolation of the numerators). Sampled
//! kernels fall back to a frequency grid and are reported as numerically
//! checked rather than certified.

use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{ExpPolyKernel, Kernel};
use crate::dd::Dd;
use crate::poly::{Poly, RealPoly};

/// Beyond this degree the critical-point polynomial is not root-isolated
/// in working precision.
const MAX_CRITICAL_DEGREE: usize = 60;

/// Upper end of the window on which `σ_E`, `σ_H` are minimized.
pub const SIGMA_WINDOW_END: f64 = 1e4;

/// `iω Lν(iω) = Pr(ω)/Qr(ω) + i Pi(ω)/Qi(ω)` with real polynomials.
///
/// The public polynomials are rounded to `f64` and drive root isolation.
/// Values are taken from a double-double copy over the common denominator,
/// since the rounded coefficients can be too ill-conditioned to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRational {
    pub pr: RealPoly,
    pub qr: RealPoly,
    pub pi: RealPoly,
    pub qi: RealPoly,
    precise: Option<PreciseForm>,
}

#[derive(Debug, Clone, PartialEq)]
struct PreciseForm {
    pr: Poly<Dd>,
    pi: Poly<Dd>,
    q: Poly<Dd>,
    poles: Vec<Complex64>,
}

impl OmegaRational {
    pub fn eval(&self, omega: f64) -> Complex64 {
        match &self.precise {
            Some(f) => {
                let w = Dd::new(omega);
                let q = f.q.eval(w);
                Complex64::new((f.pr.eval(w) / q).to_f64(), (f.pi.eval(w) / q).to_f64())
            }
            None => Complex64::new(self.real_part(omega), self.pi.eval(omega) / self.qi.eval(omega)),
        }
    }

    pub fn real_part(&self, omega: f64) -> f64 {
        match &self.precise {
            Some(f) => {
                let w = Dd::new(omega);
                (f.pr.eval(w) / f.q.eval(w)).to_f64()
            }
            None => self.pr.eval(omega) / self.qr.eval(omega),
        }
    }

    /// Degree deficit `deg Qr − deg Pr`; `None` when the real part vanishes
    /// identically.
    pub fn real_deficit(&self) -> Option<usize> {
        let p = self.pr.degree()?;
        Some(self.qr.degree().unwrap_or(0).saturating_sub(p))
    }

    /// `lim |ω|^{deficit} Re(iω Lν(iω))`.
    pub fn real_leading_ratio(&self) -> f64 {
        self.pr.leading() / self.qr.leading()
    }

    /// `sup_ω |iω Lν(iω)|` with the limits at zero and infinity.
    ///
    /// Local maxima are seeded from the real critical points of
    /// `|·|² = (Pr² + Pi²) / Q²` when that polynomial is of modest degree,
    /// from the resonance frequencies `|Im z_j|` and from a log grid scaled
    /// to the pole magnitudes, then polished by golden-section search.
    pub fn sup_modulus(&self) -> Result<f64> {
        let (num, den) = match &self.precise {
            Some(f) => (&(&f.pr * &f.pr) + &(&f.pi * &f.pi), &f.q * &f.q),
            None => {
                let d = |p: &RealPoly| p.map(Dd::new);
                let (pr, qr, pi, qi) = (d(&self.pr), d(&self.qr), d(&self.pi), d(&self.qi));
                (&(&(&pr * &pr) * &(&qi * &qi)) + &(&(&pi * &pi) * &(&qr * &qr)), &(&qr * &qr) * &(&qi * &qi))
            }
        };
        let modulus = |w: f64| self.eval(w).norm();
        let mut seeds: Vec<(f64, f64)> = Vec::new();
        // (num/den)' = 0  ⇔  num' den − num den' = 0
        let crit = &(&num.derivative() * &den) - &(&num * &den.derivative());
        let (an, ad) = (abs_coeffs(&num), abs_coeffs(&den));
        let crit = drop_noise(crit, &(&(&an.derivative() * &ad) + &(&an * &ad.derivative())));
        if crit.degree().unwrap_or(0) <= MAX_CRITICAL_DEGREE {
            let crit = RealPoly::new(crit.coeffs().iter().map(|c| c.to_f64()).collect());
            for r in crit.roots()? {
                let w = r.re.abs();
                if r.im.abs() <= 0.1 * (1.0 + w) {
                    seeds.push((w, 0.1 * w + r.im.abs() + 1e-3));
                }
            }
        }
        if let Some(f) = &self.precise {
            let reach = f.poles.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for z in &f.poles {
                seeds.push((z.im.abs(), z.re.abs() + 1e-3));
            }
            let (lo, hi) = (1e-3 / reach, 1e3 * reach);
            let n = 4000;
            let grid: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
            let vals: Vec<f64> = grid.iter().map(|&w| modulus(w)).collect();
            for i in 1..n - 1 {
                if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
                    seeds.push((grid[i], grid[i + 1] - grid[i]));
                }
            }
        }
        let mut best = modulus(0.0);
        for (w, half) in seeds {
            best = best.max(golden_max(&modulus, (w - half).max(0.0), w + half));
        }
        if let (Some(dn), Some(dd)) = (num.degree(), den.degree()) {
            if dn == dd {
                best = best.max((num.leading() / den.leading()).to_f64().sqrt());
            }
        }
        Ok(best)
    }
}

/// Builds the reduced rational decomposition of `ω ↦ iω Lν(iω)`.
pub fn omega_form(kernel: &ExpPolyKernel) -> OmegaRational {
    let (n, d) = precise_lambda_rational(kernel);
    let poles: Vec<Complex64> = kernel.derivative().complex_terms().into_iter().map(|(_, z)| z).collect();
    let (nr, ni) = at_imaginary_axis(&n);
    let (dr, di) = at_imaginary_axis(&d);
    // N(iω)·conj(D(iω)) / |D(iω)|²
    let q = &(&dr * &dr) + &(&di * &di);
    let mut pr = &(&nr * &dr) + &(&ni * &di);
    let pi = &(&ni * &dr) - &(&nr * &di);
    // Re(iω Lν(iω)) at ω = 0 is ν(∞), the offset; pin it against rounding.
    let mut c = pr.coeffs().to_vec();
    if !c.is_empty() {
        c[0] = q.coeff(0) * Dd::new(kernel.offset());
        pr = Poly::new(c);
    }
    let (anr, ani, adr, adi) = (abs_coeffs(&nr), abs_coeffs(&ni), abs_coeffs(&dr), abs_coeffs(&di));
    let pr = drop_noise(pr, &(&(&anr * &adr) + &(&ani * &adi)));
    let pi = drop_noise(pi, &(&(&ani * &adr) + &(&anr * &adi)));
    let round = |p: &Poly<Dd>| RealPoly::new(p.coeffs().iter().map(|c| c.to_f64()).collect());
    let (pr_r, qr) = reduce(round(&pr), round(&q), Parity::Even);
    let (pi_r, qi) = reduce(round(&pi), round(&q), Parity::Odd);
    OmegaRational { pr: pr_r, qr, pi: pi_r, qi, precise: Some(PreciseForm { pr, pi, q, poles }) }
}

/// Coefficients below this fraction of the magnitude of the products that
/// form them are cancellation residue of structurally vanishing terms.
const NOISE_FLOOR: f64 = 1e-24;

fn abs_coeffs(p: &Poly<Dd>) -> Poly<Dd> {
    p.map(|c| Dd::new(c.to_f64().abs()))
}

fn drop_noise(p: Poly<Dd>, bound: &Poly<Dd>) -> Poly<Dd> {
    let c = p.coeffs().iter().enumerate();
    Poly::new(c.map(|(k, &c)| if c.to_f64().abs() <= NOISE_FLOOR * bound.coeff(k).to_f64() { Dd::new(0.0) } else { c }).collect())
}

/// `λ Lν(λ) = N(λ)/D(λ)` in double-double arithmetic.
fn precise_lambda_rational(kernel: &ExpPolyKernel) -> (Poly<Dd>, Poly<Dd>) {
    let cdd = |z: Complex64| Complex::new(Dd::new(z.re), Dd::new(z.im));
    let mut num = Poly::<Complex<Dd>>::zero();
    let mut den = Poly::<Complex<Dd>>::one();
    for (q, z) in kernel.derivative().complex_terms() {
        let deg = q.degree().unwrap_or(0);
        // Σ_ℓ Q^{(ℓ)}(0) (λ − z)^{deg−ℓ} over (λ − z)^{deg+1}
        let lin = Poly::linear(cdd(z));
        let mut n = Poly::zero();
        let mut fact = 1.0;
        for l in 0..=deg {
            if l > 0 {
                fact *= l as f64;
            }
            let c = cdd(q.coeff(l) * fact);
            n = &n + &lin.pow(deg - l).scale(c);
        }
        let dpiece = lin.pow(deg + 1);
        num = &(&num * &dpiece) + &(&n * &den);
        den = &den * &dpiece;
    }
    let den = den.map(|c| c.re);
    let num = &num.map(|c| c.re) + &den.scale(Dd::new(kernel.initial_value()));
    (num, den)
}

/// `(Re p(iω), Im p(iω))` as polynomials in `ω`.
fn at_imaginary_axis(p: &Poly<Dd>) -> (Poly<Dd>, Poly<Dd>) {
    let mut re = Vec::new();
    let mut im = Vec::new();
    for (k, &c) in p.coeffs().iter().enumerate() {
        let c = if (k / 2) % 2 == 0 { c } else { -c };
        let z = Dd::new(0.0);
        if k % 2 == 0 {
            re.push(c);
            im.push(z);
        } else {
            re.push(z);
            im.push(c);
        }
    }
    (Poly::new(re), Poly::new(im))
}

#[derive(Clone, Copy)]
enum Parity {
    Even,
    Odd,
}

fn enforce_parity(p: &RealPoly, parity: Parity) -> RealPoly {
    let keep = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    RealPoly::new(p.coeffs().iter().enumerate().map(|(k, &c)| if k % 2 == keep { c } else { 0.0 }).collect())
}

/// Cancels any common factor and scales the denominator to be monic.
fn reduce(num: RealPoly, den: RealPoly, parity: Parity) -> (RealPoly, RealPoly) {
    if num.is_zero() {
        return (RealPoly::zero(), RealPoly::one());
    }
    let (mut num, mut den) = (num, den);
    let g = num.gcd(&den, 1e-11);
    if g.degree().unwrap_or(0) > 0 {
        let (rn, _) = num.div_rem(&g);
        let (rd, _) = den.div_rem(&g);
        let (rn, rd) = (enforce_parity(&rn, parity), enforce_parity(&rd, Parity::Even));
        // Keep the reduction only if it reproduces the original values.
        let agrees = [0.3, 1.7, 11.0].iter().all(|&w| {
            let a = num.eval(w) / den.eval(w);
            let b = rn.eval(w) / rd.eval(w);
            (a - b).abs() <= 1e-9 * (1.0 + a.abs())
        });
        if agrees {
            num = rn;
            den = rd;
        }
    }
    let lead = den.leading();
    (enforce_parity(&num.scale(1.0 / lead), parity), enforce_parity(&den.scale(1.0 / lead), Parity::Even))
}

/// How a report's conclusions were reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    /// Exact polynomial root isolation.
    Certified,
    /// Frequency-grid sampling.
    NumericallyChecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassivityReport {
    pub passive: bool,
    pub strictly_passive: bool,
    pub m: Option<u32>,
    #[serde(rename = "sigma_E")]
    pub sigma_e: f64,
    #[serde(rename = "sigma_H")]
    pub sigma_h: f64,
    pub omega0: f64,
    pub witnesses: Vec<f64>,
    pub method: CheckMethod,
    /// Why no exponent was found, when `m` is absent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m_failure: Option<String>,
}

impl PassivityReport {
    fn empty(method: CheckMethod) -> Self {
        Self {
            passive: false,
            strictly_passive: false,
            m: None,
            sigma_e: 0.0,
            sigma_h: 0.0,
            omega0: 0.0,
            witnesses: Vec::new(),
            method,
            m_failure: None,
        }
    }
}

/// Frequency grid for kernels without rational structure. Only `ω > 0` is
/// sampled: real kernels give an even real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Caller's assertion that the real part stays positive beyond
    /// `omega_max`.
    pub tail_monotone: bool,
}

impl Default for SampledGrid {
    fn default() -> Self {
        Self { omega_min: 1e-3, omega_max: 1e4, points: 4000, tail_monotone: true }
    }
}

impl SampledGrid {
    fn omegas(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let r = (self.omega_max / self.omega_min).ln();
        (0..n).map(|i| self.omega_min * (r * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

/// Sampled values of `Re(iω Lν(iω))` below this are treated as zero.
const SAMPLED_ZERO_TOL: f64 = 1e-9;

enum FieldForm {
    Rational(OmegaRational),
    Sampled { omegas: Vec<f64>, re: Vec<f64> },
}

fn field_form(kernel: &Kernel, grid: &SampledGrid) -> Result<FieldForm> {
    match kernel {
        Kernel::ExpPoly(k) => Ok(FieldForm::Rational(omega_form(k))),
        Kernel::Sampled(_) => {
            kernel.certify()?;
            let omegas = grid.omegas();
            let re = omegas
                .par_iter()
                .map(|&w| kernel.i_omega_laplace(w).map(|v| v.re))
                .collect::<Result<Vec<_>>>()?;
            Ok(FieldForm::Sampled { omegas, re })
        }
    }
}

/// Sign samples of `p(u)` for `u > 0`, one per interval between distinct
/// positive real roots; returns the `u` values where `p < 0`.
fn negative_samples(p: &RealPoly) -> Result<Vec<f64>> {
    if p.is_zero() {
        return Ok(Vec::new());
    }
    let q = RealPoly::new(p.coeffs()[p.zero_root_multiplicity()..].to_vec());
    let roots: Vec<f64> = q.real_roots()?.into_iter().filter(|&r| r > 0.0).collect();
    let mut samples = Vec::with_capacity(roots.len() + 1);
    let mut lo = 0.0;
    for &r in &roots {
        samples.push(0.5 * (lo + r));
        lo = r;
    }
    samples.push(lo + 1.0);
    Ok(samples.into_iter().filter(|&u| q.sign_at(u) < 0).collect())
}

/// Positive real roots of `p(u)`, including touching ones.
fn positive_roots(p: &RealPoly) -> Result<Vec<f64>> {
    let q = RealPoly::new(p.coeffs()[p.zero_root_multiplicity()..].to_vec());
    Ok(q.real_roots()?.into_iter().filter(|&r| r > 0.0).collect())
}

/// Passivity of each field: `Re(iω Lν(iω)) ≥ 0` for all real ω.
pub fn check_passivity(nu_e: &Kernel, nu_h: &Kernel) -> Result<PassivityReport> {
    check_passivity_with(nu_e, nu_h, &SampledGrid::default())
}

pub fn check_passivity_with(nu_e: &Kernel, nu_h: &Kernel, grid: &SampledGrid) -> Result<PassivityReport> {
    let e = field_form(nu_e, grid)?;
    let h = field_form(nu_h, grid)?;
    Ok(passivity_from_forms(&e, &h))
}

fn method_of(e: &FieldForm, h: &FieldForm) -> CheckMethod {
    match (e, h) {
        (FieldForm::Rational(_), FieldForm::Rational(_)) => CheckMethod::Certified,
        _ => CheckMethod::NumericallyChecked,
    }
}

fn field_witnesses(f: &FieldForm) -> Vec<f64> {
    match f {
        FieldForm::Rational(r) => negative_samples(&r.pr.even_part_in_square())
            .unwrap_or_else(|e| {
                log::warn!("root isolation failed ({e}); falling back to a probe at ω = 1");
                if r.real_part(1.0) < 0.0 {
                    vec![1.0]
                } else {
                    Vec::new()
                }
            })
            .into_iter()
            .map(f64::sqrt)
            .collect(),
        FieldForm::Sampled { omegas, re } => {
            omegas.iter().zip(re).filter(|(_, &v)| v < -SAMPLED_ZERO_TOL).map(|(&w, _)| w).collect()
        }
    }
}

fn passivity_from_forms(e: &FieldForm, h: &FieldForm) -> PassivityReport {
    let mut report = PassivityReport::empty(method_of(e, h));
    let mut witnesses = field_witnesses(e);
    witnesses.extend(field_witnesses(h));
    witnesses.sort_by(f64::total_cmp);
    witnesses.dedup();
    report.passive = witnesses.is_empty();
    report.witnesses = witnesses;
    report
}

/// Strict passivity: `Re(iω Lν_E) + Re(iω Lν_H) > 0` for all `ω ≠ 0`.
pub fn check_strict_passivity(nu_e: &Kernel, nu_h: &Kernel) -> Result<PassivityReport> {
    check_strict_passivity_with(nu_e, nu_h, &SampledGrid::default())
}

pub fn check_strict_passivity_with(nu_e: &Kernel, nu_h: &Kernel, grid: &SampledGrid) -> Result<PassivityReport> {
    let e = field_form(nu_e, grid)?;
    let h = field_form(nu_h, grid)?;
    let mut report = passivity_from_forms(&e, &h);
    if report.passive {
        let (strict, witnesses) = strict_from_forms(&e, &h, grid)?;
        report.strictly_passive = strict;
        report.witnesses = witnesses;
    }
    Ok(report)
}

/// Numerator of `R(ω) = Pr_E/Qr_E + Pr_H/Qr_H` over `Qr_E Qr_H`.
fn combined_real(e: &OmegaRational, h: &OmegaRational) -> (RealPoly, RealPoly) {
    let num = &(&e.pr * &h.qr) + &(&h.pr * &e.qr);
    let den = &e.qr * &h.qr;
    (num, den)
}

fn strict_from_forms(e: &FieldForm, h: &FieldForm, grid: &SampledGrid) -> Result<(bool, Vec<f64>)> {
    match (e, h) {
        (FieldForm::Rational(e), FieldForm::Rational(h)) => {
            let (num, _) = combined_real(e, h);
            if num.is_zero() {
                return Ok((false, vec![1.0]));
            }
            let u = num.even_part_in_square();
            let mut bad: Vec<f64> = positive_roots(&u)?;
            bad.extend(negative_samples(&u)?);
            bad.sort_by(f64::total_cmp);
            Ok((bad.is_empty(), bad.into_iter().map(f64::sqrt).collect()))
        }
        _ => {
            let omegas = grid.omegas();
            let re_e = sampled_or_rational(e, &omegas);
            let re_h = sampled_or_rational(h, &omegas);
            let bad: Vec<f64> = omegas
                .iter()
                .zip(re_e.iter().zip(&re_h))
                .filter(|(_, (a, b))| *a + *b <= SAMPLED_ZERO_TOL)
                .map(|(&w, _)| w)
                .collect();
            Ok((bad.is_empty(), bad))
        }
    }
}

fn sampled_or_rational(f: &FieldForm, omegas: &[f64]) -> Vec<f64> {
    match f {
        FieldForm::Rational(r) => omegas.iter().map(|&w| r.real_part(w)).collect(),
        FieldForm::Sampled { re, .. } => re.clone(),
    }
}

/// Minimum of `ω^m Re(iω Lν(iω))` over `[lo, hi]`: log grid, then golden
/// section inside the best bracket.
/// Largest value of `f` on `[a, b]` found by a coarse scan refined by
/// golden-section search.
fn golden_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 64;
    let pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let (imax, vmax) =
        pts.iter().map(|&w| f(w)).enumerate().fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (mut lo, mut hi) = (pts[imax.saturating_sub(1)], pts[(imax + 1).min(n)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = hi - phi * (hi - lo);
        let d = lo + phi * (hi - lo);
        if f(c) > f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    vmax.max(f(0.5 * (lo + hi)))
}

fn min_weighted(f: &dyn Fn(f64) -> f64, m: u32, lo: f64, hi: f64) -> f64 {
    let g = |w: f64| w.powi(m as i32) * f(w);
    if hi <= lo {
        return g(lo);
    }
    let n = 4000;
    let r = (hi / lo).ln();
    let pts: Vec<f64> = (0..n).map(|i| lo * (r * i as f64 / (n - 1) as f64).exp()).collect();
    let (imin, _) = pts
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, g(w)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let (mut a, mut b) = (pts[imin.saturating_sub(1)], pts[(imin + 1).min(n - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..80 {
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    [g(lo), g(hi), g(pts[imin]), g(0.5 * (a + b))].into_iter().fold(f64::INFINITY, f64::min)
}

/// Decay exponent `m` with constants `σ_E`, `σ_H`, `ω₀` such that
/// `Re(iωLν_E)|X|² + Re(iωLν_H)|Y|² ≥ |ω|^{−m}(σ_E|X|² + σ_H|Y|²)` for `|ω| ≥ ω₀`.
pub fn decay_exponent(nu_e: &Kernel, nu_h: &Kernel) -> Result<PassivityReport> {
    decay_exponent_with(nu_e, nu_h, &SampledGrid::default())
}

pub fn decay_exponent_with(nu_e: &Kernel, nu_h: &Kernel, grid: &SampledGrid) -> Result<PassivityReport> {
    let e = field_form(nu_e, grid)?;
    let h = field_form(nu_h, grid)?;
    let mut report = passivity_from_forms(&e, &h);
    if !report.passive {
        return Err(Error::NotStrictlyPassive);
    }
    let (strict, witnesses) = strict_from_forms(&e, &h, grid)?;
    report.strictly_passive = strict;
    report.witnesses = witnesses;
    if !strict {
        return Err(Error::NotStrictlyPassive);
    }
    match (&e, &h) {
        (FieldForm::Rational(er), FieldForm::Rational(hr)) => rational_exponent(er, hr, &mut report)?,
        _ => sampled_exponent(&e, &h, grid, &mut report)?,
    }
    Ok(report)
}

fn rational_exponent(e: &OmegaRational, h: &OmegaRational, report: &mut PassivityReport) -> Result<()> {
    let (num, den) = combined_real(e, h);
    let n1 = num.degree().ok_or_else(|| Error::NoExponent("R(ω) vanishes identically".into()))?;
    let n2 = den.degree().unwrap_or(0);
    if n1 > n2 {
        return Err(Error::NoExponent(format!("deg numerator {n1} exceeds deg denominator {n2}")));
    }
    let deficit = n2 - n1;
    if deficit % 2 != 0 {
        return Err(Error::NoExponent(format!("degree deficit {deficit} is odd")));
    }
    let ratio = num.leading() / den.leading();
    if !(ratio > 0.0) {
        return Err(Error::NoExponent(format!("leading ratio {ratio:e} is not positive")));
    }
    let m = deficit as u32;

    let mut largest_root = 0.0_f64;
    for f in [e, h] {
        if !f.pr.is_zero() {
            let u = f.pr.even_part_in_square();
            for r in positive_roots(&u)? {
                largest_root = largest_root.max(r.sqrt());
            }
        }
    }
    let omega0 = 2.0 * largest_root + 1.0;
    let sigma = |f: &OmegaRational| -> f64 {
        if f.real_deficit() != Some(deficit) {
            return 0.0;
        }
        let windowed = min_weighted(&|w| f.real_part(w), m, omega0, SIGMA_WINDOW_END.max(omega0));
        windowed.min(f.real_leading_ratio()).max(0.0)
    };
    report.m = Some(m);
    report.sigma_e = sigma(e);
    report.sigma_h = sigma(h);
    report.omega0 = omega0;
    if report.sigma_e + report.sigma_h <= 0.0 {
        return Err(Error::NoExponent("σ_E + σ_H vanishes".into()));
    }
    Ok(())
}

fn sampled_exponent(e: &FieldForm, h: &FieldForm, grid: &SampledGrid, report: &mut PassivityReport) -> Result<()> {
    let omegas = grid.omegas();
    let re_e = sampled_or_rational(e, &omegas);
    let re_h = sampled_or_rational(h, &omegas);
    let total: Vec<f64> = re_e.iter().zip(&re_h).map(|(a, b)| a + b).collect();
    // slope of log R against log ω over the top decade
    let top = grid.omega_max / 10.0;
    let pts: Vec<(f64, f64)> =
        omegas.iter().zip(&total).filter(|(&w, _)| w >= top).map(|(&w, &r)| (w.ln(), r.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::NoExponent("too few samples in the top frequency decade".into()));
    }
    let slope = crate::decay::least_squares(&pts).slope;
    let m = (-slope).round();
    if !(m >= 0.0) || (m + slope).abs() > 0.25 || (m as u32) % 2 != 0 {
        return Err(Error::NoExponent(format!("asymptotic slope {slope:.3} is not a nonpositive even integer")));
    }
    let m = m as u32;
    let omega0 = 1.0_f64.max(grid.omega_min);
    let sigma = |re: &[f64]| -> f64 {
        omegas
            .iter()
            .zip(re)
            .filter(|(&w, _)| w >= omega0)
            .map(|(&w, &r)| w.powi(m as i32) * r)
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    };
    let tail_scale = |re: &[f64]| re.last().copied().unwrap_or(0.0) * grid.omega_max.powi(m as i32);
    // a field whose weighted real part dies off at the top of the grid does not contribute
    let contributes = |re: &[f64]| tail_scale(re) > 1e-3 * tail_scale(&total);
    report.m = Some(m);
    report.sigma_e = if contributes(&re_e) { sigma(&re_e) } else { 0.0 };
    report.sigma_h = if contributes(&re_h) { sigma(&re_h) } else { 0.0 };
    report.omega0 = omega0;
    if report.sigma_e + report.sigma_h <= 0.0 {
        return Err(Error::NoExponent("σ_E + σ_H vanishes on the sampled grid".into()));
    }
    Ok(())
}

/// All three checks; a missing exponent is recorded in the report instead of
/// being returned as an error.
pub fn analyze(nu_e: &Kernel, nu_h: &Kernel) -> Result<PassivityReport> {
    analyze_with(nu_e, nu_h, &SampledGrid::default())
}

pub fn analyze_with(nu_e: &Kernel, nu_h: &Kernel, grid: &SampledGrid) -> Result<PassivityReport> {
    let e = field_form(nu_e, grid)?;
    let h = field_form(nu_h, grid)?;
    let mut report = passivity_from_forms(&e, &h);
    if !report.passive {
        return Ok(report);
    }
    let (strict, witnesses) = strict_from_forms(&e, &h, grid)?;
    report.strictly_passive = strict;
    report.witnesses = witnesses;
    if !strict {
        report.m_failure = Some("medium is not strictly passive".into());
        return Ok(report);
    }
    let outcome = match (&e, &h) {
        (FieldForm::Rational(er), FieldForm::Rational(hr)) => rational_exponent(er, hr, &mut report),
        _ => sampled_exponent(&e, &h, grid, &mut report),
    };
    if let Err(err) = outcome {
        report.m = None;
        report.sigma_e = 0.0;
        report.sigma_h = 0.0;
        report.m_failure = Some(err.to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn debye() -> Kernel {
        ExpPolyKernel::debye(1.0, 1.0).unwrap().into()
    }
    fn lorentz() -> Kernel {
        ExpPolyKernel::lorentz(1.0, 1.0, 1.0).unwrap().into()
    }
    fn drude() -> Kernel {
        ExpPolyKernel::drude(1.0, 1.0).unwrap().into()
    }

    #[test]
    fn debye_form() {
        let f = omega_form(&ExpPolyKernel::debye(1.0, 1.0).unwrap());
        assert_eq!(f.pr, RealPoly::new(vec![0.0, 0.0, 1.0]));
        assert_eq!(f.qr, RealPoly::new(vec![1.0, 0.0, 1.0]));
        // β τ² ω² / (1 + τ² ω²) for β = 2, τ = 3
        let f = omega_form(&ExpPolyKernel::debye(2.0, 3.0).unwrap());
        for w in [0.1, 1.0, 7.0] {
            let want = 2.0 * 9.0 * w * w / (1.0 + 9.0 * w * w);
            assert!((f.real_part(w) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn drude_form() {
        let f = omega_form(&ExpPolyKernel::drude(1.0, 1.0).unwrap());
        assert_eq!(f.pr.degree(), Some(0));
        for w in [0.0, 0.5, 3.0] {
            assert!((f.real_part(w) - 1.0 / (1.0 + w * w)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_form() {
        let f = omega_form(&ExpPolyKernel::zero());
        assert!(f.pr.is_zero() && f.pi.is_zero());
        assert_eq!(f.qr, RealPoly::one());
        assert_eq!(f.qi, RealPoly::one());
    }

    #[test]
    fn passivity_examples() {
        let z = Kernel::zero();
        assert!(check_passivity(&debye(), &z).unwrap().passive);
        assert!(check_passivity(&lorentz(), &z).unwrap().passive);
        let neg: Kernel = ExpPolyKernel::exp_series(&[(-1.0, 0.0, -1.0, 0.0)]).unwrap().into();
        let r = check_passivity(&neg, &z).unwrap();
        assert!(!r.passive);
        assert_eq!(r.witnesses, vec![1.0]);
    }

    #[test]
    fn strict_passivity_examples() {
        let z = Kernel::zero();
        assert!(check_strict_passivity(&debye(), &z).unwrap().strictly_passive);
        assert!(check_strict_passivity(&drude(), &z).unwrap().strictly_passive);
        assert!(!check_strict_passivity(&z, &z).unwrap().strictly_passive);
    }

    #[test]
    fn interior_touching_zero_is_passive_but_not_strict() {
        // Re = ω² (ω² − 1)² / |D|² style: combine Debye-like pieces so the real
        // part touches zero at ω = 1. Easiest to test on the polynomial layer.
        let u = &RealPoly::new(vec![-1.0, 1.0]) * &RealPoly::new(vec![-1.0, 1.0]);
        assert!(negative_samples(&u).unwrap().is_empty());
        assert_eq!(positive_roots(&u).unwrap().len(), 1);
    }

    #[test]
    fn exponents() {
        let z = Kernel::zero();
        let r = decay_exponent(&debye(), &z).unwrap();
        assert_eq!(r.m, Some(0));
        assert!((r.sigma_e - 0.5).abs() < 1e-9, "{}", r.sigma_e);
        assert_eq!(r.sigma_h, 0.0);
        assert_eq!(r.omega0, 1.0);
        assert_eq!(decay_exponent(&lorentz(), &z).unwrap().m, Some(2));
        assert_eq!(decay_exponent(&drude(), &z).unwrap().m, Some(2));
        assert!(matches!(decay_exponent(&z, &z), Err(Error::NotStrictlyPassive)));
    }

    #[test]
    fn both_fields_contribute() {
        let r = decay_exponent(&debye(), &debye()).unwrap();
        assert_eq!(r.m, Some(0));
        assert!(r.sigma_e > 0.0 && r.sigma_h > 0.0);
        let r = decay_exponent(&debye(), &lorentz()).unwrap();
        assert_eq!(r.m, Some(0));
        assert!(r.sigma_e > 0.0);
        assert_eq!(r.sigma_h, 0.0);
    }

    #[test]
    fn analyze_records_failure() {
        let z = Kernel::zero();
        let r = analyze(&z, &z).unwrap();
        assert!(r.passive && !r.strictly_passive && r.m.is_none());
        assert!(r.m_failure.is_some());
    }

    #[test]
    fn sup_modulus_of_debye() {
        // |iω/(1 + iω)| increases to 1
        let f = omega_form(&ExpPolyKernel::debye(1.0, 1.0).unwrap());
        assert!((f.sup_modulus().unwrap() - 1.0).abs() < 1e-12);
    }
}
