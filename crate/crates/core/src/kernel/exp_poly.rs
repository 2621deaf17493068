//! Exponential-polynomial susceptibility kernels
//! `ν(t) = c + Σ_j (p_j(t) cos(y_j t) + q_j(t) sin(y_j t)) e^{x_j t}` with `x_j < 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{ComplexPoly, RealPoly};

/// Two exponents closer than this (relative) are merged into one term.
const EXPONENT_MERGE_TOL: f64 = 1e-12;

/// One damped oscillation `(p(t) cos(y t) + q(t) sin(y t)) e^{x t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTerm {
    /// Coefficients of `p`, ascending degree.
    pub cos_poly: Vec<f64>,
    /// Coefficients of `q`, ascending degree. Empty when `freq == 0`.
    pub sin_poly: Vec<f64>,
    /// `x`, strictly negative.
    pub decay: f64,
    /// `y`, nonnegative.
    pub freq: f64,
}

impl RealTerm {
    /// `C(t) = p(t) − i q(t)` so that the term equals `Re(C(t) e^{zt})`.
    fn envelope(&self) -> ComplexPoly {
        let n = self.cos_poly.len().max(self.sin_poly.len());
        ComplexPoly::new(
            (0..n)
                .map(|k| {
                    let p = self.cos_poly.get(k).copied().unwrap_or(0.0);
                    let q = self.sin_poly.get(k).copied().unwrap_or(0.0);
                    Complex64::new(p, -q)
                })
                .collect(),
        )
    }

    pub fn exponent(&self) -> Complex64 {
        Complex64::new(self.decay, self.freq)
    }

    /// Degree of the envelope polynomial.
    pub fn degree(&self) -> usize {
        self.envelope().degree().unwrap_or(0)
    }

    pub fn is_oscillatory(&self) -> bool {
        self.freq != 0.0
    }

    fn from_envelope(c: &ComplexPoly, z: Complex64) -> Self {
        let cos_poly = c.real_part().coeffs().to_vec();
        let sin_poly = if z.im == 0.0 {
            Vec::new()
        } else {
            (-&c.imag_part()).coeffs().to_vec()
        };
        Self { cos_poly, sin_poly, decay: z.re, freq: z.im }
    }
}

/// Exponential-polynomial kernel stored in real cos/sin form.
///
/// `offset` is a constant long-time limit (the Drude plateau); it adds nothing
/// to `ν′` and `ν″`, so the kernel stays in class K.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPolyKernel {
    terms: Vec<RealTerm>,
    offset: f64,
}

impl ExpPolyKernel {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a kernel from real terms, normalizing sign of the frequency and
    /// merging terms that share an exponent.
    pub fn new(terms: Vec<RealTerm>, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidKernel("offset must be finite".into()));
        }
        let mut pieces: Vec<(ComplexPoly, Complex64)> = Vec::new();
        for t in terms {
            let finite = t.decay.is_finite()
                && t.freq.is_finite()
                && t.cos_poly.iter().chain(&t.sin_poly).all(|c| c.is_finite());
            if !finite {
                return Err(Error::InvalidKernel("non-finite term coefficient".into()));
            }
            if t.decay >= 0.0 {
                return Err(Error::NotInClassK(format!(
                    "term with exponent {} + {}i has nonnegative real part",
                    t.decay, t.freq
                )));
            }
            // sin(-y t) = -sin(y t)
            let t = if t.freq < 0.0 {
                RealTerm {
                    sin_poly: t.sin_poly.iter().map(|c| -c).collect(),
                    freq: -t.freq,
                    ..t
                }
            } else {
                t
            };
            let z = t.exponent();
            let env = if z.im == 0.0 { t.envelope().real_part().to_complex() } else { t.envelope() };
            match pieces.iter_mut().find(|(_, w)| same_exponent(*w, z)) {
                Some((acc, _)) => *acc = &*acc + &env,
                None => pieces.push((env, z)),
            }
        }
        let terms = pieces
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, z)| RealTerm::from_envelope(&c, z))
            .collect();
        Ok(Self { terms, offset })
    }

    /// Builds a kernel from a conjugate-closed list of complex terms
    /// `Σ P_j(t) e^{z_j t}`.
    ///
    /// A term with `z = 0` exactly and a real constant polynomial is taken as
    /// the constant offset.
    pub fn from_complex_terms(terms: &[(ComplexPoly, Complex64)]) -> Result<Self> {
        let mut merged: Vec<(ComplexPoly, Complex64)> = Vec::new();
        for (p, z) in terms {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidKernel("non-finite exponent".into()));
            }
            match merged.iter_mut().find(|(_, w)| same_exponent(*w, *z)) {
                Some((acc, _)) => *acc = &*acc + p,
                None => merged.push((p.clone(), *z)),
            }
        }
        let mut offset = 0.0;
        let mut real_terms = Vec::new();
        let mut used = vec![false; merged.len()];
        for i in 0..merged.len() {
            if used[i] {
                continue;
            }
            let (p, z) = &merged[i];
            if p.is_zero() {
                continue;
            }
            if z.re == 0.0 && z.im == 0.0 {
                if p.degree() == Some(0) && is_real_poly(p) {
                    offset += p.coeff(0).re;
                    used[i] = true;
                    continue;
                }
                return Err(Error::NotInClassK(
                    "a z = 0 term must be a real constant (otherwise ν′ does not vanish at infinity)".into(),
                ));
            }
            if z.re >= 0.0 {
                return Err(Error::NotInClassK(format!(
                    "term with exponent {} + {}i has nonnegative real part",
                    z.re, z.im
                )));
            }
            if z.im == 0.0 {
                if !is_real_poly(p) {
                    return Err(Error::InvalidKernel(format!(
                        "term with real exponent {} has a complex polynomial; the kernel would not be real",
                        z.re
                    )));
                }
                used[i] = true;
                real_terms.push(RealTerm::from_envelope(&p.real_part().to_complex(), *z));
                continue;
            }
            let partner = (0..merged.len()).find(|&j| {
                !used[j] && j != i && same_exponent(merged[j].1, z.conj()) && polys_close(&merged[j].0, &p.conj())
            });
            let Some(j) = partner else {
                return Err(Error::InvalidKernel(format!(
                    "term with exponent {} + {}i has no conjugate partner; the kernel would not be real",
                    z.re, z.im
                )));
            };
            used[i] = true;
            used[j] = true;
            // P e^{zt} + P̄ e^{z̄t} = Re(2P e^{zt}), taken on the upper half plane
            let (p, z) = if z.im > 0.0 { (p.clone(), *z) } else { (merged[j].0.clone(), merged[j].1) };
            real_terms.push(RealTerm::from_envelope(&p.scale(Complex64::new(2.0, 0.0)), z));
        }
        Self::new(real_terms, offset)
    }

    /// Conjugate-closed complex form `Σ P_j(t) e^{z_j t}`, with the offset as a
    /// `z = 0` term.
    pub fn complex_terms(&self) -> Vec<(ComplexPoly, Complex64)> {
        let mut out = Vec::new();
        if self.offset != 0.0 {
            out.push((ComplexPoly::constant(Complex64::new(self.offset, 0.0)), Complex64::new(0.0, 0.0)));
        }
        out.extend(self.decaying_pieces());
        out
    }

    /// The decaying part as complex pieces (no offset).
    fn decaying_pieces(&self) -> Vec<(ComplexPoly, Complex64)> {
        let half = Complex64::new(0.5, 0.0);
        let mut out = Vec::new();
        for t in &self.terms {
            let z = t.exponent();
            let c = t.envelope();
            if t.is_oscillatory() {
                out.push((c.scale(half), z));
                out.push((c.conj().scale(half), z.conj()));
            } else {
                out.push((c, z));
            }
        }
        out
    }

    /// `β e^{−t/τ}`
    pub fn debye(beta: f64, tau: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("tau", tau)?;
        Self::new(vec![RealTerm { cos_poly: vec![beta], sin_poly: vec![], decay: -1.0 / tau, freq: 0.0 }], 0.0)
    }

    /// `β sin(ν₀ t) e^{−ν t / 2}`
    pub fn lorentz(beta: f64, nu0: f64, nu: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("nu0", nu0)?;
        check_positive("nu", nu)?;
        Self::new(vec![RealTerm { cos_poly: vec![], sin_poly: vec![beta], decay: -nu / 2.0, freq: nu0 }], 0.0)
    }

    /// `β (1 − e^{−ν t})`
    pub fn drude(beta: f64, nu: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("nu", nu)?;
        Self::new(vec![RealTerm { cos_poly: vec![-beta], sin_poly: vec![], decay: -nu, freq: 0.0 }], beta)
    }

    /// Finite exponential series `Σ_j (a_j cos(y_j t) + b_j sin(y_j t)) e^{x_j t}`.
    pub fn exp_series(entries: &[(f64, f64, f64, f64)]) -> Result<Self> {
        let terms = entries
            .iter()
            .map(|&(a, b, x, y)| RealTerm { cos_poly: vec![a], sin_poly: vec![b], decay: x, freq: y })
            .collect();
        Self::new(terms, 0.0)
    }

    pub fn terms(&self) -> &[RealTerm] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.offset == 0.0
    }

    /// Smallest `|Re z_j|`; `None` when there are no decaying terms.
    pub fn min_decay(&self) -> Option<f64> {
        self.terms.iter().map(|t| -t.decay).reduce(f64::min)
    }

    /// Exact value of `ν`, `ν′` or `ν″` (any order) at `t ≥ 0`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.eval_unchecked(t, order))
    }

    pub(crate) fn eval_unchecked(&self, t: f64, order: usize) -> f64 {
        let mut sum = if order == 0 { self.offset } else { 0.0 };
        for term in &self.terms {
            let z = term.exponent();
            let c = differentiate_envelope(&term.envelope(), z, order);
            let v = c.eval_real(t) * (z * t).exp();
            sum += v.re;
        }
        sum
    }

    /// Exact derivative kernel `ν′`.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let z = t.exponent();
                RealTerm::from_envelope(&differentiate_envelope(&t.envelope(), z, 1), z)
            })
            .collect();
        Self { terms, offset: 0.0 }
    }

    /// `ν(0)`
    pub fn initial_value(&self) -> f64 {
        self.offset + self.terms.iter().map(|t| t.cos_poly.first().copied().unwrap_or(0.0)).sum::<f64>()
    }

    /// Closed-form Laplace transform
    /// `Lν(λ) = c/λ + Σ_j Σ_ℓ P_j^{(ℓ)}(0) / (λ − z_j)^{ℓ+1}`.
    pub fn laplace(&self, lambda: Complex64) -> Result<Complex64> {
        if lambda.re < 0.0 {
            return Err(Error::UnsupportedPoint {
                re: lambda.re,
                im: lambda.im,
                reason: "closed form is only used on the closed right half plane",
            });
        }
        let mut sum = Complex64::new(0.0, 0.0);
        if self.offset != 0.0 {
            if lambda.norm() == 0.0 {
                return Err(Error::UnsupportedPoint {
                    re: 0.0,
                    im: 0.0,
                    reason: "a constant offset makes the transform singular at the origin",
                });
            }
            sum += self.offset / lambda;
        }
        for (p, z) in self.decaying_pieces() {
            sum += partial_fraction_sum(&p, z, lambda);
        }
        Ok(sum)
    }

    /// `λ Lν(λ) = ν(0) + Lν′(λ)` in closed form; finite on the whole
    /// imaginary axis including the origin.
    pub fn lambda_laplace(&self, lambda: Complex64) -> Complex64 {
        let d = self.derivative();
        let mut sum = Complex64::new(self.initial_value(), 0.0);
        for (p, z) in d.decaying_pieces() {
            sum += partial_fraction_sum(&p, z, lambda);
        }
        sum
    }

    /// `λ Lν(λ)` as a reduced real rational function `N(λ)/D(λ)`.
    ///
    /// `D = Π (λ − z_j)^{d_j+1}` over all exponents of `ν′` (conjugates
    /// included); no factor of `D` divides `N`.
    pub fn lambda_laplace_rational(&self) -> (RealPoly, RealPoly) {
        let d = self.derivative();
        let mut num = ComplexPoly::zero();
        let mut den = ComplexPoly::one();
        for (q, z) in d.decaying_pieces() {
            let deg = q.degree().unwrap_or(0);
            // Σ_ℓ Q^{(ℓ)}(0) (λ − z)^{deg−ℓ} over (λ − z)^{deg+1}
            let lin = ComplexPoly::linear(z);
            let mut n = ComplexPoly::zero();
            let mut fact = 1.0;
            for l in 0..=deg {
                if l > 0 {
                    fact *= l as f64;
                }
                let c = q.coeff(l) * fact;
                n = &n + &lin.pow(deg - l).scale(c);
            }
            let dpiece = lin.pow(deg + 1);
            num = &(&num * &dpiece) + &(&n * &den);
            den = &den * &dpiece;
        }
        let den_r = den.real_part();
        let num_r = &num.real_part() + &den_r.scale(self.initial_value());
        (num_r, den_r)
    }
}

/// Coefficients of `C_k` with `d^k/dt^k [C(t) e^{zt}] = C_k(t) e^{zt}`.
fn differentiate_envelope(c: &ComplexPoly, z: Complex64, order: usize) -> ComplexPoly {
    let mut c = c.clone();
    for _ in 0..order {
        c = &c.derivative() + &c.scale(z);
    }
    c
}

fn partial_fraction_sum(p: &ComplexPoly, z: Complex64, lambda: Complex64) -> Complex64 {
    let inv = 1.0 / (lambda - z);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    let mut fact = 1.0;
    for (l, &c) in p.coeffs().iter().enumerate() {
        if l > 0 {
            fact *= l as f64;
        }
        acc += c * fact * pow;
        pow *= inv;
    }
    acc
}

fn same_exponent(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= EXPONENT_MERGE_TOL * (1.0 + a.norm())
}

fn is_real_poly(p: &ComplexPoly) -> bool {
    let scale = p.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    p.coeffs().iter().all(|c| c.im.abs() <= 1e-12 * (1.0 + scale))
}

fn polys_close(a: &ComplexPoly, b: &ComplexPoly) -> bool {
    let n = a.coeffs().len().max(b.coeffs().len());
    let scale = a.coeffs().iter().chain(b.coeffs()).fold(0.0_f64, |m, c| m.max(c.norm()));
    (0..n).all(|k| (a.coeff(k) - b.coeff(k)).norm() <= 1e-12 * (1.0 + scale))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{name} must be positive, got {v}")))
    }
}
