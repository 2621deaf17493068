//! Dense univariate polynomials with ascending coefficients, plus root
//! finding and real-root isolation for real coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{Num, Zero};

use crate::error::{Error, Result};
use crate::linalg;

/// Imaginary parts below `REAL_ROOT_TOL · (1 + |root|)` count as real.
pub const REAL_ROOT_TOL: f64 = 1e-10;

/// Coefficients `c[0] + c[1] x + … + c[n] xⁿ`. The zero polynomial has no
/// coefficients; otherwise the leading coefficient is nonzero.
#[derive(Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

pub type RealPoly = Poly<f64>;
pub type ComplexPoly = Poly<Complex64>;

impl<T: Num + Copy> Poly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    /// `x - root`.
    pub fn linear(root: T) -> Self {
        Self::new(vec![T::zero() - root, T::one()])
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().copied().unwrap_or_else(T::zero)
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        let mut k = T::one();
        for &c in self.coeffs.iter().skip(1) {
            out.push(c * k);
            k = k + T::one();
        }
        Self::new(out)
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }

    pub fn map<U: Num + Copy>(&self, f: impl Fn(T) -> U) -> Poly<U> {
        Poly::new(self.coeffs.iter().map(|&c| f(c)).collect())
    }
}

impl RealPoly {
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, &c| acc * z + c)
    }

    pub fn to_complex(&self) -> ComplexPoly {
        self.map(|c| Complex64::new(c, 0.0))
    }

    /// Sum of `|c_k| |x|^k`, the natural scale for rounding error in `eval(x)`.
    pub fn magnitude_at(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops leading coefficients that are negligible relative to the
    /// largest coefficient.
    pub fn trim_relative(&self, tol: f64) -> Self {
        let scale = self.max_abs_coeff();
        let mut coeffs = self.coeffs.clone();
        while matches!(coeffs.last(), Some(c) if c.abs() <= tol * scale) {
            coeffs.pop();
        }
        Self::new(coeffs)
    }

    /// Split `p(iω) = re(ω) + i·im(ω)` into two real polynomials in ω.
    pub fn at_imaginary_axis(&self) -> (RealPoly, RealPoly) {
        let mut re = vec![0.0; self.coeffs.len()];
        let mut im = vec![0.0; self.coeffs.len()];
        for (k, &c) in self.coeffs.iter().enumerate() {
            // i^k cycles 1, i, -1, -i
            match k % 4 {
                0 => re[k] = c,
                1 => im[k] = c,
                2 => re[k] = -c,
                _ => im[k] = -c,
            }
        }
        (Self::new(re), Self::new(im))
    }

    /// True if every odd-degree coefficient is exactly zero.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|c| *c == 0.0)
    }

    /// True if every even-degree coefficient is exactly zero.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|c| *c == 0.0)
    }

    /// `q(u)` with `p(x) = q(x²)`; only meaningful for even `p`.
    pub fn even_part_in_square(&self) -> RealPoly {
        Self::new(self.coeffs.iter().step_by(2).copied().collect())
    }

    /// Number of exactly-zero trailing coefficients, i.e. the multiplicity of
    /// the root at zero.
    pub fn zero_root_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|c| **c == 0.0).count()
    }

    /// Polynomial long division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &RealPoly) -> (RealPoly, RealPoly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Euclidean gcd with remainders below `tol` (relative to the dividend)
    /// treated as zero. The result is monic; the gcd of two zero
    /// polynomials is zero.
    pub fn gcd(&self, other: &RealPoly, tol: f64) -> RealPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            let r = if r.max_abs_coeff() <= tol * a.max_abs_coeff().max(b.max_abs_coeff()) {
                Self::zero()
            } else {
                r
            };
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let lead = a.leading();
            a.scale(1.0 / lead)
        }
    }

    /// All complex roots, counted with multiplicity.
    ///
    /// Exact zero roots are split off first; the rest come from the
    /// eigenvalues of the balanced companion matrix, polished by Newton
    /// steps on the polynomial itself.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let Some(deg) = self.degree() else {
            return Ok(Vec::new());
        };
        let zeros = self.zero_root_multiplicity();
        let reduced = RealPoly::new(self.coeffs[zeros..].to_vec());
        let mut roots = vec![Complex64::zero(); zeros];
        let rdeg = deg - zeros;
        if rdeg > 0 {
            let lead = reduced.leading();
            let mut companion = DMatrix::<f64>::zeros(rdeg, rdeg);
            for i in 1..rdeg {
                companion[(i, i - 1)] = 1.0;
            }
            for i in 0..rdeg {
                companion[(i, rdeg - 1)] = -reduced.coeffs[i] / lead;
            }
            let dp = reduced.derivative();
            let eigs = match linalg::eigenvalues(&companion) {
                Ok(e) => e,
                Err(_) => aberth(&reduced)?,
            };
            for z in eigs {
                roots.push(newton_polish(&reduced, &dp, z));
            }
        }
        linalg::sort_eigenvalues(&mut roots);
        Ok(roots)
    }

    /// Distinct real roots in ascending order. Near-real complex pairs whose
    /// real part is a numerical zero of the polynomial (touching roots) are
    /// included once.
    pub fn real_roots(&self) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = Vec::new();
        for r in self.roots()? {
            let scale = 1.0 + r.re.abs();
            let is_real = r.im.abs() < REAL_ROOT_TOL * scale
                || (r.im.abs() < 1e-6 * scale
                    && self.eval(r.re).abs() <= 1e-10 * self.magnitude_at(r.re));
            if is_real {
                out.push(r.re);
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));
        Ok(out)
    }

    /// Sign of `p(x)` with values within rounding noise of zero reported as 0.
    pub fn sign_at(&self, x: f64) -> i8 {
        let v = self.eval(x);
        if v.abs() <= 1e-12 * self.magnitude_at(x) {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Simultaneous Aberth–Ehrlich iteration, used when the companion QR stalls
/// on clustered roots.
fn aberth(p: &RealPoly) -> Result<Vec<Complex64>> {
    let n = p.degree().unwrap_or(0);
    let lead = p.leading().abs();
    // Fujiwara-type bound on the root moduli
    let radius = (0..n)
        .map(|k| (p.coeffs[k].abs() / lead).powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, (2.0 * std::f64::consts::PI * k as f64 + 0.4) / n as f64)).collect();
    let dp = p.derivative();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let ratio = p.eval_complex(z[k]) / dp.eval_complex(z[k]);
            if !ratio.is_finite() {
                continue;
            }
            let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numeric(format!("polynomial root iteration diverged (degree {n})")));
    }
    Ok(z)
}

fn newton_polish(p: &RealPoly, dp: &RealPoly, mut z: Complex64) -> Complex64 {
    let mut best = p.eval_complex(z).norm();
    for _ in 0..8 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval_complex(z) / d;
        let val = p.eval_complex(cand).norm();
        if !(val < best) {
            break;
        }
        best = val;
        z = cand;
    }
    z
}

impl ComplexPoly {
    pub fn real_part(&self) -> RealPoly {
        RealPoly::new(self.coeffs.iter().map(|c| c.re).collect())
    }

    pub fn imag_part(&self) -> RealPoly {
        RealPoly::new(self.coeffs.iter().map(|c| c.im).collect())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        self.eval(Complex64::new(x, 0.0))
    }
}

impl<T: Num + Copy> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Num + Copy> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Num + Copy> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }
}

impl<T: Num + Copy> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|&c| T::zero() - c).collect())
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl<T: Num + Copy> $tr for Poly<T> {
            type Output = Poly<T>;
            fn $m(self, rhs: Poly<T>) -> Poly<T> {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl<T: fmt::Debug> fmt::Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly{:?}", self.coeffs)
    }
}
