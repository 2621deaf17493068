use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::Range;

use super::MediumSpec;
use crate::error::{Error, Result};
use crate::kernel::{ExpPolyKernel, Kernel};
use crate::linalg;
use crate::poly::RealPoly;

/// Position of each state component in a [`ModeSystem`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    pub e: usize,
    pub h: usize,
    pub e_aux: Range<usize>,
    pub h_aux: Range<usize>,
}

impl IndexMap {
    pub fn dim(&self) -> usize {
        self.h_aux.end
    }
}

/// `U′ = A U` for one cavity mode: the two field amplitudes followed by the
/// memory states of `ν_E` and `ν_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystem {
    pub k: f64,
    pub eps: f64,
    pub mu: f64,
    pub a: DMatrix<f64>,
    pub index: IndexMap,
}

/// Memory states and read-out weights for one kernel.
struct Closure {
    /// Auxiliary block entries in local indices.
    entries: Vec<(usize, usize, f64)>,
    /// Local rows driven by the field.
    inputs: Vec<usize>,
    readout: Vec<f64>,
    dim: usize,
}

/// Realizes `ν′ ∗ F` as a linear read-out of auxiliary states driven by `F`.
///
/// For `ν′(τ) = Σ_ℓ c_ℓ τ^ℓ e^{zτ}` the chain `φ₀′ = zφ₀ + F`,
/// `φ_ℓ′ = zφ_ℓ + φ_{ℓ−1}` gives `φ_ℓ(t) = ∫₀ᵗ (t−s)^ℓ/ℓ! e^{z(t−s)} F(s) ds`,
/// so the convolution is `Σ_ℓ ℓ! c_ℓ φ_ℓ`. Complex `z` uses real `(a, b)`
/// pairs for `φ_ℓ = a_ℓ + i b_ℓ`.
fn closure(kernel: &ExpPolyKernel) -> Closure {
    let d = kernel.derivative();
    let mut c = Closure { entries: Vec::new(), inputs: Vec::new(), readout: Vec::new(), dim: 0 };
    for term in d.terms() {
        let deg = term.degree();
        let (x, y) = (term.decay, term.freq);
        let mut fact = 1.0;
        let base = c.dim;
        if !term.is_oscillatory() {
            for l in 0..=deg {
                if l > 0 {
                    fact *= l as f64;
                }
                let i = base + l;
                c.entries.push((i, i, x));
                if l == 0 {
                    c.inputs.push(i);
                } else {
                    c.entries.push((i, i - 1, 1.0));
                }
                c.readout.push(fact * term.cos_poly.get(l).copied().unwrap_or(0.0));
            }
            c.dim += deg + 1;
        } else {
            for l in 0..=deg {
                if l > 0 {
                    fact *= l as f64;
                }
                let (ia, ib) = (base + 2 * l, base + 2 * l + 1);
                c.entries.extend([(ia, ia, x), (ia, ib, -y), (ib, ia, y), (ib, ib, x)]);
                if l == 0 {
                    c.inputs.push(ia);
                } else {
                    c.entries.extend([(ia, ia - 2, 1.0), (ib, ib - 2, 1.0)]);
                }
                // Re((p − iq)(a + ib)) = p a + q b
                c.readout.push(fact * term.cos_poly.get(l).copied().unwrap_or(0.0));
                c.readout.push(fact * term.sin_poly.get(l).copied().unwrap_or(0.0));
            }
            c.dim += 2 * (deg + 1);
        }
    }
    c
}

fn exp_poly(kernel: &Kernel) -> Result<&ExpPolyKernel> {
    kernel.as_exp_poly().ok_or(Error::UnsupportedKernel)
}

/// Builds the augmented system for the mode with curl eigenvalue `k`.
pub fn build_mode(medium: &MediumSpec, k: f64) -> Result<ModeSystem> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidArgument(format!("mode wavenumber must be nonnegative, got {k}")));
    }
    let (ke, kh) = (exp_poly(&medium.nu_e)?, exp_poly(&medium.nu_h)?);
    let (ce, ch) = (closure(ke), closure(kh));
    let index = IndexMap { e: 0, h: 1, e_aux: 2..2 + ce.dim, h_aux: 2 + ce.dim..2 + ce.dim + ch.dim };
    let n = index.dim();
    let mut a = DMatrix::zeros(n, n);
    let (eps, mu) = (medium.eps, medium.mu);

    a[(0, 0)] = -ke.initial_value() / eps;
    a[(0, 1)] = k / eps;
    a[(1, 1)] = -kh.initial_value() / mu;
    a[(1, 0)] = -k / mu;
    for (field, c, off, scale) in [(0, &ce, index.e_aux.start, eps), (1, &ch, index.h_aux.start, mu)] {
        for &(i, j, v) in &c.entries {
            a[(off + i, off + j)] += v;
        }
        for &i in &c.inputs {
            a[(off + i, field)] += 1.0;
        }
        for (j, &w) in c.readout.iter().enumerate() {
            a[(field, off + j)] -= w / scale;
        }
    }
    Ok(ModeSystem { k, eps, mu, a, index })
}

impl ModeSystem {
    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    /// `(E, H) = (amplitude, 0)` with zero memory.
    pub fn initial_state(&self, amplitude: f64) -> DVector<f64> {
        let mut u = DVector::zeros(self.dim());
        u[self.index.e] = amplitude;
        u
    }

    /// `½(ε E² + μ H²)`
    pub fn energy(&self, state: &DVector<f64>) -> f64 {
        let (e, h) = (state[self.index.e], state[self.index.h]);
        0.5 * (self.eps * e * e + self.mu * h * h)
    }

    pub fn propagator(&self, dt: f64) -> Result<Propagator> {
        Ok(Propagator { matrix: linalg::expm(&self.a, dt)?, dt })
    }
}

/// `exp(A·dt)` for a fixed step.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: DMatrix<f64>,
    dt: f64,
}

impl Propagator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn step(&self, state: &DVector<f64>) -> Result<DVector<f64>> {
        check_state(state, self.matrix.nrows())?;
        Ok(&self.matrix * state)
    }
}

fn check_state(state: &DVector<f64>, n: usize) -> Result<()> {
    if state.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: state.len() });
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("state has non-finite entries".into()));
    }
    Ok(())
}

/// One exact step `exp(A·dt)·state`.
pub fn step_exact(system: &ModeSystem, state: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    check_state(state, system.dim())?;
    system.propagator(dt)?.step(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub abscissa: f64,
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
}

pub fn spectral_abscissa(system: &ModeSystem) -> Result<Spectrum> {
    let eigenvalues = linalg::eigenvalues(&system.a)?;
    let abscissa = eigenvalues.first().map_or(f64::NEG_INFINITY, |l| l.re);
    Ok(Spectrum { abscissa, eigenvalues })
}

/// `(ελ D_E + N_E)(μλ D_H + N_H) + k² D_E D_H`, where `λLν = N/D`; its roots
/// are the zeros of `λ²(ε + Lν_E)(μ + Lν_H) + k²` together with any memory
/// poles that the fields cannot cancel.
pub fn dispersion_polynomial(medium: &MediumSpec, k: f64) -> Result<RealPoly> {
    let (ne, de) = exp_poly(&medium.nu_e)?.lambda_laplace_rational();
    let (nh, dh) = exp_poly(&medium.nu_h)?.lambda_laplace_rational();
    let x = RealPoly::x();
    let fe = &(&x * &de).scale(medium.eps) + &ne;
    let fh = &(&x * &dh).scale(medium.mu) + &nh;
    Ok(&(&fe * &fh) + &(&de * &dh).scale(k * k))
}

/// All complex roots of the dispersion polynomial.
pub fn dispersion_roots(medium: &MediumSpec, k: f64) -> Result<Vec<Complex64>> {
    let mut roots = dispersion_polynomial(medium, k)?.roots()?;
    linalg::sort_eigenvalues(&mut roots);
    Ok(roots)
}

/// Unit null vector of `A − λI` (the eigenvector for an eigenvalue `λ`).
pub fn eigenvector(system: &ModeSystem, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = system.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(system.a[(i, j)], 0.0) - if i == j { lambda } else { Complex64::new(0.0, 0.0) }
    });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("SVD did not return right singular vectors".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    Ok(v_t.row(imin).adjoint().into_owned())
}

/// Summed past history `η(s) = (1 − e^{−λs})/λ · F` of an eigen-solution
/// `F e^{λt}`, and the transport residual `λη + ∂_s η − F`.
pub fn eigen_history(lambda: Complex64, field: Complex64, s: f64) -> (Complex64, Complex64) {
    let decay = (-lambda * s).exp();
    let eta = if lambda.norm() == 0.0 { field * s } else { (1.0 - decay) / lambda * field };
    let d_eta = decay * field;
    (eta, lambda * eta + d_eta - field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(nu_e: ExpPolyKernel, nu_h: ExpPolyKernel) -> MediumSpec {
        MediumSpec::new(1.0, 1.0, nu_e.into(), nu_h.into()).unwrap()
    }

    fn charpoly_3x3(a: &DMatrix<f64>) -> [f64; 3] {
        // λ³ + c2 λ² + c1 λ + c0
        let tr = a.trace();
        let m2 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)]
            + a[(1, 1)] * a[(2, 2)]
            - a[(1, 2)] * a[(2, 1)];
        [-a.determinant(), m2, -tr]
    }

    #[test]
    fn debye_mode_matrix() {
        let m = medium(ExpPolyKernel::debye(1.0, 1.0).unwrap(), ExpPolyKernel::zero());
        let s = build_mode(&m, 1.0).unwrap();
        assert_eq!(s.dim(), 3);
        let c = charpoly_3x3(&s.a);
        for (got, want) in c.iter().zip([1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14, "{c:?}");
        }
        let p = dispersion_polynomial(&m, 1.0).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn lossless_modes() {
        let m = medium(ExpPolyKernel::zero(), ExpPolyKernel::zero());
        let s = build_mode(&m, 0.0).unwrap();
        assert_eq!(s.a, DMatrix::zeros(2, 2));
        let s = build_mode(&m, 1.0).unwrap();
        let sp = spectral_abscissa(&s).unwrap();
        assert!(sp.abscissa.abs() < 1e-14);
        for l in &sp.eigenvalues {
            assert!((l.im.abs() - 1.0).abs() < 1e-14);
        }
        let u = step_exact(&s, &s.initial_state(1.0), 2.0 * std::f64::consts::PI).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-10 && u[1].abs() < 1e-10);
        let u0 = DVector::from_vec(vec![0.3, -0.7]);
        assert_eq!(step_exact(&build_mode(&m, 0.0).unwrap(), &u0, 1.0).unwrap(), u0);
        let roots = dispersion_roots(&m, 3.0).unwrap();
        assert!(roots.iter().all(|r| r.re.abs() < 1e-12 && (r.im.abs() - 3.0).abs() < 1e-12));
    }

    #[test]
    fn debye_abscissa() {
        let m = medium(ExpPolyKernel::debye(1.0, 1.0).unwrap(), ExpPolyKernel::zero());
        let sp = spectral_abscissa(&build_mode(&m, 1.0).unwrap()).unwrap();
        // real root of λ³+2λ²+λ+1 near −1.7549; the pair shares the rest of the trace −2
        let real = sp.eigenvalues.iter().find(|l| l.im.abs() < 1e-12).unwrap().re;
        assert!((real + 1.754877666246693).abs() < 1e-12);
        assert!((sp.abscissa - (-2.0 - real) / 2.0).abs() < 1e-12);
        assert!((sp.abscissa + 0.1226).abs() < 1e-4);
    }

    #[test]
    fn oscillatory_and_polynomial_closures_reproduce_laplace() {
        // det(λI − A) must equal the dispersion polynomial divided by εμ
        let k = ExpPolyKernel::new(
            vec![crate::kernel::RealTerm { cos_poly: vec![0.4, -0.3, 0.2], sin_poly: vec![0.1, 0.5], decay: -0.7, freq: 1.3 }],
            0.2,
        )
        .unwrap();
        let m = MediumSpec::new(2.0, 0.5, k.into(), ExpPolyKernel::debye(0.5, 2.0).unwrap().into()).unwrap();
        let s = build_mode(&m, 2.5).unwrap();
        let p = dispersion_polynomial(&m, 2.5).unwrap();
        assert_eq!(p.degree(), Some(s.dim()));
        for lam in [Complex64::new(0.3, 0.4), Complex64::new(-1.0, 2.0), Complex64::new(2.0, 0.0)] {
            let n = s.dim();
            let mut b = DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(-s.a[(i, j)], 0.0));
            for i in 0..n {
                b[(i, i)] += lam;
            }
            let det = b.determinant() * m.eps * m.mu;
            let want = p.eval_complex(lam);
            assert!((det - want).norm() < 1e-9 * want.norm().max(1.0), "{det} vs {want}");
        }
    }

    #[test]
    fn sampled_kernels_have_no_closure() {
        let g = crate::kernel::SampledKernel::gaussian(crate::kernel::DecayBound::new(3.5, 1.0).unwrap());
        let m = MediumSpec::new(1.0, 1.0, g.into(), Kernel::zero()).unwrap();
        assert_eq!(build_mode(&m, 1.0).unwrap_err(), Error::UnsupportedKernel);
    }

    #[test]
    fn eigen_histories_satisfy_transport() {
        let m = medium(ExpPolyKernel::lorentz(1.0, 1.0, 1.0).unwrap(), ExpPolyKernel::debye(1.0, 1.0).unwrap());
        let s = build_mode(&m, 2.0).unwrap();
        for lam in spectral_abscissa(&s).unwrap().eigenvalues {
            let v = eigenvector(&s, lam).unwrap();
            let a = s.a.map(|x| Complex64::new(x, 0.0));
            assert!((&a * &v - &v * lam).norm() < 1e-10);
            for sv in [0.0, 0.5, 3.0] {
                let (eta, r) = eigen_history(lam, v[0], sv);
                assert!(r.norm() < 1e-12 * (1.0 + eta.norm()));
            }
        }
    }
}
