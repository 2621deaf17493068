//! Dense linear-algebra helpers: diagonal balancing, eigenvalues and the
//! matrix exponential.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Parlett–Reinsch balancing with power-of-two scale factors.
///
/// Returns `D⁻¹ A D` for a diagonal `D`, which has the same eigenvalues as `A`
/// but row and column norms of comparable size.
pub fn balance(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            return a;
        }
    }
}

/// All eigenvalues of a real square matrix, computed from the real Schur form
/// of the balanced matrix. Sorted by descending real part, then imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let balanced = balance(a.clone());
    let scale = balanced.amax().max(f64::MIN_POSITIVE);
    // QR iterations without exceptional shifts can stall on symmetric
    // spectra such as repeated roots at ±i; a real shift breaks the symmetry.
    // A deflation tolerance at the rounding floor can also stall on clusters.
    let attempts = [f64::EPSILON, 8.0 * f64::EPSILON]
        .into_iter()
        .flat_map(|eps| [0.0, 0.1234, -0.3141, 0.7071, -0.05].map(move |s| (eps, s)));
    for (eps, shift) in attempts {
        let mut m = balanced.clone();
        for i in 0..n {
            m[(i, i)] += shift * scale;
        }
        if let Some(schur) = Schur::try_new(m, eps, 100 * n) {
            let mut eigs: Vec<Complex64> =
                schur.complex_eigenvalues().iter().map(|l| l - shift * scale).collect();
            sort_eigenvalues(&mut eigs);
            return Ok(eigs);
        }
    }
    Err(Error::Numeric(format!("Schur iteration did not converge ({n}x{n})")))
}

pub(crate) fn sort_eigenvalues(eigs: &mut [Complex64]) {
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// `exp(A·dt)` by scaling and squaring with a Padé approximant.
pub fn expm(a: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let p = (a * dt).exp();
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(p)
}
