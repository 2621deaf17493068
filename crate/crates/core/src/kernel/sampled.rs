//! Black-box kernels known only through point evaluations of `ν`, `ν′`, `ν″`
//! and a claimed decay bound `|ν″(t)| ≤ C e^{−δt}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::ExpPolyKernel;

/// `t ↦ [ν(t), ν′(t), ν″(t)]`
pub type Evaluator = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Claimed bound `|ν″(t)| ≤ C e^{−δt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    pub c: f64,
    pub delta: f64,
}

impl DecayBound {
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidKernel(format!("C must be positive, got {c}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidKernel(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { c, delta })
    }

    /// The weight `w(t) = C e^{−δt}`.
    pub fn weight(&self, t: f64) -> f64 {
        self.c * (-self.delta * t).exp()
    }

    /// Smallest `T` with `∫_T^∞ C e^{−δt} dt ≤ tol`.
    pub fn tail_horizon(&self, tol: f64) -> f64 {
        ((self.c / (self.delta * tol)).ln() / self.delta).max(0.0)
    }
}

#[derive(Clone)]
pub struct SampledKernel {
    name: String,
    evaluator: Evaluator,
    bound: DecayBound,
}

impl fmt::Debug for SampledKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledKernel").field("name", &self.name).field("bound", &self.bound).finish()
    }
}

impl SampledKernel {
    pub fn new(name: impl Into<String>, evaluator: Evaluator, bound: DecayBound) -> Self {
        Self { name: name.into(), evaluator, bound }
    }

    /// `ν(t) = e^{−t²}`
    pub fn gaussian(bound: DecayBound) -> Self {
        let eval: Evaluator = Arc::new(|t: f64| {
            let g = (-t * t).exp();
            [g, -2.0 * t * g, (4.0 * t * t - 2.0) * g]
        });
        Self::new("gaussian", eval, bound)
    }

    /// Wraps an exponential-polynomial kernel as a black box, e.g. to run it
    /// through the quadrature path.
    pub fn from_exp_poly(kernel: ExpPolyKernel, bound: DecayBound) -> Self {
        let eval: Evaluator = Arc::new(move |t: f64| {
            [kernel.eval_unchecked(t, 0), kernel.eval_unchecked(t, 1), kernel.eval_unchecked(t, 2)]
        });
        Self::new("exp_poly", eval, bound)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> DecayBound {
        self.bound
    }

    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        match order {
            0..=2 => Ok((self.evaluator)(t)[order]),
            _ => Err(Error::InvalidArgument(format!("sampled kernels provide derivatives up to order 2, got {order}"))),
        }
    }

    pub(crate) fn eval_all(&self, t: f64) -> [f64; 3] {
        (self.evaluator)(t)
    }
}

/// Default decay bounds for registry kernels.
pub fn builtin_default_bound(name: &str) -> Option<DecayBound> {
    match name {
        // max |(4t²−2)e^{−t²}| e^{t} ≈ 3.3413 at t ≈ 1.43
        "gaussian" => Some(DecayBound { c: 3.5, delta: 1.0 }),
        _ => None,
    }
}

/// Looks up a registry kernel by name.
pub fn builtin(name: &str, bound: DecayBound) -> Result<SampledKernel> {
    match name {
        "gaussian" => Ok(SampledKernel::gaussian(bound)),
        other => Err(Error::InvalidKernel(format!("unknown builtin kernel `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivatives() {
        let g = SampledKernel::gaussian(DecayBound::new(3.5, 1.0).unwrap());
        let t = 0.7_f64;
        let h = 1e-5;
        let fd1 = (g.eval(t + h, 0).unwrap() - g.eval(t - h, 0).unwrap()) / (2.0 * h);
        let fd2 = (g.eval(t + h, 1).unwrap() - g.eval(t - h, 1).unwrap()) / (2.0 * h);
        assert!((fd1 - g.eval(t, 1).unwrap()).abs() < 1e-9);
        assert!((fd2 - g.eval(t, 2).unwrap()).abs() < 1e-9);
        assert!(g.eval(-1.0, 0).is_err());
        assert!(g.eval(1.0, 3).is_err());
    }

    #[test]
    fn bound_validation() {
        assert!(DecayBound::new(0.0, 1.0).is_err());
        assert!(DecayBound::new(1.0, -1.0).is_err());
        let b = DecayBound::new(2.0, 0.5).unwrap();
        let h = b.tail_horizon(1e-10);
        assert!((b.c / b.delta * (-b.delta * h).exp() - 1e-10).abs() < 1e-20);
    }

    #[test]
    fn unknown_builtin() {
        assert!(builtin("lorentzian", DecayBound::new(1.0, 1.0).unwrap()).is_err());
    }
}
