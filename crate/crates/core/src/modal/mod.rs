//! Modal reduction of the cavity problem. Each curl eigenmode with
//! eigenvalue `k` evolves independently:
//!
//! ```text
//! ε E′ + ν_E(0) E + ∫₀ᵗ ν_E′(t−s) E(s) ds − k H = 0
//! μ H′ + ν_H(0) H + ∫₀ᵗ ν_H′(t−s) H(s) ds + k E = 0
//! ```
//!
//! Exponential-polynomial kernels close this into a finite linear system
//! integrated by its matrix exponential; any kernel can also be stepped with
//! the brute-force history integrator.

mod history;
mod multimode;
mod system;

pub use history::{step_history, HistoryIntegrator, HistoryState};
pub use multimode::{cavity_modes, run_multimode, AmplitudeRule, EnergyTrace, ModeSpec, RunOptions, TRACE_HEADER};
pub use system::{
    build_mode, dispersion_polynomial, dispersion_roots, eigen_history, eigenvector, spectral_abscissa, step_exact,
    IndexMap, ModeSystem, Propagator, Spectrum,
};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Constant permittivity and permeability with the two susceptibility kernels.
#[derive(Debug, Clone)]
pub struct MediumSpec {
    pub eps: f64,
    pub mu: f64,
    pub nu_e: Kernel,
    pub nu_h: Kernel,
}

impl MediumSpec {
    pub fn new(eps: f64, mu: f64, nu_e: Kernel, nu_h: Kernel) -> Result<Self> {
        for (name, v) in [("eps", eps), ("mu", mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMedium(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { eps, mu, nu_e, nu_h })
    }
}
