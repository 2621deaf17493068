//! Media and kernels shared by the benchmarks.

use dispersia_core::modal::{cavity_modes, AmplitudeRule};
use dispersia_core::{ExpPolyKernel, Kernel, MediumSpec, ModeSpec};

pub fn debye() -> ExpPolyKernel {
    ExpPolyKernel::debye(1.0, 1.0).unwrap()
}

pub fn lorentz() -> ExpPolyKernel {
    ExpPolyKernel::lorentz(1.0, 1.0, 1.0).unwrap()
}

pub fn drude() -> ExpPolyKernel {
    ExpPolyKernel::drude(1.0, 1.0).unwrap()
}

/// Debye, Lorentz and Drude terms in one kernel.
pub fn mixed() -> ExpPolyKernel {
    let mut terms = debye().terms().to_vec();
    terms.extend_from_slice(lorentz().terms());
    terms.extend_from_slice(drude().terms());
    ExpPolyKernel::new(terms, drude().offset()).unwrap()
}

pub fn medium(nu_e: ExpPolyKernel) -> MediumSpec {
    MediumSpec::new(1.0, 1.0, nu_e.into(), Kernel::zero()).unwrap()
}

/// Cavity modes `k_n = nπ` with amplitudes `n^{-1.5}`.
pub fn cavity(n: usize) -> Vec<ModeSpec> {
    cavity_modes(1.0, n, AmplitudeRule::Power { scale: 1.0, exponent: 1.5 }).unwrap()
}
