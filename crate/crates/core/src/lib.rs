//! Kernel analysis and modal time-domain simulation for Maxwell equations in
//! bounded cavities with dispersive (memory) constitutive laws.

pub mod dd;
pub mod decay;
pub mod dispersion;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod modal;
pub mod poly;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use kernel::{ClassKCertificate, DecayBound, ExpPolyKernel, Kernel, KernelDocument, SampledKernel};
pub use decay::{fit_decay, predict, DecayKind, DecayPrediction, DecayReport};
pub use dispersion::{analyze, omega_form, CheckMethod, OmegaRational, PassivityReport};
pub use modal::{build_mode, run_multimode, EnergyTrace, MediumSpec, ModeSpec, ModeSystem, RunOptions};
