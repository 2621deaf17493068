#![allow(dead_code)]

use dispersia_core::kernel::RealTerm;
use dispersia_core::{ExpPolyKernel, Kernel, MediumSpec};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

/// Fixed-seed configuration so runs are reproducible.
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0x5eed_d15b), ..ProptestConfig::default() }
}

/// One term: decay in [-3, -0.3], frequency 0 or in [0.2, 3], degree ≤ 3.
pub fn real_term() -> impl Strategy<Value = RealTerm> {
    (
        -3.0..-0.3f64,
        prop_oneof![Just(0.0), 0.2..3.0f64],
        prop::collection::vec(-1.0..1.0f64, 1..=4),
        prop::collection::vec(-1.0..1.0f64, 1..=4),
    )
        .prop_map(|(decay, freq, cos_poly, sin_poly)| RealTerm {
            cos_poly,
            sin_poly: if freq == 0.0 { vec![] } else { sin_poly },
            decay,
            freq,
        })
}

/// Up to four terms plus an optional constant offset.
pub fn exp_poly_kernel() -> impl Strategy<Value = ExpPolyKernel> {
    (prop::collection::vec(real_term(), 1..=4), prop_oneof![Just(0.0), -1.0..1.0f64])
        .prop_filter_map("degenerate kernel", |(terms, offset)| ExpPolyKernel::new(terms, offset).ok())
        .prop_filter("zero kernel", |k| !k.terms().is_empty())
}

/// A positive combination of Debye, Lorentz and Drude kernels (passive,
/// strictly passive when nonzero).
pub fn passive_kernel() -> impl Strategy<Value = ExpPolyKernel> {
    (
        prop::option::of((0.1..2.0f64, 0.2..3.0f64)),
        prop::option::of((0.1..2.0f64, 0.3..3.0f64, 0.2..2.0f64)),
        prop::option::of((0.1..2.0f64, 0.2..3.0f64)),
    )
        .prop_map(|(debye, lorentz, drude)| {
            let mut terms = Vec::new();
            let mut offset = 0.0;
            if let Some((b, tau)) = debye {
                terms.extend_from_slice(ExpPolyKernel::debye(b, tau).unwrap().terms());
            }
            if let Some((b, nu0, nu)) = lorentz {
                terms.extend_from_slice(ExpPolyKernel::lorentz(b, nu0, nu).unwrap().terms());
            }
            if let Some((b, nu)) = drude {
                let k = ExpPolyKernel::drude(b, nu).unwrap();
                terms.extend_from_slice(k.terms());
                offset += k.offset();
            }
            ExpPolyKernel::new(terms, offset).unwrap()
        })
}

/// Media with at least one nonzero passive kernel.
pub fn passive_medium() -> impl Strategy<Value = MediumSpec> {
    (0.5..2.0f64, 0.5..2.0f64, passive_kernel(), passive_kernel())
        .prop_filter("both kernels zero", |(_, _, e, h)| !(e.is_zero() && h.is_zero()))
        .prop_map(|(eps, mu, e, h)| MediumSpec::new(eps, mu, Kernel::from(e), Kernel::from(h)).unwrap())
}

pub fn debye() -> ExpPolyKernel {
    ExpPolyKernel::debye(1.0, 1.0).unwrap()
}

pub fn lorentz() -> ExpPolyKernel {
    ExpPolyKernel::lorentz(1.0, 1.0, 1.0).unwrap()
}

pub fn drude() -> ExpPolyKernel {
    ExpPolyKernel::drude(1.0, 1.0).unwrap()
}

/// Composite Simpson rule with `n` (even) panels; an oracle independent of
/// the adaptive quadrature in the library.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
