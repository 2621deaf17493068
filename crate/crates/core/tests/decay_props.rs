mod common;

use common::*;
use dispersia_core::modal::{cavity_modes, AmplitudeRule};
use dispersia_core::{
    analyze, fit_decay, predict, DecayKind, DecayPrediction, EnergyTrace, ExpPolyKernel, Kernel, MediumSpec,
    RunOptions,
};
use proptest::prelude::*;

fn trace(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> EnergyTrace {
    let times: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let energy = times.iter().map(|&t| f(t)).collect();
    EnergyTrace { times, energy, history_norm: None }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn fit_is_scale_equivariant(rate in 0.1..3.0f64, p in 0.5..3.0f64, c in 1e-6..1e6f64, wobble in 0.0..0.2f64) {
        let exp = |t: f64| (-rate * t).exp() * (1.0 + wobble * (3.0 * t).sin().powi(2));
        let pow = |t: f64| (1.0 + t).powf(-p) * (1.0 + wobble * (0.5 * t).cos().powi(2));
        for (base, scaled) in [
            (trace(exp, 0.0, 10.0, 400), trace(|t| c * exp(t), 0.0, 10.0, 400)),
            (trace(pow, 1.0, 100.0, 400), trace(|t| c * pow(t), 1.0, 100.0, 400)),
        ] {
            let (a, b) = (fit_decay(&base, None).unwrap(), fit_decay(&scaled, None).unwrap());
            prop_assert_eq!(a.kind, b.kind);
            if let (Some(x), Some(y)) = (a.rate, b.rate) {
                prop_assert!(rel(y, x) <= 1e-9);
            }
            if let (Some(x), Some(y)) = (a.slope, b.slope) {
                prop_assert!(rel(y, x) <= 1e-9);
            }
        }
    }

    #[test]
    fn exponential_rate_is_shift_invariant(rate in 0.1..3.0f64, shift in -0.2..0.2f64) {
        // a 5:1 window, the default [T/5, T] shape
        let tr = trace(|t| (-rate * t).exp(), 0.0, 40.0, 4000);
        let base = fit_decay(&tr, Some((6.0, 30.0))).unwrap();
        let moved = fit_decay(&tr, Some((6.0 * (1.0 + shift), 30.0 * (1.0 + shift)))).unwrap();
        prop_assert_eq!(base.kind, DecayKind::Exponential);
        prop_assert_eq!(moved.kind, DecayKind::Exponential);
        prop_assert!(rel(moved.rate.unwrap(), base.rate.unwrap()) <= 1e-9);
        prop_assert!(rel(base.rate.unwrap(), rate) <= 1e-9);
    }
}

fn run(kernel: ExpPolyKernel, n_modes: usize) -> EnergyTrace {
    let m = MediumSpec::new(1.0, 1.0, kernel.into(), Kernel::zero()).unwrap();
    let modes = cavity_modes(1.0, n_modes, AmplitudeRule::Power { scale: 1.0, exponent: 1.5 }).unwrap();
    let mut opts = RunOptions::new(0.01, 100.0);
    opts.output_stride = 10;
    dispersia_core::run_multimode(&m, &modes, &opts).unwrap()
}

#[test]
fn predictions_match_observed_decay() {
    let z = Kernel::zero();
    let debye_pred = predict(&analyze(&Kernel::from(debye()), &z).unwrap());
    assert_eq!(debye_pred, DecayPrediction::Exponential);
    let fit = fit_decay(&run(debye(), 50), None).unwrap();
    assert!(debye_pred.is_consistent_with(&fit, 0.0), "{fit:?}");
    for kernel in [lorentz(), drude()] {
        let pred = predict(&analyze(&Kernel::from(kernel.clone()), &z).unwrap());
        assert_eq!(pred, DecayPrediction::Polynomial { max_slope: -1.0 });
        let fit = fit_decay(&run(kernel, 200), Some((10.0, 100.0))).unwrap();
        assert_eq!(fit.kind, DecayKind::Polynomial);
        assert!(pred.is_consistent_with(&fit, 0.15), "{fit:?}");
    }
}
