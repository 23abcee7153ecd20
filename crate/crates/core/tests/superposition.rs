use proptest::prelude::*;

use talbot::dispersion::DelayPlan;
use talbot::model::{SampledSignal, SimGrid};
use talbot::superposition::{superpose_spectral, superpose_time};

fn case() -> impl Strategy<Value = (Vec<i64>, usize, Vec<f64>)> {
    (prop::collection::vec(0i64..300, 1..24), 2usize..1500).prop_flat_map(|(raw, m)| {
        let len = m + raw.iter().max().copied().unwrap_or(0) as usize;
        (Just(raw), Just(m), prop::collection::vec(-1.0f64..1.0, len..len + 20))
    })
}

proptest! {
    #[test]
    fn engines_agree((raw, m, x) in case()) {
        let plan = DelayPlan::from_raw(&raw, SimGrid::from_samples(1.0, 4, m).unwrap()).unwrap();
        let x = SampledSignal::new(x, 4.0, 0).unwrap();
        let a = superpose_time(&x, &plan).unwrap();
        let b = superpose_spectral(&x, &plan).unwrap();
        prop_assert_eq!(a.len(), m);
        for (p, q) in a.samples().iter().zip(b.samples()) {
            prop_assert!((p - q).abs() <= 1e-9 * raw.len() as f64);
        }
    }

    #[test]
    fn superposition_is_linear((raw, m, x) in case(), gain in -5.0f64..5.0) {
        let plan = DelayPlan::from_raw(&raw, SimGrid::from_samples(1.0, 4, m).unwrap()).unwrap();
        let x = SampledSignal::new(x, 4.0, 0).unwrap();
        let a = superpose_time(&x.scaled(gain), &plan).unwrap();
        let b = superpose_time(&x, &plan).unwrap();
        for (p, q) in a.samples().iter().zip(b.samples()) {
            prop_assert!((p - gain * q).abs() <= 1e-12 * (1.0 + gain.abs()));
        }
    }

    #[test]
    fn constant_input_passes_unchanged((raw, m, _x) in case(), level in -3.0f64..3.0) {
        let plan = DelayPlan::from_raw(&raw, SimGrid::from_samples(1.0, 4, m).unwrap()).unwrap();
        let x = SampledSignal::new(vec![level; m + plan.max_offset()], 4.0, 0).unwrap();
        let y = superpose_time(&x, &plan).unwrap();
        prop_assert!(y.samples().iter().all(|v| (v - level).abs() < 1e-12));
    }
}
