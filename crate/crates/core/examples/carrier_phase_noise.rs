//! Synthesize a noisy carrier and read its single-sideband phase noise
//! back against the injected profile.

use talbot::analysis::phase_noise_spectrum;
use talbot::model::build_grid;
use talbot::synthesis::{default_noise_profile, synth_carrier, SynthesisRequest};

fn main() -> talbot::Result<()> {
    let grid = build_grid(1e8, 16, 2e-3)?;
    let profile = default_noise_profile();
    let offsets = [2e3, 1e4, 1e5, 1e6, 1e7];
    let seeds = 8;

    let mut mean = vec![0.0; offsets.len()];
    for seed in 0..seeds {
        let x = synth_carrier(&SynthesisRequest {
            grid,
            noise: Some(profile.clone()),
            extra_samples: 0,
            seed,
        })?;
        let spectrum = phase_noise_spectrum(&x, grid.f_r(), &offsets)?;
        for (m, f) in mean.iter_mut().zip(offsets) {
            *m += spectrum.linear_at(f).unwrap() / seeds as f64;
        }
    }

    println!("{:>10}  {:>10}  {:>10}", "offset Hz", "measured", "expected");
    for (m, f) in mean.iter().zip(offsets) {
        // phase noise at 2 f_r + f folds onto the same sideband, and the
        // median-of-three estimator reads 5/6 of the density on average
        let expect = (profile.psd(f) + profile.psd(2.0 * grid.f_r() + f)) / 2.0 * 5.0 / 6.0;
        println!("{f:>10}  {:>10.2}  {:>10.2}", 10.0 * m.log10(), 10.0 * expect.log10());
    }
    Ok(())
}
