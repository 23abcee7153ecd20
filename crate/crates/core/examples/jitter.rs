//! Integrated phase noise and RMS timing jitter of a synthesized carrier,
//! and what classical frequency multiplication would do to it.

use talbot::analysis::{classical_penalty, jitter, phase_noise_spectrum};
use talbot::model::build_grid;
use talbot::synthesis::{default_noise_profile, synth_carrier, SynthesisRequest};

fn main() -> talbot::Result<()> {
    let grid = build_grid(1e8, 16, 2e-3)?;
    let x = synth_carrier(&SynthesisRequest {
        grid,
        noise: Some(default_noise_profile()),
        extra_samples: 0,
        seed: 11,
    })?;
    let offsets: Vec<f64> = (0..=40).map(|i| 1e4 * 10f64.powf(i as f64 / 10.0)).collect();
    let spectrum = phase_noise_spectrum(&x, grid.f_r(), &offsets)?;

    for (lo, hi) in [(1e4, 1e6), (1e4, 1e8), (1e6, 1e8)] {
        let j = jitter(&spectrum, lo, hi)?;
        println!(
            "[{lo:.0e}, {hi:.0e}] Hz: integrated L = {:.3e}, rms jitter {:.2} fs",
            j.integrated_l,
            j.rms_time_jitter * 1e15
        );
    }

    let l = spectrum.points.iter().find(|p| p.0 == 1e6).unwrap().1;
    for m in [1, 10, 100] {
        println!("x{m:<3} multiplied: L(1 MHz) = {:.1} dBc/Hz", classical_penalty(l, m)?);
    }
    Ok(())
}
