//! Phase-noise averaging by an ideal dispersive element: K delayed copies
//! of a white-noise carrier, band-integrated before and after.

use talbot::analysis::{jitter, periodogram, phase_noise_from_psd};
use talbot::dispersion::DelayPlan;
use talbot::model::{build_grid, NoiseProfile};
use talbot::superposition::superpose;
use talbot::synthesis::{synth_carrier, SynthesisRequest};

fn main() -> talbot::Result<()> {
    let n = 16;
    let grid = build_grid(1e8, n, 5e-4)?;
    let lines = [1usize, 4, 16, 64];
    // ideal dispersion: adjacent lines one carrier period apart
    let plans: Vec<DelayPlan> = lines
        .iter()
        .map(|&k| DelayPlan::from_raw(&(0..k as i64).rev().map(|j| j * n as i64).collect::<Vec<_>>(), grid))
        .collect::<talbot::Result<_>>()?;
    let x = synth_carrier(&SynthesisRequest {
        grid,
        noise: Some(NoiseProfile::white(1e-11)?),
        extra_samples: plans.last().unwrap().max_offset(),
        seed: 3,
    })?;

    let f_lo = 20e6;
    let f_hi = grid.fs() / 2.0 - grid.f_r() - 10.0 * grid.df();
    let offsets: Vec<f64> = ((f_lo / grid.df()) as usize..=(f_hi / grid.df()) as usize)
        .step_by(4)
        .map(|b| b as f64 * grid.df())
        .collect();
    let mut reference = None;
    for (k, plan) in lines.iter().zip(&plans) {
        let y = superpose(&x, plan)?;
        let spectrum = phase_noise_from_psd(&periodogram(&y)?, grid.f_r(), &offsets)?;
        let j = jitter(&spectrum, offsets[0], *offsets.last().unwrap())?;
        let base = *reference.get_or_insert(j.integrated_l);
        println!(
            "K = {k:>2}: integrated L over [{:.0}, {:.0}] MHz = {:.3e}, improvement {:5.2} dB (10 log10 K = {:5.2})",
            f_lo / 1e6,
            f_hi / 1e6,
            j.integrated_l,
            10.0 * (base / j.integrated_l).log10(),
            10.0 * (*k as f64).log10()
        );
    }
    Ok(())
}
