//! Repetition-rate carrier with seeded, spectrally shaped phase noise.
//!
//! The phase track is drawn in the frequency domain: every positive bin
//! gets a complex Gaussian coefficient scaled to the target PSD, the DC bin
//! is zero, and one inverse real FFT produces the time series. Coefficients
//! are drawn in ascending bin order, so two tracks with the same seed and
//! bin spacing share their low-frequency content exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use realfft::RealFftPlanner;

use crate::error::{invalid, Error, Result};
use crate::model::{NoiseProfile, NoiseTerm, SampledSignal, SimGrid};

/// Configuration default: white floor plus a random-walk (1/f^2) term.
pub fn default_noise_profile() -> NoiseProfile {
    NoiseProfile::new(
        vec![
            NoiseTerm { alpha: 0, b: 1e-11 },
            NoiseTerm { alpha: -2, b: 1e-1 },
        ],
        None,
    )
    .expect("default profile is valid")
}

/// Everything needed to produce one carrier realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisRequest {
    pub grid: SimGrid,
    /// `None` synthesizes a pure tone.
    pub noise: Option<NoiseProfile>,
    /// Samples prepended ahead of the analysis window, at least the max
    /// offset of the delay plan that will consume the signal.
    pub extra_samples: usize,
    pub seed: u64,
}

/// Phase samples (rad) whose one-sided PSD follows `noise` over
/// `[f_low, fs/2]`. A profile without an explicit cutoff starts at the
/// first bin `fs / length`.
pub fn synth_phase_track(
    noise: &NoiseProfile,
    length: usize,
    fs: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(invalid(
            "length",
            format!("need at least 2 samples, got {length}"),
        ));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(invalid("fs", format!("sample rate must be > 0, got {fs}")));
    }
    if noise.is_zero() {
        return Ok(vec![0.0; length]);
    }
    let bin = fs / length as f64;
    let f_low = noise.resolved_f_low(bin);
    if f_low > 0.0 && f_low < fs / 2.0 {
        noise.check_non_negative(f_low, fs / 2.0)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = length / 2;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); half + 1];
    let interior = (fs * length as f64 / 4.0).sqrt();
    for (k, slot) in spectrum.iter_mut().enumerate().skip(1) {
        let g1: f64 = StandardNormal.sample(&mut rng);
        let g2: f64 = StandardNormal.sample(&mut rng);
        let f = k as f64 * bin;
        // relative tolerance so a cutoff equal to a bin frequency keeps that bin
        if f < f_low * (1.0 - 1e-9) {
            continue;
        }
        let s = noise.psd(f);
        if s < 0.0 {
            return Err(Error::NegativeNoise {
                freq_hz: f,
                value: s,
            });
        }
        *slot = if length % 2 == 0 && k == half {
            // Nyquist bin is real and unpaired
            Complex64::new(interior * std::f64::consts::SQRT_2 * s.sqrt() * g1, 0.0)
        } else {
            interior * s.sqrt() * Complex64::new(g1, g2)
        };
    }
    let mut planner = RealFftPlanner::<f64>::new();
    let c2r = planner.plan_fft_inverse(length);
    let mut out = c2r.make_output_vec();
    c2r.process(&mut spectrum, &mut out)
        .map_err(|e| invalid("spectrum", e.to_string()))?;
    let norm = 1.0 / length as f64;
    out.iter_mut().for_each(|v| *v *= norm);
    Ok(out)
}

/// `x[n] = sin(2 pi n / N + phi[n])` for `n` in `[0, M + extra)`.
///
/// The analysis window is the trailing `M` samples; `t0_index` marks its start.
pub fn synth_carrier(request: &SynthesisRequest) -> Result<SampledSignal> {
    let grid = &request.grid;
    let length = grid.samples() + request.extra_samples;
    let fs = grid.fs();
    let phase = match &request.noise {
        Some(profile) => {
            let resolved = NoiseProfile::new(
                profile.terms().to_vec(),
                Some(profile.resolved_f_low(grid.df())),
            )?;
            synth_phase_track(&resolved, length, fs, request.seed)?
        }
        None => vec![0.0; length],
    };
    let n_ratio = grid.oversampling() as usize;
    let step = 2.0 * PI / n_ratio as f64;
    let samples = phase
        .iter()
        .enumerate()
        .map(|(n, phi)| ((n % n_ratio) as f64 * step + phi).sin())
        .collect();
    SampledSignal::new(samples, fs, request.extra_samples)
}
