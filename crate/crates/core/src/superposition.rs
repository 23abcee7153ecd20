//! Photodetection model: the detected signal is the normalized sum of
//! integer-delayed copies of the carrier, one per comb line.
//!
//! Copies are right-aligned. With `L = M + max_offset` and `base = len - L`,
//!
//! ```text
//! y[n] = (1/K) * sum_k x[base + n + max_offset - offsets[k]],   n in [0, M)
//! ```
//!
//! so the analysis window is the trailing `M` samples of the least delayed
//! copy and every output sample is a full K-fold sum. The same operation is
//! a convolution with a sparse impulse train, which the spectral engine
//! evaluates with one pair of real FFTs.

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::RealFftPlanner;

use crate::dispersion::DelayPlan;
use crate::error::{invalid, Error, Result};
use crate::model::SampledSignal;

/// Cost ratio of one spectral-engine sample (`log2 M` weighted) to one
/// time-engine multiply-add, measured on x86-64 with AVX2.
pub const ENGINE_CROSSOVER: f64 = 3.0;

const CHUNK: usize = 1 << 14;

/// Superposition algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Time,
    Spectral,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Self::Time),
            "spectral" => Ok(Self::Spectral),
            other => Err(invalid(
                "engine",
                format!("`{other}` is not one of time, spectral"),
            )),
        }
    }
}

/// Spectral when `K * M > ENGINE_CROSSOVER * M * log2(M)`.
pub fn choose_engine(samples: usize, lines: usize) -> Engine {
    let m = samples.max(2) as f64;
    if lines as f64 * m > ENGINE_CROSSOVER * m * m.log2() {
        Engine::Spectral
    } else {
        Engine::Time
    }
}

/// Dispatches to the engine picked by [`choose_engine`].
pub fn superpose(x: &SampledSignal, plan: &DelayPlan) -> Result<SampledSignal> {
    match choose_engine(plan.grid().samples(), plan.line_count()) {
        Engine::Time => superpose_time(x, plan),
        Engine::Spectral => superpose_spectral(x, plan),
    }
}

pub fn superpose_with(
    engine: Engine,
    x: &SampledSignal,
    plan: &DelayPlan,
) -> Result<SampledSignal> {
    match engine {
        Engine::Time => superpose_time(x, plan),
        Engine::Spectral => superpose_spectral(x, plan),
    }
}

fn window(x: &SampledSignal, plan: &DelayPlan) -> Result<(usize, usize)> {
    let m = plan.grid().samples();
    let needed = m + plan.max_offset();
    if x.len() < needed {
        return Err(Error::SignalTooShort {
            required: needed,
            actual: x.len(),
        });
    }
    Ok((x.len() - needed, m))
}

/// Direct accumulation. Each output chunk sums the copies in plan order,
/// so the result does not depend on how chunks are scheduled.
pub fn superpose_time(x: &SampledSignal, plan: &DelayPlan) -> Result<SampledSignal> {
    let (base, m) = window(x, plan)?;
    let src = x.samples();
    let max = plan.max_offset();
    let gain = 1.0 / plan.line_count() as f64;
    let mut y = vec![0.0; m];
    y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
        let start = base + c * CHUNK + max;
        for &o in plan.offsets() {
            let from = start - o;
            let len = out.len();
            for (acc, v) in out.iter_mut().zip(&src[from..from + len]) {
                *acc += v;
            }
        }
        out.iter_mut().for_each(|v| *v *= gain);
    });
    SampledSignal::new(y, x.fs(), 0)
}

/// FFT path: transform of the input window times the transform of the
/// impulse train `h[o_k] += 1/K`, inverse transform, keep the valid part.
pub fn superpose_spectral(x: &SampledSignal, plan: &DelayPlan) -> Result<SampledSignal> {
    let (base, m) = window(x, plan)?;
    let max = plan.max_offset();
    let used = m + max;
    let size = next_fast_len(used);
    let mut planner = RealFftPlanner::<f64>::new();
    let r2c = planner.plan_fft_forward(size);
    let c2r = planner.plan_fft_inverse(size);

    let mut signal = r2c.make_input_vec();
    signal[..used].copy_from_slice(&x.samples()[base..]);
    let mut spectrum = r2c.make_output_vec();
    r2c.process(&mut signal, &mut spectrum)
        .map_err(|e| invalid("fft", e.to_string()))?;

    // reuse the input buffer for the impulse train
    signal.iter_mut().for_each(|v| *v = 0.0);
    let gain = 1.0 / plan.line_count() as f64;
    for &o in plan.offsets() {
        signal[o] += gain;
    }
    let mut mask = r2c.make_output_vec();
    r2c.process(&mut signal, &mut mask)
        .map_err(|e| invalid("fft", e.to_string()))?;

    let norm = 1.0 / size as f64;
    spectrum
        .iter_mut()
        .zip(&mask)
        .for_each(|(s, h)| *s = *s * *h * norm);
    // DC and Nyquist must be purely real for the inverse transform
    spectrum[0] = Complex64::new(spectrum[0].re, 0.0);
    if size % 2 == 0 {
        let last = spectrum.len() - 1;
        spectrum[last] = Complex64::new(spectrum[last].re, 0.0);
    }
    c2r.process(&mut spectrum, &mut signal)
        .map_err(|e| invalid("fft", e.to_string()))?;
    SampledSignal::new(signal[max..max + m].to_vec(), x.fs(), 0)
}

/// Smallest `2^a 3^b 5^c 7^d` not below `n`.
pub fn next_fast_len(n: usize) -> usize {
    if n <= 2 {
        return n.max(1);
    }
    let mut best = n.next_power_of_two();
    let mut p7 = 1usize;
    while p7 < best {
        let mut p5 = p7;
        while p5 < best {
            let mut p3 = p5;
            while p3 < best {
                let mut v = p3;
                while v < n {
                    v *= 2;
                }
                best = best.min(v);
                p3 *= 3;
            }
            p5 *= 5;
        }
        p7 *= 7;
    }
    best
}
