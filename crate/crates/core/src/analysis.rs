//! Spectral estimation and phase-noise metrics.
//!
//! `L(f)` is read from a rectangular-window periodogram of the detected
//! signal: the carrier power is the peak bin near `f_r` times the bin width,
//! and each sideband level is the median of the three bins nearest the
//! requested offset. Upper and lower sidebands are averaged.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use realfft::RealFftPlanner;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::model::SampledSignal;

/// Carrier must hold at least this fraction of the total power.
pub const CARRIER_THRESHOLD: f64 = 1e-6;

/// Half-width of the carrier peak search, in bins.
pub const CARRIER_SEARCH_BINS: usize = 2;

/// One-sided power spectral density, per Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    fs: f64,
    len: usize,
    density: Vec<f64>,
}

impl Psd {
    /// Bin width `fs / len`.
    pub fn df(&self) -> f64 {
        self.fs / self.len as f64
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Length of the transformed signal.
    pub fn signal_len(&self) -> usize {
        self.len
    }

    /// Densities for bins `0..=len/2`.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.df()
    }

    /// Total power `sum(PSD) * df`.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.df()
    }

    /// Median of the three bins nearest `f`, never using bin 0.
    pub fn median_near(&self, f: f64) -> f64 {
        let last = self.density.len() - 1;
        let centre = (f / self.df()).round() as usize;
        let start = centre
            .saturating_sub(1)
            .max(1)
            .min(last.saturating_sub(2).max(1));
        let mut v: Vec<f64> = (start..=(start + 2).min(last))
            .map(|i| self.density[i])
            .collect();
        median(&mut v)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Rectangular-window periodogram, Parseval-normalized so that
/// `sum(PSD) * df` equals the mean square of `y`.
pub fn periodogram(y: &SampledSignal) -> Result<Psd> {
    periodogram_of(y.samples(), y.fs())
}

pub(crate) fn periodogram_of(samples: &[f64], fs: f64) -> Result<Psd> {
    let len = samples.len();
    if len < 2 {
        return Err(invalid(
            "signal",
            format!("need at least 2 samples, got {len}"),
        ));
    }
    let mut planner = RealFftPlanner::<f64>::new();
    let r2c = planner.plan_fft_forward(len);
    let mut input = samples.to_vec();
    let mut spectrum = r2c.make_output_vec();
    r2c.process(&mut input, &mut spectrum)
        .map_err(|e| invalid("fft", e.to_string()))?;
    let scale = 1.0 / (fs * len as f64);
    let nyquist = if len % 2 == 0 { Some(len / 2) } else { None };
    let density = spectrum
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let p = x.norm_sqr() * scale;
            if k == 0 || Some(k) == nyquist {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    Ok(Psd { fs, len, density })
}

/// Single-sideband phase noise around a carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseSpectrum {
    pub carrier_freq: f64,
    /// Carrier power in signal units squared.
    pub carrier_power: f64,
    /// `(offset Hz, L dBc/Hz)`, ascending offsets.
    pub points: Vec<(f64, f64)>,
    pub df: f64,
}

impl PhaseNoiseSpectrum {
    /// Linear `L` at an exact stored offset.
    pub fn linear_at(&self, offset: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.0 == offset)
            .map(|p| 10f64.powf(p.1 / 10.0))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "offset_hz,L_dbc_hz")?;
        for (f, l) in &self.points {
            writeln!(w, "{f},{l}")?;
        }
        Ok(())
    }
}

/// Located carrier in a periodogram.
#[derive(Debug, Clone, Copy)]
struct Carrier {
    bin: usize,
    power: f64,
}

fn find_carrier(psd: &Psd, f_r: f64) -> Result<Carrier> {
    let nominal = (f_r / psd.df()).round() as usize;
    let last = psd.density.len() - 1;
    let lo = nominal.saturating_sub(CARRIER_SEARCH_BINS).max(1);
    let hi = (nominal + CARRIER_SEARCH_BINS).min(last);
    let total = psd.total_power();
    let best = (lo..=hi).max_by(|&a, &b| psd.density[a].partial_cmp(&psd.density[b]).unwrap());
    let (bin, power) = match best {
        Some(b) => (b, psd.density[b] * psd.df()),
        None => (nominal, 0.0),
    };
    let fraction = if total > 0.0 { power / total } else { 0.0 };
    if !(fraction >= CARRIER_THRESHOLD) {
        return Err(Error::CarrierNotFound {
            freq_hz: f_r,
            fraction,
        });
    }
    Ok(Carrier { bin, power })
}

/// Sideband density: median of the three bins nearest `offset_bins` away
/// from the carrier on one side, skipping the carrier bin itself.
fn sideband(psd: &Psd, carrier: usize, offset_bins: usize, upper: bool) -> Option<f64> {
    let last = psd.density.len() as i64 - 1;
    let c = carrier as i64;
    let start = offset_bins.saturating_sub(1).max(1) as i64;
    let mut values = Vec::with_capacity(3);
    for o in start..start + 3 {
        let mut b = if upper { c + o } else { c - o };
        if b < 0 {
            b = -b;
        }
        if b > last || b == c {
            return None;
        }
        values.push(psd.density[b as usize]);
    }
    Some(median(&mut values))
}

/// `L(f)` at each requested offset from the carrier near `f_r`.
///
/// Offsets must lie in `[df, fs/2 - f_r)`. When the mirrored lower sideband
/// would fall onto the carrier, the upper sideband is used alone.
pub fn phase_noise_spectrum(
    y: &SampledSignal,
    f_r: f64,
    offsets: &[f64],
) -> Result<PhaseNoiseSpectrum> {
    let psd = periodogram(y)?;
    phase_noise_from_psd(&psd, f_r, offsets)
}

pub fn phase_noise_from_psd(psd: &Psd, f_r: f64, offsets: &[f64]) -> Result<PhaseNoiseSpectrum> {
    let carrier = find_carrier(psd, f_r)?;
    let df = psd.df();
    let carrier_freq = psd.frequency(carrier.bin);
    let limit = psd.fs / 2.0 - carrier_freq;
    let mut sorted: Vec<f64> = offsets.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut points = Vec::with_capacity(sorted.len());
    for &f in &sorted {
        if !(f >= df * (1.0 - 1e-9) && f < limit) {
            return Err(invalid(
                "offset",
                format!("{f} Hz outside [{df}, {limit}) for this signal"),
            ));
        }
        let bins = ((f / df).round() as usize).max(1);
        let upper = sideband(psd, carrier.bin, bins, true)
            .ok_or_else(|| invalid("offset", format!("{f} Hz runs past the Nyquist frequency")))?;
        let density = match sideband(psd, carrier.bin, bins, false) {
            Some(lower) => 0.5 * (upper + lower),
            None => upper,
        };
        points.push((f, 10.0 * (density / carrier.power).log10()));
    }
    Ok(PhaseNoiseSpectrum {
        carrier_freq,
        carrier_power: carrier.power,
        points,
        df,
    })
}

/// Integrated phase noise over a finite band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterResult {
    /// Integral of linear `L(f)` over the band.
    pub integrated_l: f64,
    pub band: (f64, f64),
    /// `sqrt(2 * integrated_l) / (2 pi f_carrier)`, s.
    pub rms_time_jitter: f64,
}

impl JitterResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "f_min_hz,f_max_hz,integrated_L,rms_jitter_s")?;
        writeln!(
            w,
            "{},{},{},{}",
            self.band.0, self.band.1, self.integrated_l, self.rms_time_jitter
        )?;
        Ok(())
    }
}

fn lerp_linear(points: &[(f64, f64)], i: usize, f: f64) -> f64 {
    let (f0, l0) = (points[i].0, 10f64.powf(points[i].1 / 10.0));
    let (f1, l1) = (points[i + 1].0, 10f64.powf(points[i + 1].1 / 10.0));
    l0 + (l1 - l0) * (f - f0) / (f1 - f0)
}

/// Trapezoid integral of linear-scale `L(f)` over `[f_min, f_max]`.
pub fn jitter(spectrum: &PhaseNoiseSpectrum, f_min: f64, f_max: f64) -> Result<JitterResult> {
    if !(f_min < f_max) {
        return Err(Error::EmptyBand { f_min, f_max });
    }
    let pts = &spectrum.points;
    if pts.len() < 2 {
        return Err(Error::EmptyBand { f_min, f_max });
    }
    let tol = 1e-9 * f_max;
    if f_min < spectrum.df * (1.0 - 1e-9)
        || f_min < pts[0].0 - tol
        || f_max > pts[pts.len() - 1].0 + tol
    {
        return Err(invalid(
            "band",
            format!(
                "[{f_min}, {f_max}] Hz not covered by the spectrum [{}, {}] Hz",
                pts[0].0,
                pts[pts.len() - 1].0
            ),
        ));
    }
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for i in 0..pts.len() - 1 {
        let (a, b) = (pts[i].0, pts[i + 1].0);
        if b < f_min || a > f_max {
            continue;
        }
        let lo = a.max(f_min);
        let hi = b.min(f_max);
        if nodes.is_empty() {
            nodes.push((lo, lerp_linear(pts, i, lo)));
        }
        if hi > nodes.last().unwrap().0 {
            nodes.push((hi, lerp_linear(pts, i, hi)));
        }
    }
    let integrated_l: f64 = nodes
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();
    Ok(JitterResult {
        integrated_l,
        band: (f_min, f_max),
        rms_time_jitter: (2.0 * integrated_l).sqrt() / (2.0 * PI * spectrum.carrier_freq),
    })
}

/// Phase noise of a classical multiplier chain: `L0 + 20 log10 m`.
pub fn classical_penalty(l0_dbc: f64, m: u32) -> Result<f64> {
    if m < 1 {
        return Err(invalid("m", "upconversion factor must be >= 1"));
    }
    Ok(l0_dbc + 20.0 * (m as f64).log10())
}

/// One-sided PSD of the carrier's instantaneous phase, rad^2/Hz.
///
/// Analytic signal by FFT, mixed down by `f_r`, unwrapped and detrended.
pub fn demod_phase_psd(y: &SampledSignal, f_r: f64) -> Result<Psd> {
    let psd = periodogram(y)?;
    find_carrier(&psd, f_r)?;
    let len = y.len();
    let fs = y.fs();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut z: Vec<Complex64> = y
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    forward.process(&mut z);
    let half = len / 2;
    for (k, v) in z.iter_mut().enumerate() {
        let keep = if k == 0 || (len % 2 == 0 && k == half) {
            1.0
        } else if k <= (len - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= keep / len as f64;
    }
    inverse.process(&mut z);

    let ratio = fs / f_r;
    let period = ratio.round();
    let exact = (ratio - period).abs() < 1e-9 * ratio && period >= 1.0;
    let mut phase = Vec::with_capacity(len);
    let mut previous = 0.0;
    let mut unwrap = 0.0;
    for (n, v) in z.iter().enumerate() {
        let cycles = if exact {
            (n % period as usize) as f64 / period
        } else {
            (n as f64 * f_r / fs).fract()
        };
        let raw = (*v * Complex64::from_polar(1.0, -2.0 * PI * cycles)).arg();
        if n > 0 {
            let jump = raw - previous;
            if jump > PI {
                unwrap -= 2.0 * PI;
            } else if jump < -PI {
                unwrap += 2.0 * PI;
            }
        }
        previous = raw;
        phase.push(raw + unwrap);
    }
    detrend(&mut phase);
    periodogram_of(&phase, fs)
}

/// Removes the least-squares line.
fn detrend(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean_t = (n - 1.0) / 2.0;
    let mean_v = v.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, x) in v.iter().enumerate() {
        let dt = i as f64 - mean_t;
        num += dt * (x - mean_v);
        den += dt * dt;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    for (i, x) in v.iter_mut().enumerate() {
        *x -= mean_v + slope * (i as f64 - mean_t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, NoiseProfile};
    use crate::synthesis::{synth_carrier, SynthesisRequest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn tone(len: usize, fs: f64, f: f64, amp: f64) -> SampledSignal {
        let s = (0..len)
            .map(|n| amp * (2.0 * PI * f * n as f64 / fs).sin())
            .collect();
        SampledSignal::new(s, fs, 0).unwrap()
    }

    #[test]
    fn parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.3).unwrap();
        for len in [1001usize, 4096] {
            let s: Vec<f64> = (0..len).map(|_| normal.sample(&mut rng)).collect();
            let ms = s.iter().map(|v| v * v).sum::<f64>() / len as f64;
            let psd = periodogram(&SampledSignal::new(s, 3e3, 0).unwrap()).unwrap();
            assert!((psd.total_power() / ms - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bin_exact_tone_has_one_bin() {
        let psd = periodogram(&tone(1024, 1024.0, 64.0, 1.0)).unwrap();
        let p = psd.density()[64] * psd.df();
        assert!((p - 0.5).abs() < 1e-12);
        for (k, d) in psd.density().iter().enumerate() {
            if k != 64 {
                assert!(d * psd.df() < 1e-20 * 0.5, "bin {k}: {d}");
            }
        }
    }

    #[test]
    fn white_noise_is_flat() {
        let sigma2: f64 = 0.25;
        let fs = 1e4;
        let normal = Normal::new(0.0, sigma2.sqrt()).unwrap();
        let mut mean = 0.0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..8192).map(|_| normal.sample(&mut rng)).collect();
            let psd = periodogram(&SampledSignal::new(s, fs, 0).unwrap()).unwrap();
            let d = psd.density();
            mean += d[1..d.len() - 1].iter().sum::<f64>() / (d.len() - 2) as f64 / 10.0;
        }
        assert!((mean / (sigma2 / (fs / 2.0)) - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn zero_signal_zero_psd() {
        let psd = periodogram(&SampledSignal::new(vec![0.0; 64], 1.0, 0).unwrap()).unwrap();
        assert!(psd.density().iter().all(|&d| d == 0.0));
        assert!(periodogram(&SampledSignal::new(vec![1.0], 1.0, 0).unwrap()).is_err());
    }

    #[test]
    fn scale_invariant() {
        let grid = build_grid(1e6, 8, 4e-3).unwrap();
        let x = synth_carrier(&SynthesisRequest {
            grid,
            noise: Some(crate::synthesis::default_noise_profile()),
            extra_samples: 0,
            seed: 4,
        })
        .unwrap();
        let offsets = [1e3, 1e4, 1e5];
        let a = phase_noise_spectrum(&x, 1e6, &offsets).unwrap();
        let b = phase_noise_spectrum(&x.scaled(37.5), 1e6, &offsets).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.1 - q.1).abs() < 1e-9);
        }
    }

    #[test]
    fn carrier_absent() {
        let x = tone(4096, 4096.0, 100.0, 1.0);
        let noise: Vec<f64> = x.samples().iter().map(|v| v * 0.0).collect();
        let silent = SampledSignal::new(noise, 4096.0, 0).unwrap();
        assert!(matches!(
            phase_noise_spectrum(&silent, 100.0, &[10.0]),
            Err(Error::CarrierNotFound { .. })
        ));
        assert!(matches!(
            demod_phase_psd(&silent, 100.0),
            Err(Error::CarrierNotFound { .. })
        ));
    }

    #[test]
    fn offsets_out_of_range() {
        let x = tone(4096, 4096.0, 512.0, 1.0);
        assert!(phase_noise_spectrum(&x, 512.0, &[0.5]).is_err());
        assert!(phase_noise_spectrum(&x, 512.0, &[1600.0]).is_err());
        assert!(phase_noise_spectrum(&x, 512.0, &[1.0, 1500.0]).is_ok());
    }

    fn flat_spectrum(level_db: f64, lo: f64, hi: f64, n: usize) -> PhaseNoiseSpectrum {
        PhaseNoiseSpectrum {
            carrier_freq: 1e8,
            carrier_power: 0.5,
            points: (0..n)
                .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64, level_db))
                .collect(),
            df: 100.0,
        }
    }

    #[test]
    fn jitter_rectangle() {
        let s = flat_spectrum(-120.0, 1e3, 1e3 + 1e6, 101);
        let j = jitter(&s, 1e3, 1e3 + 1e6).unwrap();
        assert!((j.integrated_l / 1e-6 - 1.0).abs() < 1e-9);
        let half = jitter(&s, 1e3, 1e3 + 5e5).unwrap();
        assert!((half.integrated_l / j.integrated_l - 0.5).abs() < 1e-9);
        // edges between stored points
        let odd = jitter(&s, 1.5e4, 2.5e5).unwrap();
        assert!((odd.integrated_l / (1e-12 * 2.35e5) - 1.0).abs() < 1e-9);
        let expect_rms = (2e-6f64).sqrt() / (2.0 * PI * 1e8);
        assert!((j.rms_time_jitter / expect_rms - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jitter_band_errors() {
        let s = flat_spectrum(-120.0, 1e3, 1e6, 11);
        assert!(matches!(jitter(&s, 5e5, 5e5), Err(Error::EmptyBand { .. })));
        assert!(matches!(jitter(&s, 6e5, 5e5), Err(Error::EmptyBand { .. })));
        assert!(jitter(&s, 1e3, 2e6).is_err());
        assert!(jitter(&s, 50.0, 1e5).is_err());
    }

    #[test]
    fn penalty() {
        assert_eq!(classical_penalty(-100.0, 10).unwrap(), -80.0);
        assert_eq!(classical_penalty(-100.0, 1).unwrap(), -100.0);
        assert!((classical_penalty(-90.0, 1000).unwrap() - -30.0).abs() < 1e-12);
        assert!(classical_penalty(-90.0, 0).is_err());
    }

    #[test]
    fn pure_tone_phase_psd_at_floor() {
        let grid = build_grid(1e6, 8, 2e-3).unwrap();
        let x = synth_carrier(&SynthesisRequest {
            grid,
            noise: None,
            extra_samples: 0,
            seed: 0,
        })
        .unwrap();
        let psd = demod_phase_psd(&x, 1e6).unwrap();
        assert!(
            psd.density()[1..].iter().all(|&d| d < 1e-25),
            "{:e}",
            psd.density()[1..].iter().cloned().fold(0.0, f64::max)
        );
    }

    #[test]
    fn demod_recovers_injected_profile() {
        // random-walk profile, well above floors across the checked band
        let profile =
            NoiseProfile::new(vec![crate::model::NoiseTerm { alpha: -2, b: 1e-2 }], None).unwrap();
        let grid = build_grid(1e6, 8, 2e-2).unwrap();
        let offsets = [2e3, 5e3, 1e4, 2e4, 5e4];
        let band = |psd: &Psd, f: f64, s: &dyn Fn(f64) -> f64| {
            let lo = (0.9 * f / psd.df()).round() as usize;
            let hi = (1.1 * f / psd.df()).round() as usize;
            (lo..=hi).map(|b| s(psd.frequency(b))).sum::<f64>() / (hi - lo + 1) as f64
        };
        let mut mean = vec![0.0; offsets.len()];
        for seed in 0..10 {
            let x = synth_carrier(&SynthesisRequest {
                grid,
                noise: Some(profile.clone()),
                extra_samples: 0,
                seed,
            })
            .unwrap();
            let psd = demod_phase_psd(&x, 1e6).unwrap();
            for (m, f) in mean.iter_mut().zip(offsets) {
                let d = psd.density();
                *m += band(&psd, f, &|g| d[(g / psd.df()).round() as usize]) / 10.0;
            }
        }
        let reference = build_grid(1e6, 8, 2e-2).unwrap();
        let grid_psd = Psd {
            fs: reference.fs(),
            len: reference.samples(),
            density: vec![0.0; reference.samples() / 2 + 1],
        };
        for (m, f) in mean.iter().zip(offsets) {
            let expect = band(&grid_psd, f, &|g| profile.psd(g));
            let err_db = 10.0 * (m / expect).log10();
            assert!(err_db.abs() < 1.0, "{f}: {err_db} dB");
        }
    }
}
