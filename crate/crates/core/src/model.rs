//! Core domain types: comb line grid, simulation grid, sampled signals,
//! phase-noise profiles, unit conversion and memory estimation.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Optical frequency comb: repetition rate, center wavelength and spectral width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombSpec {
    f_r: f64,
    lambda0: f64,
    width: f64,
}

impl CombSpec {
    pub fn new(f_r: f64, lambda0: f64, width: f64) -> Result<Self> {
        if !(f_r.is_finite() && f_r > 0.0) {
            return Err(invalid(
                "f_r",
                format!("repetition rate must be > 0, got {f_r}"),
            ));
        }
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(invalid(
                "lambda0",
                format!("center wavelength must be > 0, got {lambda0}"),
            ));
        }
        if !(width.is_finite() && width >= 0.0) {
            return Err(invalid(
                "width",
                format!("comb width must be >= 0, got {width}"),
            ));
        }
        if width / 2.0 >= SPEED_OF_LIGHT / lambda0 {
            return Err(invalid(
                "width",
                "comb extends below zero optical frequency",
            ));
        }
        Ok(Self {
            f_r,
            lambda0,
            width,
        })
    }

    pub fn f_r(&self) -> f64 {
        self.f_r
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Same comb with a different spectral width.
    pub fn with_width(&self, width: f64) -> Result<Self> {
        Self::new(self.f_r, self.lambda0, width)
    }

    /// Optical frequency of the center line.
    pub fn nu0(&self) -> f64 {
        SPEED_OF_LIGHT / self.lambda0
    }

    /// Number of lines on each side of the center line.
    pub fn half_count(&self) -> usize {
        // widths quoted as exact multiples of 2 f_r must not lose a line to rounding
        let ratio = self.width / (2.0 * self.f_r);
        (ratio * (1.0 + 4.0 * f64::EPSILON)).floor() as usize
    }

    /// Odd line count `2 * floor(width / (2 f_r)) + 1`.
    pub fn line_count(&self) -> usize {
        2 * self.half_count() + 1
    }
}

/// One line of the comb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombLine {
    /// Signed index relative to the center line.
    pub k: i64,
    /// Optical frequency, Hz.
    pub nu: f64,
    /// Vacuum wavelength, m.
    pub lambda: f64,
}

/// Lines ordered by ascending optical frequency (descending wavelength).
/// The middle entry is the center line and carries `lambda0` exactly.
pub fn comb_lines(comb: &CombSpec) -> Vec<CombLine> {
    let half = comb.half_count() as i64;
    let nu0 = comb.nu0();
    (-half..=half)
        .map(|k| {
            if k == 0 {
                CombLine {
                    k,
                    nu: nu0,
                    lambda: comb.lambda0,
                }
            } else {
                let nu = nu0 + k as f64 * comb.f_r;
                CombLine {
                    k,
                    nu,
                    lambda: SPEED_OF_LIGHT / nu,
                }
            }
        })
        .collect()
}

/// Time/frequency grid of the reduced (repetition-rate) representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    f_r: f64,
    oversampling: u32,
    t_sig: f64,
    samples: usize,
}

impl SimGrid {
    pub fn f_r(&self) -> f64 {
        self.f_r
    }

    /// Oversampling ratio N (samples per carrier period).
    pub fn oversampling(&self) -> u32 {
        self.oversampling
    }

    /// Sample rate `N * f_r`.
    pub fn fs(&self) -> f64 {
        self.oversampling as f64 * self.f_r
    }

    pub fn t_sig(&self) -> f64 {
        self.t_sig
    }

    /// Analysis sample count M.
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Rayleigh resolution `1 / t_sig`.
    pub fn df(&self) -> f64 {
        1.0 / self.t_sig
    }

    /// Grid holding exactly `samples` samples at `oversampling * f_r`.
    pub fn from_samples(f_r: f64, oversampling: u32, samples: usize) -> Result<Self> {
        check_rate_and_ratio(f_r, oversampling)?;
        if samples < 2 {
            return Err(invalid(
                "samples",
                format!("need at least 2 samples, got {samples}"),
            ));
        }
        Ok(Self {
            f_r,
            oversampling,
            t_sig: samples as f64 / (oversampling as f64 * f_r),
            samples,
        })
    }
}

fn check_rate_and_ratio(f_r: f64, oversampling: u32) -> Result<()> {
    if !(f_r.is_finite() && f_r > 0.0) {
        return Err(invalid(
            "f_r",
            format!("repetition rate must be > 0, got {f_r}"),
        ));
    }
    if oversampling < 2 {
        return Err(invalid(
            "oversampling",
            format!("N = {oversampling} aliases the carrier; need N >= 2"),
        ));
    }
    Ok(())
}

/// Builds the simulation grid: `Fs = N f_r`, `df = 1 / t_sig`, `M = round(Fs t_sig)`.
pub fn build_grid(f_r: f64, oversampling: u32, t_sig: f64) -> Result<SimGrid> {
    check_rate_and_ratio(f_r, oversampling)?;
    if !(t_sig.is_finite() && t_sig > 0.0) {
        return Err(invalid(
            "t_sig",
            format!("time window must be > 0, got {t_sig}"),
        ));
    }
    let m = (oversampling as f64 * f_r * t_sig).round();
    if m < 2.0 {
        return Err(invalid(
            "t_sig",
            format!(
                "window of {t_sig} s holds fewer than 2 samples at {} Hz",
                oversampling as f64 * f_r
            ),
        ));
    }
    Ok(SimGrid {
        f_r,
        oversampling,
        t_sig,
        samples: m as usize,
    })
}

/// Real-valued sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    fs: f64,
    /// Index of the first sample of the analysis window.
    t0_index: usize,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, fs: f64, t0_index: usize) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(invalid("fs", format!("sample rate must be > 0, got {fs}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid("samples", format!("non-finite value at index {i}")));
        }
        if t0_index > samples.len() {
            return Err(invalid(
                "t0_index",
                "alignment index past the end of the signal",
            ));
        }
        Ok(Self {
            samples,
            fs,
            t0_index,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0_index(&self) -> usize {
        self.t0_index
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The last `n` samples as a new signal.
    pub fn tail(&self, n: usize) -> Result<Self> {
        if n > self.samples.len() {
            return Err(Error::SignalTooShort {
                required: n,
                actual: self.samples.len(),
            });
        }
        Ok(Self {
            samples: self.samples[self.samples.len() - n..].to_vec(),
            fs: self.fs,
            t0_index: 0,
        })
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * gain).collect(),
            fs: self.fs,
            t0_index: self.t0_index,
        }
    }
}

/// One power-law term `b * f^alpha` of a phase-noise PSD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTerm {
    pub alpha: i32,
    /// Coefficient in rad^2 Hz^(-alpha-1).
    pub b: f64,
}

/// One-sided phase PSD `S_phi(f) = sum b_alpha f^alpha`, zero below `f_low`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    terms: Vec<NoiseTerm>,
    /// Low-frequency cutoff in Hz; `None` means the grid resolution `df`.
    f_low: Option<f64>,
}

impl NoiseProfile {
    pub fn new(terms: Vec<NoiseTerm>, f_low: Option<f64>) -> Result<Self> {
        for t in &terms {
            if !t.b.is_finite() {
                return Err(invalid(
                    "noise.term",
                    format!("non-finite coefficient {}", t.b),
                ));
            }
        }
        if let Some(f) = f_low {
            if !(f.is_finite() && f > 0.0) {
                return Err(invalid(
                    "noise.f_low",
                    format!("cutoff must be > 0, got {f}"),
                ));
            }
        }
        Ok(Self { terms, f_low })
    }

    /// Profile with no terms (a pure carrier).
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            f_low: None,
        }
    }

    /// Single white term `S_phi = b0`.
    pub fn white(b0: f64) -> Result<Self> {
        Self::new(vec![NoiseTerm { alpha: 0, b: b0 }], None)
    }

    pub fn terms(&self) -> &[NoiseTerm] {
        &self.terms
    }

    pub fn f_low(&self) -> Option<f64> {
        self.f_low
    }

    /// Cutoff resolved against a grid resolution.
    pub fn resolved_f_low(&self, df: f64) -> f64 {
        self.f_low.unwrap_or(df)
    }

    /// `S_phi(f)` in rad^2/Hz, ignoring the cutoff.
    pub fn psd(&self, f: f64) -> f64 {
        self.terms.iter().map(|t| t.b * f.powi(t.alpha)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.b == 0.0)
    }

    /// Checks `S_phi >= 0` over `[f_low, f_max]` on a log grid plus endpoints.
    pub fn check_non_negative(&self, f_low: f64, f_max: f64) -> Result<()> {
        let steps = 200;
        let (lo, hi) = (f_low.max(f64::MIN_POSITIVE).ln(), f_max.max(f_low).ln());
        for i in 0..=steps {
            let f = (lo + (hi - lo) * i as f64 / steps as f64).exp();
            let value = self.psd(f);
            if value < 0.0 {
                return Err(Error::NegativeNoise { freq_hz: f, value });
            }
        }
        Ok(())
    }
}

/// Unit of a dispersion value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionUnit {
    PsPerNm,
    SecondsPerMeter,
}

impl FromStr for DispersionUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ps/nm" => Ok(Self::PsPerNm),
            "s/m" => Ok(Self::SecondsPerMeter),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

impl fmt::Display for DispersionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PsPerNm => "ps/nm",
            Self::SecondsPerMeter => "s/m",
        })
    }
}

/// 1 ps/nm = 1e-3 s/m.
pub fn convert_dispersion(value: f64, from: DispersionUnit, to: DispersionUnit) -> f64 {
    use DispersionUnit::*;
    match (from, to) {
        (PsPerNm, SecondsPerMeter) => value * 1e-3,
        (SecondsPerMeter, PsPerNm) => value * 1e3,
        _ => value,
    }
}

pub fn ps_per_nm_to_si(value: f64) -> f64 {
    convert_dispersion(
        value,
        DispersionUnit::PsPerNm,
        DispersionUnit::SecondsPerMeter,
    )
}

pub fn si_to_ps_per_nm(value: f64) -> f64 {
    convert_dispersion(
        value,
        DispersionUnit::SecondsPerMeter,
        DispersionUnit::PsPerNm,
    )
}

/// Time-domain representation whose storage is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Nyquist sampling of the whole optical comb span.
    FullBand,
    /// The repetition-rate carrier, oversampled N times.
    Reduced,
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "full_band" | "full-band" => Ok(Self::FullBand),
            "reduced" => Ok(Self::Reduced),
            other => Err(invalid(
                "representation",
                format!("`{other}` is not one of full, reduced"),
            )),
        }
    }
}

/// Storage in bytes for a window of `t_sig` seconds.
///
/// Full band: `2 * width * t_sig * bytes_per_sample`.
/// Reduced: `2 * f_r * t_sig * bytes_per_sample * N / 2`.
pub fn memory_bytes(
    representation: Representation,
    comb: &CombSpec,
    oversampling: u32,
    t_sig: f64,
    bytes_per_sample: u32,
) -> f64 {
    let per_second = match representation {
        Representation::FullBand => 2.0 * comb.width,
        Representation::Reduced => 2.0 * comb.f_r * (oversampling as f64 / 2.0),
    };
    per_second * t_sig * bytes_per_sample as f64
}

/// [`memory_bytes`] for the window and oversampling of `grid`.
pub fn estimate_memory(
    representation: Representation,
    comb: &CombSpec,
    grid: &SimGrid,
    bytes_per_sample: u32,
) -> f64 {
    memory_bytes(
        representation,
        comb,
        grid.oversampling,
        grid.t_sig,
        bytes_per_sample,
    )
}

pub const GIB: f64 = 1024.0 * 1024.0 * 1024.0;
pub const MIB: f64 = 1024.0 * 1024.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn comb(width: f64) -> CombSpec {
        CombSpec::new(1e8, 1550e-9, width).unwrap()
    }

    #[test]
    fn grid_paper_scale() {
        let g = build_grid(1e8, 64, 10e-3).unwrap();
        assert_eq!(g.df(), 100.0);
        assert_eq!(g.fs(), 6.4e9);
        assert_eq!(g.samples(), 64_000_000);
    }

    #[test]
    fn grid_small_cases() {
        let g = build_grid(1e8, 2, 1.0).unwrap();
        assert_eq!((g.df(), g.fs(), g.samples()), (1.0, 2e8, 200_000_000));
        let g = build_grid(1e7, 16, 1e-3).unwrap();
        assert_eq!((g.df(), g.fs(), g.samples()), (1000.0, 1.6e8, 160_000));
    }

    #[test]
    fn grid_rejects_aliasing_and_tiny_windows() {
        assert!(build_grid(1e8, 1, 1e-3).is_err());
        assert!(build_grid(1e8, 4, 1e-9).is_err());
        assert!(build_grid(-1.0, 4, 1e-3).is_err());
        assert!(build_grid(1e8, 4, 0.0).is_err());
    }

    #[test]
    fn line_count_paper_comb() {
        let c = comb(3e12);
        assert_eq!(c.line_count(), 30001);
        let lines = comb_lines(&c);
        assert_eq!(lines.len(), 30001);
        assert_eq!(lines[15000].k, 0);
        assert_eq!(lines[15000].lambda, 1550e-9);
    }

    #[test]
    fn degenerate_comb_is_single_line() {
        let lines = comb_lines(&comb(0.0));
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].lambda, 1550e-9);
    }

    #[test]
    fn adjacent_line_spacing() {
        let lines = comb_lines(&comb(2e8));
        let spacing_nm = (lines[1].lambda - lines[2].lambda) * 1e9;
        let oracle_nm = 1550e-9 * 1550e-9 * 1e8 / SPEED_OF_LIGHT * 1e9;
        assert!((spacing_nm - 8.01e-4).abs() < 0.01e-4, "{spacing_nm}");
        assert!((spacing_nm / oracle_nm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn comb_lines_monotone() {
        let lines = comb_lines(&comb(5e10));
        for w in lines.windows(2) {
            assert!(w[1].nu > w[0].nu);
            assert!(w[1].lambda < w[0].lambda);
        }
    }

    #[test]
    fn dispersion_units() {
        assert_eq!(ps_per_nm_to_si(195000.0), 195.0);
        assert_eq!(ps_per_nm_to_si(0.0), 0.0);
        assert_eq!(si_to_ps_per_nm(0.0), 0.0);
        assert!((ps_per_nm_to_si(6.5) - 6.5e-3).abs() < 1e-18);
        assert_eq!(
            "ps/nm".parse::<DispersionUnit>().unwrap(),
            DispersionUnit::PsPerNm
        );
        assert!(matches!(
            "fs/km".parse::<DispersionUnit>(),
            Err(Error::UnknownUnit(_))
        ));
    }

    #[test]
    fn memory_figures() {
        let full = memory_bytes(Representation::FullBand, &comb(3e12), 2, 10e-3, 8);
        assert_eq!(full, 4.8e11);
        assert!(full / GIB > 446.0 && full / GIB < 448.0);
        let reduced = memory_bytes(Representation::Reduced, &comb(3e12), 2, 10e-3, 8);
        assert_eq!(reduced, 1.6e7);
        assert!(reduced / MIB > 15.0 && reduced / MIB < 15.5);
        assert_eq!(
            memory_bytes(Representation::FullBand, &comb(3e12), 2, 0.0, 8),
            0.0
        );
        assert_eq!(
            memory_bytes(Representation::Reduced, &comb(3e12), 64, 0.0, 8),
            0.0
        );
    }

    #[test]
    fn reduced_memory_scales_with_oversampling() {
        let c = comb(3e12);
        let g2 = build_grid(1e8, 2, 1e-3).unwrap();
        let g64 = build_grid(1e8, 64, 1e-3).unwrap();
        let r2 = estimate_memory(Representation::Reduced, &c, &g2, 8);
        let r64 = estimate_memory(Representation::Reduced, &c, &g64, 8);
        assert_eq!(r64 / r2, 32.0);
        assert_eq!(r64, g64.samples() as f64 * 8.0);
    }

    #[test]
    fn noise_profile_evaluation() {
        let p = NoiseProfile::new(
            vec![
                NoiseTerm { alpha: 0, b: 1e-11 },
                NoiseTerm { alpha: -2, b: 1e-1 },
            ],
            None,
        )
        .unwrap();
        assert!((p.psd(1e4) - 1.01e-9).abs() < 1e-22);
        assert!(p.check_non_negative(1.0, 1e9).is_ok());
        let bad = NoiseProfile::new(vec![NoiseTerm { alpha: 0, b: -1.0 }], None).unwrap();
        assert!(matches!(
            bad.check_non_negative(1.0, 1e3),
            Err(Error::NegativeNoise { .. })
        ));
    }

    #[test]
    fn signal_rejects_non_finite() {
        assert!(SampledSignal::new(vec![0.0, f64::NAN], 1.0, 0).is_err());
        assert!(SampledSignal::new(vec![0.0, 1.0], 0.0, 0).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn resolution_times_window_is_one(f_r in 1e3f64..1e10, n in 2u32..128, t_sig in 1e-6f64..1.0) {
            prop_assume!(n as f64 * f_r * t_sig >= 2.0);
            let g = build_grid(f_r, n, t_sig).unwrap();
            let product = g.df() * g.t_sig();
            prop_assert!((product - 1.0).abs() <= f64::EPSILON);
        }

        #[test]
        fn unit_round_trip(v in -1e9f64..1e9) {
            let si = ps_per_nm_to_si(v);
            let back = si_to_ps_per_nm(si);
            prop_assert!((back - v).abs() <= v.abs() * 2.0 * f64::EPSILON);
        }

        #[test]
        fn memory_ratio_is_line_ratio(width in 1e9f64..1e13, f_r in 1e6f64..1e9, t_sig in 1e-4f64..1.0) {
            prop_assume!(width < 1e14);
            let c = CombSpec::new(f_r, 1550e-9, width).unwrap();
            let full = memory_bytes(Representation::FullBand, &c, 2, t_sig, 8);
            let reduced = memory_bytes(Representation::Reduced, &c, 2, t_sig, 8);
            prop_assert!((full / reduced / (width / f_r) - 1.0).abs() < 1e-12);
        }
    }
}
