//! Dispersion characteristics and their discretization into integer-sample
//! delay plans.
//!
//! All values are SI internally: dispersion in s/m, wavelength in m, delay
//! in s. Group delay is the integral of the dispersion over wavelength; the
//! closed-form kinds integrate analytically so that the ideal plan lands on
//! exact multiples of the oversampling ratio.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{comb_lines, ps_per_nm_to_si, CombSpec, SimGrid, SPEED_OF_LIGHT};

/// Largest max offset a plan may carry unless a tighter budget is given.
pub const DEFAULT_MAX_OFFSET: u64 = 1 << 32;

/// `c / (lambda^2 f_r^2)`: delays adjacent lines by one repetition period.
pub fn characteristic_dispersion(lambda: f64, f_r: f64) -> f64 {
    SPEED_OF_LIGHT / (lambda * lambda * f_r * f_r)
}

/// Measured dispersion curve, piecewise linear between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    lambda: Vec<f64>,
    dispersion: Vec<f64>,
    /// Integral of the curve from the first knot to each knot.
    cumulative: Vec<f64>,
}

impl DispersionTable {
    /// Points as `(lambda m, D s/m)`, strictly increasing in lambda.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("table", "need at least 2 points"));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(invalid(
                    "table",
                    format!("wavelengths must increase strictly (row {})", i + 2),
                ));
            }
        }
        if points
            .iter()
            .any(|p| !(p.0.is_finite() && p.0 > 0.0 && p.1.is_finite()))
        {
            return Err(invalid(
                "table",
                "wavelengths must be positive and values finite",
            ));
        }
        let lambda: Vec<f64> = points.iter().map(|p| p.0).collect();
        let dispersion: Vec<f64> = points.iter().map(|p| p.1).collect();
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for i in 1..points.len() {
            acc += 0.5 * (dispersion[i - 1] + dispersion[i]) * (lambda[i] - lambda[i - 1]);
            cumulative.push(acc);
        }
        Ok(Self {
            lambda,
            dispersion,
            cumulative,
        })
    }

    /// Parses two whitespace-separated columns `lambda_nm D_ps_per_nm`;
    /// `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parsed = match cols.as_slice() {
                [l, d] => l.parse::<f64>().ok().zip(d.parse::<f64>().ok()),
                _ => None,
            };
            let (l_nm, d_ps_nm) = parsed.ok_or_else(|| Error::Config {
                path: "<table>".into(),
                line: n + 1,
                message: format!("expected `lambda_nm D_ps_per_nm`, got `{line}`"),
            })?;
            points.push((l_nm * 1e-9, ps_per_nm_to_si(d_ps_nm)));
        }
        Self::new(&points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config { line, message, .. } => Error::Config {
                path: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    /// Samples `d(lambda)` on `points` evenly spaced knots over `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, points: usize, d: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 2 || !(hi > lo) {
            return Err(invalid("table", "need >= 2 points over a non-empty range"));
        }
        let pts: Vec<(f64, f64)> = (0..points)
            .map(|i| {
                let l = if i + 1 == points {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                };
                (l, d(l))
            })
            .collect();
        Self::new(&pts)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lambda[0], *self.lambda.last().unwrap())
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambda
            .iter()
            .copied()
            .zip(self.dispersion.iter().copied())
    }

    fn check(&self, lambda: f64) -> Result<()> {
        let (min_m, max_m) = self.range();
        if lambda >= min_m && lambda <= max_m {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                lambda_m: lambda,
                min_m,
                max_m,
            })
        }
    }

    fn segment(&self, lambda: f64) -> usize {
        // index i with lambda[i] <= lambda <= lambda[i + 1]
        let i = self.lambda.partition_point(|&l| l <= lambda);
        i.saturating_sub(1).min(self.lambda.len() - 2)
    }

    fn eval(&self, lambda: f64) -> Result<f64> {
        self.check(lambda)?;
        let i = self.segment(lambda);
        let (l0, l1) = (self.lambda[i], self.lambda[i + 1]);
        let t = (lambda - l0) / (l1 - l0);
        Ok(self.dispersion[i] + t * (self.dispersion[i + 1] - self.dispersion[i]))
    }

    /// Integral from the first knot to `lambda`.
    fn antiderivative(&self, lambda: f64) -> Result<f64> {
        let d = self.eval(lambda)?;
        let i = self.segment(lambda);
        Ok(self.cumulative[i] + 0.5 * (self.dispersion[i] + d) * (lambda - self.lambda[i]))
    }
}

/// Shape of the dispersion curve.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionKind {
    /// `c / (lambda^2 f_r^2 m)` at every wavelength.
    Ideal {
        m: u32,
    },
    /// First-order Taylor expansion of the ideal curve around `lambda0`.
    Linear,
    /// A single value over the whole comb, in s/m.
    Constant(f64),
    Tabulated(DispersionTable),
}

impl DispersionKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ideal { .. } => "ideal",
            Self::Linear => "linear",
            Self::Constant(_) => "constant",
            Self::Tabulated(_) => "tabulated",
        }
    }
}

/// Dispersion curve bound to the comb it is designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSpec {
    kind: DispersionKind,
    f_r: f64,
    lambda0: f64,
}

impl DispersionSpec {
    pub fn new(kind: DispersionKind, f_r: f64, lambda0: f64) -> Result<Self> {
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
        match &kind {
            DispersionKind::Ideal { m } if *m < 1 => {
                return Err(invalid("m", "upconversion factor must be >= 1"));
            }
            DispersionKind::Constant(d) if !d.is_finite() => {
                return Err(invalid("constant", "dispersion must be finite"));
            }
            _ => {}
        }
        Ok(Self { kind, f_r, lambda0 })
    }

    pub fn ideal(m: u32, comb: &CombSpec) -> Result<Self> {
        Self::new(DispersionKind::Ideal { m }, comb.f_r(), comb.lambda0())
    }

    pub fn linear(comb: &CombSpec) -> Result<Self> {
        Self::new(DispersionKind::Linear, comb.f_r(), comb.lambda0())
    }

    /// Constant curve at the ideal value of the center wavelength.
    pub fn constant(comb: &CombSpec) -> Result<Self> {
        let d = characteristic_dispersion(comb.lambda0(), comb.f_r());
        Self::new(DispersionKind::Constant(d), comb.f_r(), comb.lambda0())
    }

    pub fn constant_value(d: f64, comb: &CombSpec) -> Result<Self> {
        Self::new(DispersionKind::Constant(d), comb.f_r(), comb.lambda0())
    }

    pub fn tabulated(table: DispersionTable, comb: &CombSpec) -> Result<Self> {
        Self::new(DispersionKind::Tabulated(table), comb.f_r(), comb.lambda0())
    }

    pub fn kind(&self) -> &DispersionKind {
        &self.kind
    }

    pub fn f_r(&self) -> f64 {
        self.f_r
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }
}

/// Dispersion at `lambda`, s/m.
pub fn eval_dispersion(spec: &DispersionSpec, lambda: f64) -> Result<f64> {
    let center = characteristic_dispersion(spec.lambda0, spec.f_r);
    match &spec.kind {
        DispersionKind::Ideal { m } => Ok(characteristic_dispersion(lambda, spec.f_r) / *m as f64),
        // -2c/(l0^3 f_r^2) * l + 3c/(l0^2 f_r^2)
        DispersionKind::Linear => Ok(center * (3.0 - 2.0 * lambda / spec.lambda0)),
        DispersionKind::Constant(d) => Ok(*d),
        DispersionKind::Tabulated(table) => table.eval(lambda),
    }
}

/// Group delay accumulated from `lambda_ref` to `lambda`, s.
pub fn group_delay(spec: &DispersionSpec, lambda_ref: f64, lambda: f64) -> Result<f64> {
    let (a, b) = (lambda_ref, lambda);
    match &spec.kind {
        DispersionKind::Ideal { m } => {
            let scale = SPEED_OF_LIGHT / (spec.f_r * spec.f_r * *m as f64);
            Ok(scale * (1.0 / a - 1.0 / b))
        }
        DispersionKind::Linear => {
            let center = characteristic_dispersion(spec.lambda0, spec.f_r);
            Ok(center * (b - a) * (3.0 - (a + b) / spec.lambda0))
        }
        DispersionKind::Constant(d) => Ok(d * (b - a)),
        DispersionKind::Tabulated(table) => Ok(table.antiderivative(b)? - table.antiderivative(a)?),
    }
}

/// Per-line integer sample offsets produced by a dispersive element.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayPlan {
    offsets: Vec<usize>,
    max_offset: usize,
    grid: SimGrid,
}

impl DelayPlan {
    /// Plan from arbitrary (possibly negative) raw sample delays; shifts
    /// them so the smallest becomes zero.
    pub fn from_raw(raw: &[i64], grid: SimGrid) -> Result<Self> {
        let min = *raw
            .iter()
            .min()
            .ok_or_else(|| invalid("offsets", "a plan needs at least one line"))?;
        let offsets: Vec<usize> = raw.iter().map(|&r| (r - min) as usize).collect();
        let max_offset = offsets.iter().copied().max().unwrap_or(0);
        Ok(Self {
            offsets,
            max_offset,
            grid,
        })
    }

    /// Single undelayed line.
    pub fn identity(grid: SimGrid) -> Self {
        Self {
            offsets: vec![0],
            max_offset: 0,
            grid,
        }
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn line_count(&self) -> usize {
        self.offsets.len()
    }

    /// Largest delay in seconds.
    pub fn max_delay(&self) -> f64 {
        self.max_offset as f64 / self.grid.fs()
    }
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// [`delay_plan_with_budget`] with [`DEFAULT_MAX_OFFSET`].
pub fn delay_plan(spec: &DispersionSpec, comb: &CombSpec, grid: &SimGrid) -> Result<DelayPlan> {
    delay_plan_with_budget(spec, comb, grid, DEFAULT_MAX_OFFSET)
}

/// Rounds (half to even) each line's group delay, taken from the first
/// line in [`comb_lines`] order, to whole samples and normalizes the
/// smallest offset to zero.
pub fn delay_plan_with_budget(
    spec: &DispersionSpec,
    comb: &CombSpec,
    grid: &SimGrid,
    max_offset_budget: u64,
) -> Result<DelayPlan> {
    if !same_rate(spec.f_r, comb.f_r()) || !same_rate(comb.f_r(), grid.f_r()) {
        return Err(Error::RateMismatch(format!(
            "dispersion {} Hz, comb {} Hz, grid {} Hz",
            spec.f_r,
            comb.f_r(),
            grid.f_r()
        )));
    }
    let lines = comb_lines(comb);
    let reference = lines[0].lambda;
    let fs = grid.fs();
    let raw: Vec<f64> = lines
        .par_iter()
        .map(|line| {
            group_delay(spec, reference, line.lambda).map(|tau| (tau * fs).round_ties_even())
        })
        .collect::<Result<_>>()?;
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !span.is_finite() || span > max_offset_budget as f64 {
        return Err(Error::DelayBudget {
            required: if span.is_finite() {
                span as u64
            } else {
                u64::MAX
            },
            budget: max_offset_budget,
        });
    }
    let raw: Vec<i64> = raw.iter().map(|&r| r as i64).collect();
    DelayPlan::from_raw(&raw, *grid)
}

/// Dispersion giving exactly one sample of delay between adjacent lines at
/// `lambda0`: `(1/(N f_r)) / (c/(c/lambda0 - f_r) - lambda0)`.
pub fn d_c(oversampling: u32, f_r: f64, lambda0: f64) -> Result<f64> {
    if oversampling < 1 {
        return Err(invalid("oversampling", "N must be >= 1"));
    }
    let one_sample = 1.0 / (oversampling as f64 * f_r);
    let spacing = SPEED_OF_LIGHT / (SPEED_OF_LIGHT / lambda0 - f_r) - lambda0;
    Ok(one_sample / spacing)
}

/// Smallest dispersion that moves the extreme comb lines one sample apart.
pub fn min_effective_dispersion(comb: &CombSpec, grid: &SimGrid) -> Result<f64> {
    let lines = comb_lines(comb);
    if lines.len() < 2 {
        return Err(invalid(
            "width",
            "a single-line comb has no wavelength span",
        ));
    }
    let span = lines[0].lambda - lines[lines.len() - 1].lambda;
    Ok((1.0 / grid.fs()) / span)
}

/// `a.offsets[k] - b.offsets[k]` for every line.
pub fn offset_difference(a: &DelayPlan, b: &DelayPlan) -> Result<Vec<i64>> {
    if a.offsets.len() != b.offsets.len() {
        return Err(Error::PlanMismatch(format!(
            "{} vs {} lines",
            a.offsets.len(),
            b.offsets.len()
        )));
    }
    if a.grid != b.grid {
        return Err(Error::PlanMismatch("plans use different grids".into()));
    }
    Ok(a.offsets
        .iter()
        .zip(&b.offsets)
        .map(|(&x, &y)| x as i64 - y as i64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, si_to_ps_per_nm};

    fn comb(width: f64) -> CombSpec {
        CombSpec::new(1e8, 1550e-9, width).unwrap()
    }

    #[test]
    fn ideal_at_center() {
        let c = comb(0.0);
        let d = eval_dispersion(&DispersionSpec::ideal(1, &c).unwrap(), 1550e-9).unwrap();
        assert!((si_to_ps_per_nm(d) / 1.248e7 - 1.0).abs() < 1e-3, "{d}");
        let d2 = eval_dispersion(&DispersionSpec::ideal(2, &c).unwrap(), 1550e-9).unwrap();
        assert_eq!(d2, d / 2.0);
        let lin = eval_dispersion(&DispersionSpec::linear(&c).unwrap(), 1550e-9).unwrap();
        assert_eq!(lin, d);
        // 64 * D_c against the characteristic value
        let dc = d_c(64, 1e8, 1550e-9).unwrap();
        assert!((64.0 * dc / d - 1.0).abs() < 1e-3);
    }

    #[test]
    fn linear_slope_matches_formula() {
        let c = comb(0.0);
        let spec = DispersionSpec::linear(&c).unwrap();
        let l = 1560e-9;
        let expect = -2.0 * SPEED_OF_LIGHT / (1550e-9f64.powi(3) * 1e16) * l
            + 3.0 * SPEED_OF_LIGHT / (1550e-9f64.powi(2) * 1e16);
        let got = eval_dispersion(&spec, l).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_group_delay_is_whole_periods() {
        let c = comb(2e9);
        let spec = DispersionSpec::ideal(1, &c).unwrap();
        let lines = comb_lines(&c);
        let center = lines[lines.len() / 2];
        for line in &lines {
            let tau = group_delay(&spec, center.lambda, line.lambda).unwrap();
            assert!((tau.abs() * 1e8 - line.k.unsigned_abs() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_dc_over_one_spacing_is_one_sample() {
        let c = comb(2e8);
        let spec = DispersionSpec::constant_value(195.0, &c).unwrap();
        let lines = comb_lines(&c);
        let tau = group_delay(&spec, lines[1].lambda, lines[2].lambda).unwrap();
        assert!((tau.abs() - 156.25e-12).abs() < 0.1e-12, "{tau}");
    }

    #[test]
    fn group_delay_zero_at_reference() {
        let c = comb(1e9);
        for spec in [
            DispersionSpec::ideal(1, &c).unwrap(),
            DispersionSpec::linear(&c).unwrap(),
            DispersionSpec::constant(&c).unwrap(),
        ] {
            assert_eq!(group_delay(&spec, 1551e-9, 1551e-9).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_line_plan() {
        let c = comb(0.0);
        let g = build_grid(1e8, 16, 1e-5).unwrap();
        let plan = delay_plan(&DispersionSpec::constant(&c).unwrap(), &c, &g).unwrap();
        assert_eq!(plan.offsets(), &[0]);
        assert_eq!(plan.max_offset(), 0);
    }

    #[test]
    fn three_line_plans_at_dc() {
        let c = comb(2e8);
        let g = build_grid(1e8, 64, 1e-6).unwrap();
        // D_c(64): one sample between neighbours
        let dc64 = DispersionSpec::constant_value(d_c(64, 1e8, 1550e-9).unwrap(), &c).unwrap();
        assert_eq!(delay_plan(&dc64, &c, &g).unwrap().offsets(), &[2, 1, 0]);
        // D_c(1): one carrier period, i.e. N samples
        let dc1 = DispersionSpec::constant_value(d_c(1, 1e8, 1550e-9).unwrap(), &c).unwrap();
        assert_eq!(delay_plan(&dc1, &c, &g).unwrap().offsets(), &[128, 64, 0]);
    }

    #[test]
    fn plan_rejects_rate_mismatch_and_budget() {
        let c = comb(1e9);
        let g = build_grid(1e7, 16, 1e-4).unwrap();
        let spec = DispersionSpec::ideal(1, &c).unwrap();
        assert!(matches!(
            delay_plan(&spec, &c, &g),
            Err(Error::RateMismatch(_))
        ));
        let g = build_grid(1e8, 16, 1e-5).unwrap();
        assert!(matches!(
            delay_plan_with_budget(&spec, &c, &g, 100),
            Err(Error::DelayBudget {
                required: 160,
                budget: 100
            })
        ));
    }

    #[test]
    fn dc_values() {
        let d64 = d_c(64, 1e8, 1550e-9).unwrap();
        assert!((si_to_ps_per_nm(d64) / 195000.0 - 1.0).abs() < 5e-3);
        let d128 = d_c(128, 1e8, 1550e-9).unwrap();
        assert!((d128 / d64 - 0.5).abs() < 1e-12);
        let d1 = d_c(1, 1e8, 1550e-9).unwrap();
        let ideal = characteristic_dispersion(1550e-9, 1e8);
        assert!((d1 / ideal - 1.0).abs() < 1e-4);
        assert!(d_c(0, 1e8, 1550e-9).is_err());
    }

    #[test]
    fn min_dispersion() {
        let g64 = build_grid(1e8, 64, 1e-6).unwrap();
        let g128 = build_grid(1e8, 128, 1e-6).unwrap();
        let wide = min_effective_dispersion(&comb(3e12), &g64).unwrap();
        assert!((si_to_ps_per_nm(wide) / 6.5 - 1.0).abs() < 0.02);
        let doubled = min_effective_dispersion(&comb(3e12), &g128).unwrap();
        assert!((doubled / wide - 0.5).abs() < 1e-12);
        let narrow = min_effective_dispersion(&comb(3e11), &g64).unwrap();
        assert!((narrow / wide / 10.0 - 1.0).abs() < 0.01);
        assert!(min_effective_dispersion(&comb(0.0), &g64).is_err());
    }

    #[test]
    fn difference_of_identical_plans_is_zero() {
        let c = comb(1e10);
        let g = build_grid(1e8, 64, 1e-6).unwrap();
        let p = delay_plan(&DispersionSpec::constant(&c).unwrap(), &c, &g).unwrap();
        assert!(offset_difference(&p, &p).unwrap().iter().all(|&d| d == 0));
        let q = delay_plan(&DispersionSpec::constant(&c).unwrap(), &comb(1e9), &g).unwrap();
        assert!(offset_difference(&p, &q).is_err());
    }

    #[test]
    fn table_parsing() {
        let t = DispersionTable::parse("# lambda D\n1540 100\n\n1560 300\n").unwrap();
        assert_eq!(t.range(), (1540e-9, 1560e-9));
        let spec = DispersionSpec::tabulated(t.clone(), &comb(0.0)).unwrap();
        let mid = eval_dispersion(&spec, 1550e-9).unwrap();
        assert!((mid - 0.2).abs() < 1e-12);
        assert!(matches!(
            eval_dispersion(&spec, 1530e-9),
            Err(Error::OutOfDomain { .. })
        ));
        // trapezoid over a linear segment is exact: mean 0.2 s/m over 20 nm
        let tau = group_delay(&spec, 1540e-9, 1560e-9).unwrap();
        assert!((tau - 0.2 * 20e-9).abs() < 1e-20);
        assert!(DispersionTable::parse("1560 1\n1540 2\n").is_err());
        assert!(DispersionTable::parse("1560 1\n").is_err());
        assert!(matches!(
            DispersionTable::parse("1540 1\n1550 x\n"),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn dense_ideal_table_matches_ideal_plan() {
        let c = comb(2e11);
        let g = build_grid(1e8, 64, 1e-6).unwrap();
        let lines = comb_lines(&c);
        let (lo, hi) = (lines[lines.len() - 1].lambda, lines[0].lambda);
        let table =
            DispersionTable::sample(lo, hi, 1000, |l| characteristic_dispersion(l, 1e8)).unwrap();
        let tab = delay_plan(&DispersionSpec::tabulated(table, &c).unwrap(), &c, &g).unwrap();
        let ideal = delay_plan(&DispersionSpec::ideal(1, &c).unwrap(), &c, &g).unwrap();
        let diff = offset_difference(&tab, &ideal).unwrap();
        assert!(diff.iter().all(|d| d.abs() <= 1), "{:?}", diff.iter().max());
    }

    #[test]
    fn tabulated_plan_outside_table_fails() {
        let c = comb(1e12);
        let g = build_grid(1e8, 64, 1e-6).unwrap();
        let table = DispersionTable::sample(1549e-9, 1551e-9, 10, |_| 1.0).unwrap();
        let spec = DispersionSpec::tabulated(table, &c).unwrap();
        assert!(matches!(
            delay_plan(&spec, &c, &g),
            Err(Error::OutOfDomain { .. })
        ));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::model::build_grid;
    use proptest::prelude::*;

    fn any_spec(c: &CombSpec, pick: u8) -> DispersionSpec {
        match pick % 4 {
            0 => DispersionSpec::ideal(1 + (pick as u32 % 3), c).unwrap(),
            1 => DispersionSpec::linear(c).unwrap(),
            2 => DispersionSpec::constant(c).unwrap(),
            _ => {
                let t = DispersionTable::sample(1500e-9, 1600e-9, 37, |l| {
                    characteristic_dispersion(l, c.f_r()) * (1.0 + 0.1 * (l * 1e8).sin())
                })
                .unwrap();
                DispersionSpec::tabulated(t, c).unwrap()
            }
        }
    }

    proptest! {
        #[test]
        fn group_delay_antisymmetric(pick in 0u8..12, a in 1510e-9f64..1590e-9, b in 1510e-9f64..1590e-9) {
            let c = CombSpec::new(1e8, 1550e-9, 1e11).unwrap();
            let spec = any_spec(&c, pick);
            let ab = group_delay(&spec, a, b).unwrap();
            let ba = group_delay(&spec, b, a).unwrap();
            prop_assert!((ab + ba).abs() <= f64::EPSILON * ab.abs().max(ba.abs()));
        }

        #[test]
        fn ideal_plan_is_multiple_of_n(half in 0usize..400, n in 2u32..80) {
            let f_r = 1e8;
            let c = CombSpec::new(f_r, 1550e-9, 2.0 * f_r * half as f64).unwrap();
            let g = build_grid(f_r, n, 1e-6).unwrap();
            let plan = delay_plan(&DispersionSpec::ideal(1, &c).unwrap(), &c, &g).unwrap();
            let k = plan.line_count();
            for (j, &o) in plan.offsets().iter().enumerate() {
                prop_assert_eq!(o, (k - 1 - j) * n as usize);
            }
        }

        #[test]
        fn normalization_ignores_global_shift(raw in proptest::collection::vec(-1000i64..1000, 1..50), shift in -10_000i64..10_000) {
            let g = build_grid(1e8, 16, 1e-6).unwrap();
            let shifted: Vec<i64> = raw.iter().map(|r| r + shift).collect();
            let a = DelayPlan::from_raw(&raw, g).unwrap();
            let b = DelayPlan::from_raw(&shifted, g).unwrap();
            prop_assert_eq!(a.offsets(), b.offsets());
            prop_assert_eq!(a.offsets().iter().min().copied(), Some(0));
            prop_assert_eq!(a.offsets().iter().max().copied(), Some(a.max_offset()));
        }
    }
}
