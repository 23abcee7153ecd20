//! Parameter sweeps: oversampling ratio, comb width per dispersion kind,
//! and per-line offset differences between dispersion kinds.
//!
//! Every seed of a sweep draws one carrier realization and reuses it for
//! all points of that sweep, so differences between points are paired
//! comparisons on the same noise. Seeds depend only on the master seed,
//! the experiment name and the seed index; execution order and worker
//! count never change a result.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analysis::{periodogram, phase_noise_from_psd};
use crate::dispersion::{
    delay_plan, offset_difference, DelayPlan, DispersionSpec, DispersionTable,
};
use crate::error::{invalid, Error, Result};
use crate::model::{
    build_grid, comb_lines, estimate_memory, CombSpec, NoiseProfile, Representation, SampledSignal,
    SimGrid,
};
use crate::superposition::{superpose, superpose_with, Engine};
use crate::synthesis::{default_noise_profile, synth_carrier, SynthesisRequest};

/// Working-set multiple of one stored carrier (input copy, transform
/// buffers, output and periodogram).
pub const WORKING_SET_FACTOR: f64 = 6.0;

pub const OVERSAMPLING_EXPERIMENT: &str = "sweep_oversampling";
pub const COMB_WIDTH_EXPERIMENT: &str = "sweep_comb_width";
pub const OFFSETS_EXPERIMENT: &str = "offsets_diff";

/// Dispersion characteristic selected by name; bound to a comb on use.
#[derive(Debug, Clone, PartialEq)]
pub enum KindChoice {
    Ideal,
    Linear,
    /// Ideal value at the center wavelength, over the whole comb.
    Constant,
    Tabulated(DispersionTable),
}

impl KindChoice {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Linear => "linear",
            Self::Constant => "constant",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn spec(&self, comb: &CombSpec, m: u32) -> Result<DispersionSpec> {
        match self {
            Self::Ideal => DispersionSpec::ideal(m, comb),
            Self::Linear => DispersionSpec::linear(comb),
            Self::Constant => DispersionSpec::constant(comb),
            Self::Tabulated(t) => DispersionSpec::tabulated(t.clone(), comb),
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Comb for single runs; sweeps vary its width.
    pub comb: CombSpec,
    pub oversampling: u32,
    pub t_sig: f64,
    pub kinds: Vec<KindChoice>,
    /// Upconversion factor of the ideal characteristic.
    pub upconversion: u32,
    pub noise: Option<NoiseProfile>,
    pub offsets: Vec<f64>,
    pub oversampling_ratios: Vec<u32>,
    pub widths: Vec<f64>,
    pub offsets_widths: Vec<f64>,
    pub offsets_oversampling: u32,
    pub seeds: u32,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub memory_budget: u64,
    /// `None` lets each superposition pick its engine.
    pub engine: Option<Engine>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            comb: CombSpec::new(1e8, 1550e-9, 1e12).expect("valid default comb"),
            oversampling: 16,
            t_sig: 2e-3,
            kinds: vec![KindChoice::Constant, KindChoice::Linear, KindChoice::Ideal],
            upconversion: 1,
            noise: Some(default_noise_profile()),
            offsets: vec![1e4, 1e6],
            oversampling_ratios: vec![4, 8, 16, 32, 64],
            widths: vec![0.0, 1e11, 2.5e11, 5e11, 1e12, 1.5e12, 2e12, 3e12],
            offsets_widths: vec![1e11, 3e12],
            offsets_oversampling: 64,
            seeds: 10,
            master_seed: 1,
            output_dir: PathBuf::from("out"),
            memory_budget: 1 << 30,
            engine: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let periods = self.t_sig * self.comb.f_r();
        if !(periods >= 1.0) || (periods - periods.round()).abs() > 1e-6 * periods.max(1.0) {
            let snapped = periods.round().max(1.0) / self.comb.f_r();
            return Err(invalid(
                "grid.t_sig",
                format!(
                    "t_sig must be a whole number of carrier periods 1/f_r so the carrier \
                     falls on a bin; {:e} s spans {periods} periods, nearest valid value is {snapped:e} s",
                    self.t_sig
                ),
            ));
        }
        build_grid(self.comb.f_r(), self.oversampling, self.t_sig)?;
        if self.seeds < 1 {
            return Err(invalid("seeds.count", "need at least one seed"));
        }
        if self.upconversion < 1 {
            return Err(invalid("dispersion.m", "upconversion factor must be >= 1"));
        }
        if self.offsets.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(invalid("analysis.offsets", "offsets must be positive"));
        }
        if self.oversampling_ratios.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("sweep.ratios", "ratios must be strictly ascending"));
        }
        if self.oversampling_ratios.iter().any(|&n| n < 2) {
            return Err(invalid("sweep.ratios", "ratios must be >= 2"));
        }
        if self.widths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("sweep.widths", "widths must be strictly ascending"));
        }
        for &w in self.widths.iter().chain(&self.offsets_widths) {
            self.comb.with_width(w)?;
        }
        if let Some(noise) = &self.noise {
            let grid = self.grid()?;
            noise.check_non_negative(noise.resolved_f_low(grid.df()), grid.fs() / 2.0)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SimGrid> {
        build_grid(self.comb.f_r(), self.oversampling, self.t_sig)
    }
}

/// Seed for one realization: SHA-256 of (master, experiment, index).
pub fn derive_seed(master: u64, experiment: &str, seed_index: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((experiment.len() as u64).to_le_bytes());
    h.update(experiment.as_bytes());
    h.update(seed_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// One measured point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Oversampling ratio or comb width.
    pub x_value: f64,
    /// Dispersion kind, or `pure_tone` / `impaired` for oversampling sweeps.
    pub kind: String,
    pub offset_hz: f64,
    /// `L` in dBc/Hz for each seed, in seed order.
    pub per_seed_db: Vec<f64>,
}

impl SweepRow {
    pub fn n_seeds(&self) -> usize {
        self.per_seed_db.len()
    }

    /// Seed average taken on linear `L`, reported in dBc/Hz.
    pub fn mean_db(&self) -> f64 {
        mean_of_linear(&self.per_seed_db)
    }

    /// Sample standard deviation of the per-seed dB values.
    pub fn std_db(&self) -> Option<f64> {
        sample_std(&self.per_seed_db)
    }
}

pub fn mean_of_linear(db: &[f64]) -> f64 {
    let mean = db.iter().map(|v| 10f64.powf(v / 10.0)).sum::<f64>() / db.len() as f64;
    10.0 * mean.log10()
}

pub fn sample_std(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Some(var.sqrt())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "x_value,dispersion_kind,offset_hz,mean_L_dbc_hz,std_L_db,n_seeds"
    )?;
    for r in rows {
        let std = r.std_db().map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.x_value,
            r.kind,
            r.offset_hz,
            r.mean_db(),
            std,
            r.n_seeds()
        )?;
    }
    Ok(())
}

/// Bytes one worker needs to process a carrier of `samples` samples.
pub fn job_footprint(comb: &CombSpec, grid: &SimGrid, extra_samples: usize) -> Result<f64> {
    let extended = SimGrid::from_samples(
        grid.f_r(),
        grid.oversampling(),
        grid.samples() + extra_samples,
    )?;
    Ok(WORKING_SET_FACTOR * estimate_memory(Representation::Reduced, comb, &extended, 8))
}

fn check_budget(required: f64, budget: u64) -> Result<usize> {
    if required > budget as f64 {
        return Err(Error::MemoryBudget {
            required: required.ceil() as u64,
            budget,
        });
    }
    let fits = (budget as f64 / required).floor().max(1.0) as usize;
    Ok(fits.min(rayon::current_num_threads()).max(1))
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    Ok(pool.install(job))
}

fn measure(y: &SampledSignal, f_r: f64, offsets: &[f64]) -> Result<Vec<f64>> {
    let psd = periodogram(y)?;
    let spectrum = phase_noise_from_psd(&psd, f_r, offsets)?;
    // points come back sorted; map them onto the caller's order
    Ok(offsets
        .iter()
        .map(|f| {
            spectrum
                .points
                .iter()
                .find(|p| p.0 == *f)
                .map(|p| p.1)
                .unwrap()
        })
        .collect())
}

fn run_superpose(
    engine: Option<Engine>,
    x: &SampledSignal,
    plan: &DelayPlan,
) -> Result<SampledSignal> {
    match engine {
        Some(e) => superpose_with(e, x, plan),
        None => superpose(x, plan),
    }
}

fn sorted_offsets(offsets: &[f64]) -> Vec<f64> {
    let mut v = offsets.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

/// Pure tone and noise-impaired carrier, single line, for each ratio.
pub fn sweep_oversampling(cfg: &ExperimentConfig, ratios: &[u32]) -> Result<Vec<SweepRow>> {
    if ratios.is_empty() || ratios.windows(2).any(|w| w[1] <= w[0]) || ratios[0] < 2 {
        return Err(invalid("ratios", "need ascending ratios >= 2"));
    }
    let f_r = cfg.comb.f_r();
    let offsets = sorted_offsets(&cfg.offsets);
    let max_offset = offsets.last().copied().unwrap_or(0.0);
    for &n in ratios {
        if n as f64 * f_r / 2.0 - f_r <= max_offset {
            return Err(invalid(
                "ratios",
                format!("N = {n} leaves no room for a {max_offset} Hz offset below fs/2"),
            ));
        }
    }
    let largest = build_grid(f_r, *ratios.last().unwrap(), cfg.t_sig)?;
    let workers = check_budget(job_footprint(&cfg.comb, &largest, 0)?, cfg.memory_budget)?;
    let noise = cfg.noise.clone().unwrap_or_else(default_noise_profile);

    // (ratio, seed) jobs; seed index usize::MAX marks the pure tone
    let mut jobs: Vec<(u32, Option<u32>)> = Vec::new();
    for &n in ratios {
        jobs.push((n, None));
        for s in 0..cfg.seeds {
            jobs.push((n, Some(s)));
        }
    }
    let results: Vec<Result<Vec<f64>>> = with_workers(workers, || {
        jobs.par_iter()
            .map(|&(n, seed_index)| {
                let grid = build_grid(f_r, n, cfg.t_sig)?;
                let request = SynthesisRequest {
                    grid,
                    noise: seed_index.map(|_| noise.clone()),
                    extra_samples: 0,
                    seed: seed_index
                        .map(|s| derive_seed(cfg.master_seed, OVERSAMPLING_EXPERIMENT, s))
                        .unwrap_or(0),
                };
                let x = synth_carrier(&request)?;
                measure(&x, f_r, &offsets)
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut it = results.into_iter();
    for &n in ratios {
        let pure = it.next().unwrap()?;
        let mut impaired: Vec<Vec<f64>> = Vec::with_capacity(cfg.seeds as usize);
        for _ in 0..cfg.seeds {
            impaired.push(it.next().unwrap()?);
        }
        for (i, &f) in offsets.iter().enumerate() {
            rows.push(SweepRow {
                x_value: n as f64,
                kind: "pure_tone".into(),
                offset_hz: f,
                per_seed_db: vec![pure[i]],
            });
        }
        for (i, &f) in offsets.iter().enumerate() {
            rows.push(SweepRow {
                x_value: n as f64,
                kind: "impaired".into(),
                offset_hz: f,
                per_seed_db: impaired.iter().map(|v| v[i]).collect(),
            });
        }
    }
    Ok(rows)
}

/// Delay plans for every (width, kind) pair of a comb-width sweep.
pub fn width_plans(
    cfg: &ExperimentConfig,
    widths: &[f64],
) -> Result<Vec<(f64, String, DelayPlan)>> {
    let grid = cfg.grid()?;
    let mut plans = Vec::new();
    for &w in widths {
        let comb = cfg.comb.with_width(w)?;
        for kind in &cfg.kinds {
            let spec = kind.spec(&comb, cfg.upconversion)?;
            plans.push((
                w,
                kind.label().to_string(),
                delay_plan(&spec, &comb, &grid)?,
            ));
        }
    }
    Ok(plans)
}

/// `L` at each offset of interest versus comb width, per dispersion kind.
pub fn sweep_comb_width(cfg: &ExperimentConfig, widths: &[f64]) -> Result<Vec<SweepRow>> {
    if widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("widths", "widths must be strictly ascending"));
    }
    let grid = cfg.grid()?;
    let f_r = cfg.comb.f_r();
    let offsets = sorted_offsets(&cfg.offsets);
    let plans = width_plans(cfg, widths)?;
    let extra = plans.iter().map(|p| p.2.max_offset()).max().unwrap_or(0);
    let workers = check_budget(job_footprint(&cfg.comb, &grid, extra)?, cfg.memory_budget)?;
    let noise = cfg.noise.clone();

    let per_seed: Vec<Result<Vec<Vec<f64>>>> = with_workers(workers, || {
        (0..cfg.seeds)
            .into_par_iter()
            .map(|s| {
                let x = synth_carrier(&SynthesisRequest {
                    grid,
                    noise: noise.clone(),
                    extra_samples: extra,
                    seed: derive_seed(cfg.master_seed, COMB_WIDTH_EXPERIMENT, s),
                })?;
                plans
                    .iter()
                    .map(|(_, _, plan)| {
                        let y = run_superpose(cfg.engine, &x, plan)?;
                        measure(&y, f_r, &offsets)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    })?;
    let per_seed: Vec<Vec<Vec<f64>>> = per_seed.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (p, (w, kind, _)) in plans.iter().enumerate() {
        for (i, &f) in offsets.iter().enumerate() {
            rows.push(SweepRow {
                x_value: *w,
                kind: kind.clone(),
                offset_hz: f,
                per_seed_db: per_seed.iter().map(|seed| seed[p][i]).collect(),
            });
        }
    }
    Ok(rows)
}

/// Per-line offset differences of the linear and constant plans against
/// the ideal plan for one comb width.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetTable {
    pub width: f64,
    /// `(line index, wavelength nm, ideal - linear, ideal - constant)`.
    pub rows: Vec<(usize, f64, i64, i64)>,
}

impl OffsetTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "line_index,lambda_nm,diff_linear_samples,diff_constant_samples"
        )?;
        for (i, l, a, b) in &self.rows {
            writeln!(w, "{i},{l},{a},{b}")?;
        }
        Ok(())
    }
}

pub fn offsets_experiment(cfg: &ExperimentConfig, widths: &[f64]) -> Result<Vec<OffsetTable>> {
    let grid = build_grid(cfg.comb.f_r(), cfg.offsets_oversampling, cfg.t_sig)?;
    widths
        .iter()
        .map(|&w| {
            let comb = cfg.comb.with_width(w)?;
            let ideal = delay_plan(
                &DispersionSpec::ideal(cfg.upconversion, &comb)?,
                &comb,
                &grid,
            )?;
            let linear = delay_plan(&DispersionSpec::linear(&comb)?, &comb, &grid)?;
            let constant = delay_plan(&DispersionSpec::constant(&comb)?, &comb, &grid)?;
            let dl = offset_difference(&ideal, &linear)?;
            let dc = offset_difference(&ideal, &constant)?;
            let rows = comb_lines(&comb)
                .iter()
                .enumerate()
                .map(|(i, line)| (i, line.lambda * 1e9, dl[i], dc[i]))
                .collect();
            Ok(OffsetTable { width: w, rows })
        })
        .collect()
}

/// Output format of [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    CsvSvg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "csv+svg" => Ok(Self::CsvSvg),
            other => Err(invalid(
                "format",
                format!("`{other}` is not one of csv, csv+svg"),
            )),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::CsvSvg => "csv+svg",
        })
    }
}

/// Outcome of one experiment within [`run_all`].
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Written,
    /// Refused before synthesis; carries the predicted footprint.
    Refused {
        required: u64,
        budget: u64,
    },
    Failed(String),
}

/// Record of a run: emitted files with content hashes and per-experiment
/// outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub tool_version: String,
    pub config_text: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub files: Vec<(String, String)>,
    pub outcomes: Vec<(String, Outcome)>,
}

impl Manifest {
    pub fn all_written(&self) -> bool {
        self.outcomes.iter().all(|(_, o)| *o == Outcome::Written)
    }

    pub fn refused(&self) -> bool {
        self.outcomes
            .iter()
            .any(|(_, o)| matches!(o, Outcome::Refused { .. }))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("[manifest]\n");
        s.push_str(&format!("tool = \"talbot {}\"\n", self.tool_version));
        s.push_str(&format!("config_sha256 = \"{}\"\n", self.config_sha256));
        s.push_str(&format!("master_seed = {}\n", self.master_seed));
        s.push_str("\n[outcomes]\n");
        for (name, o) in &self.outcomes {
            let text = match o {
                Outcome::Written => "written".to_string(),
                Outcome::Refused { required, budget } => {
                    format!("refused: predicted {required} bytes exceeds budget {budget} bytes")
                }
                Outcome::Failed(msg) => format!("failed: {}", msg.replace('"', "'")),
            };
            s.push_str(&format!("{name} = \"{text}\"\n"));
        }
        s.push_str("\n[files]\n");
        for (name, hash) in &self.files {
            s.push_str(&format!("\"{name}\" = \"sha256:{hash}\"\n"));
        }
        s.push_str("\n[config]\n");
        s.push_str(&self.config_text);
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Where [`run_all`] writes and how it renders.
pub struct RunOptions<'a> {
    pub format: OutputFormat,
    /// Resolved configuration text echoed into the manifest.
    pub config_text: &'a str,
}

fn width_label(w: f64) -> String {
    format!("{}GHz", w / 1e9)
}

fn write_file(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    files: &mut Vec<(String, String)>,
) -> Result<()> {
    std::fs::write(dir.join(name), bytes)?;
    files.push((name.to_string(), sha256_hex(bytes)));
    Ok(())
}

fn record(outcomes: &mut Vec<(String, Outcome)>, name: &str, err: Error) {
    let outcome = match err {
        Error::MemoryBudget { required, budget } => Outcome::Refused { required, budget },
        other => Outcome::Failed(other.to_string()),
    };
    outcomes.push((name.to_string(), outcome));
}

/// Runs all three experiments, writes CSVs (and SVGs), then the manifest.
pub fn run_all(cfg: &ExperimentConfig, options: &RunOptions<'_>) -> Result<Manifest> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut outcomes = Vec::new();
    let svg = options.format == OutputFormat::CsvSvg;

    match sweep_oversampling(cfg, &cfg.oversampling_ratios) {
        Ok(rows) => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            write_file(dir, "sweep_oversampling.csv", &buf, &mut files)?;
            if svg {
                for (name, body) in crate::plot::sweep_svgs(&rows, "oversampling ratio N")? {
                    write_file(
                        dir,
                        &format!("sweep_oversampling_{name}.svg"),
                        body.as_bytes(),
                        &mut files,
                    )?;
                }
            }
            outcomes.push((OVERSAMPLING_EXPERIMENT.to_string(), Outcome::Written));
        }
        Err(e) => record(&mut outcomes, OVERSAMPLING_EXPERIMENT, e),
    }

    match sweep_comb_width(cfg, &cfg.widths) {
        Ok(rows) => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            write_file(dir, "sweep_comb_width.csv", &buf, &mut files)?;
            if svg {
                for (name, body) in crate::plot::sweep_svgs(&rows, "comb width (Hz)")? {
                    write_file(
                        dir,
                        &format!("sweep_comb_width_{name}.svg"),
                        body.as_bytes(),
                        &mut files,
                    )?;
                }
            }
            outcomes.push((COMB_WIDTH_EXPERIMENT.to_string(), Outcome::Written));
        }
        Err(e) => record(&mut outcomes, COMB_WIDTH_EXPERIMENT, e),
    }

    match offsets_experiment(cfg, &cfg.offsets_widths) {
        Ok(tables) => {
            for t in &tables {
                let mut buf = Vec::new();
                t.write_csv(&mut buf)?;
                let stem = format!("offsets_{}", width_label(t.width));
                write_file(dir, &format!("{stem}.csv"), &buf, &mut files)?;
                if svg {
                    let body = crate::plot::offsets_svg(t)?;
                    write_file(dir, &format!("{stem}.svg"), body.as_bytes(), &mut files)?;
                }
            }
            outcomes.push((OFFSETS_EXPERIMENT.to_string(), Outcome::Written));
        }
        Err(e) => record(&mut outcomes, OFFSETS_EXPERIMENT, e),
    }

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_text: options.config_text.to_string(),
        config_sha256: sha256_hex(options.config_text.as_bytes()),
        master_seed: cfg.master_seed,
        files,
        outcomes,
    };
    std::fs::write(dir.join("manifest.txt"), manifest.render())?;
    Ok(manifest)
}
