//! Command-line front end.
//!
//! Exit codes: 0 when every requested artifact was written, 2 for
//! configuration errors, 3 for memory or delay budget refusals, 1 for
//! anything else.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use toml::Value;

use crate::analysis::phase_noise_spectrum;
use crate::config::RawConfig;
use crate::dispersion::{delay_plan, eval_dispersion, group_delay, DispersionSpec};
use crate::error::{Error, Result};
use crate::experiments::{
    derive_seed, job_footprint, offsets_experiment, run_all, sweep_comb_width, sweep_oversampling,
    write_sweep_csv, ExperimentConfig, KindChoice, OutputFormat, RunOptions,
};
use crate::model::{
    comb_lines, convert_dispersion, memory_bytes, DispersionUnit, Representation, GIB,
};
use crate::superposition::superpose_with;
use crate::synthesis::{synth_carrier, SynthesisRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "talbot",
    version,
    about = "Phase noise of dispersion-based optical upconversion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Args, Clone)]
struct Common {
    /// Config file of `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "csv+svg"])]
    format: String,
    /// Repetition rate, Hz
    #[arg(long = "f-r", global = true)]
    f_r: Option<f64>,
    /// Center wavelength, nm
    #[arg(long = "lambda0-nm", global = true)]
    lambda0_nm: Option<f64>,
    /// Comb width, Hz
    #[arg(long, global = true)]
    width: Option<f64>,
    /// Oversampling ratio N
    #[arg(long, global = true)]
    oversampling: Option<u32>,
    /// Analysis window, s
    #[arg(long = "t-sig", global = true)]
    t_sig: Option<f64>,
    /// Seeds per point
    #[arg(long, global = true)]
    seeds: Option<u32>,
    /// Carrier offsets of interest, Hz (comma separated)
    #[arg(long, global = true, value_delimiter = ',')]
    offsets: Option<Vec<f64>>,
    /// Memory budget, bytes
    #[arg(long = "memory-budget", global = true)]
    memory_budget: Option<u64>,
    /// Superposition engine: auto, time or spectral
    #[arg(long, global = true)]
    engine: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One run: synthesize, delay, superpose, write the phase-noise spectrum
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Dispersion kind: ideal, linear, constant or tabulated
        #[arg(long, default_value = "ideal")]
        kind: String,
    },
    /// Pure tone and impaired carrier versus oversampling ratio
    SweepOversampling {
        #[command(flatten)]
        common: Common,
        /// Ratios (comma separated)
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<u32>>,
    },
    /// Phase noise versus comb width for each dispersion kind
    SweepCombWidth {
        #[command(flatten)]
        common: Common,
        /// Widths, Hz (comma separated)
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<f64>>,
    },
    /// Per-line offset differences of linear and constant plans to the ideal plan
    OffsetsDiff {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate a dispersion characteristic and its delay plan
    DispersionEval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ideal")]
        kind: String,
        /// Value for `--kind constant`, in `--unit`; default matches ideal at the center
        #[arg(long)]
        value: Option<f64>,
        /// Unit of printed and given dispersion values
        #[arg(long, default_value = "ps/nm")]
        unit: String,
        /// Wavelength to print, nm (default: center)
        #[arg(long = "lambda-nm")]
        lambda_nm: Option<f64>,
        /// Table file for `--kind tabulated`
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Storage needed for the analysis window
    EstimateMemory {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "full", value_parser = ["full", "reduced"])]
        representation: String,
        #[arg(long = "bytes-per-sample", default_value_t = 8)]
        bytes_per_sample: u32,
    },
    /// All three experiments plus a manifest
    RunAll {
        #[command(flatten)]
        common: Common,
    },
    /// Render SVGs from CSVs written by this tool
    Plot {
        #[command(flatten)]
        common: Common,
        csv: Vec<PathBuf>,
    },
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::UnknownUnit(_) => {
            EXIT_CONFIG
        }
        Error::MemoryBudget { .. } | Error::DelayBudget { .. } => EXIT_BUDGET,
        _ => EXIT_RUNTIME,
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::Config {
            path: "<flags>".into(),
            line: 0,
            message: other.to_string(),
        },
    }
}

fn resolve(common: &Common, extra: &[(&str, Value)]) -> Result<(ExperimentConfig, String)> {
    let mut raw = match &common.config {
        Some(path) => RawConfig::load(path).map_err(config_error)?,
        None => RawConfig::default(),
    };
    let floats = |v: &[f64]| Value::Array(v.iter().map(|x| Value::Float(*x)).collect());
    let mut flags: Vec<(&str, Value)> = Vec::new();
    if let Some(v) = common.f_r {
        flags.push(("comb.f_r", Value::Float(v)));
    }
    if let Some(v) = common.lambda0_nm {
        flags.push(("comb.lambda0_nm", Value::Float(v)));
    }
    if let Some(v) = common.width {
        flags.push(("comb.width", Value::Float(v)));
    }
    if let Some(v) = common.oversampling {
        flags.push(("grid.oversampling", Value::Integer(v.into())));
    }
    if let Some(v) = common.t_sig {
        flags.push(("grid.t_sig", Value::Float(v)));
    }
    if let Some(v) = common.seeds {
        flags.push(("seeds.count", Value::Integer(v.into())));
    }
    if let Some(v) = common.seed {
        flags.push(("seeds.master", Value::Integer(v as i64)));
    }
    if let Some(v) = &common.offsets {
        flags.push(("analysis.offsets", floats(v)));
    }
    if let Some(v) = common.memory_budget {
        flags.push(("run.memory_budget", Value::Integer(v as i64)));
    }
    if let Some(v) = &common.engine {
        flags.push(("run.engine", Value::String(v.clone())));
    }
    if let Some(v) = &common.out {
        flags.push(("run.output_dir", Value::String(v.display().to_string())));
    }
    for (k, v) in flags.into_iter().chain(extra.iter().cloned()) {
        raw.set(k, v)?;
    }
    let cfg = raw.resolve()?;
    let text = cfg.to_config_text(None);
    Ok((cfg, text))
}

fn format_of(common: &Common) -> OutputFormat {
    common.format.parse().unwrap_or(OutputFormat::Csv)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    Ok(path)
}

fn kind_choice(name: &str, table: Option<&Path>) -> Result<KindChoice> {
    match name {
        "ideal" => Ok(KindChoice::Ideal),
        "linear" => Ok(KindChoice::Linear),
        "constant" => Ok(KindChoice::Constant),
        "tabulated" => {
            let path = table.ok_or_else(|| Error::Config {
                path: "<flags>".into(),
                line: 0,
                message: "`--kind tabulated` needs `--table`".into(),
            })?;
            Ok(KindChoice::Tabulated(
                crate::dispersion::DispersionTable::load(path)?,
            ))
        }
        other => Err(Error::Config {
            path: "<flags>".into(),
            line: 0,
            message: format!("unknown dispersion kind `{other}`"),
        }),
    }
}

/// Log-spaced offsets, ten per decade, inside the measurable band.
fn dense_offsets(df: f64, limit: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut decade = 10f64.powf((3.0 * df).log10().ceil());
    while decade < limit {
        for m in [1.0, 1.25, 1.6, 2.0, 2.5, 3.15, 4.0, 5.0, 6.3, 8.0] {
            let f = m * decade;
            if f >= 3.0 * df && f < limit {
                out.push(f);
            }
        }
        decade *= 10.0;
    }
    out
}

fn simulate(common: &Common, kind: &str) -> Result<()> {
    let (cfg, _) = resolve(common, &[])?;
    let grid = cfg.grid()?;
    let choice = kind_choice(kind, None)?;
    let spec = choice.spec(&cfg.comb, cfg.upconversion)?;
    let plan = delay_plan(&spec, &cfg.comb, &grid)?;
    let footprint = job_footprint(&cfg.comb, &grid, plan.max_offset())?;
    if footprint > cfg.memory_budget as f64 {
        return Err(Error::MemoryBudget {
            required: footprint.ceil() as u64,
            budget: cfg.memory_budget,
        });
    }
    let x = synth_carrier(&SynthesisRequest {
        grid,
        noise: cfg.noise.clone(),
        extra_samples: plan.max_offset(),
        seed: derive_seed(cfg.master_seed, "simulate", 0),
    })?;
    let engine = cfg
        .engine
        .unwrap_or_else(|| crate::superposition::choose_engine(grid.samples(), plan.line_count()));
    let y = superpose_with(engine, &x, &plan)?;
    let mut offsets = dense_offsets(grid.df(), grid.fs() / 2.0 - grid.f_r());
    offsets.extend(cfg.offsets.iter().copied());
    let spectrum = phase_noise_spectrum(&y, grid.f_r(), &offsets)?;
    let mut buf = Vec::new();
    spectrum.write_csv(&mut buf)?;
    let path = write(&cfg.output_dir, "spectrum.csv", &buf)?;
    println!(
        "{} lines, {} dispersion, max offset {} samples -> {}",
        plan.line_count(),
        spec.label(),
        plan.max_offset(),
        path.display()
    );
    for f in &cfg.offsets {
        let l = spectrum
            .points
            .iter()
            .find(|p| p.0 == *f)
            .map(|p| p.1)
            .unwrap();
        println!("L({f} Hz) = {l:.2} dBc/Hz");
    }
    if format_of(common) == OutputFormat::CsvSvg {
        let svg = crate::plot::render(&crate::plot::Chart {
            title: format!(
                "Phase noise, {} lines, {} dispersion",
                plan.line_count(),
                spec.label()
            ),
            x_label: "offset (Hz)".into(),
            y_label: "L (dBc/Hz)".into(),
            log_x: true,
            series: vec![crate::plot::Series {
                label: spec.label().into(),
                points: spectrum.points.clone(),
            }],
        })?;
        write(&cfg.output_dir, "spectrum.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn write_sweep(
    cfg: &ExperimentConfig,
    common: &Common,
    stem: &str,
    x_label: &str,
    rows: &[crate::experiments::SweepRow],
) -> Result<()> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf)?;
    let path = write(&cfg.output_dir, &format!("{stem}.csv"), &buf)?;
    println!("{} rows -> {}", rows.len(), path.display());
    if format_of(common) == OutputFormat::CsvSvg {
        for (name, svg) in crate::plot::sweep_svgs(rows, x_label)? {
            write(
                &cfg.output_dir,
                &format!("{stem}_{name}.svg"),
                svg.as_bytes(),
            )?;
        }
    }
    Ok(())
}

fn dispersion_eval(
    common: &Common,
    kind: &str,
    value: Option<f64>,
    unit: &str,
    lambda_nm: Option<f64>,
    table: Option<&Path>,
) -> Result<()> {
    let (cfg, _) = resolve(common, &[])?;
    let unit: DispersionUnit = unit.parse()?;
    let comb = &cfg.comb;
    let spec = match (kind, value) {
        ("constant", Some(v)) => DispersionSpec::constant_value(
            convert_dispersion(v, unit, DispersionUnit::SecondsPerMeter),
            comb,
        )?,
        _ => kind_choice(kind, table)?.spec(comb, cfg.upconversion)?,
    };
    let lambda = lambda_nm.map(|l| l * 1e-9).unwrap_or(comb.lambda0());
    let d = eval_dispersion(&spec, lambda)?;
    println!(
        "D({} nm) = {:.6e} {unit} ({} dispersion)",
        lambda * 1e9,
        convert_dispersion(d, DispersionUnit::SecondsPerMeter, unit),
        spec.label()
    );

    let grid = cfg.grid()?;
    let plan = delay_plan(&spec, comb, &grid)?;
    let lines = comb_lines(comb);
    let mut buf = Vec::new();
    use std::io::Write as _;
    writeln!(
        buf,
        "line_index,lambda_nm,dispersion_{},group_delay_s,offset_samples",
        unit.to_string().replace('/', "_per_")
    )?;
    for (i, (line, o)) in lines.iter().zip(plan.offsets()).enumerate() {
        let d = convert_dispersion(
            eval_dispersion(&spec, line.lambda)?,
            DispersionUnit::SecondsPerMeter,
            unit,
        );
        let tau = group_delay(&spec, lines[0].lambda, line.lambda)?;
        writeln!(buf, "{i},{},{d},{tau},{o}", line.lambda * 1e9)?;
    }
    let path = write(&cfg.output_dir, "dispersion_eval.csv", &buf)?;
    println!(
        "{} lines, max offset {} samples -> {}",
        plan.line_count(),
        plan.max_offset(),
        path.display()
    );
    Ok(())
}

fn estimate(common: &Common, representation: &str, bytes_per_sample: u32) -> Result<()> {
    let (cfg, _) = resolve(common, &[])?;
    let repr: Representation = representation.parse()?;
    let bytes = memory_bytes(
        repr,
        &cfg.comb,
        cfg.oversampling,
        cfg.t_sig,
        bytes_per_sample,
    );
    println!(
        "{representation} representation: {bytes:.0} bytes ({:.1} GiB) for t_sig = {} s",
        bytes / GIB,
        cfg.t_sig
    );
    if bytes > cfg.memory_budget as f64 {
        return Err(Error::MemoryBudget {
            required: bytes.ceil() as u64,
            budget: cfg.memory_budget,
        });
    }
    println!("within budget of {} bytes", cfg.memory_budget);
    Ok(())
}

fn plot(common: &Common, csvs: &[PathBuf]) -> Result<()> {
    if csvs.is_empty() {
        return Err(Error::Config {
            path: "<flags>".into(),
            line: 0,
            message: "`plot` needs at least one CSV".into(),
        });
    }
    for csv in csvs {
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
        let dir = match &common.out {
            Some(d) => d.clone(),
            None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        for (suffix, svg) in crate::plot::plot_csv(csv)? {
            let name = if suffix.is_empty() {
                format!("{stem}.svg")
            } else {
                format!("{stem}_{suffix}.svg")
            };
            let path = write(&dir, &name, svg.as_bytes())?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { common, kind } => simulate(&common, &kind)?,
        Command::SweepOversampling { common, ratios } => {
            let extra: Vec<(&str, Value)> = ratios
                .iter()
                .map(|r| {
                    (
                        "sweep.ratios",
                        Value::Array(r.iter().map(|v| Value::Integer((*v).into())).collect()),
                    )
                })
                .collect();
            let (cfg, _) = resolve(&common, &extra)?;
            let rows = sweep_oversampling(&cfg, &cfg.oversampling_ratios)?;
            write_sweep(
                &cfg,
                &common,
                "sweep_oversampling",
                "oversampling ratio N",
                &rows,
            )?;
        }
        Command::SweepCombWidth { common, widths } => {
            let extra: Vec<(&str, Value)> = widths
                .iter()
                .map(|w| {
                    (
                        "sweep.widths",
                        Value::Array(w.iter().map(|v| Value::Float(*v)).collect()),
                    )
                })
                .collect();
            let (cfg, _) = resolve(&common, &extra)?;
            let rows = sweep_comb_width(&cfg, &cfg.widths)?;
            write_sweep(&cfg, &common, "sweep_comb_width", "comb width (Hz)", &rows)?;
        }
        Command::OffsetsDiff { common } => {
            let (cfg, _) = resolve(&common, &[])?;
            let widths = match common.width {
                Some(w) => vec![w],
                None => cfg.offsets_widths.clone(),
            };
            for table in offsets_experiment(&cfg, &widths)? {
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                let stem = format!("offsets_{}GHz", table.width / 1e9);
                let path = write(&cfg.output_dir, &format!("{stem}.csv"), &buf)?;
                println!("{} lines -> {}", table.rows.len(), path.display());
                if format_of(&common) == OutputFormat::CsvSvg {
                    let svg = crate::plot::offsets_svg(&table)?;
                    write(&cfg.output_dir, &format!("{stem}.svg"), svg.as_bytes())?;
                }
            }
        }
        Command::DispersionEval {
            common,
            kind,
            value,
            unit,
            lambda_nm,
            table,
        } => dispersion_eval(&common, &kind, value, &unit, lambda_nm, table.as_deref())?,
        Command::EstimateMemory {
            common,
            representation,
            bytes_per_sample,
        } => estimate(&common, &representation, bytes_per_sample)?,
        Command::RunAll { common } => {
            let (cfg, text) = resolve(&common, &[])?;
            let manifest = run_all(
                &cfg,
                &RunOptions {
                    format: format_of(&common),
                    config_text: &text,
                },
            )?;
            for (name, outcome) in &manifest.outcomes {
                println!("{name}: {outcome:?}");
            }
            println!(
                "{} files -> {}",
                manifest.files.len(),
                cfg.output_dir.join("manifest.txt").display()
            );
            if !manifest.all_written() {
                return Ok(if manifest.refused() {
                    EXIT_BUDGET
                } else {
                    EXIT_RUNTIME
                });
            }
        }
        Command::Plot { common, csv } => plot(&common, &csv)?,
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
