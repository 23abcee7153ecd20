//! Phase noise versus comb width for each dispersion kind, written as CSV
//! and one SVG per carrier offset.

use talbot::experiments::{sweep_comb_width, write_sweep_csv, ExperimentConfig};
use talbot::plot::sweep_svgs;

fn main() -> talbot::Result<()> {
    let out = std::env::temp_dir().join("talbot_comb_width");
    std::fs::create_dir_all(&out)?;
    let cfg = ExperimentConfig {
        t_sig: 5e-4,
        seeds: 2,
        offsets: vec![1e5, 1e6],
        ..ExperimentConfig::default()
    };
    let widths = [0.0, 2.5e11, 1e12, 2e12, 3e12];
    let rows = sweep_comb_width(&cfg, &widths)?;
    for r in &rows {
        println!(
            "{:>5} GHz  {:>8}  {:>8} Hz  {:8.2} dBc/Hz  +/- {:.2}",
            r.x_value / 1e9,
            r.kind,
            r.offset_hz,
            r.mean_db(),
            r.std_db().unwrap_or(0.0)
        );
    }
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv)?;
    std::fs::write(out.join("sweep_comb_width.csv"), csv)?;
    for (name, svg) in sweep_svgs(&rows, "comb width (Hz)")? {
        std::fs::write(out.join(format!("sweep_comb_width_{name}.svg")), svg)?;
    }
    println!("written to {}", out.display());
    Ok(())
}
