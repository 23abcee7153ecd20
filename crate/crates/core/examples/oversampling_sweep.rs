//! Pure tone and noisy carrier versus oversampling ratio.

use talbot::experiments::{sweep_oversampling, write_sweep_csv, ExperimentConfig};

fn main() -> talbot::Result<()> {
    let cfg = ExperimentConfig {
        t_sig: 5e-4,
        seeds: 3,
        ..ExperimentConfig::default()
    };
    let rows = sweep_oversampling(&cfg, &[4, 8, 16, 32])?;
    for r in &rows {
        println!(
            "N = {:>2}  {:>9}  {:>8} Hz  {:8.2} dBc/Hz",
            r.x_value,
            r.kind,
            r.offset_hz,
            r.mean_db()
        );
    }
    write_sweep_csv(&rows, std::io::stdout().lock())
}
