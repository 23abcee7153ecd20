//! Comb lines, simulation grid and the storage argument for the reduced
//! representation.

use talbot::model::{
    build_grid, comb_lines, estimate_memory, memory_bytes, CombSpec, Representation, GIB, MIB,
};

fn main() -> talbot::Result<()> {
    let comb = CombSpec::new(1e8, 1550e-9, 3e12)?;
    let lines = comb_lines(&comb);
    let (first, last) = (&lines[0], &lines[lines.len() - 1]);
    println!("{} lines, 100 MHz apart", lines.len());
    println!("  longest  {:.4} nm (k = {})", first.lambda * 1e9, first.k);
    println!("  center   {:.4} nm", lines[lines.len() / 2].lambda * 1e9);
    println!("  shortest {:.4} nm (k = {})", last.lambda * 1e9, last.k);

    let grid = build_grid(1e8, 64, 1e-2)?;
    println!(
        "\nN = 64 grid: fs = {:.1} GHz, {} samples, resolution {} Hz",
        grid.fs() / 1e9,
        grid.samples(),
        grid.df()
    );

    let full = memory_bytes(Representation::FullBand, &comb, 64, 1e-2, 8);
    let reduced = memory_bytes(Representation::Reduced, &comb, 2, 1e-2, 8);
    println!("\n10 ms of signal at 8 bytes per sample:");
    println!("  whole optical band  {:>10.1} GiB", full / GIB);
    println!("  carrier, Nyquist    {:>10.2} MiB", reduced / MIB);
    println!(
        "  carrier, N = 64     {:>10.2} MiB",
        estimate_memory(Representation::Reduced, &comb, &grid, 8) / MIB
    );
    Ok(())
}
