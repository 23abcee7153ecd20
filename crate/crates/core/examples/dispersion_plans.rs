//! Delay plans for ideal, linear and constant dispersion, and how far the
//! approximations drift from the ideal plan as the comb widens.

use talbot::dispersion::{
    d_c, delay_plan, eval_dispersion, min_effective_dispersion, offset_difference, DispersionSpec,
};
use talbot::model::{build_grid, si_to_ps_per_nm, CombSpec};

fn main() -> talbot::Result<()> {
    let grid = build_grid(1e8, 64, 1e-6)?;
    println!(
        "one-sample dispersion D_c = {:.0} ps/nm",
        si_to_ps_per_nm(d_c(64, 1e8, 1550e-9)?)
    );

    for width in [1e11, 5e11, 1e12, 3e12] {
        let comb = CombSpec::new(1e8, 1550e-9, width)?;
        let ideal = DispersionSpec::ideal(1, &comb)?;
        let plans = [
            delay_plan(&ideal, &comb, &grid)?,
            delay_plan(&DispersionSpec::linear(&comb)?, &comb, &grid)?,
            delay_plan(&DispersionSpec::constant(&comb)?, &comb, &grid)?,
        ];
        let span = |d: &[i64]| {
            let lo = d.iter().min().copied().unwrap_or(0);
            let hi = d.iter().max().copied().unwrap_or(0);
            format!("[{lo}, {hi}]")
        };
        let linear = offset_difference(&plans[0], &plans[1])?;
        let constant = offset_difference(&plans[0], &plans[2])?;
        println!(
            "\n{:>5} GHz, {} lines: D(lambda0) = {:.3e} ps/nm, max delay {:.2} us",
            width / 1e9,
            plans[0].line_count(),
            si_to_ps_per_nm(eval_dispersion(&ideal, 1550e-9)?),
            plans[0].max_delay() * 1e6
        );
        println!("  ideal - linear   offsets {}", span(&linear));
        println!("  ideal - constant offsets {}", span(&constant));
        println!(
            "  smallest dispersion that moves a line: {:.2} ps/nm",
            si_to_ps_per_nm(min_effective_dispersion(&comb, &grid)?)
        );
    }
    Ok(())
}
