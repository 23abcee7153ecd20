use talbot::config::RawConfig;
use talbot::experiments::{
    job_footprint, mean_of_linear, sample_std, sweep_comb_width, sweep_oversampling, ExperimentConfig,
};
use talbot::model::{estimate_memory, Representation, SimGrid};
use talbot::Error;

fn small() -> ExperimentConfig {
    RawConfig::parse(
        "comb.f_r = 1e7\ngrid.oversampling = 8\ngrid.t_sig = 1e-3\nanalysis.offsets = [1e4, 1e5]\n\
         sweep.ratios = [4, 8]\nsweep.widths = [0, 1e10, 3e10]\nseeds.count = 3\n",
        "small",
    )
    .unwrap()
    .resolve()
    .unwrap()
}

#[test]
fn std_matches_stored_seeds() {
    let cfg = small();
    let rows = sweep_comb_width(&cfg, &cfg.widths).unwrap();
    assert_eq!(rows.len(), 3 * 3 * 2);
    for r in &rows {
        assert_eq!(r.n_seeds(), 3);
        let mean = r.per_seed_db.iter().sum::<f64>() / 3.0;
        let var = r.per_seed_db.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0;
        assert_eq!(r.std_db(), Some(var.sqrt()));
        assert_eq!(r.std_db(), sample_std(&r.per_seed_db));
        assert_eq!(r.mean_db(), mean_of_linear(&r.per_seed_db));
    }
}

#[test]
fn results_independent_of_worker_count() {
    let cfg = small();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep_comb_width(&cfg, &cfg.widths).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn width_zero_rows_agree_across_kinds() {
    // a single line needs no dispersion, so all kinds see the same carrier
    let cfg = small();
    let rows = sweep_comb_width(&cfg, &cfg.widths).unwrap();
    let at_zero: Vec<_> = rows.iter().filter(|r| r.x_value == 0.0 && r.offset_hz == 1e4).collect();
    assert_eq!(at_zero.len(), 3);
    assert!(at_zero.iter().all(|r| r.per_seed_db == at_zero[0].per_seed_db));
}

#[test]
fn oversampling_rows_cover_both_signals() {
    let cfg = small();
    let rows = sweep_oversampling(&cfg, &[4, 8]).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for r in &rows {
        match r.kind.as_str() {
            "pure_tone" => assert_eq!(r.n_seeds(), 1),
            "impaired" => assert_eq!(r.n_seeds(), 3),
            other => panic!("{other}"),
        }
    }
    assert!(sweep_oversampling(&cfg, &[8, 4]).is_err());
    assert!(sweep_oversampling(&cfg, &[2, 4]).is_err());
}

#[test]
fn budget_refusal_uses_estimator() {
    let mut cfg = small();
    cfg.memory_budget = 1000;
    let grid = cfg.grid().unwrap();
    let extended = SimGrid::from_samples(grid.f_r(), grid.oversampling(), grid.samples()).unwrap();
    let expect = job_footprint(&cfg.comb, &grid, 0).unwrap();
    assert_eq!(
        expect,
        6.0 * estimate_memory(Representation::Reduced, &cfg.comb, &extended, 8)
    );
    match sweep_oversampling(&cfg, &[4, 8]) {
        Err(Error::MemoryBudget { required, budget }) => {
            assert_eq!(budget, 1000);
            let largest = SimGrid::from_samples(grid.f_r(), 8, grid.samples()).unwrap();
            assert_eq!(required, job_footprint(&cfg.comb, &largest, 0).unwrap().ceil() as u64);
        }
        other => panic!("{other:?}"),
    }
}
