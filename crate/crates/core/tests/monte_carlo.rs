use cluster_extremes::{
    blocks_theta, emit_table, full_report, hsing_pi, run_experiment, runs_theta, simulate,
    two_scale_threshold, EstimatorId, ExperimentConfig, Process, ProcessKind, ProcessSpec,
    Series32, TimeSeries, TwoScaleSpec,
};

fn path(process: Process, n: usize, seed: u64) -> TimeSeries<f64> {
    simulate(&ProcessSpec::new(process, n, seed)).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let h = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        0.5 * (xs[h - 1] + xs[h])
    } else {
        xs[h]
    }
}

fn median_theta1(kind: ProcessKind) -> f64 {
    median(
        (0..100)
            .map(|seed| {
                let s = path(kind.default_process(), 2000, seed);
                full_report(&s, 100, 1.0, 8).unwrap().theta1.unwrap()
            })
            .collect(),
    )
}

#[test]
fn theta1_median_iid_gaussian() {
    let med = median_theta1(ProcessKind::IidGaussian);
    assert!((0.85..=1.15).contains(&med), "median {med}");
}

#[test]
fn theta1_median_max_ar1() {
    let med = median_theta1(ProcessKind::MaxAr1);
    assert!((0.4..=0.6).contains(&med), "median {med}");
}

#[test]
fn comparators_near_one_on_iid_data() {
    // blocks of 10 and about 100 exceedances keep the chance of two
    // exceedances sharing a block small
    let (k, ts) = (2000, TwoScaleSpec::new(100.0, 1).unwrap());
    let mut hsing = Vec::new();
    let mut blocks = Vec::new();
    let mut runs = Vec::new();
    for seed in 0..100 {
        let s = path(Process::IidGaussian, 20_000, seed);
        hsing.push(hsing_pi(&s, k, 1.0, &ts, 8).unwrap().prob(1));
        blocks.push(blocks_theta(&s, k, 1.0, &ts).unwrap());
        let u = two_scale_threshold(&s, 1.0, ts.s_ratio).unwrap();
        runs.push(runs_theta(&s, u, ts.run_length).unwrap());
    }
    for (name, xs) in [("hsing_pi(1)", hsing), ("blocks_theta", blocks), ("runs_theta", runs)] {
        let med = median(xs);
        assert!((med - 1.0).abs() <= 0.05, "{name}: median {med}");
    }
}

#[test]
fn iid_study_is_unbiased_and_rarely_fails() {
    let cfg = ExperimentConfig {
        processes: vec![Process::IidGaussian],
        replications: 200,
        k_grid: vec![50, 100, 150, 200, 250],
        master_seed: 11,
        ..ExperimentConfig::default()
    };
    let table = run_experiment(&cfg, 4).unwrap();
    let theta = table.cell(ProcessKind::IidGaussian, EstimatorId::Theta1, "theta", 100).unwrap();
    assert!((0.9..=1.1).contains(&theta.mean_ratio), "{theta:?}");
    for c in &table.cells {
        assert!(c.failures * 100 <= c.failures + c.successes, "{c:?}");
    }
}

#[test]
fn table_file_matches_rendering() {
    let cfg = ExperimentConfig {
        processes: vec![Process::MaxAr1 { theta: 0.5 }],
        replications: 5,
        k_grid: vec![40, 80],
        n: 800,
        ..ExperimentConfig::default()
    };
    let table = run_experiment(&cfg, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    emit_table(&table, &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text, table.to_csv());
    assert!(!text.contains('\r'));
    let widths: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
    assert!(widths.iter().all(|&w| w == 7));
    assert_eq!(widths.len(), table.cells.len() + 1);
}

#[test]
fn series_file_roundtrip_is_exact() {
    let s = path(Process::SquaredArch1 { eta: 2e-5, lambda: 0.5 }, 500, 3);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("arch.txt");
    s.write(&file).unwrap();
    let back = TimeSeries::<f64>::read(&file).unwrap();
    assert_eq!(back.values(), s.values());
    assert_eq!(back.metadata(), s.metadata());
}

#[test]
fn single_precision_agrees_with_double() {
    for seed in 0..10 {
        let s = path(Process::MaxAr1 { theta: 0.5 }, 2000, seed);
        let narrow: Series32 = TimeSeries::new(s.values().iter().map(|&x| x as f32).collect()).unwrap();
        let wide = full_report(&s, 100, 1.0, 8).unwrap();
        let single = full_report(&narrow, 100, 1.0f32, 8).unwrap();
        let (a, b) = (wide.theta1.unwrap(), f64::from(single.theta1.unwrap()));
        assert!((a - b).abs() < 1e-5, "seed {seed}: {a} vs {b}");
        match (wide.theta2, single.theta2) {
            (Some(a), Some(b)) => assert!((a - f64::from(b)).abs() < 1e-4),
            (a, b) => assert_eq!(a.is_some(), b.is_some()),
        }
    }
}
