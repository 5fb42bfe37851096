use recdiff::export::{read_finals_csv, read_path_csv, write_mc_finals_csv, write_path_csv};
use recdiff::theory::{linear_statistic, w_statistic};
use recdiff::{
    make_grid, qmle_batch, qmle_running, recursive_run, run_trials_with, simulate::simulate,
    DriftSpec, Execution, MonteCarloConfig, RngStream, StepRule,
};

#[test]
fn path_csv_round_trip_preserves_estimates_bitwise() {
    let grid = make_grid(500, StepRule::Exponent(0.75)).unwrap();
    let drift = DriftSpec::Sinusoidal {
        amplitude: 2.0,
        angular_frequency: 3.0,
    };
    let path = simulate(&grid, &drift, 3.0, 16, RngStream::new(4, 0)).unwrap();

    let mut buf = Vec::new();
    write_path_csv(&mut buf, &path, None).unwrap();
    let back = read_path_csv(buf.as_slice(), Some(grid.step())).unwrap();

    assert_eq!(back.increments.values(), path.increments().values());
    let a = recursive_run(path.increments(), 1.0).unwrap();
    let b = recursive_run(&back.increments, 1.0).unwrap();
    assert_eq!(a.final_estimate().to_bits(), b.final_estimate().to_bits());
    let lin = linear_statistic(&back.increments, back.drift_integrals.as_deref(), 3.0).unwrap();
    let q = qmle_batch(&back.increments).unwrap();
    assert!((lin - q).abs() <= 1e-12 * q);
}

#[test]
fn equivalence_holds_under_every_drift() {
    let grid = make_grid(2000, StepRule::Exponent(0.75)).unwrap();
    let drifts = [
        DriftSpec::Zero,
        DriftSpec::Constant { alpha: -1.0 },
        DriftSpec::Sinusoidal {
            amplitude: 1.5,
            angular_frequency: 0.7,
        },
        DriftSpec::OrnsteinUhlenbeck {
            kappa: 2.0,
            level: 0.5,
            sigma: 1.0,
            initial: None,
        },
    ];
    for (k, drift) in drifts.iter().enumerate() {
        let path = simulate(&grid, drift, 3.0, 8, RngStream::new(11, k as u64)).unwrap();
        let rec = recursive_run(path.increments(), 250.0).unwrap();
        let run = qmle_running(path.increments()).unwrap();
        for (a, b) in rec.betas()[1..].iter().zip(&run.betas()[1..]) {
            assert!((a - b).abs() <= 1e-12 * b, "{drift:?}");
        }
    }
}

#[test]
fn sequential_and_parallel_runs_match() {
    let drift = DriftSpec::OrnsteinUhlenbeck {
        kappa: 1.0,
        level: 0.0,
        sigma: 0.5,
        initial: Some(0.2),
    };
    let mut config = MonteCarloConfig::new(300, -1.0, 3.0, 77).with_trials(64);
    config.drift = drift;
    let seq = run_trials_with(&config, Execution::Sequential).unwrap();
    let par = run_trials_with(&config, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn finals_csv_carries_w_statistics() {
    let config = MonteCarloConfig::new(200, -1.0, 3.0, 5).with_trials(40);
    let summary = run_trials_with(&config, Execution::default()).unwrap();
    let mut buf = Vec::new();
    write_mc_finals_csv(&mut buf, &summary, None).unwrap();
    let rows = read_finals_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), 40);
    for (l, row) in rows.iter().enumerate() {
        assert_eq!(row.trial, l as u64 + 1);
        assert_eq!(row.beta_final, summary.final_estimates[l]);
        assert_eq!(row.w, w_statistic(row.beta_final, 3.0, 200).unwrap());
    }
}

#[test]
fn estimator_concentrates_as_n_grows() {
    let spread = |n: usize| {
        let config = MonteCarloConfig::new(n, -1.0, 3.0, 3).with_trials(200);
        run_trials_with(&config, Execution::default())
            .unwrap()
            .sd_final
    };
    let (small, large) = (spread(200), spread(3200));
    // sd scales as n^{-1/2}: a factor of 4 for 16x the data.
    let ratio = small / large;
    assert!((3.2..4.8).contains(&ratio), "ratio {ratio}");
}
