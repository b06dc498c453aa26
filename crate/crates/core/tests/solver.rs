use dnls_core::field::{random_zero_mean, Field, TorusGrid};
use dnls_core::functionals::{lifespan_bound, ProblemParams};
use dnls_core::solver::{integrate, SolverConfig, Trajectory, Trigger, Verdict};
use dnls_core::verify::verify_run;
use dnls_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single_mode(n: usize, amplitude: f64) -> Field {
    let grid = TorusGrid::new(n).unwrap();
    Field::from_modes(&grid, &[(1, c(amplitude, 0.0))]).unwrap()
}

fn smooth_run(n: usize) -> Field {
    let grid = TorusGrid::new(n).unwrap();
    let u0 = Field::from_modes(&grid, &[(1, c(0.2, 0.0)), (-2, c(0.0, 0.1)), (3, c(0.05, 0.05))]).unwrap();
    let params = ProblemParams::new(3.0, c(0.0, -1.0), c(1.0, 0.0)).unwrap();
    let config = SolverConfig {
        t_max: 0.5,
        sample_interval: 0.05,
        dt_init: 0.01,
        step_tolerance: 1e-11,
        ..SolverConfig::default()
    };
    let (traj, _) = integrate(&u0, &params, &config).unwrap();
    traj.states.last().unwrap().clone()
}

#[test]
fn spectral_convergence_under_grid_doubling() {
    let coarse = smooth_run(64);
    let fine = smooth_run(128);
    let coarse_on_fine = coarse.resample(fine.grid());
    let diff = coarse_on_fine
        .samples()
        .iter()
        .zip(fine.samples())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-8, "grid doubling changed the solution by {diff}");
}

#[test]
fn blowup_time_converges_in_step_tolerance() {
    let u0 = single_mode(64, 1.0);
    let params = ProblemParams::new(3.0, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
    let detect = |tol: f64| {
        let config = SolverConfig {
            step_tolerance: tol,
            sample_interval: 1e-2,
            dt_init: 1e-3,
            t_max: 2.0,
            ..SolverConfig::default()
        };
        let (_, report) = integrate(&u0, &params, &config).unwrap();
        assert!(report.detected);
        report.t_detected.unwrap()
    };
    let a = detect(1e-8);
    let b = detect(5e-9);
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    assert!((a - 0.5).abs() < 1e-4, "single-mode blowup at {a}");
}

#[test]
fn amplitude_two_example() {
    let u0 = single_mode(64, 2.0);
    let lambda = c(1.0, 0.0);
    let t0 = lifespan_bound(&u0, 3.0, lambda).unwrap();
    assert!((t0 - 4.934802200544679).abs() < 1e-9);
    let params = ProblemParams::new(3.0, lambda, c(1.0, 0.0)).unwrap();
    let config = SolverConfig {
        sample_interval: 1e-3,
        t_max: 1.0,
        ..SolverConfig::default()
    };
    let (_, report) = integrate(&u0, &params, &config).unwrap();
    assert!(report.detected);
    assert!((report.t_detected.unwrap() - 0.125).abs() < 1e-4);
    assert!(report.t_detected.unwrap() <= t0);
    assert_eq!(report.verdict, Verdict::Consistent);
}

#[test]
fn conservative_run_reaches_t_max() {
    let grid = TorusGrid::new(64).unwrap();
    let u0 = random_zero_mean(&grid, 5, 8, 1.5).unwrap().scale(c(0.05, 0.0));
    let params = ProblemParams::new(3.0, c(0.0, -1.0), c(1.0, 0.0)).unwrap();
    let config = SolverConfig {
        t_max: 0.5,
        sample_interval: 0.01,
        dt_init: 0.01,
        ..SolverConfig::default()
    };
    let (traj, report) = integrate(&u0, &params, &config).unwrap();
    assert!(!report.detected);
    assert_eq!(report.trigger, Trigger::TMaxReached);
    assert_eq!(report.verdict, Verdict::NoBlowupExpected);
    assert_eq!(traj.len(), 51);
    assert!((traj.samples.last().unwrap().t - 0.5).abs() < 1e-15);
    let verification = verify_run(&traj, Some(&report), &params).unwrap();
    assert!(verification.all_passed, "{}", verification.to_json().unwrap());
}

#[test]
fn csv_reverification_is_reproducible() {
    let u0 = single_mode(64, 1.0);
    let params = ProblemParams::new(3.0, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
    let config = SolverConfig {
        sample_interval: 1e-3,
        t_max: 1.0,
        ..SolverConfig::default()
    };
    let (traj, report) = integrate(&u0, &params, &config).unwrap();
    let csv = traj.to_csv_string().unwrap();
    let reread = Trajectory::read_csv(csv.as_bytes()).unwrap();
    assert_eq!(reread.to_csv_string().unwrap(), csv);

    let first = verify_run(&reread, Some(&report), &params).unwrap().to_json().unwrap();
    let second = verify_run(&Trajectory::read_csv(csv.as_bytes()).unwrap(), Some(&report), &params)
        .unwrap()
        .to_json()
        .unwrap();
    assert_eq!(first, second);
}

#[test]
fn identical_inputs_give_identical_output() {
    let grid = TorusGrid::new(64).unwrap();
    let u0 = random_zero_mean(&grid, 42, 6, 1.0).unwrap().scale(c(0.3, 0.0));
    let params = ProblemParams::new(3.0, c(0.5, 0.5), c(1.0, 0.0)).unwrap();
    let config = SolverConfig {
        t_max: 0.2,
        sample_interval: 0.01,
        dt_init: 0.01,
        ..SolverConfig::default()
    };
    let (a, ra) = integrate(&u0, &params, &config).unwrap();
    let (b, rb) = integrate(&u0, &params, &config).unwrap();
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    assert_eq!(ra.to_json().unwrap(), rb.to_json().unwrap());
}
