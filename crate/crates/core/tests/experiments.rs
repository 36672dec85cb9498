use std::fs;

use mexneedlet::experiments::{
    bias_grid, cmd_bias, cmd_estimate, cmd_frame_check, estimate, rate_study, ExperimentConfig,
};
use mexneedlet::frame::{bias_study, BiasOptions};
use mexneedlet::sampling::DensityModel;

fn config(text: &str) -> ExperimentConfig {
    text.parse().unwrap()
}

#[test]
fn invalid_frame_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let err = format!("seed = 1\nframe.B = 0.9\noutput_dir = {}", out.display())
        .parse::<ExperimentConfig>()
        .unwrap_err();
    assert!(err.to_string().contains("frame.B"));
    assert!(!out.exists());
}

#[test]
fn frame_check_default_passes_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("seed = 11").with_output_dir(dir.path());
    let outcome = cmd_frame_check(&cfg).unwrap();
    assert!(outcome.passed(), "{:?}", outcome.failures);
    let text = fs::read_to_string(&outcome.files[0]).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), cfg.echo());
    assert_eq!(lines.next().unwrap(), "check,param,value,lower,upper,pass");
    assert!(text.lines().skip(2).all(|l| l.ends_with(",true")));
}

#[test]
fn frame_check_reports_named_failures() {
    let dir = tempfile::tempdir().unwrap();
    // a 0.01% band cannot hold the B = 1.4 tightness ripple
    let cfg = config("seed = 11\nframe_check.tightness_tol = 0.0001").with_output_dir(dir.path());
    let outcome = cmd_frame_check(&cfg).unwrap();
    assert!(!outcome.passed());
    assert!(outcome.failures.iter().any(|f| f.starts_with("tightness")));
}

#[test]
fn linear_and_thresholded_coincide_without_threshold() {
    let cfg = config("seed = 5");
    let run = estimate(&cfg, 3000, 0.0).unwrap();
    assert_eq!(run.thresholded.density, run.linear.density);
    let total: usize = run.counts.iter().map(|(_, q)| q).sum();
    assert_eq!(run.linear.total_survivors(), total);
}

#[test]
fn estimate_writes_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("seed = 5").with_output_dir(dir.path());
    let outcome = cmd_estimate(&cfg, 12000, 0.1).unwrap();
    assert!(outcome.passed());
    let curves = fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    assert_eq!(
        curves.lines().nth(1).unwrap(),
        "theta,thresholded,linear,truth"
    );
    let survivors = fs::read_to_string(dir.path().join("survivors.csv")).unwrap();
    // levels J0 = -4 ..= J_n = 11
    assert_eq!(survivors.lines().count(), 2 + 16);
}

#[test]
fn uniform_truth_is_recovered_flat() {
    let cfg = config("seed = 99\ndensity.kind = uniform");
    let run = estimate(&cfg, 10_000, 0.2).unwrap();
    let total: usize = run.counts.iter().map(|(_, q)| q).sum();
    assert!(
        run.thresholded.total_survivors() * 100 < total,
        "{} of {total} kept",
        run.thresholded.total_survivors()
    );
    let worst = run
        .thresholded
        .density
        .real_parts()
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.1, "max deviation {worst}");
}

#[test]
fn bias_decreases_towards_finer_truncation() {
    let cfg = config("seed = 1");
    let f = DensityModel::default_target().grid(4096);
    let reps = bias_study(
        &cfg.frame,
        &f,
        &[10, 11],
        &[30, 36],
        &BiasOptions {
            j_ref: Some(21),
            ..Default::default()
        },
    )
    .unwrap();
    let r = |j: i32, k: usize| reps.iter().find(|r| r.j == j && r.k == k).unwrap().bias;
    assert!(r(11, 36) < r(10, 30));
}

#[test]
fn band_limited_bias_has_no_cutoff_terms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("seed = 1\ndensity.kind = raised_cosine\nbias.J_grid = 2, 4\nbias.K_grid = 2, 5\nbias.calibration_J_grid = 1, 3")
        .with_output_dir(dir.path());
    let grid = bias_grid(&cfg).unwrap();
    for r in grid.validation.iter().chain(&grid.calibration) {
        assert!(
            r.i2 <= r.floor && r.i3 <= r.floor,
            "J={} K={}: {} {}",
            r.j,
            r.k,
            r.i2,
            r.i3
        );
    }
    let outcome = cmd_bias(&cfg).unwrap();
    assert!(outcome.passed(), "{:?}", outcome.failures);
    let text = fs::read_to_string(&outcome.files[0]).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("# ln_C1="));
}

#[test]
fn doubling_replications_shrinks_standard_errors() {
    let small =
        config("seed = 8\nrate.n_grid = 500, 1000, 2000, 4000\nexperiment.replications = 50");
    let large =
        config("seed = 8\nrate.n_grid = 500, 1000, 2000, 4000\nexperiment.replications = 100");
    let a = rate_study(&small).unwrap();
    let b = rate_study(&large).unwrap();
    for (x, y) in a.reports.iter().zip(&b.reports) {
        let ratio = x.stderr / y.stderr;
        assert!(
            (ratio / 2f64.sqrt() - 1.0).abs() < 0.3,
            "n={}: stderr ratio {ratio}",
            x.n
        );
    }
    assert!(b.slope < 0.0);
    assert_eq!(b.references, vec![(1.0, -2.0 / 3.0), (2.0, -0.8)]);
}

#[test]
fn rate_needs_four_sample_sizes() {
    let cfg = config("seed = 8\nrate.n_grid = 500, 1000, 1000, 2000");
    assert!(rate_study(&cfg).is_err());
}
