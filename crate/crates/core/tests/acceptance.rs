//! Acceptance suite: one verdict line per criterion.
//!
//! Every criterion runs at its pinned tolerance. Criteria whose failure has
//! been analysed and recorded are listed in `KNOWN_RED`; the suite fails if any
//! other criterion fails, or if a listed one starts passing.

use std::collections::BTreeSet;
use std::fs;

use mexneedlet::estimator::{
    concentration_check, derive_tuning, ConcentrationSetup, EstimatorConfig,
};
use mexneedlet::experiments::{
    bias_grid, cmd_tables, random_band_limited, rate_study, tables, tightness_level_range,
    ExperimentConfig,
};
use mexneedlet::frame::{
    atom_l2_norm_sq, bias_monotonicity_violations, build_partition, calibrate_localization,
    localization_violations, tightness_ratio, AtomIndex, FrameParams,
};
use mexneedlet::sampling::DensityModel;
use mexneedlet::special_fn::{
    calderon_constant, gamma, lower_incomplete_gamma, upper_incomplete_gamma,
};

const SEED: u64 = 2024;
const KNOWN_RED: [u32; 3] = [5, 6, 9];

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn verdict(id: u32, pass: bool, detail: impl Into<String>) -> Verdict {
    let v = Verdict {
        id,
        pass,
        detail: detail.into(),
    };
    println!(
        "criterion {:>2}: {} | {}",
        v.id,
        if v.pass { "PASS" } else { "FAIL" },
        v.detail
    );
    v
}

fn config(extra: &str) -> ExperimentConfig {
    format!("seed = {SEED}\n{extra}")
        .parse()
        .expect("valid config")
}

fn tuning_reproduction() -> Verdict {
    let a = derive_tuning(8000, 1.4, 0.1, 1.0).unwrap();
    let b = derive_tuning(12000, 1.4, 0.1, 1.0).unwrap();
    let pass = (a.tau_n - 0.0335).abs() <= 5e-4
        && (a.k_n, a.j_n) == (30, 10)
        && (b.tau_n - 0.028).abs() <= 5e-4
        && (b.k_n, b.j_n) == (36, 11);
    verdict(
        1,
        pass,
        format!(
            "n=8000: tau={:.5} K={} J={}; n=12000: tau={:.5} K={} J={}",
            a.tau_n, a.k_n, a.j_n, b.tau_n, b.k_n, b.j_n
        ),
    )
}

/// Composite Simpson rule for `∫_0^∞ x^{2s-1} e^{-2x} dx`, truncated at 100.
fn calderon_quadrature(s: u32) -> f64 {
    let (upper, panels) = (100.0, 400_000usize);
    let h = upper / panels as f64;
    let f = |x: f64| x.powi(2 * s as i32 - 1) * (-2.0 * x).exp();
    let mut sum = f(0.0) + f(upper);
    for i in 1..panels {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn special_function_identities() -> Verdict {
    let mut worst_e: f64 = 0.0;
    for s in 1..=6 {
        let rel = (calderon_constant(s).unwrap() / calderon_quadrature(s) - 1.0).abs();
        worst_e = worst_e.max(rel);
    }
    let a_grid = [0.5, 1.0, 1.5, 2.5, 3.0, 4.5, 6.0, 6.5, 8.0, 12.0];
    let x_grid = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0];
    let mut worst_g: f64 = 0.0;
    for &a in &a_grid {
        for &x in &x_grid {
            let sum = upper_incomplete_gamma(a, x).unwrap() + lower_incomplete_gamma(a, x).unwrap();
            worst_g = worst_g.max((sum / gamma(a) - 1.0).abs());
        }
    }
    verdict(
        2,
        worst_e <= 1e-10 && worst_g <= 1e-12,
        format!("e_s vs quadrature max rel {worst_e:.2e} (<= 1e-10); Gamma split max rel {worst_g:.2e} (<= 1e-12) on 100 points"),
    )
}

fn tightness_at(b: f64) -> (f64, f64, f64) {
    let p = FrameParams::with_default_j0(3, b, 1e-3).unwrap();
    let j_max = tightness_level_range(&p, 8).unwrap();
    let part = build_partition(&p, j_max).unwrap();
    let fns = random_band_limited(20, 8, SEED);
    let (lo, hi) = tightness_ratio(&p, &part, &fns, j_max).unwrap();
    let lam = p.lambda_bs();
    (lo / lam, hi / lam, (hi - lo) / lam)
}

fn frame_tightness() -> Verdict {
    let (lo, hi, spread_fine) = tightness_at(1.05);
    let (_, _, spread_coarse) = tightness_at(1.4);
    verdict(
        3,
        lo >= 0.95 && hi <= 1.05 && spread_fine < spread_coarse,
        format!(
            "B=1.05 ratio/Lambda in [{lo:.6}, {hi:.6}] (within [0.95, 1.05]); spread {spread_fine:.2e} (B=1.05) < {spread_coarse:.2e} (B=1.4)"
        ),
    )
}

fn localization_and_norms() -> Verdict {
    let p = FrameParams::with_default_j0(3, 1.4, 1e-3).unwrap();
    let part = build_partition(&p, 12).unwrap();
    let c_s = calibrate_localization(&p, 12, 4096, 1.05).unwrap();
    let mut violations = 0;
    let mut points = 0;
    for level in part.levels() {
        let qs: BTreeSet<usize> = [1, level.count / 3 + 1, level.count / 2 + 1, level.count]
            .into_iter()
            .collect();
        for q in qs {
            let check =
                localization_violations(&p, &part, &AtomIndex::exact(level.j, q), 8192, c_s)
                    .unwrap();
            violations += check.violations;
            points += check.points;
        }
    }
    let norms: Vec<f64> = (3..=12)
        .map(|j| atom_l2_norm_sq(&p, &part, &AtomIndex::exact(j, 1)).unwrap() / p.eta())
        .collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    let dev = norms
        .iter()
        .map(|v| (v / mean - 1.0).abs())
        .fold(0.0, f64::max);
    verdict(
        4,
        violations == 0 && dev <= 0.10,
        format!(
            "c_s={c_s:.4}: {violations} violations over {points} points, j in [{}, 12]; ||psi||^2/eta max deviation {dev:.2e} (<= 0.10) over j in [3, 12]",
            p.j0()
        ),
    )
}

// ln C_i fitted on J ∈ {5, 7, 9} × K ∈ {10, 20, 30} for the default bump.
const FROZEN_LN_C: [f64; 2] = [-4.4980694282746665, 892.3437322487284];

fn bias_bounds() -> Verdict {
    let grid = bias_grid(&config("")).unwrap();
    let ln_c = grid.constants.ln_c;
    let fixture_ok = (ln_c[0] - FROZEN_LN_C[0]).abs() <= 1e-6 * FROZEN_LN_C[0].abs()
        && (ln_c[1] - FROZEN_LN_C[1]).abs() <= 1e-6 * FROZEN_LN_C[1].abs()
        && ln_c[2] == f64::NEG_INFINITY;
    let bound_failures: Vec<String> = grid
        .validation
        .iter()
        .flat_map(|r| r.violations(&grid.constants))
        .collect();
    let monotone = bias_monotonicity_violations(&grid.validation);
    let truncation_rows: usize = grid.validation.iter().map(|r| r.lemma6.len()).sum();
    let truncation_bad = grid
        .validation
        .iter()
        .flat_map(|r| &r.lemma6)
        .filter(|row| !row.holds())
        .count();
    verdict(
        5,
        fixture_ok && bound_failures.is_empty() && monotone.is_empty(),
        format!(
            "ln C = [{:.4}, {:.4}, {}] (fixture {}); bound violations {:?}; truncation/tail bounds {truncation_bad} of {truncation_rows} violated; monotonicity violations {}",
            ln_c[0],
            ln_c[1],
            ln_c[2],
            if fixture_ok { "matches" } else { "MISMATCH" },
            bound_failures,
            monotone.len()
        ),
    )
}

fn concentration() -> Verdict {
    let model = DensityModel::default_target();
    let cfg = EstimatorConfig::default();
    let reps = 500;

    let base = derive_tuning(2000, 1.4, 0.1, model.sup()).unwrap();
    let setup = ConcentrationSetup::new(
        &model,
        cfg.frame(base.eta_n).unwrap(),
        (cfg.frame(base.eta_n).unwrap().j0(), base.j_n),
        base.k_n,
    )
    .unwrap();
    let moments: Vec<f64> = [2000, 4000, 8000]
        .iter()
        .map(|&n| {
            concentration_check(&model, &setup, n, reps, SEED, f64::INFINITY)
                .unwrap()
                .mean_second_moment
        })
        .collect();
    let ratios = [moments[0] / moments[1], moments[1] / moments[2]];
    let ratios_ok = ratios.iter().all(|r| (1.6..=2.4).contains(r));

    let t = derive_tuning(8000, 1.4, 0.10, model.sup()).unwrap();
    let params = cfg.frame(t.eta_n).unwrap();
    let setup = ConcentrationSetup::new(&model, params, (params.j0(), t.j_n), t.k_n).unwrap();
    let threshold = t.threshold() / 2.0;
    let report = concentration_check(&model, &setup, 8000, reps, SEED, threshold).unwrap();
    verdict(
        6,
        ratios_ok && report.exceedance < 0.01,
        format!(
            "second-moment ratios {:.3} (2000/4000), {:.3} (4000/8000) in [1.6, 2.4]; exceedance {:.4} (< 0.01) at threshold {:.3e} over {} coefficients",
            ratios[0],
            ratios[1],
            report.exceedance,
            threshold,
            setup.truth.len()
        ),
    )
}

fn table_criteria() -> (Verdict, Verdict) {
    let t = tables(&config("")).unwrap();
    let mut lines = Vec::new();
    let mut direction_ok = true;
    for k0 in [0.10, 0.15, 0.20] {
        let a = t.report(8000, k0).unwrap();
        let b = t.report(12000, k0).unwrap();
        let margin = 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        direction_ok &= b.mean_risk + margin < a.mean_risk && a.replications == 100;
        lines.push(format!(
            "k0={k0}: {:.3e} -> {:.3e} (2SE {:.1e})",
            a.mean_risk, b.mean_risk, margin
        ));
    }
    let seven = verdict(7, direction_ok, lines.join("; "));

    let monotone = t.monotonicity_failures();
    let present = |n: usize| t.counts[&n].len();
    let has_11 = |n: usize| t.counts[&n].iter().any(|(j, _)| *j == 11);
    let nonzero = |n: usize, k0: f64| {
        t.report(n, k0)
            .unwrap()
            .surviving
            .iter()
            .filter(|(_, c)| *c > 0)
            .count()
    };
    let structure_ok = present(12000) > present(8000) && has_11(12000) && !has_11(8000);
    let eight = verdict(
        8,
        monotone.is_empty() && structure_ok,
        format!(
            "monotonicity violations {}; levels present {} (n=8000) vs {} (n=12000); level 11 at n=8000: {}, n=12000: {}; levels with survivors at k0=0.1: {} vs {}",
            monotone.len(),
            present(8000),
            present(12000),
            has_11(8000),
            has_11(12000),
            nonzero(8000, 0.1),
            nonzero(12000, 0.1)
        ),
    );
    (seven, eight)
}

fn rate() -> Verdict {
    let study = rate_study(&config("")).unwrap();
    let risks: Vec<String> = study
        .reports
        .iter()
        .map(|r| format!("{}:{:.3e}", r.n, r.mean_risk))
        .collect();
    verdict(
        9,
        study.slope < 0.0 && (-1.2..=-0.2).contains(&study.slope),
        format!(
            "slope {:.4} (in [-1.2, -0.2]); risks {}",
            study.slope,
            risks.join(" ")
        ),
    )
}

fn determinism() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let outcomes: Vec<_> = dirs
        .iter()
        .map(|d| cmd_tables(&config("").with_output_dir(d.path())).unwrap())
        .collect();
    let mut identical = true;
    let mut bytes = 0;
    for (a, b) in outcomes[0].files.iter().zip(&outcomes[1].files) {
        let (x, y) = (fs::read(a).unwrap(), fs::read(b).unwrap());
        identical &= x == y;
        bytes += x.len();
    }
    identical &= outcomes[0].files.len() == 2 && outcomes[1].files.len() == 2;
    verdict(
        10,
        identical,
        format!(
            "two cmd_tables runs, {} files, {bytes} bytes, identical: {identical}",
            outcomes[0].files.len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut verdicts = vec![
        tuning_reproduction(),
        special_function_identities(),
        frame_tightness(),
        localization_and_norms(),
        bias_bounds(),
        concentration(),
    ];
    let (seven, eight) = table_criteria();
    verdicts.extend([seven, eight, rate(), determinism()]);

    let failed: BTreeSet<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    let known: BTreeSet<u32> = KNOWN_RED.into_iter().collect();
    println!("failing criteria: {failed:?}; recorded as unattainable: {known:?}");
    assert_eq!(
        failed, known,
        "criterion verdicts differ from the recorded analysis"
    );
}
