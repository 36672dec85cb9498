use rand::Rng;

use super::{CommandOutcome, Csv, ExperimentConfig};
use crate::circle_fourier::GridFunction;
use crate::error::{Error, Result};
use crate::frame::{
    atom_l1_norm, atom_l2_norm_sq, build_partition, calibrate_localization,
    localization_violations, tightness_ratio, AtomIndex, FrameParams,
};
use crate::rng::{mix_seed, stream_rng};
use crate::special_fn::{
    calderon_partial_sums, daubechies_sum, weight_tail_sum, CalderonDirection, LowerLimit,
};

const TIGHTNESS_STREAM: u64 = 0x7469_6768;
const LOCALIZATION_CALIBRATION_SAMPLES: usize = 4096;
const LOCALIZATION_MARGIN: f64 = 1.05;
const CALDERON_T: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
const LAMBDA_POWERS: [f64; 3] = [1.5, 2.0, 3.0];

/// One line of `frame_check.csv`. Informational rows carry no bounds and
/// always pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub param: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl CheckRow {
    fn info(check: &'static str, param: impl Into<String>, value: f64) -> Self {
        Self {
            check,
            param: param.into(),
            value,
            lower: None,
            upper: None,
        }
    }

    fn bounded(
        check: &'static str,
        param: impl Into<String>,
        value: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Self {
        Self {
            check,
            param: param.into(),
            value,
            lower,
            upper,
        }
    }

    pub fn passed(&self) -> bool {
        self.lower.is_none_or(|l| self.value >= l) && self.upper.is_none_or(|u| self.value <= u)
    }

    fn name(&self) -> String {
        format!(
            "{} ({}): {} outside [{}, {}]",
            self.check,
            self.param,
            self.value,
            cell(self.lower),
            cell(self.upper)
        )
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Random trigonometric polynomials `1 + Σ_{k<=band} a_k cos kθ + b_k sin kθ`
/// with `Σ |a_k| + |b_k| < 1`, so each is a positive density.
pub fn random_band_limited(count: usize, band: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = stream_rng(mix_seed(seed, TIGHTNESS_STREAM));
    let size = (8 * band).next_power_of_two().max(64);
    (0..count)
        .map(|_| {
            let raw: Vec<(f64, f64)> = (0..band)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let total: f64 = raw.iter().map(|(a, b)| a.abs() + b.abs()).sum();
            let scale = rng.gen_range(0.2..0.9) / total.max(f64::MIN_POSITIVE);
            GridFunction::from_real_fn(size, |t| {
                1.0 + raw
                    .iter()
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let kt = (k + 1) as f64 * t;
                        scale * (a * kt.cos() + b * kt.sin())
                    })
                    .sum::<f64>()
            })
        })
        .collect()
}

fn energy_above(params: &FrameParams, j_max: i32, k: i64) -> f64 {
    let mut sum = 0.0;
    let mut j = j_max + 1;
    loop {
        let w = params.weight(j, k);
        sum += w * w;
        let past_peak = k as f64 * params.b().powi(-j) < (params.s() as f64).sqrt();
        if past_peak && w * w <= 1e-30 * sum {
            return sum;
        }
        j += 1;
    }
}

/// Smallest `j_max` for which frequencies up to `band` lose at most
/// `1e-12 Λ` of their energy above the stored levels.
pub fn tightness_level_range(params: &FrameParams, band: usize) -> Result<i32> {
    let lambda = params.lambda_bs();
    let mut j = params.j0().max(0);
    while (1..=band as i64).any(|k| energy_above(params, j, k) > 1e-12 * lambda) {
        j += 1;
        if j > params.j0() + 4000 {
            return Err(Error::Precondition(
                "no level range captures the test band".into(),
            ));
        }
    }
    Ok(j)
}

fn tightness_rows(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let params = &config.frame;
    let j_max = tightness_level_range(params, config.check_band)?;
    let partition = build_partition(params, j_max)?;
    let fns = random_band_limited(config.check_functions, config.check_band, config.seed);
    let (lo, hi) = tightness_ratio(params, &partition, &fns, j_max)?;
    let lambda = params.lambda_bs();
    let tol = config.tightness_tol;
    Ok(vec![
        CheckRow::info("tightness", "J_max", j_max as f64),
        CheckRow::info("tightness", "Lambda", lambda),
        CheckRow::bounded(
            "tightness",
            "min_ratio",
            lo,
            Some((1.0 - tol) * lambda),
            Some((1.0 + tol) * lambda),
        ),
        CheckRow::bounded(
            "tightness",
            "max_ratio",
            hi,
            Some((1.0 - tol) * lambda),
            Some((1.0 + tol) * lambda),
        ),
        CheckRow::info("tightness", "relative_spread", (hi - lo) / lambda),
    ])
}

fn localization_rows(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let params = &config.frame;
    let j_max = config.localization_j_max;
    let c_s = calibrate_localization(
        params,
        j_max,
        LOCALIZATION_CALIBRATION_SAMPLES,
        LOCALIZATION_MARGIN,
    )?;
    let partition = build_partition(params, j_max.max(1))?;
    let mut rows = vec![CheckRow::info("localization", "c_s", c_s)];
    for level in partition.levels().iter().filter(|l| l.j <= j_max) {
        let mut violations = 0;
        let mut ratio: f64 = 0.0;
        for q in [1, level.count / 2 + 1] {
            let check = localization_violations(
                params,
                &partition,
                &AtomIndex::exact(level.j, q),
                config.localization_grid,
                c_s,
            )?;
            violations += check.violations;
            ratio = ratio.max(check.max_ratio);
        }
        rows.push(CheckRow::bounded(
            "localization",
            format!("j={} violations", level.j),
            violations as f64,
            None,
            Some(0.0),
        ));
        rows.push(CheckRow::bounded(
            "localization",
            format!("j={} max_ratio", level.j),
            ratio,
            None,
            Some(c_s),
        ));
    }
    Ok(rows)
}

fn norm_rows(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let params = &config.frame;
    let (lo, hi) = config.norm_levels;
    let partition = build_partition(params, hi.max(1))?;
    let mut l2 = Vec::new();
    let mut l1 = Vec::new();
    for j in lo.max(params.j0())..=hi {
        let idx = AtomIndex::exact(j, 1);
        let lambda = partition.level(j).expect("level in range").lambda();
        l2.push((j, atom_l2_norm_sq(params, &partition, &idx)? / params.eta()));
        l1.push((j, atom_l1_norm(params, &partition, &idx)? / lambda.sqrt()));
    }
    let mut rows = Vec::new();
    for (name, values) in [
        ("norm_l2_sq_over_eta", &l2),
        ("norm_l1_over_sqrt_lambda", &l1),
    ] {
        let mean = values.iter().map(|v| v.1).sum::<f64>() / values.len() as f64;
        rows.push(CheckRow::info(name, "mean", mean));
        let tol = config.norm_tol;
        for &(j, v) in values {
            rows.push(CheckRow::bounded(
                name,
                format!("j={j}"),
                v,
                Some((1.0 - tol) * mean),
                Some((1.0 + tol) * mean),
            ));
        }
    }
    Ok(rows)
}

fn calderon_rows(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let p = &config.frame;
    let (s, b, j0) = (p.s(), p.b(), p.j0());
    let lambda = p.lambda_bs();
    let tol = config.tightness_tol;
    let mut rows = Vec::new();
    for t in CALDERON_T {
        let full = daubechies_sum(s, b, t)?;
        rows.push(CheckRow::bounded(
            "calderon_full_sum",
            format!("t={t}"),
            full / lambda,
            Some(1.0 - tol),
            Some(1.0 + tol),
        ));
        for (limit, label) in [
            (LowerLimit::AsWritten, "as_written"),
            (LowerLimit::LevelPower, "level_power"),
            (LowerLimit::RiemannGrid, "riemann_grid"),
        ] {
            let coarse = calderon_partial_sums(s, b, j0, t, CalderonDirection::Coarse, limit)?;
            let fine = calderon_partial_sums(s, b, j0, t, CalderonDirection::Fine, limit)?;
            if limit == LowerLimit::AsWritten {
                let split = ((coarse.sum + fine.sum) / full - 1.0).abs();
                rows.push(CheckRow::bounded(
                    "calderon_split",
                    format!("t={t}"),
                    split,
                    None,
                    Some(1e-12),
                ));
                let approx = ((coarse.approximation + fine.approximation) / lambda - 1.0).abs();
                rows.push(CheckRow::bounded(
                    "calderon_gamma_split",
                    format!("t={t}"),
                    approx,
                    None,
                    Some(1e-12),
                ));
            }
            rows.push(CheckRow::info(
                "calderon_coarse_gap",
                format!("t={t} {label}"),
                coarse.relative_gap,
            ));
            rows.push(CheckRow::info(
                "calderon_fine_gap",
                format!("t={t} {label}"),
                fine.relative_gap,
            ));
        }
    }
    Ok(rows)
}

fn lambda_power_rows(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let p = &config.frame;
    let j_max = config.localization_j_max;
    let partition = build_partition(p, j_max.max(1))?;
    let mut rows = Vec::new();
    for level in partition
        .levels()
        .iter()
        .filter(|l| l.j >= 0 && l.j <= j_max)
    {
        for power in LAMBDA_POWERS {
            let bound = p.eta().powf(power - 1.0) * p.b().powf(level.j as f64 * (1.0 - power));
            let ratio = level.lambda_power_sum(power) / bound;
            rows.push(CheckRow::bounded(
                "lambda_power_sum",
                format!("j={} p={power}", level.j),
                ratio,
                None,
                Some(1.0 + 1e-12),
            ));
        }
    }
    Ok(rows)
}

fn weight_tail_rows(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let p = &config.frame;
    let mut rows = Vec::new();
    for j in [0, 2, 5, 8, 10, 12] {
        for k in [5usize, 10, 20, 30] {
            let tail = weight_tail_sum(p.s(), p.b(), j, k)?;
            let ratio = if tail.bound > 0.0 {
                tail.tail / tail.bound
            } else if tail.tail > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            rows.push(CheckRow::bounded(
                "weight_tail",
                format!("j={j} K={k}"),
                ratio,
                None,
                Some(1.0 + 1e-10),
            ));
        }
    }
    Ok(rows)
}

/// Every frame invariant suite, in output order.
pub fn frame_checks(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let mut rows = tightness_rows(config)?;
    rows.extend(localization_rows(config)?);
    rows.extend(norm_rows(config)?);
    rows.extend(calderon_rows(config)?);
    rows.extend(lambda_power_rows(config)?);
    rows.extend(weight_tail_rows(config)?);
    Ok(rows)
}

/// Writes `frame_check.csv`.
pub fn cmd_frame_check(config: &ExperimentConfig) -> Result<CommandOutcome> {
    let rows = frame_checks(config)?;
    let mut csv = Csv::new(
        config,
        &["check", "param", "value", "lower", "upper", "pass"],
    );
    let mut failures = Vec::new();
    for row in &rows {
        csv.row([
            row.check.to_string(),
            row.param.clone(),
            row.value.to_string(),
            cell(row.lower),
            cell(row.upper),
            row.passed().to_string(),
        ]);
        if !row.passed() {
            failures.push(row.name());
        }
    }
    let file = csv.write(&config.output_dir, "frame_check.csv")?;
    Ok(CommandOutcome {
        files: vec![file],
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_polynomials_are_positive_densities() {
        for f in random_band_limited(10, 8, 3) {
            assert!(f.real_parts().iter().all(|&v| v > 0.0));
            assert!((f.mean().re - 1.0).abs() < 1e-12);
        }
        assert_eq!(random_band_limited(2, 4, 1), random_band_limited(2, 4, 1));
        assert_ne!(random_band_limited(2, 4, 1), random_band_limited(2, 4, 2));
    }

    #[test]
    fn level_range_grows_as_b_shrinks() {
        let coarse = FrameParams::with_default_j0(3, 1.4, 1e-3).unwrap();
        let fine = FrameParams::with_default_j0(3, 1.05, 1e-3).unwrap();
        assert!(
            tightness_level_range(&fine, 8).unwrap() > tightness_level_range(&coarse, 8).unwrap()
        );
    }

    #[test]
    fn row_bounds() {
        assert!(CheckRow::info("x", "y", f64::NAN).passed());
        assert!(CheckRow::bounded("x", "y", 1.0, Some(0.5), Some(1.0)).passed());
        assert!(!CheckRow::bounded("x", "y", 1.1, None, Some(1.0)).passed());
        assert!(!CheckRow::bounded("x", "y", 0.1, Some(0.5), None).passed());
    }
}
