use std::collections::BTreeMap;

use super::{cell, CommandOutcome, Csv, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimator::{
    derive_tuning, monte_carlo_risk_grid, rate_slope, EstimateResult, Pipeline, RiskReport,
};
use crate::frame::build_partition;
use crate::rng::mix_seed;

/// Thresholded and linear estimates from one sample.
#[derive(Debug, Clone)]
pub struct EstimateRun {
    pub n: usize,
    pub kappa0: f64,
    pub thresholded: EstimateResult,
    pub linear: EstimateResult,
    pub truth: Vec<f64>,
    /// `Q_j` for each level of the estimator's frame.
    pub counts: Vec<(i32, usize)>,
}

pub fn estimate(config: &ExperimentConfig, n: usize, kappa0: f64) -> Result<EstimateRun> {
    let model = config.density_model()?;
    let pipeline = Pipeline::new(&model, &config.estimator, n, kappa0)?;
    let samples = model.sample(n, mix_seed(config.seed, n as u64))?;
    let empirical = pipeline.coefficients(&samples)?;
    let thresholded = pipeline.estimate_from(&samples, &empirical, kappa0)?;
    let linear = pipeline.estimate_from(&samples, &empirical, 0.0)?;
    let counts = pipeline
        .partition
        .levels()
        .iter()
        .map(|l| (l.j, l.count))
        .collect();
    Ok(EstimateRun {
        n,
        kappa0,
        thresholded,
        linear,
        truth: pipeline.truth.real_parts(),
        counts,
    })
}

/// Writes `estimate.csv` (density curves) and `survivors.csv`.
pub fn cmd_estimate(config: &ExperimentConfig, n: usize, kappa0: f64) -> Result<CommandOutcome> {
    let run = estimate(config, n, kappa0)?;
    let mut curves = Csv::new(config, &["theta", "thresholded", "linear", "truth"]);
    let th = run.thresholded.density.real_parts();
    let lin = run.linear.density.real_parts();
    for m in 0..th.len() {
        curves.row([
            run.thresholded.density.theta(m),
            th[m],
            lin[m],
            run.truth[m],
        ]);
    }
    let mut survivors = Csv::new(config, &["j", "Q_j", "thresholded", "linear"]);
    for &(j, count) in &run.counts {
        survivors.row([
            j.to_string(),
            count.to_string(),
            cell(run.thresholded.survivors_at(j)),
            cell(run.linear.survivors_at(j)),
        ]);
    }
    let mut failures = Vec::new();
    for (label, est) in [("thresholded", &run.thresholded), ("linear", &run.linear)] {
        if est.imag_residual > 1e-8 {
            failures.push(format!(
                "real synthesis: {label} estimate has imaginary part {:.3e}",
                est.imag_residual
            ));
        }
    }
    let files = vec![
        curves.write(&config.output_dir, "estimate.csv")?,
        survivors.write(&config.output_dir, "survivors.csv")?,
    ];
    Ok(CommandOutcome { files, failures })
}

/// Monte-Carlo risks and survivor counts over `n_grid × kappa0_grid`.
#[derive(Debug, Clone)]
pub struct Tables {
    /// Sorted by `n`, then `κ₀` ascending.
    pub reports: Vec<RiskReport>,
    /// `Q_j` per level for each `n`.
    pub counts: BTreeMap<usize, Vec<(i32, usize)>>,
}

impl Tables {
    pub fn report(&self, n: usize, kappa0: f64) -> Option<&RiskReport> {
        self.reports.iter().find(|r| r.n == n && r.kappa0 == kappa0)
    }

    /// Every level appearing in any run, ascending.
    pub fn levels(&self) -> Vec<i32> {
        let mut levels: Vec<i32> = self
            .reports
            .iter()
            .flat_map(|r| r.surviving.iter().map(|(j, _)| *j))
            .collect();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    /// Survivors non-increasing in `κ₀` per `(n, level)`.
    pub fn monotonicity_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for pair in self.reports.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.n != b.n {
                continue;
            }
            for &(j, count) in &b.surviving {
                let before = a
                    .surviving
                    .iter()
                    .find(|(l, _)| *l == j)
                    .map_or(0, |(_, c)| *c);
                if count > before {
                    out.push(format!(
                        "survivor monotonicity in kappa0 (n={}, j={j}): {count} at kappa0={} > {before} at kappa0={}",
                        a.n, b.kappa0, a.kappa0
                    ));
                }
            }
        }
        out
    }

    /// Risk falls from each `n` to the next at two combined standard errors.
    pub fn risk_direction_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ns: Vec<usize> = self.counts.keys().copied().collect();
        for w in ns.windows(2) {
            for a in self.reports.iter().filter(|r| r.n == w[0]) {
                let Some(b) = self.report(w[1], a.kappa0) else {
                    continue;
                };
                let margin = 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                if !(b.mean_risk + margin < a.mean_risk) {
                    out.push(format!(
                        "risk decrease in n (kappa0={}): risk(n={}) = {:.4e} vs risk(n={}) = {:.4e}, 2 SE = {:.2e}",
                        a.kappa0, b.n, b.mean_risk, a.n, a.mean_risk, margin
                    ));
                }
            }
        }
        out
    }
}

fn sorted<T: PartialOrd + Copy>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite grid values"));
    v
}

pub fn tables(config: &ExperimentConfig) -> Result<Tables> {
    let model = config.density_model()?;
    let kappa0s = sorted(&config.kappa0_grid);
    let mut reports = Vec::new();
    let mut counts = BTreeMap::new();
    for n in sorted(&config.n_grid) {
        reports.extend(monte_carlo_risk_grid(
            &model,
            &config.estimator,
            n,
            &kappa0s,
            config.replications,
            mix_seed(config.seed, n as u64),
        )?);
        let tuning = derive_tuning(n, config.estimator.b, kappa0s[0], model.sup())?;
        let params = config.estimator.frame(tuning.eta_n)?;
        let partition = build_partition(&params, tuning.j_n.max(1))?;
        let first = config.estimator.first_level(&params);
        counts.insert(
            n,
            partition
                .levels()
                .iter()
                .filter(|l| l.j >= first && l.j <= tuning.j_n)
                .map(|l| (l.j, l.count))
                .collect(),
        );
    }
    Ok(Tables { reports, counts })
}

/// Writes `table1.csv` (survivors per level) and `table2.csv` (risks).
pub fn cmd_tables(config: &ExperimentConfig) -> Result<CommandOutcome> {
    let t = tables(config)?;
    let mut columns = vec!["j".to_string()];
    columns.extend(
        t.reports
            .iter()
            .map(|r| format!("n{}_kappa0_{}", r.n, r.kappa0)),
    );
    columns.extend(t.counts.keys().map(|n| format!("Q_j_n{n}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table1 = Csv::new(config, &columns);
    for j in t.levels() {
        let mut row = vec![j.to_string()];
        row.extend(
            t.reports
                .iter()
                .map(|r| cell(r.surviving.iter().find(|(l, _)| *l == j).map(|(_, c)| *c))),
        );
        row.extend(
            t.counts
                .values()
                .map(|c| cell(c.iter().find(|(l, _)| *l == j).map(|(_, q)| *q))),
        );
        table1.row(row);
    }
    let mut table2 = Csv::new(
        config,
        &["n", "kappa0", "mean_risk", "stderr", "replications", "seed"],
    );
    for r in &t.reports {
        table2.row([
            r.n.to_string(),
            r.kappa0.to_string(),
            r.mean_risk.to_string(),
            r.stderr.to_string(),
            r.replications.to_string(),
            r.seed.to_string(),
        ]);
    }
    let mut failures = t.monotonicity_failures();
    failures.extend(t.risk_direction_failures());
    let files = vec![
        table1.write(&config.output_dir, "table1.csv")?,
        table2.write(&config.output_dir, "table2.csv")?,
    ];
    Ok(CommandOutcome { files, failures })
}

/// Risk against `n / ln n` and its fitted log-log slope.
#[derive(Debug, Clone)]
pub struct RateStudy {
    pub reports: Vec<RiskReport>,
    pub slope: f64,
    /// `(r, -2r/(2r+1))`.
    pub references: Vec<(f64, f64)>,
}

pub fn rate_study(config: &ExperimentConfig) -> Result<RateStudy> {
    let ns = sorted(&config.rate_n_grid);
    let mut distinct = ns.clone();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InvalidParams(format!(
            "rate study needs at least 4 sample sizes, got {}",
            distinct.len()
        )));
    }
    let model = config.density_model()?;
    let reports = distinct
        .iter()
        .map(|&n| {
            monte_carlo_risk_grid(
                &model,
                &config.estimator,
                n,
                &[config.rate_kappa0],
                config.replications,
                mix_seed(config.seed, n as u64),
            )
            .map(|mut v| v.remove(0))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = rate_slope(&reports)
        .ok_or_else(|| Error::Precondition("risk slope is undefined".into()))?;
    let references = config
        .rate_r_values
        .iter()
        .map(|&r| (r, -2.0 * r / (2.0 * r + 1.0)))
        .collect();
    Ok(RateStudy {
        reports,
        slope,
        references,
    })
}

/// Writes `rate.csv` with `quantity` one of `mean_risk`, `fitted_slope` or
/// `reference_slope`.
pub fn cmd_rate(config: &ExperimentConfig) -> Result<CommandOutcome> {
    let study = rate_study(config)?;
    let mut csv = Csv::new(
        config,
        &[
            "quantity",
            "n",
            "n_over_log_n",
            "r",
            "value",
            "stderr",
            "replications",
        ],
    );
    for rep in &study.reports {
        let n = rep.n as f64;
        csv.row([
            "mean_risk".to_string(),
            rep.n.to_string(),
            (n / n.ln()).to_string(),
            String::new(),
            rep.mean_risk.to_string(),
            rep.stderr.to_string(),
            rep.replications.to_string(),
        ]);
    }
    csv.row(["fitted_slope", "", "", "", &study.slope.to_string(), "", ""]);
    for &(r, reference) in &study.references {
        csv.row([
            "reference_slope".to_string(),
            String::new(),
            String::new(),
            r.to_string(),
            reference.to_string(),
            String::new(),
            String::new(),
        ]);
    }
    let mut failures = Vec::new();
    if !(study.slope < 0.0) {
        failures.push(format!(
            "risk decay in n / ln n: fitted slope {} is not negative",
            study.slope
        ));
    }
    let file = csv.write(&config.output_dir, "rate.csv")?;
    Ok(CommandOutcome {
        files: vec![file],
        failures,
    })
}
