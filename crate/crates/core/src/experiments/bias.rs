use super::{CommandOutcome, Csv, ExperimentConfig};
use crate::error::Result;
use crate::frame::{
    bias_monotonicity_violations, bias_study, BiasConstants, BiasOptions, BiasReport,
};

/// Bias reports split into the calibration and validation grids, with the
/// constants fitted on the former.
#[derive(Debug, Clone)]
pub struct BiasGrid {
    pub calibration: Vec<BiasReport>,
    pub validation: Vec<BiasReport>,
    pub constants: BiasConstants,
}

impl BiasGrid {
    /// Violated bound inequalities and monotonicity failures on the
    /// validation grid, plus truncation-bound failures anywhere.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .validation
            .iter()
            .flat_map(|r| r.violations(&self.constants))
            .collect();
        for r in &self.calibration {
            out.extend(
                r.violations(&self.constants)
                    .into_iter()
                    .filter(|v| !v.starts_with('I') && !v.starts_with("three")),
            );
        }
        out.extend(bias_monotonicity_violations(&self.validation));
        out.sort();
        out.dedup();
        out
    }
}

pub fn bias_grid(config: &ExperimentConfig) -> Result<BiasGrid> {
    let model = config.density_model()?;
    let f = model.grid(config.bias_grid_size);
    let mut js: Vec<i32> = config
        .bias_j_grid
        .iter()
        .chain(&config.bias_calibration_j_grid)
        .copied()
        .collect();
    js.sort_unstable();
    js.dedup();
    let mut ks = config.bias_k_grid.clone();
    ks.sort_unstable();
    ks.dedup();
    let options = BiasOptions {
        j_ref: config.bias_j_ref,
        smoothness: config.bias_smoothness,
        ..BiasOptions::default()
    };
    let reports = bias_study(&config.frame, &f, &js, &ks, &options)?;
    let calibration: Vec<BiasReport> = reports
        .iter()
        .filter(|r| config.bias_calibration_j_grid.contains(&r.j))
        .cloned()
        .collect();
    let validation: Vec<BiasReport> = reports
        .into_iter()
        .filter(|r| config.bias_j_grid.contains(&r.j))
        .collect();
    let constants = BiasConstants::calibrate(&calibration);
    Ok(BiasGrid {
        calibration,
        validation,
        constants,
    })
}

/// Writes `bias.csv` (one row per `(J, K)`) and `bias_truncation.csv` (one
/// row per `(j, K)` truncation comparison).
pub fn cmd_bias(config: &ExperimentConfig) -> Result<CommandOutcome> {
    let grid = bias_grid(config)?;
    let mut csv = Csv::new(
        config,
        &[
            "role",
            "J",
            "K",
            "J_ref",
            "R",
            "I1",
            "I2",
            "I3",
            "ln_bound1",
            "ln_bound2",
            "ln_bound3",
            "ln_total_bound",
            "smoothness",
            "floor",
            "pass",
        ],
    );
    let ln_c = grid.constants.ln_c;
    csv.comment(format!(
        "ln_C1={} ln_C2={} ln_C3={}",
        ln_c[0], ln_c[1], ln_c[2]
    ));
    let mut truncation = Csv::new(
        config,
        &[
            "J",
            "j",
            "K",
            "coeff_gap",
            "coeff_bound",
            "atom_gap",
            "atom_bound",
            "weight_tail",
            "weight_tail_bound",
            "pass",
        ],
    );
    for (role, reports) in [
        ("calibration", &grid.calibration),
        ("validation", &grid.validation),
    ] {
        for r in reports.iter() {
            let shapes = r.shapes.as_array();
            let pass = r.violations(&grid.constants).is_empty();
            csv.row([
                role.to_string(),
                r.j.to_string(),
                r.k.to_string(),
                r.j_ref.to_string(),
                r.bias.to_string(),
                r.i1.to_string(),
                r.i2.to_string(),
                r.i3.to_string(),
                (ln_c[0] + shapes[0]).to_string(),
                (ln_c[1] + shapes[1]).to_string(),
                (ln_c[2] + shapes[2]).to_string(),
                r.ln_total_bound(&grid.constants).to_string(),
                r.smoothness.to_string(),
                r.floor.to_string(),
                pass.to_string(),
            ]);
            if role == "validation" {
                for row in &r.lemma6 {
                    truncation.row([
                        r.j.to_string(),
                        row.j.to_string(),
                        row.k.to_string(),
                        row.coeff_gap.to_string(),
                        row.coeff_bound.to_string(),
                        row.atom_gap.to_string(),
                        row.atom_bound.to_string(),
                        row.weight_tail.to_string(),
                        row.weight_tail_bound.to_string(),
                        row.holds().to_string(),
                    ]);
                }
            }
        }
    }
    let files = vec![
        csv.write(&config.output_dir, "bias.csv")?,
        truncation.write(&config.output_dir, "bias_truncation.csv")?,
    ];
    Ok(CommandOutcome {
        files,
        failures: grid.failures(),
    })
}
