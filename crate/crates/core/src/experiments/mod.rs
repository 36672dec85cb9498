//! Config-driven experiment commands.
//!
//! Every command reads an [`ExperimentConfig`], writes CSV files into its
//! output directory and returns the list of violated checks. Each CSV starts
//! with a comment line echoing the effective configuration.

mod bias;
mod config;
mod frame_check;
mod monte_carlo;

use std::fmt::Display;
use std::path::{Path, PathBuf};

pub use bias::{bias_grid, cmd_bias, BiasGrid};
pub use config::ExperimentConfig;
pub use frame_check::{
    cmd_frame_check, frame_checks, random_band_limited, tightness_level_range, CheckRow,
};
pub use monte_carlo::{
    cmd_estimate, cmd_rate, cmd_tables, estimate, rate_study, tables, EstimateRun, RateStudy,
    Tables,
};

use crate::error::Result;

/// Files written by a command and the checks it failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl CommandOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// In-memory CSV whose first line is the config echo.
pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub(crate) fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        let mut text = config.echo();
        text.push('\n');
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub(crate) fn comment(&mut self, line: impl Display) {
        self.text.push_str(&format!("# {line}\n"));
    }

    pub(crate) fn row<I, T>(&mut self, fields: I)
    where
        I: IntoIterator<Item = T>,
        T: Display,
    {
        let fields: Vec<String> = fields.into_iter().map(|f| f.to_string()).collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub(crate) fn write(self, dir: &Path, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, self.text)?;
        Ok(path)
    }
}

/// Format an optional cell, `NA` when absent.
pub(crate) fn cell<T: Display>(value: Option<T>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| v.to_string())
}
