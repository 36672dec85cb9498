use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, SupSource};
use crate::frame::FrameParams;
use crate::sampling::{DensityKind, DensityModel};

/// Keys accepted in a config file, with their defaults. `seed` has none.
const DEFAULTS: &[(&str, &str)] = &[
    ("output_dir", "out"),
    ("frame.s", "3"),
    ("frame.B", "1.4"),
    ("frame.eta", "0.001"),
    ("frame.J0", "auto"),
    ("density.kind", "gaussian_bump"),
    ("density.center", "3.141592653589793"),
    ("density.width", "1"),
    ("density.literal_sign", "false"),
    ("density.concentration", "1"),
    ("experiment.n_grid", "8000, 12000"),
    ("experiment.kappa0_grid", "0.10, 0.15, 0.20"),
    ("experiment.replications", "100"),
    ("estimator.first_level", "auto"),
    ("estimator.clip", "true"),
    ("estimator.grid_size", "auto"),
    ("estimator.sup", "truth"),
    ("estimate.n", "12000"),
    ("estimate.kappa0", "0.10"),
    ("rate.n_grid", "1000, 2000, 4000, 8000, 16000"),
    ("rate.kappa0", "0.10"),
    ("rate.r_values", "1, 2"),
    ("bias.J_grid", "6, 8, 10"),
    ("bias.K_grid", "10, 20, 30"),
    ("bias.calibration_J_grid", "5, 7, 9"),
    ("bias.J_ref", "auto"),
    ("bias.smoothness", "auto"),
    ("bias.grid_size", "4096"),
    ("frame_check.test_functions", "20"),
    ("frame_check.band", "8"),
    ("frame_check.tightness_tol", "auto"),
    ("frame_check.localization_J_max", "12"),
    ("frame_check.localization_grid", "8192"),
    ("frame_check.norm_levels", "3, 12"),
    ("frame_check.norm_tol", "0.10"),
];

/// A parsed experiment configuration.
///
/// Files are `key = value` lines. `[section]` prefixes the keys that follow
/// with `section.`; dotted keys may also be written in full. `#` and `;` start
/// comments. Lists are comma separated and `auto` selects a derived value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub frame: FrameParams,
    pub density: DensityKind,
    pub estimator: EstimatorConfig,
    pub n_grid: Vec<usize>,
    pub kappa0_grid: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub estimate_n: usize,
    pub estimate_kappa0: f64,
    pub rate_n_grid: Vec<usize>,
    pub rate_kappa0: f64,
    pub rate_r_values: Vec<f64>,
    pub bias_j_grid: Vec<i32>,
    pub bias_k_grid: Vec<usize>,
    pub bias_calibration_j_grid: Vec<i32>,
    pub bias_j_ref: Option<i32>,
    pub bias_smoothness: Option<f64>,
    pub bias_grid_size: usize,
    pub check_functions: usize,
    pub check_band: usize,
    pub tightness_tol: f64,
    pub localization_j_max: i32,
    pub localization_grid: usize,
    pub norm_levels: (i32, i32),
    pub norm_tol: f64,
    entries: BTreeMap<String, String>,
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: {what}"))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, value, "cannot parse"))
}

fn auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.trim() == "auto" {
        Ok(None)
    } else {
        scalar(key, value).map(Some)
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| scalar(key, v))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(bad(key, value, "list must not be empty"));
    }
    Ok(items)
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected a boolean")),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    /// Raw `key = value` pairs, before defaults.
    pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {}: unterminated section", no + 1))
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let key = key.trim();
            let key = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key}",
                    no + 1
                )));
            }
        }
        Ok(entries)
    }

    /// Build from explicit entries; missing keys take their defaults.
    pub fn from_entries(given: BTreeMap<String, String>) -> Result<Self> {
        for key in given.keys() {
            if key != "seed" && !DEFAULTS.iter().any(|(k, _)| k == key) {
                return Err(Error::Config(format!("unknown key {key}")));
            }
        }
        let seed_text = given
            .get("seed")
            .ok_or_else(|| Error::Config("seed is required".into()))?;
        let seed: u64 = scalar("seed", seed_text)?;
        let mut entries: BTreeMap<String, String> = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        entries.extend(given);
        let get = |key: &str| {
            entries
                .get(key)
                .map(String::as_str)
                .expect("default present")
        };

        let s: u32 = scalar("frame.s", get("frame.s"))?;
        let b: f64 = scalar("frame.B", get("frame.B"))?;
        let eta: f64 = scalar("frame.eta", get("frame.eta"))?;
        if s < 1 {
            return Err(bad("frame.s", get("frame.s"), "s must be >= 1"));
        }
        if !(b > 1.0) || !b.is_finite() {
            return Err(bad("frame.B", get("frame.B"), "B must be > 1"));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(bad("frame.eta", get("frame.eta"), "eta must lie in (0, 1)"));
        }
        let j0: Option<i32> = auto("frame.J0", get("frame.J0"))?;
        let frame = match j0 {
            Some(j0) => FrameParams::new(s, b, eta, j0)?,
            None => FrameParams::with_default_j0(s, b, eta)?,
        };

        let density = match get("density.kind") {
            "uniform" => DensityKind::Uniform,
            "raised_cosine" => DensityKind::RaisedCosine,
            "gaussian_bump" => DensityKind::GaussianBump {
                center: scalar("density.center", get("density.center"))?,
                width: scalar("density.width", get("density.width"))?,
                literal_sign: boolean("density.literal_sign", get("density.literal_sign"))?,
            },
            "von_mises" => DensityKind::VonMises {
                center: scalar("density.center", get("density.center"))?,
                concentration: scalar("density.concentration", get("density.concentration"))?,
            },
            other => return Err(bad("density.kind", other, "unknown density")),
        };

        let sup_source = match get("estimator.sup") {
            "truth" => SupSource::Truth,
            "pilot" => SupSource::Pilot,
            other => return Err(bad("estimator.sup", other, "expected truth or pilot")),
        };
        let estimator = EstimatorConfig {
            s,
            b,
            j0: Some(frame.j0()),
            first_level: auto("estimator.first_level", get("estimator.first_level"))?,
            clip: boolean("estimator.clip", get("estimator.clip"))?,
            grid_size: auto("estimator.grid_size", get("estimator.grid_size"))?,
            sup_source,
        };

        let kappa0_grid: Vec<f64> = list("experiment.kappa0_grid", get("experiment.kappa0_grid"))?;
        if kappa0_grid.iter().any(|k| !(*k >= 0.0)) {
            return Err(bad(
                "experiment.kappa0_grid",
                get("experiment.kappa0_grid"),
                "kappa0 must be >= 0",
            ));
        }
        let tightness_tol = match auto(
            "frame_check.tightness_tol",
            get("frame_check.tightness_tol"),
        )? {
            Some(t) => t,
            None if b <= 1.1 => 0.05,
            None => 0.2,
        };
        let norm_levels: Vec<i32> =
            list("frame_check.norm_levels", get("frame_check.norm_levels"))?;
        if norm_levels.len() != 2 || norm_levels[0] > norm_levels[1] {
            return Err(bad(
                "frame_check.norm_levels",
                get("frame_check.norm_levels"),
                "expected `lo, hi`",
            ));
        }

        let config = Self {
            frame,
            density,
            estimator,
            n_grid: list("experiment.n_grid", get("experiment.n_grid"))?,
            kappa0_grid,
            replications: scalar("experiment.replications", get("experiment.replications"))?,
            seed,
            output_dir: PathBuf::from(get("output_dir")),
            estimate_n: scalar("estimate.n", get("estimate.n"))?,
            estimate_kappa0: scalar("estimate.kappa0", get("estimate.kappa0"))?,
            rate_n_grid: list("rate.n_grid", get("rate.n_grid"))?,
            rate_kappa0: scalar("rate.kappa0", get("rate.kappa0"))?,
            rate_r_values: list("rate.r_values", get("rate.r_values"))?,
            bias_j_grid: list("bias.J_grid", get("bias.J_grid"))?,
            bias_k_grid: list("bias.K_grid", get("bias.K_grid"))?,
            bias_calibration_j_grid: list(
                "bias.calibration_J_grid",
                get("bias.calibration_J_grid"),
            )?,
            bias_j_ref: auto("bias.J_ref", get("bias.J_ref"))?,
            bias_smoothness: auto("bias.smoothness", get("bias.smoothness"))?,
            bias_grid_size: scalar("bias.grid_size", get("bias.grid_size"))?,
            check_functions: scalar(
                "frame_check.test_functions",
                get("frame_check.test_functions"),
            )?,
            check_band: scalar("frame_check.band", get("frame_check.band"))?,
            tightness_tol,
            localization_j_max: scalar(
                "frame_check.localization_J_max",
                get("frame_check.localization_J_max"),
            )?,
            localization_grid: scalar(
                "frame_check.localization_grid",
                get("frame_check.localization_grid"),
            )?,
            norm_levels: (norm_levels[0], norm_levels[1]),
            norm_tol: scalar("frame_check.norm_tol", get("frame_check.norm_tol"))?,
            entries,
        };
        config.density_model()?;
        Ok(config)
    }

    pub fn density_model(&self) -> Result<DensityModel> {
        DensityModel::new(self.density)
    }

    /// Replace the master seed, keeping the echo in sync.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.entries.insert("seed".into(), seed.to_string());
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self.entries
            .insert("output_dir".into(), self.output_dir.display().to_string());
        self
    }

    /// One comment line listing every effective key in sorted order.
    pub fn echo(&self) -> String {
        let body: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| k.as_str() != "output_dir")
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!(
            "# config: {}; J0_effective={}",
            body.join("; "),
            self.frame.j0()
        )
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Self::from_entries(Self::parse_entries(text)?)
    }
}
