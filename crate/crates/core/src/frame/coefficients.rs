use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::partition::{AtomIndex, Level, Partition};
use super::FrameParams;
use crate::circle_fourier::{fourier_coefficients, max_band, FourierTable, GridFunction};
use crate::error::{Error, Result};

/// Which atoms produced a coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    /// `⟨F, ψ_{jq;s}⟩` with exact (tail < 1e-20) atoms.
    Exact,
    /// `⟨F, ψ_{jq;sK}⟩`.
    Truncated,
    /// `(1/n) Σ_i conj(ψ_{jq;sK}(X_i))`.
    Empirical,
}

impl CoefficientKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefficientKind::Exact => "exact",
            CoefficientKind::Truncated => "truncated",
            CoefficientKind::Empirical => "empirical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(CoefficientKind::Exact),
            "truncated" => Some(CoefficientKind::Truncated),
            "empirical" => Some(CoefficientKind::Empirical),
            _ => None,
        }
    }
}

/// Needlet coefficients for consecutive levels `j_min..=j_max`, stored per
/// level in position order `q = 1..=Q_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    kind: CoefficientKind,
    cutoff: Option<usize>,
    j_min: i32,
    levels: Vec<Vec<Complex64>>,
}

impl CoefficientTable {
    pub fn new(
        kind: CoefficientKind,
        cutoff: Option<usize>,
        j_min: i32,
        levels: Vec<Vec<Complex64>>,
    ) -> Self {
        Self {
            kind,
            cutoff,
            j_min,
            levels,
        }
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn cutoff(&self) -> Option<usize> {
        self.cutoff
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_min + self.levels.len() as i32 - 1
    }

    pub fn level(&self, j: i32) -> Option<&[Complex64]> {
        if j < self.j_min {
            return None;
        }
        self.levels
            .get((j - self.j_min) as usize)
            .map(|v| v.as_slice())
    }

    pub fn level_mut(&mut self, j: i32) -> Option<&mut Vec<Complex64>> {
        if j < self.j_min {
            return None;
        }
        self.levels.get_mut((j - self.j_min) as usize)
    }

    pub fn get(&self, idx: &AtomIndex) -> Option<Complex64> {
        if idx.q == 0 {
            return None;
        }
        self.level(idx.j).and_then(|l| l.get(idx.q - 1).copied())
    }

    /// `(j, q, β_{jq})` in level-major order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, usize, Complex64)> + '_ {
        self.levels.iter().enumerate().flat_map(move |(i, level)| {
            let j = self.j_min + i as i32;
            level.iter().enumerate().map(move |(q, &b)| (j, q + 1, b))
        })
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level_energy(&self, j: i32) -> f64 {
        self.level(j)
            .map_or(0.0, |l| l.iter().map(|b| b.norm_sqr()).sum())
    }

    /// `Σ_{j,q} |β_{jq}|²`.
    pub fn energy(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.iter().map(|b| b.norm_sqr()).sum::<f64>())
            .sum()
    }
}

#[inline]
fn half_shift(k: i64, count: usize) -> Complex64 {
    // e^{iπk/Q}: the half-cell offset of midpoint centres
    Complex64::from_polar(1.0, PI * k as f64 / count as f64)
}

/// `β_q = √λ Σ_{|k|<=K} w_k a_k e^{ik x_q}` for all `q` of one level.
pub(crate) fn analyze_level(
    params: &FrameParams,
    level: &Level,
    spectrum: &FourierTable,
    cutoff: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let count = level.count;
    let band = cutoff.min(spectrum.k_max()) as i64;
    let mut bins = vec![Complex64::new(0.0, 0.0); count];
    for k in -band..=band {
        let w = params.weight(level.j, k);
        if w == 0.0 {
            continue;
        }
        let a = spectrum.get(k);
        bins[k.rem_euclid(count as i64) as usize] += a * w * half_shift(k, count);
    }
    planner.plan_fft_inverse(count).process(&mut bins);
    let root = level.lambda().sqrt();
    bins.iter_mut().for_each(|b| *b *= root);
    bins
}

/// Coefficients from Fourier coefficients of `F` for levels `J0..=j_max`.
///
/// `cutoff = None` uses exact atoms; `Some(K)` uses `K`-truncated atoms.
pub fn analyze_spectrum(
    params: &FrameParams,
    partition: &Partition,
    spectrum: &FourierTable,
    j_max: i32,
    cutoff: Option<usize>,
) -> Result<CoefficientTable> {
    let kind = if cutoff.is_some() {
        CoefficientKind::Truncated
    } else {
        CoefficientKind::Exact
    };
    analyze_spectrum_as(params, partition, spectrum, j_max, cutoff, kind)
}

pub(crate) fn analyze_spectrum_as(
    params: &FrameParams,
    partition: &Partition,
    spectrum: &FourierTable,
    j_max: i32,
    cutoff: Option<usize>,
    kind: CoefficientKind,
) -> Result<CoefficientTable> {
    if j_max > partition.j_max() {
        return Err(Error::MissingCoefficients(j_max));
    }
    let levels: Vec<&Level> = partition.levels().iter().filter(|l| l.j <= j_max).collect();
    let coeffs = levels
        .par_iter()
        .map_init(FftPlanner::new, |planner, level| {
            analyze_level(
                params,
                level,
                spectrum,
                params.cutoff_for(level.j, cutoff),
                planner,
            )
        })
        .collect();
    Ok(CoefficientTable::new(
        kind,
        cutoff,
        partition.j_min(),
        coeffs,
    ))
}

/// Analysis `β_{jq;s} = ⟨F, ψ_{jq;s}⟩` of a sampled function, via its Fourier
/// coefficients.
pub fn analyze(
    params: &FrameParams,
    partition: &Partition,
    f: &GridFunction,
    j_max: i32,
    cutoff: Option<usize>,
) -> Result<CoefficientTable> {
    let spectrum = fourier_coefficients(f, max_band(f.len()))?;
    analyze_spectrum(params, partition, &spectrum, j_max, cutoff)
}

/// Fourier coefficients of `Σ_q β_q ψ_q` for one level, `|k| <= cutoff`.
pub(crate) fn synthesize_level(
    params: &FrameParams,
    level: &Level,
    betas: &[Complex64],
    cutoff: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let count = level.count;
    let mut buf = betas.to_vec();
    planner.plan_fft_forward(count).process(&mut buf);
    let root = level.lambda().sqrt();
    let c = cutoff as i64;
    (-c..=c)
        .map(|k| {
            let w = params.weight(level.j, k);
            if w == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            buf[k.rem_euclid(count as i64) as usize] * half_shift(-k, count) * (root * w)
        })
        .collect()
}

/// Fourier coefficients of the summation operator `Σ_{j<=j_max} Σ_q β_{jq} ψ_{jq}`.
///
/// Atoms are `cutoff`-truncated when given, exact otherwise. Levels are
/// accumulated in increasing `j`.
pub fn synthesize_spectrum(
    params: &FrameParams,
    partition: &Partition,
    coefficients: &CoefficientTable,
    j_max: i32,
    cutoff: Option<usize>,
) -> Result<FourierTable> {
    let mut levels = Vec::new();
    for level in partition.levels().iter().filter(|l| l.j <= j_max) {
        let betas = coefficients
            .level(level.j)
            .ok_or(Error::MissingCoefficients(level.j))?;
        if betas.len() != level.count {
            return Err(Error::MissingCoefficients(level.j));
        }
        levels.push((level, betas));
    }
    if j_max > partition.j_max() {
        return Err(Error::MissingCoefficients(j_max));
    }
    let parts: Vec<Vec<Complex64>> = levels
        .par_iter()
        .map_init(FftPlanner::new, |planner, (level, betas)| {
            synthesize_level(
                params,
                level,
                betas,
                params.cutoff_for(level.j, cutoff),
                planner,
            )
        })
        .collect();
    let band = parts.iter().map(|p| (p.len() - 1) / 2).max().unwrap_or(0);
    let mut out = FourierTable::zeros(band);
    for part in &parts {
        let c = ((part.len() - 1) / 2) as i64;
        for (i, v) in part.iter().enumerate() {
            *out.get_mut(i as i64 - c) += v;
        }
    }
    Ok(out)
}

/// Summation operator `S[F]_{s,K,J}` sampled on an `M`-point grid.
pub fn summation(
    params: &FrameParams,
    partition: &Partition,
    coefficients: &CoefficientTable,
    grid_size: usize,
    j_max: i32,
    cutoff: Option<usize>,
) -> Result<GridFunction> {
    synthesize_spectrum(params, partition, coefficients, j_max, cutoff)?.to_grid(grid_size)
}

/// Frame energy `Σ_{j,q} |β_{jq}|²`.
pub fn frame_energy(table: &CoefficientTable) -> f64 {
    table.energy()
}

/// Extremes of `Σ|β|² / ‖F - a_0‖²` over test functions, using exact atoms on
/// levels `J0..=j_max`.
///
/// Fails if a test function is constant (its non-constant part is invisible to
/// the frame) or if more than `1e-10` of the nominal energy falls outside the
/// level range.
pub fn tightness_ratio(
    params: &FrameParams,
    partition: &Partition,
    test_functions: &[GridFunction],
    j_max: i32,
) -> Result<(f64, f64)> {
    let lambda = params.lambda_bs();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in test_functions {
        let spectrum = fourier_coefficients(f, max_band(f.len()))?;
        let power = spectrum.power_spectrum();
        let varying = power.total() - power.get(0);
        if !(varying > 1e-24) {
            return Err(Error::Precondition(
                "test function has no non-constant component".into(),
            ));
        }
        let mut lost = 0.0;
        for (k, _) in spectrum.iter() {
            let g = power.get(k);
            if k != 0 && g > 1e-18 * varying {
                lost += g * params.out_of_range_energy(j_max, k);
            }
        }
        if lost > 1e-10 * lambda * varying {
            return Err(Error::Precondition(format!(
                "level range J0..={j_max} misses {:.3e} of the frame energy",
                lost / (lambda * varying)
            )));
        }
        let table = analyze_spectrum(params, partition, &spectrum, j_max, None)?;
        let ratio = table.energy() / varying;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    if test_functions.is_empty() {
        return Err(Error::Precondition("no test functions".into()));
    }
    Ok((lo, hi))
}

/// Per-level weighted norm `(η Σ_q |β_{jq}|²)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelNorm {
    pub j: i32,
    pub norm: f64,
}

pub fn besov_level_norms(
    coefficients: &CoefficientTable,
    params: &FrameParams,
) -> Result<Vec<LevelNorm>> {
    if coefficients.kind() != CoefficientKind::Exact {
        return Err(Error::Precondition(
            "Besov level norms need exact coefficients".into(),
        ));
    }
    Ok((coefficients.j_min()..=coefficients.j_max())
        .map(|j| LevelNorm {
            j,
            norm: (params.eta() * coefficients.level_energy(j)).sqrt(),
        })
        .collect())
}

/// Least-squares slope of `ln(norm)` against `j` over levels `>= from_level`
/// with a strictly positive norm. The smoothness estimate is `-slope / ln B`.
pub fn fit_decay_slope(norms: &[LevelNorm], from_level: i32) -> Option<f64> {
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .filter(|n| n.j >= from_level && n.norm > 0.0)
        .map(|n| (n.j as f64, n.norm.ln()))
        .collect();
    crate::estimator::least_squares_slope(&pts)
}
