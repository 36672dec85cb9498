//! Hard-thresholding needlet density estimator.
//!
//! With `n` i.i.d. angles the estimator keeps the empirical coefficients
//! `β̂_{jq} = (1/n) Σ_i conj(ψ_{jq;sK_n}(X_i))` whose modulus reaches `κ τ_n`,
//! synthesises them with the same truncated atoms over levels up to `J_n`, divides
//! by `Λ_{B,s}` and adds back the known mean 1.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circle_fourier::{
    fourier_coefficients, l2_distance, max_band, next_grid_size, FourierTable, GridFunction,
    DEFAULT_GRID,
};
use crate::error::{Error, Result};
use crate::frame::{
    analyze_spectrum_as, build_partition, synthesize_spectrum, CoefficientKind, CoefficientTable,
    FrameParams, Partition,
};
use crate::rng::replication_seed;
use crate::sampling::{DensityModel, SampleSet};

/// `0.107` in `κ = κ₀ √0.107 sup F`.
pub const KAPPA_SCALE: f64 = 0.107;

/// Bins of the pilot histogram used when `sup F` is unknown.
pub const PILOT_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningParams {
    pub n: usize,
    pub j_n: i32,
    pub k_n: usize,
    pub tau_n: f64,
    pub eta_n: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub sup_f: f64,
}

impl TuningParams {
    /// Threshold `κ τ_n`.
    pub fn threshold(&self) -> f64 {
        if self.kappa0 == 0.0 {
            0.0
        } else {
            self.kappa * self.tau_n
        }
    }

    /// Same sample size and frame, different `κ₀`.
    pub fn with_kappa0(&self, kappa0: f64) -> Self {
        Self {
            kappa0,
            kappa: kappa0 * KAPPA_SCALE.sqrt() * self.sup_f,
            ..*self
        }
    }
}

/// `τ_n = √(ln n / n)`, `K_n = round(√(n / ln n))`, `J_n = round(log_B √(n / ln n))`,
/// `η_n = n^{-3/4}`, `κ = κ₀ √0.107 sup F`.
pub fn derive_tuning(n: usize, b: f64, kappa0: f64, sup_f: f64) -> Result<TuningParams> {
    if n < 100 {
        return Err(Error::InvalidParams(format!("n must be >= 100, got {n}")));
    }
    if !(b > 1.0) {
        return Err(Error::InvalidParams(format!("B must exceed 1, got {b}")));
    }
    if !(kappa0 >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "kappa0 must be >= 0, got {kappa0}"
        )));
    }
    if !(sup_f > 0.0 && sup_f.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "sup F must be positive, got {sup_f}"
        )));
    }
    let nf = n as f64;
    let ratio = nf / nf.ln();
    Ok(TuningParams {
        n,
        j_n: (ratio.sqrt().ln() / b.ln()).round() as i32,
        k_n: ratio.sqrt().round() as usize,
        tau_n: (nf.ln() / nf).sqrt(),
        eta_n: nf.powf(-0.75),
        kappa: kappa0 * KAPPA_SCALE.sqrt() * sup_f,
        kappa0,
        sup_f,
    })
}

/// Level `J_{1,n}` with `B^{J_{1,n}} = (n / ln n)^{1/(2r+1)}`; a diagnostic only.
pub fn optimal_level(n: usize, b: f64, r: f64) -> f64 {
    let nf = n as f64;
    (nf / nf.ln()).ln() / ((2.0 * r + 1.0) * b.ln())
}

/// Largest bin density of a 64-bin histogram under `dθ / 2π`.
pub fn pilot_sup(samples: &SampleSet) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = [0usize; PILOT_BINS];
    for &a in &samples.angles {
        let bin = ((a / std::f64::consts::TAU) * PILOT_BINS as f64) as usize;
        counts[bin.min(PILOT_BINS - 1)] += 1;
    }
    let max = *counts.iter().max().expect("non-empty");
    Ok(max as f64 * PILOT_BINS as f64 / samples.len() as f64)
}

/// Where `sup F` in `κ` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupSource {
    Truth,
    Pilot,
}

/// Frame shape and estimator switches shared by every run of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub s: u32,
    pub b: f64,
    /// Coarse cut; `None` picks [`FrameParams::default_j0`].
    pub j0: Option<i32>,
    /// First synthesised level; `None` starts at `J0`.
    pub first_level: Option<i32>,
    /// Clip negative values and renormalise.
    pub clip: bool,
    pub grid_size: Option<usize>,
    pub sup_source: SupSource,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            s: 3,
            b: 1.4,
            j0: None,
            first_level: None,
            clip: true,
            grid_size: None,
            sup_source: SupSource::Truth,
        }
    }
}

impl EstimatorConfig {
    pub fn frame(&self, eta: f64) -> Result<FrameParams> {
        match self.j0 {
            Some(j0) => FrameParams::new(self.s, self.b, eta, j0),
            None => FrameParams::with_default_j0(self.s, self.b, eta),
        }
    }

    pub fn first_level(&self, params: &FrameParams) -> i32 {
        self.first_level.map_or(params.j0(), |l| l.max(params.j0()))
    }

    /// `DEFAULT_GRID`, raised to a power of two `>= 4 K_n`.
    pub fn grid_size_for(&self, k_n: usize) -> usize {
        self.grid_size
            .unwrap_or_else(|| next_grid_size((4 * k_n).max(DEFAULT_GRID)))
    }
}

/// `(1/n) Σ_i e^{-ik X_i}` for `|k| <= k_max`.
pub fn empirical_fourier(samples: &SampleSet, k_max: usize) -> Result<FourierTable> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = samples.len() as f64;
    let mut pos = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for &x in &samples.angles {
        for (k, p) in pos.iter_mut().enumerate() {
            *p += Complex64::from_polar(1.0, -(k as f64) * x);
        }
    }
    Ok(FourierTable::from_fn(k_max, |k| {
        let v = pos[k.unsigned_abs() as usize] / n;
        if k < 0 {
            v.conj()
        } else {
            v
        }
    }))
}

/// Empirical coefficients on every level of `partition` up to `J_n`, with
/// atoms truncated at `K_n`.
pub fn empirical_coefficients(
    params: &FrameParams,
    partition: &Partition,
    samples: &SampleSet,
    tuning: &TuningParams,
) -> Result<CoefficientTable> {
    let spectrum = empirical_fourier(samples, tuning.k_n)?;
    analyze_spectrum_as(
        params,
        partition,
        &spectrum,
        tuning.j_n,
        Some(tuning.k_n),
        CoefficientKind::Empirical,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub density: GridFunction,
    /// `(j, survivors)` for levels `first_level..=J_n`.
    pub surviving: Vec<(i32, usize)>,
    pub coefficients: CoefficientTable,
    pub tuning: TuningParams,
    /// Largest imaginary part of the synthesis before taking real parts.
    pub imag_residual: f64,
}

impl EstimateResult {
    pub fn survivors_at(&self, j: i32) -> Option<usize> {
        self.surviving
            .iter()
            .find(|(l, _)| *l == j)
            .map(|(_, c)| *c)
    }

    pub fn total_survivors(&self) -> usize {
        self.surviving.iter().map(|(_, c)| c).sum()
    }
}

/// Keep `β̂` with `|β̂| >= κ τ_n`, synthesise, rescale by `1/Λ_{B,s}` and add 1.
pub fn threshold_and_synthesize(
    params: &FrameParams,
    partition: &Partition,
    empirical: &CoefficientTable,
    tuning: &TuningParams,
    grid_size: usize,
    first_level: i32,
    clip: bool,
) -> Result<EstimateResult> {
    if empirical.cutoff() != Some(tuning.k_n) {
        return Err(Error::Precondition(format!(
            "coefficients truncated at {:?}, tuning expects K_n = {}",
            empirical.cutoff(),
            tuning.k_n
        )));
    }
    let threshold = tuning.threshold();
    let mut kept = empirical.clone();
    let mut surviving = Vec::new();
    for j in partition.j_min()..=tuning.j_n {
        let level = kept.level_mut(j).ok_or(Error::MissingCoefficients(j))?;
        let mut count = 0;
        for b in level.iter_mut() {
            if j < first_level || b.norm() < threshold {
                *b = Complex64::new(0.0, 0.0);
            } else {
                count += 1;
            }
        }
        if j >= first_level {
            surviving.push((j, count));
        }
    }
    let spectrum = synthesize_spectrum(params, partition, &kept, tuning.j_n, Some(tuning.k_n))?;
    let grid = spectrum.to_grid(grid_size)?;
    let imag_residual = grid.max_imag_abs();
    let lambda = params.lambda_bs();
    let mut values: Vec<f64> = grid.values().iter().map(|v| 1.0 + v.re / lambda).collect();
    if clip {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean > 0.0 {
            values.iter_mut().for_each(|v| *v /= mean);
        }
    }
    Ok(EstimateResult {
        density: GridFunction::from_real(values),
        surviving,
        coefficients: empirical.clone(),
        tuning: *tuning,
        imag_residual,
    })
}

/// `‖F̂ - F‖²` under `dθ / 2π`.
pub fn l2_risk(estimate: &EstimateResult, truth: &GridFunction) -> Result<f64> {
    Ok(l2_distance(&estimate.density, truth)?.powi(2))
}

/// Frame, partition and truth grid for one sample size.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: EstimatorConfig,
    pub params: FrameParams,
    pub partition: Partition,
    pub tuning: TuningParams,
    pub grid_size: usize,
    pub truth: GridFunction,
}

impl Pipeline {
    pub fn new(
        model: &DensityModel,
        config: &EstimatorConfig,
        n: usize,
        kappa0: f64,
    ) -> Result<Self> {
        let tuning = derive_tuning(n, config.b, kappa0, model.sup())?;
        let params = config.frame(tuning.eta_n)?;
        let partition = build_partition(&params, tuning.j_n.max(1))?;
        let grid_size = config.grid_size_for(tuning.k_n);
        Ok(Self {
            config: *config,
            params,
            partition,
            tuning,
            grid_size,
            truth: model.grid(grid_size),
        })
    }

    pub fn first_level(&self) -> i32 {
        self.config.first_level(&self.params)
    }

    /// Tuning for this sample, with `sup F` from the pilot histogram when
    /// configured so.
    pub fn tuning_for(&self, samples: &SampleSet, kappa0: f64) -> Result<TuningParams> {
        let base = self.tuning.with_kappa0(kappa0);
        Ok(match self.config.sup_source {
            SupSource::Truth => base,
            SupSource::Pilot => TuningParams {
                sup_f: pilot_sup(samples)?,
                ..base
            }
            .with_kappa0(kappa0),
        })
    }

    pub fn coefficients(&self, samples: &SampleSet) -> Result<CoefficientTable> {
        empirical_coefficients(&self.params, &self.partition, samples, &self.tuning)
    }

    pub fn estimate_from(
        &self,
        samples: &SampleSet,
        empirical: &CoefficientTable,
        kappa0: f64,
    ) -> Result<EstimateResult> {
        let tuning = self.tuning_for(samples, kappa0)?;
        threshold_and_synthesize(
            &self.params,
            &self.partition,
            empirical,
            &tuning,
            self.grid_size,
            self.first_level(),
            self.config.clip,
        )
    }

    pub fn estimate(&self, samples: &SampleSet, kappa0: f64) -> Result<EstimateResult> {
        let empirical = self.coefficients(samples)?;
        self.estimate_from(samples, &empirical, kappa0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub n: usize,
    pub kappa0: f64,
    pub mean_risk: f64,
    pub stderr: f64,
    pub replications: usize,
    pub seed: u64,
    pub risks: Vec<f64>,
    /// Survivors per level in replication 0.
    pub surviving: Vec<(i32, usize)>,
}

impl RiskReport {
    fn from_risks(
        n: usize,
        kappa0: f64,
        seed: u64,
        risks: Vec<f64>,
        surviving: Vec<(i32, usize)>,
    ) -> Self {
        let r = risks.len() as f64;
        let mean = risks.iter().sum::<f64>() / r;
        let var = risks.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0).max(1.0);
        Self {
            n,
            kappa0,
            mean_risk: mean,
            stderr: (var / r).sqrt(),
            replications: risks.len(),
            seed,
            risks,
            surviving,
        }
    }
}

/// Monte-Carlo risk for several `κ₀` on shared samples: replication `r` draws
/// from seed `seed ^ r`.
pub fn monte_carlo_risk_grid(
    model: &DensityModel,
    config: &EstimatorConfig,
    n: usize,
    kappa0s: &[f64],
    replications: usize,
    seed: u64,
) -> Result<Vec<RiskReport>> {
    if replications < 10 {
        return Err(Error::InvalidParams(format!(
            "replications must be >= 10, got {replications}"
        )));
    }
    if kappa0s.is_empty() {
        return Err(Error::InvalidParams("kappa0 grid is empty".into()));
    }
    let pipeline = Pipeline::new(model, config, n, kappa0s[0])?;
    let runs: Vec<Vec<(f64, Vec<(i32, usize)>)>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let samples = model.sample(n, replication_seed(seed, r))?;
            let empirical = pipeline.coefficients(&samples)?;
            kappa0s
                .iter()
                .map(|&k0| {
                    let est = pipeline.estimate_from(&samples, &empirical, k0)?;
                    Ok((l2_risk(&est, &pipeline.truth)?, est.surviving))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(kappa0s
        .iter()
        .enumerate()
        .map(|(i, &k0)| {
            let risks = runs.iter().map(|run| run[i].0).collect();
            RiskReport::from_risks(n, k0, seed, risks, runs[0][i].1.clone())
        })
        .collect())
}

pub fn monte_carlo_risk(
    model: &DensityModel,
    config: &EstimatorConfig,
    n: usize,
    kappa0: f64,
    replications: usize,
    seed: u64,
) -> Result<RiskReport> {
    Ok(monte_carlo_risk_grid(model, config, n, &[kappa0], replications, seed)?.remove(0))
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Slope of `ln(mean risk)` against `ln(n / ln n)`.
pub fn rate_slope(reports: &[RiskReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.mean_risk > 0.0)
        .map(|r| {
            let n = r.n as f64;
            ((n / n.ln()).ln(), r.mean_risk.ln())
        })
        .collect();
    least_squares_slope(&pts)
}

/// Fixed frame for comparing coefficient fluctuations across sample sizes.
#[derive(Debug, Clone)]
pub struct ConcentrationSetup {
    pub params: FrameParams,
    pub partition: Partition,
    pub levels: (i32, i32),
    pub cutoff: usize,
    /// `β_{jq;sK}`, the mean of `β̂`, level-major over `levels`.
    pub truth: Vec<Complex64>,
}

impl ConcentrationSetup {
    pub fn new(
        model: &DensityModel,
        params: FrameParams,
        levels: (i32, i32),
        cutoff: usize,
    ) -> Result<Self> {
        if levels.0 > levels.1 || levels.0 < params.j0() {
            return Err(Error::InvalidParams(format!("bad level range {levels:?}")));
        }
        let partition = build_partition(&params, levels.1.max(1))?;
        let grid = model.grid(next_grid_size((8 * cutoff).max(1 << 14)));
        let spectrum = fourier_coefficients(&grid, max_band(grid.len()))?;
        let table = analyze_spectrum_as(
            &params,
            &partition,
            &spectrum,
            levels.1,
            Some(cutoff),
            CoefficientKind::Truncated,
        )?;
        let truth = flatten(&table, levels);
        Ok(Self {
            params,
            partition,
            levels,
            cutoff,
            truth,
        })
    }

    fn empirical(&self, samples: &SampleSet) -> Result<Vec<Complex64>> {
        let spectrum = empirical_fourier(samples, self.cutoff)?;
        let table = analyze_spectrum_as(
            &self.params,
            &self.partition,
            &spectrum,
            self.levels.1,
            Some(self.cutoff),
            CoefficientKind::Empirical,
        )?;
        Ok(flatten(&table, self.levels))
    }
}

fn flatten(table: &CoefficientTable, levels: (i32, i32)) -> Vec<Complex64> {
    (levels.0..=levels.1)
        .flat_map(|j| table.level(j).unwrap_or(&[]).iter().copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub n: usize,
    pub replications: usize,
    /// `E|β̂ - β|²` per coefficient.
    pub second_moments: Vec<f64>,
    /// Average of `second_moments`.
    pub mean_second_moment: f64,
    /// Smallest `c_E` with `E|β̂ - β|² <= c_E / n` for every coefficient.
    pub c_e: f64,
    /// Replication means `(1/R) Σ_r β̂`, for unbiasedness checks.
    pub means: Vec<Complex64>,
    pub threshold: f64,
    /// Share of `(replication, coefficient)` pairs with `|β̂ - β| > threshold`.
    pub exceedance: f64,
}

/// Monte-Carlo moments of `β̂ - β` at sample size `n` on a fixed frame.
///
/// Requires `B^j <= √(n / ln n)` on every checked level.
pub fn concentration_check(
    model: &DensityModel,
    setup: &ConcentrationSetup,
    n: usize,
    replications: usize,
    seed: u64,
    threshold: f64,
) -> Result<ConcentrationReport> {
    let nf = n as f64;
    let top = setup.params.b().powi(setup.levels.1);
    if top > (nf / nf.ln()).sqrt() {
        return Err(Error::Precondition(format!(
            "B^j = {top:.3} exceeds sqrt(n / ln n) = {:.3} at level {}",
            (nf / nf.ln()).sqrt(),
            setup.levels.1
        )));
    }
    if replications < 2 {
        return Err(Error::InvalidParams(
            "need at least two replications".into(),
        ));
    }
    let runs: Vec<Vec<Complex64>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| setup.empirical(&model.sample(n, replication_seed(seed, r))?))
        .collect::<Result<_>>()?;
    let m = setup.truth.len();
    let mut sq = vec![0.0; m];
    let mut means = vec![Complex64::new(0.0, 0.0); m];
    let mut exceed = 0usize;
    for run in &runs {
        for i in 0..m {
            let d = run[i] - setup.truth[i];
            sq[i] += d.norm_sqr();
            means[i] += run[i];
            if d.norm() > threshold {
                exceed += 1;
            }
        }
    }
    let r = replications as f64;
    sq.iter_mut().for_each(|v| *v /= r);
    means.iter_mut().for_each(|v| *v /= r);
    let mean_second_moment = sq.iter().sum::<f64>() / m as f64;
    let c_e = sq.iter().fold(0.0f64, |a, &v| a.max(v * nf));
    Ok(ConcentrationReport {
        n,
        replications,
        second_moments: sq,
        mean_second_moment,
        c_e,
        means,
        threshold,
        exceedance: exceed as f64 / (r * m as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tuning_values() {
        let t = derive_tuning(8000, 1.4, 0.1, 1.0).unwrap();
        assert_eq!((t.k_n, t.j_n), (30, 10));
        assert!((t.tau_n - 0.0335).abs() < 5e-4);
        assert_relative_eq!(t.eta_n, 1.182e-3, max_relative = 1e-3);
        let t = derive_tuning(12000, 1.4, 0.1, 1.0).unwrap();
        assert_eq!((t.k_n, t.j_n), (36, 11));
        assert!((t.tau_n - 0.028).abs() < 5e-4);
        assert_relative_eq!(t.kappa, 0.1 * 0.107f64.sqrt(), max_relative = 1e-12);
        assert!(derive_tuning(99, 1.4, 0.1, 1.0).is_err());
        assert!(derive_tuning(1000, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn optimal_level_matches_definition() {
        let j1 = optimal_level(8000, 1.4, 1.0);
        let nf = 8000f64;
        assert_relative_eq!(
            1.4f64.powf(j1),
            (nf / nf.ln()).powf(1.0 / 3.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn pilot_histogram_of_uniform_is_near_one() {
        let s = DensityModel::uniform().sample(100_000, 3).unwrap();
        let sup = pilot_sup(&s).unwrap();
        assert!(sup > 1.0 && sup < 1.1, "{sup}");
    }

    #[test]
    fn degenerate_sample_at_a_center() {
        let cfg = EstimatorConfig::default();
        let pipe = Pipeline::new(&DensityModel::uniform(), &cfg, 1000, 0.1).unwrap();
        let level = pipe.partition.level(3).unwrap();
        let x = level.center(2);
        let samples = SampleSet::from_angles(vec![x; 5], 0, "point").unwrap();
        let t = pipe.coefficients(&samples).unwrap();
        let idx = crate::frame::AtomIndex::truncated(3, 2, pipe.tuning.k_n);
        let psi = crate::frame::needlet_eval(&pipe.params, &pipe.partition, &idx, x).unwrap();
        let b = t.get(&idx).unwrap();
        assert!((b - psi).norm() < 1e-12 && psi.re > 0.0);
        let empty = SampleSet {
            angles: vec![],
            seed: 0,
            source: String::new(),
        };
        assert_eq!(pipe.coefficients(&empty), Err(Error::EmptySample));
    }

    #[test]
    fn threshold_extremes() {
        let model = DensityModel::default_target();
        let cfg = EstimatorConfig::default();
        let pipe = Pipeline::new(&model, &cfg, 2000, 0.1).unwrap();
        let samples = model.sample(2000, 11).unwrap();
        let emp = pipe.coefficients(&samples).unwrap();
        let none = pipe.estimate_from(&samples, &emp, f64::INFINITY).unwrap();
        assert_eq!(none.total_survivors(), 0);
        assert!(none
            .density
            .values()
            .iter()
            .all(|v| (v.re - 1.0).abs() < 1e-15));
        let all = pipe.estimate_from(&samples, &emp, 0.0).unwrap();
        assert_eq!(
            all.total_survivors(),
            emp.iter().filter(|(j, _, _)| *j <= pipe.tuning.j_n).count()
        );
        assert!(all.imag_residual < 1e-10);
        // idempotence and determinism
        let again = pipe.estimate_from(&samples, &emp, 0.15).unwrap();
        assert_eq!(again, pipe.estimate_from(&samples, &emp, 0.15).unwrap());
        // survivors shrink with κ₀
        let mut prev: Option<EstimateResult> = None;
        for k0 in [0.0, 0.05, 0.1, 0.15, 0.2, 1.0] {
            let e = pipe.estimate_from(&samples, &emp, k0).unwrap();
            if let Some(p) = &prev {
                for ((j, a), (_, b)) in p.surviving.iter().zip(&e.surviving) {
                    assert!(b <= a, "level {j}");
                }
            }
            prev = Some(e);
        }
    }

    #[test]
    fn linear_estimate_without_clipping_matches_direct_synthesis() {
        let model = DensityModel::raised_cosine();
        let cfg = EstimatorConfig {
            clip: false,
            ..Default::default()
        };
        let pipe = Pipeline::new(&model, &cfg, 500, 0.0).unwrap();
        let samples = model.sample(500, 5).unwrap();
        let est = pipe.estimate(&samples, 0.0).unwrap();
        // the estimate integrates to one without clipping since the synthesis has no k = 0 term
        assert!((est.density.mean().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn risk_falls_with_n_for_uniform_truth() {
        let model = DensityModel::uniform();
        let cfg = EstimatorConfig::default();
        let small = monte_carlo_risk(&model, &cfg, 1000, 0.1, 50, 1).unwrap();
        let large = monte_carlo_risk(&model, &cfg, 10_000, 0.1, 50, 1).unwrap();
        assert!(large.mean_risk < small.mean_risk);
        assert_eq!(
            small,
            monte_carlo_risk(&model, &cfg, 1000, 0.1, 50, 1).unwrap()
        );
        assert!(monte_carlo_risk(&model, &cfg, 1000, 0.1, 5, 1).is_err());
    }

    #[test]
    fn unbiased_empirical_coefficients() {
        let model = DensityModel::default_target();
        let params = FrameParams::with_default_j0(3, 1.4, 0.2).unwrap();
        let setup = ConcentrationSetup::new(&model, params, (2, 4), 12).unwrap();
        let rep = concentration_check(&model, &setup, 2000, 200, 17, f64::INFINITY).unwrap();
        for i in 0..setup.truth.len() {
            let se = (rep.second_moments[i] / 200.0).sqrt();
            assert!(
                (rep.means[i] - setup.truth[i]).norm() <= 3.0 * se + 1e-15,
                "coefficient {i}"
            );
        }
    }

    #[test]
    fn uniform_coefficients_vanish_at_large_n() {
        let model = DensityModel::uniform();
        let params = FrameParams::with_default_j0(3, 1.4, 0.05).unwrap();
        let setup = ConcentrationSetup::new(&model, params, (1, 6), 20).unwrap();
        assert!(setup.truth.iter().all(|b| b.norm() < 1e-14));
        let n = 100_000;
        let samples = model.sample(n, 23).unwrap();
        let emp = setup.empirical(&samples).unwrap();
        // per-coefficient standard error from the atom's L² norm: Var ψ(X) <= ‖ψ‖²
        let mut i = 0;
        for j in 1..=6 {
            let level = setup.partition.level(j).unwrap();
            let idx = crate::frame::AtomIndex::truncated(j, 1, 20);
            let norm2 =
                crate::frame::atom_l2_norm_sq(&setup.params, &setup.partition, &idx).unwrap();
            let se = (norm2 / n as f64).sqrt();
            for _ in 0..level.count {
                assert!(emp[i].norm() < 5.0 * se, "level {j}");
                i += 1;
            }
        }
    }

    #[test]
    fn concentration_precondition() {
        let model = DensityModel::uniform();
        let params = FrameParams::with_default_j0(3, 1.4, 0.01).unwrap();
        let setup = ConcentrationSetup::new(&model, params, (0, 12), 30).unwrap();
        assert!(matches!(
            concentration_check(&model, &setup, 1000, 10, 1, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        assert_relative_eq!(
            least_squares_slope(&pts).unwrap(),
            -0.5,
            max_relative = 1e-12
        );
        assert!(least_squares_slope(&pts[..1]).is_none());
    }
}
