use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::coefficients::{analyze_level, fit_decay_slope, synthesize_level, LevelNorm};
use super::partition::{build_partition, Partition};
use super::FrameParams;
use crate::circle_fourier::{fourier_coefficients, max_band, FourierTable, GridFunction};
use crate::error::{Error, Result};
use crate::special_fn::{ln_upper_incomplete_gamma, weight_tail_sum};

/// Multiplicative slack when comparing a computed quantity with a bound.
const BOUND_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasOptions {
    /// Finest level of the reference synthesis; `None` means `max J + 10`.
    pub j_ref: Option<i32>,
    /// Smoothness exponent `r`; `None` estimates it from the decay of the
    /// exact-coefficient level norms on levels `max J + 1..=j_ref`.
    pub smoothness: Option<f64>,
    /// Values below `floor_rel · ‖S[F]‖` count as zero.
    pub floor_rel: f64,
    /// Largest share of `R` the reference may miss above `j_ref`.
    pub reference_tol: f64,
}

impl Default for BiasOptions {
    fn default() -> Self {
        Self {
            j_ref: None,
            smoothness: None,
            floor_rel: 1e-13,
            reference_tol: 0.01,
        }
    }
}

/// Natural logarithms of the three bound shapes (constants excluded):
///
/// ```text
/// t1 = B^{-rJ}
/// t2 = J^{1/2} K^{2s-1/2} e^{-K²} B^{-(r+2s-1/2)J}
/// t3 = B^{(1-2s)J} J^{1/2} K^{s-1/4} e^{-2K²} (Σ_{|k|>K} γ_k)^{1/2}
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasBoundTerms {
    pub ln_t1: f64,
    pub ln_t2: f64,
    pub ln_t3: f64,
}

impl BiasBoundTerms {
    pub fn new(s: u32, b: f64, r: f64, j: i32, k: usize, spectral_tail: f64) -> Self {
        let s = s as f64;
        let jf = (j.max(1)) as f64;
        let kf = k as f64;
        let lb = b.ln();
        let ln_t1 = -r * j as f64 * lb;
        let ln_t2 = 0.5 * jf.ln() + (2.0 * s - 0.5) * kf.ln()
            - kf * kf
            - (r + 2.0 * s - 0.5) * j as f64 * lb;
        let ln_t3 = (1.0 - 2.0 * s) * j as f64 * lb + 0.5 * jf.ln() + (s - 0.25) * kf.ln()
            - 2.0 * kf * kf
            + 0.5 * spectral_tail.ln();
        Self {
            ln_t1,
            ln_t2,
            ln_t3,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.ln_t1, self.ln_t2, self.ln_t3]
    }
}

/// Logarithms of the constants `C₁, C₂, C₃`. `-∞` means the term was never
/// above the floor during calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasConstants {
    pub ln_c: [f64; 3],
}

impl BiasConstants {
    /// Smallest constants making every report satisfy its component bounds.
    pub fn calibrate(reports: &[BiasReport]) -> Self {
        let mut ln_c = [f64::NEG_INFINITY; 3];
        for rep in reports {
            let shapes = rep.shapes.as_array();
            for (i, &value) in rep.components().iter().enumerate() {
                if value > rep.floor {
                    ln_c[i] = ln_c[i].max(value.ln() - shapes[i]);
                }
            }
        }
        Self { ln_c }
    }
}

/// Lemma-6 and tail-bound comparison for one `(j, K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma6Row {
    pub j: i32,
    pub k: usize,
    /// `Σ_q |β_{jq;sK} - β_{jq;s}|²`.
    pub coeff_gap: f64,
    /// `B^j Γ(2s+1/2, 2K²B^{-2j}) Σ_{|k|>K} γ_k`.
    pub coeff_bound: f64,
    /// `‖ψ_{jq;sK} - ψ_{jq;s}‖²`.
    pub atom_gap: f64,
    /// `2^{-(2s+1/2)} η Γ(2s+1/2, 2K²B^{-2j})`.
    pub atom_bound: f64,
    /// `Σ_{|k|>K} w_s²((kB^{-j})²)` and its incomplete-gamma bound.
    pub weight_tail: f64,
    pub weight_tail_bound: f64,
}

impl Lemma6Row {
    pub fn coeff_holds(&self) -> bool {
        self.coeff_gap <= self.coeff_bound * (1.0 + BOUND_SLACK)
    }

    pub fn atom_holds(&self) -> bool {
        self.atom_gap <= self.atom_bound * (1.0 + BOUND_SLACK)
    }

    pub fn tail_holds(&self) -> bool {
        self.weight_tail <= self.weight_tail_bound * (1.0 + BOUND_SLACK)
    }

    pub fn holds(&self) -> bool {
        self.coeff_holds() && self.atom_holds() && self.tail_holds()
    }
}

/// Bias `R = ‖S[F]_s - S[F]_{s,K,J}‖` and its split into
/// `I₁ = ‖Σ_{j>J} β ψ‖`, `I₂ = ‖Σ_{j<=J} β (ψ - ψ_K)‖` and
/// `I₃ = ‖Σ_{j<=J} (β - β_K) ψ_K‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub j: i32,
    pub k: usize,
    pub j_ref: i32,
    pub bias: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `Σ_{|k|>K} γ_k`.
    pub spectral_tail: f64,
    pub smoothness: f64,
    pub floor: f64,
    pub shapes: BiasBoundTerms,
    pub lemma6: Vec<Lemma6Row>,
}

impl BiasReport {
    pub fn components(&self) -> [f64; 3] {
        [self.i1, self.i2, self.i3]
    }

    /// Calibrated bounds `C_i t_i`.
    pub fn bounds(&self, constants: &BiasConstants) -> [f64; 3] {
        let shapes = self.shapes.as_array();
        [0, 1, 2].map(|i| (constants.ln_c[i] + shapes[i]).exp())
    }

    /// Natural logarithm of the three-term bound `Σ C_i t_i`.
    pub fn ln_total_bound(&self, constants: &BiasConstants) -> f64 {
        let shapes = self.shapes.as_array();
        let terms = [0, 1, 2].map(|i| constants.ln_c[i] + shapes[i]);
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }

    fn within(&self, value: f64, ln_bound: f64) -> bool {
        value <= self.floor || value.ln() <= ln_bound + BOUND_SLACK.ln_1p()
    }

    pub fn total_holds(&self, constants: &BiasConstants) -> bool {
        self.within(self.bias, self.ln_total_bound(constants))
    }

    /// Names of every violated inequality.
    pub fn violations(&self, constants: &BiasConstants) -> Vec<String> {
        let mut out = Vec::new();
        let shapes = self.shapes.as_array();
        for (i, &value) in self.components().iter().enumerate() {
            if !self.within(value, constants.ln_c[i] + shapes[i]) {
                out.push(format!("I{} bound (J={}, K={})", i + 1, self.j, self.k));
            }
        }
        if !self.total_holds(constants) {
            out.push(format!(
                "three-term bias bound (J={}, K={})",
                self.j, self.k
            ));
        }
        for row in &self.lemma6 {
            if !row.coeff_holds() {
                out.push(format!(
                    "coefficient truncation bound (j={}, K={})",
                    row.j, row.k
                ));
            }
            if !row.atom_holds() {
                out.push(format!("atom truncation bound (j={}, K={})", row.j, row.k));
            }
            if !row.tail_holds() {
                out.push(format!("weight tail bound (j={}, K={})", row.j, row.k));
            }
        }
        out
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn accumulate(dst: &mut Vec<Complex64>, src: &[Complex64]) {
    // Both vectors are centred at k = 0; the shorter is padded.
    if src.len() > dst.len() {
        let pad = (src.len() - dst.len()) / 2;
        let mut grown = vec![Complex64::new(0.0, 0.0); src.len()];
        grown[pad..pad + dst.len()].copy_from_slice(dst);
        *dst = grown;
    }
    let off = (dst.len() - src.len()) / 2;
    for (d, s) in dst[off..].iter_mut().zip(src) {
        *d += s;
    }
}

/// Zero out `|k| <= cut` (`low = false`) or `|k| > cut` (`low = true`).
fn band_part(v: &[Complex64], cut: usize, low: bool) -> Vec<Complex64> {
    let c = (v.len() / 2) as i64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let k = (i as i64 - c).unsigned_abs() as usize;
            if (k <= cut) == low {
                x
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn validate_grid(js: &[i32], ks: &[usize]) -> Result<()> {
    if js.is_empty() || ks.is_empty() {
        return Err(Error::InvalidParams("bias grids must be non-empty".into()));
    }
    if js.iter().any(|&j| j < 1) || ks.contains(&0) {
        return Err(Error::InvalidParams(
            "bias grids need J >= 1 and K >= 1".into(),
        ));
    }
    Ok(())
}

/// Bias reports for every `(J, K)` of a grid, sharing one reference synthesis.
///
/// The partition is built internally up to the reference level.
pub fn bias_study(
    params: &FrameParams,
    f: &GridFunction,
    js: &[i32],
    ks: &[usize],
    options: &BiasOptions,
) -> Result<Vec<BiasReport>> {
    validate_grid(js, ks)?;
    let j_top = *js.iter().max().expect("non-empty");
    let j_ref = options.j_ref.unwrap_or(j_top + 10);
    let partition = build_partition(params, j_ref)?;
    bias_study_on(params, &partition, f, js, ks, options)
}

/// Single-cell bias report; `partition` must reach the reference level.
pub fn bias_report(
    params: &FrameParams,
    partition: &Partition,
    f: &GridFunction,
    j: i32,
    k: usize,
    options: &BiasOptions,
) -> Result<BiasReport> {
    Ok(bias_study_on(params, partition, f, &[j], &[k], options)?.remove(0))
}

fn bias_study_on(
    params: &FrameParams,
    partition: &Partition,
    f: &GridFunction,
    js: &[i32],
    ks: &[usize],
    options: &BiasOptions,
) -> Result<Vec<BiasReport>> {
    validate_grid(js, ks)?;
    let j_top = *js.iter().max().expect("non-empty");
    let j_ref = options.j_ref.unwrap_or(j_top + 10);
    if j_ref < j_top + 1 {
        return Err(Error::ReferenceResolution(format!(
            "J_ref = {j_ref} must exceed J = {j_top}"
        )));
    }
    if j_ref > partition.j_max() {
        return Err(Error::ReferenceResolution(format!(
            "partition stops at level {} below J_ref = {j_ref}",
            partition.j_max()
        )));
    }
    let spectrum = fourier_coefficients(f, max_band(f.len()))?;
    let power = spectrum.power_spectrum();
    let levels: Vec<_> = partition
        .levels()
        .iter()
        .filter(|l| l.j <= j_ref)
        .copied()
        .collect();

    // Exact coefficients and the exact-atom synthesis of every level.
    let exact: Vec<(Vec<Complex64>, Vec<Complex64>)> = levels
        .par_iter()
        .map_init(FftPlanner::new, |planner, level| {
            let cut = params.exact_cutoff(level.j);
            let beta = analyze_level(params, level, &spectrum, cut, planner);
            let synth = synthesize_level(params, level, &beta, cut, planner);
            (beta, synth)
        })
        .collect();

    let mut reference = Vec::new();
    for (_, synth) in &exact {
        accumulate(&mut reference, synth);
    }
    let floor = options.floor_rel * norm(&reference);

    // Missed energy above J_ref, assuming near-diagonal synthesis.
    let mut missed = 0.0;
    for (k, a) in spectrum.iter() {
        if k == 0 || a.norm_sqr() == 0.0 {
            continue;
        }
        let mut above = 0.0;
        let mut j = j_ref + 1;
        loop {
            let w = params.weight(j, k);
            above += w * w;
            if w * w <= 1e-18 * above && (k.unsigned_abs() as f64) < params.b().powi(j) {
                break;
            }
            j += 1;
        }
        missed += a.norm_sqr() * above * above;
    }
    let missed = missed.sqrt();

    let smoothness = match options.smoothness {
        Some(r) => r,
        None => {
            let norms: Vec<LevelNorm> = levels
                .iter()
                .zip(&exact)
                .filter(|(l, _)| l.j > j_top && l.j <= j_ref)
                .map(|(l, (beta, _))| LevelNorm {
                    j: l.j,
                    norm: (params.eta() * beta.iter().map(|b| b.norm_sqr()).sum::<f64>()).sqrt(),
                })
                .collect();
            let slope = fit_decay_slope(&norms, j_top + 1).ok_or_else(|| {
                Error::Precondition("smoothness fit needs two levels with non-zero norm".into())
            })?;
            -slope / params.b().ln()
        }
    };

    let mut reports = Vec::with_capacity(js.len() * ks.len());
    for &k in ks {
        // Per-level pieces for this K: truncated synthesis, I₂ and I₃ parts.
        let pieces: Vec<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, f64)> = levels
            .par_iter()
            .zip(exact.par_iter())
            .filter(|(l, _)| l.j <= j_top)
            .map_init(FftPlanner::new, |planner, (level, (_, synth))| {
                let truncated = analyze_level(params, level, &spectrum, k, planner);
                let s_trunc = synthesize_level(params, level, &truncated, k, planner);
                let high = band_part(synth, k, false);
                let cut = params.exact_cutoff(level.j);
                let tail_spec = FourierTable::from_fn(spectrum.k_max(), |m| {
                    if m.unsigned_abs() as usize > k {
                        spectrum.get(m)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let gap = analyze_level(params, level, &tail_spec, cut, planner);
                let gap_energy = gap.iter().map(|g| g.norm_sqr()).sum();
                let s_gap = synthesize_level(params, level, &gap, k, planner);
                (s_trunc, high, s_gap, gap_energy)
            })
            .collect();

        let spectral_tail = power.tail(k);
        let lemma6: Vec<Lemma6Row> = levels
            .iter()
            .zip(&pieces)
            .filter(|(l, _)| l.j >= 1)
            .map(|(level, piece)| {
                lemma6_row(params, level.j, level.lambda(), k, spectral_tail, piece.3)
            })
            .collect::<Result<_>>()?;

        for &j in js {
            let mut truncated = Vec::new();
            let mut i2v = Vec::new();
            let mut i3v = Vec::new();
            for (level, piece) in levels.iter().zip(&pieces).filter(|(l, _)| l.j <= j) {
                let _ = level;
                accumulate(&mut truncated, &piece.0);
                accumulate(&mut i2v, &piece.1);
                accumulate(&mut i3v, &piece.2);
            }
            let mut i1v = Vec::new();
            for (_, synth) in levels
                .iter()
                .zip(&exact)
                .filter(|(l, _)| l.j > j)
                .map(|(_, e)| e)
            {
                accumulate(&mut i1v, synth);
            }
            let mut diff = reference.clone();
            let neg: Vec<Complex64> = truncated.iter().map(|c| -c).collect();
            accumulate(&mut diff, &neg);
            let bias = norm(&diff);
            if missed > options.reference_tol * bias.max(floor) {
                return Err(Error::ReferenceResolution(format!(
                    "levels above J_ref = {j_ref} carry {missed:.3e} against R = {bias:.3e}"
                )));
            }
            reports.push(BiasReport {
                j,
                k,
                j_ref,
                bias,
                i1: norm(&i1v),
                i2: norm(&i2v),
                i3: norm(&i3v),
                spectral_tail,
                smoothness,
                floor,
                shapes: BiasBoundTerms::new(
                    params.s(),
                    params.b(),
                    smoothness,
                    j,
                    k,
                    spectral_tail,
                ),
                lemma6: lemma6.iter().filter(|r| r.j <= j).copied().collect(),
            });
        }
    }
    Ok(reports)
}

fn lemma6_row(
    params: &FrameParams,
    j: i32,
    lambda: f64,
    k: usize,
    spectral_tail: f64,
    coeff_gap: f64,
) -> Result<Lemma6Row> {
    let s = params.s();
    let b = params.b();
    let a = 2.0 * s as f64 + 0.5;
    let x = 2.0 * (k as f64).powi(2) * b.powi(-2 * j);
    let ln_gamma_tail = ln_upper_incomplete_gamma(a, x)?;
    let cut = params.exact_cutoff(j);
    let atom_gap: f64 = lambda
        * ((k + 1)..=cut)
            .map(|m| 2.0 * params.weight(j, m as i64).powi(2))
            .sum::<f64>();
    let tail = weight_tail_sum(s, b, j, k)?;
    Ok(Lemma6Row {
        j,
        k,
        coeff_gap,
        coeff_bound: (j as f64 * b.ln() + ln_gamma_tail).exp() * spectral_tail,
        atom_gap,
        atom_bound: (-a * 2f64.ln() + params.eta().ln() + ln_gamma_tail).exp(),
        weight_tail: tail.tail,
        weight_tail_bound: tail.bound,
    })
}

/// Violations of `R` being non-increasing in `J` (fixed `K`) and in `K`
/// (fixed `J`).
pub fn bias_monotonicity_violations(reports: &[BiasReport]) -> Vec<String> {
    let mut out = Vec::new();
    for a in reports {
        for b in reports {
            let later = (a.k == b.k && b.j > a.j) || (a.j == b.j && b.k > a.k);
            if later && b.bias > a.bias * (1.0 + 1e-9) + a.floor {
                out.push(format!(
                    "bias monotonicity: R(J={}, K={}) = {:.6e} > R(J={}, K={}) = {:.6e}",
                    b.j, b.k, b.bias, a.j, a.k, a.bias
                ));
            }
        }
    }
    out
}
