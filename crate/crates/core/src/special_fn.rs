//! Scalar special functions underlying the Mexican needlet frame.
//!
//! Everything here is a pure function of its arguments. The weight
//! `w_s(x) = x^s e^{-x}` enters the atoms through `w_s((k B^{-j})^2)`, so the
//! helpers that sum over frequencies or levels take that squared argument
//! convention into account.

use crate::error::{Error, Result};

/// Relative term threshold for level sums (Calderón partial sums).
pub const LEVEL_SUM_REL_TOL: f64 = 1e-16;
/// Relative term threshold for frequency tail sums.
pub const TAIL_SUM_REL_TOL: f64 = 1e-18;

const MAX_ITER: usize = 100_000;
const CF_TINY: f64 = 1e-300;

/// Shape and scale of the Mexican weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    s: u32,
    b: f64,
}

impl WeightParams {
    pub fn new(s: u32, b: f64) -> Result<Self> {
        if s < 1 {
            return Err(Error::Domain(format!("shape s must be >= 1, got {s}")));
        }
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::Domain(format!("scale B must be > 1, got {b}")));
        }
        Ok(Self { s, b })
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `w_s(x) = x^s e^{-x}`.
pub fn weight(s: u32, x: f64) -> Result<f64> {
    if s < 1 {
        return Err(Error::Domain(format!("shape s must be >= 1, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "weight argument must be >= 0, got {x}"
        )));
    }
    Ok(weight_unchecked(s, x))
}

/// Unchecked weight used on hot paths; caller guarantees `x >= 0`.
#[inline]
pub(crate) fn weight_unchecked(s: u32, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (s as f64 * x.ln() - x).exp()
    }
}

/// `w_s((k B^{-j})^2)`, the spectral weight of frequency `k` at level `j`.
#[inline]
pub(crate) fn level_weight(s: u32, b: f64, j: i32, k: f64) -> f64 {
    let u = k * b.powi(-j);
    weight_unchecked(s, u * u)
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let (t, series) = lanczos_core(x);
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x - 0.5) * t.ln() - t + series.ln()
}

/// Gamma function for `x > 0`. Exact (to rounding) factorials for small
/// integers, Lanczos otherwise.
pub fn gamma(x: f64) -> f64 {
    if x == x.floor() && (1.0..=171.0).contains(&x) {
        let mut acc = 1.0;
        let mut i = 2.0;
        while i < x {
            acc *= i;
            i += 1.0;
        }
        return acc;
    }
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    if x > 171.0 {
        return ln_gamma(x).exp();
    }
    let (t, series) = lanczos_core(x);
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x - 0.5) * (-t).exp() * series
}

fn lanczos_core(x: f64) -> (f64, f64) {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let z = x - 1.0;
    let mut series = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    (z + G + 0.5, series)
}

fn check_incomplete_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma requires a > 0, got {a}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma requires x >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Series for γ(a,x) e^{x} x^{-a}; converges quickly for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum
}

/// Continued fraction for Γ(a,x) e^{x} x^{-a} (modified Lentz); x >= a + 1.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}

/// Upper incomplete gamma Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt (not regularised).
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    if x == 0.0 {
        return Ok(gamma(a));
    }
    let prefactor = (a * x.ln() - x).exp();
    if x < a + 1.0 {
        Ok(gamma(a) - prefactor * lower_series(a, x))
    } else {
        Ok(prefactor * upper_fraction(a, x))
    }
}

/// Lower incomplete gamma γ(a, x) = ∫_0^x t^{a-1} e^{-t} dt (not regularised).
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let prefactor = (a * x.ln() - x).exp();
    if x < a + 1.0 {
        Ok(prefactor * lower_series(a, x))
    } else {
        Ok(gamma(a) - prefactor * upper_fraction(a, x))
    }
}

/// `ln Γ(a, x)`, finite even where Γ(a, x) itself underflows.
pub fn ln_upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_incomplete_args(a, x)?;
    if x < a + 1.0 {
        Ok(upper_incomplete_gamma(a, x)?.ln())
    } else {
        Ok(a * x.ln() - x + upper_fraction(a, x).ln())
    }
}

/// Calderón constant `e_s = ∫_0^∞ w_s(x)^2 dx/x = Γ(2s) / 2^{2s}`.
pub fn calderon_constant(s: u32) -> Result<f64> {
    if s < 1 {
        return Err(Error::Domain(format!("shape s must be >= 1, got {s}")));
    }
    Ok(gamma(2.0 * s as f64) / 4f64.powi(s as i32))
}

/// `Λ_{B,s} = e_s / (2 ln B)`, the nominal frame constant.
pub fn lambda_bs(s: u32, b: f64) -> Result<f64> {
    let p = WeightParams::new(s, b)?;
    Ok(calderon_constant(p.s)? / (2.0 * p.b.ln()))
}

/// Which half of the level lattice a Calderón partial sum covers.
///
/// `Coarse` is `j <= -J0` (large weight arguments); `Fine` is the complement
/// `j > -J0`, so the two always add up to the full lattice sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalderonDirection {
    Coarse,
    Fine,
}

/// Lower integration limit `L` used in the incomplete-gamma approximation
/// `2^{-2s} Γ(2s, 2tL) / (2 ln B)` of the coarse sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowerLimit {
    /// `B^{J0 / ln B}`, which equals `e^{J0}` for every B.
    #[default]
    AsWritten,
    /// `B^{J0}`.
    LevelPower,
    /// `B^{2 J0}`: the point where the coarse lattice `t B^{2m}, m >= J0` starts.
    RiemannGrid,
}

impl LowerLimit {
    pub fn value(self, b: f64, j0: i32) -> f64 {
        match self {
            LowerLimit::AsWritten => (j0 as f64).exp(),
            LowerLimit::LevelPower => b.powi(j0),
            LowerLimit::RiemannGrid => b.powi(2 * j0),
        }
    }
}

/// A lattice partial sum together with its incomplete-gamma approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalderonSums {
    pub sum: f64,
    pub approximation: f64,
    pub relative_gap: f64,
}

/// Sum of `w(x)^2` over `x = x0 * ratio^m, m = 0, 1, ...` where the terms
/// eventually decay. `ratio > 1` walks towards large arguments, `ratio < 1`
/// towards zero.
fn lattice_sum(s: u32, x0: f64, ratio: f64) -> f64 {
    let peak = s as f64;
    let mut x = x0;
    let mut sum = 0.0;
    for _ in 0..MAX_ITER {
        let w = weight_unchecked(s, x);
        let term = w * w;
        sum += term;
        let past_peak = if ratio > 1.0 { x > peak } else { x < peak };
        if past_peak && (term <= LEVEL_SUM_REL_TOL * sum || term == 0.0) {
            break;
        }
        x *= ratio;
    }
    sum
}

/// Daubechies sum `Σ_{j∈Z} |w_s(t B^{-2j})|^2`.
pub fn daubechies_sum(s: u32, b: f64, t: f64) -> Result<f64> {
    let p = WeightParams::new(s, b)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be > 0, got {t}")));
    }
    let b2 = p.b * p.b;
    // j = 0 and below walk up, j = 1 and above walk down.
    Ok(lattice_sum(s, t, b2) + lattice_sum(s, t / b2, 1.0 / b2))
}

/// Partial Calderón sums over the coarse (`j <= -J0`) or fine (`j > -J0`)
/// half-lattice, compared against `χ/(2 ln B)` or `φ/(2 ln B)`.
pub fn calderon_partial_sums(
    s: u32,
    b: f64,
    j0: i32,
    t: f64,
    direction: CalderonDirection,
    limit: LowerLimit,
) -> Result<CalderonSums> {
    let p = WeightParams::new(s, b)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be > 0, got {t}")));
    }
    let b2 = p.b * p.b;
    let a = 2.0 * s as f64;
    let x = 2.0 * t * limit.value(p.b, j0);
    let scale = 4f64.powi(-(s as i32)) / (2.0 * p.b.ln());
    let (sum, approximation) = match direction {
        CalderonDirection::Coarse => {
            // j = -J0 - m, m >= 0: argument t B^{2 J0 + 2m}
            let first = t * b2.powi(j0);
            (
                lattice_sum(s, first, b2),
                scale * upper_incomplete_gamma(a, x)?,
            )
        }
        CalderonDirection::Fine => {
            // j = 1 - J0 + m: argument t B^{2 J0 - 2 - 2m}
            let first = t * b2.powi(j0 - 1);
            (
                lattice_sum(s, first, 1.0 / b2),
                scale * lower_incomplete_gamma(a, x)?,
            )
        }
    };
    let relative_gap = if approximation > 0.0 {
        (sum / approximation - 1.0).abs()
    } else {
        f64::INFINITY
    };
    Ok(CalderonSums {
        sum,
        approximation,
        relative_gap,
    })
}

/// Frequency tail `Σ_{|k|>K} w_s^2((k B^{-j})^2)` and its incomplete-gamma bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightTail {
    pub tail: f64,
    pub bound: f64,
}

impl WeightTail {
    pub fn holds(&self) -> bool {
        self.tail <= self.bound
    }
}

fn one_sided_tail(s: u32, b: f64, j: i32, k_cut: usize) -> f64 {
    let scale = b.powi(-j);
    let peak = (s as f64).sqrt();
    let mut sum = 0.0;
    let mut k = k_cut + 1;
    loop {
        let u = k as f64 * scale;
        let w = weight_unchecked(s, u * u);
        let term = w * w;
        sum += term;
        if u > peak && (term <= TAIL_SUM_REL_TOL * sum || term == 0.0) {
            break;
        }
        k += 1;
    }
    sum
}

pub fn weight_tail_sum(s: u32, b: f64, j: i32, k_cut: usize) -> Result<WeightTail> {
    let p = WeightParams::new(s, b)?;
    if k_cut < 1 {
        return Err(Error::Domain("cut-off K must be >= 1".into()));
    }
    let tail = 2.0 * one_sided_tail(s, p.b, j, k_cut);
    let a = 2.0 * s as f64 + 0.5;
    let x = 2.0 * (k_cut as f64).powi(2) * p.b.powi(-2 * j);
    let ln_bound = -a * 2f64.ln() + j as f64 * p.b.ln() + ln_upper_incomplete_gamma(a, x)?;
    Ok(WeightTail {
        tail,
        bound: ln_bound.exp(),
    })
}

/// Smallest `K >= 0` whose two-sided tail `Σ_{|k|>K} w_s^2` is below `threshold`.
pub fn tail_cutoff(s: u32, b: f64, j: i32, threshold: f64) -> usize {
    let scale = b.powi(-j);
    let peak = (s as f64).sqrt();
    let mut terms = Vec::new();
    let mut k = 1usize;
    loop {
        let u = k as f64 * scale;
        let w = weight_unchecked(s, u * u);
        let term = w * w;
        terms.push(term);
        if u > peak && term < threshold * 1e-20 {
            break;
        }
        k += 1;
    }
    // terms[i] belongs to frequency i + 1; walk the suffix sums downwards.
    let mut suffix = 0.0;
    let mut cutoff = terms.len();
    for idx in (0..terms.len()).rev() {
        suffix += terms[idx];
        if 2.0 * suffix >= threshold {
            break;
        }
        cutoff = idx;
    }
    cutoff
}
