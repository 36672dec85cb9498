use num_complex::Complex64;

use super::partition::{AtomIndex, Partition};
use super::FrameParams;
use crate::circle_fourier::{next_grid_size, wrap_angle, FourierTable};
use crate::error::Result;

/// `ψ_{jq;s}(θ)` (or `ψ_{jq;sK}` when the index carries a cut-off).
pub fn needlet_eval(
    params: &FrameParams,
    partition: &Partition,
    idx: &AtomIndex,
    theta: f64,
) -> Result<Complex64> {
    let level = partition.checked_level(idx)?;
    let cutoff = params.cutoff_for(idx.j, idx.cutoff);
    let delta = theta - level.center(idx.q);
    // Real kernel: the ±k terms pair into cosines.
    let mut sum = params.weight(idx.j, 0);
    for k in 1..=cutoff {
        sum += 2.0 * params.weight(idx.j, k as i64) * (k as f64 * delta).cos();
    }
    Ok(Complex64::new(level.lambda().sqrt() * sum, 0.0))
}

/// Fourier coefficients `√λ w_s((kB^{-j})²) e^{-ik x_{jq}}` of one atom.
pub fn atom_spectrum(
    params: &FrameParams,
    partition: &Partition,
    idx: &AtomIndex,
) -> Result<FourierTable> {
    let level = partition.checked_level(idx)?;
    let cutoff = params.cutoff_for(idx.j, idx.cutoff);
    let root = level.lambda().sqrt();
    let x = level.center(idx.q);
    Ok(FourierTable::from_fn(cutoff, |k| {
        Complex64::from_polar(root * params.weight(idx.j, k), -(k as f64) * x)
    }))
}

/// `‖ψ‖²_{L²} = λ Σ_k w_s((kB^{-j})²)²` by orthonormality.
pub fn atom_l2_norm_sq(
    params: &FrameParams,
    partition: &Partition,
    idx: &AtomIndex,
) -> Result<f64> {
    let level = partition.checked_level(idx)?;
    let cutoff = params.cutoff_for(idx.j, idx.cutoff);
    let w0 = params.weight(idx.j, 0);
    let sum: f64 = (1..=cutoff)
        .map(|k| 2.0 * params.weight(idx.j, k as i64).powi(2))
        .sum();
    Ok(level.lambda() * (w0 * w0 + sum))
}

/// `‖ψ‖_{L¹}` by quadrature on a grid fine enough to resolve the atom.
pub fn atom_l1_norm(params: &FrameParams, partition: &Partition, idx: &AtomIndex) -> Result<f64> {
    let spec = atom_spectrum(params, partition, idx)?;
    let size = next_grid_size((8 * spec.k_max() + 8).max(4096));
    let grid = spec.to_grid(size)?;
    Ok(grid.values().iter().map(|v| v.norm()).sum::<f64>() / size as f64)
}

/// Envelope shape without the leading constant: `√λ B^j e^{-y²} (1 + y^{2s})`,
/// `y = B^j δ / 2`.
fn envelope_shape(params: &FrameParams, lambda: f64, j: i32, delta: f64) -> f64 {
    let bj = params.b().powi(j);
    let y = bj * wrap_angle(delta) / 2.0;
    lambda.sqrt() * bj * (-(y * y)).exp() * (1.0 + y.abs().powi(2 * params.s() as i32))
}

/// Localization envelope `√λ c_s B^j exp(-(B^j δ/2)²)(1 + (B^j δ/2)^{2s})`.
pub fn localization_envelope(
    params: &FrameParams,
    partition: &Partition,
    idx: &AtomIndex,
    theta: f64,
    c_s: f64,
) -> Result<f64> {
    let level = partition.checked_level(idx)?;
    Ok(c_s * envelope_shape(params, level.lambda(), idx.j, theta - level.center(idx.q)))
}

/// Pointwise accuracy of a `K`-truncated, FFT-evaluated atom relative to the
/// exact atom: truncated weight mass plus a rounding allowance.
fn evaluation_floor(params: &FrameParams, lambda: f64, j: i32, cutoff: usize) -> f64 {
    let mut kept = params.weight(j, 0);
    for k in 1..=cutoff {
        kept += 2.0 * params.weight(j, k as i64);
    }
    let mut dropped = 0.0;
    let mut k = cutoff + 1;
    let peak = (params.s() as f64).sqrt();
    loop {
        let w = params.weight(j, k as i64);
        dropped += 2.0 * w;
        if (k as f64) * params.b().powi(-j) > peak && (w <= 1e-18 * dropped || w == 0.0) {
            break;
        }
        k += 1;
    }
    lambda.sqrt() * (dropped + 64.0 * f64::EPSILON * kept)
}

/// Calibrate `c_s` as the largest ratio `|ψ| / envelope-shape` over levels
/// `J0..=j_max` and `samples` offsets in `[-π, π)`, inflated by `margin`.
///
/// Offsets where `|ψ|` sits below the evaluation floor carry no information
/// about the exact atom and are skipped.
pub fn calibrate_localization(
    params: &FrameParams,
    j_max: i32,
    samples: usize,
    margin: f64,
) -> Result<f64> {
    let mut c_s: f64 = 0.0;
    for j in params.j0()..=j_max {
        let cutoff = params.exact_cutoff(j);
        // λ cancels in the ratio; use λ = 1.
        let spec = FourierTable::from_fn(cutoff, |k| Complex64::new(params.weight(j, k), 0.0));
        let size = next_grid_size(samples.max(2 * cutoff + 2));
        let grid = spec.to_grid(size)?;
        let floor = evaluation_floor(params, 1.0, j, cutoff);
        for (m, v) in grid.values().iter().enumerate() {
            let excess = v.norm() - floor;
            if excess <= 0.0 {
                continue;
            }
            let shape = envelope_shape(params, 1.0, j, grid.theta(m));
            c_s = c_s.max(excess / shape);
        }
    }
    Ok(c_s * margin)
}

/// Outcome of checking `|ψ| <= envelope` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationCheck {
    pub points: usize,
    pub violations: usize,
    /// Largest `(|ψ| - floor) / envelope` seen.
    pub max_ratio: f64,
}

/// Count grid points of an `M`-point grid where `|ψ_{jq}| > envelope + floor`.
pub fn localization_violations(
    params: &FrameParams,
    partition: &Partition,
    idx: &AtomIndex,
    grid_size: usize,
    c_s: f64,
) -> Result<LocalizationCheck> {
    let level = partition.checked_level(idx)?;
    let cutoff = params.cutoff_for(idx.j, idx.cutoff);
    let spec = atom_spectrum(params, partition, idx)?;
    let size = next_grid_size(grid_size.max(2 * cutoff + 2));
    let stride = size / grid_size.max(1);
    let grid = spec.to_grid(size)?;
    let floor = evaluation_floor(params, level.lambda(), idx.j, cutoff);
    let mut check = LocalizationCheck {
        points: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    for m in (0..size).step_by(stride.max(1)) {
        let theta = grid.theta(m);
        let env = localization_envelope(params, partition, idx, theta, c_s)?;
        let value = grid.values()[m].norm();
        check.points += 1;
        if value > env + floor {
            check.violations += 1;
        }
        if value > floor {
            check.max_ratio = check.max_ratio.max((value - floor) / (env / c_s));
        }
    }
    Ok(check)
}
