//! Fourier analysis on the circle under the normalised measure `ρ(dθ) = dθ/2π`.
//!
//! With this convention `ρ(S¹) = 1`, the characters `u_k(θ) = e^{ikθ}` are
//! orthonormal and a probability density always has `a_0 = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 4096;

/// Samples of a function on the uniform grid `θ_m = 2πm/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
}

/// Angle of grid point `m` on an `M`-point grid.
#[inline]
pub fn grid_angle(m: usize, size: usize) -> f64 {
    2.0 * PI * m as f64 / size as f64
}

/// Smallest power of two that is `>= min`.
pub fn next_grid_size(min: usize) -> usize {
    min.max(2).next_power_of_two()
}

/// Wrap an angle difference into `[-π, π]`.
#[inline]
pub fn wrap_angle(delta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut d = delta.rem_euclid(two_pi);
    if d > PI {
        d -= two_pi;
    }
    d
}

impl GridFunction {
    pub fn from_values(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: Vec<f64>) -> Self {
        Self {
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn from_fn(size: usize, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            values: (0..size).map(|m| f(grid_angle(m, size))).collect(),
        }
    }

    pub fn from_real_fn(size: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(size, |t| Complex64::new(f(t), 0.0))
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); size],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn theta(&self, m: usize) -> f64 {
        grid_angle(m, self.len())
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.im.abs()))
    }

    /// Integral under ρ (trapezoid rule, i.e. the grid mean).
    pub fn mean(&self) -> Complex64 {
        let sum: Complex64 = self.values.iter().sum();
        sum / self.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_same_grid(self, other)?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        })
    }
}

fn check_same_grid(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::GridMismatch(f.len(), g.len()));
    }
    Ok(())
}

/// Fourier coefficients `a_k` for `|k| <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    k_max: usize,
    coeffs: Vec<Complex64>,
}

impl FourierTable {
    /// Build from coefficients ordered `k = -k_max ..= k_max`.
    pub fn new(k_max: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), 2 * k_max + 1, "coefficient vector length");
        Self { k_max, coeffs }
    }

    pub fn zeros(k_max: usize) -> Self {
        Self::new(k_max, vec![Complex64::new(0.0, 0.0); 2 * k_max + 1])
    }

    pub fn from_fn(k_max: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let km = k_max as i64;
        Self::new(k_max, (-km..=km).map(f).collect())
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `a_k`, zero outside the stored band.
    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.k_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.k_max as i64) as usize]
        }
    }

    pub fn get_mut(&mut self, k: i64) -> &mut Complex64 {
        assert!(k.unsigned_abs() as usize <= self.k_max);
        &mut self.coeffs[(k + self.k_max as i64) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let km = self.k_max as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - km, c))
    }

    /// Truncated Fourier series at a single angle.
    pub fn evaluate(&self, theta: f64) -> Complex64 {
        self.iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    /// Sample the truncated Fourier series on an `M`-point grid.
    pub fn to_grid(&self, size: usize) -> Result<GridFunction> {
        if size < 2 * self.k_max + 2 {
            return Err(Error::Aliasing {
                grid: size,
                k_max: self.k_max,
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (k, c) in self.iter() {
            buf[k.rem_euclid(size as i64) as usize] += c;
        }
        FftPlanner::new().plan_fft_inverse(size).process(&mut buf);
        Ok(GridFunction::from_values(buf))
    }

    /// `Σ_k |a_k|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn power_spectrum(&self) -> PowerSpectrum {
        PowerSpectrum {
            k_max: self.k_max,
            gamma: self.coeffs.iter().map(|c| c.norm_sqr()).collect(),
        }
    }
}

/// Fourier coefficients by normalised DFT quadrature of the grid samples.
///
/// Requires `M >= 2 k_max + 2` so the requested band is not aliased.
pub fn fourier_coefficients(f: &GridFunction, k_max: usize) -> Result<FourierTable> {
    let size = f.len();
    if size < 2 * k_max + 2 {
        return Err(Error::Aliasing { grid: size, k_max });
    }
    let mut buf = f.values.clone();
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let scale = 1.0 / size as f64;
    Ok(FourierTable::from_fn(k_max, |k| {
        buf[k.rem_euclid(size as i64) as usize] * scale
    }))
}

/// Largest band an `M`-point grid resolves without aliasing.
pub fn max_band(size: usize) -> usize {
    (size.saturating_sub(2)) / 2
}

/// Power spectrum `γ_k = |a_k|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    k_max: usize,
    gamma: Vec<f64>,
}

impl PowerSpectrum {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn get(&self, k: i64) -> f64 {
        if k.unsigned_abs() as usize > self.k_max {
            0.0
        } else {
            self.gamma[(k + self.k_max as i64) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// `Σ_{|k| > cut} γ_k` over the stored band.
    pub fn tail(&self, cut: usize) -> f64 {
        let km = self.k_max as i64;
        self.gamma
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i as i64 - km).unsigned_abs() as usize > cut)
            .map(|(_, g)| g)
            .sum()
    }
}

pub fn power_spectrum(table: &FourierTable) -> PowerSpectrum {
    table.power_spectrum()
}

/// `‖f‖_{L²(ρ)}` by the trapezoid rule.
pub fn l2_norm(f: &GridFunction) -> f64 {
    (f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / f.len() as f64).sqrt()
}

pub fn l2_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    check_same_grid(f, g)?;
    let sum: f64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok((sum / f.len() as f64).sqrt())
}
