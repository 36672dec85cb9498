//! Mexican needlet frame on the circle.
//!
//! An atom at level `j` and position `q` is
//!
//! ```text
//! ψ_{jq;s}(θ) = √λ_{jq} Σ_k w_s((k B^{-j})²) e^{ik(θ - x_{jq})}
//! ```
//!
//! Partitions are equal-arc, so for a fixed level every atom is a translate of
//! the same kernel. Analysis and synthesis exploit this: on `Q` equispaced
//! centres both reduce to a length-`Q` FFT after folding frequencies modulo
//! `Q`, which keeps levels with hundreds of thousands of atoms cheap.

mod atoms;
mod bias;
mod coefficients;
mod io;
mod partition;

pub use atoms::{
    atom_l1_norm, atom_l2_norm_sq, atom_spectrum, calibrate_localization, localization_envelope,
    localization_violations, needlet_eval, LocalizationCheck,
};
pub use bias::{
    bias_monotonicity_violations, bias_report, bias_study, BiasBoundTerms, BiasConstants,
    BiasOptions, BiasReport, Lemma6Row,
};
pub(crate) use coefficients::analyze_spectrum_as;
pub use coefficients::{
    analyze, analyze_spectrum, besov_level_norms, fit_decay_slope, frame_energy, summation,
    synthesize_spectrum, tightness_ratio, CoefficientKind, CoefficientTable, LevelNorm,
};
pub use io::{read_coefficients_csv, write_coefficients_csv, write_partition_csv};
pub use partition::{build_partition, AtomIndex, Level, Partition};

use crate::error::{Error, Result};
use crate::special_fn::{self, level_weight, tail_cutoff};

/// Tail energy below which a truncated atom stands in for the exact one.
pub const EXACT_TAIL: f64 = 1e-20;

/// Relative frame energy allowed to be lost below the coarse cut `J0`.
pub const COARSE_ENERGY_TOL: f64 = 1e-12;

/// Shape `s`, scale `B`, pixel parameter `η` and coarse cut `J0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    s: u32,
    b: f64,
    eta: f64,
    j0: i32,
}

impl FrameParams {
    pub fn new(s: u32, b: f64, eta: f64, j0: i32) -> Result<Self> {
        special_fn::WeightParams::new(s, b).map_err(|e| Error::InvalidParams(e.to_string()))?;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
        let bound = Self::coarse_bound(s, b);
        if !((j0 as f64) < bound) {
            return Err(Error::InvalidParams(format!(
                "J0 = {j0} violates J0 < -log_B sqrt(s) = {bound:.4}"
            )));
        }
        Ok(Self { s, b, eta, j0 })
    }

    /// Parameters with the coarse cut chosen by [`FrameParams::default_j0`].
    pub fn with_default_j0(s: u32, b: f64, eta: f64) -> Result<Self> {
        special_fn::WeightParams::new(s, b).map_err(|e| Error::InvalidParams(e.to_string()))?;
        Self::new(s, b, eta, Self::default_j0(s, b))
    }

    /// `-log_B √s`; admissible coarse cuts lie strictly below it.
    pub fn coarse_bound(s: u32, b: f64) -> f64 {
        -(s as f64).sqrt().ln() / b.ln()
    }

    /// Largest admissible `J0` whose discarded levels `j < J0` carry less than
    /// [`COARSE_ENERGY_TOL`] of `Λ_{B,s}` at every non-zero frequency.
    ///
    /// Levels below the cut only see frequencies through `w_s((k B^{-j})²)`
    /// with argument past the weight's maximum, so `|k| = 1` is the worst case.
    pub fn default_j0(s: u32, b: f64) -> i32 {
        let lambda = special_fn::lambda_bs(s, b).unwrap_or(1.0);
        let mut j0 = Self::coarse_bound(s, b).ceil() as i32 - 1;
        while Self::discarded_energy(s, b, j0) > COARSE_ENERGY_TOL * lambda {
            j0 -= 1;
        }
        j0
    }

    /// `Σ_{j < J0} w_s(B^{-2j})²`, the level energy dropped at `|k| = 1`.
    pub fn discarded_energy(s: u32, b: f64, j0: i32) -> f64 {
        let mut sum = 0.0;
        let mut j = j0 - 1;
        loop {
            let w = level_weight(s, b, j, 1.0);
            let term = w * w;
            sum += term;
            if term <= 1e-18 * sum || term == 0.0 {
                break;
            }
            j -= 1;
        }
        sum
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn j0(&self) -> i32 {
        self.j0
    }

    pub fn lambda_bs(&self) -> f64 {
        special_fn::lambda_bs(self.s, self.b).expect("validated parameters")
    }

    /// `w_s((k B^{-j})²)`.
    pub fn weight(&self, j: i32, k: i64) -> f64 {
        level_weight(self.s, self.b, j, k as f64)
    }

    /// Spectral weights `w_s((k B^{-j})²)` for `k = 0..=cutoff`.
    pub fn level_weights(&self, j: i32, cutoff: usize) -> Vec<f64> {
        (0..=cutoff).map(|k| self.weight(j, k as i64)).collect()
    }

    /// Cut-off `K*(j)` realising the exact atom: tail energy below [`EXACT_TAIL`].
    pub fn exact_cutoff(&self, j: i32) -> usize {
        tail_cutoff(self.s, self.b, j, EXACT_TAIL)
    }

    /// Per-level cut-off: `K` when truncated, `K*(j)` otherwise.
    pub fn cutoff_for(&self, j: i32, cutoff: Option<usize>) -> usize {
        cutoff.unwrap_or_else(|| self.exact_cutoff(j))
    }

    /// Same frame with a different pixel parameter.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.s, self.b, eta, self.j0)
    }

    /// Energy `Σ_{j ∉ [J0, j_max]} w_s((k B^{-j})²)²` a frequency loses outside
    /// the stored levels.
    pub fn out_of_range_energy(&self, j_max: i32, k: i64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let kf = k.unsigned_abs() as f64;
        let mut below = 0.0;
        let mut j = self.j0 - 1;
        loop {
            let w = level_weight(self.s, self.b, j, kf);
            below += w * w;
            if (w * w <= 1e-18 * below || w == 0.0) && kf * self.b.powi(-j) > (self.s as f64).sqrt()
            {
                break;
            }
            j -= 1;
        }
        let mut above = 0.0;
        let mut j = j_max + 1;
        loop {
            let w = level_weight(self.s, self.b, j, kf);
            above += w * w;
            if (w * w <= 1e-18 * above || w == 0.0) && kf * self.b.powi(-j) < (self.s as f64).sqrt()
            {
                break;
            }
            j += 1;
        }
        below + above
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(FrameParams::new(3, 1.4, 1e-3, -2).is_ok());
        // -log_1.4 sqrt(3) ≈ -1.632
        assert!(FrameParams::new(3, 1.4, 1e-3, -1).is_err());
        assert!(FrameParams::new(3, 0.9, 1e-3, -5).is_err());
        assert!(FrameParams::new(3, 1.4, 1.0, -5).is_err());
        assert!(FrameParams::new(0, 1.4, 0.1, -5).is_err());
    }

    #[test]
    fn default_j0_drops_negligible_energy() {
        for &(s, b) in &[(3u32, 1.4), (3, 1.05), (1, 1.2), (2, 2.0)] {
            let j0 = FrameParams::default_j0(s, b);
            assert!((j0 as f64) < FrameParams::coarse_bound(s, b));
            let lam = special_fn::lambda_bs(s, b).unwrap();
            assert!(FrameParams::discarded_energy(s, b, j0) <= COARSE_ENERGY_TOL * lam);
            // one level finer would drop too much
            assert!(FrameParams::discarded_energy(s, b, j0 + 1) > COARSE_ENERGY_TOL * lam);
            // higher frequencies lose even less
            let p = FrameParams::new(s, b, 0.01, j0).unwrap();
            let lost_k1 = p.out_of_range_energy(200, 1);
            assert!(p.out_of_range_energy(200, 3) <= lost_k1 + 1e-30);
        }
    }

    #[test]
    fn spec_default_j0_loses_visible_energy() {
        // ⌈-log_B √s⌉ - 1 keeps a noticeable share of the k = 1 energy below the cut.
        let s = 3;
        let b = 1.4;
        let naive = FrameParams::coarse_bound(s, b).ceil() as i32 - 1;
        let lost =
            FrameParams::discarded_energy(s, b, naive) / special_fn::lambda_bs(s, b).unwrap();
        assert!(lost > 1e-3, "lost fraction {lost}");
    }
}
