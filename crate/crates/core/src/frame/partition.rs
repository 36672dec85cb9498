use std::f64::consts::PI;

use super::FrameParams;
use crate::error::{Error, Result};

/// One resolution level of an equal-arc partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub j: i32,
    pub count: usize,
}

impl Level {
    /// Arc measure `λ_{jq} = 1/Q_j` under ρ.
    pub fn lambda(&self) -> f64 {
        1.0 / self.count as f64
    }

    /// Midpoint `x_{jq} = 2π(q - 1/2)/Q_j` for `q = 1..=Q_j`.
    pub fn center(&self, q: usize) -> f64 {
        2.0 * PI * (q as f64 - 0.5) / self.count as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.count).map(move |q| self.center(q))
    }

    /// `Σ_q λ_{jq}^p`.
    pub fn lambda_power_sum(&self, p: f64) -> f64 {
        self.count as f64 * self.lambda().powf(p)
    }
}

/// Equal-arc partitions for levels `J0..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    levels: Vec<Level>,
}

impl Partition {
    pub fn j_min(&self) -> i32 {
        self.levels[0].j
    }

    pub fn j_max(&self) -> i32 {
        self.levels[self.levels.len() - 1].j
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, j: i32) -> Option<&Level> {
        if j < self.j_min() || j > self.j_max() {
            return None;
        }
        self.levels.get((j - self.j_min()) as usize)
    }

    pub fn total_atoms(&self) -> usize {
        self.levels.iter().map(|l| l.count).sum()
    }

    pub fn contains(&self, idx: &AtomIndex) -> bool {
        self.level(idx.j)
            .is_some_and(|l| idx.q >= 1 && idx.q <= l.count)
    }

    pub(crate) fn checked_level(&self, idx: &AtomIndex) -> Result<&Level> {
        match self.level(idx.j) {
            Some(l) if idx.q >= 1 && idx.q <= l.count => Ok(l),
            Some(l) => Err(Error::InvalidParams(format!(
                "position q = {} outside 1..={} at level {}",
                idx.q, l.count, idx.j
            ))),
            None => Err(Error::MissingCoefficients(idx.j)),
        }
    }
}

/// Atom count `Q_j = max(1, ⌈B^j / η⌉)`.
pub(crate) fn atom_count(params: &FrameParams, j: i32) -> usize {
    let raw = params.b().powi(j) / params.eta();
    (raw.ceil() as usize).max(1)
}

/// Build equal-arc partitions for levels `J0..=j_max`.
pub fn build_partition(params: &FrameParams, j_max: i32) -> Result<Partition> {
    if j_max < 1 {
        return Err(Error::InvalidParams(format!(
            "J_max must be >= 1, got {j_max}"
        )));
    }
    let levels = (params.j0()..=j_max)
        .map(|j| Level {
            j,
            count: atom_count(params, j),
        })
        .collect();
    Ok(Partition { levels })
}

/// Address of an atom; `cutoff = None` means the exact (untruncated) atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AtomIndex {
    pub j: i32,
    pub q: usize,
    pub cutoff: Option<usize>,
}

impl AtomIndex {
    pub fn exact(j: i32, q: usize) -> Self {
        Self { j, q, cutoff: None }
    }

    pub fn truncated(j: i32, q: usize, cutoff: usize) -> Self {
        Self {
            j,
            q,
            cutoff: Some(cutoff),
        }
    }
}
