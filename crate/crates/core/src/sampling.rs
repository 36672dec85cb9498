//! Circular target densities and seeded inverse-CDF sampling.
//!
//! Densities are normalised under `ρ(dθ) = dθ / 2π`, so the uniform density is
//! identically 1.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::circle_fourier::{wrap_angle, GridFunction};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Number of cells in the cumulative table used for sampling.
pub const CDF_CELLS: usize = 1 << 16;

/// Simpson panels used for normalisation.
const NORMALIZATION_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    Uniform,
    /// `1 + cos θ`.
    RaisedCosine,
    /// `c exp(∓ d² / (2 width²))`, `d` the angular distance to `center`.
    /// `literal_sign` selects the `+` variant (maximal away from the centre).
    GaussianBump {
        center: f64,
        width: f64,
        literal_sign: bool,
    },
    /// `c exp(κ cos(θ - center))`.
    VonMises {
        center: f64,
        concentration: f64,
    },
}

impl DensityKind {
    fn raw(&self, theta: f64) -> f64 {
        match *self {
            DensityKind::Uniform => 1.0,
            DensityKind::RaisedCosine => 1.0 + theta.cos(),
            DensityKind::GaussianBump {
                center,
                width,
                literal_sign,
            } => {
                let d = wrap_angle(theta - center) / width;
                let e = 0.5 * d * d;
                if literal_sign {
                    e.exp()
                } else {
                    (-e).exp()
                }
            }
            DensityKind::VonMises {
                center,
                concentration,
            } => (concentration * ((theta - center).cos() - 1.0)).exp(),
        }
    }

    /// Start of the period used for quadrature; non-smooth points sit at its ends.
    fn period_start(&self) -> f64 {
        match *self {
            DensityKind::GaussianBump { center, .. } | DensityKind::VonMises { center, .. } => {
                center - PI
            }
            _ => 0.0,
        }
    }
}

impl fmt::Display for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Uniform => write!(f, "uniform"),
            DensityKind::RaisedCosine => write!(f, "raised_cosine"),
            DensityKind::GaussianBump {
                center,
                width,
                literal_sign,
            } => write!(
                f,
                "gaussian_bump(center={center},width={width}{})",
                if *literal_sign { ",literal_sign" } else { "" }
            ),
            DensityKind::VonMises {
                center,
                concentration,
            } => {
                write!(
                    f,
                    "von_mises(center={center},concentration={concentration})"
                )
            }
        }
    }
}

/// A normalised circular density with its sampling table.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    kind: DensityKind,
    normalization: f64,
    cdf: Vec<f64>,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

impl DensityModel {
    pub fn new(kind: DensityKind) -> Result<Self> {
        match kind {
            DensityKind::GaussianBump { center, width, .. } => {
                if !(width > 0.0 && width.is_finite() && center.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "gaussian bump needs width > 0, got {width}"
                    )));
                }
            }
            DensityKind::VonMises {
                center,
                concentration,
            } if !(concentration >= 0.0 && concentration.is_finite() && center.is_finite()) => {
                return Err(Error::InvalidParams(format!(
                    "von Mises needs concentration >= 0, got {concentration}"
                )));
            }
            _ => {}
        }
        let a = kind.period_start();
        let normalization = simpson(|t| kind.raw(t), a, a + TAU, NORMALIZATION_PANELS) / TAU;

        let h = TAU / CDF_CELLS as f64;
        let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..CDF_CELLS {
            let x = a + i as f64 * h;
            acc += simpson(|t| kind.raw(t), x, x + h, 2);
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        cdf[CDF_CELLS] = 1.0;
        Ok(Self {
            kind,
            normalization,
            cdf,
        })
    }

    pub fn uniform() -> Self {
        Self::new(DensityKind::Uniform).expect("valid")
    }

    pub fn raised_cosine() -> Self {
        Self::new(DensityKind::RaisedCosine).expect("valid")
    }

    pub fn gaussian_bump(center: f64, width: f64) -> Result<Self> {
        Self::new(DensityKind::GaussianBump {
            center,
            width,
            literal_sign: false,
        })
    }

    pub fn von_mises(center: f64, concentration: f64) -> Result<Self> {
        Self::new(DensityKind::VonMises {
            center,
            concentration,
        })
    }

    /// Bump at `π` with unit width, the default simulation target.
    pub fn default_target() -> Self {
        Self::gaussian_bump(PI, 1.0).expect("valid")
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    /// `(1/2π) ∫ raw dθ`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn cdf_table(&self) -> &[f64] {
        &self.cdf
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.kind.raw(theta) / self.normalization
    }

    pub fn grid(&self, size: usize) -> GridFunction {
        GridFunction::from_real_fn(size, |t| self.eval(t))
    }

    /// Maximum over a 2^16-point grid plus the known mode.
    pub fn sup(&self) -> f64 {
        let mut m = (0..CDF_CELLS)
            .map(|i| self.eval(TAU * i as f64 / CDF_CELLS as f64))
            .fold(0.0, f64::max);
        if let DensityKind::GaussianBump {
            center,
            literal_sign: false,
            ..
        }
        | DensityKind::VonMises { center, .. } = self.kind
        {
            m = m.max(self.eval(center));
        }
        m
    }

    /// Invert the cumulative table at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, CDF_CELLS) - 1;
        let (lo, hi) = (self.cdf[i], self.cdf[i + 1]);
        let frac = if hi > lo {
            ((u - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let h = TAU / CDF_CELLS as f64;
        let theta = (self.kind.period_start() + h * (i as f64 + frac)).rem_euclid(TAU);
        if theta >= TAU {
            0.0
        } else {
            theta
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.quantile(rng.gen::<f64>())).collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let mut rng = stream_rng(seed);
        Ok(SampleSet {
            angles: self.draw(&mut rng, n),
            seed,
            source: self.kind.to_string(),
        })
    }
}

pub fn density_eval(model: &DensityModel, theta: f64) -> f64 {
    model.eval(theta)
}

pub fn sample(model: &DensityModel, n: usize, seed: u64) -> Result<SampleSet> {
    model.sample(n, seed)
}

/// I.i.d. angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub angles: Vec<f64>,
    pub seed: u64,
    pub source: String,
}

impl SampleSet {
    pub fn from_angles(angles: Vec<f64>, seed: u64, source: impl Into<String>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::Domain(format!("angle {a} outside [0, 2π)")));
        }
        Ok(Self {
            angles,
            seed,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={} model={}", self.seed, self.source)?;
        writeln!(out, "theta")?;
        for a in &self.angles {
            writeln!(out, "{a}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut seed = 0;
        let mut source = String::new();
        let mut angles = Vec::new();
        for line in input.lines() {
            let line = line?;
            let t = line.trim();
            if let Some(head) = t.strip_prefix('#') {
                for part in head.split_whitespace() {
                    if let Some(v) = part.strip_prefix("seed=") {
                        seed = v.parse().map_err(|_| Error::Io(format!("bad seed {v}")))?;
                    } else if let Some(v) = part.strip_prefix("model=") {
                        source = v.to_string();
                    }
                }
            } else if !t.is_empty() && t != "theta" {
                angles.push(t.parse().map_err(|_| Error::Io(format!("bad angle {t}")))?);
            }
        }
        Self::from_angles(angles, seed, source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn oracle_normalization(f: impl Fn(f64) -> f64) -> f64 {
        // composite trapezoid at M = 16384 on the periodic grid
        let m = 16384;
        (0..m).map(|i| f(TAU * i as f64 / m as f64)).sum::<f64>() / m as f64
    }

    #[test]
    fn uniform_and_raised_cosine() {
        let u = DensityModel::uniform();
        assert_relative_eq!(u.eval(1.234), 1.0, epsilon = 1e-14);
        let r = DensityModel::raised_cosine();
        assert_relative_eq!(r.eval(0.0), 2.0, epsilon = 1e-12);
        assert!(r.eval(PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_bump_normalization() {
        let g = DensityModel::default_target();
        let c = oracle_normalization(|t| (-(t - PI).powi(2) / 2.0).exp());
        assert_relative_eq!(g.normalization(), c, max_relative = 1e-8);
        let erf_form = (2.0 * PI).sqrt() * 0.998_319_683_663_473 / TAU;
        assert_relative_eq!(g.normalization(), erf_form, max_relative = 1e-12);
        assert_relative_eq!(g.eval(PI), 1.0 / erf_form, max_relative = 1e-12);
    }

    #[test]
    fn every_model_integrates_to_one() {
        let models = [
            DensityModel::uniform(),
            DensityModel::raised_cosine(),
            DensityModel::default_target(),
            DensityModel::gaussian_bump(0.5, 0.3).unwrap(),
            DensityModel::new(DensityKind::GaussianBump {
                center: PI,
                width: 1.0,
                literal_sign: true,
            })
            .unwrap(),
            DensityModel::von_mises(1.0, 4.0).unwrap(),
            DensityModel::von_mises(0.0, 0.0).unwrap(),
        ];
        for m in &models {
            let a = m.kind().period_start();
            let total = simpson(|t| m.eval(t), a, a + TAU, 1 << 14) / TAU;
            assert!(
                (total - 1.0).abs() < 1e-10,
                "{} integrates to {total}",
                m.kind()
            );
            assert!((0..1000).all(|i| m.eval(TAU * i as f64 / 1000.0) >= 0.0));
            let cdf = m.cdf_table();
            assert_eq!(cdf[0], 0.0);
            assert_eq!(cdf[CDF_CELLS], 1.0);
            assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn literal_sign_is_minimal_at_center() {
        let m = DensityModel::new(DensityKind::GaussianBump {
            center: PI,
            width: 1.0,
            literal_sign: true,
        })
        .unwrap();
        assert!(m.eval(PI) < m.eval(0.1));
    }

    #[test]
    fn invalid_parameters() {
        assert!(DensityModel::gaussian_bump(PI, 0.0).is_err());
        assert!(DensityModel::von_mises(0.0, -1.0).is_err());
        assert_eq!(
            DensityModel::uniform().sample(0, 1),
            Err(Error::EmptySample)
        );
    }

    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn uniform_sample_passes_ks() {
        let n = 20_000;
        let s = DensityModel::uniform().sample(n, 42).unwrap();
        assert!(s.angles.iter().all(|a| (0.0..TAU).contains(a)));
        let d = ks_statistic(s.angles, |x| x / TAU);
        assert!(d < 1.63 / (n as f64).sqrt(), "KS = {d}");
    }

    #[test]
    fn bump_sample_passes_ks_and_centers_at_pi() {
        let n = 20_000;
        let m = DensityModel::default_target();
        let s = m.sample(n, 7).unwrap();
        // CDF oracle by Simpson on [0, x]
        let d = ks_statistic(s.angles.clone(), |x| {
            simpson(|t| m.eval(t), 0.0, x, 2000) / TAU
        });
        assert!(d < 1.63 / (n as f64).sqrt(), "KS = {d}");
        let (c, sn) = s
            .angles
            .iter()
            .fold((0.0, 0.0), |(c, sn), a| (c + a.cos(), sn + a.sin()));
        let mean_dir = sn.atan2(c).rem_euclid(TAU);
        let rbar = (c * c + sn * sn).sqrt() / n as f64;
        // circular standard error of the mean direction
        let m2 = s
            .angles
            .iter()
            .map(|a| (2.0 * (a - mean_dir)).cos())
            .sum::<f64>()
            / n as f64;
        let se = ((1.0 - m2) / (2.0 * n as f64 * rbar * rbar)).sqrt();
        assert!(
            (mean_dir - PI).abs() < 3.0 * se,
            "mean direction {mean_dir}, se {se}"
        );
    }

    #[test]
    fn single_draw_and_csv_round_trip() {
        let m = DensityModel::von_mises(2.0, 3.0).unwrap();
        let a = m.sample(1, 99).unwrap();
        let b = m.sample(1, 99).unwrap();
        assert_eq!(a, b);
        assert!((0.0..TAU).contains(&a.angles[0]));
        let s = m.sample(50, 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(SampleSet::read_csv(buf.as_slice()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn quantile_stays_on_circle(u in 0.0f64..1.0, center in 0.0f64..TAU) {
            let m = DensityModel::gaussian_bump(center, 0.7).unwrap();
            let x = m.quantile(u);
            prop_assert!((0.0..TAU).contains(&x));
        }
    }
}
