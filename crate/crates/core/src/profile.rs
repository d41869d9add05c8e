use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar profile z ↦ h(z), used for Hurst/γ profiles over depth or time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// `start + slope·z`
    Linear { start: f64, slope: f64 },
    /// `mean + amplitude·sin(2π·frequency·z)`
    Sine { mean: f64, amplitude: f64, frequency: f64 },
    /// Piecewise-linear interpolation through `(z, value)` knots; flat outside.
    Table { points: Vec<(f64, f64)> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Linear { start, slope } => start + slope * z,
            Profile::Sine { mean, amplitude, frequency } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * frequency * z).sin()
            }
            Profile::Table { points } => {
                let i = points.partition_point(|p| p.0 <= z);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[points.len() - 1].1
                } else {
                    let (z0, v0) = points[i - 1];
                    let (z1, v1) = points[i];
                    v0 + (v1 - v0) * (z - z0) / (z1 - z0)
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Constant { .. } => true,
            Profile::Linear { slope, .. } => *slope == 0.0,
            Profile::Sine { amplitude, .. } => *amplitude == 0.0,
            Profile::Table { points } => points.iter().all(|p| p.1 == points[0].1),
        }
    }

    /// Structural checks (table sorted and non-empty, finite parameters).
    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Linear { start, slope } => start.is_finite() && slope.is_finite(),
            Profile::Sine { mean, amplitude, frequency } => {
                mean.is_finite() && amplitude.is_finite() && frequency.is_finite()
            }
            Profile::Table { points } => {
                if points.is_empty() {
                    return Err(Error::Config("profile table is empty".into()));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::Config("profile table abscissae must be strictly increasing".into()));
                }
                points.iter().all(|p| p.0.is_finite() && p.1.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Config("profile parameters must be finite".into()))
        }
    }

    /// Min and max over `samples` equispaced points of `[a, b]` (table knots included).
    pub fn range_on(&self, a: f64, b: f64, samples: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let m = samples.max(2);
        for i in 0..m {
            let v = self.eval(a + (b - a) * i as f64 / (m - 1) as f64);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if let Profile::Table { points } = self {
            for p in points.iter().filter(|p| p.0 >= a && p.0 <= b) {
                lo = lo.min(p.1);
                hi = hi.max(p.1);
            }
        }
        (lo, hi)
    }

    /// Check `lo < h(z) < hi` on `[a, b]`, naming the profile in the error.
    pub fn check_open_interval(&self, name: &str, a: f64, b: f64, lo: f64, hi: f64) -> Result<()> {
        self.validate()?;
        let (min, max) = self.range_on(a, b, 256);
        if !(min > lo && max < hi) {
            return Err(Error::Domain(format!(
                "{name} takes values in [{min}, {max}] on [{a}, {b}], outside ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}
