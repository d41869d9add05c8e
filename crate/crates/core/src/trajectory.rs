use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of a scalar process on a uniform grid `t0 + i·dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub generator: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, generator: impl Into<String>, seed: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(Error::Domain(format!("grid step must be positive and finite, got {dt}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { t0, dt, values, generator: generator.into(), seed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// True when both trajectories live on the same grid (bitwise on t0/dt).
    pub fn same_grid(&self, other: &Self) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.len() == other.len()
    }

    /// Partial sums `[0, x0, x0+x1, ...]` on `[0, n·dt]`.
    pub fn cumulative(increments: &[f64], dt: f64, generator: impl Into<String>, seed: u64) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for &x in increments {
            acc += x;
            values.push(acc);
        }
        Self::new(0.0, dt, values, generator, seed)
    }
}
