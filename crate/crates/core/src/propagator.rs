//! Transfer-matrix propagation of the mode amplitudes (α, β) through a
//! piecewise-constant medium, and transmission/reflection spectra.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::MediumRealization;

/// Largest ω·Δz_sub/ε^τ allowed in one sub-step.
pub const MAX_PHASE_STEP: f64 = std::f64::consts::PI / 8.0;
/// Tolerance on (|α|² − |β|² − 1)/|α|² = 1 − |T|² − |R|² after propagation.
pub const DET_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorState {
    pub omega: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    /// Sub-steps per slab used.
    pub substeps: usize,
}

impl PropagatorState {
    pub fn identity(omega: f64) -> Self {
        Self { omega, alpha: Complex64::new(1.0, 0.0), beta: Complex64::new(0.0, 0.0), substeps: 1 }
    }

    /// |α|² − |β|² − 1, zero for the exact flow.
    pub fn det_drift(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr() - 1.0
    }

    /// Drift relative to |α|², i.e. the energy defect 1 − |T|² − |R|².
    /// Rounding error grows with |α|², so this is the quantity that is tested.
    pub fn relative_drift(&self) -> f64 {
        self.det_drift() / self.alpha.norm_sqr()
    }
}

/// One step of width `dz` with constant ν and phase 2ω z_mid/ε^τ.
///
/// This is I + c·M(φ) with c = iωνΔz/2 and M(φ) = [[1, −e^{−iφ}], [e^{iφ}, −1]].
/// M² = 0, so the step is the exact exponential and has unit determinant.
#[inline]
pub fn slab_step(alpha: Complex64, beta: Complex64, c: Complex64, phase: Complex64) -> (Complex64, Complex64) {
    let a = Complex64::new(1.0, 0.0) + c;
    let b = c * phase;
    (a * alpha + b.conj() * beta, b * alpha + a.conj() * beta)
}

fn substeps_for(real: &MediumRealization, omega: f64) -> usize {
    let et = real.spec.epsilon.powf(real.spec.tau);
    let phase_step = omega.abs() * real.dz / et;
    (phase_step / MAX_PHASE_STEP).ceil().max(1.0) as usize
}

/// Integrate from z = 0 to z = Z with (α, β)(0) = (1, 0).
pub fn propagate(real: &MediumRealization, omega: f64) -> Result<PropagatorState> {
    let sub = substeps_for(real, omega);
    let et = real.spec.epsilon.powf(real.spec.tau);
    let h = real.dz / sub as f64;
    let k = 2.0 * omega / et;
    let rot = Complex64::from_polar(1.0, k * h);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut beta = Complex64::new(0.0, 0.0);
    let mut step = 0usize;
    let mut phase = Complex64::from_polar(1.0, k * 0.5 * h);
    for &nu in &real.nu {
        let c = Complex64::new(0.0, 0.5 * omega * nu * h);
        for _ in 0..sub {
            if step.is_multiple_of(512) {
                phase = Complex64::from_polar(1.0, k * (step as f64 + 0.5) * h);
            }
            let (a, b) = slab_step(alpha, beta, c, phase);
            alpha = a;
            beta = b;
            phase *= rot;
            step += 1;
        }
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
        return Err(Error::Integration(format!("non-finite amplitudes at ω = {omega}")));
    }
    let state = PropagatorState { omega, alpha, beta, substeps: sub };
    let drift = state.relative_drift();
    if drift.abs() > DET_TOL {
        return Err(Error::Integration(format!(
            "(|α|² − |β|² − 1)/|α|² drifted by {drift:.3e} at ω = {omega}; refine the slab grid"
        )));
    }
    Ok(state)
}

/// T = 1/ᾱ and R = β/ᾱ.
pub fn transmission(state: &PropagatorState) -> Result<(Complex64, Complex64)> {
    let a = state.alpha.norm();
    if !(a >= 1.0 - 1e-9) || !a.is_finite() {
        return Err(Error::CorruptedState(a));
    }
    let ac = state.alpha.conj();
    Ok((ac.inv(), state.beta / ac))
}

/// Discrete frequencies ω_k = 2πk/L for |k| ≤ k_max on a window of length L.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub window: f64,
    pub n: usize,
    pub k_max: usize,
}

impl FrequencyGrid {
    pub fn new(window: f64, n: usize, k_max: usize) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::Config(format!("window must be positive, got {window}")));
        }
        if n < 2 || k_max >= n / 2 {
            return Err(Error::Config(format!("k_max = {k_max} must be below n/2 = {}", n / 2)));
        }
        Ok(Self { window, n, k_max })
    }

    pub fn omega(&self, k: i64) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.window
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..=self.k_max as i64).map(|k| self.omega(k)).collect()
    }
}

/// T and R at ω_k for k = 0..=k_max; negative k follow by conjugation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub t: Vec<Complex64>,
    pub r: Vec<Complex64>,
    /// Largest relative |det drift| over the band.
    pub det_drift: f64,
}

impl Spectrum {
    pub fn t_at(&self, k: i64) -> Complex64 {
        mirror(&self.t, k)
    }

    pub fn r_at(&self, k: i64) -> Complex64 {
        mirror(&self.r, k)
    }
}

fn mirror(v: &[Complex64], k: i64) -> Complex64 {
    let i = k.unsigned_abs() as usize;
    if i >= v.len() {
        return Complex64::new(0.0, 0.0);
    }
    if k >= 0 {
        v[i]
    } else {
        v[i].conj()
    }
}

/// Propagate every non-negative frequency of `grid` (in parallel).
pub fn spectrum(real: &MediumRealization, grid: &FrequencyGrid) -> Result<Spectrum> {
    let states: Vec<PropagatorState> = (0..=grid.k_max as i64)
        .into_par_iter()
        .map(|k| propagate(real, grid.omega(k)))
        .collect::<Result<_>>()?;
    let mut t = Vec::with_capacity(states.len());
    let mut r = Vec::with_capacity(states.len());
    let mut drift = 0.0f64;
    for s in &states {
        let (tt, rr) = transmission(s)?;
        t.push(tt);
        r.push(rr);
        drift = drift.max(s.relative_drift().abs());
    }
    Ok(Spectrum { grid: grid.clone(), t, r, det_drift: drift })
}
