//! Source pulses, transmitted/reflected pulse synthesis from spectra, and
//! the long- and short-range limit shapes.
//!
//! Grid: s_j = −L/2 + jL/N, ω_k = 2πk/L. With f̂(ω) = ∫e^{iωs}f(s)ds and
//! a(s) = (1/2π)∫e^{−isω}T_ω f̂(ω)dω, the (−1)^k window phases cancel and
//! synthesis reduces to a plain DFT pair.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{FrequencyGrid, Spectrum};

/// Relative |f̂| below which frequencies are dropped from the band.
const BAND_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceKind {
    /// exp(−s²/2w²)
    Gaussian { width: f64 },
    /// (1 − s²/w²) exp(−s²/2w²)
    Ricker { width: f64 },
    /// Samples on the window grid.
    Table { values: Vec<f64> },
}

impl Default for SourceKind {
    fn default() -> Self {
        SourceKind::Gaussian { width: 1.0 }
    }
}

fn default_window() -> f64 {
    16.0
}
fn default_samples() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default)]
    pub shape: SourceKind,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self { shape: SourceKind::default(), window: default_window(), samples: default_samples() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SourcePulse {
    pub kind: SourceKind,
    pub window: f64,
    pub values: Vec<f64>,
    /// F_k = Σ_j f_j e^{2πijk/N}, so f̂(ω_k) ≈ (−1)^k Δs F_k.
    pub dft: Vec<Complex64>,
}

impl SourcePulse {
    pub fn new(spec: &SourceSpec) -> Result<Self> {
        let n = spec.samples;
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(format!("samples must be a power of two ≥ 16, got {n}")));
        }
        if !(spec.window > 0.0 && spec.window.is_finite()) {
            return Err(Error::Config(format!("window must be positive, got {}", spec.window)));
        }
        let ds = spec.window / n as f64;
        let s = |j: usize| -0.5 * spec.window + j as f64 * ds;
        let values: Vec<f64> = match &spec.shape {
            SourceKind::Gaussian { width } | SourceKind::Ricker { width } if !(*width > 0.0) => {
                return Err(Error::Config(format!("source width must be positive, got {width}")));
            }
            SourceKind::Gaussian { width } => (0..n).map(|j| (-0.5 * (s(j) / width).powi(2)).exp()).collect(),
            SourceKind::Ricker { width } => (0..n)
                .map(|j| {
                    let u = (s(j) / width).powi(2);
                    (1.0 - u) * (-0.5 * u).exp()
                })
                .collect(),
            SourceKind::Table { values } => {
                if values.len() != n {
                    return Err(Error::GridMismatch(format!("table has {} samples, grid has {n}", values.len())));
                }
                values.clone()
            }
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut dft: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut dft);
        let total: f64 = dft.iter().map(|c| c.norm_sqr()).sum();
        let high: f64 = dft[n / 4..=3 * n / 4].iter().map(|c| c.norm_sqr()).sum();
        if total > 0.0 && high > 1e-6 * total {
            return Err(Error::Config(format!(
                "source under-resolved: {:.2e} of its spectral energy lies in the upper half band",
                high / total
            )));
        }
        Ok(Self { kind: spec.shape.clone(), window: spec.window, values, dft })
    }

    pub fn gaussian(width: f64, window: f64, samples: usize) -> Result<Self> {
        Self::new(&SourceSpec { shape: SourceKind::Gaussian { width }, window, samples })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ds(&self) -> f64 {
        self.window / self.len() as f64
    }

    pub fn s(&self, j: usize) -> f64 {
        -0.5 * self.window + j as f64 * self.ds()
    }

    pub fn omega(&self, k: i64) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.window
    }

    /// f̂(ω_k) for |k| < N/2.
    pub fn fhat(&self, k: i64) -> Complex64 {
        let n = self.len() as i64;
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        self.dft[k.rem_euclid(n) as usize] * (sign * self.ds())
    }

    /// Smallest band |k| ≤ k_max holding all of f̂ above the relative tolerance.
    pub fn frequency_grid(&self) -> FrequencyGrid {
        let n = self.len();
        let peak = self.dft.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let k_max = (1..n / 2)
            .rev()
            .find(|&k| self.dft[k].norm() > BAND_TOL * peak || self.dft[n - k].norm() > BAND_TOL * peak)
            .unwrap_or(0);
        FrequencyGrid { window: self.window, n, k_max }
    }

    pub fn trace(&self) -> PulseTrace {
        PulseTrace {
            s0: -0.5 * self.window,
            ds: self.ds(),
            values: self.values.clone(),
            side: Side::Source,
            realization: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Transmitted,
    Reflected,
    Theory,
}

/// Pulse samples on the window grid, times in units of ε^τ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseTrace {
    pub s0: f64,
    pub ds: f64,
    pub values: Vec<f64>,
    pub side: Side,
    pub realization: Option<u64>,
}

impl PulseTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn s(&self, j: usize) -> f64 {
        self.s0 + j as f64 * self.ds
    }

    pub fn s_grid(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.s(j)).collect()
    }

    pub fn window(&self) -> f64 {
        self.ds * self.len() as f64
    }

    pub fn same_grid(&self, other: &PulseTrace) -> bool {
        self.len() == other.len() && self.s0 == other.s0 && self.ds == other.ds
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.ds
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Multiply the source spectrum by `filter(k)` and return to the time domain.
///
/// `filter` is called for k in (−N/2, N/2); the Nyquist bin is dropped. The
/// result must be real: an imaginary residual above 1e−9 of the peak is an error.
pub fn apply_filter(f: &SourcePulse, side: Side, filter: impl Fn(i64) -> Complex64) -> Result<PulseTrace> {
    let n = f.len();
    let half = (n / 2) as i64;
    let mut buf: Vec<Complex64> = (0..n as i64)
        .map(|i| {
            let k = if i < half { i } else { i - n as i64 };
            if k == -half {
                Complex64::new(0.0, 0.0)
            } else {
                filter(k) * f.dft[i as usize]
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let peak = buf.iter().fold(0.0f64, |m, c| m.max(c.re.abs())) * scale;
    let imag = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs())) * scale;
    if imag > 1e-9 * peak.max(f64::MIN_POSITIVE) && imag > 1e-300 {
        return Err(Error::Integration(format!(
            "synthesized pulse has imaginary residual {imag:.3e} against peak {peak:.3e}"
        )));
    }
    let values: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(PulseTrace { s0: -0.5 * f.window, ds: f.ds(), values, side, realization: None })
}

fn check_grid(spec: &Spectrum, f: &SourcePulse) -> Result<()> {
    if spec.grid.n != f.len() || (spec.grid.window - f.window).abs() > 1e-12 * f.window {
        return Err(Error::GridMismatch(format!(
            "spectrum grid (L = {}, N = {}) differs from source grid (L = {}, N = {})",
            spec.grid.window,
            spec.grid.n,
            f.window,
            f.len()
        )));
    }
    Ok(())
}

/// a(Z, s) on the window grid; frequencies outside the computed band are dropped.
pub fn transmitted_pulse(spec: &Spectrum, f: &SourcePulse) -> Result<PulseTrace> {
    check_grid(spec, f)?;
    apply_filter(f, Side::Transmitted, |k| spec.t_at(k))
}

/// b(0, s) on the window grid.
pub fn reflected_pulse(spec: &Spectrum, f: &SourcePulse) -> Result<PulseTrace> {
    check_grid(spec, f)?;
    apply_filter(f, Side::Reflected, |k| spec.r_at(k))
}

fn check_shift(f: &SourcePulse, shift: f64) -> Result<()> {
    if !shift.is_finite() || shift.abs() > 0.25 * f.window {
        return Err(Error::Window(format!(
            "shift {shift} leaves the window: must stay within a quarter of L = {}",
            f.window
        )));
    }
    Ok(())
}

/// f(s − V(Z)/2), by band-limited interpolation.
pub fn theory_longrange(f: &SourcePulse, v_of_z: f64) -> Result<PulseTrace> {
    let b = 0.5 * v_of_z;
    check_shift(f, b)?;
    apply_filter(f, Side::Theory, |k| Complex64::from_polar(1.0, f.omega(k) * b))
}

/// (f ∗ G)(s − b_shift) with G the centered Gaussian density of variance σ²Z/2.
pub fn theory_shortrange(f: &SourcePulse, sigma: f64, depth: f64, b_shift: f64) -> Result<PulseTrace> {
    if !(sigma >= 0.0 && depth >= 0.0) {
        return Err(Error::Domain(format!("sigma and depth must be non-negative, got {sigma}, {depth}")));
    }
    check_shift(f, b_shift)?;
    let var = sigma * sigma * depth / 2.0;
    apply_filter(f, Side::Theory, |k| {
        let w = f.omega(k);
        Complex64::from_polar((-0.5 * var * w * w).exp(), w * b_shift)
    })
}

/// Circular band-limited shift: returns t(s − delta).
pub fn shift_trace(t: &PulseTrace, delta: f64) -> PulseTrace {
    let n = t.len();
    let mut buf: Vec<Complex64> = t.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    let half = (n / 2) as i64;
    let l = t.window();
    for (i, c) in buf.iter_mut().enumerate() {
        let k = if (i as i64) < half { i as i64 } else { i as i64 - n as i64 };
        if k == -half {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / l * delta);
        }
    }
    planner.plan_fft_forward(n).process(&mut buf);
    PulseTrace { values: buf.iter().map(|c| c.re / n as f64).collect(), ..t.clone() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseDistance {
    pub l2: f64,
    pub sup: f64,
    /// δ minimizing ‖a − b(· − δ)‖.
    pub best_shift: f64,
}

fn distances(a: &PulseTrace, b: &PulseTrace) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut sup = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = x - y;
        l2 += d * d;
        sup = sup.max(d.abs());
    }
    ((l2 * a.ds).sqrt(), sup)
}

/// L² and sup distances after aligning `b` to `a`; the alignment is the
/// cross-correlation peak refined by parabolic interpolation, then polished by
/// golden-section search on the L² distance.
pub fn pulse_distance(a: &PulseTrace, b: &PulseTrace) -> Result<PulseDistance> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch("pulse traces live on different grids".into()));
    }
    if a.values == b.values {
        return Ok(PulseDistance { l2: 0.0, sup: 0.0, best_shift: 0.0 });
    }
    let n = a.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let mut fa: Vec<Complex64> = a.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    // c[m] = Σ_j a_j b_{j−m}
    let mut cc: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    planner.plan_fft_inverse(n).process(&mut cc);
    let c: Vec<f64> = cc.iter().map(|z| z.re).collect();
    let m = (0..n).fold(0, |best, i| if c[i] > c[best] { i } else { best });
    let (cm, c0, cp) = (c[(m + n - 1) % n], c[m], c[(m + 1) % n]);
    let denom = cm - 2.0 * c0 + cp;
    let frac = if denom < 0.0 { (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let signed = if m > n / 2 { m as f64 - n as f64 } else { m as f64 };
    let mut shift = (signed + frac) * a.ds;
    let l2_at = |d: f64| distances(a, &shift_trace(b, d)).0;
    let mut best = l2_at(shift);
    if best > 0.0 {
        let (mut lo, mut hi) = (shift - a.ds, shift + a.ds);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (l2_at(x1), l2_at(x2));
        for _ in 0..40 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = l2_at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = l2_at(x2);
            }
        }
        let (x, fx) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if fx < best {
            shift = x;
            best = fx;
        }
    }
    let (l2, sup) = distances(a, &shift_trace(b, shift));
    debug_assert!((l2 - best).abs() <= 1e-12 + 1e-9 * best);
    Ok(PulseDistance { l2, sup, best_shift: shift })
}

/// Mass, centre and centred second moment of a trace treated as a density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mass: f64,
    pub centre: f64,
    pub variance: f64,
}

pub fn moments(t: &PulseTrace) -> Moments {
    moments_in(t, f64::NEG_INFINITY, f64::INFINITY)
}

/// Moments restricted to samples with s in [lo, hi].
pub fn moments_in(t: &PulseTrace, lo: f64, hi: f64) -> Moments {
    let (mut m0, mut m1) = (0.0, 0.0);
    for (j, &v) in t.values.iter().enumerate() {
        let s = t.s(j);
        if s >= lo && s <= hi {
            m0 += v;
            m1 += v * s;
        }
    }
    let c = m1 / m0;
    let mut m2 = 0.0;
    for (j, &v) in t.values.iter().enumerate() {
        let s = t.s(j);
        if s >= lo && s <= hi {
            m2 += v * (s - c) * (s - c);
        }
    }
    Moments { mass: m0 * t.ds, centre: c, variance: m2 / m0 }
}
