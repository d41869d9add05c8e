//! Gaussian building blocks: fractional Gaussian noise, the coupled
//! multi-index spectral field m(z, H), and their covariances.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::adaptive_gk;
use crate::rng::stream;
use crate::trajectory::Trajectory;

/// A Hurst index in (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HurstIndex(f64);

impl HurstIndex {
    pub fn new(value: f64) -> Result<Self> {
        check_open(value, 0.0, 1.0, "Hurst index")?;
        Ok(Self(value))
    }

    /// Index restricted to (1/2, 1), as required by the long-range constructions.
    pub fn long_range(value: f64) -> Result<Self> {
        check_open(value, 0.5, 1.0, "Hurst index")?;
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub(crate) fn check_open(v: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} {v} outside ({lo}, {hi})")))
    }
}

/// C(H)² = π / (H Γ(2H) sin πH).
pub fn renorm_c2(h: f64) -> Result<f64> {
    check_open(h, 0.0, 1.0, "Hurst index")?;
    Ok(PI / (h * gamma(2.0 * h) * (PI * h).sin()))
}

pub fn renorm_c(h: f64) -> Result<f64> {
    renorm_c2(h).map(f64::sqrt)
}

/// C(H)² from its defining integral ∫|e^{-ix} − 1|² / |x|^{2H+1} dx.
///
/// Split as 2·(∫_0^{x0} + ∫_{x0}^{A} + ∫_A^∞) with the integrand written as
/// 4 sin²(x/2) x^{-2H-1}. The piece near 0 uses the small-x expansion of
/// sin², the middle is adaptive Gauss–Kronrod, the tail is an asymptotic
/// expansion of the oscillatory integral. Returns (value, error estimate).
pub fn renorm_c2_integral(h: f64) -> Result<(f64, f64)> {
    check_open(h, 0.0, 1.0, "Hurst index")?;
    let a = 2.0 * h + 1.0;
    let x0: f64 = 1e-6;
    let head = x0.powf(2.0 - 2.0 * h) / (2.0 - 2.0 * h) - x0.powf(4.0 - 2.0 * h) / (12.0 * (4.0 - 2.0 * h))
        + x0.powf(6.0 - 2.0 * h) / (360.0 * (6.0 - 2.0 * h));
    let big_a = 2.0 * PI * 64.0;
    let integrand = |x: f64| {
        let s = (0.5 * x).sin();
        4.0 * s * s * x.powf(-a)
    };
    let (mid, err) = adaptive_gk(integrand, x0, big_a, 1e-15, 1e-13, 200_000)?;
    // ∫_A^∞ 2(1 − cos x) x^{-a} dx = 2A^{1-a}/(a-1) − 2∫_A^∞ cos x · x^{-a} dx
    let tail = 2.0 * big_a.powf(1.0 - a) / (a - 1.0) - 2.0 * cos_tail(big_a, a, 0);
    Ok((2.0 * (head + mid + tail), 2.0 * err))
}

// ∫_A^∞ cos x · x^{-b} dx and ∫_A^∞ sin x · x^{-b} dx by repeated integration by parts.
fn cos_tail(big_a: f64, b: f64, depth: usize) -> f64 {
    if depth > 12 {
        return 0.0;
    }
    -big_a.sin() * big_a.powf(-b) + b * sin_tail(big_a, b + 1.0, depth + 1)
}

fn sin_tail(big_a: f64, b: f64, depth: usize) -> f64 {
    if depth > 12 {
        return 0.0;
    }
    big_a.cos() * big_a.powf(-b) - b * cos_tail(big_a, b + 1.0, depth + 1)
}

/// |d+1|^s + |d−1|^s − 2|d|^s, with a binomial series for large |d| to avoid cancellation.
pub(crate) fn second_difference_pow(d: f64, s: f64) -> f64 {
    let d = d.abs();
    if d <= 8.0 {
        return (d + 1.0).powf(s) + (d - 1.0).abs().powf(s) - 2.0 * d.powf(s);
    }
    // d^s [(1+x)^s + (1−x)^s − 2] = 2 d^s Σ_{k≥1} binom(s, 2k) x^{2k}
    let x2 = 1.0 / (d * d);
    let mut coef = 1.0; // binom(s, j) built incrementally
    let mut sum = 0.0;
    let mut xp = 1.0;
    for j in 1..80 {
        coef *= (s - (j as f64 - 1.0)) / j as f64;
        if j % 2 == 0 {
            xp *= x2;
            let term = coef * xp;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
    }
    2.0 * d.powf(s) * sum
}

/// ρ_H(k) = ½(|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H}).
pub fn fgn_covariance(h: f64, lag: i64) -> f64 {
    0.5 * second_difference_pow(lag as f64, 2.0 * h)
}

/// R(H₁,H₂) = ½(H₁+H₂)(H₁+H₂−1) C((H₁+H₂)/2)² / (C(H₁)C(H₂)).
pub fn asymptotic_r(h1: f64, h2: f64) -> Result<f64> {
    check_open(h1, 0.5, 1.0, "Hurst index")?;
    check_open(h2, 0.5, 1.0, "Hurst index")?;
    let s = h1 + h2;
    Ok(0.5 * s * (s - 1.0) * renorm_c2(0.5 * s)? / (renorm_c(h1)? * renorm_c(h2)?))
}

/// Closed-form covariance of the increment field m(z,H) = W_H(z+1) − W_H(z)
/// at separation `d` for indices h1, h2.
pub fn increment_field_covariance(d: f64, h1: f64, h2: f64) -> Result<f64> {
    check_open(h1, 0.0, 1.0, "Hurst index")?;
    check_open(h2, 0.0, 1.0, "Hurst index")?;
    let s = h1 + h2;
    let ratio = renorm_c2(0.5 * s)? / (renorm_c(h1)? * renorm_c(h2)?);
    Ok(0.5 * ratio * second_difference_pow(d, s))
}

// ---------------------------------------------------------------------------
// Circulant-embedding fGn
// ---------------------------------------------------------------------------

/// Reusable exact fGn sampler (circulant embedding of the Toeplitz covariance).
pub struct CirculantFgn {
    h: f64,
    n: usize,
    m: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantFgn {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        check_open(h, 0.0, 1.0, "Hurst index")?;
        if n < 2 {
            return Err(Error::Domain(format!("fGn needs at least 2 samples, got {n}")));
        }
        let base = 2 * n.next_power_of_two();
        let mut planner = FftPlanner::new();
        for m in [base, 2 * base] {
            let mut c: Vec<Complex64> = (0..m)
                .map(|j| Complex64::new(fgn_covariance(h, j.min(m - j) as i64), 0.0))
                .collect();
            let fft = planner.plan_fft_forward(m);
            fft.process(&mut c);
            let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
            let min = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            if min < -1e-10 * max {
                continue;
            }
            let sqrt_eig = c.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect();
            return Ok(Self { h, n, m, sqrt_eig, fft });
        }
        Err(Error::Synthesis(format!(
            "circulant embedding of fGn(H={h}, n={n}) has negative eigenvalues even at length {}",
            4 * n.next_power_of_two()
        )))
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn embedding_len(&self) -> usize {
        self.m
    }

    /// Two independent exact fGn samples (real and imaginary parts).
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                Complex64::new(s * x, s * y)
            })
            .collect();
        self.fft.process(&mut buf);
        let a = buf[..self.n].iter().map(|z| z.re).collect();
        let b = buf[..self.n].iter().map(|z| z.im).collect();
        (a, b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_pair(rng).0
    }
}

/// `n` samples of unit-variance fGn with Hurst index `h`, deterministic in `seed`.
pub fn synthesize_fgn(h: f64, n: usize, seed: u64) -> Result<Trajectory> {
    let gen = CirculantFgn::new(h, n)?;
    let mut rng = stream(seed, 0);
    Trajectory::new(0.0, 1.0, gen.sample(&mut rng), format!("fgn(H={h})"), seed)
}

// ---------------------------------------------------------------------------
// Spectral weight and frequency grid
// ---------------------------------------------------------------------------

/// ψ in the spectral representation of m(z, H).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum SpectralWeight {
    /// ψ(x) = (1 − e^{−ix})/(ix): m(·,H) is the increment field of fBm.
    #[default]
    Increment,
    /// ψ ≡ 1, only meaningful with the grid cutoff (no |x|^{-1} decay).
    Flat,
    /// ψ(x) = 1/(1 + i·scale·x).
    Rational { scale: f64 },
}


impl SpectralWeight {
    pub fn eval(&self, x: f64) -> Complex64 {
        match *self {
            SpectralWeight::Increment => {
                let half = 0.5 * x;
                Complex64::from_polar(sinc(half), -half)
            }
            SpectralWeight::Flat => Complex64::new(1.0, 0.0),
            SpectralWeight::Rational { scale } => Complex64::new(1.0, scale * x).inv(),
        }
    }

    /// |ψ(x)|², evaluated without cancellation near 0.
    pub fn abs2(&self, x: f64) -> f64 {
        match *self {
            SpectralWeight::Increment => {
                let s = sinc(0.5 * x);
                s * s
            }
            SpectralWeight::Flat => 1.0,
            SpectralWeight::Rational { scale } => 1.0 / (1.0 + scale * scale * x * x),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            SpectralWeight::Increment => "increment".into(),
            SpectralWeight::Flat => "flat".into(),
            SpectralWeight::Rational { scale } => format!("rational(scale={scale})"),
        }
    }

    /// Whether |ψ(x)|·|x| stays bounded on a test grid of |x| ∈ [1, 10⁶].
    pub fn decays(&self) -> bool {
        (0..=60).all(|i| {
            let x = 10f64.powf(i as f64 / 10.0);
            self.eval(x).norm() * x <= 4.0
        })
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Discretization of the frequency axis used by the spectral field.
///
/// Uniform cells of width Δx = 2π/(dx_factor·span) up to X_max = x_max_factor/step
/// are summed by FFT. With `refine_low`, the first `k0` uniform cells are
/// replaced by cells of width Δx/`fine_per_cell` down to 2Δx/`fine_per_cell`,
/// then geometric cells (`cells_per_octave` per octave, `octaves` octaves)
/// and a final cell [0, x_min] carrying its exact spectral mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqGridSpec {
    pub x_max_factor: f64,
    pub dx_factor: usize,
    pub refine_low: bool,
    pub k0: usize,
    pub fine_per_cell: usize,
    pub octaves: usize,
    pub cells_per_octave: usize,
}

impl Default for FreqGridSpec {
    fn default() -> Self {
        Self {
            x_max_factor: 64.0 * PI,
            dx_factor: 4,
            refine_low: true,
            k0: 16,
            fine_per_cell: 8,
            octaves: 60,
            cells_per_octave: 4,
        }
    }
}

impl FreqGridSpec {
    /// Plain midpoint grid on the uniform lattice, no low-frequency refinement.
    pub fn uniform() -> Self {
        Self { refine_low: false, ..Self::default() }
    }

    fn validate(&self, step: f64) -> Result<()> {
        if self.dx_factor < 2 {
            return Err(Error::Config(format!(
                "frequency spacing aliases: the field period 2π/Δx = {}·span must be at least twice the grid span",
                self.dx_factor
            )));
        }
        if !(self.x_max_factor >= PI) {
            return Err(Error::Config(format!(
                "X_max·step = {} is below the grid Nyquist frequency π",
                self.x_max_factor
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        if self.refine_low && (self.k0 == 0 || self.fine_per_cell < 2 || self.cells_per_octave == 0) {
            return Err(Error::Config("refined grid needs k0 ≥ 1, fine_per_cell ≥ 2, cells_per_octave ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum CellKind {
    /// [0, x_hi]: exact mass x_hi^{2−2H}/(2−2H).
    Lump { x_hi: f64 },
    /// [x_lo, x_lo·r]: exact mass x_lo^{2−2H}(r^{2−2H} − 1)/(2−2H).
    Geometric { x_lo: f64 },
    /// Midpoint rule, width w.
    Midpoint { w: f64 },
}

#[derive(Clone, Copy, Debug)]
struct DirectCell {
    x: f64,
    ln_x: f64,
    kind: CellKind,
    /// ψ(x)/|ψ(x)| for mass cells, ψ(x) for midpoint cells.
    psi: Complex64,
    abs2: f64,
}

/// Noise-sharing spectral synthesizer for m(z_j, H) on z_j = j·step, j < n.
///
/// Every call with the same seed draws the same complex Gaussian per
/// frequency cell, so fields at different H (or along an index profile)
/// are coupled through one noise realization. Cell order is fixed
/// (low-frequency cells first, then the uniform lattice by increasing k),
/// which makes the noise of a shorter grid a prefix of that of a longer
/// grid with the same Δx·span.
pub struct SpectralField {
    n: usize,
    step: f64,
    psi: SpectralWeight,
    spec: FreqGridSpec,
    dx: f64,
    n_fft: usize,
    k_start: usize,
    k_end: usize,
    ratio: f64,
    direct: Vec<DirectCell>,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectralField {
    pub fn new(n: usize, step: f64, psi: SpectralWeight, spec: FreqGridSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("spectral field needs at least one grid point".into()));
        }
        spec.validate(step)?;
        let span = n as f64 * step;
        let dx = 2.0 * PI / (spec.dx_factor as f64 * span);
        let n_fft = spec.dx_factor * n;
        let x_max = spec.x_max_factor / step;
        let k_end = (x_max / dx).ceil() as usize;
        let ratio = 2f64.powf(1.0 / spec.cells_per_octave.max(1) as f64);
        let mut direct = Vec::new();
        let k_start;
        if spec.refine_low {
            k_start = spec.k0;
            let f = spec.fine_per_cell as f64;
            let xg = 2.0 * dx / f;
            let n_geo = spec.octaves * spec.cells_per_octave;
            let x_min = xg * ratio.powi(-(n_geo as i32));
            let mk = |x: f64, kind| {
                let p = psi.eval(x);
                DirectCell { x, ln_x: x.ln(), kind, psi: p, abs2: psi.abs2(x) }
            };
            let mut lump = mk(0.5 * x_min, CellKind::Lump { x_hi: x_min });
            lump.psi /= lump.psi.norm();
            direct.push(lump);
            for i in (0..n_geo).rev() {
                let x_lo = xg * ratio.powi(-(i as i32 + 1));
                let mut c = mk(x_lo * ratio.sqrt(), CellKind::Geometric { x_lo });
                c.psi /= c.psi.norm();
                direct.push(c);
            }
            let w = dx / f;
            for j in 2..(spec.k0 * spec.fine_per_cell) {
                direct.push(mk((j as f64 + 0.5) * w, CellKind::Midpoint { w }));
            }
        } else {
            k_start = 0;
        }
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Ok(Self { n, step, psi, spec, dx, n_fft, k_start, k_end: k_end.max(k_start), ratio, direct, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weight(&self) -> SpectralWeight {
        self.psi
    }

    pub fn grid_spec(&self) -> &FreqGridSpec {
        &self.spec
    }

    /// Number of frequency cells (positive half-axis).
    pub fn cell_count(&self) -> usize {
        self.direct.len() + (self.k_end - self.k_start)
    }

    fn uniform_x(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx
    }

    /// ∫_cell |ψ|² x^{1−2H} dx (exact for mass cells, midpoint otherwise).
    fn direct_mass(&self, c: &DirectCell, h: f64) -> f64 {
        let e = 2.0 - 2.0 * h;
        match c.kind {
            CellKind::Lump { x_hi } => c.abs2 * (e * x_hi.ln()).exp() / e,
            CellKind::Geometric { x_lo } => c.abs2 * (e * x_lo.ln()).exp() * (self.ratio.powf(e) - 1.0) / e,
            CellKind::Midpoint { w } => c.abs2 * ((1.0 - 2.0 * h) * c.ln_x).exp() * w,
        }
    }

    /// Exact covariance of the discretized field between m(z, h1) and m(z + d, h2).
    pub fn grid_covariance(&self, d: f64, h1: f64, h2: f64) -> Result<f64> {
        check_open(h1, 0.0, 1.0, "Hurst index")?;
        check_open(h2, 0.0, 1.0, "Hurst index")?;
        let mut s = 0.0;
        for c in &self.direct {
            let m = (self.direct_mass(c, h1) * self.direct_mass(c, h2)).sqrt();
            s += m * (d * c.x).cos();
        }
        let e = 1.0 - h1 - h2;
        for k in self.k_start..self.k_end {
            let x = self.uniform_x(k);
            s += self.psi.abs2(x) * x.powf(e) * self.dx * (d * x).cos();
        }
        Ok(2.0 * s / (renorm_c(h1)? * renorm_c(h2)?))
    }

    fn draw<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        Complex64::new(x, y)
    }

    /// Fields m(z_j, H_i) for each H in `h_values`, all from the noise of `seed`.
    pub fn columns(&self, h_values: &[f64], seed: u64) -> Result<Vec<Vec<f64>>> {
        for &h in h_values {
            check_open(h, 0.0, 1.0, "Hurst index")?;
        }
        let mut rng = stream(seed, 0);
        let nh = h_values.len();
        let noise_direct: Vec<Complex64> = self.direct.iter().map(|_| Self::draw(&mut rng)).collect();
        let mut bins = vec![vec![Complex64::new(0.0, 0.0); self.n_fft]; nh];
        let expo: Vec<f64> = h_values.iter().map(|h| 0.5 - h).collect();
        let amp = (2.0 * self.dx).sqrt();
        for k in self.k_start..self.k_end {
            let g = Self::draw(&mut rng);
            let x = self.uniform_x(k);
            let lx = x.ln();
            let base = self.psi.eval(x) * g * amp;
            let slot = k % self.n_fft;
            for (b, e) in bins.iter_mut().zip(&expo) {
                b[slot] += base * (e * lx).exp();
            }
        }
        let mut out = Vec::with_capacity(nh);
        for (i, &h) in h_values.iter().enumerate() {
            let c = renorm_c(h)?;
            let mut b = std::mem::take(&mut bins[i]);
            self.fft.process(&mut b);
            let mut col: Vec<f64> = (0..self.n)
                .map(|j| (b[j] * self.midpoint_phase(j)).re)
                .collect();
            let amps: Vec<Complex64> = self
                .direct
                .iter()
                .zip(&noise_direct)
                .map(|(cell, g)| cell.psi * g * (2.0 * self.direct_mass(cell, h)).sqrt())
                .collect();
            self.add_direct(&mut col, |_, ci| amps[ci]);
            for v in &mut col {
                *v /= c;
            }
            out.push(col);
        }
        Ok(out)
    }

    fn midpoint_phase(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, -PI * j as f64 / self.n_fft as f64)
    }

    /// Adds Re Σ_c e^{−i z_j x_c} a(j, c) over the direct cells.
    fn add_direct<F: FnMut(usize, usize) -> Complex64>(&self, out: &mut [f64], mut a: F) {
        if self.direct.is_empty() {
            return;
        }
        let rot: Vec<Complex64> = self.direct.iter().map(|c| Complex64::from_polar(1.0, -c.x * self.step)).collect();
        let mut ph = vec![Complex64::new(1.0, 0.0); self.direct.len()];
        for (j, o) in out.iter_mut().enumerate() {
            if j % 1024 == 0 {
                for (ci, p) in ph.iter_mut().enumerate() {
                    *p = Complex64::from_polar(1.0, -self.direct[ci].x * self.step * j as f64);
                }
            }
            let mut s = 0.0;
            for ci in 0..self.direct.len() {
                s += (ph[ci] * a(j, ci)).re;
                ph[ci] *= rot[ci];
            }
            *o += s;
        }
    }

    /// The field along an index profile: value_j = m(z_j, h_j), one shared noise.
    ///
    /// The uniform lattice is summed with a Taylor expansion of x^{−(h−H_c)}
    /// in h around the profile midpoint H_c (one FFT per term); the low
    /// frequency cells are summed directly at each h_j.
    pub fn along(&self, h_of_j: &[f64], seed: u64) -> Result<Vec<f64>> {
        if h_of_j.len() != self.n {
            return Err(Error::GridMismatch(format!(
                "index profile has {} entries, field grid has {}",
                h_of_j.len(),
                self.n
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &h in h_of_j {
            check_open(h, 0.0, 1.0, "Hurst index")?;
            lo = lo.min(h);
            hi = hi.max(h);
        }
        let hc = 0.5 * (lo + hi);
        let umax = 0.5 * (hi - lo);
        let l_lo = self.uniform_x(self.k_start).ln();
        let l_hi = self.uniform_x(self.k_end.max(self.k_start + 1) - 1).ln();
        let l_bar = 0.5 * (l_lo + l_hi);
        let half = 0.5 * (l_hi - l_lo);
        let terms = taylor_terms(umax * half);

        let mut rng = stream(seed, 0);
        let noise_direct: Vec<Complex64> = self.direct.iter().map(|_| Self::draw(&mut rng)).collect();
        let mut bins = vec![vec![Complex64::new(0.0, 0.0); self.n_fft]; terms];
        let amp = (2.0 * self.dx).sqrt();
        let e0 = 0.5 - hc;
        for k in self.k_start..self.k_end {
            let g = Self::draw(&mut rng);
            let x = self.uniform_x(k);
            let lx = x.ln();
            let slot = k % self.n_fft;
            let mut t = self.psi.eval(x) * g * (amp * (e0 * lx).exp());
            let l = lx - l_bar;
            for (p, b) in bins.iter_mut().enumerate() {
                b[slot] += t;
                t *= l / (p + 1) as f64;
            }
        }
        for b in &mut bins {
            self.fft.process(b);
        }
        let mut out = vec![0.0; self.n];
        for (j, o) in out.iter_mut().enumerate() {
            let u = h_of_j[j] - hc;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut up = 1.0;
            for b in &bins {
                acc += b[j] * up;
                up *= -u;
            }
            *o = (acc * self.midpoint_phase(j)).re * (-u * l_bar).exp();
        }
        // Low-frequency cells at the exact index of each position.
        let geo_scale = |h: f64| {
            let e = 2.0 - 2.0 * h;
            (2.0 * (self.ratio.powf(e) - 1.0) / e).sqrt()
        };
        let mut last_h = f64::NAN;
        let mut gs = 0.0;
        self.add_direct(&mut out, |j, ci| {
            let h = h_of_j[j];
            if h != last_h {
                last_h = h;
                gs = geo_scale(h);
            }
            let c = &self.direct[ci];
            let g = noise_direct[ci] * c.psi;
            match c.kind {
                CellKind::Geometric { x_lo } => g * (c.abs2.sqrt() * gs * ((1.0 - h) * x_lo.ln()).exp()),
                _ => g * (2.0 * self.direct_mass(c, h)).sqrt(),
            }
        });
        let mut last = f64::NAN;
        let mut cinv = 0.0;
        for (o, &h) in out.iter_mut().zip(h_of_j) {
            if h != last {
                last = h;
                cinv = 1.0 / renorm_c(h)?;
            }
            *o *= cinv;
        }
        Ok(out)
    }
}

fn taylor_terms(r: f64) -> usize {
    if r == 0.0 {
        return 1;
    }
    let mut term = 1.0;
    let bound = r.exp();
    for p in 1..60 {
        term *= r / p as f64;
        if term * bound < 1e-15 {
            return p + 1;
        }
    }
    60
}

/// Samples m(z_j, H_i) on a uniform depth grid, all columns from one noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldGrid {
    pub step: f64,
    pub n: usize,
    pub h_values: Vec<f64>,
    /// `samples[i][j]` = m(j·step, h_values[i]).
    pub samples: Vec<Vec<f64>>,
    pub shared_noise_seed: u64,
    pub psi: SpectralWeight,
    pub grid: FreqGridSpec,
}

impl FieldGrid {
    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.step
    }
}

pub fn synthesize_mfield(
    h_values: &[f64],
    n: usize,
    step: f64,
    psi: SpectralWeight,
    grid: &FreqGridSpec,
    seed: u64,
) -> Result<FieldGrid> {
    for &h in h_values {
        check_open(h, 0.5, 1.0, "field index")?;
    }
    let field = SpectralField::new(n, step, psi, grid.clone())?;
    let samples = field.columns(h_values, seed)?;
    Ok(FieldGrid {
        step,
        n,
        h_values: h_values.to_vec(),
        samples,
        shared_noise_seed: seed,
        psi,
        grid: grid.clone(),
    })
}

/// Result of [`field_covariance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldCovariance {
    pub quadrature: f64,
    pub quadrature_error: f64,
    /// Closed form, available for the increment weight.
    pub closed_form: Option<f64>,
    pub discrepancy: Option<f64>,
}

/// E[m(z1,h1) m(z2,h2)] = (2/(C(h1)C(h2))) ∫_0^∞ cos((z2−z1)x) |ψ(x)|² x^{1−h1−h2} dx.
///
/// The integrable singularity at 0 is removed analytically on [0, x0], the
/// range [x0, X] is integrated panel by panel (panels follow the oscillation
/// of cos(dx)), and the tail beyond X uses an asymptotic expansion: for the
/// increment weight |ψ|² = 2(1 − cos x)/x² the integrand splits into pure
/// power × cosine terms; for the rational weight integration by parts is used.
pub fn field_covariance(z1: f64, z2: f64, h1: f64, h2: f64, psi: SpectralWeight) -> Result<FieldCovariance> {
    check_open(h1, 0.5, 1.0, "Hurst index")?;
    check_open(h2, 0.5, 1.0, "Hurst index")?;
    let d = (z2 - z1).abs();
    let e = 1.0 - h1 - h2; // in (−1, 0)
    let norm = 2.0 / (renorm_c(h1)? * renorm_c(h2)?);
    if !psi.decays() {
        return Err(Error::Domain(format!(
            "weight {} lacks |x|^-1 decay; the covariance integral diverges",
            psi.tag()
        )));
    }
    let x0 = 1e-9_f64.min(1e-4 / d.max(1.0));
    // |ψ|² ≈ 1 − c2·x² near 0
    let c2 = match psi {
        SpectralWeight::Increment => 1.0 / 12.0,
        SpectralWeight::Rational { scale } => scale * scale,
        SpectralWeight::Flat => 0.0,
    };
    let head = x0.powf(e + 1.0) / (e + 1.0) - (0.5 * d * d + c2) * x0.powf(e + 3.0) / (e + 3.0);
    let f = |x: f64| psi.abs2(x) * x.powf(e) * (d * x).cos();
    let panel = if d > 0.0 { (PI / d).min(1.0) } else { 1.0 };
    // Tail start: far enough that every cosine in the tail expansion oscillates fast.
    let mut x_end: f64 = 64.0;
    if let SpectralWeight::Increment = psi {
        for b in [d, d + 1.0, (d - 1.0).abs()] {
            if b > 0.0 {
                x_end = x_end.max(40.0 / b);
            }
        }
    } else if d > 0.0 {
        x_end = x_end.max(40.0 / d);
    }
    if x_end / panel > 5e6 {
        return Err(Error::Quadrature { residual: f64::INFINITY, tol: 0.0 });
    }
    let mut total = head;
    let mut err = 0.0;
    let mut a = x0;
    while a < panel {
        let b = (a * 4.0).min(panel);
        let (v, ee) = adaptive_gk(f, a, b, 1e-18, 1e-12, 10_000)?;
        total += v;
        err += ee;
        a = b;
    }
    let n_panels = ((x_end - a) / panel).ceil() as usize;
    let step = (x_end - a) / n_panels as f64;
    for i in 0..n_panels {
        let lo = a + i as f64 * step;
        let (v, ee) = adaptive_gk(f, lo, lo + step, 1e-18, 1e-12, 1_000)?;
        total += v;
        err += ee;
    }
    let tail = match psi {
        SpectralWeight::Increment => {
            // 2 x^{e−2} (1 − cos x) cos(dx) = 2x^{e−2}[cos(dx) − ½cos((d+1)x) − ½cos((d−1)x)]
            let beta = 2.0 - e;
            2.0 * (power_cos_tail(x_end, beta, d)
                - 0.5 * power_cos_tail(x_end, beta, d + 1.0)
                - 0.5 * power_cos_tail(x_end, beta, (d - 1.0).abs()))
        }
        SpectralWeight::Rational { scale } => {
            // g(x) = x^e/(1 + s²x²) ~ Σ_k (−1)^k s^{−2k−2} x^{e−2−2k}
            let mut t = 0.0;
            let s2 = scale * scale;
            for k in 0..6 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                t += sign * s2.powi(-k - 1) * power_cos_tail(x_end, 2.0 + 2.0 * k as f64 - e, d);
            }
            t
        }
        SpectralWeight::Flat => unreachable!("rejected above"),
    };
    total += tail;
    err += 1e-14 * tail.abs();
    let value = norm * total;
    let error = norm * err;
    let tol = 1e-7 * value.abs().max(1e-8);
    if error > tol {
        return Err(Error::Quadrature { residual: error, tol });
    }
    let closed_form = match psi {
        SpectralWeight::Increment => Some(increment_field_covariance(d, h1, h2)?),
        _ => None,
    };
    Ok(FieldCovariance {
        quadrature: value,
        quadrature_error: error,
        closed_form,
        discrepancy: closed_form.map(|c| (c - value).abs()),
    })
}

/// ∫_X^∞ x^{−β} cos(bx) dx for β > 1 (b = 0 allowed).
fn power_cos_tail(x: f64, beta: f64, b: f64) -> f64 {
    if b == 0.0 {
        return x.powf(1.0 - beta) / (beta - 1.0);
    }
    // substitute y = bx
    b.powf(beta - 1.0) * cos_tail(b * x, beta, 0)
}
