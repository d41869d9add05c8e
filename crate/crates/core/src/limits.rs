//! Limit travel-time processes: fBm, Hermite processes, multifractional S_h
//! and its non-Gaussian variant S_h^K, with covariance oracles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{asymptotic_r, check_open, fgn_covariance, CirculantFgn, FreqGridSpec, SpectralField, SpectralWeight};
use crate::hermite::{factorial, hermite_poly};
use crate::medium::field_index;
use crate::profile::Profile;
use crate::quad::{graded_panels_left, graded_panels_right, GaussLegendre};
use crate::rng::{derive, stream};
use crate::trajectory::Trajectory;

pub const MIN_RESOLUTION: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    #[default]
    UnitVarianceAt1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LimitKind {
    Fbm { h: f64 },
    Hermite { h: f64, k: usize },
    Multifrac { h: Profile },
    MultifracHermite { h: Profile, k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSpec {
    pub process: LimitKind,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl LimitSpec {
    pub fn simulate(&self) -> Result<Trajectory> {
        self.simulate_path(0)
    }

    /// Path `index` of the ensemble rooted at `seed`.
    pub fn simulate_path(&self, index: u64) -> Result<Trajectory> {
        let seed = derive(self.seed, index);
        match &self.process {
            LimitKind::Fbm { h } => simulate_hermite_with(*h, 1, self.n, seed, self.normalization),
            LimitKind::Hermite { h, k } => simulate_hermite_with(*h, *k, self.n, seed, self.normalization),
            LimitKind::Multifrac { h } => simulate_sh(h, self.n, seed),
            LimitKind::MultifracHermite { h, k } => simulate_sh_hermite_with(h, *k, self.n, seed, self.normalization),
        }
    }

    /// `m` independent paths, computed in parallel.
    pub fn ensemble(&self, m: usize) -> Result<Vec<Trajectory>> {
        (0..m as u64).into_par_iter().map(|i| self.simulate_path(i)).collect()
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n < MIN_RESOLUTION {
        return Err(Error::Config(format!("resolution {n} below the minimum {MIN_RESOLUTION}")));
    }
    Ok(())
}

fn check_rank(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("Hermite rank K must be at least 1".into()));
    }
    Ok(())
}

/// Index of the underlying Gaussian noise, checked to lie in (1/2, 1).
fn noise_index(h: f64, k: usize) -> Result<f64> {
    check_open(h, 0.5, 1.0, "H")?;
    let ht = field_index(h, k);
    check_open(ht, 0.5, 1.0, "h̃ = (H − 1)/K + 1").map_err(|_| {
        Error::Domain(format!("index mapping h̃ = {ht} for H = {h}, K = {k} leaves (1/2, 1)"))
    })?;
    Ok(ht)
}

/// ½(t₁^{2H} + t₂^{2H} − |t₁ − t₂|^{2H}), the covariance of every
/// variance-normalized Hermite process of index H.
pub fn hermite_covariance(h: f64, t1: f64, t2: f64) -> f64 {
    0.5 * (t1.abs().powf(2.0 * h) + t2.abs().powf(2.0 * h) - (t1 - t2).abs().powf(2.0 * h))
}

/// Var Σ_{j<n} H_K(Y_j) for unit fGn Y of index `ht`: K!·Σ_d (n − |d|)ρ(d)^K.
fn hermite_sum_variance(ht: f64, k: usize, n: usize) -> f64 {
    let mut acc = n as f64;
    for d in 1..n {
        acc += 2.0 * (n - d) as f64 * fgn_covariance(ht, d as i64).powi(k as i32);
    }
    factorial(k) * acc
}

/// Unit-variance-at-1 normalization: divides N^{−H}Σ H_K(Y_j) by this factor.
fn hermite_norm(h: f64, k: usize, n: usize) -> f64 {
    let ht = field_index(h, k);
    hermite_sum_variance(ht, k, n).sqrt() / (n as f64).powf(h)
}

/// N^{−H} Σ_{j≤Nt} H_K(Y_j(h̃)) on t ∈ [0, 1], normalized so Var at t = 1 is 1.
pub fn simulate_hermite(h: f64, k: usize, n: usize, seed: u64) -> Result<Trajectory> {
    simulate_hermite_with(h, k, n, seed, Normalization::UnitVarianceAt1)
}

pub fn simulate_hermite_with(h: f64, k: usize, n: usize, seed: u64, norm: Normalization) -> Result<Trajectory> {
    check_resolution(n)?;
    check_rank(k)?;
    let ht = noise_index(h, k)?;
    let y = CirculantFgn::new(ht, n)?.sample(&mut stream(seed, 0));
    let mut scale = (n as f64).powf(-h);
    if norm == Normalization::UnitVarianceAt1 {
        scale /= hermite_norm(h, k, n);
    }
    let inc: Vec<f64> = y.iter().map(|&v| scale * hermite_poly(k, v)).collect();
    Trajectory::cumulative(&inc, 1.0 / n as f64, format!("hermite(H={h},K={k})"), seed)
}

fn profile_on_unit(h: &Profile, k: usize) -> Result<()> {
    h.check_open_interval("h(t)", 0.0, 1.0, 0.5, 1.0)?;
    for i in 0..=256 {
        let v = h.eval(i as f64 / 256.0);
        check_open(field_index(v, k), 0.5, 1.0, "h̃_K(t)")?;
    }
    Ok(())
}

/// Σ_{j≤Nt} N^{−h(j/N)} Y_j(h(j/N)) with the Y_j(H) family sharing one spectral noise.
pub fn simulate_sh(h: &Profile, n: usize, seed: u64) -> Result<Trajectory> {
    check_resolution(n)?;
    profile_on_unit(h, 1)?;
    let hj: Vec<f64> = (1..=n).map(|j| h.eval(j as f64 / n as f64)).collect();
    let y = noise_family(&hj, n, seed)?;
    let nf = n as f64;
    let inc: Vec<f64> = y.iter().zip(&hj).map(|(&v, &hh)| nf.powf(-hh) * v).collect();
    Trajectory::cumulative(&inc, 1.0 / nf, "multifrac", seed)
}

fn noise_family(idx: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    let field = SpectralField::new(n, 1.0, SpectralWeight::Increment, FreqGridSpec::default())?;
    if idx.windows(2).all(|w| w[0] == w[1]) {
        Ok(field.columns(&idx[..1], seed)?.pop().expect("one column"))
    } else {
        field.along(idx, seed)
    }
}

/// Σ N^{−h(j/N)} H_K(Y_j(h̃_K(j/N))) / norm(h(j/N)).
///
/// With `UnitVarianceAt1` the per-point norm is the constant-H normalization of
/// [`simulate_hermite`] at H = h(j/N), so a constant profile reproduces that
/// normalization and K = 1 reproduces [`simulate_sh`].
pub fn simulate_sh_hermite(h: &Profile, k: usize, n: usize, seed: u64) -> Result<Trajectory> {
    simulate_sh_hermite_with(h, k, n, seed, Normalization::UnitVarianceAt1)
}

pub fn simulate_sh_hermite_with(h: &Profile, k: usize, n: usize, seed: u64, norm: Normalization) -> Result<Trajectory> {
    check_resolution(n)?;
    check_rank(k)?;
    profile_on_unit(h, k)?;
    let hj: Vec<f64> = (1..=n).map(|j| h.eval(j as f64 / n as f64)).collect();
    let idx: Vec<f64> = hj.iter().map(|&v| field_index(v, k)).collect();
    let y = noise_family(&idx, n, seed)?;
    let norms: Vec<f64> = match norm {
        Normalization::Raw => vec![1.0; n],
        Normalization::UnitVarianceAt1 => {
            let lo = hj.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = hj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-12 {
                vec![hermite_norm(lo, k, n); n]
            } else {
                let cheb = Chebyshev::fit(lo, hi, 24, |x| hermite_norm(x, k, n).ln());
                hj.iter().map(|&x| cheb.eval(x).exp()).collect()
            }
        }
    };
    let nf = n as f64;
    let inc: Vec<f64> = (0..n).map(|j| nf.powf(-hj[j]) * hermite_poly(k, y[j]) / norms[j]).collect();
    Trajectory::cumulative(&inc, 1.0 / nf, format!("multifrac_hermite(K={k})"), seed)
}

/// Chebyshev interpolant on [a, b].
struct Chebyshev {
    a: f64,
    b: f64,
    c: Vec<f64>,
}

impl Chebyshev {
    fn fit(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> Self {
        let pi = std::f64::consts::PI;
        let fx: Vec<f64> = (0..m)
            .map(|i| {
                let t = (pi * (i as f64 + 0.5) / m as f64).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * t)
            })
            .collect();
        let c = (0..m)
            .map(|j| {
                let s: f64 = (0..m).map(|i| fx[i] * (pi * j as f64 * (i as f64 + 0.5) / m as f64).cos()).sum();
                2.0 * s / m as f64
            })
            .collect();
        Self { a, b, c }
    }

    fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &cj in self.c.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + cj;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + 0.5 * self.c[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShQuadSpec {
    /// J(1), the first Hermite coefficient of the truncation.
    pub j1: f64,
    /// Gauss–Legendre order per panel; the error estimate uses order − 6.
    pub order: usize,
    /// Geometric grading ratio and depth toward singular points.
    pub ratio: f64,
    pub levels: usize,
    pub rel_tol: f64,
}

impl Default for ShQuadSpec {
    fn default() -> Self {
        Self { j1: 1.0, order: 16, ratio: 0.25, levels: 20, rel_tol: 1e-6 }
    }
}

/// Grading depth toward `p` over a side of length `len`, stopping before the
/// panels fall below a few ulps of `p`.
fn depth(len: f64, p: f64, q: f64, levels: usize) -> usize {
    let floor = 64.0 * f64::EPSILON * p.abs().max(1.0);
    if len <= floor {
        return 0;
    }
    levels.min(((floor / len).ln() / q.ln()).floor() as usize)
}

/// Panels of [a, b] graded geometrically toward `p` ∈ [a, b], plus the two
/// leftover pieces adjacent to `p` (possibly empty).
fn graded_around(a: f64, b: f64, p: f64, q: f64, levels: usize) -> (Vec<(f64, f64)>, f64, f64) {
    let mut panels = Vec::new();
    let (mut dl, mut dr) = (0.0, 0.0);
    if p > a {
        let (ps, d) = graded_panels_right(a, p, q, depth(p - a, p, q, levels));
        panels.extend(ps);
        dl = d;
    }
    if p < b {
        let (ps, d) = graded_panels_left(p, b, q, depth(b - p, p, q, levels));
        panels.extend(ps);
        dr = d;
    }
    (panels, dl, dr)
}

/// J(1)²∫₀^{z₁}∫₀^{z₂} R(h(u₁),h(u₂))|u₁−u₂|^{h(u₁)+h(u₂)−2} du₂ du₁.
///
/// Both integrals use Gauss–Legendre on panels graded toward the diagonal
/// and the segment ends; the innermost diagonal piece is integrated with the
/// coefficient frozen at u₁. Two orders give the error estimate.
pub fn sh_covariance(h: &Profile, z1: f64, z2: f64, spec: &ShQuadSpec) -> Result<f64> {
    if !(z1 >= 0.0 && z2 >= 0.0) {
        return Err(Error::Domain(format!("sh_covariance needs z₁, z₂ ≥ 0, got {z1}, {z2}")));
    }
    if z1 == 0.0 || z2 == 0.0 {
        return Ok(0.0);
    }
    h.check_open_interval("h(u)", 0.0, z1.max(z2), 0.5, 1.0)?;
    if spec.order < 8 {
        return Err(Error::Config("sh quadrature order must be at least 8".into()));
    }
    let hi = sh_double(h, z1, z2, spec, &GaussLegendre::new(spec.order))?;
    let lo = sh_double(h, z1, z2, spec, &GaussLegendre::new(spec.order - 6))?;
    let residual = (hi - lo).abs();
    let tol = spec.rel_tol * hi.abs() + 1e-14;
    if residual > tol {
        return Err(Error::Quadrature { residual, tol });
    }
    Ok(spec.j1 * spec.j1 * hi)
}

fn sh_double(h: &Profile, z1: f64, z2: f64, spec: &ShQuadSpec, gl: &GaussLegendre) -> Result<f64> {
    let kernel = |u1: f64, h1: f64, u2: f64| -> f64 {
        let h2 = h.eval(u2);
        let r = asymptotic_r(h1, h2).unwrap_or(f64::NAN);
        r * (u1 - u2).abs().powf(h1 + h2 - 2.0)
    };
    let inner = |u1: f64| -> f64 {
        let h1 = h.eval(u1);
        let p = u1.min(z2);
        let (panels, dl, dr) = graded_around(0.0, z2, p, spec.ratio, spec.levels);
        let mut acc = 0.0;
        for &(a, b) in &panels {
            acc += gl.integrate(|u2| kernel(u1, h1, u2), a, b);
        }
        if u1 <= z2 {
            // frozen coefficient on [u₁ − δ, u₁ + δ']
            let r = asymptotic_r(h1, h1).unwrap_or(f64::NAN);
            let e = 2.0 * h1 - 1.0;
            acc += r * (dl.powf(e) + dr.powf(e)) / e;
        } else if dl > 0.0 {
            acc += gl.integrate(|u2| kernel(u1, h1, u2), p - dl, p);
        }
        acc
    };
    let mut breaks = vec![0.0, z1];
    if z2 < z1 {
        breaks.insert(1, z2);
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let (left, dl) = graded_panels_left(a, mid, spec.ratio, spec.levels);
        let (right, dr) = graded_panels_right(mid, b, spec.ratio, spec.levels);
        for &(pa, pb) in left.iter().chain(&right) {
            total += gl.integrate(&inner, pa, pb);
        }
        // leftover end pieces: the inner integral is bounded there
        total += gl.integrate(&inner, a, a + dl) + gl.integrate(&inner, b - dr, b);
    }
    if !total.is_finite() {
        return Err(Error::Quadrature { residual: f64::INFINITY, tol: spec.rel_tol });
    }
    Ok(total)
}
