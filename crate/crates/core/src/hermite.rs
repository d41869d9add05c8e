//! Probabilists' Hermite polynomials, Hermite coefficients of truncation
//! functions, and the covariance-composition series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_gk;
use crate::trajectory::Trajectory;

/// P_k(x) by the recurrence P_{k+1} = x P_k − k P_{k−1}.
pub fn hermite_poly(k: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if k == 0 {
        return p0;
    }
    let mut p1 = x;
    for j in 1..k {
        let p2 = x * p1 - j as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// P_0(x), …, P_{k_max}(x).
pub fn hermite_polys(k_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(1.0);
    if k_max >= 1 {
        out.push(x);
    }
    for j in 1..k_max {
        let next = x * out[j] - j as f64 * out[j - 1];
        out.push(next);
    }
    out
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Gauss–Hermite rule for the standard normal weight: Σ w_i g(x_i) ≈ E[g(X)].
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        // Physicists' rule (weight e^{−x²}) via Newton on orthonormal polynomials.
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z: f64 = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let s2 = std::f64::consts::SQRT_2;
        let spi = std::f64::consts::PI.sqrt();
        let mut nodes: Vec<f64> = x.iter().map(|v| v * s2).collect();
        let mut weights: Vec<f64> = w.iter().map(|v| v / spi).collect();
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Built-in truncation functions T.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationKind {
    Identity,
    Cubic,
    /// x² − 1 (the second Hermite polynomial).
    Hermite2,
    Tanh { a: f64 },
    /// max(−c, min(c, x)).
    ClippedLinear { c: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
    Neither,
}

/// T(x) = scale · kind(x). Unknown keys are rejected by the flattened kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(flatten)]
    pub kind: TruncationKind,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Truncation {
    pub fn new(kind: TruncationKind) -> Self {
        Self { kind, scale: 1.0 }
    }

    pub fn scaled(kind: TruncationKind, scale: f64) -> Self {
        Self { kind, scale }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = match self.kind {
            TruncationKind::Identity => x,
            TruncationKind::Cubic => x * x * x,
            TruncationKind::Hermite2 => x * x - 1.0,
            TruncationKind::Tanh { a } => (a * x).tanh(),
            TruncationKind::ClippedLinear { c } => x.clamp(-c, c),
            TruncationKind::Zero => 0.0,
        };
        self.scale * v
    }

    pub fn parity(&self) -> Parity {
        match self.kind {
            TruncationKind::Hermite2 => Parity::Even,
            _ => Parity::Odd,
        }
    }

    pub fn degree_hint(&self) -> Option<usize> {
        match self.kind {
            TruncationKind::Identity => Some(1),
            TruncationKind::Cubic => Some(3),
            TruncationKind::Hermite2 => Some(2),
            TruncationKind::Zero => Some(0),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == TruncationKind::Zero || self.scale == 0.0
    }

    pub fn name(&self) -> String {
        let base = match self.kind {
            TruncationKind::Identity => "identity".to_string(),
            TruncationKind::Cubic => "cubic".to_string(),
            TruncationKind::Hermite2 => "x2m1".to_string(),
            TruncationKind::Tanh { a } => format!("tanh(a={a})"),
            TruncationKind::ClippedLinear { c } => format!("clipped_linear(c={c})"),
            TruncationKind::Zero => "zero".to_string(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.scale.is_finite()
            && match self.kind {
                TruncationKind::Tanh { a } => a.is_finite() && a > 0.0,
                TruncationKind::ClippedLinear { c } => c.is_finite() && c > 0.0,
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid truncation parameters: {}", self.name())))
        }
    }
}

/// Hermite expansion of x ↦ T(σ₀x) for standard normal x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteSpec {
    pub sigma0: f64,
    /// J(0), …, J(k_max); J(0) is the mean and is ~0 for accepted truncations.
    pub coeffs: Vec<f64>,
    pub rank: usize,
    pub k_max: usize,
    pub tol: f64,
    /// Var[T(σ₀X)].
    pub variance: f64,
    /// Var[T(σ₀X)] − Σ_{k=1}^{k_max} J(k)²/k!, the series tail beyond k_max.
    pub tail: f64,
}

impl HermiteSpec {
    pub fn j(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn tail_below(&self, bound: f64) -> bool {
        self.tail.abs() < bound
    }
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_K_MAX: usize = 12;
const GH_ORDER: usize = 128;

/// J(k) = E[T(σ₀X) P_k(X)] by Gauss–Hermite quadrature; rank = first k ≥ 1 with |J(k)| > tol.
pub fn hermite_coeffs(t: &Truncation, sigma0: f64, k_max: usize) -> Result<HermiteSpec> {
    hermite_coeffs_with(t, sigma0, k_max, DEFAULT_TOL)
}

pub fn hermite_coeffs_with(t: &Truncation, sigma0: f64, k_max: usize, tol: f64) -> Result<HermiteSpec> {
    if k_max < 1 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::Domain(format!("sigma0 must be positive, got {sigma0}")));
    }
    t.validate()?;
    let (coeffs, second) = if t.degree_hint().is_some() {
        moments_gauss_hermite(t, sigma0, k_max)
    } else {
        moments_adaptive(t, sigma0, k_max)?
    };
    let mean = coeffs[0];
    let variance = second - mean * mean;
    if mean.abs() > tol * variance.sqrt().max(1.0) {
        return Err(Error::Domain(format!(
            "truncation {} is not centered at sigma0 = {sigma0}: E[T] = {mean:.3e}",
            t.name()
        )));
    }
    let rank = (1..=k_max)
        .find(|&k| coeffs[k].abs() > tol)
        .ok_or(Error::ZeroRank(k_max))?;
    let captured: f64 = (1..=k_max).map(|k| coeffs[k] * coeffs[k] / factorial(k)).sum();
    Ok(HermiteSpec { sigma0, coeffs, rank, k_max, tol, variance, tail: variance - captured })
}

/// Exact for polynomial T.
fn moments_gauss_hermite(t: &Truncation, sigma0: f64, k_max: usize) -> (Vec<f64>, f64) {
    let gh = GaussHermite::new(GH_ORDER);
    let mut coeffs = vec![0.0; k_max + 1];
    let mut second = 0.0;
    for (&x, &w) in gh.nodes.iter().zip(&gh.weights) {
        let tv = t.eval(sigma0 * x);
        second += w * tv * tv;
        for (c, p) in coeffs.iter_mut().zip(hermite_polys(k_max, x)) {
            *c += w * tv * p;
        }
    }
    (coeffs, second)
}

/// Adaptive quadrature against the Gaussian density on [−14, 14], split at
/// the kinks of T. Gauss–Hermite converges slowly for kinks and for T with
/// poles near the real axis.
fn moments_adaptive(t: &Truncation, sigma0: f64, k_max: usize) -> Result<(Vec<f64>, f64)> {
    const EDGE: f64 = 14.0;
    let mut breaks = vec![-EDGE, 0.0, EDGE];
    if let TruncationKind::ClippedLinear { c } = t.kind {
        let x = c / sigma0;
        if x < EDGE {
            breaks.extend([-x, x]);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    // `scale` is the L² norm of the polynomial factor, √k!, so the absolute
    // tolerance tracks the round-off floor of the integrand.
    let integrate = |g: &dyn Fn(f64) -> f64, scale: f64| -> Result<f64> {
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let f = |x: f64| g(x) * (-0.5 * x * x).exp() * norm;
            total += adaptive_gk(f, w[0], w[1], 1e-14 * scale, 1e-12, 20_000)?.0;
        }
        Ok(total)
    };
    let mut coeffs = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        coeffs.push(integrate(&|x| t.eval(sigma0 * x) * hermite_poly(k, x), factorial(k).sqrt())?);
    }
    let second = integrate(&|x| t.eval(sigma0 * x).powi(2), 1.0)?;
    Ok((coeffs, second))
}

/// Pointwise ν = T(path).
pub fn transform_path(t: &Truncation, path: &Trajectory) -> Result<Trajectory> {
    let mut values = Vec::with_capacity(path.len());
    for (i, &x) in path.values.iter().enumerate() {
        let v = t.eval(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        values.push(v);
    }
    Trajectory::new(path.t0, path.dt, values, format!("{}∘{}", t.name(), path.generator), path.seed)
}

/// Cov[T(m₁), T(m₂)] = Σ_{k=rank}^{k_max} J(k)²/(k! σ₀^{2k}) r_m^k for Cov[m₁, m₂] = r_m.
pub fn composed_covariance(spec: &HermiteSpec, r_m: f64) -> Result<f64> {
    let s2 = spec.sigma0 * spec.sigma0;
    if r_m.abs() > s2 * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("|r_m| = {} exceeds sigma0² = {s2}", r_m.abs())));
    }
    let rho = r_m / s2;
    Ok((spec.rank..=spec.k_max)
        .map(|k| spec.coeffs[k] * spec.coeffs[k] / factorial(k) * rho.powi(k as i32))
        .sum())
}
