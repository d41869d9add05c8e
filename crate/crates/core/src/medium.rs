//! ε-scaled random media ν^ε on a slab grid, the integrated processes
//! v₁, v₂, v₃, and statistical checks of the covariance assumptions.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::{asymptotic_r, check_open, FreqGridSpec, SpectralField, SpectralWeight};
use crate::hermite::{factorial, hermite_coeffs, HermiteSpec, Truncation, TruncationKind, DEFAULT_K_MAX};
use crate::profile::Profile;
use crate::rng::stream;
use crate::stats::{mean, ols, std_dev};

/// How the micro-scale fluctuation ν is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumModel {
    /// ν = T(m(·, h̃_K)) from the spectral field, scaled by ε^{2h(z)−2}.
    /// Give `h` (limit regularity), `gamma` (covariance decay), or both
    /// (then h = (2 − γK)/2 must hold).
    LongRange {
        #[serde(default)]
        h: Option<Profile>,
        #[serde(default)]
        gamma: Option<Profile>,
    },
    /// Mixing medium: independent N(0, sigma_nu²) per unit micro slab passed
    /// through T, scaled by ε^{−τ}.
    ShortRange { sigma_nu: f64 },
}

fn default_tau() -> f64 {
    1.0
}
fn default_micro_step() -> f64 {
    1.0
}
fn default_max_slabs() -> usize {
    1 << 22
}
fn default_truncation() -> Truncation {
    Truncation::new(TruncationKind::Identity)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub epsilon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Macroscopic depth Z.
    pub depth: f64,
    pub model: MediumModel,
    #[serde(default = "default_truncation")]
    pub truncation: Truncation,
    /// Optional constant κ; when set it must satisfy τ − κ = γK.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub psi: SpectralWeight,
    #[serde(default)]
    pub grid: FreqGridSpec,
    /// Micro-grid step (micro units per slab at most).
    #[serde(default = "default_micro_step")]
    pub micro_step: f64,
    #[serde(default = "default_max_slabs")]
    pub max_slabs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MediumSpec {
    pub fn long_range_h(epsilon: f64, depth: f64, h: Profile, truncation: Truncation, seed: u64) -> Self {
        Self {
            epsilon,
            tau: 1.0,
            depth,
            model: MediumModel::LongRange { h: Some(h), gamma: None },
            truncation,
            kappa: None,
            psi: SpectralWeight::Increment,
            grid: FreqGridSpec::default(),
            micro_step: 1.0,
            max_slabs: default_max_slabs(),
            seed,
        }
    }

    pub fn long_range_gamma(epsilon: f64, depth: f64, gamma: f64, truncation: Truncation, seed: u64) -> Self {
        let mut s = Self::long_range_h(epsilon, depth, Profile::constant(0.0), truncation, seed);
        s.model = MediumModel::LongRange { h: None, gamma: Some(Profile::constant(gamma)) };
        s
    }

    pub fn short_range(epsilon: f64, depth: f64, sigma_nu: f64, seed: u64) -> Self {
        let mut s = Self::long_range_h(epsilon, depth, Profile::constant(0.0), default_truncation(), seed);
        s.model = MediumModel::ShortRange { sigma_nu };
        s
    }

    pub fn n_slabs(&self) -> usize {
        (self.depth / (self.epsilon * self.epsilon * self.micro_step)).ceil() as usize
    }

    /// Hermite rank K of the truncation (1 for the zero truncation).
    pub fn rank(&self) -> Result<usize> {
        Ok(self.hermite()?.map_or(1, |h| h.rank))
    }

    pub fn hermite(&self) -> Result<Option<HermiteSpec>> {
        if self.truncation.is_zero() {
            Ok(None)
        } else {
            Ok(Some(hermite_coeffs(&self.truncation, 1.0, DEFAULT_K_MAX)?))
        }
    }

    /// Limit regularity profile h(z) after resolving γ/h and checking the constraints.
    pub fn h_profile(&self) -> Result<Option<Profile>> {
        let MediumModel::LongRange { h, gamma } = &self.model else {
            return Ok(None);
        };
        let k = self.rank()? as f64;
        let z = self.depth;
        let resolved = match (h, gamma) {
            (None, None) => return Err(Error::Config("long-range medium needs an h or gamma profile".into())),
            (Some(h), None) => h.clone(),
            (None, Some(g)) => {
                g.check_open_interval("gamma(z)", 0.0, z, 0.0, 1.0)?;
                gamma_to_h(g, k)?
            }
            (Some(h), Some(g)) => {
                g.check_open_interval("gamma(z)", 0.0, z, 0.0, 1.0)?;
                for i in 0..256 {
                    let zz = z * i as f64 / 255.0;
                    let want = (2.0 - g.eval(zz) * k) / 2.0;
                    if (h.eval(zz) - want).abs() > 1e-9 {
                        return Err(Error::Config(format!(
                            "profiles violate h(z) = (2 − γ(z)K)/2 at z = {zz}: h = {}, (2 − γK)/2 = {want}",
                            h.eval(zz)
                        )));
                    }
                }
                h.clone()
            }
        };
        resolved.check_open_interval("h(z)", 0.0, z, 0.5, 1.0).map_err(|e| match e {
            Error::Domain(m) => Error::Config(format!("{m}; the long-range regime needs 0 < γK < 1")),
            other => other,
        })?;
        if let Some(kappa) = self.kappa {
            if !resolved.is_constant() {
                return Err(Error::Config("a constant kappa cannot match a varying h profile".into()));
            }
            let gk = 2.0 - 2.0 * resolved.eval(0.0);
            if (self.tau - kappa - gk).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "tau − kappa = {} but γK = {gk}: the constraint τ − κ = γK fails",
                    self.tau - kappa
                )));
            }
        }
        Ok(Some(resolved))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("tau", self.tau), ("depth", self.depth), ("micro_step", self.micro_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.epsilon >= 1.0 {
            return Err(Error::Config(format!("epsilon must be below 1, got {}", self.epsilon)));
        }
        self.truncation.validate()?;
        if let MediumModel::ShortRange { sigma_nu } = self.model {
            if !(sigma_nu >= 0.0 && sigma_nu.is_finite()) {
                return Err(Error::Config(format!("sigma_nu must be non-negative, got {sigma_nu}")));
            }
        }
        self.h_profile()?;
        let n = self.n_slabs();
        if n > self.max_slabs {
            return Err(Error::Budget(format!("{n} slabs exceed the budget of {}", self.max_slabs)));
        }
        Ok(())
    }
}

fn gamma_to_h(g: &Profile, k: f64) -> Result<Profile> {
    Ok(match g {
        Profile::Constant { value } => Profile::Constant { value: (2.0 - value * k) / 2.0 },
        Profile::Linear { start, slope } => Profile::Linear { start: (2.0 - start * k) / 2.0, slope: -slope * k / 2.0 },
        Profile::Sine { mean, amplitude, frequency } => Profile::Sine {
            mean: (2.0 - mean * k) / 2.0,
            amplitude: -amplitude * k / 2.0,
            frequency: *frequency,
        },
        Profile::Table { points } => Profile::Table {
            points: points.iter().map(|&(z, v)| (z, (2.0 - v * k) / 2.0)).collect(),
        },
    })
}

/// Field index h̃_K = (h − 1)/K + 1.
pub fn field_index(h: f64, k: usize) -> f64 {
    (h - 1.0) / k as f64 + 1.0
}

/// One sample of ν^ε, piecewise constant on `n_slabs` slabs of width `dz`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MediumRealization {
    pub spec: MediumSpec,
    pub dz: f64,
    /// ν^ε per slab.
    pub nu: Vec<f64>,
    /// Unscaled micro values ν(z_j/ε², z_j) per slab.
    pub micro: Vec<f64>,
    pub rank: usize,
}

impl MediumRealization {
    pub fn n_slabs(&self) -> usize {
        self.nu.len()
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.dz
    }

    pub fn z_grid(&self) -> Vec<f64> {
        (0..=self.n_slabs()).map(|j| self.z(j)).collect()
    }

    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    /// Same values with slabs randomly permuted: destroys all correlation.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..self.n_slabs()).collect();
        idx.shuffle(&mut stream(seed, 0));
        let mut out = self.clone();
        out.nu = idx.iter().map(|&i| self.nu[i]).collect();
        out.micro = idx.iter().map(|&i| self.micro[i]).collect();
        out
    }

    /// A medium with explicit slab values (fixtures and tests).
    pub fn from_values(spec: MediumSpec, nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::Config("medium needs at least one slab".into()));
        }
        if let Some(i) = nu.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let dz = spec.depth / nu.len() as f64;
        Ok(Self { micro: nu.clone(), spec, dz, nu, rank: 1 })
    }
}

/// Build ν^ε for `spec`, deterministic in `spec.seed`.
pub fn build_medium(spec: &MediumSpec) -> Result<MediumRealization> {
    spec.validate()?;
    let n = spec.n_slabs();
    let dz = spec.depth / n as f64;
    let eps = spec.epsilon;
    let t = spec.truncation;
    let rank = spec.rank()?;
    let (micro, nu) = match &spec.model {
        MediumModel::ShortRange { sigma_nu } => {
            let mut rng = stream(spec.seed, 0);
            let micro: Vec<f64> = (0..n)
                .map(|_| {
                    let x: f64 = rng.sample(StandardNormal);
                    t.eval(sigma_nu * x)
                })
                .collect();
            let scale = eps.powf(-spec.tau);
            let nu = micro.iter().map(|v| v * scale).collect();
            (micro, nu)
        }
        MediumModel::LongRange { .. } => {
            let h = spec.h_profile()?.expect("long-range model has a profile");
            if t.is_zero() {
                (vec![0.0; n], vec![0.0; n])
            } else {
                let zmid: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dz).collect();
                let hz: Vec<f64> = zmid.iter().map(|&z| h.eval(z)).collect();
                let idx: Vec<f64> = hz.iter().map(|&v| field_index(v, rank)).collect();
                let field = SpectralField::new(n, dz / (eps * eps), spec.psi, spec.grid.clone())?;
                let m = if h.is_constant() {
                    field.columns(&idx[..1], spec.seed)?.pop().expect("one column")
                } else {
                    field.along(&idx, spec.seed)?
                };
                let micro: Vec<f64> = m.iter().map(|&x| t.eval(x)).collect();
                // κ − τ = 2h − 2
                let nu = micro.iter().zip(&hz).map(|(v, &hh)| v * eps.powf(2.0 * hh - 2.0)).collect();
                (micro, nu)
            }
        }
    };
    if let Some(i) = nu.iter().position(|v: &f64| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(MediumRealization { spec: spec.clone(), dz, nu, micro, rank })
}

/// v₁, v₂, v₃ on the slab grid (n_slabs + 1 points starting at 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VTriple {
    pub dz: f64,
    pub omega: f64,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v3: Vec<f64>,
}

/// Cumulative integrals of ν^ε against 1, cos(2ωz/ε^τ), sin(2ωz/ε^τ).
///
/// ν^ε is piecewise constant, so each slab integral is evaluated exactly.
pub fn v_triple(real: &MediumRealization, omega: f64) -> Result<VTriple> {
    let et = real.spec.epsilon.powf(real.spec.tau);
    let dz = real.dz;
    if omega.abs() * dz / et > std::f64::consts::PI / 8.0 {
        return Err(Error::Integration(format!(
            "phase under-resolved: ω·Δz/ε^τ = {:.4} > π/8; refine the slab grid",
            omega.abs() * dz / et
        )));
    }
    let n = real.n_slabs();
    let mut v1 = Vec::with_capacity(n + 1);
    let mut v2 = Vec::with_capacity(n + 1);
    let mut v3 = Vec::with_capacity(n + 1);
    let (mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0);
    v1.push(0.0);
    v2.push(0.0);
    v3.push(0.0);
    let k = 2.0 * omega / et;
    for (j, &nu) in real.nu.iter().enumerate() {
        let z0 = j as f64 * dz;
        let z1 = z0 + dz;
        a1 += nu * dz;
        if omega == 0.0 {
            a2 += nu * dz;
        } else {
            a2 += nu * ((k * z1).sin() - (k * z0).sin()) / k;
            a3 += nu * ((k * z0).cos() - (k * z1).cos()) / k;
        }
        v1.push(a1);
        v2.push(a2);
        v3.push(a3);
    }
    Ok(VTriple { dz, omega, v1, v2, v3 })
}

// ---------------------------------------------------------------------------
// Covariance assumption diagnostics
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    /// Separation in slabs.
    pub lag: usize,
    /// Macroscopic separation |z₁ − z₂|.
    pub distance: f64,
    pub empirical: f64,
    pub se: f64,
    pub target: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub status: DiagnosticStatus,
    pub max_rel_deviation: f64,
    pub delta: f64,
    pub n_pairs: usize,
    pub rows: Vec<LagRow>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct A2Options {
    pub delta: f64,
    pub lambda: f64,
    /// Minimum separation in units of ε^λ.
    pub z_delta: f64,
    pub min_pairs: usize,
    pub n_lags: usize,
}

impl Default for A2Options {
    fn default() -> Self {
        Self { delta: 0.3, lambda: 2.0, z_delta: 10.0, min_pairs: 1000, n_lags: 12 }
    }
}

/// Per-realization mean of ν_i ν_{i+l} (centered medium) for each lag.
fn lag_products(ensemble: &[MediumRealization], lags: &[usize]) -> Vec<Vec<f64>> {
    ensemble
        .iter()
        .map(|r| {
            lags.iter()
                .map(|&l| {
                    let cnt = r.nu.len() - l;
                    (0..cnt).map(|i| r.nu[i] * r.nu[i + l]).sum::<f64>() / cnt as f64
                })
                .collect()
        })
        .collect()
}

fn check_ensemble(ensemble: &[MediumRealization], min: usize) -> Result<()> {
    if ensemble.len() < min {
        return Err(Error::Insufficient(format!("ensemble of {} realizations, need at least {min}", ensemble.len())));
    }
    let n = ensemble[0].n_slabs();
    if ensemble.iter().any(|r| r.n_slabs() != n || r.dz != ensemble[0].dz) {
        return Err(Error::GridMismatch("realizations have different slab grids".into()));
    }
    Ok(())
}

/// Default prefactor J(K)²/K!·R(h̃(z₁), h̃(z₂))^K and exponent h(z₁)+h(z₂)−2.
fn default_target(spec: &MediumSpec) -> Result<Option<impl Fn(f64, f64, f64) -> f64>> {
    let Some(h) = spec.h_profile()? else { return Ok(None) };
    let Some(herm) = spec.hermite()? else { return Ok(None) };
    let k = herm.rank;
    let pref = herm.j(k).powi(2) / factorial(k);
    Ok(Some(move |z1: f64, z2: f64, d: f64| {
        let (h1, h2) = (h.eval(z1), h.eval(z2));
        let r = asymptotic_r(field_index(h1, k), field_index(h2, k)).unwrap_or(f64::NAN);
        pref * r.powi(k as i32) * d.powf(h1 + h2 - 2.0)
    }))
}

/// Empirical check of E[ν^ε(z₁)ν^ε(z₂)] ≈ R(z₁,z₂)|z₁−z₂|^{−γ(z₁,z₂)} for
/// separations above ε^λ·z_δ. `r_estimate(z₁, z₂, d)` overrides the target.
pub fn check_a2(
    ensemble: &[MediumRealization],
    r_estimate: Option<&dyn Fn(f64, f64, f64) -> f64>,
    opts: &A2Options,
) -> Result<A2Report> {
    check_ensemble(ensemble, 2)?;
    let first = &ensemble[0];
    let eps = first.spec.epsilon;
    let n = first.n_slabs();
    let dz = first.dz;
    let lag_min = ((eps.powf(opts.lambda) * opts.z_delta) / dz).ceil().max(1.0) as usize;
    let lag_max = n / 4;
    let inconclusive = |note: String, rows: Vec<LagRow>, n_pairs| A2Report {
        status: DiagnosticStatus::Inconclusive,
        max_rel_deviation: f64::NAN,
        delta: opts.delta,
        n_pairs,
        rows,
        note,
    };
    if lag_min > lag_max {
        return Ok(inconclusive("no admissible separations on this grid".into(), vec![], 0));
    }
    let mut lags: Vec<usize> = (0..opts.n_lags)
        .map(|i| {
            let f = if opts.n_lags > 1 { i as f64 / (opts.n_lags - 1) as f64 } else { 0.0 };
            ((lag_min as f64).ln() + f * ((lag_max as f64).ln() - (lag_min as f64).ln())).exp().round() as usize
        })
        .collect();
    lags.dedup();
    let n_pairs: usize = lags.iter().map(|l| (n - l) * ensemble.len()).sum();
    let default = default_target(&first.spec)?;
    let target_fn: Box<dyn Fn(f64, f64, f64) -> f64> = match (r_estimate, default) {
        (Some(f), _) => Box::new(f),
        (None, Some(f)) => Box::new(f),
        (None, None) => return Ok(inconclusive("no covariance target for this medium".into(), vec![], n_pairs)),
    };
    if n_pairs < opts.min_pairs {
        return Ok(inconclusive(format!("only {n_pairs} pairs, need {}", opts.min_pairs), vec![], n_pairs));
    }
    let prods = lag_products(ensemble, &lags);
    let m = ensemble.len() as f64;
    let mut rows = Vec::new();
    for (k, &l) in lags.iter().enumerate() {
        let v: Vec<f64> = prods.iter().map(|p| p[k]).collect();
        let emp = mean(&v);
        let se = std_dev(&v) / m.sqrt();
        let d = l as f64 * dz;
        // Average the target over the same position pairs (matters for varying profiles).
        let stride = ((n - l) / 64).max(1);
        let pts: Vec<f64> = (0..n - l)
            .step_by(stride)
            .map(|i| target_fn((i as f64 + 0.5) * dz, (i as f64 + l as f64 + 0.5) * dz, d))
            .collect();
        let target = mean(&pts);
        let ok = (emp - target).abs() <= opts.delta * target.abs() + 3.0 * se;
        rows.push(LagRow { lag: l, distance: d, empirical: emp, se, target, ok });
    }
    let all_zero = rows.iter().all(|r| r.empirical == 0.0 && r.se == 0.0);
    let target_zero = rows.iter().all(|r| r.target == 0.0);
    if all_zero || target_zero {
        return Ok(inconclusive("zero covariance: nothing to compare".into(), rows, n_pairs));
    }
    let max_rel = rows
        .iter()
        .map(|r| (r.empirical - r.target).abs() / r.target.abs())
        .fold(0.0, f64::max);
    let status = if rows.iter().all(|r| r.ok) { DiagnosticStatus::Pass } else { DiagnosticStatus::Fail };
    Ok(A2Report { status, max_rel_deviation: max_rel, delta: opts.delta, n_pairs, rows, note: String::new() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovPoint {
    pub distance: f64,
    pub cov: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A3Report {
    pub status: DiagnosticStatus,
    /// Fitted bound |cov| ≤ C_ρ d^{−γ_ρ}.
    pub c_rho: f64,
    pub gamma_rho: f64,
    pub violations: usize,
    pub points: Vec<CovPoint>,
    pub note: String,
}

/// Short-separation bound |E[ν^ε(z₁)ν^ε(z₂)]| ≤ C_ρ|z₁−z₂|^{−γ_ρ} for
/// |z₁ − z₂| < ε^λ ρ, with γ_ρ ∈ (0,1) required (integrable singularity).
pub fn check_a3(ensemble: &[MediumRealization], lambda: f64, rho: f64) -> Result<A3Report> {
    check_ensemble(ensemble, 2)?;
    let first = &ensemble[0];
    let dz = first.dz;
    let limit = first.spec.epsilon.powf(lambda) * rho;
    let lag_max = (((limit / dz).ceil() as usize).saturating_sub(1)).min(first.n_slabs() / 4);
    let lags: Vec<usize> = (1..=lag_max).collect();
    if lags.len() < 3 {
        return Ok(A3Report {
            status: DiagnosticStatus::Inconclusive,
            c_rho: f64::NAN,
            gamma_rho: f64::NAN,
            violations: 0,
            points: vec![],
            note: format!("only {} separations below ε^λρ", lags.len()),
        });
    }
    let prods = lag_products(ensemble, &lags);
    let m = ensemble.len() as f64;
    let points: Vec<CovPoint> = lags
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let v: Vec<f64> = prods.iter().map(|p| p[k]).collect();
            CovPoint { distance: l as f64 * dz, cov: mean(&v), se: std_dev(&v) / m.sqrt() }
        })
        .collect();
    Ok(check_a3_points(points))
}

/// The A3 fit on an explicit covariance table.
pub fn check_a3_points(points: Vec<CovPoint>) -> A3Report {
    let usable: Vec<&CovPoint> = points.iter().filter(|p| p.cov.abs() > 3.0 * p.se && p.cov != 0.0).collect();
    if usable.len() < 3 {
        return A3Report {
            status: DiagnosticStatus::Inconclusive,
            c_rho: f64::NAN,
            gamma_rho: f64::NAN,
            violations: 0,
            points,
            note: "covariance indistinguishable from zero".into(),
        };
    }
    let x: Vec<f64> = usable.iter().map(|p| p.distance.ln()).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.cov.abs().ln()).collect();
    let (slope, intercept) = ols(&x, &y);
    let gamma = -slope;
    let c_fit = intercept.exp();
    let violations = points
        .iter()
        .filter(|p| p.cov.abs() - 3.0 * p.se > 1.5 * c_fit * p.distance.powf(-gamma))
        .count();
    let c_rho = points
        .iter()
        .map(|p| p.cov.abs() * p.distance.powf(gamma))
        .fold(0.0, f64::max);
    let ok = gamma > 0.0 && gamma < 1.0 && violations == 0;
    A3Report {
        status: if ok { DiagnosticStatus::Pass } else { DiagnosticStatus::Fail },
        c_rho,
        gamma_rho: gamma,
        violations,
        points,
        note: if ok {
            String::new()
        } else if !(gamma > 0.0 && gamma < 1.0) {
            format!("fitted exponent {gamma:.3} outside (0, 1)")
        } else {
            format!("{violations} separations exceed the fitted bound")
        },
    }
}

/// Validates a field index for the medium (exposed for configuration checks).
pub fn check_field_index(h: f64, k: usize) -> Result<()> {
    check_open(field_index(h, k), 0.5, 1.0, "field index h̃_K")
}
