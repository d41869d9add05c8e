//! Estimators and Monte Carlo summaries: covariances with error bars,
//! aggregated-variance Hurst estimation (global and local), dyadic
//! p-variation sums and bootstrap confidence intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bootstrap standard error (0 when no resampling was done).
    pub se: f64,
    pub method: String,
    pub n: usize,
    /// Set when the estimate sits at the edge of its admissible range.
    #[serde(default)]
    pub boundary: bool,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample skewness m₃/m₂^{3/2} (biased moment form).
pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ordinary least-squares slope and intercept of y on x.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

// ---------------------------------------------------------------------------
// Covariances
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovTable {
    pub entries: Vec<CovEntry>,
    pub n_realizations: usize,
}

/// Unbiased cross-time covariance Cov[X(t_i), X(t_j)] across an ensemble,
/// with jackknife (leave-one-realization-out) standard errors.
pub fn empirical_cov(ensemble: &[Trajectory], pairs: &[(usize, usize)]) -> Result<CovTable> {
    let m = ensemble.len();
    if m < 3 {
        return Err(Error::Insufficient(format!("need at least 3 trajectories, got {m}")));
    }
    let first = &ensemble[0];
    if ensemble.iter().any(|t| !t.same_grid(first)) {
        return Err(Error::GridMismatch("ensemble trajectories are on different grids".into()));
    }
    let mf = m as f64;
    let mut entries = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i >= first.len() || j >= first.len() {
            return Err(Error::GridMismatch(format!("index pair ({i}, {j}) outside grid of {}", first.len())));
        }
        let x: Vec<f64> = ensemble.iter().map(|t| t.values[i]).collect();
        let y: Vec<f64> = ensemble.iter().map(|t| t.values[j]).collect();
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let value = (sxy - sx * sy / mf) / (mf - 1.0);
        let loo: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| {
                let n1 = mf - 1.0;
                (sxy - a * b - (sx - a) * (sy - b) / n1) / (n1 - 1.0)
            })
            .collect();
        let lm = mean(&loo);
        let se = ((mf - 1.0) / mf * loo.iter().map(|c| (c - lm) * (c - lm)).sum::<f64>()).sqrt();
        entries.push(CovEntry { i, j, value, se });
    }
    Ok(CovTable { entries, n_realizations: m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagCov {
    pub lag: usize,
    pub value: f64,
    pub se: f64,
}

/// Stationary lag covariance pooled over time within each path, then
/// averaged over paths; the error bar is the between-path standard error.
/// `known_mean` skips mean estimation (e.g. centered synthetic noise).
pub fn pooled_lag_cov(paths: &[Vec<f64>], lags: &[usize], known_mean: Option<f64>) -> Result<Vec<LagCov>> {
    if paths.len() < 2 {
        return Err(Error::Insufficient("need at least 2 paths".into()));
    }
    let n = paths[0].len();
    if paths.iter().any(|p| p.len() != n) {
        return Err(Error::GridMismatch("paths have different lengths".into()));
    }
    let per_path: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| {
            let mu = known_mean.unwrap_or_else(|| mean(p));
            lags.iter()
                .map(|&l| {
                    let cnt = n - l;
                    (0..cnt).map(|t| (p[t] - mu) * (p[t + l] - mu)).sum::<f64>() / cnt as f64
                })
                .collect()
        })
        .collect();
    let m = paths.len() as f64;
    Ok(lags
        .iter()
        .enumerate()
        .map(|(k, &lag)| {
            let v: Vec<f64> = per_path.iter().map(|r| r[k]).collect();
            LagCov { lag, value: mean(&v), se: std_dev(&v) / m.sqrt() }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Hurst estimation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HurstOptions {
    pub bootstrap: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for HurstOptions {
    fn default() -> Self {
        Self { bootstrap: 1000, level: 0.95, seed: 0 }
    }
}

/// log V(2^j) for j in [2, log2(n) − 4], V(m) = mean of squared overlapping m-increments.
fn aggregated_log_variances(path: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = path.len();
    let jmax = (n as f64).log2().floor() as usize - 4;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 2..=jmax {
        let m = 1usize << j;
        let cnt = n - m;
        let v = (0..cnt).map(|i| (path[i + m] - path[i]).powi(2)).sum::<f64>() / cnt as f64;
        xs.push(j as f64 * std::f64::consts::LN_2);
        ys.push(v.ln());
    }
    (xs, ys)
}

fn hurst_point(path: &[f64]) -> f64 {
    let (x, y) = aggregated_log_variances(path);
    0.5 * ols(&x, &y).0
}

fn hurst_on(path: &[f64], min_len: usize, opts: &HurstOptions, method: &str) -> Result<EstimateWithCI> {
    let n = path.len();
    if n < min_len {
        return Err(Error::Insufficient(format!("Hurst estimation needs at least {min_len} samples, got {n}")));
    }
    let value = hurst_point(path);
    if !value.is_finite() {
        return Err(Error::Domain("degenerate path (constant) has no Hurst index".into()));
    }
    let incr: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
    let block = (n / 16).max(16).min(incr.len());
    let starts = incr.len() - block + 1;
    let reps: Vec<f64> = (0..opts.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(opts.seed, b as u64);
            let mut p = Vec::with_capacity(n);
            p.push(0.0);
            let mut acc = 0.0;
            while p.len() < n {
                let s = rng.random_range(0..starts);
                for &d in &incr[s..s + block] {
                    if p.len() == n {
                        break;
                    }
                    acc += d;
                    p.push(acc);
                }
            }
            hurst_point(&p)
        })
        .collect();
    let (lo, hi, se) = percentile_ci(&reps, opts.level, value);
    Ok(EstimateWithCI {
        value,
        ci_low: lo,
        ci_high: hi,
        se,
        method: method.into(),
        n,
        boundary: !(0.01..0.99).contains(&value),
    })
}

/// Aggregated-variance Hurst estimate with a moving-block bootstrap CI.
pub fn hurst_estimate(traj: &Trajectory) -> Result<EstimateWithCI> {
    hurst_estimate_with(traj, &HurstOptions::default())
}

pub fn hurst_estimate_with(traj: &Trajectory, opts: &HurstOptions) -> Result<EstimateWithCI> {
    hurst_on(&traj.values, 1 << 10, opts, "aggregated-variance")
}

/// Hurst estimate restricted to `window` samples centered at time `t0`.
pub fn local_hurst(traj: &Trajectory, t0: f64, window: usize) -> Result<EstimateWithCI> {
    local_hurst_with(traj, t0, window, &HurstOptions::default())
}

pub fn local_hurst_with(traj: &Trajectory, t0: f64, window: usize, opts: &HurstOptions) -> Result<EstimateWithCI> {
    if window < 1 << 8 {
        return Err(Error::Insufficient(format!("window of {window} samples is below the minimum 256")));
    }
    if window > traj.len() {
        return Err(Error::Window(format!("window {window} exceeds path length {}", traj.len())));
    }
    let c = ((t0 - traj.t0) / traj.dt).round();
    if !(c >= 0.0 && c <= (traj.len() - 1) as f64) {
        return Err(Error::Window(format!("t0 = {t0} is outside the grid")));
    }
    let start = (c as isize - window as isize / 2).clamp(0, (traj.len() - window) as isize) as usize;
    hurst_on(&traj.values[start..start + window], 1 << 8, opts, "aggregated-variance-local")
}

// ---------------------------------------------------------------------------
// p-variation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PVariationReport {
    pub p: f64,
    pub depth: usize,
    /// S_n(p) for n = 0..=depth.
    pub dyadic_sums: Vec<f64>,
    pub weight_exponent: f64,
    /// Σ_n max(n,1)^c S_n(p).
    pub weighted_bound: f64,
    /// OLS slope of log₂ S_n(p) against n over the deeper half of the levels.
    pub trend_slope: f64,
    /// Finite p-variation indicator: the deep-level trend is not increasing.
    pub bounded: bool,
}

/// Dyadic sums S_n(p) = Σ_k |w(k/2^n) − w((k−1)/2^n)|^p over the trajectory's span.
pub fn dyadic_p_variation(traj: &Trajectory, p: f64, max_depth: usize, weight_exponent: f64) -> Result<PVariationReport> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must be at least 1, got {p}")));
    }
    let intervals = traj.len().saturating_sub(1);
    if max_depth >= usize::BITS as usize - 1 || intervals < (1usize << max_depth) || !intervals.is_multiple_of(1usize << max_depth) {
        return Err(Error::Domain(format!(
            "depth {max_depth} exceeds the resolution of a path with {intervals} intervals"
        )));
    }
    let w = &traj.values;
    let mut sums = Vec::with_capacity(max_depth + 1);
    for n in 0..=max_depth {
        let stride = intervals >> n;
        let s: f64 = (1..=(1usize << n)).map(|k| (w[k * stride] - w[(k - 1) * stride]).abs().powf(p)).sum();
        sums.push(s);
    }
    let weighted_bound = sums
        .iter()
        .enumerate()
        .map(|(n, s)| (n.max(1) as f64).powf(weight_exponent) * s)
        .sum();
    let lo = (max_depth / 2).max(1).min(max_depth.saturating_sub(1));
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=max_depth)
        .filter(|&n| sums[n] > 0.0)
        .map(|n| (n as f64, sums[n].log2()))
        .unzip();
    let trend_slope = if xs.len() >= 2 { ols(&xs, &ys).0 } else { 0.0 };
    Ok(PVariationReport {
        p,
        depth: max_depth,
        dyadic_sums: sums,
        weight_exponent,
        weighted_bound,
        trend_slope,
        bounded: trend_slope <= 0.0,
    })
}

// ---------------------------------------------------------------------------
// Bootstrap aggregation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Median,
    Variance,
    Skewness,
}

impl Statistic {
    pub fn apply(self, x: &[f64]) -> f64 {
        match self {
            Statistic::Mean => mean(x),
            Statistic::Median => median(x),
            Statistic::Variance => variance(x),
            Statistic::Skewness => skewness(x),
        }
    }
}

/// Percentile CI, widened if needed so it contains `value`; also the bootstrap SE.
fn percentile_ci(reps: &[f64], level: f64, value: f64) -> (f64, f64, f64) {
    if reps.is_empty() {
        return (value, value, 0.0);
    }
    let mut v = reps.to_vec();
    v.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    let q = |a: f64| {
        let pos = a * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        if i + 1 < v.len() {
            v[i] * (1.0 - f) + v[i + 1] * f
        } else {
            v[i]
        }
    };
    let se = if v.len() > 1 { std_dev(&v) } else { 0.0 };
    (q(alpha).min(value), q(1.0 - alpha).max(value), se)
}

/// Percentile-bootstrap CI of `statistic` over per-realization records.
pub fn mc_aggregate(records: &[f64], statistic: Statistic, level: f64, resamples: usize, seed: u64) -> Result<EstimateWithCI> {
    if records.is_empty() {
        return Err(Error::Insufficient("no records to aggregate".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level {level} outside (0, 1)")));
    }
    let value = statistic.apply(records);
    let n = records.len();
    let reps: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let sample: Vec<f64> = (0..n).map(|_| records[rng.random_range(0..n)]).collect();
            statistic.apply(&sample)
        })
        .collect();
    let (lo, hi, se) = percentile_ci(&reps, level, value);
    Ok(EstimateWithCI {
        value,
        ci_low: lo,
        ci_high: hi,
        se,
        method: format!("bootstrap-{statistic:?}").to_lowercase(),
        n,
        boundary: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptive_statistics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert!((variance(&x) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&x), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!(skewness(&x).abs() < 1e-15);
        let (s, c) = ols(&x, &[3.0, 5.0, 7.0, 9.0]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ramp_p_variation_is_geometric() {
        let n = 1 << 8;
        let t = Trajectory::new(0.0, 1.0 / n as f64, (0..=n).map(|i| i as f64 / n as f64).collect(), "ramp", 0).unwrap();
        let r = dyadic_p_variation(&t, 1.5, 8, 2.0).unwrap();
        for (k, s) in r.dyadic_sums.iter().enumerate() {
            assert!((s - 2f64.powf(k as f64 * (1.0 - 1.5))).abs() < 1e-12);
        }
        assert!(r.bounded);
    }
}
