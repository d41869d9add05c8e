//! Mode runners. Each runner writes its artifacts through [`Output`], which
//! records a digest per file for the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use lrwave_core::hermite::GaussHermite;
use lrwave_core::io::{columns_csv, pulse_csv, to_json, trajectory_csv, write_text};
use lrwave_core::limits::{hermite_covariance, sh_covariance, LimitKind, LimitSpec, ShQuadSpec};
use lrwave_core::medium::{build_medium, check_a2, v_triple, MediumModel, MediumRealization, MediumSpec};
use lrwave_core::propagator::{spectrum, FrequencyGrid, Spectrum};
use lrwave_core::pulse::{
    moments, pulse_distance, reflected_pulse, theory_longrange, theory_shortrange, transmitted_pulse, PulseTrace,
    SourcePulse,
};
use lrwave_core::rng::derive;
use lrwave_core::stats::{correlation, median};
use lrwave_core::verify::{self, front_width2, increasing_profile, periodic_profile, CriterionReport, FRONT_WINDOW};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, LimitsConfig, Mode};
use crate::manifest::{Artifact, RunManifest, MANIFEST_NAME};

/// Artifact writer rooted at the output directory.
pub struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Output {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), artifacts: Vec::new() }
    }

    pub fn write(&mut self, rel: &str, text: &str) -> anyhow::Result<()> {
        let path = self.dir.join(rel);
        write_text(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(Artifact::from_bytes(rel, text.as_bytes()));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> anyhow::Result<()> {
        self.write(rel, &to_json(value)?)
    }
}

/// Result of a run: the manifest, plus whether verify mode saw a failure.
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub verify_failed: bool,
}

type Steps = BTreeMap<String, u64>;

/// Execute `cfg` (already validated) and write its artifacts and manifest.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<RunOutcome> {
    let start = Instant::now();
    let mut out = Output::new(&cfg.out);
    let mut steps = Steps::new();
    let mut verify_failed = false;
    match cfg.mode {
        Mode::Synth => synth(cfg, &mut out, &mut steps)?,
        Mode::Propagate => propagate(cfg, &mut out, &mut steps)?,
        Mode::Sweep => sweep(cfg, &mut out, &mut steps)?,
        Mode::Limits => limits(cfg, &mut out, &mut steps)?,
        Mode::Verify => verify_failed = verify_mode(cfg, &mut out, &mut steps)?,
    }
    let mut artifacts = out.artifacts.clone();
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        tool: "lrwave".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        artifacts,
        wall_seconds: start.elapsed().as_secs_f64(),
        steps,
    };
    write_text(&cfg.out.join(MANIFEST_NAME), &to_json(&manifest)?)?;
    Ok(RunOutcome { manifest, verify_failed })
}

fn realization_spec(template: &MediumSpec, base_seed: u64, i: u64) -> MediumSpec {
    let mut spec = template.clone();
    spec.seed = derive(base_seed, i);
    spec
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SynthRecord {
    index: u64,
    seed: u64,
    n_slabs: usize,
    dz: f64,
    rank: usize,
    v1_end: f64,
}

#[derive(Serialize)]
struct SynthReport {
    realizations: Vec<SynthRecord>,
    /// Covariance-assumption check over the ensemble, when it applies.
    a2: Option<lrwave_core::medium::A2Report>,
    a2_note: Option<String>,
}

fn synth(cfg: &ExperimentConfig, out: &mut Output, steps: &mut Steps) -> anyhow::Result<()> {
    let template = cfg.medium()?;
    let n = cfg.ensemble.n_realizations as u64;
    let media = (0..n)
        .into_par_iter()
        .map(|i| build_medium(&realization_spec(template, cfg.ensemble.base_seed, i)))
        .collect::<lrwave_core::Result<Vec<MediumRealization>>>()?;
    let mut records = Vec::new();
    for (i, med) in media.iter().enumerate() {
        let z = med.z_grid();
        let mid: Vec<f64> = z.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        out.write(&format!("medium_{i:04}.csv"), &columns_csv(&["z", "nu"], &[&mid, &med.nu])?)?;
        let v = v_triple(med, 0.0)?;
        out.write(&format!("v1_{i:04}.csv"), &columns_csv(&["z", "v1"], &[&z, &v.v1])?)?;
        records.push(SynthRecord {
            index: i as u64,
            seed: med.spec.seed,
            n_slabs: med.n_slabs(),
            dz: med.dz,
            rank: med.rank,
            v1_end: v.v1[v.v1.len() - 1],
        });
    }
    let (a2, a2_note) = if matches!(template.model, MediumModel::LongRange { .. }) && media.len() >= 2 {
        match check_a2(&media, None, &cfg.tolerances.a2) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("covariance check needs a long-range medium and at least two realizations".into()))
    };
    out.json("synth_report.json", &SynthReport { realizations: records, a2, a2_note })?;
    steps.insert("realizations".into(), n);
    steps.insert("slabs".into(), media.iter().map(|m| m.n_slabs() as u64).sum());
    Ok(())
}

// ---------------------------------------------------------------------------
// propagate
// ---------------------------------------------------------------------------

fn frequency_grid(cfg: &ExperimentConfig, f: &SourcePulse) -> anyhow::Result<FrequencyGrid> {
    let band = f.frequency_grid();
    Ok(match cfg.frequency.k_max {
        Some(k) => FrequencyGrid::new(band.window, band.n, k)?,
        None => band,
    })
}

/// Effective σ for the short-range limit: σ² = ∫₀^∞ E[ν(0)ν(z)]dz = Var(T(σ_ν X))/2
/// for independent unit micro slabs.
fn shortrange_sigma(spec: &MediumSpec, sigma_nu: f64) -> f64 {
    let gh = GaussHermite::new(64);
    let m1 = gh.expect(|x| spec.truncation.eval(sigma_nu * x));
    let m2 = gh.expect(|x| spec.truncation.eval(sigma_nu * x).powi(2));
    ((m2 - m1 * m1).max(0.0) / 2.0).sqrt()
}

struct Propagated {
    spectrum: Spectrum,
    transmitted: PulseTrace,
    reflected: PulseTrace,
    theory: PulseTrace,
    v1_end: f64,
    substeps: u64,
}

fn propagate_one(spec: &MediumSpec, f: &SourcePulse, grid: &FrequencyGrid) -> anyhow::Result<Propagated> {
    let med = build_medium(spec)?;
    let v = v_triple(&med, 0.0)?;
    let v1_end = v.v1[v.v1.len() - 1];
    let sp = spectrum(&med, grid)?;
    let mut transmitted = transmitted_pulse(&sp, f)?;
    let mut reflected = reflected_pulse(&sp, f)?;
    transmitted.realization = Some(spec.seed);
    reflected.realization = Some(spec.seed);
    let theory = match spec.model {
        MediumModel::LongRange { .. } => theory_longrange(f, v1_end)?,
        MediumModel::ShortRange { sigma_nu } => theory_shortrange(f, shortrange_sigma(spec, sigma_nu), spec.depth, 0.0)?,
    };
    let et = spec.epsilon.powf(spec.tau);
    let substeps: u64 = grid
        .omegas()
        .iter()
        .map(|w| ((w.abs() * med.dz / et) / lrwave_core::propagator::MAX_PHASE_STEP).ceil().max(1.0) as u64)
        .sum::<u64>()
        * med.n_slabs() as u64;
    Ok(Propagated { spectrum: sp, transmitted, reflected, theory, v1_end, substeps })
}

#[derive(Serialize)]
struct PropagateRecord {
    index: u64,
    seed: u64,
    l2_to_theory: f64,
    sup_to_theory: f64,
    best_shift: f64,
    v1_half: f64,
    det_drift: f64,
}

fn propagate(cfg: &ExperimentConfig, out: &mut Output, steps: &mut Steps) -> anyhow::Result<()> {
    let template = cfg.medium()?;
    let f = SourcePulse::new(&cfg.source)?;
    let grid = frequency_grid(cfg, &f)?;
    out.write("source.csv", &pulse_csv(&f.trace()))?;
    let n = cfg.ensemble.n_realizations as u64;
    let runs = (0..n)
        .into_par_iter()
        .map(|i| propagate_one(&realization_spec(template, cfg.ensemble.base_seed, i), &f, &grid))
        .collect::<anyhow::Result<Vec<Propagated>>>()?;
    let mut records = Vec::new();
    for (i, p) in runs.iter().enumerate() {
        let omegas = grid.omegas();
        let col = |g: fn(&Complex64) -> f64, v: &[Complex64]| v.iter().map(g).collect::<Vec<f64>>();
        let (tr, ti) = (col(|c| c.re, &p.spectrum.t), col(|c| c.im, &p.spectrum.t));
        let (rr, ri) = (col(|c| c.re, &p.spectrum.r), col(|c| c.im, &p.spectrum.r));
        out.write(
            &format!("spectrum_{i:04}.csv"),
            &columns_csv(&["omega", "t_re", "t_im", "r_re", "r_im"], &[&omegas, &tr, &ti, &rr, &ri])?,
        )?;
        out.write(&format!("transmitted_{i:04}.csv"), &pulse_csv(&p.transmitted))?;
        out.write(&format!("reflected_{i:04}.csv"), &pulse_csv(&p.reflected))?;
        out.write(&format!("theory_{i:04}.csv"), &pulse_csv(&p.theory))?;
        let d = pulse_distance(&p.transmitted, &p.theory)?;
        records.push(PropagateRecord {
            index: i as u64,
            seed: p.transmitted.realization.unwrap_or_default(),
            l2_to_theory: d.l2,
            sup_to_theory: d.sup,
            best_shift: d.best_shift,
            v1_half: 0.5 * p.v1_end,
            det_drift: p.spectrum.det_drift,
        });
    }
    out.json("propagate_records.json", &records)?;
    steps.insert("realizations".into(), n);
    steps.insert("frequencies".into(), n * (grid.k_max as u64 + 1));
    steps.insert("substeps".into(), runs.iter().map(|p| p.substeps).sum());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub n_realizations: usize,
    pub median_l2: f64,
    pub median_width_ratio: f64,
    /// Correlation of the fitted shift with v₁(Z)/2; absent for a single realization.
    pub shift_vs_v1_corr: Option<f64>,
}

fn sweep(cfg: &ExperimentConfig, out: &mut Output, steps: &mut Steps) -> anyhow::Result<()> {
    let template = cfg.medium()?;
    let f = SourcePulse::new(&cfg.source)?;
    let grid = frequency_grid(cfg, &f)?;
    let src = f.trace();
    let half = match moments(&src).variance {
        v if v.is_finite() && v > 0.0 => FRONT_WINDOW * v.sqrt(),
        _ => FRONT_WINDOW,
    };
    let w_src = front_width2(&src, moments(&src).centre, half);
    let n = cfg.ensemble.n_realizations as u64;
    let mut records = Vec::new();
    let mut substeps = 0u64;
    for &eps in &cfg.sweep.epsilons {
        let mut cell = template.clone();
        cell.epsilon = eps;
        // Same seeds in every cell: differences across ε are not sampling noise.
        let rows = (0..n)
            .into_par_iter()
            .map(|i| -> anyhow::Result<(f64, f64, f64, f64, u64)> {
                let p = propagate_one(&realization_spec(&cell, cfg.ensemble.base_seed, i), &f, &grid)?;
                let d = pulse_distance(&p.transmitted, &src)?;
                let ratio = (front_width2(&p.transmitted, d.best_shift, half) / w_src).sqrt();
                Ok((d.l2, ratio, d.best_shift, 0.5 * p.v1_end, p.substeps))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let l2: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let ratio: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let shift: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let v1h: Vec<f64> = rows.iter().map(|r| r.3).collect();
        substeps += rows.iter().map(|r| r.4).sum::<u64>();
        let corr = if rows.len() >= 2 { Some(correlation(&shift, &v1h)).filter(|c| c.is_finite()) } else { None };
        records.push(SweepRecord {
            epsilon: eps,
            n_realizations: rows.len(),
            median_l2: median(&l2),
            median_width_ratio: median(&ratio),
            shift_vs_v1_corr: corr,
        });
    }
    out.json("sweep.json", &records)?;
    steps.insert("cells".into(), cfg.sweep.epsilons.len() as u64);
    steps.insert("realizations".into(), n * cfg.sweep.epsilons.len() as u64);
    steps.insert("substeps".into(), substeps);
    Ok(())
}

// ---------------------------------------------------------------------------
// limits
// ---------------------------------------------------------------------------

/// Trajectory CSVs of S_h for the increasing profile 0.55 + 0.3t and the
/// periodic profile 0.7 + 0.15 sin(4πt). Each file has `limits.n` rows,
/// t = 0 included, so the paths use n − 1 steps on [0, 1].
pub fn emit_figure_data(limits: &LimitsConfig, seed: u64, out: &mut Output) -> anyhow::Result<()> {
    if limits.n == 0 {
        anyhow::bail!("configuration error: limits.n = 0 gives an empty trajectory grid");
    }
    for (name, profile) in [("increasing", increasing_profile()), ("periodic", periodic_profile())] {
        let spec = LimitSpec {
            process: LimitKind::Multifrac { h: profile },
            n: limits.n - 1,
            seed,
            normalization: limits.normalization,
        };
        let path = spec.simulate()?;
        out.write(&format!("figure_{name}.csv"), &trajectory_csv(&path))?;
    }
    Ok(())
}

fn covariance_table(limits: &LimitsConfig, tol: f64) -> anyhow::Result<Option<String>> {
    let g = limits.cov_grid;
    let t: Vec<f64> = (1..=g).map(|i| i as f64 / g as f64).collect();
    let quad = ShQuadSpec { rel_tol: tol, ..ShQuadSpec::default() };
    let cov = |t1: f64, t2: f64| -> anyhow::Result<f64> {
        Ok(match &limits.process {
            LimitKind::Fbm { h } | LimitKind::Hermite { h, .. } => hermite_covariance(*h, t1, t2),
            LimitKind::Multifrac { h } => sh_covariance(h, t1, t2, &quad)?,
            LimitKind::MultifracHermite { .. } => return Err(anyhow::anyhow!("no oracle")),
        })
    };
    if matches!(limits.process, LimitKind::MultifracHermite { .. }) {
        return Ok(None);
    }
    let pairs: Vec<(f64, f64)> = t.iter().flat_map(|&a| t.iter().map(move |&b| (a, b))).collect();
    let values = pairs.par_iter().map(|&(a, b)| cov(a, b)).collect::<anyhow::Result<Vec<f64>>>()?;
    let z1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let z2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(Some(columns_csv(&["t1", "t2", "covariance"], &[&z1, &z2, &values])?))
}

fn limits(cfg: &ExperimentConfig, out: &mut Output, steps: &mut Steps) -> anyhow::Result<()> {
    let l = cfg.limits()?;
    let spec = LimitSpec {
        process: l.process.clone(),
        n: l.n,
        seed: cfg.ensemble.base_seed,
        normalization: l.normalization,
    };
    let paths = spec.ensemble(cfg.ensemble.n_realizations)?;
    for (i, p) in paths.iter().enumerate() {
        out.write(&format!("limit_{i:04}.csv"), &trajectory_csv(p))?;
    }
    if let Some(table) = covariance_table(l, cfg.tolerances.sh_quadrature)? {
        out.write("covariance_oracle.csv", &table)?;
    }
    if l.figures {
        emit_figure_data(l, cfg.ensemble.base_seed, out)?;
    }
    steps.insert("paths".into(), paths.len() as u64);
    steps.insert("points".into(), paths.iter().map(|p| p.len() as u64).sum());
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    criteria: Vec<CriterionReport>,
}

fn verify_mode(cfg: &ExperimentConfig, out: &mut Output, steps: &mut Steps) -> anyhow::Result<bool> {
    let ids: Vec<usize> = if cfg.verify.criteria.is_empty() {
        verify::CRITERIA.iter().map(|c| c.id).collect()
    } else {
        cfg.verify.criteria.clone()
    };
    let mut reports = Vec::new();
    for id in ids {
        let r = verify::run(id).with_context(|| format!("unknown criterion id {id}"))?;
        println!("{}", r.line());
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    steps.insert("criteria".into(), reports.len() as u64);
    out.json("verify_report.json", &VerifyReport { passed, criteria: reports })?;
    Ok(!passed)
}
