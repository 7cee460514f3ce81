//! Experiment execution: convergence sweeps, diagnostics, variance tables,
//! residual grids, and norm checks, all deterministic for a fixed config.

use std::time::Instant;

use crate::diagnostics::{
    estimate_c0, lemma_residual, norm_check, variance_scaling, C0Report, NormCheck,
    ResidualReport, VarianceScalingTable,
};
use crate::ensembles::{sample, EnsembleSpec, Seed};
use crate::error::{Error, Result};
use crate::harness::cache;
use crate::harness::config::{Experiment, ExperimentConfig};
use crate::mp_law::{ComplexPoint, MpLaw};
use crate::parallel;
use crate::rng::derive_key;
use crate::spectral_stats::{average_esd, kolmogorov_distance, SpectralSample};

/// Sub-master for the trials of one (n, beta) experiment unit.
fn unit_master(master_seed: u64, spec: &EnsembleSpec) -> u64 {
    derive_key(master_seed, &[spec.n as u64, spec.beta as u64])
}

/// One sweep row: distances of single-trial ESDs and of the trial-averaged
/// ESD against the reference law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub cols: usize,
    pub trials: u64,
    pub kdist_mean_single: f64,
    pub kdist_of_average: f64,
    /// Standard error of the single-trial distance mean.
    pub se: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per-n failures (capacity or numerical), surfaced without aborting the
    /// remaining row counts.
    pub failures: Vec<(usize, String)>,
}

fn decompose_trial(
    cfg: &ExperimentConfig,
    spec: &EnsembleSpec,
    seed: Seed,
) -> Result<SpectralSample> {
    if let Some(dir) = &cfg.cache_dir {
        if let Some(hit) = cache::load(dir, spec, seed)? {
            return Ok(hit);
        }
        let s = SpectralSample::from_matrix_sample(&sample(spec, seed)?)?;
        cache::store(dir, &s)?;
        return Ok(s);
    }
    SpectralSample::from_matrix_sample(&sample(spec, seed)?)
}

/// Runs the convergence sweep: for each n, draws `trials` samples, computes
/// per-trial Kolmogorov distances and the distance of the averaged ESD to the
/// configured reference law.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let law = MpLaw::new(cfg.aspect_f64())?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &cfg.n_list {
        let start = Instant::now();
        let attempt = (|| -> Result<SweepRow> {
            let spec = cfg.spec_at(n)?;
            let master = unit_master(cfg.master_seed, &spec);
            let samples = parallel::map_ordered(cfg.trials, |t| {
                decompose_trial(cfg, &spec, Seed::new(master, t))
            })?;
            let singles: Vec<f64> = samples
                .iter()
                .map(|s| kolmogorov_distance(&s.esd(), &law))
                .collect();
            let t = cfg.trials as f64;
            let mean = singles.iter().sum::<f64>() / t;
            let se = if cfg.trials >= 2 {
                let var =
                    singles.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1.0);
                (var / t).sqrt()
            } else {
                0.0
            };
            let pooled = average_esd(&samples)?;
            Ok(SweepRow {
                n,
                cols: spec.cols(),
                trials: cfg.trials,
                kdist_mean_single: mean,
                kdist_of_average: kolmogorov_distance(&pooled, &law),
                se,
                wall_time_s: 0.0,
            })
        })();
        match attempt {
            Ok(mut row) => {
                row.wall_time_s = start.elapsed().as_secs_f64();
                rows.push(row);
            }
            Err(e @ (Error::Capacity(_) | Error::Eigensolver { .. } | Error::Convergence { .. })) => {
                failures.push((n, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SweepResult { rows, failures })
}

/// Least-squares fit of `log(kdist_of_average)` against `log(n)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub r2: f64,
}

pub fn rate_fit(result: &SweepResult) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter(|r| r.kdist_of_average > 0.0)
        .map(|r| ((r.n as f64).ln(), r.kdist_of_average.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 rows with positive distances, got {}",
            usable.len()
        )));
    }
    let m = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all rows share the same n".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, r2 })
}

pub fn run_diagnose(cfg: &ExperimentConfig) -> Result<Vec<(usize, C0Report)>> {
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let spec = cfg.spec_at(n)?;
        let report = estimate_c0(&spec, cfg.trials, unit_master(cfg.master_seed, &spec))?;
        out.push((n, report));
    }
    Ok(out)
}

pub fn run_residual(cfg: &ExperimentConfig) -> Result<Vec<(usize, ResidualReport)>> {
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let spec = cfg.spec_at(n)?;
        let report = lemma_residual(
            &spec,
            cfg.trials,
            cfg.alpha,
            cfg.v,
            cfg.points,
            unit_master(cfg.master_seed, &spec),
        )?;
        out.push((n, report));
    }
    Ok(out)
}

pub fn run_varcheck(cfg: &ExperimentConfig) -> Result<VarianceScalingTable> {
    variance_scaling(
        cfg.aspect_num,
        cfg.aspect_den,
        &cfg.n_list,
        &cfg.beta_list,
        ComplexPoint::upper(cfg.z_re, cfg.z_im)?,
        cfg.trials,
        cfg.master_seed,
    )
}

pub fn run_normcheck(cfg: &ExperimentConfig) -> Result<Vec<(usize, NormCheck)>> {
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let spec = cfg.spec_at(n)?;
        let report = norm_check(&spec, cfg.trials, unit_master(cfg.master_seed, &spec))?;
        out.push((n, report));
    }
    Ok(out)
}

/// Dispatches on the configured experiment and returns the emission rows.
pub fn run_to_rows(cfg: &ExperimentConfig) -> Result<(Vec<crate::harness::emit::MetricRow>, Vec<(usize, String)>)> {
    use crate::harness::emit;
    match cfg.experiment {
        Experiment::Sweep => {
            let result = run_sweep(cfg)?;
            Ok((emit::rows_from_sweep(cfg, &result), result.failures))
        }
        Experiment::Diagnose => Ok((emit::rows_from_diagnose(cfg, &run_diagnose(cfg)?), vec![])),
        Experiment::Varcheck => Ok((emit::rows_from_varcheck(cfg, &run_varcheck(cfg)?), vec![])),
        Experiment::Residual => Ok((emit::rows_from_residual(cfg, &run_residual(cfg)?), vec![])),
        Experiment::Normcheck => {
            Ok((emit::rows_from_normcheck(cfg, &run_normcheck(cfg)?), vec![]))
        }
    }
}
