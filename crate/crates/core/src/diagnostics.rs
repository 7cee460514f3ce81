//! Monte Carlo estimation of the dependence-condition quantities, the
//! self-consistency residual of the empirical Stieltjes transform on a grid,
//! and the variance-scaling table for the dependent-row family.

use num_complex::Complex64;

use crate::ensembles::{balanced_row, sample, EnsembleKind, EnsembleSpec, Seed};
use crate::error::{Error, Result};
use crate::linalg::{gram, spectral_norm};
use crate::mp_law::{ComplexPoint, StieltjesGrid};
use crate::parallel;
use crate::rng::{derive_key, Stream};
use crate::spectral_stats::{empirical_stieltjes, SpectralSample};

/// Standard errors attached to a [`C0Report`], one per estimate. All are
/// delta-method values treating panel entries as independent; they are
/// diagnostic scales, not confidence guarantees.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct C0StandardErrors {
    pub q_hat: f64,
    pub pair_corr_sup: f64,
    pub quad_mixed_sup: f64,
    pub rho_hat: f64,
    pub fourth_moment_max: f64,
}

/// Estimated dependence-condition quantities for a row-independent ensemble.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct C0Report {
    /// Estimate of the variance defect `(1/n) sum_i |E[z_i^2] - 1|`.
    pub q_hat: f64,
    /// Largest estimated |pair correlation| over the index panel.
    pub pair_corr_sup: f64,
    /// Largest estimated |distinct-index fourth moment| over the panel.
    pub quad_mixed_sup: f64,
    /// Estimate of `(1/n^2) sum_{i,j} |E[z_i^2 z_j^2] - 1|`.
    pub rho_hat: f64,
    /// Largest estimated fourth moment over the panel columns.
    pub fourth_moment_max: f64,
    pub trials: u64,
    pub standard_errors: C0StandardErrors,
}

/// Number of leading columns the moment panels draw indices from.
const PANEL_COLS: usize = 8;
/// Number of distinct-index 4-tuples in the quad panel.
const QUAD_TUPLES: usize = 20;
/// Side of the subsampled index grid for the rho estimate.
const RHO_GRID: usize = 16;

fn panel_pairs(cols: usize) -> Vec<(usize, usize)> {
    let p = cols.min(PANEL_COLS);
    let mut pairs = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            pairs.push((i, j));
        }
    }
    pairs
}

fn panel_quads(cols: usize) -> Vec<[usize; 4]> {
    let p = cols.min(PANEL_COLS);
    let mut quads = Vec::new();
    if p < 4 {
        return quads;
    }
    'outer: for a in 0..p {
        for b in (a + 1)..p {
            for c in (b + 1)..p {
                for d in (c + 1)..p {
                    quads.push([a, b, c, d]);
                    if quads.len() == QUAD_TUPLES {
                        break 'outer;
                    }
                }
            }
        }
    }
    quads
}

fn rho_indices(cols: usize) -> Vec<usize> {
    let g = cols.min(RHO_GRID);
    let mut idx: Vec<usize> = (0..g)
        .map(|t| {
            if g == 1 {
                0
            } else {
                (t * (cols - 1)) / (g - 1)
            }
        })
        .collect();
    idx.dedup();
    idx
}

struct MomentAccumulator {
    rows: u64,
    cols: usize,
    sq_sum: Vec<f64>,
    quartic_sum: Vec<f64>,
    octic_sum: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    pair_sum: Vec<f64>,
    pair_sq_sum: Vec<f64>,
    quads: Vec<[usize; 4]>,
    quad_sum: Vec<f64>,
    quad_sq_sum: Vec<f64>,
    rho_idx: Vec<usize>,
    rho_sum: Vec<f64>,
    rho_sq_sum: Vec<f64>,
}

impl MomentAccumulator {
    fn new(cols: usize) -> Self {
        let pairs = panel_pairs(cols);
        let quads = panel_quads(cols);
        let rho_idx = rho_indices(cols);
        let rho_cells = rho_idx.len() * rho_idx.len();
        MomentAccumulator {
            rows: 0,
            cols,
            sq_sum: vec![0.0; cols],
            quartic_sum: vec![0.0; cols],
            octic_sum: vec![0.0; cols.min(PANEL_COLS)],
            pair_sum: vec![0.0; pairs.len()],
            pair_sq_sum: vec![0.0; pairs.len()],
            quad_sum: vec![0.0; quads.len()],
            quad_sq_sum: vec![0.0; quads.len()],
            rho_sum: vec![0.0; rho_cells],
            rho_sq_sum: vec![0.0; rho_cells],
            pairs,
            quads,
            rho_idx,
        }
    }

    fn add_row(&mut self, row: &[f64]) {
        self.rows += 1;
        for (i, &x) in row.iter().enumerate() {
            let x2 = x * x;
            self.sq_sum[i] += x2;
            self.quartic_sum[i] += x2 * x2;
            if i < self.octic_sum.len() {
                self.octic_sum[i] += x2 * x2 * x2 * x2;
            }
        }
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let p = row[i] * row[j];
            self.pair_sum[k] += p;
            self.pair_sq_sum[k] += p * p;
        }
        for (k, q) in self.quads.iter().enumerate() {
            let p = row[q[0]] * row[q[1]] * row[q[2]] * row[q[3]];
            self.quad_sum[k] += p;
            self.quad_sq_sum[k] += p * p;
        }
        let g = self.rho_idx.len();
        for (a, &i) in self.rho_idx.iter().enumerate() {
            for (b, &j) in self.rho_idx.iter().enumerate() {
                let p = row[i] * row[i] * row[j] * row[j];
                self.rho_sum[a * g + b] += p;
                self.rho_sq_sum[a * g + b] += p * p;
            }
        }
    }

    fn merge(&mut self, other: &MomentAccumulator) {
        self.rows += other.rows;
        let add = |dst: &mut Vec<f64>, src: &Vec<f64>| {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += s;
            }
        };
        add(&mut self.sq_sum, &other.sq_sum);
        add(&mut self.quartic_sum, &other.quartic_sum);
        add(&mut self.octic_sum, &other.octic_sum);
        add(&mut self.pair_sum, &other.pair_sum);
        add(&mut self.pair_sq_sum, &other.pair_sq_sum);
        add(&mut self.quad_sum, &other.quad_sum);
        add(&mut self.quad_sq_sum, &other.quad_sq_sum);
        add(&mut self.rho_sum, &other.rho_sum);
        add(&mut self.rho_sq_sum, &other.rho_sq_sum);
    }

    fn report(&self, n: usize, trials: u64) -> C0Report {
        let r = self.rows as f64;
        let se_of_mean = |sum: f64, sq_sum: f64| -> f64 {
            if self.rows < 2 {
                return 0.0;
            }
            let mean = sum / r;
            let var = ((sq_sum / r - mean * mean) * r / (r - 1.0)).max(0.0);
            (var / r).sqrt()
        };

        // variance defect: (1/n) sum_i |mean(z_i^2) - 1|
        let mut q = 0.0;
        let mut q_var = 0.0;
        for i in 0..self.cols {
            q += (self.sq_sum[i] / r - 1.0).abs();
            let se = se_of_mean(self.sq_sum[i], self.quartic_sum[i]);
            q_var += se * se;
        }
        let q_hat = q / n as f64;
        let q_se = q_var.sqrt() / n as f64;

        let sup_with_se = |sums: &[f64], sq_sums: &[f64]| -> (f64, f64) {
            let mut best = 0.0;
            let mut best_se = 0.0;
            for (k, &s) in sums.iter().enumerate() {
                let m = (s / r).abs();
                if m >= best {
                    best = m;
                    best_se = se_of_mean(s, sq_sums[k]);
                }
            }
            (best, best_se)
        };
        let (pair_corr_sup, pair_se) = sup_with_se(&self.pair_sum, &self.pair_sq_sum);
        let (quad_mixed_sup, quad_se) = sup_with_se(&self.quad_sum, &self.quad_sq_sum);

        // rho: (N^2/n^2) * average over the subgrid of |mean(z_i^2 z_j^2) - 1|
        let cells = self.rho_sum.len().max(1) as f64;
        let mut rho_avg = 0.0;
        let mut rho_var = 0.0;
        for (k, &s) in self.rho_sum.iter().enumerate() {
            rho_avg += (s / r - 1.0).abs();
            let se = se_of_mean(s, self.rho_sq_sum[k]);
            rho_var += se * se;
        }
        rho_avg /= cells;
        let scale = (self.cols as f64 / n as f64).powi(2);
        let rho_hat = scale * rho_avg;
        let rho_se = scale * rho_var.sqrt() / cells;

        let mut fourth = 0.0;
        let mut fourth_se = 0.0;
        for i in 0..self.octic_sum.len() {
            let m = self.quartic_sum[i] / r;
            if m >= fourth {
                fourth = m;
                fourth_se = se_of_mean(self.quartic_sum[i], self.octic_sum[i]);
            }
        }

        C0Report {
            q_hat,
            pair_corr_sup,
            quad_mixed_sup,
            rho_hat,
            fourth_moment_max: fourth,
            trials,
            standard_errors: C0StandardErrors {
                q_hat: q_se,
                pair_corr_sup: pair_se,
                quad_mixed_sup: quad_se,
                rho_hat: rho_se,
                fourth_moment_max: fourth_se,
            },
        }
    }
}

/// Estimates the dependence-condition quantities over `trials * n` rows.
///
/// Only row-independent kinds are supported: for them the conditional row
/// moments collapse to unconditional ones that plain Monte Carlo can reach.
/// The moving-average family is refused rather than estimated wrongly.
pub fn estimate_c0(spec: &EnsembleSpec, trials: u64, master_seed: u64) -> Result<C0Report> {
    spec.validate()?;
    if !spec.kind.has_independent_rows() {
        return Err(Error::UnsupportedEnsemble(format!(
            "estimate_c0 requires independent rows; {} has dependence range beta = {}",
            spec.kind, spec.beta
        )));
    }
    if trials == 0 {
        return Err(Error::Domain("estimate_c0 needs at least one trial".into()));
    }
    let cols = spec.cols();
    let partials = parallel::map_ordered(trials, |t| {
        let m = sample(spec, Seed::new(master_seed, t))?;
        let mut acc = MomentAccumulator::new(cols);
        for k in 0..spec.n {
            acc.add_row(m.matrix.row(k));
        }
        Ok(acc)
    })?;
    let mut acc = MomentAccumulator::new(cols);
    for p in &partials {
        acc.merge(p);
    }
    Ok(acc.report(spec.n, trials))
}

/// Signed single-panel row moments, estimated over `rows` independently drawn
/// rows: the (0,1) pair product and the (0,1,2,3) quadruple product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMomentsMc {
    pub rows: u64,
    pub pair_mean: f64,
    pub pair_se: f64,
    pub quad_mean: f64,
    pub quad_se: f64,
}

/// Direct row-level Monte Carlo for the signed pair and quadruple moments of
/// a row-independent kind with rows of length `length`.
pub fn row_moments_mc(
    kind: EnsembleKind,
    length: usize,
    rows: u64,
    master_seed: u64,
) -> Result<RowMomentsMc> {
    if !kind.has_independent_rows() {
        return Err(Error::UnsupportedEnsemble(format!(
            "row_moments_mc requires independent rows, got {kind}"
        )));
    }
    if length < 4 {
        return Err(Error::Domain("row_moments_mc needs rows of length >= 4".into()));
    }
    if rows == 0 {
        return Err(Error::Domain("row_moments_mc needs at least one row".into()));
    }
    let mut stream = Stream::new(derive_key(master_seed, &[kind.tag(), length as u64]));
    let mut draw_row = |buf: &mut Vec<f64>| -> Result<()> {
        buf.clear();
        match kind {
            EnsembleKind::IidGaussian => {
                buf.extend((0..length).map(|_| stream.standard_normal()))
            }
            EnsembleKind::IidRademacher => buf.extend((0..length).map(|_| stream.rademacher())),
            EnsembleKind::SumZeroBernoulliRows => {
                buf.extend_from_slice(&balanced_row(length, &mut stream)?)
            }
            EnsembleKind::MovingAverageRows => unreachable!(),
        }
        Ok(())
    };
    let mut pair_sum = 0.0;
    let mut pair_sq = 0.0;
    let mut quad_sum = 0.0;
    let mut quad_sq = 0.0;
    let mut row = Vec::with_capacity(length);
    for _ in 0..rows {
        draw_row(&mut row)?;
        let p = row[0] * row[1];
        let q = row[0] * row[1] * row[2] * row[3];
        pair_sum += p;
        pair_sq += p * p;
        quad_sum += q;
        quad_sq += q * q;
    }
    let r = rows as f64;
    let se = |sum: f64, sq: f64| {
        if rows < 2 {
            return 0.0;
        }
        let mean = sum / r;
        let var = ((sq / r - mean * mean) * r / (r - 1.0)).max(0.0);
        (var / r).sqrt()
    };
    Ok(RowMomentsMc {
        rows,
        pair_mean: pair_sum / r,
        pair_se: se(pair_sum, pair_sq),
        quad_mean: quad_sum / r,
        quad_se: se(quad_sum, quad_sq),
    })
}

/// Self-consistency residual of the trial-averaged empirical Stieltjes
/// transform on a grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub grid: StieltjesGrid,
    /// One residual per grid point, same order as `grid.points`.
    pub residuals: Vec<f64>,
    pub sup_residual: f64,
    /// Largest Monte Carlo standard error of the averaged transform over the
    /// grid; the scale against which residual comparisons should be read.
    pub residual_se: f64,
    pub trials: u64,
}

/// Computes the residual report from already-decomposed samples against the
/// aspect ratio `c_n`.
pub fn residual_from_samples(
    samples: &[SpectralSample],
    c_n: f64,
    grid: &StieltjesGrid,
) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::Domain("residual needs at least one sample".into()));
    }
    let trials = samples.len() as u64;
    let t = trials as f64;
    let mut residuals = Vec::with_capacity(grid.points.len());
    let mut worst_se = 0.0f64;
    for &z in &grid.points {
        let zc = z.as_complex();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sq = 0.0;
        for s in samples {
            let v = empirical_stieltjes(s, z)?;
            sum += v;
            sq += v.norm_sqr();
        }
        let mean = sum / t;
        if trials >= 2 {
            let var = ((sq / t - mean.norm_sqr()) * t / (t - 1.0)).max(0.0);
            worst_se = worst_se.max((var / t).sqrt());
        }
        let mapped = 1.0 / (c_n - 1.0 - zc - zc * mean);
        residuals.push((mean - mapped).norm());
    }
    let sup_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport {
        grid: grid.clone(),
        residuals,
        sup_residual,
        residual_se: worst_se,
        trials,
    })
}

/// Samples `trials` matrices and reports the self-consistency residual of the
/// averaged empirical Stieltjes transform over the grid
/// `u + iv, |u| <= alpha` with `grid_points` points.
pub fn lemma_residual(
    spec: &EnsembleSpec,
    trials: u64,
    alpha: f64,
    v: f64,
    grid_points: usize,
    master_seed: u64,
) -> Result<ResidualReport> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::Domain("residual needs at least one trial".into()));
    }
    let grid = StieltjesGrid::new(alpha, v, grid_points)?;
    let samples = parallel::map_ordered(trials, |t| {
        SpectralSample::from_matrix_sample(&sample(spec, Seed::new(master_seed, t))?)
    })?;
    residual_from_samples(&samples, spec.aspect_f64(), &grid)
}

/// One cell of the variance-scaling table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarianceCell {
    pub n: usize,
    pub beta: usize,
    pub z: ComplexPoint,
    pub trials: u64,
    /// Sample variance of the empirical Stieltjes transform,
    /// var(Re) + var(Im).
    pub var_hat: f64,
    /// `n * var_hat * (Im z)^2 / (beta+1)^2` — the variance as a multiple of
    /// the dependence bound's shape.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarianceScalingTable {
    pub rows: Vec<VarianceCell>,
}

/// Variance of `s_n(z)` for the moving-average family over an (n, beta) grid.
/// Each cell draws its trials from a sub-master derived from
/// `(master_seed, n, beta)`.
pub fn variance_scaling(
    aspect_num: u64,
    aspect_den: u64,
    n_list: &[usize],
    beta_list: &[usize],
    z: ComplexPoint,
    trials: u64,
    master_seed: u64,
) -> Result<VarianceScalingTable> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im z = {} must be positive", z.im)));
    }
    if trials == 0 {
        return Err(Error::Domain("variance_scaling needs at least one trial".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len() * beta_list.len());
    for &n in n_list {
        for &beta in beta_list {
            let spec =
                EnsembleSpec::new(EnsembleKind::MovingAverageRows, n, aspect_num, aspect_den, beta)?;
            let cell_master = derive_key(master_seed, &[n as u64, beta as u64]);
            let values = parallel::map_ordered(trials, |t| {
                let s = SpectralSample::from_matrix_sample(&sample(&spec, Seed::new(cell_master, t))?)?;
                empirical_stieltjes(&s, z)
            })?;
            let t = trials as f64;
            let mean = values.iter().sum::<Complex64>() / t;
            let var_hat = if trials >= 2 {
                (values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (t - 1.0)).max(0.0)
            } else {
                0.0
            };
            let normalized =
                n as f64 * var_hat * z.im * z.im / ((beta as f64 + 1.0) * (beta as f64 + 1.0));
            rows.push(VarianceCell {
                n,
                beta,
                z,
                trials,
                var_hat,
                normalized,
            });
        }
    }
    Ok(VarianceScalingTable { rows })
}

/// Mean and max of the spectral norm of `(1/n) A A^T` over trials (the Gram
/// matrix already carries the 1/n scaling).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormCheck {
    pub mean_norm: f64,
    pub max_norm: f64,
    pub mean_se: f64,
    pub trials: u64,
}

pub fn norm_check(spec: &EnsembleSpec, trials: u64, master_seed: u64) -> Result<NormCheck> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::Domain("norm_check needs at least one trial".into()));
    }
    let norms = parallel::map_ordered(trials, |t| {
        spectral_norm(&gram(&sample(spec, Seed::new(master_seed, t))?.matrix)?)
    })?;
    let t = trials as f64;
    let mean = norms.iter().sum::<f64>() / t;
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_se = if trials >= 2 {
        let var = norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1.0);
        (var / t).sqrt()
    } else {
        0.0
    };
    Ok(NormCheck {
        mean_norm: mean,
        max_norm: max,
        mean_se,
        trials,
    })
}
