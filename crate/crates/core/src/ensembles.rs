//! Reproducible sampling of the matrix ensembles under study: i.i.d. entries,
//! sum-zero Bernoulli rows, and a banded moving-average family with a finite
//! row-dependence range.

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::rng::{derive_key, Stream};

/// The ensemble families the samplers know how to draw.
///
/// `MovingAverageRows` averages beta+1 consecutive auxiliary Gaussian rows,
/// so rows further than beta apart are independent. Its rows have nonzero
/// conditional means given neighboring rows, so it is used only for
/// variance-scaling experiments, never for the moment diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum EnsembleKind {
    #[serde(rename = "IID_GAUSSIAN")]
    IidGaussian,
    #[serde(rename = "IID_RADEMACHER")]
    IidRademacher,
    #[serde(rename = "SUM_ZERO_BERNOULLI_ROWS")]
    SumZeroBernoulliRows,
    #[serde(rename = "MOVING_AVERAGE_ROWS")]
    MovingAverageRows,
}

impl EnsembleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnsembleKind::IidGaussian => "IID_GAUSSIAN",
            EnsembleKind::IidRademacher => "IID_RADEMACHER",
            EnsembleKind::SumZeroBernoulliRows => "SUM_ZERO_BERNOULLI_ROWS",
            EnsembleKind::MovingAverageRows => "MOVING_AVERAGE_ROWS",
        }
    }

    /// Kinds whose rows are mutually independent, so conditional row moments
    /// collapse to unconditional ones.
    pub fn has_independent_rows(&self) -> bool {
        !matches!(self, EnsembleKind::MovingAverageRows)
    }

    /// Stable numeric tag used in cache keys and derived stream keys.
    pub fn tag(&self) -> u64 {
        match self {
            EnsembleKind::IidGaussian => 1,
            EnsembleKind::IidRademacher => 2,
            EnsembleKind::SumZeroBernoulliRows => 3,
            EnsembleKind::MovingAverageRows => 4,
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IID_GAUSSIAN" => Ok(EnsembleKind::IidGaussian),
            "IID_RADEMACHER" => Ok(EnsembleKind::IidRademacher),
            "SUM_ZERO_BERNOULLI_ROWS" => Ok(EnsembleKind::SumZeroBernoulliRows),
            "MOVING_AVERAGE_ROWS" => Ok(EnsembleKind::MovingAverageRows),
            other => Err(Error::Spec(format!("unknown ensemble kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declarative description of one random matrix law: n rows, N = n * aspect
/// columns, and (for the moving-average family) the dependence range beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub aspect_num: u64,
    pub aspect_den: u64,
    pub beta: usize,
}

impl EnsembleSpec {
    pub fn new(
        kind: EnsembleKind,
        n: usize,
        aspect_num: u64,
        aspect_den: u64,
        beta: usize,
    ) -> Result<Self> {
        let spec = EnsembleSpec {
            kind,
            n,
            aspect_num,
            aspect_den,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Spec("row count n must be positive".into()));
        }
        if self.aspect_num == 0 || self.aspect_den == 0 {
            return Err(Error::Spec("aspect numerator and denominator must be positive".into()));
        }
        let scaled = self.n as u128 * self.aspect_num as u128;
        if scaled % self.aspect_den as u128 != 0 {
            return Err(Error::Spec(format!(
                "N = n * {}/{} is not an integer for n = {}",
                self.aspect_num, self.aspect_den, self.n
            )));
        }
        let cols = scaled / self.aspect_den as u128;
        if cols == 0 || cols > usize::MAX as u128 {
            return Err(Error::Spec(format!("column count {cols} out of range")));
        }
        match self.kind {
            EnsembleKind::SumZeroBernoulliRows => {
                if cols % 2 != 0 {
                    return Err(Error::Spec(format!(
                        "SUM_ZERO_BERNOULLI_ROWS requires even N, got N = {cols}"
                    )));
                }
                if self.beta != 0 {
                    return Err(Error::Spec("beta must be 0 for row-independent kinds".into()));
                }
            }
            EnsembleKind::MovingAverageRows => {
                if self.beta >= self.n {
                    return Err(Error::Spec(format!(
                        "dependence range beta = {} must be below n = {}",
                        self.beta, self.n
                    )));
                }
            }
            _ => {
                if self.beta != 0 {
                    return Err(Error::Spec("beta must be 0 for row-independent kinds".into()));
                }
            }
        }
        Ok(())
    }

    /// Column count N = n * aspect.
    pub fn cols(&self) -> usize {
        (self.n as u128 * self.aspect_num as u128 / self.aspect_den as u128) as usize
    }

    /// The finite-n aspect ratio c_n = N/n as a float.
    pub fn aspect_f64(&self) -> f64 {
        self.aspect_num as f64 / self.aspect_den as f64
    }
}

/// Master seed plus trial index; the derived stream is a pure function of the
/// pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Seed {
    pub master: u64,
    pub trial: u64,
}

impl Seed {
    pub fn new(master: u64, trial: u64) -> Self {
        Seed { master, trial }
    }

    pub fn stream(&self) -> Stream {
        Stream::new(derive_key(self.master, &[self.trial]))
    }
}

/// One realized n x N matrix with its provenance.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    pub spec: EnsembleSpec,
    pub seed: Seed,
    pub matrix: RealMatrix,
}

/// Draws one matrix; a deterministic function of `(spec, seed)`.
pub fn sample(spec: &EnsembleSpec, seed: Seed) -> Result<MatrixSample> {
    spec.validate()?;
    let n = spec.n;
    let cols = spec.cols();
    let mut stream = seed.stream();
    let data = match spec.kind {
        EnsembleKind::IidGaussian => (0..n * cols).map(|_| stream.standard_normal()).collect(),
        EnsembleKind::IidRademacher => (0..n * cols).map(|_| stream.rademacher()).collect(),
        EnsembleKind::SumZeroBernoulliRows => {
            let mut data = Vec::with_capacity(n * cols);
            for _ in 0..n {
                data.extend_from_slice(&balanced_row(cols, &mut stream)?);
            }
            data
        }
        EnsembleKind::MovingAverageRows => {
            let window = spec.beta + 1;
            let aux_rows = n + spec.beta;
            let aux: Vec<f64> = (0..aux_rows * cols).map(|_| stream.standard_normal()).collect();
            let scale = 1.0 / (window as f64).sqrt();
            let mut data = vec![0.0; n * cols];
            for k in 0..n {
                for g in k..k + window {
                    let src = &aux[g * cols..(g + 1) * cols];
                    let dst = &mut data[k * cols..(k + 1) * cols];
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d += s;
                    }
                }
                for d in &mut data[k * cols..(k + 1) * cols] {
                    *d *= scale;
                }
            }
            data
        }
    };
    Ok(MatrixSample {
        spec: *spec,
        seed,
        matrix: RealMatrix::new(n, cols, data)?,
    })
}

/// A +/-1 vector of even length summing to zero, uniform over all balanced
/// vectors: a Fisher-Yates shuffle of the half-and-half template.
pub fn balanced_row(length: usize, stream: &mut Stream) -> Result<Vec<f64>> {
    if length == 0 || length % 2 != 0 {
        return Err(Error::Spec(format!(
            "balanced row length must be even and positive, got {length}"
        )));
    }
    let mut row = vec![1.0; length];
    for x in &mut row[length / 2..] {
        *x = -1.0;
    }
    stream.shuffle(&mut row);
    Ok(row)
}

/// Exact off-diagonal pair correlation `E[z_i z_j]` and fully-mixed fourth
/// moment `E[z_i z_j z_l z_m]` (all indices distinct) for one row of length
/// `length`: (0, 0) for i.i.d. kinds, `(-1/(L-1), 3/((L-1)(L-3)))` for
/// balanced Bernoulli rows.
pub fn ensemble_moments(kind: EnsembleKind, length: usize) -> Result<(f64, f64)> {
    match kind {
        EnsembleKind::IidGaussian | EnsembleKind::IidRademacher => Ok((0.0, 0.0)),
        EnsembleKind::SumZeroBernoulliRows => {
            if length % 2 != 0 || length < 4 {
                return Err(Error::Domain(format!(
                    "balanced Bernoulli moments need even length >= 4, got {length}"
                )));
            }
            let lf = length as f64;
            Ok((-1.0 / (lf - 1.0), 3.0 / ((lf - 1.0) * (lf - 3.0))))
        }
        EnsembleKind::MovingAverageRows => Err(Error::Domain(
            "no closed-form row moments for MOVING_AVERAGE_ROWS".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn spec(kind: EnsembleKind, n: usize, num: u64, den: u64, beta: usize) -> EnsembleSpec {
        EnsembleSpec::new(kind, n, num, den, beta).unwrap()
    }

    #[test]
    fn validation_rules() {
        assert!(EnsembleSpec::new(EnsembleKind::IidGaussian, 5, 1, 2, 0).is_err()); // N = 2.5
        assert!(EnsembleSpec::new(EnsembleKind::SumZeroBernoulliRows, 1, 3, 1, 0).is_err()); // N odd
        assert!(EnsembleSpec::new(EnsembleKind::MovingAverageRows, 4, 1, 1, 4).is_err()); // beta >= n
        assert!(EnsembleSpec::new(EnsembleKind::IidGaussian, 4, 1, 1, 1).is_err()); // beta on iid
        assert!(EnsembleSpec::new(EnsembleKind::MovingAverageRows, 8, 2, 1, 3).is_ok());
        assert_eq!(spec(EnsembleKind::IidGaussian, 4, 3, 2, 0).cols(), 6);
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = spec(EnsembleKind::IidRademacher, 2, 1, 1, 0);
        let seed = Seed::new(99, 3);
        let a = sample(&s, seed).unwrap();
        let b = sample(&s, seed).unwrap();
        assert_eq!(a.matrix.data(), b.matrix.data());
        let c = sample(&s, Seed::new(99, 4)).unwrap();
        assert_ne!(a.matrix.data(), c.matrix.data());
    }

    #[test]
    fn bernoulli_rows_balance_exactly() {
        let s = spec(EnsembleKind::SumZeroBernoulliRows, 1, 4, 1, 0);
        for trial in 0..32 {
            let m = sample(&s, Seed::new(5, trial)).unwrap();
            let row = m.matrix.row(0);
            assert!(row.iter().all(|&x| x == 1.0 || x == -1.0));
            assert_eq!(row.iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn moving_average_beta_zero_is_plain_gaussian_rows() {
        let ma = spec(EnsembleKind::MovingAverageRows, 3, 2, 1, 0);
        let m = sample(&ma, Seed::new(11, 0)).unwrap();
        // with beta = 0 the rows are the auxiliary Gaussian rows themselves
        let mut stream = Seed::new(11, 0).stream();
        let direct: Vec<f64> = (0..3 * 6).map(|_| stream.standard_normal()).collect();
        assert_eq!(m.matrix.data(), &direct[..]);
    }

    #[test]
    fn balanced_row_small_cases() {
        let mut stream = Stream::new(123);
        for _ in 0..64 {
            let row = balanced_row(2, &mut stream).unwrap();
            assert!(row == [1.0, -1.0] || row == [-1.0, 1.0]);
        }
        assert!(balanced_row(3, &mut stream).is_err());
        assert!(balanced_row(0, &mut stream).is_err());
    }

    #[test]
    fn balanced_row_uniform_over_six_vectors() {
        // exact enumeration oracle: the 6 balanced vectors of length 4
        let mut stream = Stream::new(2024);
        let draws = 60_000usize;
        let mut counts: HashMap<[i8; 4], usize> = HashMap::new();
        for _ in 0..draws {
            let row = balanced_row(4, &mut stream).unwrap();
            let key = [row[0] as i8, row[1] as i8, row[2] as i8, row[3] as i8];
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        // four standard errors around 1/6
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for (vec, count) in counts {
            assert_eq!(vec.iter().map(|&x| x as i32).sum::<i32>(), 0);
            let freq = count as f64 / draws as f64;
            assert!(
                (freq - p).abs() <= 4.0 * se,
                "vector {vec:?} frequency {freq}"
            );
        }
    }

    #[test]
    fn balanced_pair_product_mean_matches_enumeration() {
        // brute force over the 6 balanced vectors gives exactly -1/3
        let mut stream = Stream::new(8);
        let draws = 200_000usize;
        let mut acc = 0.0;
        for _ in 0..draws {
            let row = balanced_row(4, &mut stream).unwrap();
            acc += row[0] * row[1];
        }
        let mean = acc / draws as f64;
        let se = (1.0_f64 / draws as f64).sqrt(); // product variance < 1
        assert!((mean + 1.0 / 3.0).abs() <= 4.0 * se, "mean {mean}");
    }

    #[test]
    fn moment_formulas() {
        assert_eq!(
            ensemble_moments(EnsembleKind::SumZeroBernoulliRows, 4).unwrap(),
            (-1.0 / 3.0, 1.0)
        );
        let (pair, quad) = ensemble_moments(EnsembleKind::SumZeroBernoulliRows, 8).unwrap();
        assert!((pair + 1.0 / 7.0).abs() < 1e-15);
        assert!((quad - 3.0 / 35.0).abs() < 1e-15);
        assert_eq!(ensemble_moments(EnsembleKind::IidGaussian, 100).unwrap(), (0.0, 0.0));
        assert!(ensemble_moments(EnsembleKind::MovingAverageRows, 8).is_err());
        assert!(ensemble_moments(EnsembleKind::SumZeroBernoulliRows, 2).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = spec(EnsembleKind::SumZeroBernoulliRows, 8, 2, 1, 0);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"SUM_ZERO_BERNOULLI_ROWS\""));
        assert!(text.contains("\"aspect_num\":2"));
        let back: EnsembleSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
