//! Empirical spectral distributions, empirical Stieltjes transforms, and the
//! exact Kolmogorov distance between an ESD and a reference law.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::ensembles::{EnsembleSpec, MatrixSample, Seed};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_sym, gram, zero_snap_threshold};
use crate::mp_law::{ComplexPoint, MpLaw};

/// Sorted spectrum of `(1/n) A A^T` for one sample, with the numerically-zero
/// eigenvalues clamped to exactly 0 and counted.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    eigenvalues: Vec<f64>,
    zero_multiplicity: usize,
    spec: EnsembleSpec,
    seed: Seed,
}

impl SpectralSample {
    /// Eigendecomposes the Gram matrix of one drawn sample.
    pub fn from_matrix_sample(sample: &MatrixSample) -> Result<Self> {
        let g = gram(&sample.matrix)?;
        let ev = eigenvalues_sym(&g)?;
        Self::from_raw_eigenvalues(ev, sample.spec, sample.seed)
    }

    /// Builds from already-computed Gram eigenvalues (sorted ascending);
    /// applies the zero-snapping rule.
    pub fn from_raw_eigenvalues(
        mut eigenvalues: Vec<f64>,
        spec: EnsembleSpec,
        seed: Seed,
    ) -> Result<Self> {
        if eigenvalues.len() != spec.n {
            return Err(Error::Domain(format!(
                "{} eigenvalues for an n = {} sample",
                eigenvalues.len(),
                spec.n
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("eigenvalues must be nondecreasing".into()));
        }
        let thr = zero_snap_threshold(&eigenvalues);
        let mut zero_multiplicity = 0;
        for x in &mut eigenvalues {
            if x.abs() <= thr {
                *x = 0.0;
                zero_multiplicity += 1;
            }
        }
        Ok(SpectralSample {
            eigenvalues,
            zero_multiplicity,
            spec,
            seed,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn zero_multiplicity(&self) -> usize {
        self.zero_multiplicity
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn esd(&self) -> Esd {
        Esd::from_sorted_values(&self.eigenvalues)
    }
}

/// A right-continuous step distribution function: jump points ascending with
/// the cumulative value after each jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Esd {
    points: Vec<f64>,
    cum: Vec<f64>,
}

impl Esd {
    fn from_sorted_values(values: &[f64]) -> Esd {
        let total = values.len() as f64;
        let mut points = Vec::new();
        let mut cum = Vec::new();
        let mut seen = 0usize;
        let mut i = 0;
        while i < values.len() {
            let v = values[i];
            let mut j = i;
            while j < values.len() && values[j] == v {
                j += 1;
            }
            seen += j - i;
            points.push(v);
            cum.push(seen as f64 / total);
            i = j;
        }
        Esd { points, cum }
    }

    /// Exact step-function evaluation `F(x) = (# points <= x) / n`.
    pub fn eval(&self, x: f64) -> f64 {
        match self
            .points
            .binary_search_by(|p| p.partial_cmp(&x).expect("non-NaN jump points"))
        {
            Ok(i) => self.cum[i],
            Err(0) => 0.0,
            Err(i) => self.cum[i - 1],
        }
    }

    /// Left limit `F(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        match self
            .points
            .binary_search_by(|p| p.partial_cmp(&x).expect("non-NaN jump points"))
        {
            Ok(0) | Err(0) => 0.0,
            Ok(i) => self.cum[i - 1],
            Err(i) => self.cum[i - 1],
        }
    }

    /// Distinct jump locations, ascending.
    pub fn jump_points(&self) -> &[f64] {
        &self.points
    }
}

/// The exact average of the individual ESDs: a pooled step function over the
/// union of all eigenvalues, each with weight `1/(n * #samples)`.
pub fn average_esd(samples: &[SpectralSample]) -> Result<Esd> {
    if samples.is_empty() {
        return Err(Error::Domain("average_esd needs at least one sample".into()));
    }
    let n = samples[0].spec.n;
    if samples.iter().any(|s| s.spec.n != n) {
        return Err(Error::Domain("all samples must share the same n".into()));
    }
    let mut pooled: Vec<f64> = Vec::with_capacity(n * samples.len());
    for s in samples {
        pooled.extend_from_slice(&s.eigenvalues);
    }
    pooled.sort_unstable_by(f64::total_cmp);
    Ok(Esd::from_sorted_values(&pooled))
}

/// Empirical Stieltjes transform `(1/n) sum_i 1/(lambda_i - z)`.
pub fn empirical_stieltjes(sample: &SpectralSample, z: ComplexPoint) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!(
            "Im z = {} but the empirical Stieltjes transform requires Im z > 0",
            z.im
        )));
    }
    let zc = z.as_complex();
    let mut acc = Complex64::new(0.0, 0.0);
    for &lambda in &sample.eigenvalues {
        acc += (Complex64::new(lambda, 0.0) - zc).inv();
    }
    Ok(acc / sample.eigenvalues.len() as f64)
}

/// Exact Kolmogorov distance `sup_x |F_emp(x) - F_law(x)|`.
///
/// The supremum is attained at the jump points of either function: each
/// distinct eigenvalue contributes the larger of its pre- and post-jump gaps
/// against the continuous law, and x = 0 is always checked against the atom.
pub fn kolmogorov_distance(esd: &Esd, law: &MpLaw) -> f64 {
    let mut best = 0.0f64;
    let mut check = |x: f64| {
        let emp_post = esd.eval(x);
        let emp_pre = esd.eval_left(x);
        let law_post = law.cdf(x);
        let law_pre = if x == 0.0 { 0.0 } else { law_post };
        best = best.max((emp_post - law_post).abs());
        best = best.max((emp_pre - law_pre).abs());
    };
    check(0.0);
    for &p in esd.jump_points() {
        if p != 0.0 {
            check(p);
        }
    }
    best
}

const ESD_MAGIC: &[u8; 4] = b"ESD1";
const ESD_VERSION: u32 = 1;

/// Payload of one "ESD1" cache record.
#[derive(Debug, Clone, PartialEq)]
pub struct EsdRecord {
    pub n: u64,
    pub cols: u64,
    pub master: u64,
    pub trial: u64,
    pub eigenvalues: Vec<f64>,
}

/// Writes the binary cache format: magic "ESD1", little-endian u32 version,
/// then u64 n, N, master seed, trial, eigenvalue count, then the eigenvalues
/// as little-endian doubles in nondecreasing order.
pub fn write_esd1(w: &mut impl Write, sample: &SpectralSample) -> std::io::Result<()> {
    w.write_all(ESD_MAGIC)?;
    w.write_all(&ESD_VERSION.to_le_bytes())?;
    for field in [
        sample.spec.n as u64,
        sample.spec.cols() as u64,
        sample.seed.master,
        sample.seed.trial,
        sample.eigenvalues.len() as u64,
    ] {
        w.write_all(&field.to_le_bytes())?;
    }
    for &x in &sample.eigenvalues {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one "ESD1" record, rejecting wrong magic, version, or a malformed
/// body.
pub fn read_esd1(r: &mut impl Read) -> Result<EsdRecord> {
    let bad = |what: &str| Error::Cache(what.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != ESD_MAGIC {
        return Err(bad("wrong magic"));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4).map_err(|_| bad("truncated header"))?;
    if u32::from_le_bytes(buf4) != ESD_VERSION {
        return Err(bad("unsupported version"));
    }
    let mut read_u64 = || -> Result<u64> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf).map_err(|_| bad("truncated header"))?;
        Ok(u64::from_le_bytes(buf))
    };
    let n = read_u64()?;
    let cols = read_u64()?;
    let master = read_u64()?;
    let trial = read_u64()?;
    let count = read_u64()?;
    if count > crate::linalg::MAX_DIM as u64 {
        return Err(bad("eigenvalue count exceeds the size cap"));
    }
    let mut eigenvalues = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf).map_err(|_| bad("truncated body"))?;
        eigenvalues.push(f64::from_le_bytes(buf));
    }
    if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(bad("eigenvalues not in nondecreasing order"));
    }
    Ok(EsdRecord {
        n,
        cols,
        master,
        trial,
        eigenvalues,
    })
}

impl SpectralSample {
    /// Reconstructs a sample from a cache record, verifying that the record
    /// belongs to `(spec, seed)`.
    pub fn from_record(record: EsdRecord, spec: EnsembleSpec, seed: Seed) -> Result<Self> {
        if record.n != spec.n as u64
            || record.cols != spec.cols() as u64
            || record.master != seed.master
            || record.trial != seed.trial
        {
            return Err(Error::Cache("record metadata does not match (spec, seed)".into()));
        }
        SpectralSample::from_raw_eigenvalues(record.eigenvalues, spec, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample, EnsembleKind};
    use crate::linalg::RealMatrix;
    use approx::assert_abs_diff_eq;

    fn gaussian_spec(n: usize, num: u64, den: u64) -> EnsembleSpec {
        EnsembleSpec::new(EnsembleKind::IidGaussian, n, num, den, 0).unwrap()
    }

    fn sample_from_matrix(rows: usize, cols: usize, data: Vec<f64>) -> SpectralSample {
        // aspect cols/rows keeps the spec consistent with the matrix shape
        let spec = EnsembleSpec::new(
            EnsembleKind::IidGaussian,
            rows,
            cols as u64,
            rows as u64,
            0,
        )
        .unwrap();
        let m = MatrixSample {
            spec,
            seed: Seed::new(0, 0),
            matrix: RealMatrix::new(rows, cols, data).unwrap(),
        };
        SpectralSample::from_matrix_sample(&m).unwrap()
    }

    #[test]
    fn esd_of_identity_rows() {
        let s = sample_from_matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(s.eigenvalues()[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues()[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rank_one_column_has_zero() {
        let s = sample_from_matrix(2, 1, vec![0.3, -1.2]);
        assert!(s.zero_multiplicity() >= 1);
        assert_eq!(s.eigenvalues()[0], 0.0);
    }

    #[test]
    fn all_ones_three_by_five() {
        let s = sample_from_matrix(3, 5, vec![1.0; 15]);
        assert_eq!(s.eigenvalues()[0], 0.0);
        assert_eq!(s.eigenvalues()[1], 0.0);
        assert_abs_diff_eq!(s.eigenvalues()[2], 5.0, epsilon = 1e-12);
        assert_eq!(s.zero_multiplicity(), 2);
    }

    #[test]
    fn esd_eval_examples() {
        let esd = Esd::from_sorted_values(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(esd.eval(2.0), 2.0 / 3.0, epsilon = 0.0);
        assert_eq!(esd.eval(0.0), 0.0);
        assert_eq!(esd.eval(3.5), 1.0);
        let multi = Esd::from_sorted_values(&[1.0, 1.0, 1.0]);
        assert_eq!(multi.eval(1.0), 1.0);
        assert_eq!(multi.eval_left(1.0), 0.0);
    }

    #[test]
    fn empirical_stieltjes_small_cases() {
        let one = sample_from_matrix(1, 1, vec![1.0]);
        let s = empirical_stieltjes(&one, ComplexPoint::new(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(s.re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.im, 0.5, epsilon = 1e-14);

        // eigenvalues [0, 2] realized by a rank-one 2x2 sample: rows (2,0),(0,0)
        let two = sample_from_matrix(2, 2, vec![2.0, 0.0, 0.0, 0.0]);
        assert_eq!(two.eigenvalues(), &[0.0, 2.0]);
        let s = empirical_stieltjes(&two, ComplexPoint::new(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(s.re, 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.im, 0.6, epsilon = 1e-14);

        assert!(empirical_stieltjes(&one, ComplexPoint::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn stieltjes_magnitude_bound() {
        let spec = gaussian_spec(16, 2, 1);
        let s = SpectralSample::from_matrix_sample(&sample(&spec, Seed::new(3, 0)).unwrap()).unwrap();
        let z = ComplexPoint::new(0.7, 0.25);
        let val = empirical_stieltjes(&s, z).unwrap();
        assert!(val.norm() <= 1.0 / z.im + 1e-12);
        assert!(val.im > 0.0);
    }

    #[test]
    fn kolmogorov_atom_example() {
        // ESD with all mass at 0 against the c = 1/2 law: distance 1/2
        let esd = Esd::from_sorted_values(&[0.0, 0.0]);
        let law = MpLaw::new(0.5).unwrap();
        assert_abs_diff_eq!(kolmogorov_distance(&esd, &law), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_quantile_matched() {
        // eigenvalues at the c = 1 quantiles (i - 1/2)/4: sup gap is 1/8
        let law = MpLaw::new(1.0).unwrap();
        let quantile = |q: f64| {
            let (mut lo, mut hi) = (0.0, 4.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if law.cdf(mid) < q {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let evs: Vec<f64> = [0.125, 0.375, 0.625, 0.875].iter().map(|&q| quantile(q)).collect();
        let esd = Esd::from_sorted_values(&evs);
        let d = kolmogorov_distance(&esd, &law);
        assert_abs_diff_eq!(d, 0.125, epsilon = 1e-9);
    }

    #[test]
    fn average_esd_examples() {
        let spec = gaussian_spec(1, 1, 1);
        let a = SpectralSample::from_raw_eigenvalues(vec![1.0], spec, Seed::new(0, 0)).unwrap();
        let b = SpectralSample::from_raw_eigenvalues(vec![3.0], spec, Seed::new(0, 1)).unwrap();
        let avg = average_esd(&[a.clone(), b]).unwrap();
        assert_eq!(avg.eval(1.0), 0.5);
        assert_eq!(avg.eval(3.0), 1.0);
        assert_eq!(avg.eval(0.5), 0.0);

        // idempotence on copies
        let same = average_esd(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(same, a.esd());

        // mismatched n
        let other = SpectralSample::from_raw_eigenvalues(
            vec![0.5, 1.5],
            gaussian_spec(2, 1, 1),
            Seed::new(0, 0),
        )
        .unwrap();
        assert!(average_esd(&[a, other]).is_err());
    }

    #[test]
    fn esd1_round_trip_and_rejection() {
        let spec = gaussian_spec(8, 2, 1);
        let s = SpectralSample::from_matrix_sample(&sample(&spec, Seed::new(21, 4)).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_esd1(&mut buf, &s).unwrap();
        let record = read_esd1(&mut buf.as_slice()).unwrap();
        assert_eq!(record.n, 8);
        assert_eq!(record.cols, 16);
        assert_eq!(record.master, 21);
        assert_eq!(record.trial, 4);
        assert_eq!(record.eigenvalues, s.eigenvalues());
        let back = SpectralSample::from_record(record.clone(), spec, Seed::new(21, 4)).unwrap();
        assert_eq!(back.eigenvalues(), s.eigenvalues());

        // wrong seed is rejected
        assert!(SpectralSample::from_record(record, spec, Seed::new(21, 5)).is_err());

        // wrong magic
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_esd1(&mut bad.as_slice()).is_err());

        // wrong version
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_esd1(&mut bad.as_slice()).is_err());

        // truncated body
        let bad = &buf[..buf.len() - 3];
        assert!(read_esd1(&mut &bad[..]).is_err());
    }
}
