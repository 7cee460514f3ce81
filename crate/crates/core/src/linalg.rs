//! Dense real symmetric eigenvalue computation, Gram-matrix formation, and
//! spectral norm.
//!
//! Eigenvalues are computed by Householder reduction to tridiagonal form
//! followed by implicit-shift QL (EISPACK lineage, values only; eigenvectors
//! are never formed).

use crate::error::{Error, Result};

/// Experiments target n <= 4096; larger eigenproblems are rejected instead of
/// silently thrashing.
pub const MAX_DIM: usize = 4096;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain("matrix dimensions must be positive".into()));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Capacity(format!("{rows} x {cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::Domain(format!(
                "data length {} does not match {rows} x {cols}",
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Symmetric matrix stored as the packed lower triangle, row by row:
/// entry (i, j) with i >= j sits at `i(i+1)/2 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if data.len() != dim * (dim + 1) / 2 {
            return Err(Error::Domain(format!(
                "packed length {} does not match dim {dim}",
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(SymmetricMatrix { dim, data })
    }

    /// Builds from a dense row-major square matrix, which must be exactly
    /// symmetric.
    pub fn from_dense(dim: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != dim * dim {
            return Err(Error::Domain("dense data length must be dim^2".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                if dense[i * dim + j] != dense[j * dim + i] {
                    return Err(Error::Domain(format!(
                        "dense input is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            data.extend_from_slice(&dense[i * dim..i * dim + i + 1]);
        }
        SymmetricMatrix::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.data[hi * (hi + 1) / 2 + lo]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let x = self.get(i, j);
                acc += if i == j { x * x } else { 2.0 * x * x };
            }
        }
        acc
    }
}

/// Forms the Gram matrix `(1/n) A A^T` where `n` is the row count of `A`
/// (the divisor is the row count regardless of the column count).
pub fn gram(a: &RealMatrix) -> Result<SymmetricMatrix> {
    let n = a.rows();
    if n > MAX_DIM {
        return Err(Error::Capacity(format!(
            "gram matrix dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let inv_n = 1.0 / n as f64;
    let mut data = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        let ri = a.row(i);
        for j in 0..=i {
            let rj = a.row(j);
            let dot: f64 = ri.iter().zip(rj.iter()).map(|(x, y)| x * y).sum();
            data.push(dot * inv_n);
        }
    }
    SymmetricMatrix::new(n, data)
}

/// All eigenvalues in nondecreasing order.
pub fn eigenvalues_sym(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    if n > MAX_DIM {
        return Err(Error::Capacity(format!(
            "eigenproblem dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    if n == 1 {
        return Ok(vec![m.data[0]]);
    }
    // Unpack the lower triangle into full storage: the reduction below only
    // reads and writes i >= j entries.
    let mut full = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            full[i * n + j] = m.data[i * (i + 1) / 2 + j];
        }
    }
    let (mut d, mut e) = householder_tridiagonalize(&mut full, n);
    ql_implicit_shift(&mut d, &mut e)?;
    d.sort_unstable_by(f64::total_cmp);
    Ok(d)
}

/// Spectral norm `max |lambda_i|`, consistent with [`eigenvalues_sym`].
pub fn spectral_norm(m: &SymmetricMatrix) -> Result<f64> {
    let ev = eigenvalues_sym(m)?;
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    Ok(lo.abs().max(hi.abs()))
}

/// Snapping threshold for numerically-zero eigenvalues of Gram matrices:
/// `1e-8 * max(1, lambda_max)`, taking `lambda_max` from a sorted spectrum.
pub fn zero_snap_threshold(sorted_eigenvalues: &[f64]) -> f64 {
    let lambda_max = sorted_eigenvalues.last().copied().unwrap_or(0.0);
    1e-8 * lambda_max.max(1.0)
}

/// Householder reduction of the lower triangle of `a` (n x n row-major) to
/// symmetric tridiagonal form; returns (diagonal, subdiagonal) with the
/// subdiagonal in e[1..n] and e[0] = 0. Values-only: no transform
/// accumulation.
fn householder_tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..i {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..i {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..i {
                    // A * u restricted to the leading block
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..i {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..i {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (d, e)
}

/// Implicit-shift QL with Wilkinson shifts on a symmetric tridiagonal matrix
/// (d = diagonal, e = subdiagonal in e[1..n]). On return d holds the
/// eigenvalues, unsorted. Errors with the failing block index after 50
/// iterations on one eigenvalue.
fn ql_implicit_shift(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == 50 {
                return Err(Error::Eigensolver { block: l });
            }
            iter += 1;

            // Wilkinson-style shift from the leading 2x2 of the block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);

            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
