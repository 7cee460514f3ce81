//! Independent test oracles: Sturm-bisection eigenvalues from leading
//! principal minors, a dense-grid Kolmogorov scan with a cumulative law
//! table, and a complex linear-solve resolvent trace. None of these share
//! code with the implementation paths they check.

use num_complex::Complex64;

/// Counts eigenvalues of the dense symmetric matrix strictly below `x` by
/// running unpivoted Gaussian elimination on `A - xI` and counting negative
/// pivots (the leading-principal-minor sign-change argument).
pub fn count_eigenvalues_below(dense: &[f64], n: usize, x: f64) -> usize {
    let mut m = dense.to_vec();
    for i in 0..n {
        m[i * n + i] -= x;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut pivot = m[k * n + k];
        if pivot == 0.0 {
            pivot = 1e-300;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in (k + 1)..n {
            let f = m[i * n + k] / pivot;
            if f != 0.0 {
                for j in k..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
            }
        }
    }
    negatives
}

/// All eigenvalues of a dense symmetric matrix by bisection on the pivot
/// count, sorted ascending.
pub fn sturm_eigenvalues(dense: &[f64], n: usize) -> Vec<f64> {
    // Gershgorin bounds
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let mut radius = 0.0;
        for j in 0..n {
            if i != j {
                radius += dense[i * n + j].abs();
            }
        }
        lo = lo.min(dense[i * n + i] - radius);
        hi = hi.max(dense[i * n + i] + radius);
    }
    lo -= 1.0;
    hi += 1.0;

    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if count_eigenvalues_below(dense, n, mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-13 * (1.0 + mid.abs()) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// `(1/n) Tr (M - zI)^{-1}` by direct complex Gaussian elimination with
/// partial pivoting, one solve per basis vector.
pub fn resolvent_trace(dense: &[f64], n: usize, z: Complex64) -> Complex64 {
    let mut trace = Complex64::new(0.0, 0.0);
    for col in 0..n {
        // augmented system (M - zI | e_col)
        let mut m: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let mut v = Complex64::new(dense[i * n + j], 0.0);
                if i == j {
                    v -= z;
                }
                v
            })
            .collect();
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(if i == col { 1.0 } else { 0.0 }, 0.0))
            .collect();
        for k in 0..n {
            let pivot_row = (k..n)
                .max_by(|&a, &b| {
                    m[a * n + k]
                        .norm_sqr()
                        .partial_cmp(&m[b * n + k].norm_sqr())
                        .unwrap()
                })
                .unwrap();
            if pivot_row != k {
                for j in 0..n {
                    m.swap(k * n + j, pivot_row * n + j);
                }
                rhs.swap(k, pivot_row);
            }
            let pivot = m[k * n + k];
            for i in (k + 1)..n {
                let f = m[i * n + k] / pivot;
                if f.norm_sqr() != 0.0 {
                    for j in k..n {
                        let v = m[k * n + j];
                        m[i * n + j] -= f * v;
                    }
                    let v = rhs[k];
                    rhs[i] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            for j in (k + 1)..n {
                acc -= m[k * n + j] * rhs[j];
            }
            rhs[k] = acc / m[k * n + k];
        }
        trace += rhs[col];
    }
    trace / n as f64
}

/// Cumulative law table on a fixed uniform grid, built from the density by
/// panel-wise 8-node Gauss-Legendre accumulation (independent of the
/// substitution-based CDF quadrature).
pub struct LawTable {
    pub lo: f64,
    pub step: f64,
    pub atom: f64,
    /// cumulative continuous mass at each grid point
    pub mass: Vec<f64>,
    density: Box<dyn Fn(f64) -> f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl LawTable {
    pub fn build(law: mpspectra_core::MpLaw, lo: f64, hi: f64, cells: usize) -> LawTable {
        let rule = mpspectra_core::quad::gauss_legendre(8);
        let step = (hi - lo) / cells as f64;
        let density = move |x: f64| law.density(x);
        let mut mass = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        mass.push(0.0);
        for i in 0..cells {
            let a = lo + i as f64 * step;
            acc += mpspectra_core::quad::integrate(&density, a, a + step, &rule);
            mass.push(acc);
        }
        LawTable {
            lo,
            step,
            atom: law.atom_mass(),
            mass,
            density: Box::new(density),
            rule,
        }
    }

    /// Law CDF at an arbitrary point: nearest lower grid node plus a partial
    /// panel integral.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return if x >= 0.0 { self.atom } else { 0.0 };
        }
        let idx = (((x - self.lo) / self.step) as usize).min(self.mass.len() - 1);
        let base = self.lo + idx as f64 * self.step;
        let partial = if x > base {
            mpspectra_core::quad::integrate(&self.density, base, x, &self.rule)
        } else {
            0.0
        };
        let atom = if x >= 0.0 { self.atom } else { 0.0 };
        (self.mass[idx] + partial + atom).min(1.0)
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn grid_len(&self) -> usize {
        self.mass.len()
    }
}

/// Brute-force Kolmogorov scan: max |F_emp - F_law| over all table grid
/// points plus the empirical jump locations (pre- and post-jump) and 0.
pub fn ks_scan(sorted_evs: &[f64], table: &LawTable) -> f64 {
    let n = sorted_evs.len() as f64;
    let emp = |x: f64| -> f64 {
        sorted_evs.partition_point(|&e| e <= x) as f64 / n
    };
    let emp_left = |x: f64| -> f64 {
        sorted_evs.partition_point(|&e| e < x) as f64 / n
    };
    let mut best = 0.0f64;
    for i in 0..table.grid_len() {
        let x = table.grid_point(i);
        best = best.max((emp(x) - table.cdf(x)).abs());
    }
    let mut check_jump = |x: f64| {
        let law_post = table.cdf(x);
        let law_pre = if x == 0.0 { law_post - table.atom } else { law_post };
        best = best.max((emp(x) - law_post).abs());
        best = best.max((emp_left(x) - law_pre).abs());
    };
    check_jump(0.0);
    for &e in sorted_evs {
        check_jump(e);
    }
    best
}
