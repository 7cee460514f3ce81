//! The Marchenko-Pastur reference law: density, CDF, support, atom, and
//! Stieltjes transform in both closed form and fixed-point form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

/// A point in the open upper half-plane (or, for constructors that allow it,
/// anywhere in the plane); Stieltjes evaluations require `im > 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexPoint { re, im }
    }

    /// Constructor that enforces membership in the open upper half-plane.
    pub fn upper(re: f64, im: f64) -> Result<Self> {
        if !(im > 0.0) || !re.is_finite() || !im.is_finite() {
            return Err(Error::Domain(format!(
                "point {re} + {im}i is not in the open upper half-plane"
            )));
        }
        Ok(ComplexPoint { re, im })
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn require_upper(self) -> Result<Complex64> {
        if !(self.im > 0.0) {
            return Err(Error::Domain(format!(
                "Im z = {} but a Stieltjes argument requires Im z > 0",
                self.im
            )));
        }
        Ok(self.as_complex())
    }
}

impl From<ComplexPoint> for Complex64 {
    fn from(p: ComplexPoint) -> Self {
        p.as_complex()
    }
}

/// A horizontal line of evaluation points `u + iv`, `|u| <= alpha`, at fixed
/// height `v`, ordered by increasing real part.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StieltjesGrid {
    pub alpha: f64,
    pub v: f64,
    pub points: Vec<ComplexPoint>,
}

impl StieltjesGrid {
    /// `count` points with real parts equally spaced over [-alpha, alpha]
    /// (a single point sits at u = 0).
    pub fn new(alpha: f64, v: f64, count: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("grid half-width alpha = {alpha} must be > 0")));
        }
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Domain(format!("grid height v = {v} must lie in (0, 1]")));
        }
        if count == 0 {
            return Err(Error::Domain("grid needs at least one point".into()));
        }
        let points = if count == 1 {
            vec![ComplexPoint::new(0.0, v)]
        } else {
            (0..count)
                .map(|i| {
                    let u = -alpha + 2.0 * alpha * i as f64 / (count - 1) as f64;
                    ComplexPoint::new(u, v)
                })
                .collect()
        };
        Ok(StieltjesGrid { alpha, v, points })
    }
}

/// Support edges of the law with parameter `c`: `((1-sqrt c)^2, (1+sqrt c)^2)`.
pub fn mp_support(c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("aspect parameter c = {c} must be positive")));
    }
    let r = c.sqrt();
    Ok(((1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)))
}

/// The Marchenko-Pastur law with aspect parameter `c`: absolutely continuous
/// part supported on `[a, b]` plus a point mass `max(0, 1-c)` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MpLaw {
    c: f64,
    a: f64,
    b: f64,
    atom_mass: f64,
}

impl MpLaw {
    pub fn new(c: f64) -> Result<Self> {
        let (a, b) = mp_support(c)?;
        Ok(MpLaw {
            c,
            a,
            b,
            atom_mass: (1.0 - c).max(0.0),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Left support edge `(1 - sqrt c)^2`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Right support edge `(1 + sqrt c)^2`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Mass of the atom at the origin, `1 - c` for `c < 1`, else 0.
    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }

    /// Density of the continuous part; 0 off `[a, b]` and at the origin.
    /// The atom is deliberately not part of the density.
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 || x < self.a || x > self.b {
            return 0.0;
        }
        ((x - self.a) * (self.b - x)).sqrt() / (2.0 * std::f64::consts::PI * x)
    }

    /// Distribution function: atom at 0 plus the integral of the density.
    ///
    /// The integral is evaluated with the fixed 256-node Gauss-Legendre rule
    /// after the substitution `x = a + (b-a) sin^2(theta)`, which removes the
    /// square-root vanishing at both edges (and the 1/sqrt(x) blowup when
    /// a = 0). Absolute accuracy is far below 1e-10 on this smooth integrand.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x < self.a {
            return self.atom_mass;
        }
        let span = self.b - self.a;
        if span == 0.0 {
            // degenerate c -> 0 limit never occurs for valid laws; guard anyway
            return if x >= self.b { 1.0 } else { self.atom_mass };
        }
        let ratio = ((x.min(self.b) - self.a) / span).clamp(0.0, 1.0);
        if ratio == 0.0 {
            // x sits exactly on the left edge; the integral is empty (and the
            // integrand is 0/0 there when a = 0).
            return self.atom_mass;
        }
        let theta_max = ratio.sqrt().min(1.0).asin();
        let a = self.a;
        let integrand = |theta: f64| {
            let (s, co) = theta.sin_cos();
            let t = a + span * s * s;
            span * span * s * s * co * co / (std::f64::consts::PI * t)
        };
        let mass = quad::integrate(integrand, 0.0, theta_max, quad::rule_256());
        (self.atom_mass + mass).min(1.0)
    }

    /// Closed-form Stieltjes transform on the upper half-plane, branch chosen
    /// so that `Im(z m(z)) >= 0` (ties broken toward `Im m > 0`).
    pub fn stieltjes_closed(&self, z: ComplexPoint) -> Result<Complex64> {
        let z = z.require_upper()?;
        let w = z + (1.0 - self.c);
        let root = (w * w - 4.0 * z).sqrt();
        let m_plus = (-w + root) / (2.0 * z);
        let m_minus = (-w - root) / (2.0 * z);
        let h_plus = (z * m_plus).im;
        let h_minus = (z * m_minus).im;
        let m = match (h_plus >= 0.0, h_minus >= 0.0) {
            (true, false) => m_plus,
            (false, true) => m_minus,
            // Exact tie (measure zero) or both slightly negative from
            // rounding: prefer the Herglotz side.
            _ => {
                if m_plus.im > m_minus.im {
                    m_plus
                } else {
                    m_minus
                }
            }
        };
        Ok(m)
    }
}

/// Solves `m = 1/(c - 1 - z - z m)` on the upper half-plane by the damped
/// iteration `m <- (1-w) m + w / (c - 1 - z - z m)` with `w = 1/2`, started
/// from the large-|z| asymptote `-1/z`. Returns `m` with fixed-point residual
/// at most `tol`; errors out after 10^5 iterations.
pub fn mp_stieltjes_fixed_point(c: f64, z: ComplexPoint, tol: f64) -> Result<Complex64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("aspect parameter c = {c} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let z = z.require_upper()?;
    const OMEGA: f64 = 0.5;
    const CAP: usize = 100_000;
    let mut m = -1.0 / z;
    let mut residual = f64::INFINITY;
    for _ in 0..CAP {
        let mapped = 1.0 / (c - 1.0 - z - z * m);
        residual = (m - mapped).norm();
        if residual <= tol {
            return Ok(m);
        }
        m = (1.0 - OMEGA) * m + OMEGA * mapped;
    }
    Err(Error::Convergence {
        what: format!("fixed-point Stieltjes iteration at z = {z}"),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn support_examples() {
        assert_eq!(mp_support(1.0).unwrap(), (0.0, 4.0));
        let (a, b) = mp_support(2.0).unwrap();
        assert_abs_diff_eq!(a, 0.171_572_875_253_809_9, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 5.828_427_124_746_19, epsilon = 1e-14);
        assert_eq!(mp_support(0.25).unwrap(), (0.25, 2.25));
        assert!(mp_support(0.0).is_err());
        assert!(mp_support(-1.0).is_err());
    }

    #[test]
    fn law_fields_consistent() {
        let law = MpLaw::new(0.5).unwrap();
        assert!(law.a() <= law.b());
        assert_abs_diff_eq!(law.atom_mass(), 0.5, epsilon = 0.0);
        assert_eq!(MpLaw::new(2.0).unwrap().atom_mass(), 0.0);
        assert_eq!(MpLaw::new(1.0).unwrap().a(), 0.0);
    }

    #[test]
    fn density_examples() {
        let law1 = MpLaw::new(1.0).unwrap();
        assert_eq!(law1.density(5.0), 0.0);
        assert_abs_diff_eq!(
            law1.density(2.0),
            1.0 / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
        // closed-form cross-check: p_2(3) = sqrt(2)/(3 pi)
        let law2 = MpLaw::new(2.0).unwrap();
        assert_abs_diff_eq!(
            law2.density(3.0),
            2.0_f64.sqrt() / (3.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
        // boundary convention at the origin
        assert_eq!(law1.density(0.0), 0.0);
        assert_eq!(law1.density(-1.0), 0.0);
    }

    #[test]
    fn cdf_examples() {
        let half = MpLaw::new(0.5).unwrap();
        assert_abs_diff_eq!(half.cdf(0.0), 0.5, epsilon = 0.0);
        let one = MpLaw::new(1.0).unwrap();
        assert_abs_diff_eq!(one.cdf(4.0), 1.0, epsilon = 1e-10);
        // quadrature oracle value: F_1(2) = 1/2 + 1/pi
        assert_abs_diff_eq!(
            one.cdf(2.0),
            0.5 + 1.0 / std::f64::consts::PI,
            epsilon = 1e-10
        );
        assert_eq!(one.cdf(-0.5), 0.0);
    }

    #[test]
    fn cdf_at_left_edge_is_the_atom() {
        // x = a is the empty integral, including the a = 0 case
        assert_eq!(MpLaw::new(1.0).unwrap().cdf(0.0), 0.0);
        assert_eq!(MpLaw::new(0.25).unwrap().cdf(0.25), 0.75);
        let two = MpLaw::new(2.0).unwrap();
        assert_eq!(two.cdf(two.a()), 0.0);
    }

    #[test]
    fn cdf_total_mass() {
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let law = MpLaw::new(c).unwrap();
            assert_abs_diff_eq!(law.cdf(law.b()), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(law.cdf(law.b() + 10.0), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_form_frozen_values() {
        // fixed-point oracle values, iterated to 1e-12
        let m = MpLaw::new(1.0)
            .unwrap()
            .stieltjes_closed(ComplexPoint::new(0.0, 1.0))
            .unwrap();
        assert_abs_diff_eq!(m.re, 0.300_242_590_220_120_4, epsilon = 1e-10);
        assert_abs_diff_eq!(m.im, 0.624_810_533_843_826_6, epsilon = 1e-10);

        let m2 = MpLaw::new(2.0)
            .unwrap()
            .stieltjes_closed(ComplexPoint::new(1.0, 1.0))
            .unwrap();
        let fp = mp_stieltjes_fixed_point(2.0, ComplexPoint::new(1.0, 1.0), 1e-12).unwrap();
        assert!((m2 - fp).norm() <= 1e-10);
    }

    #[test]
    fn closed_form_rejects_lower_half_plane() {
        let law = MpLaw::new(1.0).unwrap();
        assert!(law.stieltjes_closed(ComplexPoint::new(0.0, 0.0)).is_err());
        assert!(law.stieltjes_closed(ComplexPoint::new(1.0, -0.1)).is_err());
    }

    #[test]
    fn large_z_decay() {
        let law = MpLaw::new(1.0).unwrap();
        let z = ComplexPoint::new(0.0, 100.0);
        let m = law.stieltjes_closed(z).unwrap();
        assert!((z.as_complex() * m + 1.0).norm() <= 0.05);
    }

    #[test]
    fn fixed_point_examples() {
        let m = mp_stieltjes_fixed_point(1.0, ComplexPoint::new(0.0, 1.0), 1e-12).unwrap();
        assert_abs_diff_eq!(m.re, 0.300_242_590_220_120_4, epsilon = 1e-9);
        assert_abs_diff_eq!(m.im, 0.624_810_533_843_826_6, epsilon = 1e-9);

        // residual postcondition restated at a near-real point
        let z = ComplexPoint::new(0.1, 0.01);
        let m = mp_stieltjes_fixed_point(2.0, z, 1e-12).unwrap();
        let zc = Complex64::from(z);
        let resid = (m - 1.0 / (2.0 - 1.0 - zc - zc * m)).norm();
        assert!(resid <= 1e-12, "residual {resid}");

        let m = mp_stieltjes_fixed_point(0.5, ComplexPoint::new(0.0, 2.0), 1e-10).unwrap();
        assert!(m.im > 0.0);
    }

    #[test]
    fn fixed_point_rejects_bad_inputs() {
        assert!(mp_stieltjes_fixed_point(1.0, ComplexPoint::new(0.0, -1.0), 1e-10).is_err());
        assert!(mp_stieltjes_fixed_point(1.0, ComplexPoint::new(0.0, 1.0), 0.0).is_err());
        assert!(mp_stieltjes_fixed_point(-2.0, ComplexPoint::new(0.0, 1.0), 1e-10).is_err());
    }

    #[test]
    fn grid_layout() {
        let g = StieltjesGrid::new(8.0, 0.5, 33).unwrap();
        assert_eq!(g.points.len(), 33);
        assert_eq!(g.points[0].re, -8.0);
        assert_eq!(g.points[32].re, 8.0);
        assert!(g.points.windows(2).all(|w| w[0].re < w[1].re));
        assert!(g.points.iter().all(|p| p.im == 0.5));
        let single = StieltjesGrid::new(8.0, 0.5, 1).unwrap();
        assert_eq!(single.points[0].re, 0.0);
        assert!(StieltjesGrid::new(0.0, 0.5, 3).is_err());
        assert!(StieltjesGrid::new(1.0, 1.5, 3).is_err());
    }
}
