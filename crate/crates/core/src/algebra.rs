//! Pointwise algebra of the circulant metric `g` and the shift affinor `q`.
//!
//! The affinor acts on contravariant components by a cyclic left shift,
//! `(q x)^i = x^{i+1 mod 4}`, so `q e₁ = e₄`, `q e₂ = e₁` and so on. The metric
//! at a point is the symmetric circulant matrix with first row `(A, B, C, B)`.
//! Both commute, which is what makes `g(qx, qy) = g(x, y)` hold identically.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{self, Mat4};

/// Contravariant components of a tangent vector in the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector4(pub [f64; 4]);

impl Vector4 {
    pub const fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Vector4([x1, x2, x3, x4])
    }

    /// Builds a vector, rejecting NaN and infinite components.
    pub fn try_new(components: [f64; 4]) -> Result<Self> {
        if components.iter().all(|v| v.is_finite()) {
            Ok(Vector4(components))
        } else {
            Err(GeomError::NonFinite(format!("vector {components:?}")))
        }
    }

    pub fn basis(i: usize) -> Self {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        Vector4(v)
    }

    pub fn components(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Vector4(self.0.map(|v| v * s))
    }

    pub fn plus(&self, other: &Vector4) -> Self {
        Vector4(std::array::from_fn(|i| self.0[i] + other.0[i]))
    }

    pub fn minus(&self, other: &Vector4) -> Self {
        Vector4(std::array::from_fn(|i| self.0[i] - other.0[i]))
    }

    /// `q^k x`; see [`apply_q`].
    pub fn q(&self, k: i64) -> Self {
        apply_q(self, k)
    }

    /// The orbit `[x, qx, q²x, q³x]`.
    pub fn q_orbit(&self) -> [Vector4; 4] {
        std::array::from_fn(|k| apply_q(self, k as i64))
    }
}

/// Applies `q^k`; `k` is reduced modulo 4, negative powers included.
pub fn apply_q(x: &Vector4, k: i64) -> Vector4 {
    let shift = k.rem_euclid(4) as usize;
    Vector4(std::array::from_fn(|i| x.0[(i + shift) % 4]))
}

/// The affinor as an integer matrix, `q^k_j` with row index `k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QAction;

impl QAction {
    /// Integer matrix of `q`: `Q[i][i+1 mod 4] = 1`.
    pub fn matrix() -> [[i64; 4]; 4] {
        let mut m = [[0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[(i + 1) % 4] = 1;
        }
        m
    }

    /// `Q^k` by repeated integer multiplication; `k` reduced modulo 4 only
    /// when negative.
    pub fn matrix_power(k: u32) -> [[i64; 4]; 4] {
        let q = Self::matrix();
        let mut acc = [[0; 4]; 4];
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] = 1;
        }
        for _ in 0..k {
            let mut next = [[0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    next[i][j] = (0..4).map(|m| acc[i][m] * q[m][j]).sum();
                }
            }
            acc = next;
        }
        acc
    }

    /// `Q` as a float matrix, for tensor contractions.
    pub fn matrix_f64() -> Mat4 {
        Self::matrix().map(|row| row.map(|v| v as f64))
    }
}

/// Metric generators `(A, B, C)` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirculantCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CirculantCoeffs {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        CirculantCoeffs { a, b, c }
    }

    pub fn try_new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && c.is_finite() {
            Ok(CirculantCoeffs { a, b, c })
        } else {
            Err(GeomError::NonFinite(format!("coefficients ({a}, {b}, {c})")))
        }
    }

    pub fn metric(&self) -> MetricMatrix {
        metric_matrix(self)
    }

    pub fn is_admissible(&self) -> bool {
        is_admissible(self)
    }

    /// Names the first violated link of `0 < B < C < A`.
    pub fn check_admissible(&self) -> Result<()> {
        let violated = if !(self.b > 0.0) {
            "0 < B"
        } else if !(self.b < self.c) {
            "B < C"
        } else if !(self.c < self.a) {
            "C < A"
        } else {
            return Ok(());
        };
        Err(GeomError::NotAdmissible {
            violated: violated.to_string(),
            a: self.a,
            b: self.b,
            c: self.c,
        })
    }
}

/// Symmetric circulant 4×4 matrix with first row `(A, B, C, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix(pub Mat4);

impl MetricMatrix {
    pub fn entries(&self) -> &Mat4 {
        &self.0
    }

    pub fn inner(&self, x: &Vector4, y: &Vector4) -> f64 {
        linalg::bilinear(&self.0, &x.0, &y.0)
    }

    /// Succeeds iff the matrix is positive definite.
    pub fn cholesky(&self) -> Option<Mat4> {
        linalg::cholesky(&self.0)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    pub fn inverse(&self) -> Option<Mat4> {
        linalg::spd_inverse(&self.0)
    }
}

/// Circulant matrix built from an arbitrary first row `(r0, r1, r2, r1)`.
pub(crate) fn circulant(r0: f64, r1: f64, r2: f64) -> Mat4 {
    let row = [r0, r1, r2, r1];
    std::array::from_fn(|i| std::array::from_fn(|j| row[(j + 4 - i) % 4]))
}

pub fn metric_matrix(c: &CirculantCoeffs) -> MetricMatrix {
    MetricMatrix(circulant(c.a, c.b, c.c))
}

/// `det g = (A−C)²((A+C)² − 4B²)`.
pub fn metric_det_closed(c: &CirculantCoeffs) -> f64 {
    let d = c.a - c.c;
    let s = c.a + c.c;
    d * d * (s * s - 4.0 * c.b * c.b)
}

/// Spectrum `[A+2B+C, A−2B+C, A−C, A−C]` of the metric: eigenvectors are
/// `(1,1,1,1)`, `(1,−1,1,−1)` and the plane spanned by `(1,0,−1,0)`,
/// `(0,1,0,−1)`.
pub fn metric_eigenvalues(c: &CirculantCoeffs) -> [f64; 4] {
    [
        c.a + 2.0 * c.b + c.c,
        c.a - 2.0 * c.b + c.c,
        c.a - c.c,
        c.a - c.c,
    ]
}

/// Strict chain `0 < B < C < A`.
pub fn is_admissible(c: &CirculantCoeffs) -> bool {
    0.0 < c.b && c.b < c.c && c.c < c.a
}

/// `g_ij xⁱ yʲ`.
pub fn inner(c: &CirculantCoeffs, x: &Vector4, y: &Vector4) -> f64 {
    let (x, y) = (&x.0, &y.0);
    let mut diag = 0.0;
    let mut adj = 0.0;
    let mut opp = 0.0;
    for i in 0..4 {
        diag += x[i] * y[i];
        adj += x[i] * (y[(i + 1) % 4] + y[(i + 3) % 4]);
        opp += x[i] * y[(i + 2) % 4];
    }
    c.a * diag + c.b * adj + c.c * opp
}

/// `((x¹−x³)² + (x²−x⁴)²)(x¹−x²+x³−x⁴)(x¹+x²+x³+x⁴)` in floating point.
pub fn qbase_polynomial(x: &Vector4) -> f64 {
    let [x1, x2, x3, x4] = x.0;
    let rot = (x1 - x3).powi(2) + (x2 - x4).powi(2);
    rot * (x1 - x2 + x3 - x4) * (x1 + x2 + x3 + x4)
}

fn rational(v: f64) -> BigRational {
    BigRational::from_f64(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

/// Exact test that `{x, qx, q²x, q³x}` is a basis.
///
/// Every finite double is a rational number, so the two linear factors of the
/// independence polynomial are summed exactly; the quadratic factor vanishes
/// iff `x¹ = x³` and `x² = x⁴`.
pub fn qbase_predicate(x: &Vector4) -> bool {
    let [x1, x2, x3, x4] = x.0;
    if !x.0.iter().all(|v| v.is_finite()) {
        return false;
    }
    if x1 == x3 && x2 == x4 {
        return false;
    }
    let r: [BigRational; 4] = x.0.map(rational);
    let total = &r[0] + &r[1] + &r[2] + &r[3];
    let alternating = &r[0] - &r[1] + &r[2] - &r[3];
    !total.is_zero() && !alternating.is_zero()
}

/// Relative guard band for the floating-point predicate.
pub const QBASE_DET_EPS: f64 = 1e-10;

/// Floating-point form: `|det_qorbit(x)| > 1e−10 · (max|xᵢ|)⁴`.
pub fn qbase_predicate_tol(x: &Vector4) -> bool {
    let scale = x.max_abs().powi(4);
    scale > 0.0 && det_qorbit(x).abs() > QBASE_DET_EPS * scale
}

/// Determinant of the matrix with rows `x, qx, q²x, q³x`.
pub fn det_qorbit(x: &Vector4) -> f64 {
    let rows = x.q_orbit().map(|v| v.0);
    linalg::det4(&rows)
}
