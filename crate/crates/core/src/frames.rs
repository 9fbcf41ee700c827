//! Orthonormal q-bases `{x, qx, q²x, q³x}`.
//!
//! Two constructions live here. [`spectral_frame`] builds the seed from the
//! circulant eigenvectors and is valid for every admissible point.
//! [`paper_frame`] evaluates the older closed-form seed (`x⁴ = 0`, `x¹`, `x³`
//! roots of a quadratic) literally and reports what it yields, failures
//! included.

use serde::{Deserialize, Serialize};

use crate::algebra::{inner, CirculantCoeffs, Vector4};
use crate::error::{GeomError, Result};
use crate::linalg::{self, Mat4};

/// A seed together with its q-iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFrame {
    pub seed: Vector4,
    pub vectors: [Vector4; 4],
    pub coeffs: CirculantCoeffs,
}

impl QFrame {
    pub fn from_seed(coeffs: CirculantCoeffs, seed: Vector4) -> Self {
        QFrame {
            seed,
            vectors: seed.q_orbit(),
            coeffs,
        }
    }

    pub fn residual(&self) -> FrameResidual {
        verify_frame(&self.coeffs, &self.seed)
    }
}

/// Gram matrix of a q-orbit and its distance from the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameResidual {
    pub gram: Mat4,
    pub max_deviation: f64,
}

impl FrameResidual {
    /// Largest `|gram[i][j] − gram[i+1][j+1]|`; zero up to rounding because `g`
    /// is q-invariant.
    pub fn circulance_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.gram[i][j] - self.gram[(i + 1) % 4][(j + 1) % 4]).abs());
            }
        }
        m
    }
}

/// Outcome of evaluating the printed closed-form seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaperStatus {
    Ok,
    NegativeDiscriminant,
    SqrtDomainFailure,
    ResidualExceedsTolerance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperConstructionReport {
    pub coeffs: CirculantCoeffs,
    pub x2: f64,
    pub sum_x1_x3: f64,
    pub prod_x1_x3: f64,
    pub discriminant_d: f64,
    pub candidate: Option<Vector4>,
    pub residual: Option<FrameResidual>,
    /// Gram deviation of [`spectral_frame`] at the same coefficients.
    pub spectral_max_deviation: f64,
    pub tolerance: f64,
    pub status: PaperStatus,
}

/// Default acceptance bound for a frame: `1e−12 · (1 + A)`.
pub fn default_frame_tolerance(c: &CirculantCoeffs) -> f64 {
    1e-12 * (1.0 + c.a.abs())
}

/// Gram matrix of `{seed, q·seed, q²·seed, q³·seed}` under `g(c)`.
pub fn verify_frame(c: &CirculantCoeffs, seed: &Vector4) -> FrameResidual {
    let orbit = seed.q_orbit();
    let gram: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| inner(c, &orbit[i], &orbit[j])));
    let max_deviation = linalg::max_abs_diff(&gram, &linalg::IDENTITY);
    FrameResidual { gram, max_deviation }
}

/// Seed `α(1,1,1,1) + β(1,−1,1,−1) + s(1,0,−1,0)` with each eigen-component
/// carrying the share of unit length that cancels the q-correlations:
/// `g`-norms `1/4`, `1/4`, `1/2`.
pub fn spectral_frame(c: &CirculantCoeffs) -> Result<QFrame> {
    c.check_admissible()?;
    let lambda0 = 4.0 * (c.a + c.c + 2.0 * c.b);
    let lambda2 = 4.0 * (c.a + c.c - 2.0 * c.b);
    let rot = c.a - c.c;
    let alpha = 1.0 / (2.0 * lambda0.sqrt());
    let beta = 1.0 / (2.0 * lambda2.sqrt());
    let s = 1.0 / (2.0 * rot.sqrt());
    let seed = Vector4::new(alpha + beta + s, alpha - beta, alpha + beta - s, alpha - beta);
    Ok(QFrame::from_seed(*c, seed))
}

pub fn paper_frame(c: &CirculantCoeffs) -> Result<PaperConstructionReport> {
    paper_frame_with_tolerance(c, default_frame_tolerance(c))
}

/// Literal evaluation of the printed seed: `x⁴ = 0`,
/// `x² = (√(A+B−2C) − √(A+B+2C)) / (2√(A+B−2C)√(A+B+2C))`, and `x¹`, `x³` the
/// roots of `t² − σt + π` with the printed sum `σ` and product `π`.
/// `x¹` takes the larger root.
pub fn paper_frame_with_tolerance(c: &CirculantCoeffs, tolerance: f64) -> Result<PaperConstructionReport> {
    c.check_admissible()?;
    let spectral_max_deviation = spectral_frame(c)?.residual().max_deviation;

    let minus = c.a + c.b - 2.0 * c.c;
    let plus = c.a + c.b + 2.0 * c.c;
    let mut report = PaperConstructionReport {
        coeffs: *c,
        x2: f64::NAN,
        sum_x1_x3: f64::NAN,
        prod_x1_x3: f64::NAN,
        discriminant_d: f64::NAN,
        candidate: None,
        residual: None,
        spectral_max_deviation,
        tolerance,
        status: PaperStatus::SqrtDomainFailure,
    };
    if !(minus > 0.0) || !(plus > 0.0) {
        log::debug!("paper_frame: radicand A+B-2C = {minus} leaves the real domain");
        return Ok(report);
    }
    let (rm, rp) = (minus.sqrt(), plus.sqrt());
    let x2 = (rm - rp) / (2.0 * rm * rp);
    let sum = (rm - rp) / (2.0 * rm * rp);
    let prod = (2.0 * c.b * c.b - c.c * c.c - c.a * c.c) / (2.0 * (c.a - c.c) * rm * rp);
    let disc = sum * sum - 4.0 * prod;
    report.x2 = x2;
    report.sum_x1_x3 = sum;
    report.prod_x1_x3 = prod;
    report.discriminant_d = disc;
    if disc < 0.0 {
        report.status = PaperStatus::NegativeDiscriminant;
        return Ok(report);
    }
    let root = disc.sqrt();
    let x1 = 0.5 * (sum + root);
    let x3 = 0.5 * (sum - root);
    let candidate = Vector4::try_new([x1, x2, x3, 0.0]).map_err(|_| GeomError::NonFinite("paper_frame candidate".into()))?;
    let residual = verify_frame(c, &candidate);
    report.status = if residual.max_deviation <= tolerance {
        PaperStatus::Ok
    } else {
        PaperStatus::ResidualExceedsTolerance
    };
    report.candidate = Some(candidate);
    report.residual = Some(residual);
    Ok(report)
}
