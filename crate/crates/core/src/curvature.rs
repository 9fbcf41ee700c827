//! Levi-Civita connection, Riemann tensor and the q-section curvatures.
//!
//! Index conventions:
//!
//! * `Γ^k_{ij}` is stored as `gamma[k][i][j]`.
//! * `R_{ijkl} = g_{lm}(∂ᵢΓ^m_{jk} − ∂ⱼΓ^m_{ik} + Γ^m_{in}Γ^n_{jk} − Γ^m_{jn}Γ^n_{ik})`,
//!   i.e. `R(x, y, z, u) = g(R(x, y)z, u)` with
//!   `R(x, y) = ∇ₓ∇ᵧ − ∇ᵧ∇ₓ − ∇_{[x,y]}`.
//! * Sectional curvature uses the numerator `R(x, y, y, x)`, which is positive
//!   on a round sphere. Equalities and zeros among curvatures do not depend on
//!   this sign.

use serde::{Deserialize, Serialize};

use crate::algebra::{circulant, qbase_predicate, CirculantCoeffs, MetricMatrix, QAction, Vector4};
use crate::error::{GeomError, Result};
use crate::fields::{eval_jet, ChartPoint, FieldFamilySpec, FieldJet};
use crate::linalg::{self, Mat4};

pub type Tensor3 = [[[f64; 4]; 4]; 4];
pub type Tensor4 = [[[[f64; 4]; 4]; 4]; 4];

/// Second-order jet of a general metric at a point:
/// `dg[i][j][k] = ∂ᵢg_{jk}`, `ddg[i][j][k][l] = ∂ᵢ∂ⱼg_{kl}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: Mat4,
    pub dg: Tensor3,
    pub ddg: Tensor4,
}

impl MetricJet {
    pub fn from_field_jet(jet: &FieldJet) -> Self {
        let [ga, gb, gc] = &jet.grads;
        let [ha, hb, hc] = &jet.hessians;
        MetricJet {
            g: circulant(jet.value.a, jet.value.b, jet.value.c),
            dg: std::array::from_fn(|i| circulant(ga[i], gb[i], gc[i])),
            ddg: std::array::from_fn(|i| std::array::from_fn(|j| circulant(ha[i][j], hb[i][j], hc[i][j]))),
        }
    }
}

/// `Γ^k_{ij}` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelField {
    pub gamma: Tensor3,
}

impl ChristoffelField {
    /// Largest `|Γ^k_{ij} − Γ^k_{ji}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    m = m.max((self.gamma[k][i][j] - self.gamma[k][j][i]).abs());
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().flatten().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Covariant `(0,4)` Riemann tensor at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTensor {
    pub r: Tensor4,
}

/// Largest violations of the algebraic curvature identities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymmetryResiduals {
    pub antisym_first: f64,
    pub antisym_second: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisym_first.max(self.antisym_second).max(self.pair).max(self.bianchi)
    }
}

impl CurvatureTensor {
    /// `R(x, y, z, u)`.
    pub fn eval(&self, x: &Vector4, y: &Vector4, z: &Vector4, u: &Vector4) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            if x.0[i] == 0.0 {
                continue;
            }
            for j in 0..4 {
                if y.0[j] == 0.0 {
                    continue;
                }
                let xy = x.0[i] * y.0[j];
                for k in 0..4 {
                    let xyz = xy * z.0[k];
                    for l in 0..4 {
                        s += self.r[i][j][k][l] * xyz * u.0[l];
                    }
                }
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().flatten().flatten().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let r = &self.r;
        let mut out = SymmetryResiduals::default();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        out.antisym_first = out.antisym_first.max((r[i][j][k][l] + r[j][i][k][l]).abs());
                        out.antisym_second = out.antisym_second.max((r[i][j][k][l] + r[i][j][l][k]).abs());
                        out.pair = out.pair.max((r[i][j][k][l] - r[k][l][i][j]).abs());
                        out.bianchi = out
                            .bianchi
                            .max((r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l]).abs());
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &CurvatureTensor) -> f64 {
        let mut m: f64 = 0.0;
        for (a, b) in self.r.iter().flatten().flatten().flatten().zip(other.r.iter().flatten().flatten().flatten()) {
            m = m.max((a - b).abs());
        }
        m
    }
}

fn inverse_metric(g: &Mat4) -> Result<Mat4> {
    linalg::spd_inverse(g).ok_or(GeomError::NotPositiveDefinite)
}

/// Christoffel symbols of the first kind `Γ_{l,ij}`, stored `[l][i][j]`.
fn first_kind(dg: &Tensor3) -> Tensor3 {
    std::array::from_fn(|l| {
        std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])))
    })
}

fn raise(ginv: &Mat4, lowered: &Tensor3) -> Tensor3 {
    std::array::from_fn(|k| {
        std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|l| ginv[k][l] * lowered[l][i][j]).sum()))
    })
}

pub fn christoffel_from_jet(jet: &MetricJet) -> Result<ChristoffelField> {
    let ginv = inverse_metric(&jet.g)?;
    Ok(ChristoffelField {
        gamma: raise(&ginv, &first_kind(&jet.dg)),
    })
}

/// `max |∂ᵢg_{jk} − Γ^l_{ij}g_{lk} − Γ^l_{ik}g_{jl}|`.
pub fn metric_compatibility_residual(jet: &MetricJet, gamma: &ChristoffelField) -> f64 {
    let g = &jet.g;
    let gm = &gamma.gamma;
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut v = jet.dg[i][j][k];
                for l in 0..4 {
                    v -= gm[l][i][j] * g[l][k] + gm[l][i][k] * g[j][l];
                }
                m = m.max(v.abs());
            }
        }
    }
    m
}

pub fn riemann_from_jet(jet: &MetricJet) -> Result<CurvatureTensor> {
    let ginv = inverse_metric(&jet.g)?;
    let low = first_kind(&jet.dg);
    let gamma = raise(&ginv, &low);

    // dgamma[m][k][i][j] = ∂ₘΓ^k_{ij}
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        let dg_m = &jet.dg[m];
        let ddg_m = &jet.ddg[m];
        // ∂ₘg⁻¹ = −g⁻¹ (∂ₘg) g⁻¹
        let mut tmp = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                tmp[a][b] = (0..4).map(|c| dg_m[a][c] * ginv[c][b]).sum();
            }
        }
        let dginv: Mat4 =
            std::array::from_fn(|a| std::array::from_fn(|b| -(0..4).map(|c| ginv[a][c] * tmp[c][b]).sum::<f64>()));
        let dlow: Tensor3 = std::array::from_fn(|l| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| 0.5 * (ddg_m[i][j][l] + ddg_m[j][i][l] - ddg_m[l][i][j]))
            })
        });
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    dgamma[m][k][i][j] = (0..4)
                        .map(|l| dginv[k][l] * low[l][i][j] + ginv[k][l] * dlow[l][i][j])
                        .sum();
                }
            }
        }
    }

    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                // (R(∂ᵢ,∂ⱼ)∂ₖ)^m
                let up: [f64; 4] = std::array::from_fn(|m| {
                    let mut v = dgamma[i][m][j][k] - dgamma[j][m][i][k];
                    for n in 0..4 {
                        v += gamma[m][i][n] * gamma[n][j][k] - gamma[m][j][n] * gamma[n][i][k];
                    }
                    v
                });
                for l in 0..4 {
                    r[i][j][k][l] = (0..4).map(|m| jet.g[l][m] * up[m]).sum();
                }
            }
        }
    }
    Ok(CurvatureTensor { r })
}

/// `max |(∇ᵢq)ⱼᵏ| = max |Γ^k_{im} q^m_j − Γ^m_{ij} q^k_m|`.
pub fn nabla_q_of(gamma: &ChristoffelField) -> f64 {
    let q = QAction::matrix_f64();
    let gm = &gamma.gamma;
    let mut r: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let mut v = 0.0;
                for m in 0..4 {
                    v += gm[k][i][m] * q[m][j] - gm[m][i][j] * q[k][m];
                }
                r = r.max(v.abs());
            }
        }
    }
    r
}

/// Metric, connection and curvature evaluated once at a chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    pub point: ChartPoint,
    pub jet: FieldJet,
    pub metric_jet: MetricJet,
    pub christoffel: ChristoffelField,
    pub riemann: CurvatureTensor,
}

/// Relative threshold below which a 2-section counts as degenerate.
pub const DEGENERATE_SECTION_RTOL: f64 = 1e-12;

/// The six q-sections, as orbit indices `(k, l)` for `{qᵏx, qˡx}`.
pub const Q_SECTIONS: [(usize, usize); 6] = [(0, 1), (0, 2), (3, 0), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionalReport {
    pub mu: [f64; 6],
    pub denominators: [f64; 6],
    /// Max pairwise difference among μ₁, μ₃, μ₄, μ₆.
    pub theorem3_residual: f64,
    /// `max(|μ₂|, |μ₅|)`.
    pub zero_residual: f64,
}

/// One displayed equation of the proof ladder and its normalized residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub label: String,
    pub residual: f64,
}

impl PointGeometry {
    pub fn at(spec: &FieldFamilySpec, p: &ChartPoint) -> Result<Self> {
        let jet = eval_jet(spec, p)?;
        let metric_jet = MetricJet::from_field_jet(&jet);
        let christoffel = christoffel_from_jet(&metric_jet)?;
        let riemann = riemann_from_jet(&metric_jet)?;
        Ok(PointGeometry {
            point: *p,
            jet,
            metric_jet,
            christoffel,
            riemann,
        })
    }

    pub fn coeffs(&self) -> CirculantCoeffs {
        self.jet.value
    }

    pub fn metric(&self) -> MetricMatrix {
        MetricMatrix(self.metric_jet.g)
    }

    pub fn inner(&self, x: &Vector4, y: &Vector4) -> f64 {
        linalg::bilinear(&self.metric_jet.g, &x.0, &y.0)
    }

    pub fn nabla_q_residual(&self) -> f64 {
        nabla_q_of(&self.christoffel)
    }

    pub fn metric_compatibility_residual(&self) -> f64 {
        metric_compatibility_residual(&self.metric_jet, &self.christoffel)
    }

    /// `(R(x,y,y,x), g(x,x)g(y,y) − g(x,y)²)`.
    fn section_parts(&self, x: &Vector4, y: &Vector4) -> (f64, f64) {
        let (xx, yy, xy) = (self.inner(x, x), self.inner(y, y), self.inner(x, y));
        (self.riemann.eval(x, y, y, x), xx * yy - xy * xy)
    }

    pub fn sectional(&self, x: &Vector4, y: &Vector4) -> Result<f64> {
        let (num, den) = self.section_parts(x, y);
        let scale = self.inner(x, x) * self.inner(y, y);
        if !(den > DEGENERATE_SECTION_RTOL * scale) {
            return Err(GeomError::DegenerateSection(den));
        }
        Ok(num / den)
    }

    pub fn q_section_curvatures(&self, x: &Vector4) -> Result<SectionalReport> {
        if !qbase_predicate(x) {
            return Err(GeomError::NotQBase(x.0));
        }
        let orbit = x.q_orbit();
        let mut mu = [0.0; 6];
        let mut denominators = [0.0; 6];
        for (s, &(k, l)) in Q_SECTIONS.iter().enumerate() {
            mu[s] = self.sectional(&orbit[k], &orbit[l])?;
            denominators[s] = self.section_parts(&orbit[k], &orbit[l]).1;
        }
        let equal = [mu[0], mu[2], mu[3], mu[5]];
        let mut theorem3_residual: f64 = 0.0;
        for a in 0..4 {
            for b in (a + 1)..4 {
                theorem3_residual = theorem3_residual.max((equal[a] - equal[b]).abs());
            }
        }
        Ok(SectionalReport {
            mu,
            denominators,
            theorem3_residual,
            zero_residual: mu[1].abs().max(mu[4].abs()),
        })
    }

    /// Residuals of the displayed curvature identities on the orbit of `x`,
    /// each divided by `max(1, |R(x, qx, x, qx)|)`.
    pub fn identity_suite(&self, x: &Vector4) -> Result<Vec<IdentityResidual>> {
        if !qbase_predicate(x) {
            return Err(GeomError::NotQBase(x.0));
        }
        let o = x.q_orbit();
        let r = |a: usize, b: usize, c: usize, d: usize| self.riemann.eval(&o[a], &o[b], &o[c], &o[d]);
        let r1 = r(0, 1, 0, 1);
        let norm = r1.abs().max(1.0);
        let rows: [(&str, f64); 19] = [
            ("a: R(x,qx,x,qx) = R(x,q3x,x,q3x)", r1 - r(0, 3, 0, 3)),
            ("a: R(x,q2x,x,q2x) = 0", r(0, 2, 0, 2)),
            ("b: R(x,qx,x,q2x) = 0", r(0, 1, 0, 2)),
            ("b: R(x,q2x,qx,q2x) = 0", r(0, 2, 1, 2)),
            ("b: R(x,q3x,q2x,x) = 0", r(0, 3, 2, 0)),
            ("b: R(x,q3x,qx,q3x) = 0", r(0, 3, 1, 3)),
            ("c: -R(x,qx,x,q3x) = R(x,qx,x,qx)", -r(0, 1, 0, 3) - r1),
            ("c: R(x,qx,qx,q2x) = R(x,qx,x,qx)", r(0, 1, 1, 2) - r1),
            ("c: R(x,qx,q2x,q3x) = R(x,qx,x,qx)", r(0, 1, 2, 3) - r1),
            ("d: R(x,q2x,qx,q3x) = 0", r(0, 2, 1, 3)),
            ("d: R(x,q2x,q2x,q3x) = 0", r(0, 2, 2, 3)),
            ("d: R(qx,q2x,qx,q3x) = 0", r(1, 2, 1, 3)),
            ("e: -R(x,q3x,qx,q2x) = R(x,qx,x,qx)", -r(0, 3, 1, 2) - r1),
            ("e: -R(x,q3x,q2x,q3x) = R(x,qx,x,qx)", -r(0, 3, 2, 3) - r1),
            ("e: R(qx,q2x,q2x,q3x) = R(x,qx,x,qx)", r(1, 2, 2, 3) - r1),
            ("e: R(qx,q3x,q2x,q3x) = 0", r(1, 3, 2, 3)),
            ("f: R(qx,q3x,qx,q3x) = 0", r(1, 3, 1, 3)),
            ("f: R(qx,q2x,qx,q2x) = R(x,qx,x,qx)", r(1, 2, 1, 2) - r1),
            ("f: R(q2x,q3x,q2x,q3x) = R(x,qx,x,qx)", r(2, 3, 2, 3) - r1),
        ];
        Ok(rows
            .into_iter()
            .map(|(label, v)| IdentityResidual {
                label: label.to_string(),
                residual: v.abs() / norm,
            })
            .collect())
    }

    /// `max_k |R(x,y,qᵏz,qᵏu) − R(x,y,z,u)|` over `k = 1, 2, 3`, divided by
    /// `max(1, max_k |R(x,y,qᵏz,qᵏu)|)`.
    pub fn q_invariance_residual(&self, v: &[Vector4; 4]) -> f64 {
        let [x, y, z, u] = v;
        let values: [f64; 4] = std::array::from_fn(|k| self.riemann.eval(x, y, &z.q(k as i64), &u.q(k as i64)));
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        values[1..].iter().map(|w| (w - values[0]).abs()).fold(0.0, f64::max) / scale
    }
}

pub fn christoffel(spec: &FieldFamilySpec, p: &ChartPoint) -> Result<ChristoffelField> {
    let jet = eval_jet(spec, p)?;
    christoffel_from_jet(&MetricJet::from_field_jet(&jet))
}

pub fn nabla_q_residual(spec: &FieldFamilySpec, p: &ChartPoint) -> Result<f64> {
    Ok(nabla_q_of(&christoffel(spec, p)?))
}

pub fn riemann(spec: &FieldFamilySpec, p: &ChartPoint) -> Result<CurvatureTensor> {
    Ok(PointGeometry::at(spec, p)?.riemann)
}

pub fn sectional(spec: &FieldFamilySpec, p: &ChartPoint, x: &Vector4, y: &Vector4) -> Result<f64> {
    PointGeometry::at(spec, p)?.sectional(x, y)
}

pub fn q_section_curvatures(spec: &FieldFamilySpec, p: &ChartPoint, x: &Vector4) -> Result<SectionalReport> {
    PointGeometry::at(spec, p)?.q_section_curvatures(x)
}

pub fn identity_suite(spec: &FieldFamilySpec, p: &ChartPoint, x: &Vector4) -> Result<Vec<IdentityResidual>> {
    PointGeometry::at(spec, p)?.identity_suite(x)
}

pub fn q_invariance_residual(spec: &FieldFamilySpec, p: &ChartPoint, vectors: &[Vector4; 4]) -> Result<f64> {
    Ok(PointGeometry::at(spec, p)?.q_invariance_residual(vectors))
}
