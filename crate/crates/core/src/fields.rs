//! The generators `A`, `B`, `C` as scalar fields on a chart of R⁴.
//!
//! Built-in families:
//!
//! * `constant(A₀, B₀, C₀)`: flat reference.
//! * `s_wave(c₀, ε, a₀, b₀)`: `C = c₀ + ε sin s`, `A = C + a₀`,
//!   `B = 2c₀ + b₀ + ε sin s` with `s = x¹+x²+x³+x⁴`. Parallel, and flat.
//! * `twist(c₀, ε, a₀, b₀)`: `F = ε sin(x¹−x³) cos(x²−x⁴)`, `C = c₀ + F`,
//!   `A = c₀ + a₀ − F`, `B = b₀`. Parallel with non-zero curvature.
//! * `control(A₀, κ, B₀, C₀)`: `A = A₀ + κ sin x¹`, `B = B₀`, `C = C₀`. Not
//!   parallel for `κ ≠ 0`.
//!
//! Parallelism of `q` is equivalent to `∂ᵢA = ∂_{i+2}C` and
//! `∂ᵢB = ½(∂_{i+1}C + ∂_{i+3}C)` (indices mod 4).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::CirculantCoeffs;
use crate::error::{GeomError, Result};

/// Point of the chart `D ⊂ R⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChartPoint(pub [f64; 4]);

impl ChartPoint {
    pub const ORIGIN: ChartPoint = ChartPoint([0.0; 4]);

    pub fn try_new(coords: [f64; 4]) -> Result<Self> {
        if coords.iter().all(|v| v.is_finite()) {
            Ok(ChartPoint(coords))
        } else {
            Err(GeomError::NonFinite(format!("chart point {coords:?}")))
        }
    }

    fn shifted(&self, axis: usize, h: f64) -> ChartPoint {
        let mut c = self.0;
        c[axis] += h;
        ChartPoint(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    #[default]
    Analytic,
    #[serde(alias = "fd")]
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Constant,
    SWave,
    Twist,
    Control,
    Custom,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::Constant => "constant",
            FamilyKind::SWave => "s_wave",
            FamilyKind::Twist => "twist",
            FamilyKind::Control => "control",
            FamilyKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Values, gradients and Hessians of `(A, B, C)`; index 0 is `A`, 1 is `B`,
/// 2 is `C`.
pub type Values3 = [f64; 3];
pub type Grads3 = [[f64; 4]; 3];
pub type Hessians3 = [[[f64; 4]; 4]; 3];

/// A user-defined field. Derivatives must be supplied in closed form.
pub trait CoeffField: Send + Sync + fmt::Debug {
    fn values(&self, p: &ChartPoint) -> Values3;
    fn gradients(&self, p: &ChartPoint) -> Grads3;
    fn hessians(&self, p: &ChartPoint) -> Hessians3;
}

#[derive(Debug, Clone)]
enum Family {
    Constant { a: f64, b: f64, c: f64 },
    SWave { c0: f64, eps: f64, a0: f64, b0: f64 },
    Twist { c0: f64, eps: f64, a0: f64, b0: f64 },
    Control { a0: f64, kappa: f64, b0: f64, c0: f64 },
    Custom(Arc<dyn CoeffField>),
}

/// A validated field family with its derivative mode.
#[derive(Debug, Clone)]
pub struct FieldFamilySpec {
    family: Family,
    pub derivative_mode: DerivativeMode,
    pub fd_step: f64,
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Value and first two derivatives of the generators at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldJet {
    pub value: CirculantCoeffs,
    pub grads: Grads3,
    pub hessians: Hessians3,
}

fn outer(u: &[f64; 4], v: &[f64; 4]) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| u[i] * v[j]))
}

fn check_params(kind: FamilyKind, params: &[f64], len: usize) -> Result<()> {
    if params.len() != len {
        return Err(GeomError::InvalidFamily(format!(
            "{kind} expects {len} parameters, got {}",
            params.len()
        )));
    }
    if let Some(v) = params.iter().find(|v| !v.is_finite()) {
        return Err(GeomError::InvalidFamily(format!("{kind}: non-finite parameter {v}")));
    }
    Ok(())
}

fn range_violation(kind: FamilyKind, what: &str, detail: String) -> GeomError {
    GeomError::InvalidFamily(format!("{kind}: {what} violated over the chart: {detail}"))
}

/// Validates parameters and builds an analytic-mode spec.
///
/// Admissibility is checked over the full range of the oscillating term, so a
/// valid family is admissible at every chart point.
pub fn make_family(kind: FamilyKind, params: &[f64]) -> Result<FieldFamilySpec> {
    let family = match kind {
        FamilyKind::Constant => {
            check_params(kind, params, 3)?;
            let c = CirculantCoeffs::new(params[0], params[1], params[2]);
            c.check_admissible()?;
            Family::Constant { a: c.a, b: c.b, c: c.c }
        }
        FamilyKind::SWave => {
            check_params(kind, params, 4)?;
            let (c0, eps, a0, b0) = (params[0], params[1], params[2], params[3]);
            let e = eps.abs();
            let (c_lo, c_hi) = (c0 - e, c0 + e);
            let (b_lo, b_hi) = (2.0 * c0 + b0 - e, 2.0 * c0 + b0 + e);
            if !(b_lo > 0.0) {
                return Err(range_violation(kind, "0 < B", format!("B in [{b_lo}, {b_hi}]")));
            }
            if !(c0 + b0 < 0.0) {
                return Err(range_violation(
                    kind,
                    "B < C",
                    format!("B in [{b_lo}, {b_hi}], C in [{c_lo}, {c_hi}], B - C = {}", c0 + b0),
                ));
            }
            if !(a0 > 0.0) {
                return Err(range_violation(kind, "C < A", format!("A - C = {a0}")));
            }
            Family::SWave { c0, eps, a0, b0 }
        }
        FamilyKind::Twist => {
            check_params(kind, params, 4)?;
            let (c0, eps, a0, b0) = (params[0], params[1], params[2], params[3]);
            let e = eps.abs();
            if !(b0 > 0.0) {
                return Err(range_violation(kind, "0 < B", format!("B = {b0}")));
            }
            if !(b0 < c0 - e) {
                return Err(range_violation(
                    kind,
                    "B < C",
                    format!("B = {b0}, C in [{}, {}]", c0 - e, c0 + e),
                ));
            }
            if !(a0 > 2.0 * e) {
                return Err(range_violation(kind, "C < A", format!("A - C in [{}, {}]", a0 - 2.0 * e, a0 + 2.0 * e)));
            }
            Family::Twist { c0, eps, a0, b0 }
        }
        FamilyKind::Control => {
            check_params(kind, params, 4)?;
            let (a0, kappa, b0, c0) = (params[0], params[1], params[2], params[3]);
            let e = kappa.abs();
            if !(b0 > 0.0) {
                return Err(range_violation(kind, "0 < B", format!("B = {b0}")));
            }
            if !(b0 < c0) {
                return Err(range_violation(kind, "B < C", format!("B = {b0}, C = {c0}")));
            }
            if !(c0 < a0 - e) {
                return Err(range_violation(kind, "C < A", format!("C = {c0}, A in [{}, {}]", a0 - e, a0 + e)));
            }
            Family::Control { a0, kappa, b0, c0 }
        }
        FamilyKind::Custom => {
            return Err(GeomError::InvalidFamily(
                "custom fields need analytic derivatives; build them with FieldFamilySpec::custom".into(),
            ))
        }
    };
    Ok(FieldFamilySpec {
        family,
        derivative_mode: DerivativeMode::Analytic,
        fd_step: DEFAULT_FD_STEP,
    })
}

impl FieldFamilySpec {
    pub fn custom(field: Arc<dyn CoeffField>) -> Self {
        FieldFamilySpec {
            family: Family::Custom(field),
            derivative_mode: DerivativeMode::Analytic,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.derivative_mode = mode;
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(GeomError::InvalidFamily(format!("fd_step must be positive, got {step}")));
        }
        self.fd_step = step;
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::Constant { .. } => FamilyKind::Constant,
            Family::SWave { .. } => FamilyKind::SWave,
            Family::Twist { .. } => FamilyKind::Twist,
            Family::Control { .. } => FamilyKind::Control,
            Family::Custom(_) => FamilyKind::Custom,
        }
    }

    /// Parameter vector in the order accepted by [`make_family`]; empty for
    /// custom fields.
    pub fn params(&self) -> Vec<f64> {
        match self.family {
            Family::Constant { a, b, c } => vec![a, b, c],
            Family::SWave { c0, eps, a0, b0 } | Family::Twist { c0, eps, a0, b0 } => vec![c0, eps, a0, b0],
            Family::Control { a0, kappa, b0, c0 } => vec![a0, kappa, b0, c0],
            Family::Custom(_) => Vec::new(),
        }
    }

    /// `(A, B, C)` at `p`, without admissibility checks.
    pub fn values(&self, p: &ChartPoint) -> Values3 {
        let x = &p.0;
        match &self.family {
            Family::Constant { a, b, c } => [*a, *b, *c],
            Family::SWave { c0, eps, a0, b0 } => {
                let w = eps * x.iter().sum::<f64>().sin();
                let c = c0 + w;
                [c + a0, 2.0 * c0 + b0 + w, c]
            }
            Family::Twist { c0, eps, a0, b0 } => {
                let f = eps * (x[0] - x[2]).sin() * (x[1] - x[3]).cos();
                [c0 + a0 - f, *b0, c0 + f]
            }
            Family::Control { a0, kappa, b0, c0 } => [a0 + kappa * x[0].sin(), *b0, *c0],
            Family::Custom(field) => field.values(p),
        }
    }

    pub fn coeffs(&self, p: &ChartPoint) -> CirculantCoeffs {
        let [a, b, c] = self.values(p);
        CirculantCoeffs::new(a, b, c)
    }

    fn analytic_derivatives(&self, p: &ChartPoint) -> (Grads3, Hessians3) {
        let x = &p.0;
        let zero_g = [[0.0; 4]; 3];
        let zero_h = [[[0.0; 4]; 4]; 3];
        match &self.family {
            Family::Constant { .. } => (zero_g, zero_h),
            Family::SWave { eps, .. } => {
                let s: f64 = x.iter().sum();
                let g = [eps * s.cos(); 4];
                let h = [[-eps * s.sin(); 4]; 4];
                ([g; 3], [h; 3])
            }
            Family::Twist { eps, .. } => {
                let (r, w) = (x[0] - x[2], x[1] - x[3]);
                let (sr, cr, sw, cw) = (r.sin(), r.cos(), w.sin(), w.cos());
                let fr = eps * cr * cw;
                let fw = -eps * sr * sw;
                let frr = -eps * sr * cw;
                let fww = -eps * sr * cw;
                let frw = -eps * cr * sw;
                let u = [1.0, 0.0, -1.0, 0.0];
                let v = [0.0, 1.0, 0.0, -1.0];
                let grad_f: [f64; 4] = std::array::from_fn(|i| fr * u[i] + fw * v[i]);
                let (uu, uv, vu, vv) = (outer(&u, &u), outer(&u, &v), outer(&v, &u), outer(&v, &v));
                let hess_f: [[f64; 4]; 4] = std::array::from_fn(|i| {
                    std::array::from_fn(|j| frr * uu[i][j] + frw * (uv[i][j] + vu[i][j]) + fww * vv[i][j])
                });
                let neg_g = grad_f.map(|v| -v);
                let neg_h = hess_f.map(|row| row.map(|v| -v));
                ([neg_g, [0.0; 4], grad_f], [neg_h, [[0.0; 4]; 4], hess_f])
            }
            Family::Control { kappa, .. } => {
                let mut g = zero_g;
                let mut h = zero_h;
                g[0][0] = kappa * x[0].cos();
                h[0][0][0] = -kappa * x[0].sin();
                (g, h)
            }
            Family::Custom(field) => (field.gradients(p), field.hessians(p)),
        }
    }

    /// Central differences with one Richardson level for gradients, nested
    /// central differences at ten times the step for Hessians.
    fn fd_derivatives(&self, p: &ChartPoint) -> (Grads3, Hessians3) {
        let h = self.fd_step;
        let mut grads = [[0.0; 4]; 3];
        for i in 0..4 {
            let central = |step: f64| -> Values3 {
                let fp = self.values(&p.shifted(i, step));
                let fm = self.values(&p.shifted(i, -step));
                std::array::from_fn(|f| (fp[f] - fm[f]) / (2.0 * step))
            };
            let coarse = central(h);
            let fine = central(0.5 * h);
            for f in 0..3 {
                grads[f][i] = (4.0 * fine[f] - coarse[f]) / 3.0;
            }
        }

        let hh = 10.0 * h;
        let mut hess = [[[0.0; 4]; 4]; 3];
        for i in 0..4 {
            for j in i..4 {
                let at = |si: f64, sj: f64| self.values(&p.shifted(i, si * hh).shifted(j, sj * hh));
                let (pp, pm, mp, mm) = (at(1.0, 1.0), at(1.0, -1.0), at(-1.0, 1.0), at(-1.0, -1.0));
                for f in 0..3 {
                    let v = (pp[f] - pm[f] - mp[f] + mm[f]) / (4.0 * hh * hh);
                    hess[f][i][j] = v;
                    hess[f][j][i] = v;
                }
            }
        }
        (grads, hess)
    }
}

/// Value, gradients and Hessians of the generators at `p`.
pub fn eval_jet(spec: &FieldFamilySpec, p: &ChartPoint) -> Result<FieldJet> {
    let p = ChartPoint::try_new(p.0)?;
    let value = spec.coeffs(&p);
    let value = CirculantCoeffs::try_new(value.a, value.b, value.c)?;
    value.check_admissible()?;
    let (grads, hessians) = match spec.derivative_mode {
        DerivativeMode::Analytic => spec.analytic_derivatives(&p),
        DerivativeMode::FiniteDifference => spec.fd_derivatives(&p),
    };
    Ok(FieldJet {
        value,
        grads,
        hessians,
    })
}

/// Residual of the parallelism criterion on the gradients at `p`.
pub fn parallel_residual(spec: &FieldFamilySpec, p: &ChartPoint) -> Result<f64> {
    let jet = eval_jet(spec, p)?;
    Ok(parallel_residual_of(&jet.grads))
}

/// Max over `i` of `|∂ᵢA − ∂_{i+2}C|` and `|∂ᵢB − ½(∂_{i+1}C + ∂_{i+3}C)|`.
pub fn parallel_residual_of(grads: &Grads3) -> f64 {
    let [ga, gb, gc] = grads;
    let mut r: f64 = 0.0;
    for i in 0..4 {
        r = r.max((ga[i] - gc[(i + 2) % 4]).abs());
        r = r.max((gb[i] - 0.5 * (gc[(i + 1) % 4] + gc[(i + 3) % 4])).abs());
    }
    r
}
