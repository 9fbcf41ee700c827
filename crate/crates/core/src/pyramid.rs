//! The tetrahedron `LNST` with `PL = x`, `PN = qx`, `PS = q²x`, `PT = q³x`.
//!
//! Since `q` is a g-isometry, the four edges `LN`, `NS`, `ST`, `LT` share one
//! length and `LS`, `NT` share another, so every face is an isosceles triangle
//! with base angles `γ` and apex angle `δ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{inner, qbase_predicate, CirculantCoeffs, Vector4};
use crate::error::{GeomError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PyramidReport {
    pub cos_alpha: f64,
    pub cos_beta: f64,
    /// `‖LN‖²`, shared by `NS`, `ST`, `LT`.
    pub edge_sq_long: f64,
    /// `‖LS‖²`, shared by `NT`.
    pub edge_sq_short: f64,
    pub cos_gamma: f64,
    pub cos_delta: f64,
    /// `|2γ + δ − π|`.
    pub angle_sum_residual: f64,
    /// Largest gap between the closed-form cosines and the law of cosines
    /// applied to the explicit edge vectors of face `LNS`.
    pub law_of_cosines_residual: f64,
}

/// Squared edge lengths in the order `LN, NS, ST, LT, LS, NT`.
pub fn edge_lengths_sq(c: &CirculantCoeffs, x: &Vector4) -> [f64; 6] {
    let o = x.q_orbit();
    let sq = |a: usize, b: usize| {
        let d = o[b].minus(&o[a]);
        inner(c, &d, &d)
    };
    [sq(0, 1), sq(1, 2), sq(2, 3), sq(0, 3), sq(0, 2), sq(1, 3)]
}

fn clamp_acos(v: f64) -> f64 {
    v.clamp(-1.0, 1.0).acos()
}

pub fn pyramid_report(c: &CirculantCoeffs, x: &Vector4) -> Result<PyramidReport> {
    if !qbase_predicate(x) {
        return Err(GeomError::DegeneratePyramid(format!("{:?} does not generate a q-base", x.0)));
    }
    let norm_sq = inner(c, x, x);
    if !(norm_sq > 0.0) {
        return Err(GeomError::DegeneratePyramid(format!("g(x,x) = {norm_sq} is not positive")));
    }
    let cos_alpha = inner(c, x, &x.q(1)) / norm_sq;
    let cos_beta = inner(c, x, &x.q(2)) / norm_sq;
    if !(cos_alpha < 1.0) || !(cos_beta < 1.0) {
        return Err(GeomError::DegeneratePyramid(format!(
            "degenerate apex: cos alpha = {cos_alpha}, cos beta = {cos_beta}"
        )));
    }
    let one_a = 1.0 - cos_alpha;
    let one_b = 1.0 - cos_beta;
    let cos_gamma = one_b / (2.0 * one_a.sqrt() * one_b.sqrt());
    let cos_delta = (1.0 - 2.0 * cos_alpha + cos_beta) / (2.0 * one_a);

    let gamma = clamp_acos(cos_gamma);
    let delta = clamp_acos(cos_delta);

    // Law of cosines on face LNS: base angle at L, apex angle at N.
    let o = x.q_orbit();
    let (ln, ls, ns) = (o[1].minus(&o[0]), o[2].minus(&o[0]), o[2].minus(&o[1]));
    let g = |u: &Vector4, v: &Vector4| inner(c, u, v);
    let law_gamma = g(&ln, &ls) / (g(&ln, &ln) * g(&ls, &ls)).sqrt();
    let law_delta = g(&ln.scaled(-1.0), &ns) / (g(&ln, &ln) * g(&ns, &ns)).sqrt();

    Ok(PyramidReport {
        cos_alpha,
        cos_beta,
        edge_sq_long: 2.0 * norm_sq * one_a,
        edge_sq_short: 2.0 * norm_sq * one_b,
        cos_gamma,
        cos_delta,
        angle_sum_residual: (2.0 * gamma + delta - PI).abs(),
        law_of_cosines_residual: (law_gamma - cos_gamma).abs().max((law_delta - cos_delta).abs()),
    })
}
