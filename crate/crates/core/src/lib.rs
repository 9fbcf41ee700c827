//! Numerical geometry of 4-dimensional Riemannian manifolds whose metric `g`
//! and affinor `q` have circulant coordinate matrices.
//!
//! * [`algebra`]: the q-action, the circulant metric at a point, q-base tests.
//! * [`frames`]: orthonormal q-bases.
//! * [`fields`]: `A`, `B`, `C` as fields on a chart, with derivatives.
//! * [`curvature`]: connection, Riemann tensor, sectional curvatures of the
//!   six q-sections.
//! * [`pyramid`]: the tetrahedron spanned by a q-orbit.
//! * [`verify`]: batch runs and reports.

// Index loops mirror the tensor notation; `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod curvature;
pub mod error;
pub mod fields;
pub mod frames;
pub mod linalg;
pub mod pyramid;
pub mod verify;

pub use algebra::{
    apply_q, det_qorbit, inner, is_admissible, metric_det_closed, metric_eigenvalues, metric_matrix,
    qbase_polynomial, qbase_predicate, qbase_predicate_tol, CirculantCoeffs, MetricMatrix, QAction, Vector4,
};
pub use curvature::{
    christoffel, identity_suite, nabla_q_residual, q_invariance_residual, q_section_curvatures, riemann, sectional,
    ChristoffelField, CurvatureTensor, IdentityResidual, MetricJet, PointGeometry, SectionalReport,
    SymmetryResiduals,
};
pub use error::{GeomError, Result};
pub use fields::{
    eval_jet, make_family, parallel_residual, ChartPoint, CoeffField, DerivativeMode, FamilyKind, FieldFamilySpec,
    FieldJet,
};
pub use frames::{
    paper_frame, paper_frame_with_tolerance, spectral_frame, verify_frame, FrameResidual, PaperConstructionReport,
    PaperStatus, QFrame,
};
pub use pyramid::{pyramid_report, PyramidReport};
pub use verify::{run_verify, RunConfig, VerificationReport};
