//! Batch verification over chart points and q-base seeds, with JSON/CSV
//! reports.
//!
//! A run is fully determined by its [`RunConfig`]: random seeds come from a
//! ChaCha8 stream seeded by `rng_seed`, records are produced in a fixed order
//! and the report carries no timestamps, so identical configs give
//! byte-identical reports.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::{qbase_polynomial, CirculantCoeffs, Vector4};
use crate::curvature::{PointGeometry, SymmetryResiduals};
use crate::error::{GeomError, Result};
use crate::fields::{make_family, parallel_residual_of, ChartPoint, DerivativeMode, FamilyKind, FieldFamilySpec};
use crate::frames::spectral_frame;

pub const TOOL_NAME: &str = "cml";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seeds closer than this to the degenerate locus of the q-base polynomial
/// are redrawn.
pub const SEED_POLY_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub family: FamilyKind,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: [f64; 4],
    pub max: [f64; 4],
    pub count: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PointsSpec {
    List(Vec<[f64; 4]>),
    Grid(GridSpec),
}

/// Explicit seed vectors or `"random:N"`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedsSpec {
    List(Vec<[f64; 4]>),
    Random(usize),
}

impl Serialize for SeedsSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SeedsSpec::List(v) => v.serialize(s),
            SeedsSpec::Random(n) => s.serialize_str(&format!("random:{n}")),
        }
    }
}

impl<'de> Deserialize<'de> for SeedsSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<[f64; 4]>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(SeedsSpec::List(v)),
            Raw::Text(t) => {
                let n = t
                    .strip_prefix("random:")
                    .and_then(|n| n.trim().parse::<usize>().ok())
                    .ok_or_else(|| de::Error::custom(format!("seeds: expected a vector list or \"random:N\", got {t:?}")))?;
                Ok(SeedsSpec::Random(n))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Spectral frame bound, scaled by `1 + A`.
    pub frame_tol: f64,
    /// Connection and curvature identities: `∇q`, metric compatibility,
    /// algebraic symmetries.
    pub curvature_tol: f64,
    /// Theorem-level checks: sectional equalities and zeros, the identity
    /// ladder, q-invariance of `R`.
    pub theorem_tol: f64,
}

impl Tolerances {
    pub fn defaults(mode: DerivativeMode) -> Self {
        match mode {
            DerivativeMode::Analytic => Tolerances {
                frame_tol: 1e-12,
                curvature_tol: 1e-9,
                theorem_tol: 1e-6,
            },
            DerivativeMode::FiniteDifference => Tolerances {
                frame_tol: 1e-12,
                curvature_tol: 1e-6,
                theorem_tol: 1e-5,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(GeomError::Config(format!("unknown format {other:?} (expected json|csv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilyConfig,
    pub points: PointsSpec,
    pub seeds: SeedsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub derivative_mode: DerivativeMode,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| GeomError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            GeomError::Config(m) => GeomError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_else(|| Tolerances::defaults(self.derivative_mode))
    }

    pub fn validate(&self) -> Result<()> {
        if let PointsSpec::Grid(g) = &self.points {
            if g.count.contains(&0) {
                return Err(GeomError::Config("points.grid.count: every axis needs count >= 1".into()));
            }
            if g.min.iter().chain(&g.max).any(|v| !v.is_finite()) {
                return Err(GeomError::Config("points.grid: bounds must be finite".into()));
            }
        }
        if let PointsSpec::List(v) = &self.points {
            if v.is_empty() {
                return Err(GeomError::Config("points.list: at least one point required".into()));
            }
        }
        match &self.seeds {
            SeedsSpec::Random(n) => {
                if *n == 0 {
                    return Err(GeomError::Config("seeds: random:N needs N >= 1".into()));
                }
                if self.rng_seed.is_none() {
                    return Err(GeomError::Config("rng_seed: required when seeds is \"random:N\"".into()));
                }
            }
            SeedsSpec::List(v) if v.is_empty() => {
                return Err(GeomError::Config("seeds: at least one seed vector required".into()))
            }
            _ => {}
        }
        let t = self.tolerances();
        for (name, v) in [
            ("frame_tol", t.frame_tol),
            ("curvature_tol", t.curvature_tol),
            ("theorem_tol", t.theorem_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GeomError::Config(format!("tolerances.{name}: must be positive, got {v}")));
            }
        }
        self.family_spec()?;
        Ok(())
    }

    pub fn family_spec(&self) -> Result<FieldFamilySpec> {
        let spec = make_family(self.family.family, &self.family.params)
            .map_err(|e| GeomError::Config(format!("family: {e}")))?
            .with_mode(self.derivative_mode);
        match self.family.fd_step {
            Some(h) => spec.with_fd_step(h).map_err(|e| GeomError::Config(format!("family.fd_step: {e}"))),
            None => Ok(spec),
        }
    }

    pub fn chart_points(&self) -> Vec<ChartPoint> {
        match &self.points {
            PointsSpec::List(v) => v.iter().map(|p| ChartPoint(*p)).collect(),
            PointsSpec::Grid(g) => {
                let axis = |a: usize| -> Vec<f64> {
                    let n = g.count[a];
                    if n == 1 {
                        return vec![g.min[a]];
                    }
                    (0..n)
                        .map(|k| g.min[a] + (g.max[a] - g.min[a]) * k as f64 / (n - 1) as f64)
                        .collect()
                };
                let axes: [Vec<f64>; 4] = std::array::from_fn(axis);
                let mut out = Vec::with_capacity(g.count.iter().product());
                for &a in &axes[0] {
                    for &b in &axes[1] {
                        for &c in &axes[2] {
                            for &d in &axes[3] {
                                out.push(ChartPoint([a, b, c, d]));
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

/// The portable generator behind every random draw in a run.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform vector in `[−1, 1]⁴`.
pub fn random_vector<R: Rng>(rng: &mut R) -> Vector4 {
    Vector4(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
}

/// Rejection-samples a q-base seed with `|polynomial| ≥ 1e−3`.
pub fn random_qbase_seed<R: Rng>(rng: &mut R) -> Vector4 {
    loop {
        let v = random_vector(rng);
        if qbase_polynomial(&v).abs() >= SEED_POLY_FLOOR {
            return v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionStatus {
    Pass,
    Fail,
    /// Residual above tolerance for a family not parallel by construction.
    Flagged,
    NotApplicable,
}

impl fmt::Display for CriterionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CriterionStatus::Pass => "pass",
            CriterionStatus::Fail => "fail",
            CriterionStatus::Flagged => "flagged",
            CriterionStatus::NotApplicable => "not applicable (non-parallel)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub status: CriterionStatus,
}

/// One (point, seed) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub point: [f64; 4],
    pub seed: [f64; 4],
    pub coeffs: CirculantCoeffs,
    pub frame_max_deviation: f64,
    pub parallel_residual: f64,
    pub nabla_q_residual: f64,
    pub metric_compatibility_residual: f64,
    pub symmetry_residuals: SymmetryResiduals,
    pub mu: [f64; 6],
    pub theorem3_residual: f64,
    /// `theorem3_residual / (1 + |μ₁|)`.
    pub theorem3_relative: f64,
    pub zero_residual: f64,
    pub identity_residuals: Vec<f64>,
    pub q_invariance_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub max_frame_relative: f64,
    pub max_parallel_residual: f64,
    pub max_nabla_q_residual: f64,
    pub max_metric_compatibility_residual: f64,
    pub max_symmetry_residual: f64,
    pub max_theorem3_relative: f64,
    pub max_zero_residual: f64,
    pub max_identity_residual: f64,
    pub max_q_invariance_residual: f64,
    pub criteria: Vec<CriterionResult>,
    pub status: CriterionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub rng_seed: Option<u64>,
    pub tolerances: Tolerances,
    pub identity_labels: Vec<String>,
    pub records: Vec<VerificationRecord>,
    pub summary: Summary,
}

fn max_of<F: Fn(&VerificationRecord) -> f64>(records: &[VerificationRecord], f: F) -> f64 {
    records.iter().map(f).fold(0.0, f64::max)
}

fn parallel_by_construction(kind: FamilyKind) -> bool {
    matches!(kind, FamilyKind::Constant | FamilyKind::SWave | FamilyKind::Twist)
}

/// Builds the summary from the records alone; re-running it on a parsed
/// report reproduces the stored summary.
pub fn summarize(records: &[VerificationRecord], tol: &Tolerances, family: FamilyKind) -> Summary {
    let max_frame_relative = max_of(records, |r| r.frame_max_deviation / (1.0 + r.coeffs.a.abs()));
    let max_parallel_residual = max_of(records, |r| r.parallel_residual);
    let max_nabla_q_residual = max_of(records, |r| r.nabla_q_residual);
    let max_metric_compatibility_residual = max_of(records, |r| r.metric_compatibility_residual);
    let max_symmetry_residual = max_of(records, |r| r.symmetry_residuals.max());
    let max_theorem3_relative = max_of(records, |r| r.theorem3_relative);
    let max_zero_residual = max_of(records, |r| r.zero_residual);
    let max_identity_residual = max_of(records, |r| r.identity_residuals.iter().copied().fold(0.0, f64::max));
    let max_q_invariance_residual = max_of(records, |r| r.q_invariance_residual);

    let check = |name: &str, v: f64, t: f64| CriterionResult {
        name: name.to_string(),
        max_residual: v,
        tolerance: t,
        status: if v <= t { CriterionStatus::Pass } else { CriterionStatus::Fail },
    };
    let mut parallel = check("nabla_q", max_nabla_q_residual, tol.curvature_tol);
    if parallel.status == CriterionStatus::Fail && !parallel_by_construction(family) {
        parallel.status = CriterionStatus::Flagged;
    }
    let is_parallel = parallel.status == CriterionStatus::Pass;
    let theorem = |name: &str, v: f64, t: f64| {
        let mut c = check(name, v, t);
        if !is_parallel {
            c.status = CriterionStatus::NotApplicable;
        }
        c
    };
    let criteria = vec![
        check("spectral_frame", max_frame_relative, tol.frame_tol),
        check("metric_compatibility", max_metric_compatibility_residual, tol.curvature_tol),
        check("riemann_symmetries", max_symmetry_residual, tol.curvature_tol),
        parallel,
        theorem("q_invariance", max_q_invariance_residual, tol.theorem_tol),
        theorem("sectional_equal", max_theorem3_relative, tol.theorem_tol),
        theorem("sectional_zero", max_zero_residual, tol.theorem_tol),
        theorem("identity_suite", max_identity_residual, tol.theorem_tol),
    ];
    let status = if criteria.iter().any(|c| c.status == CriterionStatus::Fail) {
        CriterionStatus::Fail
    } else {
        CriterionStatus::Pass
    };
    Summary {
        records: records.len(),
        max_frame_relative,
        max_parallel_residual,
        max_nabla_q_residual,
        max_metric_compatibility_residual,
        max_symmetry_residual,
        max_theorem3_relative,
        max_zero_residual,
        max_identity_residual,
        max_q_invariance_residual,
        criteria,
        status,
    }
}

/// Resolves the configured seeds plus, per seed, three auxiliary vectors
/// used for the q-invariance check of `R`.
fn seed_plan(config: &RunConfig) -> Vec<(Vector4, [Vector4; 3])> {
    let mut rng = seeded_rng(config.rng_seed.unwrap_or(0));
    let seeds: Vec<Vector4> = match &config.seeds {
        SeedsSpec::List(v) => v.iter().map(|s| Vector4(*s)).collect(),
        SeedsSpec::Random(n) => (0..*n).map(|_| random_qbase_seed(&mut rng)).collect(),
    };
    seeds
        .into_iter()
        .map(|s| {
            let aux = [random_vector(&mut rng), random_vector(&mut rng), random_vector(&mut rng)];
            (s, aux)
        })
        .collect()
}

/// Evaluates every (point, seed) pair without writing output.
pub fn evaluate(config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let spec = config.family_spec()?;
    let tol = config.tolerances();
    let plan = seed_plan(config);
    let points = config.chart_points();
    log::info!(
        "verify: family {} mode {:?}, {} points x {} seeds",
        spec.kind(),
        spec.derivative_mode,
        points.len(),
        plan.len()
    );

    let mut identity_labels = Vec::new();
    let mut records = Vec::with_capacity(points.len() * plan.len());
    for p in &points {
        let geo = PointGeometry::at(&spec, p).map_err(|e| GeomError::Config(format!("point {:?}: {e}", p.0)))?;
        let coeffs = geo.coeffs();
        let frame_max_deviation = spectral_frame(&coeffs)?.residual().max_deviation;
        let parallel_residual = parallel_residual_of(&geo.jet.grads);
        let nabla_q_residual = geo.nabla_q_residual();
        let metric_compatibility_residual = geo.metric_compatibility_residual();
        let symmetry_residuals = geo.riemann.symmetry_residuals();
        log::debug!("point {:?}: nabla_q {nabla_q_residual:e}", p.0);
        for (seed, aux) in &plan {
            let sections = geo.q_section_curvatures(seed)?;
            let identities = geo.identity_suite(seed)?;
            if identity_labels.is_empty() {
                identity_labels = identities.iter().map(|r| r.label.clone()).collect();
            }
            let q_invariance_residual = geo.q_invariance_residual(&[*seed, aux[0], aux[1], aux[2]]);
            records.push(VerificationRecord {
                point: p.0,
                seed: seed.0,
                coeffs,
                frame_max_deviation,
                parallel_residual,
                nabla_q_residual,
                metric_compatibility_residual,
                symmetry_residuals,
                mu: sections.mu,
                theorem3_residual: sections.theorem3_residual,
                theorem3_relative: sections.theorem3_residual / (1.0 + sections.mu[0].abs()),
                zero_residual: sections.zero_residual,
                identity_residuals: identities.iter().map(|r| r.residual).collect(),
                q_invariance_residual,
            });
        }
    }
    let summary = summarize(&records, &tol, spec.kind());
    Ok(VerificationReport {
        tool: ToolInfo {
            name: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
        },
        config: config.clone(),
        rng_seed: config.rng_seed,
        tolerances: tol,
        identity_labels,
        records,
        summary,
    })
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| GeomError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeomError::Config(e.to_string()))
    }

    /// One row per (point, seed).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["x1", "x2", "x3", "x4", "seed1", "seed2", "seed3", "seed4", "A", "B", "C"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(
            [
                "frame_max_deviation",
                "parallel_residual",
                "nabla_q_residual",
                "metric_compatibility_residual",
                "symmetry_residual",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        header.extend((1..=6).map(|k| format!("mu{k}")));
        header.extend(
            [
                "theorem3_residual",
                "theorem3_relative",
                "zero_residual",
                "identity_max",
                "q_invariance_residual",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        let csv_err = |e: csv::Error| GeomError::Io(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row: Vec<f64> = Vec::with_capacity(header.len());
            row.extend(r.point);
            row.extend(r.seed);
            row.extend([r.coeffs.a, r.coeffs.b, r.coeffs.c]);
            row.extend([
                r.frame_max_deviation,
                r.parallel_residual,
                r.nabla_q_residual,
                r.metric_compatibility_residual,
                r.symmetry_residuals.max(),
            ]);
            row.extend(r.mu);
            row.extend([
                r.theorem3_residual,
                r.theorem3_relative,
                r.zero_residual,
                r.identity_residuals.iter().copied().fold(0.0, f64::max),
                r.q_invariance_residual,
            ]);
            w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| GeomError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| GeomError::Io(e.to_string()))
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.status == CriterionStatus::Pass
    }
}

/// Evaluates the config and writes the report to `output.path` when set.
pub fn run_verify(config: &RunConfig) -> Result<VerificationReport> {
    let report = evaluate(config)?;
    if let Some(path) = &config.output.path {
        std::fs::write(path, report.render(config.output.format)?)?;
        log::info!("verify: report written to {}", path.display());
    }
    Ok(report)
}
