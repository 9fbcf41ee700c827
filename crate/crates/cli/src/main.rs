use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cml_core::curvature::{PointGeometry, SymmetryResiduals};
use cml_core::verify::{random_qbase_seed, seeded_rng, OutputFormat, SeedsSpec};
use cml_core::{
    metric_det_closed, metric_eigenvalues, metric_matrix, paper_frame, pyramid_report, qbase_polynomial,
    qbase_predicate, spectral_frame, verify_frame, ChartPoint, CirculantCoeffs, DerivativeMode, FrameResidual,
    GeomError, PaperConstructionReport, PyramidReport, RunConfig, SectionalReport, Vector4,
};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "cml", version, about = "Circulant metric geometry: q-bases, curvature and verification reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Metric matrix, spectrum, determinant and admissibility at a point
    Inspect(InspectArgs),
    /// q-base predicate and orthonormal q-frame constructions
    Qbase(QbaseArgs),
    /// Edge lengths and face angles of the q-orbit tetrahedron
    Pyramid(PyramidArgs),
    /// Connection, Riemann tensor and q-section curvatures at one chart point
    Curvature(CurvatureArgs),
    /// Full verification run driven by a JSON config
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Fd,
}

impl From<ModeArg> for DerivativeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analytic => DerivativeMode::Analytic,
            ModeArg::Fd => DerivativeMode::FiniteDifference,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct OutArgs {
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, value_parser = parse_triple)]
    coeffs: Option<CirculantCoeffs>,
    /// Evaluate the config's family at `--point` instead of `--coeffs`
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_quad)]
    point: Option<[f64; 4]>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct QbaseArgs {
    #[arg(long, value_parser = parse_triple)]
    coeffs: CirculantCoeffs,
    /// Also test this vector as a q-base seed
    #[arg(long, value_parser = parse_quad)]
    seed_vector: Option<[f64; 4]>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PyramidArgs {
    #[arg(long, value_parser = parse_triple)]
    coeffs: CirculantCoeffs,
    /// Apex vector x; defaults to the spectral orthonormal seed
    #[arg(long, value_parser = parse_quad)]
    seed_vector: Option<[f64; 4]>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CurvatureArgs {
    #[arg(long)]
    config: PathBuf,
    /// Chart point; defaults to the first configured point
    #[arg(long, value_parser = parse_quad)]
    point: Option<[f64; 4]>,
    /// q-base seed; defaults to the configured seeds
    #[arg(long, value_parser = parse_quad)]
    seed_vector: Option<[f64; 4]>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; N] = vals
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))?;
    if arr.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(arr)
}

fn parse_triple(s: &str) -> Result<CirculantCoeffs, String> {
    let [a, b, c] = parse_list::<3>(s)?;
    Ok(CirculantCoeffs::new(a, b, c))
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    parse_list::<4>(s)
}

/// Failure category mapped to an exit code.
enum Failure {
    Config(String),
    Verification(String),
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn emit<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
    text.push('\n');
    write_text(&text, out.as_deref())
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct InspectOutput {
    coeffs: CirculantCoeffs,
    metric: [[f64; 4]; 4],
    eigenvalues: [f64; 4],
    det_closed: f64,
    admissible: bool,
    positive_definite: bool,
}

fn inspect(args: &InspectArgs) -> Result<(), Failure> {
    let coeffs = match (&args.coeffs, &args.config) {
        (Some(c), None) => *c,
        (None, Some(path)) => {
            let cfg = RunConfig::load(path)?;
            let p = args.point.map(ChartPoint).unwrap_or(ChartPoint::ORIGIN);
            cfg.family_spec()?.coeffs(&p)
        }
        _ => return Err(Failure::Config("inspect: give exactly one of --coeffs or --config".into())),
    };
    let g = metric_matrix(&coeffs);
    emit(
        &InspectOutput {
            coeffs,
            metric: g.0,
            eigenvalues: metric_eigenvalues(&coeffs),
            det_closed: metric_det_closed(&coeffs),
            admissible: coeffs.is_admissible(),
            positive_definite: g.is_positive_definite(),
        },
        &args.out.out,
    )
}

#[derive(Serialize)]
struct SeedCheck {
    seed: [f64; 4],
    polynomial: f64,
    is_qbase: bool,
    residual: FrameResidual,
}

#[derive(Serialize)]
struct QbaseOutput {
    coeffs: CirculantCoeffs,
    seed_check: Option<SeedCheck>,
    spectral_seed: Vector4,
    spectral_vectors: [Vector4; 4],
    spectral_residual: FrameResidual,
    paper_construction: PaperConstructionReport,
}

fn qbase(args: &QbaseArgs) -> Result<(), Failure> {
    let c = args.coeffs;
    let frame = spectral_frame(&c)?;
    let residual = frame.residual();
    let seed_check = args.seed_vector.map(|s| {
        let v = Vector4(s);
        SeedCheck {
            seed: s,
            polynomial: qbase_polynomial(&v),
            is_qbase: qbase_predicate(&v),
            residual: verify_frame(&c, &v),
        }
    });
    let tol = cml_core::frames::default_frame_tolerance(&c);
    emit(
        &QbaseOutput {
            coeffs: c,
            seed_check,
            spectral_seed: frame.seed,
            spectral_vectors: frame.vectors,
            spectral_residual: residual,
            paper_construction: paper_frame(&c)?,
        },
        &args.out.out,
    )?;
    if residual.max_deviation > tol {
        return Err(Failure::Verification(format!(
            "spectral frame Gram deviation {:e} exceeds {tol:e}",
            residual.max_deviation
        )));
    }
    Ok(())
}

fn pyramid(args: &PyramidArgs) -> Result<(), Failure> {
    let c = args.coeffs;
    let x = match args.seed_vector {
        Some(s) => Vector4(s),
        None => spectral_frame(&c)?.seed,
    };
    #[derive(Serialize)]
    struct Out {
        coeffs: CirculantCoeffs,
        seed: Vector4,
        report: PyramidReport,
    }
    emit(
        &Out {
            coeffs: c,
            seed: x,
            report: pyramid_report(&c, &x)?,
        },
        &args.out.out,
    )
}

#[derive(Serialize)]
struct SeedSections {
    seed: Vector4,
    sections: SectionalReport,
    max_identity_residual: f64,
}

#[derive(Serialize)]
struct CurvatureOutput {
    point: [f64; 4],
    mode: DerivativeMode,
    coeffs: CirculantCoeffs,
    nabla_q_residual: f64,
    metric_compatibility_residual: f64,
    symmetry_residuals: SymmetryResiduals,
    christoffel: [[[f64; 4]; 4]; 4],
    riemann: [[[[f64; 4]; 4]; 4]; 4],
    seeds: Vec<SeedSections>,
}

fn with_mode(mut cfg: RunConfig, mode: Option<ModeArg>) -> RunConfig {
    if let Some(m) = mode {
        cfg.derivative_mode = m.into();
    }
    cfg
}

fn curvature(args: &CurvatureArgs) -> Result<(), Failure> {
    let cfg = with_mode(RunConfig::load(&args.config)?, args.mode);
    let spec = cfg.family_spec()?;
    let point = match args.point {
        Some(p) => ChartPoint::try_new(p)?,
        None => cfg.chart_points()[0],
    };
    let seeds: Vec<Vector4> = match (args.seed_vector, &cfg.seeds) {
        (Some(s), _) => vec![Vector4(s)],
        (None, SeedsSpec::List(v)) => v.iter().map(|s| Vector4(*s)).collect(),
        (None, SeedsSpec::Random(n)) => {
            let mut rng = seeded_rng(cfg.rng_seed.unwrap_or(0));
            (0..*n).map(|_| random_qbase_seed(&mut rng)).collect()
        }
    };
    let geo = PointGeometry::at(&spec, &point)?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for s in seeds {
        let sections = geo.q_section_curvatures(&s)?;
        let ids = geo.identity_suite(&s)?;
        per_seed.push(SeedSections {
            seed: s,
            sections,
            max_identity_residual: ids.iter().map(|r| r.residual).fold(0.0, f64::max),
        });
    }
    emit(
        &CurvatureOutput {
            point: point.0,
            mode: spec.derivative_mode,
            coeffs: geo.coeffs(),
            nabla_q_residual: geo.nabla_q_residual(),
            metric_compatibility_residual: geo.metric_compatibility_residual(),
            symmetry_residuals: geo.riemann.symmetry_residuals(),
            christoffel: geo.christoffel.gamma,
            riemann: geo.riemann.r,
            seeds: per_seed,
        },
        &args.out.out,
    )
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let mut cfg = with_mode(RunConfig::load(&args.config)?, args.mode);
    if let Some(f) = args.format {
        cfg.output.format = match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        };
    }
    if args.out.out.is_some() {
        cfg.output.path = args.out.out.clone();
    }
    let report = cml_core::run_verify(&cfg)?;
    if cfg.output.path.is_none() {
        write_text(&report.render(cfg.output.format)?, None)?;
    }
    for c in &report.summary.criteria {
        eprintln!("{:<22} {:<30} max {:.3e} (tol {:.1e})", c.name, c.status.to_string(), c.max_residual, c.tolerance);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("one or more criteria failed".into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CML_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Inspect(a) => inspect(a),
        Command::Qbase(a) => qbase(a),
        Command::Pyramid(a) => pyramid(a),
        Command::Curvature(a) => curvature(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
