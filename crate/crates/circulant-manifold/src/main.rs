//! Command-line interface: classify a metric, run the cross-validation
//! battery, or dump every tensor object at a point. Reports are JSON on
//! stdout; errors go to stderr.
//!
//! Exit codes: 0 success, 1 input or domain error, 2 indeterminate
//! classification or failed verification checks.

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use circulant_manifold::classifier::{
    classify, evaluate_point, SampleBox, SamplePlan, Tolerances,
};
use circulant_manifold::connection::christoffel_generic;
use circulant_manifold::corpus::load_metric;
use circulant_manifold::error::Error;
use circulant_manifold::fundamental::{
    f_closed, nijenhuis_p, theta_closed, theta_tilde,
};
use circulant_manifold::jet::Point4;
use circulant_manifold::manifold::{
    associated_metric_at, inverse_closed, metric_at, MetricSpec,
};
use circulant_manifold::report::{ClassifyReport, ComponentsReport, VerifyReport, SCHEMA_VERSION};
use circulant_manifold::verify::{verify_metric, Defect};

#[derive(Parser)]
#[command(
    name = "circulant-manifold",
    version,
    about = "Tensor computation and class diagnostics for circulant-metric 4-manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide class membership at sampled domain points.
    Classify(ClassifyArgs),
    /// Cross-validate every closed form against its independent oracle.
    Verify(VerifyArgs),
    /// Dump g, g̃, g⁻¹, Γ, F, θ, θ̃ and the Nijenhuis tensor at a point.
    Components(ComponentsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Number of admitted sample points.
    #[arg(long, default_value_t = SamplePlan::DEFAULT_SAMPLES)]
    samples: usize,

    /// Seed for the deterministic sampler.
    #[arg(long, default_value_t = SamplePlan::DEFAULT_SEED)]
    seed: u64,

    /// Sampling box: either one `lo:hi` applied to all four coordinates or
    /// four comma-separated ranges `lo:hi,lo:hi,lo:hi,lo:hi`.
    #[arg(long)]
    r#box: Option<String>,

    /// Override or add a constant binding (repeatable): `--const a=3`.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    constants: Vec<String>,

    /// Hold tolerance for scaled residuals; the reject margin is 1000x.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,

    /// Emit compact single-line JSON instead of pretty-printed JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Metric to classify: `builtin:<name>` or a `.mspec` file path.
    #[arg(long)]
    metric: String,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Metrics to verify (repeatable). Defaults to all builtins.
    #[arg(long)]
    metric: Vec<String>,

    #[command(flatten)]
    common: CommonArgs,

    /// Corrupt one closed-form component before comparison (sensitivity
    /// fixture for the test suite).
    #[arg(long, hide = true, value_name = "TARGET")]
    mutate: Option<String>,
}

#[derive(Args)]
struct ComponentsArgs {
    /// Metric to evaluate: `builtin:<name>` or a `.mspec` file path.
    #[arg(long)]
    metric: String,

    /// Evaluation point `x1,x2,x3,x4`.
    #[arg(long)]
    point: String,

    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Classify(args) => run_classify(args),
        Command::Verify(args) => run_verify(args),
        Command::Components(args) => run_components(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_constants(pairs: &[String]) -> Result<Vec<(String, f64)>, Error> {
    pairs
        .iter()
        .map(|pair| {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Io(format!("bad --const `{pair}`, expected NAME=VALUE")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Io(format!("bad --const value in `{pair}`")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

fn parse_box(arg: &str) -> Result<SampleBox, Error> {
    let parse_range = |piece: &str| -> Result<(f64, f64), Error> {
        let (lo, hi) = piece
            .split_once(':')
            .ok_or_else(|| Error::Io(format!("bad box range `{piece}`, expected lo:hi")))?;
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| Error::Io(format!("bad box bound `{lo}`")))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| Error::Io(format!("bad box bound `{hi}`")))?;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::Io(format!("empty box range `{piece}`")));
        }
        Ok((lo, hi))
    };
    let pieces: Vec<&str> = arg.split(',').collect();
    match pieces.len() {
        1 => {
            let r = parse_range(pieces[0])?;
            Ok(SampleBox([r; 4]))
        }
        4 => {
            let mut ranges = [(0.0, 0.0); 4];
            for (slot, piece) in ranges.iter_mut().zip(pieces) {
                *slot = parse_range(piece)?;
            }
            Ok(SampleBox(ranges))
        }
        n => Err(Error::Io(format!(
            "--box takes 1 or 4 comma-separated ranges, got {n}"
        ))),
    }
}

/// Fallback box for user-supplied metrics without an explicit `--box`.
const DEFAULT_BOX: SampleBox = SampleBox([(1.1, 2.0); 4]);

fn resolve_metric(
    arg: &str,
    common: &CommonArgs,
) -> Result<(String, MetricSpec, SampleBox), Error> {
    let (label, mut spec, builtin_box) = load_metric(arg)?;
    for (name, value) in parse_constants(&common.constants)? {
        spec.override_constant(&name, value);
    }
    let bbox = match &common.r#box {
        Some(text) => parse_box(text)?,
        None => builtin_box.unwrap_or(DEFAULT_BOX),
    };
    Ok((label, spec, bbox))
}

fn emit<T: serde::Serialize>(report: &T, compact: bool) {
    let text = if compact {
        serde_json::to_string(report)
    } else {
        serde_json::to_string_pretty(report)
    }
    .expect("report serialization cannot fail");
    println!("{text}");
}

fn run_classify(args: ClassifyArgs) -> Result<ExitCode, Error> {
    let (label, spec, bbox) = resolve_metric(&args.metric, &args.common)?;
    let plan = SamplePlan::new(args.common.samples, args.common.seed, bbox);
    let tol = Tolerances::from_hold(args.common.tolerance);
    let classification = classify(&spec, &plan, &tol)?;
    let indeterminate = classification.has_indeterminate();
    let report = ClassifyReport::new(label, spec.constants.clone(), classification);
    emit(&report, args.common.json);
    Ok(if indeterminate {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let defect = match &args.mutate {
        Some(name) => Some(
            Defect::parse(name)
                .ok_or_else(|| Error::Io(format!("unknown --mutate target `{name}`")))?,
        ),
        None => None,
    };
    let metric_args: Vec<String> = if args.metric.is_empty() {
        ["w0", "w3bar", "w6bar", "w1", "w2"]
            .iter()
            .map(|n| format!("builtin:{n}"))
            .collect()
    } else {
        args.metric.clone()
    };
    let mut verifications = Vec::new();
    for arg in &metric_args {
        let (label, spec, bbox) = resolve_metric(arg, &args.common)?;
        let plan = SamplePlan::new(args.common.samples, args.common.seed, bbox);
        verifications.push(verify_metric(
            &label,
            &spec,
            &plan,
            args.common.tolerance,
            defect,
        )?);
    }
    let report = VerifyReport::new(args.common.seed, args.common.samples, verifications);
    let passed = report.all_passed;
    emit(&report, args.common.json);
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run_components(args: ComponentsArgs) -> Result<ExitCode, Error> {
    let (label, spec, _) = resolve_metric(&args.metric, &args.common)?;
    let point: Point4 = args.point.parse()?;
    let bundle = spec.bundle_at(&point)?;

    // cross-validate at this point before dumping anything
    let point_eval = evaluate_point(&bundle)?;
    let worst = point_eval
        .cross_checks
        .christoffel_closed_vs_generic
        .max(point_eval.cross_checks.f_closed_vs_oracle)
        .max(point_eval.cross_checks.theta_closed_vs_contraction)
        .max(point_eval.cross_checks.inverse_closed_vs_elimination);
    if worst > args.common.tolerance * 1e3 {
        return Err(Error::Domain(format!(
            "closed-form/oracle disagreement {worst:.3e} at {point}"
        )));
    }

    let (g_inverse, data) = inverse_closed(&bundle)?;
    let theta = theta_closed(&bundle);
    let report = ComponentsReport {
        schema_version: SCHEMA_VERSION,
        tool_version: circulant_manifold::report::tool_version().to_string(),
        command: "components".to_string(),
        metric: label,
        point,
        constants: spec.constants.clone(),
        coefficients: BTreeMap::from([
            ("A".to_string(), bundle.a),
            ("B".to_string(), bundle.b),
            ("C".to_string(), bundle.c),
        ]),
        g: metric_at(&bundle),
        g_tilde: associated_metric_at(&bundle),
        g_inverse,
        g_inverse_coefficients: data,
        christoffel: *christoffel_generic(&bundle)?.as_tensor(),
        fundamental: *f_closed(&bundle).as_tensor(),
        theta: theta.components(),
        theta_tilde: theta_tilde(&theta).components(),
        nijenhuis: nijenhuis_p(),
    };
    emit(&report, args.common.json);
    Ok(ExitCode::SUCCESS)
}
