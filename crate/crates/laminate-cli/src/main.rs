//! Command-line front end: exact Young-measure weights, splitting-tree
//! checking, hull queries, and laminate certificate construction and
//! verification, all over JSON.
//!
//! Exit codes: 0 on success, 1 when a verification fails or a construction
//! is infeasible, 2 on malformed input. All randomized paths are seeded and
//! reproduce byte-identical output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use laminate::cube::{build_frame, symmetric_laminate_with_search, CubeFrame, LaminateCertificate};
use laminate::hulls::{
    classify_flagged, pc_membership, surface_point, PcMembership, RankOneSquare,
    RuledSurfacePatch, SquareClass,
};
use laminate::mat2::Mat2;
use laminate::measures::{
    barycenter, flatten_forest, flatten_tree, jensen_check, symmetric_pattern, AtomicMeasure,
    MeasureForest, SplittingTree, ValidationOutcome,
};
use laminate::periodic::{exact_weights, mc_weights, PeriodicDeformation};
use laminate::scalar::Scalar;
use laminate::verify::{battery, check_inequality, main_theorem_suite, TestFunction};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "laminate", version, about = "Laminates on rank-one cubes: exact weights, hulls, and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Young-measure weights of a periodic sawtooth deformation.
    Weights(CommonArgs),
    /// Validate a splitting tree and report order, flattened measure, and
    /// Jensen margins.
    CheckTree(CommonArgs),
    /// Classify a rank-one square and decide polyconvex membership of a
    /// query point.
    Hull(HullArgs),
    /// Normalize a cube frame and print its coefficients and case.
    Frame(CommonArgs),
    /// Construct a symmetric laminate certificate for a frame and target
    /// ratio.
    Laminate(CommonArgs),
    /// Verify a certificate, or run the full margin check on a frame.
    Verify(CommonArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Args)]
struct CommonArgs {
    /// Input file path, or '-' for standard input.
    input: Option<PathBuf>,
    /// Inline JSON input (alternative to a path).
    #[arg(long)]
    json: Option<String>,
    /// Arithmetic mode. Construction paths require exact input; float mode
    /// serves the Monte-Carlo and query paths.
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Seed for every randomized path (Monte-Carlo sampling, battery
    /// generation).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo sample count; selects the sampling path of `weights`.
    #[arg(long)]
    mc: Option<u64>,
    /// Write the JSON output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Witness-search resolution (bound on direction parameters).
    #[arg(long, default_value_t = laminate::cube::DEFAULT_SEARCH_BOUND)]
    grid: i64,
    /// Number of battery functions used for margin tables.
    #[arg(long, default_value_t = 24)]
    battery_size: usize,
}

#[derive(Args)]
struct HullArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample the ruled filling on an N x N grid and emit line-delimited
    /// JSON records (t, u, point) after the main output.
    #[arg(long)]
    mesh: Option<usize>,
}

/// Failures carrying the intended process exit code.
enum CliError {
    /// Malformed or unusable input (exit 2).
    Input(String),
    /// A verification failed or a construction is infeasible (exit 1).
    Verification(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Verification(_) => ExitCode::from(1),
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Verification(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Weights(args) => run_weights(args),
        Command::CheckTree(args) => run_check_tree(args),
        Command::Hull(args) => run_hull(args),
        Command::Frame(args) => run_frame(args),
        Command::Laminate(args) => run_laminate(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn read_input(args: &CommonArgs) -> Result<String, CliError> {
    if let Some(inline) = &args.json {
        return Ok(inline.clone());
    }
    match &args.input {
        Some(path) if path.as_os_str() == "-" => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(input_err)?;
            Ok(buf)
        }
        Some(path) => std::fs::read_to_string(path).map_err(input_err),
        None => Err(CliError::Input(
            "no input: pass a file path, '-' for stdin, or --json".into(),
        )),
    }
}

fn parse<T: serde::de::DeserializeOwned>(args: &CommonArgs) -> Result<T, CliError> {
    let text = read_input(args)?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "malformed JSON at line {}, column {}: {}",
            e.line(),
            e.column(),
            e
        ))
    })
}

fn emit(args: &CommonArgs, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(input_err)?;
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(input_err),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require_exact(args: &CommonArgs, what: &str) -> Result<(), CliError> {
    if args.mode == Mode::Float {
        return Err(CliError::Input(format!(
            "{what} runs on exact input only; drop --mode float"
        )));
    }
    Ok(())
}

// --- weights -------------------------------------------------------------------

fn run_weights(args: &CommonArgs) -> Result<(), CliError> {
    #[derive(Deserialize)]
    struct In {
        modes: Vec<laminate::periodic::SawtoothMode>,
    }
    let input: In = parse(args)?;
    let deformation = PeriodicDeformation::new(input.modes).map_err(input_err)?;
    let measure = match args.mc {
        Some(samples) => {
            if samples == 0 {
                return Err(CliError::Input("--mc needs at least one sample".into()));
            }
            mc_weights(&deformation, samples, args.seed)
        }
        None => {
            require_exact(args, "exact weight computation")?;
            exact_weights(&deformation).map_err(input_err)?
        }
    };
    let value = json!({
        "n": measure.n(),
        "weights": measure.to_string_map(),
    });
    emit(args, &value)
}

// --- check-tree ----------------------------------------------------------------

fn jensen_table(
    trees: &[&SplittingTree],
    fns: &[TestFunction],
) -> (Vec<serde_json::Value>, bool) {
    let mut rows = Vec::new();
    let mut all_ok = true;
    for f in fns {
        let mut min_node = f64::INFINITY;
        let mut global = 0.0f64;
        let mut ok = true;
        for tree in trees {
            let report = jensen_check(tree, &|x| f.eval(x));
            ok &= report.passed();
            global += report.global_margin.to_f64();
            if let Some(m) = report.min_node_margin() {
                min_node = min_node.min(m.to_f64());
            }
        }
        all_ok &= ok;
        rows.push(json!({
            "function": f.tag(),
            "global_margin": global,
            "min_node_margin": if min_node.is_finite() { min_node } else { 0.0 },
            "passed": ok,
        }));
    }
    (rows, all_ok)
}

fn run_check_tree(args: &CommonArgs) -> Result<(), CliError> {
    require_exact(args, "tree checking")?;
    let tree: SplittingTree = parse(args)?;
    match tree.validate() {
        ValidationOutcome::Valid { order } => {
            let flattened = flatten_tree(&tree).map_err(input_err)?;
            let fns = battery(args.seed, args.battery_size);
            let (rows, all_ok) = jensen_table(&[&tree], &fns);
            let value = json!({
                "valid": true,
                "order": order,
                "barycenter": tree.barycenter(),
                "flattened": measure_json(&flattened),
                "jensen": rows,
            });
            emit(args, &value)?;
            if all_ok {
                Ok(())
            } else {
                Err(CliError::Verification(
                    "Jensen margins negative for a battery member".into(),
                ))
            }
        }
        ValidationOutcome::Invalid(v) => {
            let value = json!({
                "valid": false,
                "violation": v.to_string(),
            });
            emit(args, &value)?;
            Err(CliError::Verification(format!("invalid tree: {v}")))
        }
    }
}

fn measure_json(m: &AtomicMeasure) -> serde_json::Value {
    serde_json::Value::Array(
        m.atoms()
            .iter()
            .map(|(p, w)| json!({"point": p, "weight": w}))
            .collect(),
    )
}

// --- hull ----------------------------------------------------------------------

fn run_hull(args: &HullArgs) -> Result<(), CliError> {
    #[derive(Deserialize)]
    struct In {
        points: Vec<Mat2>,
        query: Mat2,
    }
    let mut input: In = parse(&args.common)?;
    if args.common.mode == Mode::Float {
        for p in &mut input.points {
            *p = float_mat(p);
        }
        input.query = float_mat(&input.query);
    }

    let classification = if input.points.len() == 4 {
        RankOneSquare::new(
            input.points[0].clone(),
            input.points[1].clone(),
            input.points[2].clone(),
            input.points[3].clone(),
        )
        .ok()
        .map(|sq| {
            let (class, flagged) = classify_flagged(&sq);
            (sq, class, flagged)
        })
    } else {
        None
    };

    let membership = pc_membership(&input.points, &input.query);
    let membership_json = match &membership {
        PcMembership::Feasible(w) => json!({"feasible": true, "weights": w}),
        PcMembership::Infeasible => json!({"feasible": false}),
    };
    let class_json = classification
        .as_ref()
        .map(|(_, class, flagged)| json!({"case": class, "tolerance_flagged": flagged}))
        .unwrap_or(serde_json::Value::Null);
    let value = json!({
        "classification": class_json,
        "membership": membership_json,
    });
    emit(&args.common, &value)?;

    if let Some(n) = args.mesh {
        let Some((sq, SquareClass::OppositeSign, _)) = classification else {
            return Err(CliError::Input(
                "--mesh needs an opposite-sign rank-one square".into(),
            ));
        };
        let patch = RuledSurfacePatch::new(sq).map_err(input_err)?;
        let n = n.max(2);
        for i in 0..=n {
            for j in 0..=n {
                let t = Scalar::ratio(i as i64, n as i64);
                let u = Scalar::ratio(j as i64, n as i64);
                let point = surface_point(&patch, &t, &u).map_err(input_err)?;
                let line = json!({"t": t, "u": u, "point": point});
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn float_mat(m: &Mat2) -> Mat2 {
    Mat2::new(
        m.m11.to_float_mode(),
        m.m12.to_float_mode(),
        m.m21.to_float_mode(),
        m.m22.to_float_mode(),
    )
}

// --- frame ---------------------------------------------------------------------

#[derive(Deserialize, Serialize, Clone)]
struct FrameIn {
    #[serde(rename = "C1")]
    c1: Mat2,
    #[serde(rename = "C2")]
    c2: Mat2,
    #[serde(rename = "C3")]
    c3: Mat2,
}

fn build_frame_from(input: &FrameIn) -> Result<CubeFrame, CliError> {
    build_frame(input.c1.clone(), input.c2.clone(), input.c3.clone())
        .map_err(|e| CliError::Input(e.to_string()))
}

fn frame_json(frame: &CubeFrame) -> serde_json::Value {
    let [a, b, c] = frame.coefficients();
    let signs = frame.vertex_det_signs();
    let case = if frame.is_degenerate() {
        "degenerate"
    } else if signs.iter().any(|&s| s > 0) {
        "case2"
    } else {
        "case1"
    };
    json!({
        "a": a,
        "b": b,
        "c": c,
        "flips": frame.flips(),
        "det_flip": frame.det_flip(),
        "degenerate": frame.is_degenerate(),
        "vertex_det_signs": signs,
        "case": case,
    })
}

fn run_frame(args: &CommonArgs) -> Result<(), CliError> {
    require_exact(args, "frame normalization")?;
    let input: FrameIn = parse(args)?;
    let frame = build_frame_from(&input)?;
    emit(args, &frame_json(&frame))
}

// --- laminate ------------------------------------------------------------------

fn run_laminate(args: &CommonArgs) -> Result<(), CliError> {
    require_exact(args, "laminate construction")?;
    #[derive(Deserialize)]
    struct In {
        #[serde(flatten)]
        frame: FrameIn,
        target_ratio: Scalar,
    }
    let input: In = parse(args)?;
    let frame = build_frame_from(&input.frame)?;
    let cert = symmetric_laminate_with_search(&frame, &input.target_ratio, args.grid)
        .map_err(|e| CliError::Verification(format!("construction failed: {e}")))?;
    let value = certificate_json(&input.frame, &cert);
    emit(args, &value)
}

fn certificate_json(frame: &FrameIn, cert: &LaminateCertificate) -> serde_json::Value {
    json!({
        "schema_version": cert.schema_version,
        "frame": frame,
        "case": cert.case,
        "alpha": cert.alpha,
        "beta": cert.beta,
        "achieved_ratio": cert.achieved_ratio,
        "component_ratios": cert.component_ratios,
        "normalization": {
            "flips": cert.normalization.flips,
            "det_flip": cert.normalization.det_flip,
            "permutation": cert.normalization.permutation,
            "swapped_classes": cert.normalization.swapped_classes,
        },
        "forest": cert.forest,
        "flattened": measure_json(&cert.flattened),
    })
}

// --- verify --------------------------------------------------------------------

#[derive(Deserialize)]
struct CertificateIn {
    frame: FrameIn,
    alpha: Scalar,
    beta: Scalar,
    forest: MeasureForest,
}

fn run_verify(args: &CommonArgs) -> Result<(), CliError> {
    require_exact(args, "verification")?;
    let text = read_input(args)?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(input_err)?;
    let fns = battery(args.seed, args.battery_size);

    if raw.get("forest").is_some() {
        let cert: CertificateIn = serde_json::from_value(raw).map_err(input_err)?;
        let frame = build_frame_from(&cert.frame)?;
        return verify_certificate(args, &frame, &cert, &fns);
    }
    // Bare frame: run the full margin suite.
    let frame_in: FrameIn = serde_json::from_value(raw).map_err(input_err)?;
    let frame = build_frame_from(&frame_in)?;
    let report = main_theorem_suite(&frame, &fns)
        .map_err(|e| CliError::Verification(e.to_string()))?;
    let margins: Vec<serde_json::Value> = report
        .margins
        .iter()
        .map(|(tag, m)| json!({"function": tag, "margin": m}))
        .collect();
    let passed = report.passed();
    let value = json!({
        "checked": "frame",
        "frame": frame_json(&frame),
        "margins": margins,
        "min_margin": report.min_margin,
        "certificate_order": report.certificate_order,
        "passed": passed,
    });
    emit(args, &value)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification("margin table has violations".into()))
    }
}

fn verify_certificate(
    args: &CommonArgs,
    frame: &CubeFrame,
    cert: &CertificateIn,
    fns: &[TestFunction],
) -> Result<(), CliError> {
    let mut failures: Vec<String> = Vec::new();

    let order = match cert.forest.validate() {
        ValidationOutcome::Valid { order } => order,
        ValidationOutcome::Invalid(v) => {
            failures.push(format!("forest invalid: {v}"));
            0
        }
    };
    let flattened = if failures.is_empty() {
        match flatten_forest(&cert.forest) {
            Ok(m) => Some(m),
            Err(e) => {
                failures.push(format!("flatten failed: {e}"));
                None
            }
        }
    } else {
        None
    };

    let mut margins = Vec::new();
    if let Some(m) = &flattened {
        if !barycenter(m).is_zero() {
            failures.push("barycenter is not zero".into());
        }
        match symmetric_pattern(m, frame) {
            Ok(Some((alpha, beta))) => {
                if alpha != cert.alpha || beta != cert.beta {
                    failures.push(format!(
                        "pattern ({alpha}, {beta}) differs from declared ({}, {})",
                        cert.alpha, cert.beta
                    ));
                }
            }
            Ok(None) => failures.push("flattened measure is not symmetric".into()),
            Err(e) => failures.push(e.to_string()),
        }
        for f in fns {
            let margin = check_inequality(m, f);
            let ok = if margin.is_exact() {
                !margin.is_negative()
            } else {
                margin.to_f64() >= -1e-9
            };
            if !ok {
                failures.push(format!("negative margin for {}", f.tag()));
            }
            margins.push(json!({"function": f.tag(), "margin": margin}));
        }
        for component in &cert.forest.components {
            let (_, ok) = jensen_table(&[&component.tree], fns);
            if !ok {
                failures.push("per-node Jensen violation in a component".into());
            }
        }
    }

    let passed = failures.is_empty();
    let value = json!({
        "checked": "certificate",
        "order": order,
        "margins": margins,
        "failures": failures,
        "passed": passed,
    });
    emit(args, &value)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification("certificate verification failed".into()))
    }
}
