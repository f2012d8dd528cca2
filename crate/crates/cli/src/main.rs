//! `boneaxis` command-line tool.
//!
//! Exit codes: 0 on success, 1 when some items failed, 2 on invalid invocation
//! or unreadable input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use boneaxis::dataset::{detect_batch, detect_case, load_case, read_annotation, structures, write_phantom_case};
use boneaxis::overlay::{mask_backdrop, render_overlay, OverlayStyle};
use boneaxis::phantom::{generate, PhantomSpec};
use boneaxis::pipeline::Distance;
use boneaxis::raster_io::{read_gray, write_likelihood};
use boneaxis::roi::rasterize_roi;
use boneaxis::{DetectionConfig, DetectionOutcome, RoiParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "boneaxis", version, about = "Shaft axis detection from bone masks and ROI segments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the shaft axis for one case directory.
    Detect(DetectArgs),
    /// Detect and evaluate every case in a dataset directory.
    Evaluate(EvaluateArgs),
    /// Write synthetic phantom cases.
    Phantom(PhantomArgs),
    /// Rasterize an annotated ROI line into a likelihood PNG.
    EncodeRoi(EncodeRoiArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Start offset along the subdivided segment: `15%` (fraction) or `30` (pixels).
    #[arg(long, default_value = "15%", value_parser = parse_distance)]
    d1: Distance,
    /// Offset from the end of the subdivided segment, same syntax as --d1.
    #[arg(long, default_value = "15%", value_parser = parse_distance)]
    d2: Distance,
    /// ROI Gaussian width in pixels.
    #[arg(long, default_value_t = 6.0)]
    sigma: f64,
    /// ROI masking threshold in units of sigma.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
}

impl ConfigArgs {
    fn config(&self) -> anyhow::Result<DetectionConfig> {
        let config = DetectionConfig {
            roi_params: RoiParams {
                sigma: self.sigma,
                mask_threshold: self.threshold,
                ..RoiParams::default()
            },
            d1: self.d1,
            d2: self.d2,
            ..DetectionConfig::default()
        };
        config.validate().context("invalid detection parameters")?;
        Ok(config)
    }
}

fn parse_distance(s: &str) -> Result<Distance, String> {
    let s = s.trim();
    let (number, fraction) = match s.strip_suffix('%') {
        Some(p) => (p, true),
        None => (s.strip_suffix("px").unwrap_or(s), false),
    };
    let v: f64 = number.trim().parse().map_err(|_| format!("`{s}` is not a distance"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("`{s}` must be a non-negative distance"));
    }
    Ok(if fraction { Distance::Fraction(v / 100.0) } else { Distance::Pixels(v) })
}

#[derive(Args)]
struct DetectArgs {
    case_dir: PathBuf,
    /// Structure to process; required when the case holds several masks.
    #[arg(long)]
    structure: Option<String>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Overlay PNG path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Axis JSON path; printed to stdout when omitted.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Radiograph to draw the overlay on instead of the mask.
    #[arg(long)]
    image: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct EvaluateArgs {
    dataset_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    report: ReportFormat,
    /// Bootstrap seed for the median confidence intervals.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct PhantomArgs {
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bone")]
    structure: String,
    #[arg(long)]
    size: Option<usize>,
    /// Shaft angle in degrees; random in [0, 180) when omitted.
    #[arg(long)]
    angle: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    /// Edge convergence in degrees; random in [0, 5] when omitted.
    #[arg(long)]
    convergence: Option<f64>,
    /// Truncated shaft fraction; random in [0, 0.4] when omitted.
    #[arg(long)]
    truncation: Option<f64>,
    #[arg(long)]
    blob_radius: Option<f64>,
    /// Edge noise amplitude in pixels.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Args)]
struct EncodeRoiArgs {
    annotation: PathBuf,
    #[arg(long)]
    label: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 6.0)]
    sigma: f64,
    /// Support cutoff in units of sigma.
    #[arg(long, default_value_t = 3.0)]
    truncation: f64,
}

/// Invalid invocation or unreadable input.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

enum Status {
    Ok,
    ItemFailures,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Phantom(a) => phantom(a),
        Command::EncodeRoi(a) => encode_roi(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ItemFailures) => ExitCode::from(1),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn axis_json(case: &str, structure: &str, outcome: &DetectionOutcome) -> serde_json::Value {
    let r = &outcome.axis_result;
    json!({
        "case": case,
        "structure": structure,
        "convention": "pixel coordinates, y down; angle in degrees, 0 = +x, counterclockwise on screen",
        "m1": r.m1,
        "m2": r.m2,
        "direction": r.axis.direction(),
        "angle_deg": r.axis.angle_deg(),
        "d1_px": r.d1,
        "d2_px": r.d2,
        "segments": outcome.segments.iter().map(|s| json!({"start": s.start, "end": s.end})).collect::<Vec<_>>(),
        "support_counts": outcome.support_counts,
        "warnings": outcome.warnings.iter().map(|w| w.code()).collect::<Vec<_>>(),
    })
}

fn detect(args: DetectArgs) -> Result<Status, Usage> {
    let config = args.config.config()?;
    let available = structures(&args.case_dir)?;
    let (structure, mask_path) = match (&args.structure, available.as_slice()) {
        (Some(s), _) => available
            .iter()
            .find(|(name, _)| name == s)
            .cloned()
            .with_context(|| format!("no mask_{s} raster in {}", args.case_dir.display()))?,
        (None, [only]) => only.clone(),
        (None, []) => return Err(Usage(anyhow!("no mask_<structure> raster in {}", args.case_dir.display()))),
        (None, _) => {
            return Err(Usage(anyhow!(
                "several structures found ({}); choose one with --structure",
                available.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    };
    let case = load_case(&args.case_dir, &structure, &mask_path)?;
    let outcome = match detect_case(&case, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}/{structure}: {e}", case.id);
            return Ok(Status::ItemFailures);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {}", w.code());
    }
    let text = serde_json::to_string_pretty(&axis_json(&case.id, &structure, &outcome))?;
    write_output(args.json.as_deref(), &text)?;
    if let Some(out) = &args.out {
        let base = match &args.image {
            Some(p) => read_gray(p)?,
            None => mask_backdrop(&case.mask),
        };
        let (img, warnings) = render_overlay(&base, &outcome, &OverlayStyle::default());
        for w in warnings {
            eprintln!("warning: overlay: {w:?}");
        }
        img.save(out).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(Status::Ok)
}

fn evaluate(args: EvaluateArgs) -> Result<Status, Usage> {
    let config = args.config.config()?;
    if !args.dataset_dir.is_dir() {
        return Err(Usage(anyhow!("{} is not a directory", args.dataset_dir.display())));
    }
    let batch = detect_batch(&args.dataset_dir, &config, args.seed)?;
    let report = batch.report;
    let text = match args.report {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    write_output(args.out.as_deref(), &text)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for row in report.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "error: {}/{}: {}",
            row.case,
            row.structure,
            row.error.as_deref().unwrap_or("failed")
        );
    }
    Ok(if report.failures() > 0 { Status::ItemFailures } else { Status::Ok })
}

fn phantom(args: PhantomArgs) -> Result<Status, Usage> {
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for i in 0..args.count {
        let sample_seed = args.seed.wrapping_add(i);
        let mut spec = PhantomSpec::random(sample_seed);
        if let Some(v) = args.size {
            spec.image_size = v;
        }
        if let Some(v) = args.angle {
            spec.shaft_angle = v;
        }
        if let Some(v) = args.width {
            spec.shaft_width = v;
        }
        if let Some(v) = args.convergence {
            spec.convergence_angle = v;
        }
        if let Some(v) = args.truncation {
            spec.truncation_fraction = v;
        }
        if let Some(v) = args.blob_radius {
            spec.end_blob_radius = v;
        }
        if let Some(v) = args.noise {
            spec.contour_noise_amp = v;
        }
        let mut truth = generate(&spec).context("invalid phantom parameters")?;
        if let Some(s) = args.spacing {
            truth.mask.set_spacing(s).context("invalid spacing")?;
        }
        let dir = args.out_dir.join(format!("phantom_{i:04}"));
        write_phantom_case(&dir, &truth, &args.structure)?;
    }
    Ok(Status::Ok)
}

fn encode_roi(args: EncodeRoiArgs) -> Result<Status, Usage> {
    let record = read_annotation(&args.annotation)?;
    let segment = record
        .roi_segment(&args.label)
        .with_context(|| format!("no line shape labelled `{}`", args.label))?;
    let params = RoiParams {
        sigma: args.sigma,
        truncation: args.truncation,
        ..RoiParams::default()
    };
    let map = rasterize_roi(&segment, &params, record.image_width, record.image_height)?;
    write_likelihood(&args.out, &map)?;
    Ok(Status::Ok)
}
