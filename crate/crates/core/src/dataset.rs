//! On-disk dataset layout and batch evaluation.
//!
//! ```text
//! <dataset>/<case>/mask_<structure>.png   (or .pgm)
//!                  annotation.json
//!                  roi_<structure>_ant.png  (optional predicted likelihood map)
//!                  roi_<structure>_post.png
//!                  truth.json               (optional)
//! ```
//!
//! ROI maps, when present, take precedence over the annotation lines
//! `<structure>_ant` / `<structure>_post`. Ground truth comes from
//! `truth.json`, falling back to the annotation's `<structure>_axis` line,
//! ROI lines and `<structure>` polygon.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{parse_annotation, AnnotationError, AnnotationRecord, Shape, ShapeKind};
use crate::geometry::FittedLine;
use crate::mask::BinaryMask;
use crate::metrics::{angulation_error, displacement_error, segmentation_report};
use crate::phantom::{PhantomSpec, PhantomTruth};
use crate::pipeline::{detect_axis, DetectionConfig, DetectionError, DetectionOutcome, RoiSource};
use crate::raster_io::{read_likelihood, read_mask, write_mask, RasterError};
use crate::report::{EvaluationReport, EvaluationRow};

pub const ANNOTATION_FILE: &str = "annotation.json";
pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{path}: {source}")]
    Annotation {
        path: String,
        #[source]
        source: AnnotationError,
    },
    #[error("{path}: {message}")]
    Truth { path: String, message: String },
    #[error("{0}")]
    Missing(String),
}

/// Analytic or annotated ground truth for one structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub axis: FittedLine,
    pub line_anterior: Option<FittedLine>,
    pub line_posterior: Option<FittedLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phantom: Option<PhantomSpec>,
}

/// Contents of `truth.json`: structure → truth.
pub type TruthRecord = BTreeMap<String, TruthEntry>;

#[derive(Debug, Clone)]
pub struct Case {
    pub id: String,
    pub structure: String,
    pub mask: BinaryMask,
    pub annotation: AnnotationRecord,
    pub roi_first: RoiSource,
    pub roi_second: RoiSource,
    pub truth: Option<TruthEntry>,
}

pub fn anterior_label(structure: &str) -> String {
    format!("{structure}_ant")
}

pub fn posterior_label(structure: &str) -> String {
    format!("{structure}_post")
}

pub fn axis_label(structure: &str) -> String {
    format!("{structure}_axis")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CaseError + '_ {
    move |source| CaseError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Structures present in a case directory, from `mask_<structure>.{png,pgm}`.
pub fn structures(case_dir: &Path) -> Result<Vec<(String, PathBuf)>, CaseError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(case_dir).map_err(io_err(case_dir))? {
        let path = entry.map_err(io_err(case_dir))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let stem = name
            .strip_suffix(".png")
            .or_else(|| name.strip_suffix(".pgm"));
        if let Some(structure) = stem.and_then(|s| s.strip_prefix("mask_")) {
            if !structure.is_empty() {
                out.push((structure.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn roi_source(
    case_dir: &Path,
    annotation: &AnnotationRecord,
    label: &str,
) -> Result<RoiSource, CaseError> {
    for ext in ["png", "pgm"] {
        let path = case_dir.join(format!("roi_{label}.{ext}"));
        if path.is_file() {
            return Ok(RoiSource::Map(read_likelihood(&path)?));
        }
    }
    annotation
        .roi_segment(label)
        .map(RoiSource::Segment)
        .ok_or_else(|| {
            CaseError::Missing(format!(
                "{}: no ROI map or annotation line for `{label}`",
                case_dir.display()
            ))
        })
}

fn truth_from_annotation(annotation: &AnnotationRecord, structure: &str) -> Option<TruthEntry> {
    let line = |label: String| {
        annotation
            .line(&label)
            .and_then(|(a, b)| FittedLine::through(a, b).ok())
    };
    Some(TruthEntry {
        axis: line(axis_label(structure))?,
        line_anterior: line(anterior_label(structure)),
        line_posterior: line(posterior_label(structure)),
        phantom: None,
    })
}

pub fn read_annotation(path: &Path) -> Result<AnnotationRecord, CaseError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_annotation(&text).map_err(|source| CaseError::Annotation {
        path: path.display().to_string(),
        source,
    })
}

fn read_truth(path: &Path) -> Result<Option<TruthRecord>, CaseError> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CaseError::Truth {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

/// Loads one structure of a case directory.
pub fn load_case(case_dir: &Path, structure: &str, mask_path: &Path) -> Result<Case, CaseError> {
    let annotation = read_annotation(&case_dir.join(ANNOTATION_FILE))?;
    let mut mask = read_mask(mask_path)?;
    if mask.width() != annotation.image_width || mask.height() != annotation.image_height {
        return Err(CaseError::Missing(format!(
            "{}: mask is {}x{} but annotation declares {}x{}",
            mask_path.display(),
            mask.width(),
            mask.height(),
            annotation.image_width,
            annotation.image_height
        )));
    }
    mask.set_spacing(annotation.spacing)
        .expect("annotation spacing is validated");
    let truth = match read_truth(&case_dir.join(TRUTH_FILE))? {
        Some(mut record) => record.remove(structure),
        None => truth_from_annotation(&annotation, structure),
    };
    Ok(Case {
        id: case_id(case_dir),
        structure: structure.to_string(),
        roi_first: roi_source(case_dir, &annotation, &anterior_label(structure))?,
        roi_second: roi_source(case_dir, &annotation, &posterior_label(structure))?,
        mask,
        annotation,
        truth,
    })
}

fn case_id(case_dir: &Path) -> String {
    case_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| case_dir.display().to_string())
}

/// Loads every structure of a case directory.
pub fn load_cases(case_dir: &Path) -> Result<Vec<Result<Case, CaseError>>, CaseError> {
    Ok(structures(case_dir)?
        .into_iter()
        .map(|(s, path)| load_case(case_dir, &s, &path))
        .collect())
}

/// Evaluates a detection against whatever truth the case carries.
pub fn evaluate_case(case: &Case, outcome: &DetectionOutcome) -> EvaluationRow {
    let spacing = case.mask.spacing();
    let mut row = EvaluationRow {
        case: case.id.clone(),
        structure: case.structure.clone(),
        status: "ok".into(),
        warnings: outcome
            .warnings
            .iter()
            .map(|w| w.code())
            .collect::<Vec<_>>()
            .join(";"),
        ..EvaluationRow::default()
    };
    if let Some(truth_mask) = case.annotation.polygon_mask(&case.structure) {
        if let Ok(seg) = segmentation_report(&case.mask, &truth_mask) {
            row.dice = Some(seg.dice);
            row.asd_mm = Some(seg.asd_mm);
            row.hd_mm = Some(seg.hd_mm);
        }
    }
    let Some(truth) = &case.truth else {
        return row;
    };
    let axis = &outcome.axis_result;
    row.angulation_shaft_deg = Some(angulation_error(&axis.axis, &truth.axis));
    row.displacement_shaft_mm = displacement_error(&[axis.m1, axis.m2], &truth.axis, spacing).ok();
    let [ant, post] = &outcome.segments;
    if let Some(line) = &truth.line_anterior {
        row.angulation_anterior_deg = Some(angulation_error(&ant.line, line));
        row.displacement_anterior_mm = displacement_error(&[ant.start, ant.end], line, spacing).ok();
    }
    if let Some(line) = &truth.line_posterior {
        row.angulation_posterior_deg = Some(angulation_error(&post.line, line));
        row.displacement_posterior_mm = displacement_error(&[post.start, post.end], line, spacing).ok();
    }
    row
}

pub fn detect_case(case: &Case, config: &DetectionConfig) -> Result<DetectionOutcome, DetectionError> {
    detect_axis(&case.mask, &case.roi_first, &case.roi_second, config)
}

#[derive(Debug)]
pub struct BatchItem {
    pub case: String,
    pub structure: String,
    pub outcome: Result<DetectionOutcome, String>,
}

#[derive(Debug)]
pub struct BatchResult {
    pub items: Vec<BatchItem>,
    pub report: EvaluationReport,
}

fn case_dirs(dataset_dir: &Path) -> Result<Vec<PathBuf>, CaseError> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(dataset_dir).map_err(io_err(dataset_dir))? {
        let path = entry.map_err(io_err(dataset_dir))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn run_case_dir(dir: &Path, config: &DetectionConfig) -> Vec<(BatchItem, EvaluationRow)> {
    let id = case_id(dir);
    let structures = match structures(dir) {
        Ok(s) if s.is_empty() => {
            let msg = "no mask_<structure> raster found";
            return vec![(
                BatchItem { case: id.clone(), structure: String::new(), outcome: Err(msg.into()) },
                EvaluationRow::failed(&id, "", msg),
            )];
        }
        Ok(s) => s,
        Err(e) => {
            return vec![(
                BatchItem { case: id.clone(), structure: String::new(), outcome: Err(e.to_string()) },
                EvaluationRow::failed(&id, "", e),
            )]
        }
    };
    structures
        .into_iter()
        .map(|(structure, path)| {
            let loaded = load_case(dir, &structure, &path);
            let (outcome, row) = match loaded {
                Err(e) => (Err(e.to_string()), EvaluationRow::failed(&id, &structure, e)),
                Ok(case) => match detect_case(&case, config) {
                    Ok(out) => {
                        let row = evaluate_case(&case, &out);
                        (Ok(out), row)
                    }
                    Err(e) => (Err(e.to_string()), EvaluationRow::failed(&id, &structure, e)),
                },
            };
            (BatchItem { case: id.clone(), structure, outcome }, row)
        })
        .collect()
}

/// Detects and evaluates every case directory below `dataset_dir`.
///
/// Cases run in parallel; items and report rows come back sorted by
/// `(case, structure)`. Failing cases are reported, not dropped.
pub fn detect_batch(dataset_dir: &Path, config: &DetectionConfig, seed: u64) -> Result<BatchResult, CaseError> {
    let dirs = case_dirs(dataset_dir)?;
    let results: Vec<(BatchItem, EvaluationRow)> = dirs
        .par_iter()
        .flat_map_iter(|dir| run_case_dir(dir, config))
        .collect();
    let (items, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(BatchResult {
        items,
        report: EvaluationReport::new(rows, seed),
    })
}

/// Writes a phantom as a case directory: mask PNG, annotation with the ROI
/// and axis lines, and `truth.json` with the analytic lines.
pub fn write_phantom_case(case_dir: &Path, truth: &PhantomTruth, structure: &str) -> Result<(), CaseError> {
    std::fs::create_dir_all(case_dir).map_err(io_err(case_dir))?;
    write_mask(&case_dir.join(format!("mask_{structure}.png")), &truth.mask)?;
    let axis = &truth.axis;
    let line = |label: String, a, b| Shape {
        label,
        kind: ShapeKind::Line,
        coords: vec![a, b],
    };
    let record = AnnotationRecord {
        image_width: truth.mask.width(),
        image_height: truth.mask.height(),
        spacing: truth.mask.spacing(),
        shapes: vec![
            line(anterior_label(structure), truth.roi_anterior.start, truth.roi_anterior.end),
            line(posterior_label(structure), truth.roi_posterior.start, truth.roi_posterior.end),
            line(axis_label(structure), axis.point_at(-40.0), axis.point_at(40.0)),
        ],
    };
    let path = case_dir.join(ANNOTATION_FILE);
    std::fs::write(&path, record.to_json()).map_err(io_err(&path))?;
    let entry = TruthEntry {
        axis: truth.axis,
        line_anterior: Some(truth.line_anterior),
        line_posterior: Some(truth.line_posterior),
        phantom: Some(truth.spec.clone()),
    };
    let record: TruthRecord = [(structure.to_string(), entry)].into_iter().collect();
    let path = case_dir.join(TRUTH_FILE);
    let text = serde_json::to_string_pretty(&record).expect("truth records always serialize");
    std::fs::write(&path, text).map_err(io_err(&path))
}
