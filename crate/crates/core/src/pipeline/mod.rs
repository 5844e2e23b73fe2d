//! End-to-end page processing and batch evaluation.
//!
//! Per page: noise filter → upscale → Hough → segments → dedup → partition
//! → region assignment → column grouping → interlinear refinement →
//! ordering → text, with optional per-column fusion of line recognition.

pub mod config;
pub mod dataset;
pub mod debug;
pub mod formats;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{LineSegment, Point};
use crate::grouping::{build_document, CharDetection, Document};
use crate::layout::{partition_page_with, PageLayout};
use crate::mask::{
    dedup_lines, extract_segments, filter_noise, hough_lines, upscale, BinaryMask,
};
use crate::metrics::{
    eval_detection, eval_lines, text_counts, DetEvalReport, DetThresholdResult, LineEvalReport,
    MatchCounts, TextCounts, TextEvalReport,
};
use crate::nms;
use crate::rescore::{fuse_with, FuseOutcome, MeanScope, ScoredSequence};

pub use config::Config;
pub use formats::{GroundTruth, LineRecord, PageManifest};

/// Boundary lines of a layout mask, in page coordinates.
pub fn extract_lines(mask: &BinaryMask, config: &Config) -> Result<Vec<LineSegment>> {
    let clean = filter_noise(mask, config.min_area);
    let page = upscale(&clean, clean.scale())?;
    let (w, h) = (page.width(), page.height());
    let params = config.hough_params(w, h);
    params.validate()?;
    let peaks = hough_lines(&page, &params);
    let segments = extract_segments(&page, &peaks, &params);
    Ok(dedup_lines(&segments, &params, w as f64, h as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageResult {
    pub page_id: String,
    pub page_width: usize,
    pub page_height: usize,
    pub lines: Vec<LineSegment>,
    pub layout: PageLayout,
    pub document: Document,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fused_text: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fuse_outcomes: Vec<FuseOutcome>,
}

impl PageResult {
    /// Fused text when line recognition was supplied, else the plain text.
    pub fn final_text(&self) -> &str {
        self.fused_text.as_deref().unwrap_or(&self.text)
    }
}

/// Runs the pipeline on in-memory inputs.
pub fn process_page(
    page_id: &str,
    detections: &[CharDetection],
    mask: &BinaryMask,
    line_records: Option<&[LineRecord]>,
    config: &Config,
) -> Result<PageResult> {
    config.validate()?;
    let (w, h) = mask.page_size();
    let lines = extract_lines(mask, config)?;
    let layout = partition_page_with(&lines, w as f64, h as f64, config.region_order);
    let document = build_document(detections, &layout, &config.grouping_params());
    let text = crate::grouping::emit_text(&document);
    let (fused_text, fuse_outcomes) = match line_records {
        Some(records) => {
            let (t, o) = fuse_document(&document, records, config.mean_scope)?;
            (Some(t), o)
        }
        None => (None, Vec::new()),
    };
    Ok(PageResult {
        page_id: page_id.to_string(),
        page_width: w,
        page_height: h,
        lines,
        layout,
        document,
        text,
        fused_text,
        fuse_outcomes,
    })
}

/// Reads a page's files and runs the pipeline; errors carry the page id.
pub fn run_page(manifest: &PageManifest, config: &Config) -> Result<PageResult> {
    let run = || -> Result<PageResult> {
        let dets = formats::load_detections(&manifest.detections)?;
        let mask = BinaryMask::load(&manifest.mask, manifest.mask_scale)?;
        let records = manifest
            .line_recognition
            .as_deref()
            .map(formats::load_line_records)
            .transpose()?;
        process_page(&manifest.page_id, &dets, &mask, records.as_deref(), config)
    };
    run().map_err(|e| e.in_page(&manifest.page_id))
}

/// Fuses each column with its line-recognition record. Columns without a
/// record keep their character result. Returns the fused text (same line
/// and region breaks as [`crate::grouping::emit_text`]) and the per-column
/// outcomes in column order.
pub fn fuse_document(
    doc: &Document,
    records: &[LineRecord],
    scope: MeanScope,
) -> Result<(String, Vec<FuseOutcome>)> {
    let mut by_column: BTreeMap<usize, ScoredSequence> = BTreeMap::new();
    for r in records {
        by_column.insert(r.column, r.sequence()?);
    }
    let mut outcomes = Vec::new();
    let mut regions = Vec::new();
    let mut index = 0;
    for region in &doc.regions {
        let mut lines = Vec::new();
        for col in &region.columns {
            let chars = ScoredSequence::new(
                col.chars().map(|c| c.label.clone()).collect(),
                col.chars().map(|c| c.score).collect(),
            )?;
            let line = by_column.get(&index).cloned().unwrap_or_default();
            let outcome = fuse_with(&chars, &line, scope);
            if let Some(w) = &outcome.warning {
                log::warn!("column {index}: {w}");
            }
            lines.push(outcome.sequence.text());
            outcomes.push(outcome);
            index += 1;
        }
        regions.push(lines.join("\n"));
    }
    Ok((regions.join("\n\n"), outcomes))
}

/// Detections from overlapping windows, each tagged with its window's
/// top-left offset in page coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct WindowOutput {
    pub offset: Point,
    pub detections: Vec<CharDetection>,
}

/// Shifts window detections into page coordinates and suppresses the
/// duplicates produced by window overlap.
pub fn merge_windows(windows: &[WindowOutput], iou_threshold: f64) -> Vec<CharDetection> {
    let all: Vec<CharDetection> = windows
        .iter()
        .flat_map(|w| {
            w.detections.iter().map(move |d| CharDetection {
                bbox: d.bbox.translate(w.offset.x, w.offset.y),
                ..d.clone()
            })
        })
        .collect();
    nms(&all, iou_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageEval {
    pub page_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<LineEvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetEvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<TextEvalReport>,
}

/// Micro-averaged evaluation over a batch of pages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub pages: usize,
    pub lines: Option<LineEvalReport>,
    pub detection: Option<DetEvalReport>,
    pub text: Option<TextEvalReport>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_page: Vec<PageEval>,
}

/// Evaluates one processed page against its ground truth.
pub fn evaluate_page(result: &PageResult, gt: &GroundTruth, config: &Config) -> Result<PageEval> {
    let lines = eval_lines(&result.lines, &gt.boundary_lines, config.dist_threshold);
    let pred_quads: Vec<_> = result.document.columns().map(|c| c.quad()).collect();
    let gt_quads: Vec<_> = gt.text_lines.iter().map(|l| l.quad).collect();
    let detection = eval_detection(&pred_quads, &gt_quads, &config.iou_thresholds)?;
    let text = TextEvalReport::from_counts(text_counts(result.final_text(), &gt.transcript)).ok();
    Ok(PageEval {
        page_id: result.page_id.clone(),
        lines: Some(lines),
        detection: Some(detection),
        text,
    })
}

/// Sums per-page counts and forms the batch ratios.
pub fn aggregate(pages: Vec<PageEval>, mut warnings: Vec<String>, thresholds: &[f64]) -> EvalReport {
    let mut line_counts: Option<MatchCounts> = None;
    let mut det_counts: Option<Vec<MatchCounts>> = None;
    let mut text: Option<TextCounts> = None;
    for p in &pages {
        if let Some(l) = &p.lines {
            line_counts.get_or_insert_with(MatchCounts::default).add(&l.counts);
        }
        if let Some(d) = &p.detection {
            let acc = det_counts.get_or_insert_with(|| vec![MatchCounts::default(); thresholds.len()]);
            for (a, t) in acc.iter_mut().zip(&d.thresholds) {
                a.add(&t.counts);
            }
        }
        match &p.text {
            Some(t) => text.get_or_insert_with(TextCounts::default).add(&t.counts),
            None => warnings.push(format!("{}: no text ground truth", p.page_id)),
        }
    }
    EvalReport {
        pages: pages.len(),
        lines: line_counts.map(|c| LineEvalReport::from_counts(c, Vec::new())),
        detection: det_counts.map(|counts| DetEvalReport {
            thresholds: thresholds
                .iter()
                .zip(counts)
                .map(|(&t, c)| DetThresholdResult::from_counts(t, c))
                .collect(),
        }),
        text: text.and_then(|c| TextEvalReport::from_counts(c).ok()),
        warnings,
        per_page: pages,
    }
}

/// Outcome of one page in a batch run.
pub type PageOutcome<T> = std::result::Result<T, Error>;

/// Processes and evaluates every manifest (pages in parallel, results in
/// input order). Pages without ground truth are skipped with a warning.
/// Page errors are returned alongside the report.
pub fn run_eval(
    manifests: &[PageManifest],
    config: &Config,
) -> (EvalReport, Vec<Error>) {
    let outcomes: Vec<PageOutcome<Option<PageEval>>> = manifests
        .par_iter()
        .map(|m| {
            let Some(gt_path) = &m.ground_truth else {
                return Ok(None);
            };
            let result = run_page(m, config)?;
            let gt = formats::load_ground_truth(gt_path).map_err(|e| e.in_page(&m.page_id))?;
            evaluate_page(&result, &gt, config)
                .map(Some)
                .map_err(|e| e.in_page(&m.page_id))
        })
        .collect();
    let mut pages = Vec::new();
    let mut warnings = Vec::new();
    let mut errors = Vec::new();
    for (m, outcome) in manifests.iter().zip(outcomes) {
        match outcome {
            Ok(Some(p)) => pages.push(p),
            Ok(None) => warnings.push(format!("{}: no ground truth; skipped", m.page_id)),
            Err(e) => errors.push(e),
        }
    }
    (aggregate(pages, warnings, &config.iou_thresholds), errors)
}

/// Loads manifests from explicit paths.
pub fn load_manifests(paths: &[impl AsRef<Path>]) -> Result<Vec<PageManifest>> {
    paths.iter().map(|p| PageManifest::load(p.as_ref())).collect()
}
