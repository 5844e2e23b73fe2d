//! On-disk formats: detections, line-recognition records, ground truth and
//! page manifests. All are JSON; masks are PGM or PNG.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LineSegment;
use crate::grouping::CharDetection;
use crate::rescore::ScoredSequence;
use crate::synth::TextLine;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a detections array, reporting the index of the first bad record.
pub fn parse_detections(text: &str) -> Result<Vec<CharDetection>> {
    let records: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| Error::Record {
        index: 0,
        message: format!("expected a JSON array of detections: {e}"),
    })?;
    records
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let det: CharDetection = serde_json::from_value(value).map_err(|e| Error::Record {
                index,
                message: e.to_string(),
            })?;
            det.validate().map_err(|e| Error::Record {
                index,
                message: e.to_string(),
            })?;
            Ok(det)
        })
        .collect()
}

pub fn load_detections(path: &Path) -> Result<Vec<CharDetection>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text).map_err(|e| Error::parse(path, e))
}

pub fn save_detections(path: &Path, dets: &[CharDetection]) -> Result<()> {
    write_json(path, dets)
}

/// Text-line recognition output for one column. `column` is the column's
/// position in document reading order, counted across regions from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub column: usize,
    pub symbols: Vec<String>,
    pub probs: Vec<f64>,
}

impl LineRecord {
    pub fn sequence(&self) -> Result<ScoredSequence> {
        ScoredSequence::new(self.symbols.clone(), self.probs.clone())
    }
}

pub fn load_line_records(path: &Path) -> Result<Vec<LineRecord>> {
    let records: Vec<LineRecord> = read_json(path)?;
    for (index, r) in records.iter().enumerate() {
        r.sequence().map_err(|e| Error::Record {
            index,
            message: e.to_string(),
        })?;
    }
    Ok(records)
}

/// Page annotations: boundary lines, text-line quads with their text in
/// reading order, and the full transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub page_id: String,
    pub width: usize,
    pub height: usize,
    pub boundary_lines: Vec<LineSegment>,
    pub text_lines: Vec<TextLine>,
    pub transcript: String,
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    read_json(path)
}

/// Manifest as written on disk; paths are relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageManifest {
    pub page_id: String,
    pub detections: PathBuf,
    pub mask: PathBuf,
    pub mask_scale: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_recognition: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
}

impl PageManifest {
    /// Reads a manifest and resolves its paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: PageManifest = read_json(path)?;
        if m.mask_scale == 0 {
            return Err(Error::parse(path, "mask_scale must be at least 1"));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        m.detections = resolve(&m.detections);
        m.mask = resolve(&m.mask);
        m.line_recognition = m.line_recognition.as_deref().map(resolve);
        m.ground_truth = m.ground_truth.as_deref().map(resolve);
        Ok(m)
    }
}

/// A manifest list: one manifest path per line, relative to the list file.
/// Blank lines and `#` comments are skipped.
pub fn load_manifest_list(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}
