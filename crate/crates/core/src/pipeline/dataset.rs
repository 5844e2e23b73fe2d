//! Writes synthetic pages to disk in the pipeline's input formats.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::formats::{save_detections, write_json, GroundTruth, LineRecord, PageManifest};
use crate::synth::{corrupt, generate, SynthPage, SynthSpec};

/// Line recognition that reads every ground-truth column correctly at a
/// fixed confidence. Columns are numbered in reading order.
pub fn oracle_line_records(page: &SynthPage, confidence: f64) -> Vec<LineRecord> {
    page.document
        .columns()
        .enumerate()
        .map(|(column, col)| {
            let symbols: Vec<String> = col.chars().map(|c| c.label.clone()).collect();
            LineRecord {
                column,
                probs: vec![confidence; symbols.len()],
                symbols,
            }
        })
        .collect()
}

pub fn ground_truth(page: &SynthPage, page_id: &str) -> GroundTruth {
    GroundTruth {
        page_id: page_id.to_string(),
        width: page.spec.page_width,
        height: page.spec.page_height,
        boundary_lines: page.lines.clone(),
        text_lines: page.text_lines.clone(),
        transcript: page.transcript.clone(),
    }
}

/// Writes `<id>.detections.json`, `<id>.mask.pgm`, `<id>.gt.json`,
/// optionally `<id>.lines.json`, and `<id>.manifest.json` into `dir`.
/// Returns the manifest path.
pub fn write_page(
    page: &SynthPage,
    dir: &Path,
    page_id: &str,
    line_confidence: Option<f64>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = |suffix: &str| format!("{page_id}.{suffix}");
    save_detections(&dir.join(name("detections.json")), &page.detections)?;
    page.mask.save(&dir.join(name("mask.pgm")))?;
    write_json(&dir.join(name("gt.json")), &ground_truth(page, page_id))?;
    let line_recognition = match line_confidence {
        Some(p) => {
            write_json(&dir.join(name("lines.json")), &oracle_line_records(page, p))?;
            Some(PathBuf::from(name("lines.json")))
        }
        None => None,
    };
    let manifest = PageManifest {
        page_id: page_id.to_string(),
        detections: PathBuf::from(name("detections.json")),
        mask: PathBuf::from(name("mask.pgm")),
        mask_scale: page.mask.scale(),
        line_recognition,
        ground_truth: Some(PathBuf::from(name("gt.json"))),
    };
    let path = dir.join(name("manifest.json"));
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Synthesis parameters for page `index` of a batch. With `mixed_layout`, each page
/// draws 0–2 horizontal and 0–1 vertical boundary lines.
pub fn batch_spec(base: &SynthSpec, index: usize, mixed_layout: bool) -> SynthSpec {
    let mut spec = base.clone();
    spec.seed = base.seed.wrapping_add(index as u64);
    if mixed_layout {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        spec.horizontal_lines = rng.gen_range(0..=2);
        spec.vertical_lines = rng.gen_range(0..=1);
    }
    spec
}

/// Generates and degrades one page of a batch.
pub fn batch_page(base: &SynthSpec, index: usize, mixed_layout: bool) -> Result<SynthPage> {
    let spec = batch_spec(base, index, mixed_layout);
    let clean = generate(&spec)?;
    Ok(corrupt(&clean, &spec))
}

/// Writes a batch of `pages` pages plus `manifests.txt` listing them.
pub fn write_batch(
    base: &SynthSpec,
    pages: usize,
    mixed_layout: bool,
    line_confidence: Option<f64>,
    dir: &Path,
) -> Result<PathBuf> {
    let mut list = String::new();
    for i in 0..pages {
        let page = batch_page(base, i, mixed_layout)?;
        let id = format!("page{i:04}");
        let manifest = write_page(&page, dir, &id, line_confidence)?;
        let file = manifest.file_name().unwrap_or_default().to_string_lossy();
        list.push_str(&file);
        list.push('\n');
    }
    let path = dir.join("manifests.txt");
    std::fs::write(&path, list).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::formats::{load_detections, load_ground_truth, load_manifest_list};
    use crate::pipeline::{run_page, Config};

    #[test]
    fn written_page_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            seed: 11,
            ..SynthSpec::default()
        };
        let page = generate(&spec).unwrap();
        let path = write_page(&page, dir.path(), "p", Some(0.95)).unwrap();
        let m = PageManifest::load(&path).unwrap();
        assert_eq!(load_detections(&m.detections).unwrap(), page.detections);
        assert_eq!(load_ground_truth(m.ground_truth.as_ref().unwrap()).unwrap().transcript, page.transcript);
        let r = run_page(&m, &Config::default()).unwrap();
        assert_eq!(r.text, page.transcript);
        assert_eq!(r.fused_text.as_deref(), Some(page.transcript.as_str()));
    }

    #[test]
    fn batch_lists_every_page() {
        let dir = tempfile::tempdir().unwrap();
        let list = write_batch(&SynthSpec::default(), 3, true, None, dir.path()).unwrap();
        let paths = load_manifest_list(&list).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(paths.iter().all(|p| p.exists()));
    }

    #[test]
    fn mixed_layouts_stay_in_range() {
        for i in 0..50 {
            let s = batch_spec(&SynthSpec::default(), i, true);
            assert!(s.horizontal_lines <= 2 && s.vertical_lines <= 1);
        }
    }
}
