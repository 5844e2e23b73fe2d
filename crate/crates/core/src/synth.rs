//! Seeded synthetic pages with full ground truth.
//!
//! A page is a grid of regions separated by full-span boundary lines. Each
//! region holds columns of square glyph boxes, written right to left, with
//! optional interlinear runs of half-width glyphs set two abreast. The
//! generator places everything itself and records the reading order it
//! used, so the ground-truth document never depends on the grouping code.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AABox, LineSegment, Point, Quad};
use crate::grouping::{emit_text, CharDetection, Column, Document, DocumentRegion, TextColumn};
use crate::layout::{PageLayout, RegionOrder};
use crate::mask::BinaryMask;

pub const DEFAULT_ALPHABET: &str = "天地玄黃宇宙洪荒日月盈昃辰宿列張寒來暑往秋收冬藏閏餘成歲律呂調陽雲騰致雨露結為霜金生麗水玉出崑岡劍號巨闕珠稱夜光果珍李柰菜重芥薑海鹹河淡鱗潛羽翔";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub page_width: usize,
    pub page_height: usize,
    pub horizontal_lines: usize,
    pub vertical_lines: usize,
    /// Inclusive range of columns per region.
    pub columns_per_region: (usize, usize),
    /// Inclusive range of full-size characters per column.
    pub chars_per_column: (usize, usize),
    /// Probability that a column carries one interlinear run.
    pub double_column_prob: f64,
    /// Side of a full-size glyph box.
    pub glyph_size: f64,
    /// Maximum per-axis shift of each box applied by [`corrupt`]; box size is kept.
    pub jitter: f64,
    pub label_flip_prob: f64,
    pub speck_count: usize,
    /// Speck side length in mask pixels.
    pub speck_size: usize,
    pub mask_scale: u32,
    /// Half-width of the rendered line band, in page pixels.
    pub band: f64,
    pub alphabet: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            page_width: 1400,
            page_height: 1800,
            horizontal_lines: 1,
            vertical_lines: 1,
            columns_per_region: (3, 8),
            chars_per_column: (2, 8),
            double_column_prob: 0.3,
            glyph_size: 40.0,
            jitter: 0.0,
            label_flip_prob: 0.0,
            speck_count: 0,
            speck_size: 5,
            mask_scale: 4,
            band: 20.0,
            alphabet: DEFAULT_ALPHABET.to_string(),
        }
    }
}

/// Minimum spacing between parallel boundary lines (and from the page edge).
pub const MIN_LINE_SEPARATION: f64 = 300.0;
/// Distance between a boundary line's ends and the page border.
const LINE_INSET: f64 = 30.0;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Generation(m));
        for (name, p) in [
            ("double_column_prob", self.double_column_prob),
            ("label_flip_prob", self.label_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.mask_scale == 0 {
            return bad("mask_scale must be at least 1".into());
        }
        let s = self.mask_scale as usize;
        if self.page_width % s != 0 || self.page_height % s != 0 {
            return bad(format!(
                "page size {}x{} not divisible by mask scale {s}",
                self.page_width, self.page_height
            ));
        }
        if !(self.glyph_size >= 8.0) {
            return bad(format!("glyph size {} too small", self.glyph_size));
        }
        if !(self.jitter >= 0.0) || self.jitter > 0.4 * self.glyph_size {
            return bad(format!("jitter {} outside [0, 0.4 x glyph]", self.jitter));
        }
        if !(self.band > 0.0) {
            return bad("band must be positive".into());
        }
        let (c0, c1) = self.columns_per_region;
        let (k0, k1) = self.chars_per_column;
        if c0 == 0 || c0 > c1 || k0 == 0 || k0 > k1 {
            return bad("column and character ranges must be non-empty and start at 1".into());
        }
        if self.alphabet.chars().count() < 2 {
            return bad("alphabet needs at least two symbols".into());
        }
        Ok(())
    }

    /// Margin between a region's edge and its text.
    fn text_margin(&self) -> f64 {
        self.band + 0.5 * self.glyph_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub quad: Quad,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPage {
    pub spec: SynthSpec,
    pub lines: Vec<LineSegment>,
    pub layout: PageLayout,
    pub document: Document,
    pub transcript: String,
    pub text_lines: Vec<TextLine>,
    /// Detections in shuffled order.
    pub detections: Vec<CharDetection>,
    pub mask: BinaryMask,
}

impl SynthPage {
    pub fn line_quads(&self) -> Vec<Quad> {
        self.text_lines.iter().map(|l| l.quad).collect()
    }
}

/// Positions of `n` cuts across `extent`: evenly spaced, perturbed by up to
/// 10% of the spacing.
fn place_cuts(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Result<Vec<f64>> {
    let spacing = extent / (n + 1) as f64;
    if n > 0 && spacing * 0.8 < MIN_LINE_SEPARATION {
        return Err(Error::Generation(format!(
            "{n} parallel lines do not fit {MIN_LINE_SEPARATION} px apart in {extent} px"
        )));
    }
    Ok((1..=n)
        .map(|k| k as f64 * spacing + rng.gen_range(-0.1..=0.1) * spacing)
        .collect())
}

struct Glyphs {
    symbols: Vec<char>,
}

impl Glyphs {
    fn pick(&self, rng: &mut ChaCha8Rng) -> String {
        self.symbols[rng.gen_range(0..self.symbols.len())].to_string()
    }

    fn pick_other(&self, rng: &mut ChaCha8Rng, current: &str) -> String {
        loop {
            let s = self.pick(rng);
            if s != current {
                return s;
            }
        }
    }
}

fn glyph(rng: &mut ChaCha8Rng, glyphs: &Glyphs, bbox: AABox) -> CharDetection {
    CharDetection {
        bbox,
        label: glyphs.pick(rng),
        score: rng.gen_range(0.8..=1.0),
    }
}

/// Lays out one column whose slot spans `[left, left + g]`, starting at
/// `top` and not extending past `bottom`. Returns the pieces in reading
/// order.
fn generate_column(
    rng: &mut ChaCha8Rng,
    spec: &SynthSpec,
    glyphs: &Glyphs,
    left: f64,
    top: f64,
    bottom: f64,
) -> Vec<Column> {
    let g = spec.glyph_size;
    let small = 0.45 * g;
    let big_pitch_gap = rng.gen_range(0.15..=0.3) * g;
    let small_gap = 0.15 * g;

    let mut n_big = rng.gen_range(spec.chars_per_column.0..=spec.chars_per_column.1);
    let want_run = n_big >= 2 && rng.gen_bool(spec.double_column_prob);
    let mut run_rows = if want_run { rng.gen_range(1..=3usize) } else { 0 };
    let run_height = |rows: usize| rows as f64 * (small + small_gap);
    let fits = |n_big: usize, rows: usize| {
        top + n_big as f64 * (g + big_pitch_gap) + run_height(rows) <= bottom
    };
    while n_big > 1 && !fits(n_big, run_rows) {
        n_big -= 1;
    }
    // Interlinear glyphs must stay a minority of the column.
    run_rows = run_rows.min(n_big.saturating_sub(1) / 2);
    if run_rows > 0 && !fits(n_big, run_rows) {
        run_rows = 0;
    }
    let run_at = if run_rows > 0 {
        rng.gen_range(1..n_big)
    } else {
        usize::MAX
    };
    let ragged = run_rows > 0 && rng.gen_bool(0.3);

    let mut pieces = Vec::new();
    let mut current = Vec::new();
    let mut y = top;
    for i in 0..n_big {
        if i == run_at {
            pieces.extend(Column::new(std::mem::take(&mut current)));
            let mut right = Vec::new();
            let mut left_side = Vec::new();
            for row in 0..run_rows {
                let b = y + small;
                right.push(glyph(
                    rng,
                    glyphs,
                    AABox {
                        x_left: left + g - small,
                        y_top: y,
                        x_right: left + g,
                        y_bottom: b,
                    },
                ));
                if !(ragged && row + 1 == run_rows) {
                    left_side.push(glyph(
                        rng,
                        glyphs,
                        AABox {
                            x_left: left,
                            y_top: y,
                            x_right: left + small,
                            y_bottom: b,
                        },
                    ));
                }
                y += small + small_gap;
            }
            pieces.extend(Column::new(right));
            pieces.extend(Column::new(left_side));
        }
        let w = rng.gen_range(0.92..=1.0) * g;
        let h = rng.gen_range(0.92..=1.0) * g;
        let cx = left + 0.5 * g;
        current.push(glyph(
            rng,
            glyphs,
            AABox {
                x_left: cx - 0.5 * w,
                y_top: y,
                x_right: cx + 0.5 * w,
                y_bottom: y + h,
            },
        ));
        y += g + big_pitch_gap;
    }
    pieces.extend(Column::new(current));
    pieces
}

/// Generates a clean page: exact detections and an exact mask.
pub fn generate(spec: &SynthSpec) -> Result<SynthPage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let glyphs = Glyphs {
        symbols: spec.alphabet.chars().collect(),
    };
    let (w, h) = (spec.page_width as f64, spec.page_height as f64);
    let hcuts = place_cuts(&mut rng, spec.horizontal_lines, h)?;
    let vcuts = place_cuts(&mut rng, spec.vertical_lines, w)?;

    let mut lines = Vec::new();
    for &y in &hcuts {
        lines.push(LineSegment::new(
            Point::new(LINE_INSET, y),
            Point::new(w - LINE_INSET, y),
        )?);
    }
    for &x in &vcuts {
        lines.push(LineSegment::new(
            Point::new(x, LINE_INSET),
            Point::new(x, h - LINE_INSET),
        )?);
    }

    let layout = PageLayout::from_cuts(w, h, &hcuts, &vcuts, RegionOrder::TopDownRightLeft);
    let g = spec.glyph_size;
    let margin = spec.text_margin();
    let mut regions = Vec::new();
    for region in &layout.regions {
        let r = region.rect;
        let (left, right) = (r.x_left + margin, r.x_right - margin);
        let (top, bottom) = (r.y_top + margin, r.y_bottom - margin);
        let n_cols = rng.gen_range(spec.columns_per_region.0..=spec.columns_per_region.1);
        let min_gap = 0.4 * g;
        let needed = n_cols as f64 * g + (n_cols - 1) as f64 * min_gap;
        if needed > right - left {
            return Err(Error::Generation(format!(
                "region {} is {:.0} px wide; {n_cols} columns need {needed:.0} px",
                region.id,
                right - left
            )));
        }
        if top + g > bottom {
            return Err(Error::Generation(format!(
                "region {} too short for one glyph",
                region.id
            )));
        }
        let max_gap = if n_cols > 1 {
            ((right - left - n_cols as f64 * g) / (n_cols - 1) as f64).min(0.7 * g)
        } else {
            min_gap
        };
        let gap = rng.gen_range(min_gap..=max_gap.max(min_gap));
        let span = n_cols as f64 * g + (n_cols - 1) as f64 * gap;
        let offset = rng.gen_range(0.0..=(right - left - span).max(0.0));

        let mut columns = Vec::new();
        for k in 0..n_cols {
            let slot_left = right - offset - g - k as f64 * (g + gap);
            let col_top = top + rng.gen_range(0.0..=0.5) * g;
            let pieces = generate_column(&mut rng, spec, &glyphs, slot_left, col_top, bottom);
            columns.push(TextColumn { pieces });
        }
        regions.push(DocumentRegion {
            region_id: region.id,
            columns,
        });
    }
    let document = Document { regions };
    let transcript = emit_text(&document);
    let text_lines = document
        .columns()
        .map(|c| TextLine {
            quad: c.quad(),
            text: c.text(),
        })
        .collect();
    let mut detections: Vec<CharDetection> = document.chars().cloned().collect();
    detections.shuffle(&mut rng);
    let mask = render_mask(
        &lines,
        spec.page_width,
        spec.page_height,
        spec.mask_scale,
        spec.band,
    )?;

    Ok(SynthPage {
        spec: spec.clone(),
        lines,
        layout,
        document,
        transcript,
        text_lines,
        detections,
        mask,
    })
}

/// Page coordinate sampled by mask pixel index `i` at `scale`: the centre of
/// the block it covers (integer page pixels at scale 1).
pub fn mask_sample_coord(i: usize, scale: u32) -> f64 {
    let s = scale as f64;
    s * i as f64 + 0.5 * (s - 1.0)
}

/// Rasterizes boundary lines into a mask at `1/scale` resolution: a mask
/// pixel is set when its sample point is within `band` of any line.
pub fn render_mask(
    lines: &[LineSegment],
    page_width: usize,
    page_height: usize,
    scale: u32,
    band: f64,
) -> Result<BinaryMask> {
    if scale == 0 {
        return Err(Error::Config("mask scale must be at least 1".into()));
    }
    if !(band > 0.0) {
        return Err(Error::Config(format!("band must be positive, got {band}")));
    }
    let s = scale as usize;
    let (mw, mh) = (page_width.div_ceil(s), page_height.div_ceil(s));
    let mut mask = BinaryMask::new(mw, mh, scale)?;
    let sf = scale as f64;
    let to_index = |v: f64, n: usize| -> usize {
        ((v - 0.5 * (sf - 1.0)) / sf).clamp(0.0, n as f64) as usize
    };
    for line in lines {
        let x0 = line.p0.x.min(line.p1.x) - band;
        let x1 = line.p0.x.max(line.p1.x) + band;
        let y0 = line.p0.y.min(line.p1.y) - band;
        let y1 = line.p0.y.max(line.p1.y) + band;
        let (i0, i1) = (to_index(x0, mw), (to_index(x1, mw) + 1).min(mw));
        let (j0, j1) = (to_index(y0, mh), (to_index(y1, mh) + 1).min(mh));
        for j in j0..j1 {
            let py = mask_sample_coord(j, scale);
            for i in i0..i1 {
                let px = mask_sample_coord(i, scale);
                if line.distance_to_point(&Point::new(px, py)) <= band {
                    mask.set(i, j, true);
                }
            }
        }
    }
    Ok(mask)
}

/// Applies the degradations configured in `spec`: box jitter, label flips (flipped labels
/// get a score below 0.5) and isolated square specks on the mask.
pub fn corrupt(page: &SynthPage, spec: &SynthSpec) -> SynthPage {
    let mut out = page.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_c0de_d00d_f00d);
    let glyphs = Glyphs {
        symbols: spec.alphabet.chars().collect(),
    };
    if spec.jitter > 0.0 {
        let j = spec.jitter;
        for d in &mut out.detections {
            let b = &mut d.bbox;
            let (dx, dy) = (rng.gen_range(-j..=j), rng.gen_range(-j..=j));
            *b = b.translate(dx, dy);
        }
    }
    if spec.label_flip_prob > 0.0 && glyphs.symbols.len() > 1 {
        for d in &mut out.detections {
            if rng.gen_bool(spec.label_flip_prob) {
                d.label = glyphs.pick_other(&mut rng, &d.label);
                d.score = rng.gen_range(0.05..0.5);
            }
        }
    }
    if spec.speck_count > 0 {
        add_specks(&mut out.mask, spec.speck_count, spec.speck_size, &mut rng);
    }
    out
}

/// Places `count` filled squares of side `size`, each at least two pixels
/// away from any set pixel so it stays an isolated component.
fn add_specks(mask: &mut BinaryMask, count: usize, size: usize, rng: &mut ChaCha8Rng) {
    if size == 0 || mask.width() < size + 4 || mask.height() < size + 4 {
        return;
    }
    let clearance = 2i64;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < count && attempts < 1000 * count {
        attempts += 1;
        let x0 = rng.gen_range(0..=mask.width() - size) as i64;
        let y0 = rng.gen_range(0..=mask.height() - size) as i64;
        let clear = (y0 - clearance..y0 + size as i64 + clearance).all(|y| {
            (x0 - clearance..x0 + size as i64 + clearance).all(|x| !mask.get_signed(x, y))
        });
        if !clear {
            continue;
        }
        for y in y0..y0 + size as i64 {
            for x in x0..x0 + size as i64 {
                mask.set(x as usize, y as usize, true);
            }
        }
        placed += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{connected_components, filter_noise};

    #[test]
    fn minimal_page() {
        let spec = SynthSpec {
            horizontal_lines: 0,
            vertical_lines: 0,
            columns_per_region: (1, 1),
            chars_per_column: (3, 3),
            double_column_prob: 0.0,
            ..SynthSpec::default()
        };
        let page = generate(&spec).unwrap();
        assert_eq!(page.transcript.chars().count(), 3);
        assert_eq!(page.detections.len(), 3);
        assert_eq!(page.mask.count_true(), 0);
        assert_eq!(page.layout.regions.len(), 1);
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = SynthSpec {
            seed: 17,
            ..SynthSpec::default()
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec {
            seed: 18,
            ..SynthSpec::default()
        };
        assert_ne!(
            generate(&spec).unwrap().transcript,
            generate(&other).unwrap().transcript
        );
    }

    #[test]
    fn infeasible_spec_is_rejected() {
        let spec = SynthSpec {
            page_width: 400,
            vertical_lines: 0,
            columns_per_region: (8, 8),
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&spec), Err(Error::Generation(_))));
        let spec = SynthSpec {
            vertical_lines: 5,
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&spec), Err(Error::Generation(_))));
        let spec = SynthSpec {
            double_column_prob: 1.5,
            ..SynthSpec::default()
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn transcript_matches_document() {
        let page = generate(&SynthSpec::default()).unwrap();
        assert_eq!(page.transcript, emit_text(&page.document));
        assert_eq!(page.text_lines.len(), page.document.columns().count());
    }

    #[test]
    fn double_column_probability_one_gives_runs() {
        let spec = SynthSpec {
            seed: 3,
            double_column_prob: 1.0,
            chars_per_column: (3, 6),
            ..SynthSpec::default()
        };
        let page = generate(&spec).unwrap();
        for col in page.document.columns() {
            assert!(col.pieces.len() >= 3, "column without interlinear run");
        }
    }

    #[test]
    fn render_band_width() {
        let line = LineSegment::new(Point::new(50.0, 0.0), Point::new(50.0, 100.0)).unwrap();
        let m = render_mask(&[line], 120, 100, 1, 20.0).unwrap();
        let row: Vec<usize> = (0..120).filter(|&x| m.get(x, 50)).collect();
        assert_eq!(row.len(), 41);
        assert_eq!((row[0], row[40]), (30, 70));

        let m4 = render_mask(&[line], 120, 100, 4, 20.0).unwrap();
        let n = (0..m4.width()).filter(|&x| m4.get(x, 12)).count();
        assert!((10..=11).contains(&n), "{n}");

        assert_eq!(render_mask(&[], 40, 40, 1, 20.0).unwrap().count_true(), 0);
    }

    #[test]
    fn render_matches_brute_force() {
        let lines = [
            LineSegment::new(Point::new(5.0, 7.0), Point::new(50.0, 31.0)).unwrap(),
            LineSegment::new(Point::new(40.0, 2.0), Point::new(41.0, 60.0)).unwrap(),
        ];
        for scale in [1, 2, 4] {
            let m = render_mask(&lines, 64, 64, scale, 6.0).unwrap();
            for j in 0..m.height() {
                for i in 0..m.width() {
                    let p = Point::new(mask_sample_coord(i, scale), mask_sample_coord(j, scale));
                    let d = lines
                        .iter()
                        .map(|l| l.distance_to_point(&p))
                        .fold(f64::INFINITY, f64::min);
                    assert_eq!(m.get(i, j), d <= 6.0, "pixel ({i},{j}) scale {scale}");
                }
            }
        }
    }

    #[test]
    fn corrupt_identity_and_flips() {
        let spec = SynthSpec::default();
        let page = generate(&spec).unwrap();
        assert_eq!(corrupt(&page, &spec), page);

        let two = SynthSpec {
            alphabet: "甲乙".into(),
            label_flip_prob: 1.0,
            ..SynthSpec::default()
        };
        let page = generate(&two).unwrap();
        let bad = corrupt(&page, &two);
        for (a, b) in page.detections.iter().zip(&bad.detections) {
            assert_ne!(a.label, b.label);
            assert!(b.score < 0.5);
        }
    }

    #[test]
    fn corrupt_jitter_is_bounded() {
        let spec = SynthSpec {
            jitter: 3.0,
            ..SynthSpec::default()
        };
        let page = generate(&spec).unwrap();
        let bad = corrupt(&page, &spec);
        for (a, b) in page.detections.iter().zip(&bad.detections) {
            let (a, b): ([f64; 4], [f64; 4]) = (a.bbox.into(), b.bbox.into());
            assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() <= 3.0));
            assert!(((a[2] - a[0]) - (b[2] - b[0])).abs() < 1e-9);
            assert!(((a[3] - a[1]) - (b[3] - b[1])).abs() < 1e-9);
        }
    }

    #[test]
    fn specks_are_removed_by_noise_filter() {
        let spec = SynthSpec {
            speck_count: 12,
            speck_size: 5,
            ..SynthSpec::default()
        };
        let page = generate(&spec).unwrap();
        let noisy = corrupt(&page, &spec);
        let clean_cc = connected_components(&page.mask).len();
        assert_eq!(connected_components(&noisy.mask).len(), clean_cc + 12);
        let filtered = filter_noise(&noisy.mask, 50);
        assert_eq!(connected_components(&filtered).len(), clean_cc);
        assert_eq!(filtered, page.mask);
    }
}
