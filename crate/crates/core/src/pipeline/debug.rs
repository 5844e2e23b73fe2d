//! Debug overlay: boundary lines, region cuts, column boxes and reading-order
//! numbers drawn on a page-sized RGB image.

use std::path::Path;

use image::{Rgb, RgbImage};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AABox, LineSegment, Point};
use crate::pipeline::PageResult;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const LINE: Rgb<u8> = Rgb([220, 40, 40]);
const REGION: Rgb<u8> = Rgb([40, 90, 220]);
const COLUMN: Rgb<u8> = Rgb([30, 150, 60]);
const PIECE: Rgb<u8> = Rgb([150, 150, 150]);
const LABEL: Rgb<u8> = Rgb([0, 0, 0]);

/// 3x5 digit glyphs, one row per byte, high bit on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];
const DIGIT_SCALE: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebugColumn {
    pub order: usize,
    pub region: usize,
    pub bbox: AABox,
    pub text: String,
}

/// What the overlay shows, for a JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DebugSummary {
    pub page_id: String,
    pub width: usize,
    pub height: usize,
    pub lines: Vec<LineSegment>,
    pub regions: Vec<AABox>,
    pub columns: Vec<DebugColumn>,
}

struct Canvas(RgbImage);

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.0.width() && (y as u32) < self.0.height() {
            self.0.put_pixel(x as u32, y as u32, c);
        }
    }

    fn line(&mut self, a: Point, b: Point, thickness: i64, c: Rgb<u8>) {
        let steps = (b.x - a.x).abs().max((b.y - a.y).abs()).ceil().max(1.0) as i64;
        let r = thickness / 2;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let x = (a.x + t * (b.x - a.x)).round() as i64;
            let y = (a.y + t * (b.y - a.y)).round() as i64;
            for dy in -r..=r {
                for dx in -r..=r {
                    self.put(x + dx, y + dy, c);
                }
            }
        }
    }

    fn rect(&mut self, b: &AABox, thickness: i64, c: Rgb<u8>) {
        let q = b.to_quad();
        let v = q.vertices();
        for i in 0..4 {
            self.line(v[i], v[(i + 1) % 4], thickness, c);
        }
    }

    fn number(&mut self, n: usize, x: i64, y: i64, c: Rgb<u8>) {
        let s = DIGIT_SCALE as i64;
        for (k, ch) in n.to_string().bytes().enumerate() {
            let glyph = DIGITS[(ch - b'0') as usize];
            let x0 = x + k as i64 * 4 * s;
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..3 {
                    if bits & (0b100 >> col) != 0 {
                        for dy in 0..s {
                            for dx in 0..s {
                                self.put(x0 + col * s + dx, y + row as i64 * s + dy, c);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Draws the overlay. Output depends only on `result`.
pub fn render_debug(result: &PageResult) -> (RgbImage, DebugSummary) {
    let (w, h) = (result.page_width, result.page_height);
    let mut canvas = Canvas(RgbImage::from_pixel(w as u32, h as u32, BACKGROUND));

    for region in &result.layout.regions {
        canvas.rect(&region.rect, 1, REGION);
    }
    for line in &result.lines {
        canvas.line(line.p0, line.p1, 3, LINE);
    }
    let mut columns = Vec::new();
    for region in &result.document.regions {
        for col in &region.columns {
            if col.pieces.len() > 1 {
                for piece in &col.pieces {
                    canvas.rect(&piece.bbox(), 1, PIECE);
                }
            }
            let bbox = col.bbox();
            canvas.rect(&bbox, 3, COLUMN);
            let order = columns.len();
            canvas.number(order, bbox.x_left as i64 + 4, bbox.y_top as i64 - 6 * DIGIT_SCALE as i64, LABEL);
            columns.push(DebugColumn {
                order,
                region: region.region_id,
                bbox,
                text: col.text(),
            });
        }
    }
    let summary = DebugSummary {
        page_id: result.page_id.clone(),
        width: w,
        height: h,
        lines: result.lines.clone(),
        regions: result.layout.regions.iter().map(|r| r.rect).collect(),
        columns,
    };
    (canvas.0, summary)
}

pub fn save_debug(result: &PageResult, png: &Path) -> Result<DebugSummary> {
    let (img, summary) = render_debug(result);
    img.save(png).map_err(|source| Error::Image {
        path: png.to_path_buf(),
        source,
    })?;
    Ok(summary)
}
