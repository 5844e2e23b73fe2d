//! Column grouping and reading-order serialization of character detections.
//!
//! Characters in one layout region are grouped into vertical columns by
//! edge alignment, interlinear half-width runs are split into their right and
//! left sub-columns, and the resulting document is read region by region,
//! right to left across columns and top to bottom within a column.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AABox, Quad};
use crate::layout::{assign_region, PageLayout};

/// One recognized character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharDetection {
    #[serde(rename = "box")]
    pub bbox: AABox,
    pub label: String,
    pub score: f64,
}

impl CharDetection {
    pub fn new(bbox: AABox, label: impl Into<String>, score: f64) -> Result<Self> {
        let d = Self {
            bbox,
            label: label.into(),
            score,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if self.bbox.width() <= 0.0 || self.bbox.height() <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "degenerate box {:?}",
                <[f64; 4]>::from(self.bbox)
            )));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidBox(format!(
                "score {} outside [0, 1]",
                self.score
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.bbox.width()
    }
}

/// Top-to-bottom order inside a column; full ties fall back to content so
/// the order never depends on input order.
fn vertical_order(a: &CharDetection, b: &CharDetection) -> Ordering {
    a.bbox
        .y_top
        .total_cmp(&b.bbox.y_top)
        .then(b.bbox.x_left.total_cmp(&a.bbox.x_left))
        .then(a.bbox.x_right.total_cmp(&b.bbox.x_right))
        .then(a.bbox.y_bottom.total_cmp(&b.bbox.y_bottom))
        .then(a.label.cmp(&b.label))
        .then(a.score.total_cmp(&b.score))
}

/// Characters of one column sorted top to bottom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    chars: Vec<CharDetection>,
}

impl Column {
    /// `None` for an empty character list.
    pub fn new(mut chars: Vec<CharDetection>) -> Option<Self> {
        if chars.is_empty() {
            return None;
        }
        chars.sort_by(vertical_order);
        Some(Self { chars })
    }

    pub fn chars(&self) -> &[CharDetection] {
        &self.chars
    }

    pub fn into_chars(self) -> Vec<CharDetection> {
        self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// `(min x_left, max x_right)` over the members.
    pub fn x_extent(&self) -> (f64, f64) {
        let b = self.bbox();
        (b.x_left, b.x_right)
    }

    pub fn bbox(&self) -> AABox {
        self.chars
            .iter()
            .skip(1)
            .fold(self.chars[0].bbox, |acc, c| acc.union(&c.bbox))
    }

    pub fn text(&self) -> String {
        self.chars.iter().map(|c| c.label.as_str()).collect()
    }
}

/// Right-to-left column order; ties by top edge.
fn column_order(a: &Column, b: &Column) -> Ordering {
    let (ba, bb) = (a.bbox(), b.bbox());
    bb.x_right
        .total_cmp(&ba.x_right)
        .then(ba.y_top.total_cmp(&bb.y_top))
        .then(bb.x_left.total_cmp(&ba.x_left))
        .then_with(|| vertical_order(&a.chars[0], &b.chars[0]))
}

/// One line of output text: a main column, possibly split into pieces where
/// interlinear runs were re-ordered. Pieces are in reading order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextColumn {
    pub pieces: Vec<Column>,
}

impl TextColumn {
    pub fn chars(&self) -> impl Iterator<Item = &CharDetection> {
        self.pieces.iter().flat_map(|p| p.chars.iter())
    }

    pub fn bbox(&self) -> AABox {
        self.pieces
            .iter()
            .map(Column::bbox)
            .reduce(|a, b| a.union(&b))
            .expect("text column has at least one piece")
    }

    pub fn text(&self) -> String {
        self.chars().map(|c| c.label.as_str()).collect()
    }

    pub fn quad(&self) -> Quad {
        self.bbox().to_quad()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRegion {
    pub region_id: usize,
    pub columns: Vec<TextColumn>,
}

/// Regions in reading order, each holding its columns right to left.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub regions: Vec<DocumentRegion>,
}

impl Document {
    pub fn columns(&self) -> impl Iterator<Item = &TextColumn> {
        self.regions.iter().flat_map(|r| r.columns.iter())
    }

    pub fn chars(&self) -> impl Iterator<Item = &CharDetection> {
        self.columns().flat_map(TextColumn::chars)
    }
}

/// Thresholds for column grouping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingParams {
    /// Column-join tolerance as a fraction of the median character width.
    pub tol_frac: f64,
    /// Characters narrower than this fraction of their column's median width
    /// are interlinear candidates.
    pub small_frac: f64,
    /// Skip interlinear refinement when more than this fraction of a column
    /// is small.
    pub max_small_share: f64,
}

impl Default for GroupingParams {
    fn default() -> Self {
        Self {
            tol_frac: 0.5,
            small_frac: 0.67,
            max_small_share: 0.8,
        }
    }
}

impl GroupingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol_frac", self.tol_frac), ("small_frac", self.small_frac)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.max_small_share) {
            return Err(Error::Config(format!(
                "max_small_share must be within [0, 1], got {}",
                self.max_small_share
            )));
        }
        Ok(())
    }
}

fn median_width<'a>(chars: impl Iterator<Item = &'a CharDetection>) -> f64 {
    let mut w: Vec<f64> = chars.map(CharDetection::width).collect();
    if w.is_empty() {
        return 0.0;
    }
    w.sort_by(f64::total_cmp);
    let n = w.len();
    if n % 2 == 1 {
        w[n / 2]
    } else {
        0.5 * (w[n / 2 - 1] + w[n / 2])
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups characters of one region into columns.
///
/// Two characters share a column when their left edges or their right edges
/// differ by less than `tol_frac` times the median character width; columns
/// are the transitive closure of that relation, returned right to left.
pub fn group_columns(chars: &[CharDetection], tol_frac: f64) -> Vec<Column> {
    if chars.is_empty() {
        return Vec::new();
    }
    let t = tol_frac * median_width(chars.iter());
    let mut sets = DisjointSet::new(chars.len());
    for i in 0..chars.len() {
        for j in i + 1..chars.len() {
            let (a, b) = (&chars[i].bbox, &chars[j].bbox);
            if (a.x_left - b.x_left).abs() < t || (a.x_right - b.x_right).abs() < t {
                sets.union(i, j);
            }
        }
    }
    let mut members: BTreeMap<usize, Vec<CharDetection>> = BTreeMap::new();
    for (i, c) in chars.iter().enumerate() {
        members.entry(sets.find(i)).or_default().push(c.clone());
    }
    let mut columns: Vec<Column> = members.into_values().filter_map(Column::new).collect();
    columns.sort_by(column_order);
    columns
}

/// Splits interlinear (double-column) runs out of a column.
///
/// Characters narrower than `small_frac` of the column's median width are
/// small. Each maximal vertical run of small characters is regrouped with
/// [`group_columns`] and replaced by its sub-columns, right before left.
/// The returned pieces, concatenated, give the column's reading order.
pub fn refine_double_columns(col: &Column, small_frac: f64, tol_frac: f64) -> Vec<Column> {
    refine_with(
        col,
        &GroupingParams {
            small_frac,
            tol_frac,
            ..GroupingParams::default()
        },
    )
}

fn refine_with(col: &Column, params: &GroupingParams) -> Vec<Column> {
    let cutoff = params.small_frac * median_width(col.chars.iter());
    let is_small = |c: &CharDetection| c.width() < cutoff;
    let n_small = col.chars.iter().filter(|c| is_small(c)).count();
    if n_small == 0 || n_small as f64 > params.max_small_share * col.len() as f64 {
        return vec![col.clone()];
    }

    let mut pieces = Vec::new();
    let mut big: Vec<CharDetection> = Vec::new();
    let mut small: Vec<CharDetection> = Vec::new();
    for c in &col.chars {
        if is_small(c) {
            if let Some(p) = Column::new(std::mem::take(&mut big)) {
                pieces.push(p);
            }
            small.push(c.clone());
        } else {
            if !small.is_empty() {
                pieces.extend(group_columns(&std::mem::take(&mut small), params.tol_frac));
            }
            big.push(c.clone());
        }
    }
    if !small.is_empty() {
        pieces.extend(group_columns(&small, params.tol_frac));
    }
    pieces.extend(Column::new(big));
    pieces
}

/// Assembles the document: regions in layout order, columns right to left
/// within each region, interlinear runs spliced in place. Regions without
/// columns are omitted.
pub fn order_document(
    layout: &PageLayout,
    columns: &[(usize, Vec<Column>)],
    params: &GroupingParams,
) -> Document {
    let mut by_region: BTreeMap<usize, Vec<&Column>> = BTreeMap::new();
    for (region, cols) in columns {
        by_region.entry(*region).or_default().extend(cols.iter());
    }
    let regions = layout
        .regions
        .iter()
        .filter_map(|region| {
            let mut cols = by_region.remove(&region.id)?;
            cols.sort_by(|a, b| column_order(a, b));
            let columns: Vec<TextColumn> = cols
                .into_iter()
                .map(|c| TextColumn {
                    pieces: refine_with(c, params),
                })
                .collect();
            (!columns.is_empty()).then_some(DocumentRegion {
                region_id: region.id,
                columns,
            })
        })
        .collect();
    Document { regions }
}

/// Assigns detections to regions, groups each region into columns and
/// orders the result.
pub fn build_document(
    dets: &[CharDetection],
    layout: &PageLayout,
    params: &GroupingParams,
) -> Document {
    let mut per_region: BTreeMap<usize, Vec<CharDetection>> = BTreeMap::new();
    for d in dets {
        per_region
            .entry(assign_region(d, layout))
            .or_default()
            .push(d.clone());
    }
    let columns: Vec<(usize, Vec<Column>)> = per_region
        .into_iter()
        .map(|(region, chars)| (region, group_columns(&chars, params.tol_frac)))
        .collect();
    order_document(layout, &columns, params)
}

/// Bounding quadrangle of a column.
pub fn column_quad(col: &Column) -> Quad {
    col.bbox().to_quad()
}

/// One line per column, a blank line between regions.
pub fn emit_text(doc: &Document) -> String {
    doc.regions
        .iter()
        .map(|r| {
            r.columns
                .iter()
                .map(TextColumn::text)
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
