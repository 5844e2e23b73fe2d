//! Partition of a page into rectangular regions by its boundary lines.

use serde::{Deserialize, Serialize};

use crate::geometry::{AABox, LineSegment, Point};
use crate::grouping::CharDetection;
use crate::mask::{classify_segment, segment_intercept, LineClass};

/// Cuts closer than this to each other or to the page border are ignored.
const MIN_CUT_SPACING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub rect: AABox,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLayout {
    pub page_width: f64,
    pub page_height: f64,
    /// Regions sorted by reading order; `regions[i].order == i`.
    pub regions: Vec<Region>,
}

/// How regions are sequenced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionOrder {
    /// Top band first; right to left within a band.
    #[default]
    TopDownRightLeft,
    /// Rightmost strip first; top to bottom within a strip.
    RightLeftTopDown,
}

impl std::str::FromStr for RegionOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top_down_right_left" => Ok(Self::TopDownRightLeft),
            "right_left_top_down" => Ok(Self::RightLeftTopDown),
            other => Err(format!("unknown region order {other:?}")),
        }
    }
}

impl PageLayout {
    pub fn single_region(page_width: f64, page_height: f64) -> Self {
        partition_page(&[], page_width, page_height)
    }

    /// Builds a layout from explicit cut positions.
    pub fn from_cuts(
        page_width: f64,
        page_height: f64,
        horizontal: &[f64],
        vertical: &[f64],
        order: RegionOrder,
    ) -> Self {
        let ys = cut_positions(horizontal, page_height);
        let xs = cut_positions(vertical, page_width);
        let mut rects = Vec::new();
        for w in ys.windows(2) {
            for v in xs.windows(2) {
                rects.push(AABox {
                    x_left: v[0],
                    y_top: w[0],
                    x_right: v[1],
                    y_bottom: w[1],
                });
            }
        }
        match order {
            RegionOrder::TopDownRightLeft => rects.sort_by(|a, b| {
                a.y_top
                    .total_cmp(&b.y_top)
                    .then(b.x_right.total_cmp(&a.x_right))
            }),
            RegionOrder::RightLeftTopDown => rects.sort_by(|a, b| {
                b.x_right
                    .total_cmp(&a.x_right)
                    .then(a.y_top.total_cmp(&b.y_top))
            }),
        }
        let regions = rects
            .into_iter()
            .enumerate()
            .map(|(i, rect)| Region {
                id: i,
                rect,
                order: i,
            })
            .collect();
        Self {
            page_width,
            page_height,
            regions,
        }
    }

    pub fn region(&self, id: usize) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn page_rect(&self) -> AABox {
        AABox {
            x_left: 0.0,
            y_top: 0.0,
            x_right: self.page_width,
            y_bottom: self.page_height,
        }
    }
}

/// Sorted, de-duplicated interior cuts bracketed by the page borders.
fn cut_positions(cuts: &[f64], extent: f64) -> Vec<f64> {
    let mut inner: Vec<f64> = cuts
        .iter()
        .copied()
        .filter(|c| c.is_finite() && *c >= MIN_CUT_SPACING && *c <= extent - MIN_CUT_SPACING)
        .collect();
    inner.sort_by(f64::total_cmp);
    let mut out = vec![0.0];
    for c in inner {
        if c - out[out.len() - 1] >= MIN_CUT_SPACING {
            out.push(c);
        }
    }
    if extent - out[out.len() - 1] < MIN_CUT_SPACING && out.len() > 1 {
        out.pop();
    }
    out.push(extent);
    out
}

/// Splits the page by extending every boundary line into a full-page cut.
///
/// Each line becomes a horizontal or vertical cut according to its nearest
/// axis, positioned at its intercept with the page midline. Regions are the
/// grid cells, ordered top to bottom and then right to left.
pub fn partition_page(lines: &[LineSegment], page_width: f64, page_height: f64) -> PageLayout {
    partition_page_with(lines, page_width, page_height, RegionOrder::default())
}

pub fn partition_page_with(
    lines: &[LineSegment],
    page_width: f64,
    page_height: f64,
    order: RegionOrder,
) -> PageLayout {
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for line in lines {
        match classify_segment(line, 90.0) {
            Some(LineClass::Horizontal) => horizontal.push(segment_intercept(
                line,
                LineClass::Horizontal,
                page_width,
                page_height,
            )),
            Some(LineClass::Vertical) => vertical.push(segment_intercept(
                line,
                LineClass::Vertical,
                page_width,
                page_height,
            )),
            None => {}
        }
    }
    PageLayout::from_cuts(page_width, page_height, &horizontal, &vertical, order)
}

/// Region containing the detection's box centre (clamped to the page).
///
/// A centre on a shared edge goes to the candidate with the larger overlap
/// with the box; remaining ties go to the smaller region id.
pub fn assign_region(det: &CharDetection, layout: &PageLayout) -> usize {
    let c = det.bbox.center();
    let c = Point::new(
        c.x.clamp(0.0, layout.page_width),
        c.y.clamp(0.0, layout.page_height),
    );
    let mut best: Option<(&Region, f64)> = None;
    for r in layout.regions.iter().filter(|r| r.rect.contains(&c)) {
        let overlap = r.rect.intersection_area(&det.bbox);
        best = match best {
            Some((b, bo)) if bo > overlap || (bo == overlap && b.id < r.id) => Some((b, bo)),
            _ => Some((r, overlap)),
        };
    }
    match best {
        Some((r, _)) => r.id,
        // Unreachable for a layout that tiles the page; fall back to the
        // nearest region.
        None => layout
            .regions
            .iter()
            .min_by(|a, b| {
                a.rect
                    .center()
                    .distance(&c)
                    .total_cmp(&b.rect.center().distance(&c))
            })
            .map(|r| r.id)
            .unwrap_or(0),
    }
}
