//! Layout-mask post-processing: noise filtering, upscaling, Hough voting,
//! segment extraction and duplicate-line removal.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AABox, LineSegment, Point};

/// Row-major boolean grid. One mask pixel covers `scale × scale` page pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    scale: u32,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, scale: u32) -> Result<Self> {
        Self::from_bits(width, height, vec![false; width * height], scale)
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>, scale: u32) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidMask(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        if scale == 0 {
            return Err(Error::InvalidMask("scale must be at least 1".into()));
        }
        Ok(Self {
            width,
            height,
            bits,
            scale,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Page dimensions covered by the mask.
    pub fn page_size(&self) -> (usize, usize) {
        (
            self.width * self.scale as usize,
            self.height * self.scale as usize,
        )
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Bounds-checked lookup with signed coordinates; outside is `false`.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Reads a single-channel PNG or PGM; any nonzero sample is a line pixel.
    pub fn load(path: &Path, scale: u32) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        let bits = gray.pixels().map(|p| p.0[0] != 0).collect();
        Self::from_bits(w as usize, h as usize, bits, scale)
    }

    /// Writes the mask as binary PGM (`.pgm`) or PNG (anything else), with
    /// line pixels at 255.
    pub fn save(&self, path: &Path) -> Result<()> {
        let img = self.to_gray_image();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let out = BufWriter::new(file);
        let is_pgm = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        let res = if is_pgm {
            PnmEncoder::new(out)
                .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)
        } else {
            PngEncoder::new(out).write_image(
                img.as_raw(),
                img.width(),
                img.height(),
                ExtendedColorType::L8,
            )
        };
        res.map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            image::Luma([if self.get(x as usize, y as usize) { 255 } else { 0 }])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    pub pixel_count: usize,
    /// Extent in mask pixels; right and bottom edges are exclusive.
    pub bbox: AABox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    pub theta_step: f64,
    pub rho_step: f64,
    pub vote_threshold: u32,
    pub merge_slope_deg: f64,
    pub merge_intercept_px: f64,
    pub segment_gap_px: f64,
    pub min_segment_len_px: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            theta_step: 1.0,
            rho_step: 1.0,
            vote_threshold: 100,
            merge_slope_deg: 45.0,
            merge_intercept_px: 200.0,
            segment_gap_px: 20.0,
            min_segment_len_px: 100.0,
        }
    }
}

impl HoughParams {
    /// Default vote threshold for a page: 30% of its shorter side.
    pub fn default_vote_threshold(page_width: usize, page_height: usize) -> u32 {
        ((0.3 * page_width.min(page_height) as f64).round() as u32).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("theta_step", self.theta_step),
            ("rho_step", self.rho_step),
            ("merge_slope_deg", self.merge_slope_deg),
            ("merge_intercept_px", self.merge_intercept_px),
            ("segment_gap_px", self.segment_gap_px),
            ("min_segment_len_px", self.min_segment_len_px),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.vote_threshold == 0 {
            return Err(Error::Config("vote_threshold must be positive".into()));
        }
        if self.merge_slope_deg > 90.0 {
            return Err(Error::Config(format!(
                "merge_slope_deg must be at most 90, got {}",
                self.merge_slope_deg
            )));
        }
        if self.theta_step > 180.0 {
            return Err(Error::Config("theta_step must be at most 180".into()));
        }
        Ok(())
    }
}

/// A Hough accumulator peak: the line `x cos θ + y sin θ = ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughPeak {
    pub rho: f64,
    pub theta_deg: f64,
    pub votes: u32,
}

const NEIGHBORS_8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Per-pixel component labels (0 = background) and the component list.
fn label_components(mask: &BinaryMask) -> (Vec<usize>, Vec<Component>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0usize; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        let id = components.len() + 1;
        labels[start] = id;
        stack.push(start);
        let (mut count, mut min_x, mut min_y, mut max_x, mut max_y) = (0, w, h, 0, 0);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            count += 1;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if mask.get_signed(nx, ny) {
                    let n = ny as usize * w + nx as usize;
                    if labels[n] == 0 {
                        labels[n] = id;
                        stack.push(n);
                    }
                }
            }
        }
        components.push(Component {
            id,
            pixel_count: count,
            bbox: AABox {
                x_left: min_x as f64,
                y_top: min_y as f64,
                x_right: (max_x + 1) as f64,
                y_bottom: (max_y + 1) as f64,
            },
        });
    }
    (labels, components)
}

/// 8-connected components in raster-scan order of their first pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    label_components(mask).1
}

/// Clears every component with fewer than `min_area` pixels.
pub fn filter_noise(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    if min_area == 0 {
        return mask.clone();
    }
    let (labels, components) = label_components(mask);
    let keep: Vec<bool> = std::iter::once(false)
        .chain(components.iter().map(|c| c.pixel_count >= min_area))
        .collect();
    let bits = labels.iter().map(|&l| keep[l]).collect();
    BinaryMask {
        bits,
        ..mask.clone()
    }
}

/// Nearest-neighbor upscaling by `factor`, which must divide the mask scale.
pub fn upscale(mask: &BinaryMask, factor: u32) -> Result<BinaryMask> {
    if factor == 0 || mask.scale % factor != 0 {
        return Err(Error::Config(format!(
            "upscale factor {factor} does not divide mask scale {}",
            mask.scale
        )));
    }
    if factor == 1 {
        return Ok(mask.clone());
    }
    let f = factor as usize;
    let (w, h) = (mask.width * f, mask.height * f);
    let mut bits = vec![false; w * h];
    for y in 0..h {
        let src_row = (y / f) * mask.width;
        let dst_row = y * w;
        for x in 0..w {
            bits[dst_row + x] = mask.bits[src_row + x / f];
        }
    }
    BinaryMask::from_bits(w, h, bits, mask.scale / factor)
}

/// Standard (ρ, θ) Hough transform over the true pixels of `mask`.
///
/// θ is sampled on `[0, 180)` in `theta_step` increments and ρ in
/// `rho_step` bins over `[-diag, diag]`. Returned peaks are 3×3 local
/// maxima of the accumulator with at least `vote_threshold` votes, sorted by
/// votes descending. Plateaus yield one peak (the first in scan order).
pub fn hough_lines(mask: &BinaryMask, params: &HoughParams) -> Vec<HoughPeak> {
    let n_theta = (180.0 / params.theta_step).ceil() as usize;
    let diag = (mask.width as f64).hypot(mask.height as f64);
    let rho_half = (diag / params.rho_step).ceil() as i64 + 1;
    let n_rho = (2 * rho_half + 1) as usize;
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|k| (k as f64 * params.theta_step).to_radians().sin_cos())
        .map(|(s, c)| (c / params.rho_step, s / params.rho_step))
        .collect();

    let mut acc = vec![0u32; n_theta * n_rho];
    let offset = rho_half as f64 + 0.5;
    let points: Vec<(f64, f64)> = (0..mask.height)
        .flat_map(|y| (0..mask.width).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.bits[y * mask.width + x])
        .map(|(x, y)| (x as f64, y as f64))
        .collect();
    for (row, (c, s)) in acc.chunks_exact_mut(n_rho).zip(&trig) {
        for (x, y) in &points {
            // Shifted to be positive, so truncation rounds to nearest.
            row[(x * c + y * s + offset) as usize] += 1;
        }
    }

    let mut peaks = Vec::new();
    for k in 0..n_theta {
        for r in 0..n_rho {
            let v = acc[k * n_rho + r];
            if v < params.vote_threshold {
                continue;
            }
            let is_peak = NEIGHBORS_8.iter().all(|&(dr, dk)| {
                let (nr, nk) = (r as i64 + dr, k as i64 + dk);
                if nr < 0 || nk < 0 || nr >= n_rho as i64 || nk >= n_theta as i64 {
                    return true;
                }
                let nv = acc[nk as usize * n_rho + nr as usize];
                // Neighbors earlier in scan order must be strictly lower.
                if (dk, dr) < (0, 0) {
                    nv < v
                } else {
                    nv <= v
                }
            });
            if is_peak {
                peaks.push(HoughPeak {
                    rho: (r as i64 - rho_half) as f64 * params.rho_step,
                    theta_deg: k as f64 * params.theta_step,
                    votes: v,
                });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then(a.theta_deg.total_cmp(&b.theta_deg))
            .then(a.rho.total_cmp(&b.rho))
    });
    peaks
}

/// Perpendicular half-width of the line-membership band.
const MEMBER_BAND: i64 = 2;
/// Spacing of stroke cross-section samples along a run.
const PROFILE_STEP: f64 = 4.0;
/// Cross-sections wider than this are treated as junctions.
const MAX_PROFILE_WALK: i64 = 200;
/// Cross-section edges are located to `1 / WALK_SUBSTEPS` px.
const WALK_SUBSTEPS: i64 = 4;
/// Cross-section centres farther than this from the first fit are dropped
/// before refitting.
const MAX_FIT_RESIDUAL: f64 = 3.0;

/// A parametrised infinite line `origin + t · dir`.
#[derive(Debug, Clone, Copy)]
struct Ray {
    origin: (f64, f64),
    dir: (f64, f64),
    normal: (f64, f64),
}

impl Ray {
    fn from_peak(peak: &HoughPeak) -> Self {
        let (s, c) = peak.theta_deg.to_radians().sin_cos();
        Ray {
            origin: (peak.rho * c, peak.rho * s),
            dir: (-s, c),
            normal: (c, s),
        }
    }

    fn at(&self, t: f64, offset: f64) -> (f64, f64) {
        (
            self.origin.0 + t * self.dir.0 + offset * self.normal.0,
            self.origin.1 + t * self.dir.1 + offset * self.normal.1,
        )
    }

    fn project(&self, p: (f64, f64)) -> f64 {
        (p.0 - self.origin.0) * self.dir.0 + (p.1 - self.origin.1) * self.dir.1
    }

    fn pixel(&self, mask: &BinaryMask, t: f64, offset: f64) -> bool {
        let (x, y) = self.at(t, offset);
        mask.get_signed(x.round() as i64, y.round() as i64)
    }

    /// Offset within the membership band that hits a true pixel, nearest first.
    fn member_offset(&self, mask: &BinaryMask, t: f64) -> Option<i64> {
        std::iter::once(0)
            .chain((1..=MEMBER_BAND).flat_map(|o| [o, -o]))
            .find(|&o| self.pixel(mask, t, o as f64))
    }

    /// Integer `t` range over which the membership band can meet the mask.
    fn extent(&self, mask: &BinaryMask) -> Option<(i64, i64)> {
        let pad = MEMBER_BAND as f64 + 1.0;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (o, d, n) in [
            (self.origin.0, self.dir.0, mask.width as f64),
            (self.origin.1, self.dir.1, mask.height as f64),
        ] {
            if d.abs() < 1e-12 {
                if o < -pad || o > n + pad {
                    return None;
                }
                continue;
            }
            let (a, b) = ((-pad - o) / d, (n + pad - o) / d);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        (lo <= hi).then(|| (lo.floor() as i64, hi.ceil() as i64))
    }

    /// Maximal runs of band membership along the line, split at gaps
    /// longer than `gap`.
    fn runs(&self, mask: &BinaryMask, gap: f64) -> Vec<(f64, f64)> {
        let Some((lo, hi)) = self.extent(mask) else {
            return Vec::new();
        };
        let mut runs = Vec::new();
        let mut current: Option<(f64, f64)> = None;
        for ti in lo..=hi {
            let t = ti as f64;
            if self.member_offset(mask, t).is_none() {
                continue;
            }
            current = match current {
                Some((start, end)) if t - end <= gap + 1.0 => Some((start, t)),
                Some(run) => {
                    runs.push(run);
                    Some((t, t))
                }
                None => Some((t, t)),
            };
        }
        runs.extend(current);
        runs
    }

    /// True-pixel extent `(lo, hi)` across the line at `t`, or `None` when
    /// the cross-section misses the stroke or runs into a junction.
    fn cross_section(&self, mask: &BinaryMask, t: f64) -> Option<(f64, f64)> {
        let start = self.member_offset(mask, t)?;
        let walk = |sign: i64| -> Option<f64> {
            let mut k = start;
            while self.pixel(mask, t, (k + sign) as f64) {
                k += sign;
                if (k - start).abs() > MAX_PROFILE_WALK {
                    return None;
                }
            }
            let step = sign as f64 / WALK_SUBSTEPS as f64;
            let mut edge = k as f64;
            while edge != (k + sign) as f64 && self.pixel(mask, t, edge + step) {
                edge += step;
            }
            Some(edge)
        };
        Some((walk(-1)?, walk(1)?))
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares `(slope, intercept)` of centre offset against position
/// along the line, over `(t, centre, half_width)` samples.
fn fit_line(samples: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_c = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let var_t: f64 = samples.iter().map(|s| (s.0 - mean_t).powi(2)).sum();
    let slope = if var_t > 1e-9 {
        samples
            .iter()
            .map(|s| (s.0 - mean_t) * (s.1 - mean_c))
            .sum::<f64>()
            / var_t
    } else {
        0.0
    };
    Some((slope, mean_c - slope * mean_t))
}

/// Re-centres a run on the stroke's medial axis and trims the round caps a
/// thick stroke adds beyond its endpoints.
fn refine_run(
    mask: &BinaryMask,
    ray: &Ray,
    run: (f64, f64),
    params: &HoughParams,
) -> Option<LineSegment> {
    let (refined, _) = fit_run(mask, ray, run)?;
    let anchor = refined.project(ray.at(0.5 * (run.0 + run.1), 0.0));
    let run = nearest_run(mask, &refined, anchor, params)?;
    // Refit over the full walked extent of the first estimate.
    let (refined, half_width) = fit_run(mask, &refined, run)?;
    let run = nearest_run(mask, &refined, 0.5 * (run.0 + run.1), params)?;
    let (start, end) = (run.0 + half_width, run.1 - half_width);
    if end - start < params.min_segment_len_px {
        return None;
    }
    let (x0, y0) = refined.at(start, 0.0);
    let (x1, y1) = refined.at(end, 0.0);
    LineSegment::new(Point::new(x0, y0), Point::new(x1, y1)).ok()
}

/// Fits the stroke centreline over `run` of `ray`, returning the refined ray
/// (same parameterisation origin) and the median half-width.
fn fit_run(mask: &BinaryMask, ray: &Ray, run: (f64, f64)) -> Option<(Ray, f64)> {
    let mut samples = Vec::new();
    let mut t = run.0;
    while t <= run.1 {
        if let Some((lo, hi)) = ray.cross_section(mask, t) {
            samples.push((t, 0.5 * (lo + hi), 0.5 * (hi - lo)));
        }
        t += PROFILE_STEP;
    }
    if samples.is_empty() {
        return None;
    }
    let half_width = median(&mut samples.iter().map(|s| s.2).collect::<Vec<_>>());
    // Junctions widen a cross-section; caps and grazing ends narrow it.
    samples.retain(|s| s.2 >= 0.5 * half_width && s.2 <= 1.5 * half_width + 1.0);
    let (slope, intercept) = fit_line(&samples)?;
    samples.retain(|s| (s.1 - intercept - slope * s.0).abs() <= MAX_FIT_RESIDUAL);
    let (slope, intercept) = fit_line(&samples)?;

    let (dx, dy) = (
        ray.dir.0 + slope * ray.normal.0,
        ray.dir.1 + slope * ray.normal.1,
    );
    let norm = dx.hypot(dy);
    let dir = (dx / norm, dy / norm);
    let refined = Ray {
        origin: ray.at(0.0, intercept),
        dir,
        normal: (dir.1, -dir.0),
    };
    Some((refined, half_width))
}

fn nearest_run(mask: &BinaryMask, ray: &Ray, anchor: f64, params: &HoughParams) -> Option<(f64, f64)> {
    ray.runs(mask, params.segment_gap_px)
        .into_iter()
        .min_by(|a, b| run_distance(*a, anchor).total_cmp(&run_distance(*b, anchor)))
}

fn run_distance(run: (f64, f64), t: f64) -> f64 {
    if t < run.0 {
        run.0 - t
    } else if t > run.1 {
        t - run.1
    } else {
        0.0
    }
}

/// Turns Hough peaks into finite segments.
///
/// Pixels within two pixels of each peak's line are gathered along the
/// line and split into runs wherever the gap exceeds `segment_gap_px`.
/// Each run is then re-fitted to the stroke's medial axis (sampled cross
/// sections), and its ends are pulled in by the stroke half-width so a
/// band-rendered line reports the endpoints of its centre line. Runs
/// shorter than `min_segment_len_px` are dropped.
pub fn extract_segments(
    mask: &BinaryMask,
    peaks: &[HoughPeak],
    params: &HoughParams,
) -> Vec<LineSegment> {
    peaks
        .iter()
        .flat_map(|peak| {
            let ray = Ray::from_peak(peak);
            ray.runs(mask, params.segment_gap_px)
                .into_iter()
                .filter(|(a, b)| b - a >= params.min_segment_len_px)
                .filter_map(move |run| refine_run(mask, &ray, run, params))
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineClass {
    Horizontal,
    Vertical,
}

/// Classifies a segment by its angle to the axes; `None` when it is farther
/// than `max_slope_deg` from both.
pub fn classify_segment(seg: &LineSegment, max_slope_deg: f64) -> Option<LineClass> {
    let a = seg.angle_deg();
    let from_horizontal = a.min(180.0 - a);
    let from_vertical = (a - 90.0).abs();
    if from_vertical <= from_horizontal && from_vertical <= max_slope_deg {
        Some(LineClass::Vertical)
    } else if from_horizontal <= max_slope_deg {
        Some(LineClass::Horizontal)
    } else {
        None
    }
}

/// Axis intercept used for comparing lines of one class: `x` at the page's
/// vertical midline for vertical lines, `y` at the horizontal midline for
/// horizontal ones.
pub fn segment_intercept(
    seg: &LineSegment,
    class: LineClass,
    page_width: f64,
    page_height: f64,
) -> f64 {
    match class {
        LineClass::Vertical => seg
            .x_at(0.5 * page_height)
            .unwrap_or(0.5 * (seg.p0.x + seg.p1.x)),
        LineClass::Horizontal => seg
            .y_at(0.5 * page_width)
            .unwrap_or(0.5 * (seg.p0.y + seg.p1.y)),
    }
}

/// Removes redundant detections of the same boundary line.
///
/// Segments are split into near-horizontal and near-vertical classes
/// (others are dropped). Within a class, segments whose intercepts lie
/// closer than `merge_intercept_px` are chained into clusters, and each
/// cluster keeps its longest member. Output is horizontal lines first,
/// each class sorted by intercept.
pub fn dedup_lines(
    segments: &[LineSegment],
    params: &HoughParams,
    page_width: f64,
    page_height: f64,
) -> Vec<LineSegment> {
    let mut out = Vec::new();
    for class in [LineClass::Horizontal, LineClass::Vertical] {
        let mut members: Vec<(f64, &LineSegment)> = segments
            .iter()
            .filter(|s| classify_segment(s, params.merge_slope_deg) == Some(class))
            .map(|s| (segment_intercept(s, class, page_width, page_height), s))
            .collect();
        members.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut i = 0;
        while i < members.len() {
            let mut j = i + 1;
            while j < members.len() && members[j].0 - members[j - 1].0 < params.merge_intercept_px
            {
                j += 1;
            }
            // Sorted by intercept, so the first longest member has the
            // smallest intercept among equals.
            let best = members[i..j]
                .iter()
                .fold(None::<&(f64, &LineSegment)>, |best, m| match best {
                    Some(b) if b.1.length() >= m.1.length() => Some(b),
                    _ => Some(m),
                })
                .expect("non-empty cluster");
            out.push(*best.1);
            i = j;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::segment_pair_distance;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryMask::from_bits(w, h, bits, 1).unwrap()
    }

    fn fill(mask: &mut BinaryMask, x0: usize, y0: usize, x1: usize, y1: usize) {
        for y in y0..y1 {
            for x in x0..x1 {
                mask.set(x, y, true);
            }
        }
    }

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> LineSegment {
        LineSegment::new(Point::new(x0, y0), Point::new(x1, y1)).unwrap()
    }

    #[test]
    fn mask_validates_shape() {
        assert!(BinaryMask::from_bits(2, 2, vec![false; 3], 1).is_err());
        assert!(BinaryMask::new(2, 2, 0).is_err());
    }

    #[test]
    fn components_basic() {
        assert!(connected_components(&BinaryMask::new(5, 5, 1).unwrap()).is_empty());

        let mut m = BinaryMask::new(10, 10, 1).unwrap();
        fill(&mut m, 2, 3, 6, 5);
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].pixel_count, 8);
        assert_eq!(<[f64; 4]>::from(cc[0].bbox), [2.0, 3.0, 6.0, 5.0]);

        let diag = mask_from(&["#.", ".#"]);
        assert_eq!(connected_components(&diag).len(), 1);
    }

    #[test]
    fn filter_noise_cases() {
        let m = mask_from(&["#...", "..##", "...."]);
        assert_eq!(filter_noise(&m, 0), m);
        let lone = mask_from(&["....", ".#..", "...."]);
        assert_eq!(filter_noise(&lone, 2).count_true(), 0);

        let mut m = BinaryMask::new(100, 100, 1).unwrap();
        fill(&mut m, 10, 0, 15, 100); // 500 px line blob
        fill(&mut m, 60, 60, 65, 62); // 10 px speck
        let out = filter_noise(&m, 50);
        assert_eq!(out.count_true(), 500);
        assert!(!out.get(60, 60));
        assert!(out.get(12, 50));
    }

    #[test]
    fn upscale_cases() {
        let m = mask_from(&["#.", ".."]);
        let m4 = BinaryMask::from_bits(2, 2, m.bits().to_vec(), 4).unwrap();
        let up = upscale(&m4, 4).unwrap();
        assert_eq!((up.width(), up.height(), up.scale()), (8, 8, 1));
        assert_eq!(up.count_true(), 16);
        assert!(up.get(3, 3) && !up.get(4, 0));
        assert_eq!(upscale(&m4, 1).unwrap(), m4);
        assert!(matches!(upscale(&m4, 3), Err(Error::Config(_))));
    }

    #[test]
    fn hough_empty_and_vertical() {
        let params = HoughParams {
            vote_threshold: 40,
            ..HoughParams::default()
        };
        assert!(hough_lines(&BinaryMask::new(50, 50, 1).unwrap(), &params).is_empty());

        let mut m = BinaryMask::new(120, 120, 1).unwrap();
        fill(&mut m, 50, 20, 51, 100);
        let peaks = hough_lines(&m, &params);
        let p = peaks
            .iter()
            .find(|p| p.theta_deg <= 1.0 && (p.rho - 50.0).abs() <= 1.0)
            .expect("vertical peak");
        assert!(p.votes >= 78, "votes {}", p.votes);
    }

    #[test]
    fn hough_diagonal() {
        let params = HoughParams {
            vote_threshold: 40,
            ..HoughParams::default()
        };
        let mut m = BinaryMask::new(120, 120, 1).unwrap();
        for i in 10..100 {
            m.set(i, i, true);
        }
        let best = hough_lines(&m, &params)[0];
        // A stroke along the 45° diagonal has its normal at 135°.
        assert!((best.theta_deg - 135.0).abs() <= 1.0, "{best:?}");
    }

    #[test]
    fn extract_single_stroke() {
        let params = HoughParams {
            vote_threshold: 40,
            min_segment_len_px: 30.0,
            ..HoughParams::default()
        };
        let mut m = BinaryMask::new(200, 200, 1).unwrap();
        fill(&mut m, 80, 30, 81, 170);
        let peaks = hough_lines(&m, &params);
        let segs = extract_segments(&m, &peaks[..1], &params);
        assert_eq!(segs.len(), 1);
        let truth = seg(80.0, 30.0, 80.0, 169.0);
        let s = segs[0];
        assert!(s.p0.distance(&truth.p0).min(s.p0.distance(&truth.p1)) <= 3.0, "{s:?}");
        assert!(s.p1.distance(&truth.p0).min(s.p1.distance(&truth.p1)) <= 3.0, "{s:?}");
    }

    #[test]
    fn extract_splits_at_gap() {
        let params = HoughParams {
            vote_threshold: 40,
            min_segment_len_px: 30.0,
            segment_gap_px: 20.0,
            ..HoughParams::default()
        };
        let mut m = BinaryMask::new(200, 260, 1).unwrap();
        fill(&mut m, 80, 20, 81, 110);
        fill(&mut m, 80, 140, 81, 240);
        let peaks = hough_lines(&m, &params);
        assert_eq!(extract_segments(&m, &peaks[..1], &params).len(), 2);
    }

    #[test]
    fn extract_drops_short_strokes() {
        let params = HoughParams {
            vote_threshold: 20,
            min_segment_len_px: 60.0,
            ..HoughParams::default()
        };
        let mut m = BinaryMask::new(100, 100, 1).unwrap();
        fill(&mut m, 40, 10, 41, 50);
        let peaks = hough_lines(&m, &params);
        assert!(!peaks.is_empty());
        assert!(extract_segments(&m, &peaks, &params).is_empty());
    }

    #[test]
    fn extract_thick_stroke_recovers_centre_line() {
        let params = HoughParams {
            vote_threshold: 100,
            ..HoughParams::default()
        };
        let truth = seg(150.0, 60.0, 150.0, 440.0);
        let mut m = BinaryMask::new(300, 500, 1).unwrap();
        for y in 0..500 {
            for x in 0..300 {
                if truth.distance_to_point(&Point::new(x as f64, y as f64)) <= 20.0 {
                    m.set(x, y, true);
                }
            }
        }
        let peaks = hough_lines(&m, &params);
        let segs = extract_segments(&m, &peaks, &params);
        let lines = dedup_lines(&segs, &params, 300.0, 500.0);
        assert_eq!(lines.len(), 1);
        assert!(segment_pair_distance(&lines[0], &truth) <= 2.0, "{:?}", lines[0]);
    }

    #[test]
    fn classify_by_angle() {
        assert_eq!(
            classify_segment(&seg(0.0, 0.0, 0.0, 10.0), 45.0),
            Some(LineClass::Vertical)
        );
        assert_eq!(
            classify_segment(&seg(0.0, 0.0, 10.0, 1.0), 45.0),
            Some(LineClass::Horizontal)
        );
        assert_eq!(classify_segment(&seg(0.0, 0.0, 10.0, 10.0), 30.0), None);
    }

    #[test]
    fn dedup_cases() {
        let p = HoughParams::default();
        let a = seg(100.0, 0.0, 100.0, 500.0);
        assert_eq!(dedup_lines(&[a], &p, 1000.0, 1000.0), vec![a]);

        let b = seg(150.0, 0.0, 150.0, 400.0);
        assert_eq!(dedup_lines(&[b, a], &p, 1000.0, 1000.0), vec![a]);

        let c = seg(400.0, 0.0, 400.0, 400.0);
        assert_eq!(dedup_lines(&[c, a], &p, 1000.0, 1000.0), vec![a, c]);

        let h = seg(0.0, 300.0, 900.0, 300.0);
        assert_eq!(dedup_lines(&[a, h], &p, 1000.0, 1000.0), vec![h, a]);
    }

    #[test]
    fn dedup_chains_transitively() {
        let p = HoughParams::default();
        let lines = [
            seg(100.0, 0.0, 100.0, 300.0),
            seg(250.0, 0.0, 250.0, 500.0),
            seg(400.0, 0.0, 400.0, 300.0),
        ];
        let out = dedup_lines(&lines, &p, 1000.0, 1000.0);
        assert_eq!(out, vec![lines[1]]);
    }

    #[test]
    fn mask_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = mask_from(&["#..#", ".##.", "...."]);
        let m = BinaryMask::from_bits(4, 3, m.bits().to_vec(), 4).unwrap();
        for name in ["m.pgm", "m.png"] {
            let path = dir.path().join(name);
            m.save(&path).unwrap();
            assert_eq!(BinaryMask::load(&path, 4).unwrap(), m);
        }
    }
}
