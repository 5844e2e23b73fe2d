//! Flat `key = value` configuration covering every tunable threshold.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grouping::GroupingParams;
use crate::layout::RegionOrder;
use crate::mask::HoughParams;
use crate::rescore::MeanScope;

/// Environment variable naming a config file to use when none is given.
pub const CONFIG_ENV: &str = "READORDER_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    /// Components smaller than this (in mask pixels) are noise.
    pub min_area: usize,
    pub theta_step: f64,
    pub rho_step: f64,
    /// `None` = 30% of the page's shorter side.
    pub vote_threshold: Option<u32>,
    pub merge_slope_deg: f64,
    pub merge_intercept_px: f64,
    pub segment_gap_px: f64,
    pub min_segment_len_px: f64,
    pub region_order: RegionOrder,
    pub tol_frac: f64,
    pub small_frac: f64,
    pub max_small_share: f64,
    pub mean_scope: MeanScope,
    pub nms_threshold: f64,
    pub dist_threshold: f64,
    pub iou_thresholds: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        let hough = HoughParams::default();
        let grouping = GroupingParams::default();
        Self {
            min_area: 50,
            theta_step: hough.theta_step,
            rho_step: hough.rho_step,
            vote_threshold: None,
            merge_slope_deg: hough.merge_slope_deg,
            merge_intercept_px: hough.merge_intercept_px,
            segment_gap_px: hough.segment_gap_px,
            min_segment_len_px: hough.min_segment_len_px,
            region_order: RegionOrder::default(),
            tol_frac: grouping.tol_frac,
            small_frac: grouping.small_frac,
            max_small_share: grouping.max_small_share,
            mean_scope: MeanScope::default(),
            nms_threshold: 0.5,
            dist_threshold: 50.0,
            iou_thresholds: vec![0.5, 0.6, 0.7],
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "min_area" => self.min_area = parse_value(key, value)?,
            "theta_step" => self.theta_step = parse_value(key, value)?,
            "rho_step" => self.rho_step = parse_value(key, value)?,
            "vote_threshold" => {
                self.vote_threshold = match value {
                    "auto" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "merge_slope_deg" => self.merge_slope_deg = parse_value(key, value)?,
            "merge_intercept_px" => self.merge_intercept_px = parse_value(key, value)?,
            "segment_gap_px" => self.segment_gap_px = parse_value(key, value)?,
            "min_segment_len_px" => self.min_segment_len_px = parse_value(key, value)?,
            "region_order" => self.region_order = parse_value(key, value)?,
            "tol_frac" => self.tol_frac = parse_value(key, value)?,
            "small_frac" => self.small_frac = parse_value(key, value)?,
            "max_small_share" => self.max_small_share = parse_value(key, value)?,
            "mean_scope" => self.mean_scope = parse_value(key, value)?,
            "nms_threshold" => self.nms_threshold = parse_value(key, value)?,
            "dist_threshold" => self.dist_threshold = parse_value(key, value)?,
            "iou_thresholds" => {
                self.iou_thresholds = value
                    .split(',')
                    .map(|v| parse_value(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Loads `path`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hough_params(1000, 1000).validate()?;
        self.grouping_params().validate()?;
        if !(0.0..=1.0).contains(&self.nms_threshold) {
            return Err(Error::Config(format!(
                "nms_threshold {} outside [0, 1]",
                self.nms_threshold
            )));
        }
        if !(self.dist_threshold > 0.0) {
            return Err(Error::Config("dist_threshold must be positive".into()));
        }
        if let Some(t) = self.iou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("IoU threshold {t} outside (0, 1]")));
        }
        Ok(())
    }

    pub fn hough_params(&self, page_width: usize, page_height: usize) -> HoughParams {
        HoughParams {
            theta_step: self.theta_step,
            rho_step: self.rho_step,
            vote_threshold: self
                .vote_threshold
                .unwrap_or_else(|| HoughParams::default_vote_threshold(page_width, page_height)),
            merge_slope_deg: self.merge_slope_deg,
            merge_intercept_px: self.merge_intercept_px,
            segment_gap_px: self.segment_gap_px,
            min_segment_len_px: self.min_segment_len_px,
        }
    }

    pub fn grouping_params(&self) -> GroupingParams {
        GroupingParams {
            tol_frac: self.tol_frac,
            small_frac: self.small_frac,
            max_small_share: self.max_small_share,
        }
    }

    /// The config in its file format; parsing the output yields `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let order = match self.region_order {
            RegionOrder::TopDownRightLeft => "top_down_right_left",
            RegionOrder::RightLeftTopDown => "right_left_top_down",
        };
        let scope = match self.mean_scope {
            MeanScope::Whole => "whole",
            MeanScope::Mismatched => "mismatched",
        };
        let votes = self
            .vote_threshold
            .map_or_else(|| "auto".to_string(), |v| v.to_string());
        let ious: Vec<String> = self.iou_thresholds.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "min_area = {}", self.min_area);
        let _ = writeln!(s, "theta_step = {}", self.theta_step);
        let _ = writeln!(s, "rho_step = {}", self.rho_step);
        let _ = writeln!(s, "vote_threshold = {votes}");
        let _ = writeln!(s, "merge_slope_deg = {}", self.merge_slope_deg);
        let _ = writeln!(s, "merge_intercept_px = {}", self.merge_intercept_px);
        let _ = writeln!(s, "segment_gap_px = {}", self.segment_gap_px);
        let _ = writeln!(s, "min_segment_len_px = {}", self.min_segment_len_px);
        let _ = writeln!(s, "region_order = {order}");
        let _ = writeln!(s, "tol_frac = {}", self.tol_frac);
        let _ = writeln!(s, "small_frac = {}", self.small_frac);
        let _ = writeln!(s, "max_small_share = {}", self.max_small_share);
        let _ = writeln!(s, "mean_scope = {scope}");
        let _ = writeln!(s, "nms_threshold = {}", self.nms_threshold);
        let _ = writeln!(s, "dist_threshold = {}", self.dist_threshold);
        let _ = writeln!(s, "iou_thresholds = {}", ious.join(", "));
        s
    }
}
