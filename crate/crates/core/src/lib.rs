//! Reading-order restoration for historical document pages.
//!
//! Inputs are character detections (box, label, score) and a binary layout
//! mask marking boundary lines. The pipeline extracts the boundary lines,
//! partitions the page into regions, groups characters into vertical
//! columns and serializes the text right to left, top to bottom. Text-line
//! recognition results can be fused in per column, and the evaluation
//! protocols for lines, text-line boxes and transcripts are included.

pub mod error;
pub mod geometry;
pub mod grouping;
pub mod layout;
pub mod mask;
pub mod pipeline;
pub mod metrics;
pub mod rescore;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{iou_quad, nms, AABox, LineSegment, Point, Quad};
pub use grouping::{CharDetection, Column, Document, TextColumn};
pub use layout::PageLayout;
pub use mask::{BinaryMask, HoughParams};
pub use rescore::ScoredSequence;
pub use pipeline::{process_page, run_page, Config, PageResult};
