//! Post-processing and evaluation for single-object visual tracking.
//!
//! - [`geometry`]: boxes, IoU, masks and mask-to-box extraction
//! - [`tracklet`]: per-sequence box tracks and aspect-ratio change statistics
//! - [`interpolation`]: the iterative outlier-flagging smoother
//! - [`fusion`]: forward/backward pass alignment and merging
//! - [`evaluation`]: success rates, AUC and dataset reports
//! - [`synth`]: deterministic synthetic trajectories and mock trackers
//! - [`io`]: box files and dataset manifests
//! - [`driver`]: external tracker invocation
//! - [`cli`]: the `sotkit` command line

pub mod cli;
pub mod driver;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod interpolation;
pub mod io;
pub mod synth;
pub mod tracklet;

pub use error::{Error, Result};
pub use geometry::{aspect_ratio, iou, mask_to_bbox, BBox, BinaryMask};
pub use tracklet::Tracklet;
