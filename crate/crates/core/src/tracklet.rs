//! Per-sequence box tracks and the aspect-ratio change statistics that drive
//! the smoother.

use crate::error::{Error, Result};
use crate::geometry::{aspect_ratio, BBox};

/// One box slot per frame; `None` marks a frame with no prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct Tracklet {
    pub sequence_id: String,
    pub boxes: Vec<Option<BBox>>,
}

impl Tracklet {
    pub fn new(sequence_id: impl Into<String>, boxes: Vec<Option<BBox>>) -> Self {
        Tracklet {
            sequence_id: sequence_id.into(),
            boxes,
        }
    }

    /// Dense tracklet with every frame present.
    pub fn from_boxes(sequence_id: impl Into<String>, boxes: impl IntoIterator<Item = BBox>) -> Self {
        Self::new(sequence_id, boxes.into_iter().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn get(&self, frame: usize) -> Option<&BBox> {
        self.boxes.get(frame).and_then(Option::as_ref)
    }

    pub fn first(&self) -> Option<&BBox> {
        self.get(0)
    }

    pub fn is_dense(&self) -> bool {
        self.boxes.iter().all(Option::is_some)
    }

    pub fn present_count(&self) -> usize {
        self.boxes.iter().filter(|b| b.is_some()).count()
    }
}

/// How [`ratio_deltas`] treats frames without a box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GapPolicy {
    /// Compare each present frame with the nearest earlier present frame.
    #[default]
    Propagate,
    /// Any absent frame is an error.
    Strict,
}

/// Aspect-ratio change (percent) for every frame, plus their mean.
///
/// `deltas[i]` belongs to frame `i` and compares it with the previous present
/// frame. Frame 0, absent frames, and frames with no earlier present frame
/// carry `None` and do not enter the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioDeltaSeries {
    pub deltas: Vec<Option<f64>>,
    pub mean_threshold: f64,
}

impl RatioDeltaSeries {
    /// Measured deltas in frame order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.deltas.iter().flatten().copied()
    }

    pub fn max_delta(&self) -> Option<f64> {
        self.values().reduce(f64::max)
    }

    pub fn delta(&self, frame: usize) -> Option<f64> {
        self.deltas.get(frame).copied().flatten()
    }
}

pub fn ratio_deltas(track: &Tracklet, policy: GapPolicy) -> Result<RatioDeltaSeries> {
    let n = track.len();
    let mut deltas = vec![None; n];
    if n < 2 {
        return Ok(RatioDeltaSeries {
            deltas,
            mean_threshold: 0.0,
        });
    }
    let mut prev_ratio: Option<f64> = None;
    let (mut sum, mut count) = (0.0f64, 0usize);
    for (frame, slot) in track.boxes.iter().enumerate() {
        let Some(b) = slot else {
            if policy == GapPolicy::Strict {
                return Err(Error::domain(format!(
                    "sequence {}: frame {frame} has no box",
                    track.sequence_id
                )));
            }
            continue;
        };
        if !(b.w > 0.0) {
            return Err(Error::domain(format!(
                "sequence {}: frame {frame} has non-positive width",
                track.sequence_id
            )));
        }
        let ratio = aspect_ratio(b)?;
        if let Some(prev) = prev_ratio {
            let d = ((ratio - prev) / prev).abs() * 100.0;
            deltas[frame] = Some(d);
            sum += d;
            count += 1;
        }
        prev_ratio = Some(ratio);
    }
    let mean_threshold = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(RatioDeltaSeries { deltas, mean_threshold })
}

/// Mean aspect-ratio change in percent; lower is smoother. Zero for tracks
/// shorter than two frames.
pub fn stability_score(track: &Tracklet) -> Result<f64> {
    Ok(ratio_deltas(track, GapPolicy::Propagate)?.mean_threshold)
}
