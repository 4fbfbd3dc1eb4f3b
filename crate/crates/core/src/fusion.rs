//! Combining a forward tracking pass with a time-reversed backward pass.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::tracklet::{stability_score, Tracklet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FusionMode {
    /// Keep whichever whole pass is smoother.
    #[default]
    SequenceSelect,
    /// Keep the forward box where both passes agree, otherwise the smoother pass's box.
    PerFrameAgreement,
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequence-select" | "sequence_select" => Ok(FusionMode::SequenceSelect),
            "per-frame-agreement" | "per_frame_agreement" => Ok(FusionMode::PerFrameAgreement),
            other => Err(Error::domain(format!("unknown fusion policy {other:?}"))),
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::SequenceSelect => "sequence-select",
            FusionMode::PerFrameAgreement => "per-frame-agreement",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionPolicy {
    pub mode: FusionMode,
    /// Minimum IoU for two passes to count as agreeing (per-frame mode only).
    pub agreement_iou: f64,
}

impl Default for FusionPolicy {
    fn default() -> Self {
        FusionPolicy {
            mode: FusionMode::SequenceSelect,
            agreement_iou: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PassLabel {
    Forward,
    Backward,
    /// Neither pass had a box for the frame.
    Neither,
}

impl fmt::Display for PassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PassLabel::Forward => "forward",
            PassLabel::Backward => "backward",
            PassLabel::Neither => "none",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Choice {
    Sequence(PassLabel),
    PerFrame(Vec<PassLabel>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionScores {
    pub forward: f64,
    pub backward: f64,
    pub fused: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionOutcome {
    pub track: Tracklet,
    pub chosen: Choice,
    pub scores: FusionScores,
}

/// Turns a backward pass stored in processing order into video order.
pub fn reverse_align(backward_track: &Tracklet) -> Tracklet {
    let mut out = backward_track.clone();
    out.boxes.reverse();
    out
}

/// Initial box for the backward pass: the last frame the forward pass has a box for.
pub fn backward_init_box(forward_track: &Tracklet) -> Result<BBox> {
    forward_track
        .boxes
        .iter()
        .rev()
        .flatten()
        .next()
        .copied()
        .ok_or_else(|| {
            Error::domain(format!(
                "sequence {}: forward pass produced no box to start the backward pass from",
                forward_track.sequence_id
            ))
        })
}

pub fn fuse(forward: &Tracklet, backward_video_order: &Tracklet, policy: &FusionPolicy) -> Result<FusionOutcome> {
    if forward.len() != backward_video_order.len() {
        return Err(Error::domain(format!(
            "sequence {}: forward has {} frames, backward has {}",
            forward.sequence_id,
            forward.len(),
            backward_video_order.len()
        )));
    }
    let Some(&init) = forward.first() else {
        return Err(Error::domain(format!(
            "sequence {}: forward pass has no box at the first frame",
            forward.sequence_id
        )));
    };
    let forward_score = stability_score(forward)?;
    let backward_score = stability_score(backward_video_order)?;
    // ties go to the forward pass
    let winner = if backward_score < forward_score {
        PassLabel::Backward
    } else {
        PassLabel::Forward
    };

    let (mut boxes, chosen) = match policy.mode {
        FusionMode::SequenceSelect => {
            let src = if winner == PassLabel::Backward { backward_video_order } else { forward };
            (src.boxes.clone(), Choice::Sequence(winner))
        }
        FusionMode::PerFrameAgreement => {
            let mut labels = Vec::with_capacity(forward.len());
            let mut boxes = Vec::with_capacity(forward.len());
            for (f, b) in forward.boxes.iter().zip(&backward_video_order.boxes) {
                let label = match (f, b) {
                    (Some(f), Some(b)) => {
                        if iou(f, b)? >= policy.agreement_iou {
                            PassLabel::Forward
                        } else {
                            winner
                        }
                    }
                    (Some(_), None) => PassLabel::Forward,
                    (None, Some(_)) => PassLabel::Backward,
                    (None, None) => PassLabel::Neither,
                };
                boxes.push(match label {
                    PassLabel::Forward => *f,
                    PassLabel::Backward => *b,
                    PassLabel::Neither => None,
                });
                labels.push(label);
            }
            labels[0] = PassLabel::Forward;
            (boxes, Choice::PerFrame(labels))
        }
    };
    boxes[0] = Some(init);
    let track = Tracklet::new(forward.sequence_id.clone(), boxes);
    let fused_score = stability_score(&track)?;
    Ok(FusionOutcome {
        track,
        chosen,
        scores: FusionScores {
            forward: forward_score,
            backward: backward_score,
            fused: fused_score,
        },
    })
}
