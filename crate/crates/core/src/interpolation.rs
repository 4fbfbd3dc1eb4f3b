//! Iterative tracklet smoothing.
//!
//! Each pass measures the per-frame aspect-ratio change, flags frames whose
//! change exceeds `alpha` times the mean, and rebuilds every maximal run of
//! flagged frames by linear interpolation between the nearest unflagged
//! present frames on either side. Passes repeat until the largest change
//! drops below `beta` times the mean or the iteration budget runs out.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tracklet::{ratio_deltas, GapPolicy, RatioDeltaSeries, Tracklet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherParams {
    pub alpha: f64,
    pub beta: f64,
    pub max_iterations: usize,
}

impl Default for SmootherParams {
    fn default() -> Self {
        SmootherParams {
            alpha: 3.0,
            beta: 3.5,
            max_iterations: 10,
        }
    }
}

impl SmootherParams {
    pub fn new(alpha: f64, beta: f64, max_iterations: usize) -> Result<Self> {
        let p = SmootherParams {
            alpha,
            beta,
            max_iterations,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.beta < self.alpha {
            return Err(Error::domain(format!(
                "beta ({}) must not be smaller than alpha ({})",
                self.beta, self.alpha
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Diagnostics for one pass of the loop, measured before the pass modifies the track.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub mean_threshold: f64,
    pub max_delta: f64,
    /// 0-based frame indices flagged in this pass.
    pub flagged: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmootherOutcome {
    pub track: Tracklet,
    pub iterations_used: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    /// Mean and max ratio change of the returned track.
    pub final_threshold: f64,
    pub final_max_delta: f64,
}

impl SmootherOutcome {
    pub fn flagged_history(&self) -> impl Iterator<Item = &[usize]> {
        self.history.iter().map(|r| r.flagged.as_slice())
    }

    /// Plain-text log: one line per pass followed by the final state.
    pub fn report(&self) -> String {
        let mut out = format!("# sequence {} (0-based frame indices)\n", self.track.sequence_id);
        for (i, rec) in self.history.iter().enumerate() {
            let flagged: Vec<String> = rec.flagged.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "iter {}\tt={}\tmax={}\tflagged=[{}]\n",
                i + 1,
                rec.mean_threshold,
                rec.max_delta,
                flagged.join(",")
            ));
        }
        out.push_str(&format!(
            "final\tt={}\tmax={}\titerations={}\tconverged={}\n",
            self.final_threshold, self.final_max_delta, self.iterations_used, self.converged
        ));
        out
    }
}

/// Frames whose ratio change strictly exceeds `alpha * t`. Frame 0 never has
/// a delta and so is never flagged.
pub fn flag_frames(series: &RatioDeltaSeries, alpha: f64) -> BTreeSet<usize> {
    let limit = alpha * series.mean_threshold;
    series
        .deltas
        .iter()
        .enumerate()
        .filter_map(|(i, d)| matches!(d, Some(d) if *d > limit).then_some(i))
        .collect()
}

/// Replaces every frame strictly between `start` and `end` by the linear blend
/// of the two anchor boxes.
pub fn interpolate_section(track: &Tracklet, start: usize, end: usize) -> Result<Tracklet> {
    let mut out = track.clone();
    interpolate_in_place(&mut out, start, end)?;
    Ok(out)
}

fn interpolate_in_place(track: &mut Tracklet, start: usize, end: usize) -> Result<()> {
    if end <= start {
        return Err(Error::domain(format!("anchor frames out of order: {start} >= {end}")));
    }
    if end >= track.len() {
        return Err(Error::domain(format!("anchor frame {end} beyond track of length {}", track.len())));
    }
    let (Some(a), Some(b)) = (track.boxes[start], track.boxes[end]) else {
        return Err(Error::domain(format!("anchor frames {start} and {end} must both have boxes")));
    };
    let span = (end - start) as f64;
    for i in start + 1..end {
        track.boxes[i] = Some(a.lerp(&b, (i - start) as f64 / span));
    }
    Ok(())
}

/// A frame range to rebuild in one pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Repair {
    /// Blend between two anchors; interior frames are rewritten.
    Between(usize, usize),
    /// Copy the anchor box over `from..=to`.
    Hold { anchor: usize, from: usize, to: usize },
}

fn plan_repairs(track: &Tracklet, flagged: &BTreeSet<usize>) -> Vec<Repair> {
    let is_anchor = |i: usize| track.boxes[i].is_some() && !flagged.contains(&i);
    let mut repairs = BTreeSet::new();
    let mut iter = flagged.iter().copied().peekable();
    while let Some(run_start) = iter.next() {
        let mut run_end = run_start;
        while iter.peek() == Some(&(run_end + 1)) {
            run_end = iter.next().unwrap_or(run_end);
        }
        let left = (0..run_start).rev().find(|&i| is_anchor(i));
        let right = (run_end + 1..track.len()).find(|&i| is_anchor(i));
        let repair = match (left, right) {
            (Some(a), Some(b)) => Repair::Between(a, b),
            (Some(a), None) => Repair::Hold {
                anchor: a,
                from: a + 1,
                to: run_end,
            },
            (None, Some(b)) => Repair::Hold {
                anchor: b,
                from: run_start,
                to: b - 1,
            },
            (None, None) => continue,
        };
        repairs.insert(repair);
    }
    repairs.into_iter().collect()
}

fn is_converged(series: &RatioDeltaSeries, beta: f64) -> bool {
    match series.max_delta() {
        None => true,
        Some(_) if series.mean_threshold == 0.0 => true,
        Some(max) => max < beta * series.mean_threshold,
    }
}

pub fn smooth_tracklet(track: &Tracklet, params: &SmootherParams) -> Result<SmootherOutcome> {
    params.validate()?;
    let mut current = track.clone();
    let mut history = Vec::new();
    let mut iterations_used = 0;
    let finish = |track: Tracklet, series: &RatioDeltaSeries, iterations_used, converged, history| SmootherOutcome {
        track,
        iterations_used,
        converged,
        history,
        final_threshold: series.mean_threshold,
        final_max_delta: series.max_delta().unwrap_or(0.0),
    };
    loop {
        let series = ratio_deltas(&current, GapPolicy::Propagate)?;
        if is_converged(&series, params.beta) {
            return Ok(finish(current, &series, iterations_used, true, history));
        }
        if iterations_used == params.max_iterations {
            return Ok(finish(current, &series, iterations_used, false, history));
        }
        let flagged = flag_frames(&series, params.alpha);
        let record = IterationRecord {
            mean_threshold: series.mean_threshold,
            max_delta: series.max_delta().unwrap_or(0.0),
            flagged: flagged.iter().copied().collect(),
        };
        // Nothing to repair, or no interior anchor at all: stop without inventing motion.
        let every_frame_flagged = (1..current.len()).all(|i| flagged.contains(&i));
        if flagged.is_empty() || every_frame_flagged {
            history.push(record);
            return Ok(finish(current, &series, iterations_used, false, history));
        }
        let repairs = plan_repairs(&current, &flagged);
        let before = current.boxes.clone();
        for repair in repairs {
            match repair {
                Repair::Between(a, b) => interpolate_in_place(&mut current, a, b)?,
                Repair::Hold { anchor, from, to } => {
                    let held = current.boxes[anchor];
                    current.boxes[from..=to].fill(held);
                }
            }
        }
        history.push(record);
        iterations_used += 1;
        if current.boxes == before {
            let series = ratio_deltas(&current, GapPolicy::Propagate)?;
            let converged = is_converged(&series, params.beta);
            return Ok(finish(current, &series, iterations_used, converged, history));
        }
    }
}
