//! Deterministic synthetic trajectories and degraded tracker outputs.
//!
//! All randomness comes from SplitMix64 (increment `0x9E3779B97F4A7C15`,
//! multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`, shifts
//! 30/27/31). Uniform reals take the top 53 bits of a draw times 2^-53.
//! Gaussians use Box-Muller on two uniforms, `u1` mapped into (0, 1].
//! Independent streams are derived with [`derive_seed`], so changing one
//! noise component never shifts the draws of another.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::io::{result_path, write_bbox_file, write_manifest, DatasetManifest, Modality, ResultOrder, SequenceManifest};
use crate::tracklet::Tracklet;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..bound`; `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }
}

/// Seed for an independent sub-stream of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::new(seed ^ stream.wrapping_mul(0xD605_BBB5_8C8A_BBFD)).next_u64()
}

const STREAM_MOTION: u64 = 1;
const STREAM_JITTER: u64 = 2;
const STREAM_SPIKES: u64 = 3;
const STREAM_DROPOUT: u64 = 4;
const STREAM_FORWARD: u64 = 5;
const STREAM_BACKWARD: u64 = 6;
const STREAM_SEQUENCE: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageBounds {
    pub width: f64,
    pub height: f64,
}

impl ImageBounds {
    /// Shrinks the box into the image and keeps each side at least one pixel.
    pub fn clamp(&self, b: BBox) -> BBox {
        let w = b.w.clamp(1.0, self.width.max(1.0));
        let h = b.h.clamp(1.0, self.height.max(1.0));
        BBox::new(b.x.clamp(0.0, self.width - w), b.y.clamp(0.0, self.height - h), w, h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Motion {
    Linear,
    Sinusoidal,
    PiecewiseLinear,
}

impl Motion {
    pub const ALL: [Motion; 3] = [Motion::Linear, Motion::Sinusoidal, Motion::PiecewiseLinear];
}

impl FromStr for Motion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Motion::Linear),
            "sinusoidal" => Ok(Motion::Sinusoidal),
            "piecewise-linear" | "piecewise_linear" => Ok(Motion::PiecewiseLinear),
            other => Err(Error::domain(format!("unknown motion {other:?}"))),
        }
    }
}

impl fmt::Display for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Motion::Linear => "linear",
            Motion::Sinusoidal => "sinusoidal",
            Motion::PiecewiseLinear => "piecewise-linear",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySpec {
    pub n_frames: usize,
    pub motion: Motion,
    pub base_box: BBox,
    /// Displacement scale in pixels.
    pub amplitude: f64,
    pub image_bounds: ImageBounds,
}

pub fn generate_ground_truth(spec: &TrajectorySpec, seed: u64) -> Result<Tracklet> {
    let n = spec.n_frames;
    if n < 2 {
        return Err(Error::domain(format!("trajectory needs at least 2 frames, got {n}")));
    }
    spec.base_box.validate()?;
    if !(spec.amplitude >= 0.0 && spec.amplitude.is_finite()) {
        return Err(Error::domain(format!("amplitude must be non-negative, got {}", spec.amplitude)));
    }
    let bounds = spec.image_bounds;
    let amp = spec.amplitude;
    let base = bounds.clamp(spec.base_box);
    let mut rng = SplitMix64::new(derive_seed(seed, STREAM_MOTION));
    let progress = |i: usize| i as f64 / (n - 1) as f64;

    let boxes: Vec<BBox> = match spec.motion {
        Motion::Linear => {
            let angle = TAU * rng.next_f64();
            // relative size change, up to 30% at amplitude >= 100 px
            let growth = (amp / 100.0).min(1.0) * 0.3;
            let grow_w = rng.uniform(-growth, growth);
            let grow_h = rng.uniform(-growth, growth);
            let end = bounds.clamp(BBox::new(
                base.x + amp * angle.cos(),
                base.y + amp * angle.sin(),
                base.w * (1.0 + grow_w),
                base.h * (1.0 + grow_h),
            ));
            // the image is convex, so blends of two in-bounds boxes stay in bounds
            (0..n).map(|i| base.lerp(&end, progress(i))).collect()
        }
        Motion::Sinusoidal => {
            let cycles = rng.uniform(1.0, 3.0);
            let phase_x = TAU * rng.next_f64();
            let phase_y = TAU * rng.next_f64();
            let phase_s = TAU * rng.next_f64();
            (0..n)
                .map(|i| {
                    let a = TAU * cycles * progress(i);
                    bounds.clamp(BBox::new(
                        base.x + amp * ((a + phase_x).sin() - phase_x.sin()),
                        base.y + 0.5 * amp * ((a + phase_y).sin() - phase_y.sin()),
                        base.w + 0.1 * amp * ((a + phase_s).sin() - phase_s.sin()),
                        base.h + 0.1 * amp * ((a + phase_s).cos() - phase_s.cos()),
                    ))
                })
                .collect()
        }
        Motion::PiecewiseLinear => {
            let segments = 2 + rng.below(3) as usize;
            let mut waypoints = vec![base];
            for _ in 0..segments {
                waypoints.push(bounds.clamp(BBox::new(
                    base.x + amp * rng.uniform(-1.0, 1.0),
                    base.y + amp * rng.uniform(-1.0, 1.0),
                    base.w + 0.2 * amp * rng.uniform(-1.0, 1.0),
                    base.h + 0.2 * amp * rng.uniform(-1.0, 1.0),
                )));
            }
            (0..n)
                .map(|i| {
                    let s = progress(i) * segments as f64;
                    let k = (s.floor() as usize).min(segments - 1);
                    waypoints[k].lerp(&waypoints[k + 1], s - k as f64)
                })
                .collect()
        }
    };
    Ok(Tracklet::from_boxes(format!("synth-{seed}"), boxes))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation in pixels of the Gaussian added to x, y, w and h.
    pub jitter_sigma: f64,
    pub spike_frames: usize,
    /// Width multiplier at spiked frames.
    pub spike_magnitude: f64,
    pub dropout_prob: f64,
    pub seed: u64,
    /// Jittered boxes are clamped into these bounds when set.
    pub bounds: Option<ImageBounds>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            jitter_sigma: 0.0,
            spike_frames: 0,
            spike_magnitude: 2.0,
            dropout_prob: 0.0,
            seed: 0,
            bounds: None,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self, n_frames: usize) -> Result<()> {
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::domain(format!("jitter sigma must be non-negative, got {}", self.jitter_sigma)));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(Error::domain(format!("dropout probability must be in [0, 1], got {}", self.dropout_prob)));
        }
        if self.spike_frames > 0 {
            if !(self.spike_magnitude > 0.0 && self.spike_magnitude.is_finite()) {
                return Err(Error::domain(format!("spike magnitude must be positive, got {}", self.spike_magnitude)));
            }
            let eligible = n_frames.saturating_sub(4);
            if eligible < 2 * self.spike_frames {
                return Err(Error::domain(format!(
                    "{} non-adjacent spikes do not fit in {n_frames} frames",
                    self.spike_frames
                )));
            }
        }
        Ok(())
    }
}

/// 0-based frames that receive a width spike: spread by a fixed stride over
/// frames `2..=n-3` with a seeded offset, never adjacent to each other.
pub fn spike_positions(n_frames: usize, noise: &NoiseSpec) -> Result<Vec<usize>> {
    noise.validate(n_frames)?;
    let k = noise.spike_frames;
    if k == 0 {
        return Ok(Vec::new());
    }
    let eligible = n_frames - 4;
    let stride = eligible / k;
    let mut rng = SplitMix64::new(derive_seed(noise.seed, STREAM_SPIKES));
    let offset = rng.below(stride as u64) as usize;
    Ok((0..k).map(|j| 2 + offset + j * stride).collect())
}

/// Jitter, then width spikes, then dropouts. Frame 0 is never touched.
pub fn corrupt(gt: &Tracklet, noise: &NoiseSpec) -> Result<Tracklet> {
    let n = gt.len();
    noise.validate(n)?;
    let mut out = gt.clone();
    if noise.jitter_sigma > 0.0 {
        let mut rng = SplitMix64::new(derive_seed(noise.seed, STREAM_JITTER));
        let s = noise.jitter_sigma;
        for slot in out.boxes.iter_mut().skip(1) {
            let Some(b) = slot else { continue };
            let jittered = BBox::new(
                b.x + s * rng.gaussian(),
                b.y + s * rng.gaussian(),
                b.w + s * rng.gaussian(),
                b.h + s * rng.gaussian(),
            );
            *b = match noise.bounds {
                Some(bounds) => bounds.clamp(jittered),
                None => BBox {
                    w: jittered.w.max(1.0),
                    h: jittered.h.max(1.0),
                    ..jittered
                },
            };
        }
    }
    for frame in spike_positions(n, noise)? {
        if let Some(b) = out.boxes[frame].as_mut() {
            b.w *= noise.spike_magnitude;
        }
    }
    if noise.dropout_prob > 0.0 {
        let mut rng = SplitMix64::new(derive_seed(noise.seed, STREAM_DROPOUT));
        for slot in out.boxes.iter_mut().skip(1) {
            if rng.next_f64() < noise.dropout_prob {
                *slot = None;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// Offline stand-in for a tracker run: corrupted ground truth, emitted in
/// processing order (reversed for the backward direction).
pub fn mock_tracker(gt: &Tracklet, noise: &NoiseSpec, direction: Direction) -> Result<Tracklet> {
    let stream = match direction {
        Direction::Forward => STREAM_FORWARD,
        Direction::Backward => STREAM_BACKWARD,
    };
    let derived = NoiseSpec {
        seed: derive_seed(noise.seed, stream),
        ..*noise
    };
    let mut out = corrupt(gt, &derived)?;
    if direction == Direction::Backward {
        out.boxes.reverse();
    }
    Ok(out)
}

/// Parameters for a whole on-disk synthetic dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub sequences: usize,
    pub frames: usize,
    /// `None` cycles through every motion model.
    pub motion: Option<Motion>,
    pub seed: u64,
    pub forward_noise: NoiseSpec,
    pub backward_noise: NoiseSpec,
    pub image_bounds: ImageBounds,
    pub modality: Modality,
}

impl DatasetSpec {
    pub fn sequence_id(index: usize) -> String {
        format!("seq{index:03}")
    }
}

/// In-memory synthetic sequence: ground truth plus both mock passes in video order.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSequence {
    pub gt: Tracklet,
    pub forward: Tracklet,
    /// Processing order, as an external tracker would write it.
    pub backward_processing: Tracklet,
}

pub fn generate_sequence(spec: &DatasetSpec, index: usize) -> Result<SyntheticSequence> {
    let seq_seed = derive_seed(spec.seed, STREAM_SEQUENCE.wrapping_add(index as u64 * 16));
    let mut rng = SplitMix64::new(seq_seed);
    let bounds = spec.image_bounds;
    let w = rng.uniform(40.0, 120.0).min(bounds.width);
    let h = rng.uniform(40.0, 120.0).min(bounds.height);
    let x = rng.uniform(0.0, (bounds.width - w).max(0.0));
    let y = rng.uniform(0.0, (bounds.height - h).max(0.0));
    let amplitude = rng.uniform(20.0, 150.0);
    let motion = spec.motion.unwrap_or(Motion::ALL[index % Motion::ALL.len()]);
    let traj = TrajectorySpec {
        n_frames: spec.frames,
        motion,
        base_box: BBox::new(x, y, w, h),
        amplitude,
        image_bounds: bounds,
    };
    let id = DatasetSpec::sequence_id(index);
    let mut gt = generate_ground_truth(&traj, seq_seed)?;
    gt.sequence_id = id.clone();
    let fwd_noise = NoiseSpec {
        seed: derive_seed(seq_seed, spec.forward_noise.seed),
        bounds: Some(bounds),
        ..spec.forward_noise
    };
    let bwd_noise = NoiseSpec {
        seed: derive_seed(seq_seed, spec.backward_noise.seed),
        bounds: Some(bounds),
        ..spec.backward_noise
    };
    let forward = mock_tracker(&gt, &fwd_noise, Direction::Forward)?;
    let backward_processing = mock_tracker(&gt, &bwd_noise, Direction::Backward)?;
    Ok(SyntheticSequence {
        gt,
        forward,
        backward_processing,
    })
}

/// Writes `manifest.toml`, `gt/`, `forward/` and `backward/` (processing order) under `out_dir`.
pub fn write_dataset(spec: &DatasetSpec, out_dir: &Path) -> Result<DatasetManifest> {
    if spec.sequences == 0 {
        return Err(Error::domain("dataset needs at least one sequence"));
    }
    let dirs = ["gt", "forward", "backward"].map(|d| out_dir.join(d));
    for d in &dirs {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut sequences = Vec::with_capacity(spec.sequences);
    for index in 0..spec.sequences {
        let seq = generate_sequence(spec, index)?;
        let id = seq.gt.sequence_id.clone();
        let gt_path = result_path(&dirs[0], &id);
        write_bbox_file(&seq.gt, &gt_path)?;
        write_bbox_file(&seq.forward, &result_path(&dirs[1], &id))?;
        write_bbox_file(&seq.backward_processing, &result_path(&dirs[2], &id))?;
        let init_box = seq.gt.first().copied().ok_or_else(|| Error::domain("generated track is empty"))?;
        sequences.push(SequenceManifest {
            sequence_id: id,
            frame_count: seq.gt.len(),
            modality: spec.modality,
            groundtruth_path: gt_path,
            init_box,
            frames_dir: None,
            result_order: ResultOrder::Processing,
        });
    }
    let manifest = DatasetManifest {
        name: spec.name.clone(),
        sequences,
    };
    write_manifest(&manifest, &out_dir.join("manifest.toml"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracklet::{ratio_deltas, GapPolicy};

    const BOUNDS: ImageBounds = ImageBounds {
        width: 640.0,
        height: 480.0,
    };

    fn spec(motion: Motion, amplitude: f64, n: usize) -> TrajectorySpec {
        TrajectorySpec {
            n_frames: n,
            motion,
            base_box: BBox::new(200.0, 150.0, 60.0, 40.0),
            amplitude,
            image_bounds: BOUNDS,
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0, as published with the algorithm
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn uniform_range() {
        let mut r = SplitMix64::new(42);
        for _ in 0..1000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            assert!(r.gaussian().is_finite());
        }
    }

    #[test]
    fn zero_amplitude_linear_is_constant() {
        let t = generate_ground_truth(&spec(Motion::Linear, 0.0, 20), 3).unwrap();
        assert!(t.boxes.iter().all(|b| *b == t.boxes[0]));
    }

    #[test]
    fn generation_is_deterministic() {
        for m in Motion::ALL {
            let a = generate_ground_truth(&spec(m, 80.0, 50), 11).unwrap();
            let b = generate_ground_truth(&spec(m, 80.0, 50), 11).unwrap();
            assert_eq!(a, b);
            let c = generate_ground_truth(&spec(m, 80.0, 50), 12).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn linear_is_affine_blend_of_endpoints() {
        let n = 37;
        let t = generate_ground_truth(&spec(Motion::Linear, 120.0, n), 5).unwrap();
        let first = t.boxes[0].unwrap();
        let last = t.boxes[n - 1].unwrap();
        for (i, b) in t.boxes.iter().enumerate() {
            let s = i as f64 / (n - 1) as f64;
            let b = b.unwrap();
            for (got, (a, z)) in b.to_array().iter().zip(first.to_array().iter().zip(last.to_array())) {
                assert!((got - (a + s * (z - a))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn boxes_stay_in_bounds() {
        for m in Motion::ALL {
            for seed in 0..20 {
                let t = generate_ground_truth(&spec(m, 400.0, 60), seed).unwrap();
                for b in t.boxes.iter().flatten() {
                    assert!(b.x >= 0.0 && b.y >= 0.0 && b.w >= 1.0 && b.h >= 1.0);
                    assert!(b.right() <= BOUNDS.width + 1e-9 && b.bottom() <= BOUNDS.height + 1e-9);
                }
            }
        }
    }

    #[test]
    fn degenerate_trajectory_rejected() {
        assert!(generate_ground_truth(&spec(Motion::Linear, 1.0, 1), 0).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let gt = generate_ground_truth(&spec(Motion::Sinusoidal, 50.0, 30), 1).unwrap();
        assert_eq!(corrupt(&gt, &NoiseSpec::default()).unwrap(), gt);
    }

    #[test]
    fn single_spike_changes_two_deltas() {
        let gt = generate_ground_truth(&spec(Motion::Linear, 50.0, 30), 1).unwrap();
        let noise = NoiseSpec {
            spike_frames: 1,
            seed: 9,
            ..NoiseSpec::default()
        };
        let spiked = corrupt(&gt, &noise).unwrap();
        let k = spike_positions(30, &noise).unwrap()[0];
        let before = ratio_deltas(&gt, GapPolicy::Strict).unwrap();
        let after = ratio_deltas(&spiked, GapPolicy::Strict).unwrap();
        for i in 1..30 {
            if i == k || i == k + 1 {
                assert_ne!(before.delta(i), after.delta(i));
            } else {
                assert_eq!(before.delta(i), after.delta(i));
            }
        }
        let prev = gt.boxes[k - 1].unwrap();
        let cur = gt.boxes[k].unwrap();
        let expected = ((2.0 * cur.w / cur.h - prev.w / prev.h) / (prev.w / prev.h)).abs() * 100.0;
        assert!((after.delta(k).unwrap() - expected).abs() < 1e-9);
        assert!(after.delta(k).unwrap() > 50.0);
    }

    #[test]
    fn full_dropout_keeps_first_frame() {
        let gt = generate_ground_truth(&spec(Motion::Linear, 50.0, 12), 1).unwrap();
        let noise = NoiseSpec {
            dropout_prob: 1.0,
            ..NoiseSpec::default()
        };
        let out = corrupt(&gt, &noise).unwrap();
        assert_eq!(out.boxes[0], gt.boxes[0]);
        assert!(out.boxes[1..].iter().all(Option::is_none));
    }

    #[test]
    fn spike_positions_are_spread() {
        for seed in 0..50 {
            for k in 1..6 {
                let noise = NoiseSpec {
                    spike_frames: k,
                    seed,
                    ..NoiseSpec::default()
                };
                let n = 20 + seed as usize;
                let pos = spike_positions(n, &noise).unwrap();
                assert_eq!(pos.len(), k);
                assert!(pos.iter().all(|&p| p >= 2 && p <= n - 3));
                assert!(pos.windows(2).all(|w| w[1] - w[0] >= 2));
            }
        }
        let too_many = NoiseSpec {
            spike_frames: 4,
            ..NoiseSpec::default()
        };
        assert!(spike_positions(10, &too_many).is_err());
    }

    #[test]
    fn invalid_noise_rejected() {
        let gt = generate_ground_truth(&spec(Motion::Linear, 5.0, 12), 1).unwrap();
        for bad in [
            NoiseSpec { dropout_prob: 1.5, ..NoiseSpec::default() },
            NoiseSpec { jitter_sigma: -1.0, ..NoiseSpec::default() },
            NoiseSpec { spike_frames: 1, spike_magnitude: 0.0, ..NoiseSpec::default() },
        ] {
            assert!(corrupt(&gt, &bad).is_err());
        }
    }

    #[test]
    fn jitter_clamps() {
        let gt = generate_ground_truth(&spec(Motion::Linear, 50.0, 40), 1).unwrap();
        let noise = NoiseSpec {
            jitter_sigma: 200.0,
            seed: 4,
            bounds: Some(BOUNDS),
            ..NoiseSpec::default()
        };
        let out = corrupt(&gt, &noise).unwrap();
        assert_eq!(out.boxes[0], gt.boxes[0]);
        for b in out.boxes.iter().flatten() {
            assert!(b.w >= 1.0 && b.h >= 1.0 && b.x >= 0.0 && b.right() <= BOUNDS.width + 1e-9);
        }
    }

    #[test]
    fn mock_tracker_directions() {
        let gt = generate_ground_truth(&spec(Motion::PiecewiseLinear, 50.0, 25), 2).unwrap();
        let clean = NoiseSpec::default();
        assert_eq!(mock_tracker(&gt, &clean, Direction::Forward).unwrap(), gt);
        let back = mock_tracker(&gt, &clean, Direction::Backward).unwrap();
        assert_eq!(crate::fusion::reverse_align(&back), gt);
        let noisy = NoiseSpec {
            jitter_sigma: 2.0,
            ..clean
        };
        let f = mock_tracker(&gt, &noisy, Direction::Forward).unwrap();
        let b = crate::fusion::reverse_align(&mock_tracker(&gt, &noisy, Direction::Backward).unwrap());
        assert_ne!(f, b);
    }
}
