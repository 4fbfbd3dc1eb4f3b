//! On-disk formats: per-frame box files and dataset manifests.
//!
//! A box file has one line per frame. A present box is written as `x,y,w,h`
//! using the shortest decimal that reads back to the same `f64`; an absent
//! frame is an empty line (`nan,nan,nan,nan` is also accepted on input).
//! Lines end in `\n` on output; `\r\n` is accepted on input.
//!
//! A manifest is a TOML document:
//!
//! ```toml
//! name = "demo"
//!
//! [[sequence]]
//! id = "seq000"
//! frame_count = 300
//! modality = "rgb"
//! groundtruth = "gt/seq000.txt"
//! init_box = [10.0, 20.0, 30.0, 40.0]
//! frames_dir = "frames/seq000"   # optional
//! result_order = "video"         # or "processing"; default "video"
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::tracklet::Tracklet;

pub fn parse_bbox_str(text: &str, source_name: &str) -> Result<Vec<Option<BBox>>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_bbox_line(line).map_err(|msg| Error::parse(source_name, Some(i + 1), msg)))
        .collect()
}

fn parse_bbox_line(line: &str) -> std::result::Result<Option<BBox>, String> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 comma-separated values, found {}", fields.len()));
    }
    if fields.iter().all(|f| f.eq_ignore_ascii_case("nan")) {
        return Ok(None);
    }
    let mut v = [0.0f64; 4];
    for (slot, field) in v.iter_mut().zip(&fields) {
        *slot = field
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("invalid number {field:?}"))?;
    }
    if v[2] <= 0.0 || v[3] <= 0.0 {
        return Err(format!("box size must be positive, got w={} h={}", v[2], v[3]));
    }
    Ok(Some(BBox::new(v[0], v[1], v[2], v[3])))
}

/// Canonical text for a sequence of boxes.
pub fn format_bbox_lines(boxes: &[Option<BBox>]) -> String {
    let mut out = String::with_capacity(boxes.len() * 24);
    for b in boxes {
        if let Some(b) = b {
            let _ = write!(out, "{},{},{},{}", b.x, b.y, b.w, b.h);
        }
        out.push('\n');
    }
    out
}

/// Reads a box file; the tracklet's sequence id is the file stem.
pub fn parse_bbox_file(path: &Path) -> Result<Tracklet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let boxes = parse_bbox_str(&text, &path.display().to_string())?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Tracklet::new(id, boxes))
}

pub fn write_bbox_file(track: &Tracklet, path: &Path) -> Result<()> {
    fs::write(path, format_bbox_lines(&track.boxes)).map_err(|e| Error::io(path, e))
}

/// `<dir>/<sequence_id>.txt`
pub fn result_path(dir: &Path, sequence_id: &str) -> PathBuf {
    dir.join(format!("{sequence_id}.txt"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Rgb,
    Infrared,
    Depth,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Rgb => "rgb",
            Modality::Infrared => "infrared",
            Modality::Depth => "depth",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb" => Ok(Modality::Rgb),
            "infrared" | "ir" => Ok(Modality::Infrared),
            "depth" => Ok(Modality::Depth),
            other => Err(Error::domain(format!("unknown modality {other:?}"))),
        }
    }
}

/// Frame order of result files on disk. Forward passes are identical in both;
/// backward passes stored in processing order run from the last frame to the first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultOrder {
    #[default]
    Video,
    Processing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceManifest {
    pub sequence_id: String,
    pub frame_count: usize,
    pub modality: Modality,
    pub groundtruth_path: PathBuf,
    pub init_box: BBox,
    pub frames_dir: Option<PathBuf>,
    pub result_order: ResultOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub sequences: Vec<SequenceManifest>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    id: String,
    frame_count: usize,
    modality: Modality,
    groundtruth: String,
    init_box: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames_dir: Option<String>,
    #[serde(default)]
    result_order: ResultOrder,
}

#[derive(Serialize)]
struct RawManifest {
    name: String,
    sequence: Vec<RawSequence>,
}

pub fn parse_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest_str(&text, base, &path.display().to_string())
}

pub fn parse_manifest_str(text: &str, base_dir: &Path, source_name: &str) -> Result<DatasetManifest> {
    let err = |msg: String| Error::parse(source_name, None, msg);
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.message().to_string()))?;
    let name = match table.remove("name") {
        Some(toml::Value::String(s)) => s,
        Some(_) => return Err(err("`name` must be a string".into())),
        None => return Err(err("missing required key `name`".into())),
    };
    let raw_sequences = match table.remove("sequence") {
        Some(toml::Value::Array(items)) => items,
        Some(_) => return Err(err("`sequence` must be an array of tables".into())),
        None => Vec::new(),
    };
    if let Some(key) = table.keys().next() {
        return Err(err(format!("unknown key `{key}`")));
    }

    let mut seen = HashSet::new();
    let mut sequences = Vec::with_capacity(raw_sequences.len());
    for (index, value) in raw_sequences.into_iter().enumerate() {
        let label = value
            .get("id")
            .and_then(toml::Value::as_str)
            .map(|id| format!("sequence {id:?}"))
            .unwrap_or_else(|| format!("sequence #{}", index + 1));
        let seq_err = |msg: String| err(format!("{label}: {msg}"));
        let raw: RawSequence = value.try_into().map_err(|e: toml::de::Error| seq_err(e.message().to_string()))?;
        if raw.id.is_empty() || raw.id.contains(['/', '\\']) || raw.id == "." || raw.id == ".." {
            return Err(seq_err("id must be a non-empty file-name-safe string".into()));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(seq_err("duplicate sequence id".into()));
        }
        if raw.frame_count == 0 {
            return Err(seq_err("frame_count must be at least 1".into()));
        }
        let [x, y, w, h] = raw.init_box;
        let init_box = BBox::checked(x, y, w, h).map_err(|e| seq_err(format!("init_box: {e}")))?;
        let groundtruth_path = base_dir.join(&raw.groundtruth);
        if !groundtruth_path.is_file() {
            return Err(seq_err(format!("groundtruth {} does not exist", groundtruth_path.display())));
        }
        let frames_dir = match raw.frames_dir {
            Some(dir) => {
                let dir = base_dir.join(dir);
                if !dir.is_dir() {
                    return Err(seq_err(format!("frames_dir {} does not exist", dir.display())));
                }
                Some(dir)
            }
            None => None,
        };
        sequences.push(SequenceManifest {
            sequence_id: raw.id,
            frame_count: raw.frame_count,
            modality: raw.modality,
            groundtruth_path,
            init_box,
            frames_dir,
            result_order: raw.result_order,
        });
    }
    Ok(DatasetManifest { name, sequences })
}

fn relative_to(path: &Path, base_dir: &Path) -> Result<String> {
    let rel = path.strip_prefix(base_dir).unwrap_or(path);
    rel.to_str()
        .map(|s| s.replace('\\', "/"))
        .ok_or_else(|| Error::domain(format!("path {} is not valid UTF-8", path.display())))
}

/// Serializes a manifest; paths under `base_dir` are written relative to it.
pub fn manifest_to_string(manifest: &DatasetManifest, base_dir: &Path) -> Result<String> {
    let sequence = manifest
        .sequences
        .iter()
        .map(|s| {
            Ok(RawSequence {
                id: s.sequence_id.clone(),
                frame_count: s.frame_count,
                modality: s.modality,
                groundtruth: relative_to(&s.groundtruth_path, base_dir)?,
                init_box: s.init_box.to_array(),
                frames_dir: s.frames_dir.as_deref().map(|d| relative_to(d, base_dir)).transpose()?,
                result_order: s.result_order,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = RawManifest {
        name: manifest.name.clone(),
        sequence,
    };
    toml::to_string(&raw).map_err(|e| Error::domain(format!("cannot serialize manifest: {e}")))
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let base = path.parent().unwrap_or(Path::new(""));
    let text = manifest_to_string(manifest, base)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
