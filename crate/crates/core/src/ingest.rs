//! Line-delimited interchange formats for frames, predictions and rank
//! records, with streaming readers and full invariant validation.
//!
//! The formats are dataset-neutral; converters from native dataset SDKs
//! are out of scope. All world-plane quantities are SI (meters, m/s,
//! radians, seconds); image boxes are in pixels.
//!
//! # Frames file (`*.frames.jsonl`)
//!
//! One JSON object per line:
//!
//! ```json
//! {"frame_id":"seq0/000","timestamp":0.0,
//!  "ego":{"position":{"x":0.0,"y":0.0},"velocity":{"x":5.0,"y":0.0},
//!         "heading":0.0,"length":4.0,"width":2.0},
//!  "objects":[{"object_id":"obj-0","class_label":"Vehicle",
//!      "world":{"position":{"x":8.0,"y":0.0},"velocity":{"x":-5.0,"y":0.0},
//!               "heading":3.141592653589793,"length":4.0,"width":2.0},
//!      "image_box":{"x_min":100.0,"y_min":200.0,"x_max":150.0,"y_max":260.0}}]}
//! ```
//!
//! An object's `world.velocity` and `world.heading` may be omitted or
//! null when unlabeled; they are substituted with zero and the frame
//! carries a warning. The ego state is always required in full.
//!
//! # Predictions file (`*.predictions.jsonl`)
//!
//! ```json
//! {"frame_id":"seq0/000","x_min":101.0,"y_min":199.0,"x_max":149.0,
//!  "y_max":258.0,"confidence":0.91,"class_label":"Vehicle"}
//! ```
//!
//! # Rank records (`*.ranks.jsonl` / `*.expected.jsonl`)
//!
//! ```json
//! {"frame_id":"seq0/000","object_id":"obj-0","rank":"imminent"}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::matching::{ImageBox, Prediction};
use crate::risk::{RiskRank, WorldState};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate frame_id `{id}`")]
    DuplicateFrameId {
        path: String,
        line: usize,
        id: String,
    },
}

/// One timestamped dataset sample: ego state plus labeled objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: String,
    /// Informational only; every frame is analyzed at its own t = 0.
    pub timestamp: f64,
    pub ego: WorldState,
    pub objects: Vec<GroundTruthObject>,
}

/// A labeled object: world state for ranking, image box for matching.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub object_id: String,
    pub class_label: String,
    pub world: WorldState,
    pub image_box: ImageBox,
    /// False when the label had no velocity and zero was substituted.
    pub velocity_known: bool,
    /// False when the label had no heading and zero was substituted.
    pub heading_known: bool,
}

/// A frame together with any substitution warnings raised while
/// loading it.
#[derive(Debug, Clone)]
pub struct LoadedFrame {
    pub frame: Frame,
    pub warnings: Vec<String>,
}

/// Rank assignment for one object of one frame; the record format of
/// rank output files and scenario `.expected.jsonl` sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub frame_id: String,
    pub object_id: String,
    pub rank: RiskRank,
}

// --- wire structs (serde) ---

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireObjectWorld {
    position: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<f64>,
    length: f64,
    width: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireObject {
    object_id: String,
    class_label: String,
    world: WireObjectWorld,
    image_box: ImageBox,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireFrame {
    frame_id: String,
    timestamp: f64,
    ego: WorldState,
    objects: Vec<WireObject>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePrediction {
    frame_id: String,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_label: Option<String>,
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn frame_from_wire(
    wire: WireFrame,
    path: &Path,
    line: usize,
) -> Result<LoadedFrame, IngestError> {
    let mut warnings = Vec::new();
    wire.ego
        .validate()
        .map_err(|e| parse_err(path, line, format!("ego: {e}")))?;
    let mut seen = HashSet::new();
    let mut objects = Vec::with_capacity(wire.objects.len());
    for obj in wire.objects {
        if !seen.insert(obj.object_id.clone()) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate object_id `{}`", obj.object_id),
            ));
        }
        let velocity_known = obj.world.velocity.is_some();
        let heading_known = obj.world.heading.is_some();
        if !velocity_known {
            warnings.push(format!(
                "frame `{}` object `{}`: velocity missing, treated as stationary",
                wire.frame_id, obj.object_id
            ));
        }
        if !heading_known {
            warnings.push(format!(
                "frame `{}` object `{}`: heading missing, treated as 0",
                wire.frame_id, obj.object_id
            ));
        }
        let world = WorldState::new(
            obj.world.position,
            obj.world.velocity.unwrap_or(Vec2::ZERO),
            obj.world.heading.unwrap_or(0.0),
            obj.world.length,
            obj.world.width,
        );
        world.validate().map_err(|e| {
            parse_err(path, line, format!("object `{}`: {e}", obj.object_id))
        })?;
        obj.image_box.validate().map_err(|e| {
            parse_err(
                path,
                line,
                format!("object `{}` image_box: {e}", obj.object_id),
            )
        })?;
        objects.push(GroundTruthObject {
            object_id: obj.object_id,
            class_label: obj.class_label,
            world,
            image_box: obj.image_box,
            velocity_known,
            heading_known,
        });
    }
    if !wire.timestamp.is_finite() {
        return Err(parse_err(path, line, "timestamp is not finite"));
    }
    Ok(LoadedFrame {
        frame: Frame {
            frame_id: wire.frame_id,
            timestamp: wire.timestamp,
            ego: wire.ego,
            objects,
        },
        warnings,
    })
}

fn frame_to_wire(frame: &Frame) -> WireFrame {
    WireFrame {
        frame_id: frame.frame_id.clone(),
        timestamp: frame.timestamp,
        ego: frame.ego,
        objects: frame
            .objects
            .iter()
            .map(|o| WireObject {
                object_id: o.object_id.clone(),
                class_label: o.class_label.clone(),
                world: WireObjectWorld {
                    position: o.world.position,
                    velocity: o.velocity_known.then_some(o.world.velocity),
                    heading: o.heading_known.then_some(o.world.heading),
                    length: o.world.length,
                    width: o.world.width,
                },
                image_box: o.image_box,
            })
            .collect(),
    }
}

/// Streaming reader over a frames file. Memory use is bounded by the
/// largest single frame; blank lines are skipped.
pub struct FrameStream {
    reader: BufReader<File>,
    path: std::path::PathBuf,
    line: usize,
    seen_ids: HashSet<String>,
    buf: String,
}

impl Iterator for FrameStream {
    type Item = Result<LoadedFrame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(io_err(&self.path, e))),
            }
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            let wire: WireFrame = match serde_json::from_str(text) {
                Ok(w) => w,
                Err(e) => return Some(Err(parse_err(&self.path, self.line, e.to_string()))),
            };
            if !self.seen_ids.insert(wire.frame_id.clone()) {
                return Some(Err(IngestError::DuplicateFrameId {
                    path: self.path.display().to_string(),
                    line: self.line,
                    id: wire.frame_id,
                }));
            }
            return Some(frame_from_wire(wire, &self.path, self.line));
        }
    }
}

/// Opens a frames file for streaming.
pub fn read_frames(path: impl AsRef<Path>) -> Result<FrameStream, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(FrameStream {
        reader: BufReader::new(file),
        path: path.to_path_buf(),
        line: 0,
        seen_ids: HashSet::new(),
        buf: String::new(),
    })
}

/// Loads a whole frames file, collecting all substitution warnings.
pub fn load_frames(path: impl AsRef<Path>) -> Result<(Vec<Frame>, Vec<String>), IngestError> {
    let mut frames = Vec::new();
    let mut warnings = Vec::new();
    for item in read_frames(path)? {
        let loaded = item?;
        warnings.extend(loaded.warnings);
        frames.push(loaded.frame);
    }
    Ok((frames, warnings))
}

/// Writes frames in the interchange format, one record per line.
pub fn write_frames<W: Write>(mut out: W, frames: &[Frame]) -> std::io::Result<()> {
    for frame in frames {
        let line = serde_json::to_string(&frame_to_wire(frame)).expect("frame serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Loads a predictions file grouped by frame id. Referenced frame ids
/// are validated downstream, at the join with the frames file.
pub fn load_predictions(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, Vec<Prediction>>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut map: BTreeMap<String, Vec<Prediction>> = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let text = line.map_err(|e| io_err(path, e))?;
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        let wire: WirePrediction = serde_json::from_str(text)
            .map_err(|e| parse_err(path, line_no, e.to_string()))?;
        let prediction = Prediction {
            image_box: ImageBox::new(wire.x_min, wire.y_min, wire.x_max, wire.y_max),
            confidence: wire.confidence,
            class_label: wire.class_label,
        };
        prediction
            .validate()
            .map_err(|e| parse_err(path, line_no, e.to_string()))?;
        map.entry(wire.frame_id).or_default().push(prediction);
    }
    Ok(map)
}

/// Writes prediction records, one per line.
pub fn write_predictions<W: Write>(
    mut out: W,
    records: &[(String, Prediction)],
) -> std::io::Result<()> {
    for (frame_id, p) in records {
        let wire = WirePrediction {
            frame_id: frame_id.clone(),
            x_min: p.image_box.x_min,
            y_min: p.image_box.y_min,
            x_max: p.image_box.x_max,
            y_max: p.image_box.y_max,
            confidence: p.confidence,
            class_label: p.class_label.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&wire).expect("serializes"))?;
    }
    Ok(())
}

/// Loads rank records (rank output files or expected-rank sidecars).
pub fn load_rank_records(path: impl AsRef<Path>) -> Result<Vec<RankRecord>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let text = line.map_err(|e| io_err(path, e))?;
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        let record: RankRecord = serde_json::from_str(text)
            .map_err(|e| parse_err(path, idx + 1, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

/// Writes rank records, one per line.
pub fn write_rank_records<W: Write>(mut out: W, records: &[RankRecord]) -> std::io::Result<()> {
    for record in records {
        writeln!(out, "{}", serde_json::to_string(record).expect("serializes"))?;
    }
    Ok(())
}
