//! Trajectory datasets: CSV ingestion, the metadata sidecar and per-sample
//! kinematics (velocity, speed and heading).

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type PersonId = u64;

/// Speeds below this (m/frame) are treated as standing still: heading is
/// reported as 0 instead of an arbitrary `atan2(0, 0)`.
pub const STILL_EPSILON: f64 = 1e-6;

pub const TRAJECTORY_HEADER: [&str; 4] = ["person_id", "frame", "x", "y"];
pub const CORRESPONDENCE_HEADER: [&str; 4] = ["img_x", "img_y", "world_x", "world_y"];

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: duplicate sample for person {person_id} at frame {frame}")]
    DuplicateSample {
        line: u64,
        person_id: PersonId,
        frame: i64,
    },
    #[error("duplicate person id {0}")]
    DuplicatePerson(PersonId),
    #[error("person {0}: frames must be strictly increasing")]
    UnorderedFrames(PersonId),
    #[error("person {person_id}: non-finite coordinate at frame {frame}")]
    NonFinite { person_id: PersonId, frame: i64 },
    #[error("frame rate must be positive and finite, got {0}")]
    InvalidFrameRate(f64),
    #[error("person {person_id}: need at least 2 samples, got {count}")]
    InsufficientSamples { person_id: PersonId, count: usize },
    #[error("invalid metadata: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;

    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;

    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub frame: i64,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub person_id: PersonId,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(person_id: PersonId, samples: Vec<Sample>) -> Result<Self, TrajectoryError> {
        if samples.windows(2).any(|w| w[0].frame >= w[1].frame) {
            return Err(TrajectoryError::UnorderedFrames(person_id));
        }
        if let Some(bad) = samples.iter().find(|s| !s.position.is_finite()) {
            return Err(TrajectoryError::NonFinite {
                person_id,
                frame: bad.frame,
            });
        }
        Ok(Self { person_id, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    ImagePixels,
    WorldMeters,
}

/// JSON sidecar describing a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub frame_rate: f64,
    pub units: Units,
    pub label: String,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self {
            frame_rate: 25.0,
            units: Units::WorldMeters,
            label: String::new(),
        }
    }
}

impl DatasetMeta {
    pub fn from_json<R: Read>(reader: R) -> Result<Self, TrajectoryError> {
        let meta: DatasetMeta = serde_json::from_reader(reader)?;
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(TrajectoryError::InvalidFrameRate(self.frame_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDataset {
    pub trajectories: Vec<Trajectory>,
    pub frame_rate: f64,
    pub units: Units,
    pub label: String,
}

impl SceneDataset {
    pub fn new(meta: DatasetMeta, trajectories: Vec<Trajectory>) -> Result<Self, TrajectoryError> {
        meta.validate()?;
        let mut seen = BTreeSet::new();
        for t in &trajectories {
            if !seen.insert(t.person_id) {
                return Err(TrajectoryError::DuplicatePerson(t.person_id));
            }
        }
        Ok(Self {
            trajectories,
            frame_rate: meta.frame_rate,
            units: meta.units,
            label: meta.label,
        })
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            frame_rate: self.frame_rate,
            units: self.units,
            label: self.label.clone(),
        }
    }

    pub fn person_count(&self) -> usize {
        self.trajectories.len()
    }

    /// Number of distinct frames with at least one sample.
    pub fn frame_count(&self) -> usize {
        self.trajectories
            .iter()
            .flat_map(|t| t.samples.iter().map(|s| s.frame))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn sample_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn trajectory(&self, person_id: PersonId) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.person_id == person_id)
    }
}

#[derive(Debug, Deserialize)]
struct TrajectoryRow {
    person_id: PersonId,
    frame: i64,
    x: f64,
    y: f64,
}

fn check_header(
    headers: &csv::StringRecord,
    expected: &[&str; 4],
) -> Result<(), TrajectoryError> {
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(TrajectoryError::Malformed {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        });
    }
    Ok(())
}

fn csv_error(err: csv::Error) -> TrajectoryError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    TrajectoryError::Malformed {
        line,
        message: err.to_string(),
    }
}

/// Parses a `person_id,frame,x,y` CSV into one trajectory per person, each
/// sorted by frame. Rows may appear in any order.
pub fn parse_trajectories<R: Read>(
    source: R,
    meta: DatasetMeta,
) -> Result<SceneDataset, TrajectoryError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return SceneDataset::new(meta, Vec::new());
    }
    check_header(&headers, &TRAJECTORY_HEADER)?;

    let mut buckets: BTreeMap<PersonId, BTreeMap<i64, Point2>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: TrajectoryRow = record
            .deserialize(Some(&headers))
            .map_err(|e| TrajectoryError::Malformed {
                line,
                message: e.to_string(),
            })?;
        let position = Point2::new(row.x, row.y);
        if !position.is_finite() {
            return Err(TrajectoryError::Malformed {
                line,
                message: "non-finite coordinate".into(),
            });
        }
        match buckets.entry(row.person_id).or_default().entry(row.frame) {
            Entry::Occupied(_) => {
                return Err(TrajectoryError::DuplicateSample {
                    line,
                    person_id: row.person_id,
                    frame: row.frame,
                })
            }
            Entry::Vacant(slot) => {
                slot.insert(position);
            }
        }
    }

    let trajectories = buckets
        .into_iter()
        .map(|(person_id, frames)| Trajectory {
            person_id,
            samples: frames
                .into_iter()
                .map(|(frame, position)| Sample { frame, position })
                .collect(),
        })
        .collect();
    SceneDataset::new(meta, trajectories)
}

/// Writes the dataset back out as `person_id,frame,x,y`, ordered by person
/// then frame.
pub fn write_trajectories<W: Write>(
    dataset: &SceneDataset,
    sink: W,
) -> Result<(), TrajectoryError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(TRAJECTORY_HEADER).map_err(csv_error)?;
    let mut ordered: Vec<&Trajectory> = dataset.trajectories.iter().collect();
    ordered.sort_by_key(|t| t.person_id);
    for t in ordered {
        for s in &t.samples {
            writer
                .write_record(&[
                    t.person_id.to_string(),
                    s.frame.to_string(),
                    s.position.x.to_string(),
                    s.position.y.to_string(),
                ])
                .map_err(csv_error)?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// One image/world point pair used to estimate a homography.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub image: Point2,
    pub world: Point2,
}

#[derive(Debug, Deserialize)]
struct CorrespondenceRow {
    img_x: f64,
    img_y: f64,
    world_x: f64,
    world_y: f64,
}

pub fn parse_correspondences<R: Read>(source: R) -> Result<Vec<Correspondence>, TrajectoryError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    check_header(&headers, &CORRESPONDENCE_HEADER)?;
    reader
        .deserialize::<CorrespondenceRow>()
        .map(|row| {
            let row = row.map_err(csv_error)?;
            Ok(Correspondence {
                image: Point2::new(row.img_x, row.img_y),
                world: Point2::new(row.world_x, row.world_y),
            })
        })
        .collect()
}

/// Kinematic state of one trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub frame: i64,
    pub position: Point2,
    /// Displacement per frame.
    pub velocity: Point2,
    /// m/frame
    pub speed: f64,
    /// Unsigned angle between velocity and (1, 0), degrees in [0, 180].
    pub alpha: f64,
    /// Signed heading, degrees in (-180, 180].
    pub heading: f64,
    /// Signed heading change since the previous sample, degrees in
    /// (-180, 180]. `None` on the first sample.
    pub heading_change: Option<f64>,
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_degrees(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Forward-difference kinematics. The last sample repeats the previous
/// velocity so the output has one entry per input sample.
pub fn derive_kinematics(t: &Trajectory) -> Result<Vec<KinematicSample>, TrajectoryError> {
    let n = t.samples.len();
    if n < 2 {
        return Err(TrajectoryError::InsufficientSamples {
            person_id: t.person_id,
            count: n,
        });
    }

    let mut out: Vec<KinematicSample> = Vec::with_capacity(n);
    for (k, sample) in t.samples.iter().enumerate() {
        let velocity = if k + 1 < n {
            let next = &t.samples[k + 1];
            let dt = (next.frame - sample.frame) as f64;
            let d = next.position - sample.position;
            Point2::new(d.x / dt, d.y / dt)
        } else {
            out[k - 1].velocity
        };
        let speed = velocity.norm();
        let heading = if speed < STILL_EPSILON {
            0.0
        } else {
            velocity.y.atan2(velocity.x).to_degrees()
        };
        let heading_change = out.last().map(|prev| {
            if speed < STILL_EPSILON || prev.speed < STILL_EPSILON {
                0.0
            } else {
                wrap_degrees(heading - prev.heading)
            }
        });
        out.push(KinematicSample {
            frame: sample.frame,
            position: sample.position,
            velocity,
            speed,
            alpha: heading.abs(),
            heading,
            heading_change,
        });
    }
    Ok(out)
}
