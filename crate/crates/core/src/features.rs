//! Per-frame individual features: speed, heading, isolation, socialization
//! and collectivity, plus their per-video averages.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{derive_kinematics, PersonId, Point2, SceneDataset, TrajectoryError, Units};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("frame contains no individuals")]
    EmptyFrame,
    #[error("features need world coordinates; rectify the dataset first")]
    NotRectified,
    #[error("invalid proxemics parameter `{0}`: must be positive and finite")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Proxemics constants. `d_hall` is the social-space radius in meters;
/// `gamma`, `beta`, `w1`, `w2` shape the collectivity decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxemicsConfig {
    pub d_hall: f64,
    pub gamma: f64,
    pub beta: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Default for ProxemicsConfig {
    fn default() -> Self {
        Self {
            d_hall: 3.6,
            gamma: 1.0,
            beta: 0.3,
            w1: 1.0,
            w2: 1.0,
        }
    }
}

impl ProxemicsConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        for (name, v) in [
            ("d_hall", self.d_hall),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("w1", self.w1),
            ("w2", self.w2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FeatureError::InvalidConfig(name));
            }
        }
        Ok(())
    }
}

/// Kinematic state of one person in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAgent {
    pub person_id: PersonId,
    pub position: Point2,
    pub velocity: Point2,
    pub speed: f64,
    pub alpha: f64,
    pub heading: f64,
    pub heading_change: Option<f64>,
}

/// All agents present in one frame, sorted by person id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub frame: i64,
    pub agents: Vec<FrameAgent>,
}

impl FrameState {
    pub fn new(frame: i64, mut agents: Vec<FrameAgent>) -> Self {
        agents.sort_by_key(|a| a.person_id);
        Self { frame, agents }
    }

    pub fn agent(&self, person_id: PersonId) -> Option<&FrameAgent> {
        self.agents
            .binary_search_by_key(&person_id, |a| a.person_id)
            .ok()
            .map(|i| &self.agents[i])
    }
}

/// Builds per-frame agent states from a world-coordinate dataset.
/// Trajectories with a single sample have no velocity and are skipped.
pub fn frame_states(dataset: &SceneDataset) -> Result<Vec<FrameState>, FeatureError> {
    if dataset.units != Units::WorldMeters {
        return Err(FeatureError::NotRectified);
    }
    let mut frames: BTreeMap<i64, Vec<FrameAgent>> = BTreeMap::new();
    for t in dataset.trajectories.iter().filter(|t| t.len() >= 2) {
        for k in derive_kinematics(t)? {
            frames.entry(k.frame).or_default().push(FrameAgent {
                person_id: t.person_id,
                position: k.position,
                velocity: k.velocity,
                speed: k.speed,
                alpha: k.alpha,
                heading: k.heading,
                heading_change: k.heading_change,
            });
        }
    }
    Ok(frames
        .into_iter()
        .map(|(frame, agents)| FrameState::new(frame, agents))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    pub person_id: PersonId,
    pub frame: i64,
    pub x: f64,
    pub y: f64,
    /// m/frame
    pub speed: f64,
    /// degrees in [0, 180]
    pub alpha: f64,
    pub heading: f64,
    pub heading_change: Option<f64>,
    pub isolation: f64,
    pub socialization: f64,
    /// Raw sum of per-neighbor terms; may exceed 1.
    pub collectivity: f64,
    /// Per-neighbor mean of the same terms, in [0, gamma].
    pub collectivity_mean: f64,
    pub n_social: usize,
    pub rho: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedFeatures {
    pub person_id: PersonId,
    pub frames: usize,
    pub speed: f64,
    pub alpha: f64,
    pub isolation: f64,
    pub socialization: f64,
    pub collectivity: f64,
    pub collectivity_mean: f64,
    /// Population std of the per-frame heading change, degrees.
    pub std_alpha_change: f64,
}

/// Absolute difference between two headings in degrees, wrapped to [0, 180].
pub fn orientation_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Indices of every other agent within `d_hall` (inclusive) of agent `i`,
/// ascending.
pub fn social_neighbors(agents: &[FrameAgent], i: usize, d_hall: f64) -> Vec<usize> {
    let origin = agents[i].position;
    (0..agents.len())
        .filter(|&j| j != i && origin.distance(agents[j].position) <= d_hall)
        .collect()
}

/// 1 when alone, otherwise the mean neighbor distance over `d_hall`.
pub fn isolation(neighbor_distances: &[f64], d_hall: f64) -> f64 {
    if neighbor_distances.is_empty() {
        return 1.0;
    }
    let mean = neighbor_distances.iter().sum::<f64>() / neighbor_distances.len() as f64;
    mean / d_hall
}

/// Fraction of the frame population inside the social space.
pub fn socialization(n_social: usize, rho: usize) -> Result<f64, FeatureError> {
    if rho == 0 {
        return Err(FeatureError::EmptyFrame);
    }
    if n_social == 0 {
        return Ok(0.0);
    }
    Ok(n_social as f64 / rho as f64)
}

/// `gamma * exp(-beta * w^2)` with `w = w1 |ds| + w2 |do|`, the orientation
/// difference taken in radians.
pub fn collectivity_term(a: &FrameAgent, b: &FrameAgent, config: &ProxemicsConfig) -> f64 {
    let ds = (a.speed - b.speed).abs();
    let dor = orientation_difference(a.heading, b.heading).to_radians();
    let w = ds * config.w1 + dor * config.w2;
    config.gamma * (-config.beta * w * w).exp()
}

pub fn collectivity<'a>(
    agent: &FrameAgent,
    neighbors: impl IntoIterator<Item = &'a FrameAgent>,
    config: &ProxemicsConfig,
) -> f64 {
    neighbors
        .into_iter()
        .map(|n| collectivity_term(agent, n, config))
        .sum()
}

/// Uniform bucket grid used to find neighbors within a fixed radius.
pub(crate) struct SpatialGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialGrid {
    pub(crate) fn new(points: impl Iterator<Item = Point2>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: Point2, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Candidate indices from the 3x3 block around `p`, unsorted.
    pub(crate) fn candidates(&self, p: Point2) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = Self::key(p, self.cell);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (cx + dx, cy + dy)))
            .filter_map(move |k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// Features of every agent in one frame.
pub fn frame_features(
    state: &FrameState,
    config: &ProxemicsConfig,
) -> Result<Vec<FrameFeatures>, FeatureError> {
    let agents = &state.agents;
    let rho = agents.len();
    if rho == 0 {
        return Err(FeatureError::EmptyFrame);
    }
    let grid = SpatialGrid::new(agents.iter().map(|a| a.position), config.d_hall);

    agents
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let mut neighbors: Vec<usize> = grid
                .candidates(agent.position)
                .filter(|&j| j != i && agent.position.distance(agents[j].position) <= config.d_hall)
                .collect();
            neighbors.sort_unstable();

            let distances: Vec<f64> = neighbors
                .iter()
                .map(|&j| agent.position.distance(agents[j].position))
                .collect();
            let collect = collectivity(agent, neighbors.iter().map(|&j| &agents[j]), config);
            let n_social = neighbors.len();
            Ok(FrameFeatures {
                person_id: agent.person_id,
                frame: state.frame,
                x: agent.position.x,
                y: agent.position.y,
                speed: agent.speed,
                alpha: agent.alpha,
                heading: agent.heading,
                heading_change: agent.heading_change,
                isolation: isolation(&distances, config.d_hall),
                socialization: socialization(n_social, rho)?,
                collectivity: collect,
                collectivity_mean: if n_social == 0 {
                    0.0
                } else {
                    collect / n_social as f64
                },
                n_social,
                rho,
            })
        })
        .collect()
}

/// Per-frame features for a whole video plus per-person averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    /// Ordered by frame, then person id.
    pub frames: Vec<FrameFeatures>,
    /// Ordered by person id.
    pub averages: Vec<AveragedFeatures>,
}

impl FeatureSet {
    /// Per-frame rows of one person, in frame order.
    pub fn person_frames(&self, person_id: PersonId) -> Vec<&FrameFeatures> {
        self.frames
            .iter()
            .filter(|f| f.person_id == person_id)
            .collect()
    }

    pub fn by_person(&self) -> BTreeMap<PersonId, Vec<&FrameFeatures>> {
        let mut map: BTreeMap<PersonId, Vec<&FrameFeatures>> = BTreeMap::new();
        for f in &self.frames {
            map.entry(f.person_id).or_default().push(f);
        }
        map
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Population standard deviation; 0 for fewer than two values.
pub fn population_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

pub fn average_features(person_id: PersonId, frames: &[&FrameFeatures]) -> AveragedFeatures {
    let changes: Vec<f64> = frames.iter().filter_map(|f| f.heading_change).collect();
    AveragedFeatures {
        person_id,
        frames: frames.len(),
        speed: mean(frames.iter().map(|f| f.speed)),
        alpha: mean(frames.iter().map(|f| f.alpha)),
        isolation: mean(frames.iter().map(|f| f.isolation)),
        socialization: mean(frames.iter().map(|f| f.socialization)),
        collectivity: mean(frames.iter().map(|f| f.collectivity)),
        collectivity_mean: mean(frames.iter().map(|f| f.collectivity_mean)),
        std_alpha_change: population_std(&changes),
    }
}

pub fn features_from_states(
    states: &[FrameState],
    config: &ProxemicsConfig,
) -> Result<FeatureSet, FeatureError> {
    config.validate()?;
    let per_frame = states
        .par_iter()
        .filter(|s| !s.agents.is_empty())
        .map(|s| frame_features(s, config))
        .collect::<Result<Vec<_>, _>>()?;
    let frames: Vec<FrameFeatures> = per_frame.into_iter().flatten().collect();

    let mut set = FeatureSet {
        frames,
        averages: Vec::new(),
    };
    set.averages = set
        .by_person()
        .iter()
        .map(|(&id, rows)| average_features(id, rows))
        .collect();
    Ok(set)
}

pub fn extract_features(
    dataset: &SceneDataset,
    config: &ProxemicsConfig,
) -> Result<FeatureSet, FeatureError> {
    features_from_states(&frame_states(dataset)?, config)
}

const FEATURE_COLUMNS: [&str; 14] = [
    "person_id",
    "frame",
    "x",
    "y",
    "speed",
    "alpha",
    "heading",
    "heading_change",
    "isolation",
    "socialization",
    "collectivity",
    "collectivity_mean",
    "n_social",
    "rho",
];

/// Writes per-frame features as CSV. A missing heading change is an empty
/// field.
pub fn write_features_csv<W: Write>(set: &FeatureSet, sink: W) -> Result<(), FeatureError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(FEATURE_COLUMNS)?;
    for f in &set.frames {
        writer.write_record(&[
            f.person_id.to_string(),
            f.frame.to_string(),
            f.x.to_string(),
            f.y.to_string(),
            f.speed.to_string(),
            f.alpha.to_string(),
            f.heading.to_string(),
            f.heading_change.map(|v| v.to_string()).unwrap_or_default(),
            f.isolation.to_string(),
            f.socialization.to_string(),
            f.collectivity.to_string(),
            f.collectivity_mean.to_string(),
            f.n_social.to_string(),
            f.rho.to_string(),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
