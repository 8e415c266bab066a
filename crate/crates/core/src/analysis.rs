//! Dataset-level statistics: video and country summaries, Pearson
//! correlation, region-of-interest filtering, preferred front distance and
//! density series.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emotion::EmotionVector;
use crate::features::FrameState;
use crate::ocean::PersonalityVector;
use crate::trajectory::{PersonId, Point2, SceneDataset, Trajectory, STILL_EPSILON};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no summaries to average")]
    Empty,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: a series has zero variance")]
    UndefinedCorrelation,
    #[error("region of interest needs positive, finite extents")]
    InvalidRoi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSummary {
    pub schema_version: u32,
    pub label: String,
    pub ocean: PersonalityVector,
    pub emotion: EmotionVector,
    pub person_count: usize,
    pub frame_count: usize,
}

/// Unweighted mean over the videos of one country. The label is taken from
/// the first summary; counts are summed.
pub fn country_mean(summaries: &[VideoSummary]) -> Result<VideoSummary, AnalysisError> {
    let first = summaries.first().ok_or(AnalysisError::Empty)?;
    let ocean: Vec<PersonalityVector> = summaries.iter().map(|s| s.ocean).collect();
    let emotion: Vec<EmotionVector> = summaries.iter().map(|s| s.emotion).collect();
    Ok(VideoSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        label: first.label.clone(),
        ocean: PersonalityVector::mean(&ocean).ok_or(AnalysisError::Empty)?,
        emotion: EmotionVector::mean(&emotion).ok_or(AnalysisError::Empty)?,
        person_count: summaries.iter().map(|s| s.person_count).sum(),
        frame_count: summaries.iter().map(|s| s.frame_count).sum(),
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (cov, vx, vy) = x.iter().zip(y).fold((0.0, 0.0, 0.0), |(c, vx, vy), (a, b)| {
        let (da, db) = (a - mx, b - my);
        (c + da * db, vx + da * da, vy + db * db)
    });
    if vx == 0.0 || vy == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation);
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Axis-aligned rectangle in world meters; the boundary counts as inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub origin: Point2,
    pub width: f64,
    pub height: f64,
}

impl Roi {
    pub fn new(origin: Point2, width: f64, height: f64) -> Result<Self, AnalysisError> {
        if !(origin.is_finite() && width.is_finite() && height.is_finite())
            || width <= 0.0
            || height <= 0.0
        {
            return Err(AnalysisError::InvalidRoi);
        }
        Ok(Self {
            origin,
            width,
            height,
        })
    }

    /// The 2 x 0.8 m measurement window of the corridor experiment, anchored
    /// at the origin.
    pub fn corridor_window() -> Self {
        Self {
            origin: Point2::new(0.0, 0.0),
            width: 2.0,
            height: 0.8,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.width
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.height
    }
}

/// Keeps only samples inside the ROI; persons left without samples are
/// dropped.
pub fn roi_filter(dataset: &SceneDataset, roi: &Roi) -> SceneDataset {
    let trajectories = dataset
        .trajectories
        .iter()
        .filter_map(|t| {
            let samples: Vec<_> = t
                .samples
                .iter()
                .filter(|s| roi.contains(s.position))
                .copied()
                .collect();
            (!samples.is_empty()).then_some(Trajectory {
                person_id: t.person_id,
                samples,
            })
        })
        .collect();
    SceneDataset {
        trajectories,
        frame_rate: dataset.frame_rate,
        units: dataset.units,
        label: dataset.label.clone(),
    }
}

pub const DEFAULT_CONE_HALF_ANGLE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferredDistance {
    pub cone_half_angle: f64,
    /// Mean front distance per person, only for persons that ever had a
    /// neighbor in front.
    pub per_person: BTreeMap<PersonId, f64>,
    /// Mean over `per_person`; `None` when nobody ever had one.
    pub video_mean: Option<f64>,
}

/// Distance to the nearest agent inside the heading cone, if any.
pub fn front_neighbor_distance(
    state: &FrameState,
    index: usize,
    cone_half_angle: f64,
) -> Option<f64> {
    let me = &state.agents[index];
    if me.speed < STILL_EPSILON {
        return None;
    }
    let cos_limit = cone_half_angle.to_radians().cos();
    state
        .agents
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .filter_map(|(_, other)| {
            let offset = other.position - me.position;
            let dist = offset.norm();
            if dist == 0.0 {
                return None;
            }
            let cos = offset.dot(me.velocity) / (dist * me.speed);
            // small slack so neighbors exactly on the cone edge stay in
            (cos >= cos_limit - 1e-12).then_some(dist)
        })
        .min_by(f64::total_cmp)
}

/// Mean distance people keep to whoever walks right in front of them:
/// averaged over frames per person, then over persons.
pub fn preferred_distance(states: &[FrameState], cone_half_angle: f64) -> PreferredDistance {
    let mut acc: BTreeMap<PersonId, (f64, usize)> = BTreeMap::new();
    for state in states {
        for (i, agent) in state.agents.iter().enumerate() {
            if let Some(d) = front_neighbor_distance(state, i, cone_half_angle) {
                let e = acc.entry(agent.person_id).or_insert((0.0, 0));
                e.0 += d;
                e.1 += 1;
            }
        }
    }
    let per_person: BTreeMap<PersonId, f64> = acc
        .into_iter()
        .map(|(id, (sum, n))| (id, sum / n as f64))
        .collect();
    let video_mean = (!per_person.is_empty())
        .then(|| per_person.values().sum::<f64>() / per_person.len() as f64);
    PreferredDistance {
        cone_half_angle,
        per_person,
        video_mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub n: usize,
    pub label: String,
    pub ocean: PersonalityVector,
    pub emotion: EmotionVector,
}

/// One row per dataset, ordered by population size (ties by label).
pub fn density_series(summaries: &[VideoSummary]) -> Vec<DensityRow> {
    let mut rows: Vec<DensityRow> = summaries
        .iter()
        .map(|s| DensityRow {
            n: s.person_count,
            label: s.label.clone(),
            ocean: s.ocean,
            emotion: s.emotion,
        })
        .collect();
    rows.sort_by(|a, b| a.n.cmp(&b.n).then_with(|| a.label.cmp(&b.label)));
    rows
}

/// Long-format row for external plotting tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub series: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

const OCEAN_NAMES: [&str; 5] = [
    "openness",
    "conscientiousness",
    "extraversion",
    "agreeableness",
    "neuroticism",
];
const EMOTION_NAMES: [&str; 4] = ["fear", "happiness", "sadness", "anger"];

/// One plot row per dimension/emotion and dataset, with population size on
/// the x axis.
pub fn density_plot_rows(rows: &[DensityRow]) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for row in rows {
        for (name, v) in OCEAN_NAMES.iter().zip(row.ocean.to_array()) {
            out.push(PlotRow {
                series: format!("ocean.{name}"),
                label: row.label.clone(),
                x: row.n as f64,
                y: v,
            });
        }
        for (name, v) in EMOTION_NAMES.iter().zip(row.emotion.to_array()) {
            out.push(PlotRow {
                series: format!("emotion.{name}"),
                label: row.label.clone(),
                x: row.n as f64,
                y: v,
            });
        }
    }
    out
}

pub fn write_plot_csv<W: Write>(rows: &[PlotRow], sink: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(sink);
    for r in rows {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_density_csv<W: Write>(rows: &[DensityRow], sink: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["n".to_string(), "label".to_string()];
    header.extend(OCEAN_NAMES.iter().map(|s| s.to_string()));
    header.extend(EMOTION_NAMES.iter().map(|s| s.to_string()));
    writer.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.n.to_string(), r.label.clone()];
        rec.extend(r.ocean.to_array().iter().map(f64::to_string));
        rec.extend(r.emotion.to_array().iter().map(f64::to_string));
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(())
}

/// Externally published OCEAN norms per country, used only for comparison.
/// Values are `None` until filled in from the cited source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub source: String,
    pub note: String,
    pub countries: BTreeMap<String, ReferenceOcean>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceOcean {
    pub openness: Option<f64>,
    pub conscientiousness: Option<f64>,
    pub extraversion: Option<f64>,
    pub agreeableness: Option<f64>,
    pub neuroticism: Option<f64>,
}

pub const LITERATURE_REFERENCE_JSON: &str = include_str!("../data/literature_reference.json");

pub fn literature_reference() -> Result<ReferenceTable, serde_json::Error> {
    serde_json::from_str(LITERATURE_REFERENCE_JSON)
}
