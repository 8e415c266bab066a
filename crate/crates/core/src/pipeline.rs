//! End-to-end analysis of one video and the report documents derived from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    preferred_distance, roi_filter, PreferredDistance, Roi, VideoSummary, DEFAULT_CONE_HALF_ANGLE,
    SUMMARY_SCHEMA_VERSION,
};
use crate::emotion::{emotion_scores, group_emotion, normalize_emotions, EmotionMode, EmotionVector};
use crate::features::{features_from_states, frame_states, FeatureError, FeatureSet, FrameState, ProxemicsConfig};
use crate::groups::{detect_all_groups, video_groups, FrameGroup, Group, GroupError, GroupRuleConfig};
use crate::ocean::{group_ocean, person_ocean, OceanError, OceanMode, OceanScores, PersonalityVector};
use crate::trajectory::{PersonId, SceneDataset};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Groups(#[from] GroupError),
    #[error(transparent)]
    Ocean(#[from] OceanError),
    #[error("invalid cone half-angle {0}: must be in (0, 180]")]
    InvalidCone(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub proxemics: ProxemicsConfig,
    pub group_rules: GroupRuleConfig,
    pub ocean_mode: OceanMode,
    pub emotion_mode: EmotionMode,
    pub roi: Option<Roi>,
    /// Half-angle of the heading cone for the front-distance measurement,
    /// degrees.
    pub cone_half_angle: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            proxemics: ProxemicsConfig::default(),
            group_rules: GroupRuleConfig::default(),
            ocean_mode: OceanMode::Normalized,
            emotion_mode: EmotionMode::Discrete,
            roi: None,
            cone_half_angle: DEFAULT_CONE_HALF_ANGLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonEmotion {
    pub person_id: PersonId,
    pub raw: EmotionVector,
    pub normalized: EmotionVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEmotion {
    pub group_id: usize,
    pub members: Vec<PersonId>,
    pub raw: EmotionVector,
    pub normalized: EmotionVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameEmotion {
    pub person_id: PersonId,
    pub frame: i64,
    pub raw: EmotionVector,
    pub normalized: EmotionVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionReport {
    pub mode: EmotionMode,
    pub per_person: Vec<PersonEmotion>,
    pub per_group: Vec<GroupEmotion>,
    pub per_frame: Vec<FrameEmotion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPersonality {
    pub group_id: usize,
    pub members: Vec<PersonId>,
    pub personality: PersonalityVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub config: PipelineConfig,
    pub label: String,
    pub states: Vec<FrameState>,
    pub features: FeatureSet,
    pub frame_groups: Vec<FrameGroup>,
    pub groups: Vec<Group>,
    pub ocean: OceanScores,
    pub group_ocean: Vec<GroupPersonality>,
    pub emotions: EmotionReport,
    pub preferred_distance: PreferredDistance,
    pub summary: VideoSummary,
}

/// Emotions per frame, per person and per group.
///
/// Per-frame raw scores come from per-frame personalities and are min-max
/// normalized among themselves. Person scores come from the video-averaged
/// personality; a group's raw score is the mean of its members' raw scores,
/// and persons and groups are normalized together.
fn emotion_report(ocean: &OceanScores, groups: &[Group], mode: EmotionMode) -> EmotionReport {
    let frame_raw: Vec<EmotionVector> = ocean
        .per_frame
        .iter()
        .map(|fp| emotion_scores(&fp.personality, mode))
        .collect();
    let frame_norm = normalize_emotions(&frame_raw);
    let per_frame = ocean
        .per_frame
        .iter()
        .zip(frame_raw.iter().zip(&frame_norm))
        .map(|(fp, (&raw, &normalized))| FrameEmotion {
            person_id: fp.person_id,
            frame: fp.frame,
            raw,
            normalized,
        })
        .collect();

    let person_raw: BTreeMap<PersonId, EmotionVector> = ocean
        .per_person
        .iter()
        .map(|(&id, p)| (id, emotion_scores(p, mode)))
        .collect();
    let group_raw: Vec<EmotionVector> = groups
        .iter()
        .map(|g| {
            let members: Vec<EmotionVector> = g
                .members
                .iter()
                .filter_map(|id| person_raw.get(id).copied())
                .collect();
            group_emotion(&members).unwrap_or_default()
        })
        .collect();

    let mut pool: Vec<EmotionVector> = person_raw.values().copied().collect();
    pool.extend(group_raw.iter().copied());
    let pool_norm = normalize_emotions(&pool);
    let (person_norm, group_norm) = pool_norm.split_at(person_raw.len());

    EmotionReport {
        mode,
        per_person: person_raw
            .iter()
            .zip(person_norm)
            .map(|((&person_id, &raw), &normalized)| PersonEmotion {
                person_id,
                raw,
                normalized,
            })
            .collect(),
        per_group: groups
            .iter()
            .zip(group_raw.iter().zip(group_norm))
            .map(|(g, (&raw, &normalized))| GroupEmotion {
                group_id: g.group_id,
                members: g.members.clone(),
                raw,
                normalized,
            })
            .collect(),
        per_frame,
    }
}

/// Runs the whole pipeline on a world-coordinate dataset.
pub fn analyze(dataset: &SceneDataset, config: &PipelineConfig) -> Result<Analysis, PipelineError> {
    if !(config.cone_half_angle > 0.0 && config.cone_half_angle <= 180.0) {
        return Err(PipelineError::InvalidCone(config.cone_half_angle));
    }
    config.proxemics.validate()?;
    config.group_rules.validate()?;

    let filtered;
    let dataset = match &config.roi {
        Some(roi) => {
            filtered = roi_filter(dataset, roi);
            &filtered
        }
        None => dataset,
    };

    let states = frame_states(dataset)?;
    let features = features_from_states(&states, &config.proxemics)?;
    let frame_groups = detect_all_groups(&states, &config.group_rules);
    let groups = video_groups(&frame_groups, &states, &features.frames, &config.group_rules)?;
    let ocean = person_ocean(&features, config.ocean_mode);

    let group_ocean = groups
        .iter()
        .map(|g| {
            let members = g
                .members
                .iter()
                .map(|id| ocean.person(*id).copied())
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupPersonality {
                group_id: g.group_id,
                members: g.members.clone(),
                personality: group_ocean(&members)?,
            })
        })
        .collect::<Result<Vec<_>, OceanError>>()?;

    let emotions = emotion_report(&ocean, &groups, config.emotion_mode);
    let preferred = preferred_distance(&states, config.cone_half_angle);

    let person_vectors: Vec<PersonalityVector> = ocean.per_person.values().copied().collect();
    let person_emotions: Vec<EmotionVector> =
        emotions.per_person.iter().map(|p| p.normalized).collect();
    let summary = VideoSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        label: dataset.label.clone(),
        ocean: PersonalityVector::mean(&person_vectors).unwrap_or_default(),
        emotion: EmotionVector::mean(&person_emotions).unwrap_or_default(),
        person_count: ocean.per_person.len(),
        frame_count: states.len(),
    };

    Ok(Analysis {
        config: config.clone(),
        label: dataset.label.clone(),
        states,
        features,
        frame_groups,
        groups,
        ocean,
        group_ocean,
        emotions,
        preferred_distance: preferred,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupsReport {
    pub schema_version: u32,
    pub label: String,
    pub config: PipelineConfig,
    pub groups: Vec<Group>,
    pub frame_groups: Vec<FrameGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OceanReport {
    pub schema_version: u32,
    pub label: String,
    pub config: PipelineConfig,
    pub per_person: BTreeMap<PersonId, PersonalityVector>,
    pub per_group: Vec<GroupPersonality>,
    pub per_frame: Vec<crate::ocean::FramePersonality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionsReport {
    pub schema_version: u32,
    pub label: String,
    pub config: PipelineConfig,
    #[serde(flatten)]
    pub emotions: EmotionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub schema_version: u32,
    pub label: String,
    pub config: PipelineConfig,
    #[serde(flatten)]
    pub distance: PreferredDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    #[serde(flatten)]
    pub summary: VideoSummary,
    pub preferred_distance: Option<f64>,
    pub group_count: usize,
    pub config: PipelineConfig,
}

impl Analysis {
    pub fn groups_report(&self) -> GroupsReport {
        GroupsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            label: self.label.clone(),
            config: self.config.clone(),
            groups: self.groups.clone(),
            frame_groups: self.frame_groups.clone(),
        }
    }

    pub fn ocean_report(&self) -> OceanReport {
        OceanReport {
            schema_version: REPORT_SCHEMA_VERSION,
            label: self.label.clone(),
            config: self.config.clone(),
            per_person: self.ocean.per_person.clone(),
            per_group: self.group_ocean.clone(),
            per_frame: self.ocean.per_frame.clone(),
        }
    }

    pub fn emotions_report(&self) -> EmotionsReport {
        EmotionsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            label: self.label.clone(),
            config: self.config.clone(),
            emotions: self.emotions.clone(),
        }
    }

    pub fn distance_report(&self) -> DistanceReport {
        DistanceReport {
            schema_version: REPORT_SCHEMA_VERSION,
            label: self.label.clone(),
            config: self.config.clone(),
            distance: self.preferred_distance.clone(),
        }
    }

    pub fn summary_report(&self) -> SummaryReport {
        SummaryReport {
            summary: self.summary.clone(),
            preferred_distance: self.preferred_distance.video_mean,
            group_count: self.groups.len(),
            config: self.config.clone(),
        }
    }
}
