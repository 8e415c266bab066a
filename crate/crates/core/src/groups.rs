//! Social group detection from pairwise proxemics rules.
//!
//! Two agents form a pair when they are close, share a heading and walk at
//! nearly the same speed. Pairs sharing a member are merged transitively,
//! so per-frame groups are the connected components of the pair graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{orientation_difference, FrameAgent, FrameFeatures, FrameState, SpatialGrid};
use crate::trajectory::{PersonId, Point2, STILL_EPSILON};
use crate::union_find::DisjointSet;

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("invalid group rule parameter `{0}`")]
    InvalidConfig(&'static str),
    #[error("a group needs at least two members, got {0}")]
    TooSmall(usize),
    #[error("group members are never present in the same frame")]
    NeverCoPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRuleConfig {
    /// meters
    pub max_distance: f64,
    /// degrees
    pub max_orientation_diff: f64,
    /// Allowed speed difference as a fraction of the faster speed.
    pub speed_fraction: f64,
    /// A member set is a video-level group when it is grouped together in at
    /// least this fraction of the frames where all members are present.
    pub min_together_fraction: f64,
}

impl Default for GroupRuleConfig {
    fn default() -> Self {
        Self {
            max_distance: 1.2,
            max_orientation_diff: 15.0,
            speed_fraction: 0.05,
            min_together_fraction: 0.5,
        }
    }
}

impl GroupRuleConfig {
    pub fn validate(&self) -> Result<(), GroupError> {
        for (name, v) in [
            ("max_distance", self.max_distance),
            ("max_orientation_diff", self.max_orientation_diff),
            ("speed_fraction", self.speed_fraction),
            ("min_together_fraction", self.min_together_fraction),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GroupError::InvalidConfig(name));
            }
        }
        if self.min_together_fraction > 1.0 {
            return Err(GroupError::InvalidConfig("min_together_fraction"));
        }
        Ok(())
    }
}

/// The three pairwise rules: distance, orientation and relative speed.
/// Two standing agents pass the speed rule.
pub fn pair_test(a: &FrameAgent, b: &FrameAgent, config: &GroupRuleConfig) -> bool {
    if a.position.distance(b.position) > config.max_distance {
        return false;
    }
    if orientation_difference(a.heading, b.heading) > config.max_orientation_diff {
        return false;
    }
    if a.speed < STILL_EPSILON && b.speed < STILL_EPSILON {
        return true;
    }
    (a.speed - b.speed).abs() < config.speed_fraction * a.speed.max(b.speed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGroup {
    pub frame: i64,
    /// Sorted ascending.
    pub members: Vec<PersonId>,
}

/// Per-frame groups, ordered by smallest member id.
pub fn detect_groups(state: &FrameState, config: &GroupRuleConfig) -> Vec<FrameGroup> {
    let agents = &state.agents;
    let grid = SpatialGrid::new(agents.iter().map(|a| a.position), config.max_distance);
    let mut sets = DisjointSet::new(agents.len());
    for (i, a) in agents.iter().enumerate() {
        for j in grid.candidates(a.position) {
            if j > i && pair_test(a, &agents[j], config) {
                sets.union(i, j);
            }
        }
    }
    sets.components(2)
        .into_iter()
        .map(|c| {
            let mut members: Vec<PersonId> = c.into_iter().map(|i| agents[i].person_id).collect();
            members.sort_unstable();
            FrameGroup {
                frame: state.frame,
                members,
            }
        })
        .collect()
}

pub fn detect_all_groups(states: &[FrameState], config: &GroupRuleConfig) -> Vec<FrameGroup> {
    states
        .iter()
        .flat_map(|s| detect_groups(s, config))
        .collect()
}

/// Video-level group with its averaged motion statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub group_id: usize,
    pub n_g: usize,
    pub members: Vec<PersonId>,
    /// m/frame
    pub mean_speed: f64,
    /// degrees
    pub mean_alpha: f64,
    /// Mean pairwise member distance, meters.
    pub mean_distance: f64,
    /// Frames in which all members are present.
    pub frames_copresent: usize,
    /// Frames in which all members belong to the same detected group.
    pub frames_together: usize,
}

fn mean_pairwise_distance(points: &[Point2]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sum += points[i].distance(points[j]);
            n += 1;
        }
    }
    sum / n as f64
}

/// Averages speed and heading over members and the frames where all
/// members are present; `mean_distance` is the per-frame mean pairwise
/// distance averaged over those frames.
pub fn group_stats(
    group_id: usize,
    members: &[PersonId],
    frames: &[FrameFeatures],
) -> Result<Group, GroupError> {
    if members.len() < 2 {
        return Err(GroupError::TooSmall(members.len()));
    }
    let mut members = members.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.len() < 2 {
        return Err(GroupError::TooSmall(members.len()));
    }

    let mut by_frame: BTreeMap<i64, Vec<&FrameFeatures>> = BTreeMap::new();
    for f in frames.iter().filter(|f| members.binary_search(&f.person_id).is_ok()) {
        by_frame.entry(f.frame).or_default().push(f);
    }

    let (mut speed, mut alpha, mut samples) = (0.0, 0.0, 0usize);
    let (mut distance, mut copresent) = (0.0, 0usize);
    for rows in by_frame.values().filter(|rows| rows.len() == members.len()) {
        for f in rows {
            speed += f.speed;
            alpha += f.alpha;
            samples += 1;
        }
        let points: Vec<Point2> = rows.iter().map(|f| Point2::new(f.x, f.y)).collect();
        distance += mean_pairwise_distance(&points);
        copresent += 1;
    }
    if copresent == 0 {
        return Err(GroupError::NeverCoPresent);
    }

    Ok(Group {
        group_id,
        n_g: members.len(),
        members,
        mean_speed: speed / samples as f64,
        mean_alpha: alpha / samples as f64,
        mean_distance: distance / copresent as f64,
        frames_copresent: copresent,
        frames_together: 0,
    })
}

/// Promotes per-frame groups to video-level groups.
///
/// Every distinct per-frame member set is a candidate. A candidate is kept
/// when its members are grouped together in at least
/// `min_together_fraction` of the frames where all of them are present.
/// Overlapping candidates are resolved greedily, larger sets first, then by
/// number of frames together, then by member ids; the result is disjoint.
pub fn video_groups(
    frame_groups: &[FrameGroup],
    states: &[FrameState],
    frames: &[FrameFeatures],
    config: &GroupRuleConfig,
) -> Result<Vec<Group>, GroupError> {
    config.validate()?;
    let present: BTreeMap<i64, BTreeSet<PersonId>> = states
        .iter()
        .map(|s| (s.frame, s.agents.iter().map(|a| a.person_id).collect()))
        .collect();
    let mut groups_by_frame: BTreeMap<i64, Vec<&FrameGroup>> = BTreeMap::new();
    for g in frame_groups {
        groups_by_frame.entry(g.frame).or_default().push(g);
    }
    let candidates: BTreeSet<&Vec<PersonId>> = frame_groups.iter().map(|g| &g.members).collect();

    let mut scored: Vec<(&Vec<PersonId>, usize, usize)> = Vec::new();
    for cand in candidates {
        let copresent = present
            .values()
            .filter(|p| cand.iter().all(|id| p.contains(id)))
            .count();
        let together = groups_by_frame
            .values()
            .filter(|gs| {
                gs.iter()
                    .any(|g| cand.iter().all(|id| g.members.binary_search(id).is_ok()))
            })
            .count();
        if copresent > 0 && together as f64 >= config.min_together_fraction * copresent as f64 {
            scored.push((cand, together, copresent));
        }
    }
    scored.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then(b.1.cmp(&a.1))
            .then(a.0.cmp(b.0))
    });

    let mut taken: BTreeSet<PersonId> = BTreeSet::new();
    let mut chosen: Vec<(&Vec<PersonId>, usize)> = Vec::new();
    for (members, together, _) in scored {
        if members.iter().any(|id| taken.contains(id)) {
            continue;
        }
        taken.extend(members.iter().copied());
        chosen.push((members, together));
    }
    chosen.sort_by(|a, b| a.0.cmp(b.0));

    chosen
        .into_iter()
        .enumerate()
        .map(|(k, (members, together))| {
            let mut g = group_stats(k + 1, members, frames)?;
            g.frames_together = together;
            Ok(g)
        })
        .collect()
}
