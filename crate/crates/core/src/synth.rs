//! Deterministic synthetic scenes and brute-force reference implementations.
//!
//! The oracles here evaluate every pair directly, with no spatial index and
//! no union-find, so they can be compared against the optimized code paths.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FrameFeatures, FrameState, ProxemicsConfig};
use crate::groups::GroupRuleConfig;
use crate::trajectory::{
    DatasetMeta, PersonId, Point2, Sample, SceneDataset, Trajectory, Units, STILL_EPSILON,
};

/// Centerline length of the corridor loop, meters.
pub const CORRIDOR_LENGTH: f64 = 17.3;
/// Width of the single-file passageway, meters.
pub const CORRIDOR_WIDTH: f64 = 0.8;
/// Closest two walkers can be placed along the corridor, meters.
pub const MIN_BODY_SPACING: f64 = 0.3;

pub const SYNTH_FRAME_RATE: f64 = 25.0;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("{n} walkers do not fit on the corridor (capacity {capacity})")]
    Infeasible { n: usize, capacity: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// One person walking straight along +x.
    LoneWalker,
    /// Two people side by side, `spacing` apart, same velocity.
    LockstepPair,
    /// `n` people in a square formation with `spacing` between rows,
    /// positions jittered by the seed, all with the same velocity.
    Cluster,
    /// `n` walkers in single file at `CORRIDOR_LENGTH / n` spacing: the
    /// corridor loop unrolled into a straight lane.
    CorridorLoop,
}

impl std::str::FromStr for ScenarioKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lone_walker" => Ok(Self::LoneWalker),
            "lockstep_pair" => Ok(Self::LockstepPair),
            "cluster" => Ok(Self::Cluster),
            "corridor_loop" => Ok(Self::CorridorLoop),
            other => Err(SynthError::InvalidSpec(format!("unknown scenario kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    /// meters
    pub spacing: f64,
    /// m/frame
    pub speed: f64,
    pub frames: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n: usize) -> Self {
        Self {
            kind,
            n,
            spacing: 1.0,
            speed: 0.05,
            frames: 100,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n == 0 {
            return Err(SynthError::InvalidSpec("n must be at least 1".into()));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(SynthError::InvalidSpec("spacing must be positive".into()));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(SynthError::InvalidSpec("speed must be non-negative".into()));
        }
        if self.frames < 2 {
            return Err(SynthError::InvalidSpec("need at least 2 frames".into()));
        }
        Ok(())
    }
}

fn straight_line(person_id: PersonId, start: Point2, velocity: Point2, frames: usize) -> Trajectory {
    Trajectory {
        person_id,
        samples: (0..frames)
            .map(|f| Sample {
                frame: f as i64,
                position: Point2::new(
                    start.x + velocity.x * f as f64,
                    start.y + velocity.y * f as f64,
                ),
            })
            .collect(),
    }
}

fn meta(label: String) -> DatasetMeta {
    DatasetMeta {
        frame_rate: SYNTH_FRAME_RATE,
        units: Units::WorldMeters,
        label,
    }
}

pub fn corridor_capacity() -> usize {
    (CORRIDOR_LENGTH / MIN_BODY_SPACING).floor() as usize
}

pub fn generate(spec: &ScenarioSpec) -> Result<SceneDataset, SynthError> {
    spec.validate()?;
    let v = Point2::new(spec.speed, 0.0);
    let trajectories = match spec.kind {
        ScenarioKind::LoneWalker => vec![straight_line(1, Point2::new(0.0, 0.0), v, spec.frames)],
        ScenarioKind::LockstepPair => vec![
            straight_line(1, Point2::new(0.0, 0.0), v, spec.frames),
            straight_line(2, Point2::new(0.0, spec.spacing), v, spec.frames),
        ],
        ScenarioKind::Cluster => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let cols = (spec.n as f64).sqrt().ceil() as usize;
            let jitter = 0.1 * spec.spacing;
            (0..spec.n)
                .map(|k| {
                    let start = Point2::new(
                        (k % cols) as f64 * spec.spacing + rng.gen_range(-jitter..=jitter),
                        (k / cols) as f64 * spec.spacing + rng.gen_range(-jitter..=jitter),
                    );
                    straight_line(k as PersonId + 1, start, v, spec.frames)
                })
                .collect()
        }
        ScenarioKind::CorridorLoop => {
            let spacing = CORRIDOR_LENGTH / spec.n as f64;
            if spacing < MIN_BODY_SPACING {
                return Err(SynthError::Infeasible {
                    n: spec.n,
                    capacity: corridor_capacity(),
                });
            }
            (0..spec.n)
                .map(|k| {
                    let start = Point2::new(k as f64 * spacing, CORRIDOR_WIDTH / 2.0);
                    straight_line(k as PersonId + 1, start, v, spec.frames)
                })
                .collect()
        }
    };
    let label = match spec.kind {
        ScenarioKind::LoneWalker => "synthetic-lone_walker".to_string(),
        ScenarioKind::LockstepPair => "synthetic-lockstep_pair".to_string(),
        ScenarioKind::Cluster => format!("synthetic-cluster-n{}", spec.n),
        ScenarioKind::CorridorLoop => format!("synthetic-corridor_loop-n{}", spec.n),
    };
    SceneDataset::new(meta(label), trajectories)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Random scene for oracle comparisons: 2..=`max_persons` people with
/// drifting headings, some of them walking next to an earlier person, some
/// standing, with staggered entry and exit frames.
pub fn random_scene(seed: u64, max_persons: usize, frames: usize) -> SceneDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_persons.max(2));

    struct Walker {
        start: Point2,
        heading: f64,
        speed: f64,
    }
    let mut walkers: Vec<Walker> = Vec::with_capacity(n);
    for k in 0..n {
        let w = if k > 0 && rng.gen_bool(0.5) {
            let lead = &walkers[rng.gen_range(0..k)];
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let dist = rng.gen_range(0.4..1.4);
            Walker {
                start: Point2::new(lead.start.x + dist * angle.cos(), lead.start.y + dist * angle.sin()),
                heading: lead.heading + rng.gen_range(-12.0..12.0),
                speed: lead.speed * rng.gen_range(0.96..1.04),
            }
        } else {
            Walker {
                start: Point2::new(rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0)),
                heading: rng.gen_range(-180.0..180.0),
                speed: if rng.gen_bool(0.08) { 0.0 } else { rng.gen_range(0.02..0.07) },
            }
        };
        walkers.push(w);
    }

    let trajectories = walkers
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let first = rng.gen_range(0..=frames / 4);
            let last = rng.gen_range((3 * frames / 4).max(first + 1)..frames.max(first + 2));
            let mut pos = w.start;
            let mut heading = w.heading;
            let samples = (first..=last)
                .map(|f| {
                    let s = Sample {
                        frame: f as i64,
                        position: pos,
                    };
                    heading += rng.gen_range(-3.0..3.0);
                    let r: f64 = heading.to_radians();
                    pos = Point2::new(pos.x + w.speed * r.cos(), pos.y + w.speed * r.sin());
                    s
                })
                .collect();
            Trajectory {
                person_id: k as PersonId + 1,
                samples,
            }
        })
        .collect();
    SceneDataset::new(meta(format!("random-{seed}")), trajectories)
        .expect("generated ids are unique")
}

/// A 4-person lockstep cluster walking along +x, plus 4 lone wanderers far
/// from everyone that turn erratically.
pub fn mixed_scene(seed: u64, frames: usize) -> SceneDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = Point2::new(0.04, 0.0);
    let mut trajectories: Vec<Trajectory> = [(0.0, 0.0), (0.8, 0.0), (0.0, 0.8), (0.8, 0.8)]
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| straight_line(k as PersonId + 1, Point2::new(x, y), v, frames))
        .collect();

    for (k, &(x, y)) in [(0.0, 14.0), (0.0, -14.0), (-14.0, 0.0), (16.0, 0.0)]
        .iter()
        .enumerate()
    {
        let mut pos = Point2::new(x, y);
        let mut heading: f64 = rng.gen_range(-180.0..180.0);
        let samples = (0..frames)
            .map(|f| {
                let s = Sample {
                    frame: f as i64,
                    position: pos,
                };
                heading += rng.gen_range(-40.0..40.0);
                let speed = rng.gen_range(0.02..0.06);
                let r = heading.to_radians();
                pos = Point2::new(pos.x + speed * r.cos(), pos.y + speed * r.sin());
                s
            })
            .collect();
        trajectories.push(Trajectory {
            person_id: 5 + k as PersonId,
            samples,
        });
    }
    SceneDataset::new(meta(format!("mixed-{seed}")), trajectories).expect("unique ids")
}

/// Direct O(n^2) evaluation of the per-frame features.
pub fn oracle_features(state: &FrameState, config: &ProxemicsConfig) -> Vec<FrameFeatures> {
    let agents = &state.agents;
    let rho = agents.len();
    let mut out = Vec::with_capacity(rho);
    for i in 0..rho {
        let a = &agents[i];
        let mut n_social = 0usize;
        let mut dist_sum = 0.0;
        let mut coll = 0.0;
        for j in 0..rho {
            if j == i {
                continue;
            }
            let b = &agents[j];
            let dx = a.position.x - b.position.x;
            let dy = a.position.y - b.position.y;
            let d = (dx * dx + dy * dy).sqrt();
            if d > config.d_hall {
                continue;
            }
            n_social += 1;
            dist_sum += d;
            let ds = (a.speed - b.speed).abs();
            let mut dh = (a.heading - b.heading).abs() % 360.0;
            if dh > 180.0 {
                dh = 360.0 - dh;
            }
            let w = ds * config.w1 + dh.to_radians() * config.w2;
            coll += config.gamma * (-config.beta * w * w).exp();
        }
        let (isolation, socialization, mean_coll) = if n_social == 0 {
            (1.0, 0.0, 0.0)
        } else {
            (
                dist_sum / n_social as f64 / config.d_hall,
                n_social as f64 / rho as f64,
                coll / n_social as f64,
            )
        };
        out.push(FrameFeatures {
            person_id: a.person_id,
            frame: state.frame,
            x: a.position.x,
            y: a.position.y,
            speed: a.speed,
            alpha: a.alpha,
            heading: a.heading,
            heading_change: a.heading_change,
            isolation,
            socialization,
            collectivity: coll,
            collectivity_mean: mean_coll,
            n_social,
            rho,
        });
    }
    out
}

/// Partition by exhaustive pair tests, then repeatedly merging any two
/// groups that share a member until all groups are disjoint.
pub fn oracle_groups(state: &FrameState, config: &GroupRuleConfig) -> Vec<Vec<PersonId>> {
    let agents = &state.agents;
    let mut groups: Vec<BTreeSet<PersonId>> = Vec::new();
    for i in 0..agents.len() {
        for j in i + 1..agents.len() {
            let (a, b) = (&agents[i], &agents[j]);
            let dx = a.position.x - b.position.x;
            let dy = a.position.y - b.position.y;
            let close = (dx * dx + dy * dy).sqrt() <= config.max_distance;
            let mut dh = (a.heading - b.heading).abs() % 360.0;
            if dh > 180.0 {
                dh = 360.0 - dh;
            }
            let aligned = dh <= config.max_orientation_diff;
            let both_still = a.speed < STILL_EPSILON && b.speed < STILL_EPSILON;
            let similar = both_still
                || (a.speed - b.speed).abs() < config.speed_fraction * a.speed.max(b.speed);
            if close && aligned && similar {
                groups.push([a.person_id, b.person_id].into_iter().collect());
            }
        }
    }

    loop {
        let mut merged = false;
        'search: for x in 0..groups.len() {
            for y in x + 1..groups.len() {
                if !groups[x].is_disjoint(&groups[y]) {
                    let other = groups.remove(y);
                    groups[x].extend(other);
                    merged = true;
                    break 'search;
                }
            }
        }
        if !merged {
            break;
        }
    }

    let mut out: Vec<Vec<PersonId>> = groups.into_iter().map(|g| g.into_iter().collect()).collect();
    out.sort();
    out
}
