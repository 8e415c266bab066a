//! Personality and emotion estimation from pedestrian trajectories.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`trajectory`] parses tracked positions and [`homography`] rectifies
//!    image coordinates onto the ground plane.
//! 2. [`features`] computes per-frame speed, heading, isolation,
//!    socialization and collectivity for every person, and [`groups`] finds
//!    social groups with pairwise proxemics rules.
//! 3. [`ocean`] answers 25 NEO PI-R style items from those features and
//!    aggregates them into the five OCEAN dimensions.
//! 4. [`emotion`] maps OCEAN signs onto Fear, Happiness, Sadness and Anger.
//!
//! [`analysis`] holds the dataset-level statistics, [`synth`] generates
//! deterministic scenes together with brute-force oracles, and [`pipeline`]
//! wires everything into a single report.

pub mod analysis;
pub mod emotion;
pub mod features;
pub mod groups;
pub mod homography;
pub mod ocean;
pub mod pipeline;
pub mod synth;
pub mod trajectory;

mod union_find;

pub use analysis::{Roi, VideoSummary};
pub use emotion::{EmotionMode, EmotionVector, RawEmotions};
pub use features::{FrameFeatures, ProxemicsConfig};
pub use groups::{Group, GroupRuleConfig};
pub use homography::Homography;
pub use ocean::{OceanMode, PersonalityVector};
pub use pipeline::{analyze, Analysis, PipelineConfig};
pub use trajectory::{PersonId, Point2, SceneDataset, Trajectory, Units};
