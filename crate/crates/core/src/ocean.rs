//! OCEAN personality scoring.
//!
//! Each person-frame answers 25 NEO PI-R items through closed-form
//! equations over the frame features. Raw answers are rescaled per item to
//! the 0-4 response scale over the whole video, reverse-keyed items are
//! inverted (`4 - q`), and the items are summed into the five dimensions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{population_std, FeatureSet, FrameFeatures};
use crate::trajectory::PersonId;

pub const ITEM_COUNT: usize = 25;

/// Top of the item response scale ("strongly agree").
pub const ITEM_SCALE_MAX: f64 = 4.0;

/// Guard added to denominators of reciprocal items: `1 / (x + eps)`.
pub const RECIPROCAL_EPSILON: f64 = 1e-3;

/// Reverse-keyed items (1-based).
pub const INVERTED_ITEMS: [usize; 10] = [2, 4, 5, 6, 7, 8, 11, 15, 24, 25];

/// Items feeding each dimension (1-based), in O, C, E, A, N order.
pub const DIMENSION_ITEMS: [&[usize]; 5] = [
    &[2],
    &[1],
    &[3, 12, 14, 16, 17, 18, 19, 20, 21, 22, 23, 4, 5, 6, 7, 8, 11, 15],
    &[9, 10],
    &[13, 24, 25],
];

/// Share of the 25 items that each dimension uses, O, C, E, A, N.
pub const DIMENSION_SHARE: [f64; 5] = [0.04, 0.04, 0.72, 0.08, 0.12];

#[derive(Debug, Error, PartialEq)]
pub enum OceanError {
    #[error("person {0} is absent from every frame")]
    MissingPerson(PersonId),
    #[error("cannot average an empty group")]
    EmptyGroup,
}

/// How item sums become dimension scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OceanMode {
    /// Mean item score over the dimension's items, divided by 4.
    #[default]
    Normalized,
    /// Item sum divided by the dimension's item share, then min-max scaled
    /// to [0, 1] per dimension over the video.
    Literal,
}

/// Answers to the 25 items, stored 0-based; use [`ItemAnswers::item`] for
/// 1-based access.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemAnswers(pub [f64; ITEM_COUNT]);

impl ItemAnswers {
    pub fn item(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

fn reciprocal(x: f64) -> f64 {
    1.0 / (x + RECIPROCAL_EPSILON)
}

/// Raw item answers for one person-frame. `std_heading_change` is the
/// spread of the person's heading changes observed so far.
pub fn answer_frame(f: &FrameFeatures, std_heading_change: f64) -> ItemAnswers {
    let (s, alpha, iso, soc, col) = (f.speed, f.alpha, f.isolation, f.socialization, f.collectivity);
    let q14 = col + soc + reciprocal(alpha);
    let mut q = [0.0; ITEM_COUNT];
    q[0] = s + reciprocal(alpha);
    q[1] = alpha;
    for k in 3..=8 {
        q[k - 1] = iso;
    }
    q[8] = col;
    q[9] = col;
    q[10] = iso + std_heading_change;
    q[11] = s + alpha;
    q[12] = iso + reciprocal(col);
    q[13] = q14;
    q[14] = reciprocal(q14);
    for k in 16..=21 {
        q[k - 1] = soc;
    }
    for k in 22..=25 {
        q[k - 1] = soc + col;
    }
    ItemAnswers(q)
}

/// Raw answers for the frames of one person, in frame order. The heading
/// spread for item 11 is taken cumulatively over all frames up to the
/// current one.
pub fn answer_items(person_frames: &[&FrameFeatures]) -> Vec<ItemAnswers> {
    let mut changes = Vec::with_capacity(person_frames.len());
    person_frames
        .iter()
        .map(|f| {
            if let Some(c) = f.heading_change {
                changes.push(c);
            }
            answer_frame(f, population_std(&changes))
        })
        .collect()
}

/// Ranges at or below this fraction of the series magnitude are rounding
/// noise, and the series counts as constant.
pub const CONSTANT_RANGE_RTOL: f64 = 1e-9;

pub(crate) fn is_flat(lo: f64, hi: f64) -> bool {
    !(hi - lo > CONSTANT_RANGE_RTOL * (1.0 + lo.abs().max(hi.abs())))
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Per-item min-max scaling onto [0, 4]; an item that never varies (up to
/// rounding noise) maps to the scale midpoint 2.
pub fn normalize_items(raw: &[ItemAnswers]) -> Vec<ItemAnswers> {
    let mut out = raw.to_vec();
    for k in 0..ITEM_COUNT {
        let (lo, hi) = min_max(raw.iter().map(|q| q.0[k]));
        let flat = is_flat(lo, hi);
        let range = hi - lo;
        for q in &mut out {
            q.0[k] = if !flat {
                ITEM_SCALE_MAX * (q.0[k] - lo) / range
            } else {
                ITEM_SCALE_MAX / 2.0
            };
        }
    }
    out
}

pub fn invert_answer(q: f64) -> f64 {
    ITEM_SCALE_MAX - q
}

/// Applies `4 - q` to the reverse-keyed items; every other item is kept.
pub fn invert_items(answers: &ItemAnswers) -> ItemAnswers {
    let mut out = *answers;
    for k in INVERTED_ITEMS {
        out.0[k - 1] = invert_answer(out.0[k - 1]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PersonalityVector {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl PersonalityVector {
    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            openness: v[0],
            conscientiousness: v[1],
            extraversion: v[2],
            agreeableness: v[3],
            neuroticism: v[4],
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }

    pub fn mean(vectors: &[PersonalityVector]) -> Option<PersonalityVector> {
        if vectors.is_empty() {
            return None;
        }
        let mut acc = [0.0; 5];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v.to_array()) {
                *a += x;
            }
        }
        Some(Self::from_array(acc.map(|a| a / vectors.len() as f64)))
    }
}

/// Dimension scores from inverted answers (reverse-keyed items already
/// flipped). In [`OceanMode::Literal`] the result is unscaled; the video
/// pass in [`person_ocean`] rescales it.
pub fn aggregate_dimensions(adjusted: &ItemAnswers, mode: OceanMode) -> PersonalityVector {
    let mut dims = [0.0; 5];
    for (d, items) in DIMENSION_ITEMS.iter().enumerate() {
        let sum: f64 = items.iter().map(|&k| adjusted.item(k)).sum();
        dims[d] = match mode {
            OceanMode::Normalized => sum / (items.len() as f64 * ITEM_SCALE_MAX),
            OceanMode::Literal => sum / DIMENSION_SHARE[d],
        };
    }
    PersonalityVector::from_array(dims)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePersonality {
    pub person_id: PersonId,
    pub frame: i64,
    pub personality: PersonalityVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OceanScores {
    pub mode: OceanMode,
    /// Ordered by person id, then frame.
    pub per_frame: Vec<FramePersonality>,
    /// Across-frame mean per person.
    pub per_person: BTreeMap<PersonId, PersonalityVector>,
}

impl OceanScores {
    pub fn person(&self, person_id: PersonId) -> Result<&PersonalityVector, OceanError> {
        self.per_person
            .get(&person_id)
            .ok_or(OceanError::MissingPerson(person_id))
    }
}

fn rescale_dimensions(vectors: &mut [FramePersonality]) {
    for d in 0..5 {
        let (lo, hi) = min_max(vectors.iter().map(|v| v.personality.to_array()[d]));
        let flat = is_flat(lo, hi);
        let range = hi - lo;
        for v in vectors.iter_mut() {
            let mut arr = v.personality.to_array();
            arr[d] = if flat { 0.5 } else { (arr[d] - lo) / range };
            v.personality = PersonalityVector::from_array(arr);
        }
    }
}

/// Scores every person-frame of a video and averages per person.
///
/// Items are normalized over all person-frames of the video before
/// inversion and aggregation; the per-person vector is the mean of that
/// person's per-frame vectors.
pub fn person_ocean(features: &FeatureSet, mode: OceanMode) -> OceanScores {
    let by_person = features.by_person();
    let mut keys: Vec<(PersonId, i64)> = Vec::new();
    let mut raw: Vec<ItemAnswers> = Vec::new();
    for (&id, rows) in &by_person {
        keys.extend(rows.iter().map(|f| (id, f.frame)));
        raw.extend(answer_items(rows));
    }

    let normalized = normalize_items(&raw);
    let mut per_frame: Vec<FramePersonality> = keys
        .iter()
        .zip(&normalized)
        .map(|(&(person_id, frame), q)| FramePersonality {
            person_id,
            frame,
            personality: aggregate_dimensions(&invert_items(q), mode),
        })
        .collect();
    if mode == OceanMode::Literal {
        rescale_dimensions(&mut per_frame);
    }

    let mut grouped: BTreeMap<PersonId, Vec<PersonalityVector>> = BTreeMap::new();
    for fp in &per_frame {
        grouped.entry(fp.person_id).or_default().push(fp.personality);
    }
    let per_person = grouped
        .into_iter()
        .filter_map(|(id, vs)| PersonalityVector::mean(&vs).map(|m| (id, m)))
        .collect();

    OceanScores {
        mode,
        per_frame,
        per_person,
    }
}

/// Group personality as the per-dimension mean of its members.
pub fn group_ocean(members: &[PersonalityVector]) -> Result<PersonalityVector, OceanError> {
    PersonalityVector::mean(members).ok_or(OceanError::EmptyGroup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(speed: f64, alpha: f64, iso: f64, soc: f64, col: f64) -> FrameFeatures {
        FrameFeatures {
            person_id: 1,
            frame: 0,
            x: 0.0,
            y: 0.0,
            speed,
            alpha,
            heading: alpha,
            heading_change: None,
            isolation: iso,
            socialization: soc,
            collectivity: col,
            collectivity_mean: col,
            n_social: 0,
            rho: 1,
        }
    }

    #[test]
    fn item_partition_matches_dimension_shares() {
        let counts: Vec<usize> = DIMENSION_ITEMS.iter().map(|d| d.len()).collect();
        assert_eq!(counts, vec![1, 1, 18, 2, 3]);
        for (c, share) in counts.iter().zip(DIMENSION_SHARE) {
            assert!((*c as f64 / ITEM_COUNT as f64 - share).abs() < 1e-12);
        }
        let mut all: Vec<usize> = DIMENSION_ITEMS.iter().flat_map(|d| d.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (1..=25).collect::<Vec<_>>());
    }

    #[test]
    fn lone_walker_items() {
        let q = answer_frame(&frame(0.05, 0.0, 1.0, 0.0, 0.0), 0.0);
        for k in 16..=21 {
            assert_eq!(q.item(k), 0.0);
        }
        for k in 3..=8 {
            assert_eq!(q.item(k), 1.0);
        }
        assert_eq!(q.item(2), 0.0);
        assert!((q.item(1) - (0.05 + 1.0 / RECIPROCAL_EPSILON)).abs() < 1e-9);
    }

    #[test]
    fn lockstep_partner_items() {
        let q = answer_frame(&frame(0.05, 0.0, 1.0 / 3.6, 0.5, 1.0), 0.0);
        for k in 22..=25 {
            assert_eq!(q.item(k), 1.5);
        }
        assert_eq!(q.item(9), 1.0);
        assert_eq!(q.item(10), 1.0);
    }

    #[test]
    fn item_15_is_reciprocal_of_item_14() {
        for (alpha, soc, col) in [(0.0, 0.0, 0.0), (45.0, 0.3, 1.2), (170.0, 0.9, 4.0)] {
            let q = answer_frame(&frame(0.03, alpha, 0.5, soc, col), 2.0);
            assert!((q.item(15) - 1.0 / (q.item(14) + RECIPROCAL_EPSILON)).abs() < 1e-15);
        }
    }

    #[test]
    fn item_11_uses_cumulative_heading_spread() {
        let mut a = frame(0.05, 10.0, 0.5, 0.0, 0.0);
        let mut b = a;
        let mut c = a;
        a.heading_change = None;
        b.heading_change = Some(10.0);
        c.heading_change = Some(-10.0);
        let q = answer_items(&[&a, &b, &c]);
        assert_eq!(q[0].item(11), 0.5);
        assert_eq!(q[1].item(11), 0.5);
        assert_eq!(q[2].item(11), 0.5 + 10.0);
    }

    #[test]
    fn normalize_examples() {
        let mut raw = vec![ItemAnswers([0.0; 25]); 3];
        for (i, q) in raw.iter_mut().enumerate() {
            q.0[0] = i as f64;
            q.0[1] = 7.0;
        }
        let n = normalize_items(&raw);
        assert_eq!([n[0].0[0], n[1].0[0], n[2].0[0]], [0.0, 2.0, 4.0]);
        assert!(n.iter().all(|q| q.0[1] == 2.0));

        let two = vec![ItemAnswers([1.0; 25]), ItemAnswers([3.0; 25])];
        let n = normalize_items(&two);
        assert_eq!((n[0].0[5], n[1].0[5]), (0.0, 4.0));
    }

    #[test]
    fn rounding_noise_counts_as_constant() {
        let noisy = vec![ItemAnswers([0.05; 25]), ItemAnswers([0.05 + 1e-17; 25]), ItemAnswers([0.05000000000000002; 25])];
        assert!(normalize_items(&noisy).iter().all(|q| q.0.iter().all(|&v| v == 2.0)));
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(invert_answer(4.0), 0.0);
        assert_eq!(invert_answer(2.0), 2.0);
        assert_eq!(invert_answer(0.0), 4.0);
        let q = invert_items(&ItemAnswers([1.0; 25]));
        for k in 1..=25 {
            let expected = if INVERTED_ITEMS.contains(&k) { 3.0 } else { 1.0 };
            assert_eq!(q.item(k), expected);
        }
    }

    #[test]
    fn aggregate_extremes() {
        let top = aggregate_dimensions(&ItemAnswers([4.0; 25]), OceanMode::Normalized);
        assert_eq!(top.to_array(), [1.0; 5]);
        let bottom = aggregate_dimensions(&ItemAnswers([0.0; 25]), OceanMode::Normalized);
        assert_eq!(bottom.to_array(), [0.0; 5]);
    }

    #[test]
    fn extraversion_midpoint() {
        let mut q = ItemAnswers([0.0; 25]);
        for &k in DIMENSION_ITEMS[2] {
            q.0[k - 1] = 2.0;
        }
        let p = aggregate_dimensions(&q, OceanMode::Normalized);
        assert_eq!(p.extraversion, 0.5);
        assert_eq!(p.openness, 0.0);
    }

    #[test]
    fn literal_mode_divides_by_share() {
        let p = aggregate_dimensions(&ItemAnswers([1.0; 25]), OceanMode::Literal);
        assert!((p.openness - 25.0).abs() < 1e-12);
        assert!((p.extraversion - 25.0).abs() < 1e-12);
    }

    #[test]
    fn group_mean() {
        let a = PersonalityVector {
            openness: 0.2,
            ..Default::default()
        };
        let b = PersonalityVector {
            openness: 0.6,
            ..Default::default()
        };
        assert!((group_ocean(&[a, b]).unwrap().openness - 0.4).abs() < 1e-15);
        assert_eq!(group_ocean(&[a, a]).unwrap(), a);
        assert_eq!(group_ocean(&[]).unwrap_err(), OceanError::EmptyGroup);
    }

    #[test]
    fn missing_person() {
        let scores = person_ocean(
            &FeatureSet {
                frames: vec![],
                averages: vec![],
            },
            OceanMode::Normalized,
        );
        assert_eq!(scores.person(3).unwrap_err(), OceanError::MissingPerson(3));
    }
}
