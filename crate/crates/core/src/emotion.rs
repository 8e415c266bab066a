//! Mapping from OCEAN dimensions to four OCC emotions.
//!
//! Each dimension is classed `+` (value >= 0.5) or `-`, and each class adds
//! -1, 0 or +1 to Fear, Happiness, Sadness and Anger.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ocean::PersonalityVector;

pub const SIGN_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum EmotionError {
    #[error("cannot average an empty group")]
    EmptyGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl Factor {
    pub const ALL: [Factor; 5] = [
        Factor::Openness,
        Factor::Conscientiousness,
        Factor::Extraversion,
        Factor::Agreeableness,
        Factor::Neuroticism,
    ];

    pub fn value(self, p: &PersonalityVector) -> f64 {
        p.to_array()[self as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Emotion {
    Fear,
    Happiness,
    Sadness,
    Anger,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Fear, Emotion::Happiness, Emotion::Sadness, Emotion::Anger];
}

/// Contribution table indexed `[factor][sign][emotion]`, sign 0 = plus,
/// emotions in Fear, Happiness, Sadness, Anger order.
pub const EMOTION_MAPPING: [[[i8; 4]; 2]; 5] = [
    // O+ / O-
    [[0, 0, 0, -1], [0, 0, 0, 1]],
    // C+ / C-
    [[-1, 0, 0, 0], [1, 0, 0, 0]],
    // E+ / E-
    [[-1, 1, -1, -1], [1, 0, 0, 0]],
    // A+ / A-
    [[0, 0, 0, -1], [0, 0, 0, 1]],
    // N+ / N-
    [[1, -1, 1, 1], [-1, 1, -1, -1]],
];

pub fn factor_sign(value: f64) -> FactorSign {
    if value >= SIGN_THRESHOLD {
        FactorSign::Plus
    } else {
        FactorSign::Minus
    }
}

pub fn contribution(factor: Factor, sign: FactorSign, emotion: Emotion) -> i8 {
    let s = match sign {
        FactorSign::Plus => 0,
        FactorSign::Minus => 1,
    };
    EMOTION_MAPPING[factor as usize][s][emotion as usize]
}

/// Integer emotion sums of the discrete mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawEmotions {
    pub fear: i32,
    pub happiness: i32,
    pub sadness: i32,
    pub anger: i32,
}

impl RawEmotions {
    pub fn get(&self, e: Emotion) -> i32 {
        match e {
            Emotion::Fear => self.fear,
            Emotion::Happiness => self.happiness,
            Emotion::Sadness => self.sadness,
            Emotion::Anger => self.anger,
        }
    }

    pub fn to_vector(self) -> EmotionVector {
        EmotionVector {
            fear: self.fear as f64,
            happiness: self.happiness as f64,
            sadness: self.sadness as f64,
            anger: self.anger as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionVector {
    pub fear: f64,
    pub happiness: f64,
    pub sadness: f64,
    pub anger: f64,
}

impl EmotionVector {
    pub fn to_array(self) -> [f64; 4] {
        [self.fear, self.happiness, self.sadness, self.anger]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            fear: v[0],
            happiness: v[1],
            sadness: v[2],
            anger: v[3],
        }
    }

    pub fn mean(vectors: &[EmotionVector]) -> Option<EmotionVector> {
        if vectors.is_empty() {
            return None;
        }
        let mut acc = [0.0; 4];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v.to_array()) {
                *a += x;
            }
        }
        Some(Self::from_array(acc.map(|a| a / vectors.len() as f64)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionMode {
    #[default]
    Discrete,
    /// Each contribution scaled by `2 |v - 0.5|`, so traits near the
    /// threshold barely count.
    Weighted,
}

pub fn map_emotions(p: &PersonalityVector) -> RawEmotions {
    let mut sums = [0i32; 4];
    for factor in Factor::ALL {
        let sign = factor_sign(factor.value(p));
        for (e, sum) in Emotion::ALL.iter().zip(sums.iter_mut()) {
            *sum += contribution(factor, sign, *e) as i32;
        }
    }
    RawEmotions {
        fear: sums[0],
        happiness: sums[1],
        sadness: sums[2],
        anger: sums[3],
    }
}

pub fn map_emotions_weighted(p: &PersonalityVector) -> EmotionVector {
    let mut sums = [0.0; 4];
    for factor in Factor::ALL {
        let v = factor.value(p);
        let weight = 2.0 * (v - SIGN_THRESHOLD).abs();
        let sign = factor_sign(v);
        for (e, sum) in Emotion::ALL.iter().zip(sums.iter_mut()) {
            *sum += contribution(factor, sign, *e) as f64 * weight;
        }
    }
    EmotionVector::from_array(sums)
}

pub fn emotion_scores(p: &PersonalityVector, mode: EmotionMode) -> EmotionVector {
    match mode {
        EmotionMode::Discrete => map_emotions(p).to_vector(),
        EmotionMode::Weighted => map_emotions_weighted(p),
    }
}

/// Per-emotion min-max over the given vectors; an emotion that never
/// varies maps to 0.5.
pub fn normalize_emotions(raw: &[EmotionVector]) -> Vec<EmotionVector> {
    let mut out = raw.to_vec();
    for e in 0..4 {
        let (lo, hi) = raw
            .iter()
            .map(|v| v.to_array()[e])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let flat = crate::ocean::is_flat(lo, hi);
        let range = hi - lo;
        for v in out.iter_mut() {
            let mut arr = v.to_array();
            arr[e] = if flat { 0.5 } else { (arr[e] - lo) / range };
            *v = EmotionVector::from_array(arr);
        }
    }
    out
}

pub fn group_emotion(members: &[EmotionVector]) -> Result<EmotionVector, EmotionError> {
    EmotionVector::mean(members).ok_or(EmotionError::EmptyGroup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(o: f64, c: f64, e: f64, a: f64, n: f64) -> PersonalityVector {
        PersonalityVector::from_array([o, c, e, a, n])
    }

    #[test]
    fn sign_threshold() {
        assert_eq!(factor_sign(0.5), FactorSign::Plus);
        assert_eq!(factor_sign(0.49), FactorSign::Minus);
        assert_eq!(factor_sign(1.0), FactorSign::Plus);
    }

    #[test]
    fn high_extraversion_contributions() {
        assert_eq!(contribution(Factor::Extraversion, factor_sign(0.9), Emotion::Happiness), 1);
        assert_eq!(contribution(Factor::Extraversion, factor_sign(0.9), Emotion::Anger), -1);
    }

    #[test]
    fn table_sums() {
        let r = map_emotions(&pv(0.9, 0.9, 0.9, 0.9, 0.1));
        assert_eq!((r.fear, r.happiness, r.sadness, r.anger), (-3, 2, -2, -4));
        let r = map_emotions(&pv(0.5, 0.5, 0.5, 0.5, 0.5));
        assert_eq!((r.fear, r.happiness, r.sadness, r.anger), (-1, 0, 0, -2));
    }

    #[test]
    fn table_has_forty_entries_in_range() {
        let n = EMOTION_MAPPING.iter().flatten().flatten().count();
        assert_eq!(n, 40);
        assert!(EMOTION_MAPPING
            .iter()
            .flatten()
            .flatten()
            .all(|v| (-1..=1).contains(v)));
    }

    #[test]
    fn normalize_examples() {
        let raw: Vec<EmotionVector> = [-3.0, 0.0, 3.0]
            .iter()
            .map(|&f| EmotionVector::from_array([f, 1.0, 0.0, 0.0]))
            .collect();
        let n = normalize_emotions(&raw);
        assert_eq!([n[0].fear, n[1].fear, n[2].fear], [0.0, 0.5, 1.0]);
        assert!(n.iter().all(|v| v.happiness == 0.5));

        let two = [EmotionVector::from_array([-1.0; 4]), EmotionVector::from_array([1.0; 4])];
        let n = normalize_emotions(&two);
        assert_eq!((n[0].anger, n[1].anger), (0.0, 1.0));
    }

    #[test]
    fn group_examples() {
        let a = EmotionVector::from_array([0.0, 0.0, 0.0, -1.0]);
        let b = EmotionVector::from_array([0.0, 0.0, 0.0, -3.0]);
        assert_eq!(group_emotion(&[a, b]).unwrap().anger, -2.0);
        assert_eq!(group_emotion(&[a, a]).unwrap(), a);
        let c = EmotionVector::from_array([0.0, 0.0, 0.0, 1.0]);
        assert_eq!(group_emotion(&[a, c]).unwrap().anger, 0.0);
        assert_eq!(group_emotion(&[]).unwrap_err(), EmotionError::EmptyGroup);
    }

    #[test]
    fn weighted_mode_scales_by_trait_strength() {
        let w = map_emotions_weighted(&pv(0.5, 0.5, 1.0, 0.5, 0.5));
        // only E contributes with full weight; the others sit on the threshold
        assert_eq!(w.to_array(), [-1.0, 1.0, -1.0, -1.0]);
        let d = map_emotions(&pv(0.5, 0.5, 1.0, 0.5, 0.5));
        assert_eq!(d.anger, -2);
    }
}
