//! Jurisdiction identification in three stages: marker text read from the
//! plate strips, HSV design scoring of the plate background, and a weighted
//! decision that can also take an external classifier's probabilities.

mod hsv;
mod markers;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use hsv::{hsv_scores, rgb_to_hsv, Design, DesignCatalog, Hsv, HsvRange, COLOR_BOOST};
pub use markers::{match_markers, normalize_text, MarkerCatalog, MIN_MARKER_CONFIDENCE};

use crate::raster::GrayRaster;
use crate::typography::DEFAULT_STATE_ID;

/// Which plate strip an OCR read came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strip {
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrRead {
    pub text: String,
    pub conf: f64,
    pub strip: Strip,
}

impl OcrRead {
    pub fn new(text: impl Into<String>, conf: f64, strip: Strip) -> Self {
        OcrRead {
            text: text.into(),
            conf: conf.clamp(0.0, 1.0),
            strip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionStage {
    Text,
    Color,
    Combined,
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDecision {
    pub state_id: String,
    pub confidence: f64,
    pub stage: DecisionStage,
}

impl StateDecision {
    pub fn default_decision(confidence: f64) -> Self {
        StateDecision {
            state_id: DEFAULT_STATE_ID.to_string(),
            confidence: confidence.clamp(0.0, 1.0),
            stage: DecisionStage::Default,
        }
    }
}

/// Stage-3 provider: per-state probabilities for a plate crop, or `None`
/// when no classifier is available.
pub trait StateClassifier: Send + Sync {
    fn probabilities(&self, plate: &GrayRaster) -> Option<BTreeMap<String, f64>>;
}

/// The default build has no classifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClassifier;

impl StateClassifier for NoClassifier {
    fn probabilities(&self, _plate: &GrayRaster) -> Option<BTreeMap<String, f64>> {
        None
    }
}

pub const COLOR_MARGIN: f64 = 0.15;
pub const COLOR_WEIGHT: f64 = 0.6;
pub const CLASSIFIER_WEIGHT: f64 = 0.4;
pub const COMBINED_MIN: f64 = 0.5;

/// Final decision. A text match wins outright; otherwise a clear HSV leader
/// (margin >= 0.15) decides; otherwise 0.6 * color + 0.4 * classifier must
/// reach 0.5, else the default typography is used.
pub fn decide(
    stage1: Option<StateDecision>,
    stage2: &BTreeMap<String, f64>,
    stage3: Option<&BTreeMap<String, f64>>,
) -> StateDecision {
    if let Some(d) = stage1 {
        return StateDecision {
            stage: DecisionStage::Text,
            confidence: d.confidence.clamp(0.0, 1.0),
            ..d
        };
    }
    let (top, margin) = leader(stage2);
    if let Some((state, score)) = top {
        if margin >= COLOR_MARGIN {
            return StateDecision {
                state_id: state.to_string(),
                confidence: score.clamp(0.0, 1.0),
                stage: DecisionStage::Color,
            };
        }
    }
    let combined: BTreeMap<&str, f64> = match stage3 {
        None => stage2.iter().map(|(k, &v)| (k.as_str(), v)).collect(),
        Some(s3) => {
            let mut m = BTreeMap::new();
            for k in stage2.keys().chain(s3.keys()) {
                let a = stage2.get(k).copied().unwrap_or(0.0);
                let b = s3.get(k).copied().unwrap_or(0.0);
                m.insert(k.as_str(), COLOR_WEIGHT * a + CLASSIFIER_WEIGHT * b);
            }
            m
        }
    };
    let best = combined
        .iter()
        .fold(None::<(&str, f64)>, |acc, (&k, &v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((k, v)),
        });
    match best {
        Some((state, score)) if score >= COMBINED_MIN => StateDecision {
            state_id: state.to_string(),
            confidence: score.clamp(0.0, 1.0),
            stage: DecisionStage::Combined,
        },
        Some((_, score)) => StateDecision::default_decision(score),
        None => StateDecision::default_decision(0.0),
    }
}

/// Highest-scoring entry (first in key order on ties) and its margin over
/// the runner-up; a single entry has margin equal to its score.
fn leader(scores: &BTreeMap<String, f64>) -> (Option<(&str, f64)>, f64) {
    let mut first: Option<(&str, f64)> = None;
    let mut second = 0.0f64;
    for (k, &v) in scores {
        match first {
            Some((_, fv)) if v > fv => {
                second = fv;
                first = Some((k, v));
            }
            Some(_) => second = second.max(v),
            None => first = Some((k, v)),
        }
    }
    let margin = first.map_or(0.0, |(_, v)| v - second);
    (first, margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn text_stage_wins_outright() {
        let s1 = StateDecision {
            state_id: "MI".into(),
            confidence: 0.92,
            stage: DecisionStage::Text,
        };
        let d = decide(Some(s1), &map(&[("TX", 1.0)]), None);
        assert_eq!(d.state_id, "MI");
        assert_eq!(d.stage, DecisionStage::Text);
        assert_eq!(d.confidence, 0.92);
    }

    #[test]
    fn clear_color_leader() {
        let d = decide(None, &map(&[("A", 0.6), ("B", 0.2), ("C", 0.2)]), None);
        assert_eq!((d.state_id.as_str(), d.stage), ("A", DecisionStage::Color));
    }

    #[test]
    fn weak_combination_falls_back_to_default() {
        let s2 = map(&[("A", 0.40), ("B", 0.35)]);
        let s3 = map(&[("A", 0.2), ("B", 0.7)]);
        let d = decide(None, &s2, Some(&s3));
        assert_eq!(d.stage, DecisionStage::Default);
        assert_eq!(d.state_id, DEFAULT_STATE_ID);
        // B combines to 0.6 * 0.35 + 0.4 * 0.7 = 0.49
        assert!((d.confidence - 0.49).abs() < 1e-12);
    }

    #[test]
    fn combined_stage_without_classifier_uses_color_alone() {
        let d = decide(None, &map(&[("A", 0.57), ("B", 0.43)]), None);
        assert_eq!((d.state_id.as_str(), d.stage), ("A", DecisionStage::Combined));
        let d = decide(None, &map(&[("A", 0.58), ("B", 0.42)]), None);
        assert_eq!((d.state_id.as_str(), d.stage), ("A", DecisionStage::Color));
    }

    #[test]
    fn leader_margin() {
        let empty = map(&[]);
        assert_eq!(leader(&empty), (None, 0.0));
        assert_eq!(leader(&map(&[("X", 0.3)])).1, 0.3);
        let three = map(&[("A", 0.2), ("B", 0.5), ("C", 0.3)]);
        let (top, m) = leader(&three);
        assert_eq!(top, Some(("B", 0.5)));
        assert!((m - 0.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn confidence_stays_in_unit_interval(
            a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, p in 0.0f64..1.0,
        ) {
            let total = a + b + c + 1e-9;
            let s2 = map(&[("A", a / total), ("B", b / total), ("C", c / total)]);
            let s3 = map(&[("A", p), ("C", 1.0 - p)]);
            for d in [decide(None, &s2, None), decide(None, &s2, Some(&s3))] {
                prop_assert!((0.0..=1.0).contains(&d.confidence));
            }
        }

        #[test]
        fn default_iff_no_stage_clears(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let total = a + b + 1e-9;
            let (na, nb) = (a / total, b / total);
            let s2 = map(&[("A", na), ("B", nb)]);
            let d = decide(None, &s2, None);
            let clears = (na - nb).abs() >= COLOR_MARGIN || na.max(nb) >= COMBINED_MIN;
            prop_assert_eq!(d.stage == DecisionStage::Default, !clears);
        }
    }
}
