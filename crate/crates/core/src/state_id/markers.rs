use std::collections::BTreeSet;
use std::path::Path;

use super::{DecisionStage, OcrRead, StateDecision};
use crate::error::{read_text, Error, Result};

pub const MIN_MARKER_CONFIDENCE: f64 = 0.6;
/// Shortest phrase prefix accepted as a partial match.
const MIN_PARTIAL_LEN: usize = 4;

const BUILTIN_MARKERS: &str = include_str!("../../data/markers.tsv");

/// Phrase to jurisdiction dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerCatalog {
    entries: Vec<(String, String)>,
}

impl MarkerCatalog {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MARKERS).expect("shipped marker catalog is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// One `phrase<TAB>state_id` per line; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = raw.split('\t');
            let (phrase, state) = match (cols.next(), cols.next(), cols.next()) {
                (Some(p), Some(s), None) => (normalize_text(p), s.trim().to_ascii_uppercase()),
                _ => return Err(Error::parse(line_no, "expected phrase<TAB>state_id")),
            };
            if phrase.is_empty() || state.is_empty() {
                return Err(Error::parse(line_no, "empty phrase or state"));
            }
            if !seen.insert((phrase.clone(), state.clone())) {
                return Err(Error::parse(line_no, format!("duplicate marker {phrase:?}")));
            }
            entries.push((phrase, state));
        }
        if entries.is_empty() {
            return Err(Error::parse(1, "marker catalog has no entries"));
        }
        Ok(MarkerCatalog { entries })
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Uppercases and collapses runs of whitespace to one space.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_uppercase())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
struct Hit<'a> {
    len: usize,
    conf: f64,
    state: &'a str,
    phrase: &'a str,
}

impl Hit<'_> {
    /// Longer phrase first, then higher confidence, then a fixed order on
    /// state and phrase so the result never depends on read order.
    fn beats(&self, other: &Hit) -> bool {
        (self.len, self.conf)
            .partial_cmp(&(other.len, other.conf))
            .map(|o| match o {
                std::cmp::Ordering::Equal => (other.state, other.phrase) > (self.state, self.phrase),
                o => o.is_gt(),
            })
            .unwrap_or(false)
    }
}

/// Stage 1. Full phrase matches take precedence; truncated reads match a
/// phrase prefix of at least four characters only when nothing matched in
/// full. The winning read must have confidence >= 0.6.
pub fn match_markers(reads: &[OcrRead], cat: &MarkerCatalog) -> Option<StateDecision> {
    let texts: Vec<(String, f64)> = reads.iter().map(|r| (normalize_text(&r.text), r.conf)).collect();
    let pick = |partial: bool| -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (text, conf) in &texts {
            for (phrase, state) in &cat.entries {
                let len = if partial {
                    partial_len(text, phrase)
                } else if text.contains(phrase.as_str()) {
                    Some(phrase.chars().count())
                } else {
                    None
                };
                if let Some(len) = len {
                    let hit = Hit {
                        len,
                        conf: *conf,
                        state,
                        phrase,
                    };
                    if best.as_ref().is_none_or(|b| hit.beats(b)) {
                        best = Some(hit);
                    }
                }
            }
        }
        best
    };
    let hit = pick(false).or_else(|| pick(true))?;
    (hit.conf >= MIN_MARKER_CONFIDENCE).then(|| StateDecision {
        state_id: hit.state.to_string(),
        confidence: hit.conf.clamp(0.0, 1.0),
        stage: DecisionStage::Text,
    })
}

/// Longest proper prefix of `phrase` (>= 4 chars) occurring in `text` as a
/// whole-word run, i.e. bounded by spaces or the ends of the text.
fn partial_len(text: &str, phrase: &str) -> Option<usize> {
    let chars: Vec<char> = phrase.chars().collect();
    let padded = format!(" {text} ");
    (MIN_PARTIAL_LEN..chars.len()).rev().find(|&n| {
        let prefix: String = chars[..n].iter().collect();
        padded.contains(&format!(" {prefix} "))
    })
}

#[cfg(test)]
mod tests {
    use super::super::Strip;
    use super::*;
    use proptest::prelude::*;

    fn read(t: &str, c: f64) -> OcrRead {
        OcrRead::new(t, c, Strip::Top)
    }

    #[test]
    fn longer_phrase_takes_priority() {
        let cat = MarkerCatalog::builtin();
        let d = match_markers(&[read("PURE MICHIGAN", 0.92), read("MICHIGAN", 0.80)], &cat).unwrap();
        assert_eq!(d.state_id, "MI");
        assert_eq!(d.confidence, 0.92);
        assert_eq!(d.stage, DecisionStage::Text);
    }

    #[test]
    fn low_confidence_is_rejected() {
        let cat = MarkerCatalog::builtin();
        assert!(match_markers(&[read("MICHIGAN", 0.55)], &cat).is_none());
        assert!(match_markers(&[], &cat).is_none());
    }

    #[test]
    fn normalization_ignores_case_and_spacing() {
        let cat = MarkerCatalog::builtin();
        let d = match_markers(&[read("  lone   star\tstate ", 0.7)], &cat).unwrap();
        assert_eq!(d.state_id, "TX");
    }

    #[test]
    fn partial_match_only_without_full_match() {
        let cat = MarkerCatalog::parse("OKLAHOMA\tOK\nTEXAS\tTX\n").unwrap();
        let d = match_markers(&[read("OKLAH", 0.8)], &cat).unwrap();
        assert_eq!(d.state_id, "OK");
        let d = match_markers(&[read("OKLAH", 0.9), read("TEXAS", 0.7)], &cat).unwrap();
        assert_eq!(d.state_id, "TX");
        // three characters are not enough, and prefixes must end on a word
        assert!(match_markers(&[read("OKL", 0.9)], &cat).is_none());
        assert!(match_markers(&[read("OKLAHX", 0.9)], &cat).is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match MarkerCatalog::parse("# c\nMICHIGAN\tMI\nbroken line\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(MarkerCatalog::parse("A\tX\na\tx\n").is_err());
        assert!(MarkerCatalog::parse("").is_err());
    }

    #[test]
    fn builtin_catalog_is_normalized() {
        let cat = MarkerCatalog::builtin();
        assert!(cat.len() > 30);
        for (p, _) in cat.entries() {
            assert_eq!(p, &normalize_text(p));
        }
    }

    proptest! {
        #[test]
        fn invariant_to_read_order(
            picks in proptest::collection::vec((0usize..6, 0.0f64..1.0), 0..6),
            rot in 0usize..6,
        ) {
            let pool = ["PURE MICHIGAN", "MICHIGAN", "TEXAS", "GARDEN STATE", "OKLAH", "NOISE"];
            let cat = MarkerCatalog::builtin();
            let reads: Vec<OcrRead> = picks.iter().map(|&(i, c)| read(pool[i], c)).collect();
            let mut rotated = reads.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            let mut reversed = reads.clone();
            reversed.reverse();
            let a = match_markers(&reads, &cat);
            prop_assert_eq!(&a, &match_markers(&rotated, &cat));
            prop_assert_eq!(&a, &match_markers(&reversed, &cat));
        }
    }
}
