//! Per-jurisdiction plate typography: character height, stroke width and pitch.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};
use crate::state_id::{DecisionStage, StateDecision};

/// Character height used when the issuing state is unknown (national average).
pub const DEFAULT_CHAR_HEIGHT_M: f64 = 0.0651;
pub const DEFAULT_STATE_ID: &str = "DEFAULT";

/// Shipped state table.
pub const BUILTIN_STATE_TABLE: &str = include_str!("../data/states.tsv");

/// Physical typography of one jurisdiction's plates, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub state_id: String,
    /// Character height.
    pub char_height_m: f64,
    /// Stroke width.
    pub stroke_m: f64,
    /// Center-to-center character pitch.
    pub gap_m: f64,
    /// Entry not backed by a published measurement.
    pub provisional: bool,
}

impl StateSpec {
    pub fn new(state_id: impl Into<String>, char_height_m: f64, fractions: TypographyFractions) -> Self {
        StateSpec {
            state_id: state_id.into(),
            char_height_m,
            stroke_m: char_height_m * fractions.stroke,
            gap_m: char_height_m * fractions.gap,
            provisional: false,
        }
    }

    pub fn default_spec(fractions: TypographyFractions) -> Self {
        StateSpec::new(DEFAULT_STATE_ID, DEFAULT_CHAR_HEIGHT_M, fractions)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.char_height_m;
        if !(0.05..=0.08).contains(&h) {
            return Err(Error::invalid(format!(
                "{}: character height {h} m outside [0.05, 0.08]",
                self.state_id
            )));
        }
        if !(self.stroke_m > 0.0 && self.stroke_m < h) {
            return Err(Error::invalid(format!(
                "{}: stroke width must be in (0, H_s)",
                self.state_id
            )));
        }
        if !(self.gap_m > 0.0 && self.gap_m < 3.0 * h) {
            return Err(Error::invalid(format!(
                "{}: gap must be in (0, 3 H_s)",
                self.state_id
            )));
        }
        Ok(())
    }
}

/// Stroke width and pitch as fractions of character height, used where a
/// table row leaves them unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypographyFractions {
    pub stroke: f64,
    pub gap: f64,
}

impl Default for TypographyFractions {
    fn default() -> Self {
        TypographyFractions {
            stroke: 1.0 / 6.0,
            gap: 0.5,
        }
    }
}

/// Lookup table from state id to typography, always containing a default row.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTable {
    specs: BTreeMap<String, StateSpec>,
    default: StateSpec,
    /// Decisions below this confidence resolve to the default row.
    pub min_confidence: f64,
}

impl StateTable {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STATE_TABLE, TypographyFractions::default())
            .expect("shipped state table is valid")
    }

    pub fn load(path: &Path, fractions: TypographyFractions) -> Result<Self> {
        Self::parse(&read_text(path)?, fractions)
    }

    /// Parses the columnar table format:
    ///
    /// ```text
    /// state_id  H_s_mm  S_s_mm  G_s_mm  provisional
    /// MI        72.0    12.0    36.0    no
    /// XX        65.1    -       -       yes
    /// ```
    ///
    /// Columns are whitespace separated, `-` in the stroke or gap column falls
    /// back to `fractions`, `#` starts a comment. A missing `DEFAULT` row is
    /// synthesized from the 65.1 mm national average.
    pub fn parse(text: &str, fractions: TypographyFractions) -> Result<Self> {
        let mut specs = BTreeMap::new();
        let mut header_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if !header_seen {
                header_seen = true;
                let expected = ["state_id", "H_s_mm", "S_s_mm", "G_s_mm", "provisional"];
                if cols.len() != expected.len()
                    || cols.iter().zip(expected).any(|(a, b)| !a.eq_ignore_ascii_case(b))
                {
                    return Err(Error::parse(
                        line_no,
                        "expected header: state_id H_s_mm S_s_mm G_s_mm provisional",
                    ));
                }
                continue;
            }
            if cols.len() != 5 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 5 columns, found {}", cols.len()),
                ));
            }
            let mm = |s: &str, what: &str| -> Result<f64> {
                // shifting the exponent in text keeps 65.1 mm == 0.0651 m exactly
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .and_then(|_| format!("{s}e-3").parse::<f64>().ok())
                    .ok_or_else(|| Error::parse(line_no, format!("bad {what}: {s:?}")))
            };
            let h = mm(cols[1], "H_s_mm")?;
            let stroke = if cols[2] == "-" {
                h * fractions.stroke
            } else {
                mm(cols[2], "S_s_mm")?
            };
            let gap = if cols[3] == "-" {
                h * fractions.gap
            } else {
                mm(cols[3], "G_s_mm")?
            };
            let provisional = match cols[4].to_ascii_lowercase().as_str() {
                "yes" | "true" | "1" | "y" => true,
                "no" | "false" | "0" | "n" => false,
                other => {
                    return Err(Error::parse(line_no, format!("bad provisional flag: {other:?}")))
                }
            };
            let spec = StateSpec {
                state_id: cols[0].to_ascii_uppercase(),
                char_height_m: h,
                stroke_m: stroke,
                gap_m: gap,
                provisional,
            };
            spec.validate()
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            if specs.insert(spec.state_id.clone(), spec).is_some() {
                return Err(Error::parse(line_no, format!("duplicate state {:?}", cols[0])));
            }
        }
        if !header_seen {
            return Err(Error::parse(1, "empty state table"));
        }
        let default = specs
            .get(DEFAULT_STATE_ID)
            .cloned()
            .unwrap_or_else(|| StateSpec::default_spec(fractions));
        Ok(StateTable {
            specs,
            default,
            min_confidence: 0.0,
        })
    }

    pub fn get(&self, state_id: &str) -> Option<&StateSpec> {
        self.specs.get(&state_id.to_ascii_uppercase())
    }

    pub fn default_spec(&self) -> &StateSpec {
        &self.default
    }

    pub fn states(&self) -> impl Iterator<Item = &StateSpec> {
        self.specs.values()
    }

    /// Resolves a jurisdiction decision to its typography. Absent, default-stage,
    /// low-confidence or unknown decisions all resolve to the default row.
    pub fn lookup_height(&self, decision: Option<&StateDecision>) -> &StateSpec {
        match decision {
            Some(d) if d.stage != DecisionStage::Default && d.confidence >= self.min_confidence => {
                self.get(&d.state_id).unwrap_or(&self.default)
            }
            _ => &self.default,
        }
    }
}
