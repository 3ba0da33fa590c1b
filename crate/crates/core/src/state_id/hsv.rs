use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};

/// Added to a boosted state's raw score when any of its ranges is hit.
pub const COLOR_BOOST: f64 = 0.20;

const BUILTIN_DESIGNS: &str = include_str!("../../data/designs.tsv");

/// Hue in degrees [0, 360), saturation and value in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    pub fn new(h: f64, s: f64, v: f64) -> Self {
        Hsv { h, s, v }
    }
}

/// Standard hexcone conversion from 8-bit RGB.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> Hsv {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let c = max - min;
    let h = if c == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / c).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / c + 2.0)
    } else {
        60.0 * ((r - g) / c + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { c / max };
    Hsv::new(h % 360.0, s, max)
}

/// Inclusive box in HSV space; when `h_min > h_max` the hue interval wraps
/// through 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsvRange {
    pub h_min: f64,
    pub s_min: f64,
    pub v_min: f64,
    pub h_max: f64,
    pub s_max: f64,
    pub v_max: f64,
}

impl HsvRange {
    pub fn contains(&self, p: Hsv) -> bool {
        let hue = if self.h_min <= self.h_max {
            p.h >= self.h_min && p.h <= self.h_max
        } else {
            p.h >= self.h_min || p.h <= self.h_max
        };
        hue && (self.s_min..=self.s_max).contains(&p.s) && (self.v_min..=self.v_max).contains(&p.v)
    }

    fn validate(&self) -> Result<()> {
        let hue_ok = |h: f64| (0.0..=360.0).contains(&h);
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(hue_ok(self.h_min) && hue_ok(self.h_max)) {
            return Err(Error::invalid("hue bounds must lie in [0, 360]"));
        }
        if !(unit(self.s_min) && unit(self.s_max) && unit(self.v_min) && unit(self.v_max)) {
            return Err(Error::invalid("saturation and value bounds must lie in [0, 1]"));
        }
        if self.s_min > self.s_max || self.v_min > self.v_max {
            return Err(Error::invalid("min bound exceeds max bound"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub state_id: String,
    pub name: String,
    pub weight: f64,
    pub ranges: Vec<HsvRange>,
}

impl Design {
    fn hits(&self, p: Hsv) -> bool {
        self.ranges.iter().any(|r| r.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignCatalog {
    pub designs: Vec<Design>,
    pub boost_states: BTreeSet<String>,
    pub boost: f64,
}

impl DesignCatalog {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_DESIGNS).expect("shipped design catalog is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// Rows are `state<TAB>design<TAB>weight<TAB>ranges`, where ranges are
    /// `h_min,s_min,v_min,h_max,s_max,v_max` tuples joined by `;`. A line
    /// `boost: A, B, ...` lists the boosted states.
    pub fn parse(text: &str) -> Result<Self> {
        let mut designs = Vec::new();
        let mut boost_states = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("boost:") {
                for s in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    boost_states.insert(s.to_ascii_uppercase());
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 4 tab-separated columns, found {}", cols.len()),
                ));
            }
            let weight: f64 = cols[2]
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite() && *w > 0.0)
                .ok_or_else(|| Error::parse(line_no, format!("bad weight {:?}", cols[2])))?;
            let mut ranges = Vec::new();
            for tuple in cols[3].split(';').map(str::trim).filter(|t| !t.is_empty()) {
                let v: Vec<f64> = tuple
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(line_no, format!("bad range {tuple:?}")))?;
                if v.len() != 6 {
                    return Err(Error::parse(line_no, format!("range {tuple:?} needs 6 numbers")));
                }
                let r = HsvRange {
                    h_min: v[0],
                    s_min: v[1],
                    v_min: v[2],
                    h_max: v[3],
                    s_max: v[4],
                    v_max: v[5],
                };
                r.validate().map_err(|e| Error::parse(line_no, e.to_string()))?;
                ranges.push(r);
            }
            if ranges.is_empty() {
                return Err(Error::parse(line_no, "design has no ranges"));
            }
            designs.push(Design {
                state_id: cols[0].to_ascii_uppercase(),
                name: cols[1].to_string(),
                weight,
                ranges,
            });
        }
        if designs.is_empty() {
            return Err(Error::parse(1, "design catalog has no designs"));
        }
        Ok(DesignCatalog {
            designs,
            boost_states,
            boost: COLOR_BOOST,
        })
    }

    pub fn states(&self) -> BTreeSet<&str> {
        self.designs.iter().map(|d| d.state_id.as_str()).collect()
    }

    pub fn without_boosts(mut self) -> Self {
        self.boost = 0.0;
        self
    }
}

/// Stage 2: per-state sum over designs of `weight * in-range fraction`, plus
/// the boost for boosted states with any in-range pixel, normalized to sum
/// to one. All-zero scores become uniform.
pub fn hsv_scores(pixels: &[Hsv], cat: &DesignCatalog) -> Result<BTreeMap<String, f64>> {
    if pixels.is_empty() {
        return Err(Error::Empty("no pixels to score"));
    }
    let n = pixels.len() as f64;
    let mut raw: BTreeMap<String, f64> = cat.states().into_iter().map(|s| (s.to_string(), 0.0)).collect();
    let mut matched: BTreeSet<&str> = BTreeSet::new();
    for d in &cat.designs {
        let hits = pixels.iter().filter(|&&p| d.hits(p)).count();
        if hits > 0 {
            matched.insert(&d.state_id);
        }
        *raw.get_mut(&d.state_id).expect("state listed") += d.weight * hits as f64 / n;
    }
    for s in matched {
        if cat.boost_states.contains(s) {
            *raw.get_mut(s).expect("state listed") += cat.boost;
        }
    }
    let total: f64 = raw.values().sum();
    if total > 0.0 {
        raw.values_mut().for_each(|v| *v /= total);
    } else {
        let u = 1.0 / raw.len() as f64;
        raw.values_mut().for_each(|v| *v = u);
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn range(h0: f64, h1: f64) -> HsvRange {
        HsvRange {
            h_min: h0,
            s_min: 0.0,
            v_min: 0.0,
            h_max: h1,
            s_max: 1.0,
            v_max: 1.0,
        }
    }

    fn catalog(boost: &[&str]) -> DesignCatalog {
        DesignCatalog {
            designs: vec![
                Design {
                    state_id: "A".into(),
                    name: "a".into(),
                    weight: 0.6,
                    ranges: vec![range(0.0, 30.0)],
                },
                Design {
                    state_id: "B".into(),
                    name: "b".into(),
                    weight: 0.2,
                    ranges: vec![range(100.0, 140.0)],
                },
            ],
            boost_states: boost.iter().map(|s| s.to_string()).collect(),
            boost: COLOR_BOOST,
        }
    }

    #[test]
    fn single_design_takes_everything() {
        let px = vec![Hsv::new(10.0, 0.5, 0.5); 20];
        let s = hsv_scores(&px, &catalog(&[])).unwrap();
        assert_eq!(s["A"], 1.0);
        assert_eq!(s["B"], 0.0);
    }

    #[test]
    fn boost_applies_before_normalization() {
        // A: 0.6 * 0.5 = 0.3, B: 0.2 * 0.5 + 0.2 = 0.3
        let mut px = vec![Hsv::new(10.0, 0.5, 0.5); 5];
        px.extend(vec![Hsv::new(120.0, 0.5, 0.5); 5]);
        let s = hsv_scores(&px, &catalog(&["B"])).unwrap();
        assert!((s["A"] - 0.5).abs() < 1e-12);
        assert!((s["B"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_hits_is_uniform() {
        let px = vec![Hsv::new(250.0, 0.5, 0.5); 3];
        let s = hsv_scores(&px, &catalog(&["A"])).unwrap();
        assert_eq!(s["A"], 0.5);
        assert_eq!(s["B"], 0.5);
    }

    #[test]
    fn empty_pixels_error() {
        assert!(hsv_scores(&[], &catalog(&[])).is_err());
    }

    #[test]
    fn hue_wraps() {
        let r = range(350.0, 10.0);
        assert!(r.contains(Hsv::new(355.0, 0.5, 0.5)));
        assert!(r.contains(Hsv::new(5.0, 0.5, 0.5)));
        assert!(!r.contains(Hsv::new(180.0, 0.5, 0.5)));
    }

    #[test]
    fn rgb_conversion() {
        let red = rgb_to_hsv(255, 0, 0);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        let blue = rgb_to_hsv(0, 0, 255);
        assert_eq!(blue.h, 240.0);
        let gray = rgb_to_hsv(128, 128, 128);
        assert_eq!((gray.h, gray.s), (0.0, 0.0));
        let magenta_ish = rgb_to_hsv(255, 0, 128);
        assert!(magenta_ish.h > 329.0 && magenta_ish.h < 331.0);
    }

    #[test]
    fn builtin_catalog_has_the_boosted_six() {
        let cat = DesignCatalog::builtin();
        for s in ["DE", "NJ", "VT", "AK", "OK", "NM"] {
            assert!(cat.boost_states.contains(s));
            assert!(cat.states().contains(s));
        }
        assert_eq!(cat.boost, 0.2);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        assert!(DesignCatalog::parse("X\tx\t0\t0,0,0,10,1,1\n").is_err());
        assert!(DesignCatalog::parse("X\tx\t1\t0,0,0,10,1\n").is_err());
        assert!(DesignCatalog::parse("X\tx\t1\t0,0.5,0,10,0.4,1\n").is_err());
        assert!(DesignCatalog::parse("X\tx\t1\t0,0,0,400,1,1\n").is_err());
        assert!(DesignCatalog::parse("boost: X\n").is_err());
    }

    fn pixels() -> impl Strategy<Value = Vec<Hsv>> {
        proptest::collection::vec(
            (0.0f64..360.0, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(h, s, v)| Hsv::new(h, s, v)),
            1..60,
        )
    }

    proptest! {
        #[test]
        fn scores_form_a_distribution(px in pixels()) {
            let s = hsv_scores(&px, &DesignCatalog::builtin()).unwrap();
            let total: f64 = s.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(s.values().all(|&v| v >= 0.0));
        }

        #[test]
        fn weight_scaling_keeps_argmax(px in pixels(), k in 0.1f64..10.0) {
            let cat = DesignCatalog::builtin().without_boosts();
            let mut scaled = cat.clone();
            scaled.designs.iter_mut().for_each(|d| d.weight *= k);
            let a = hsv_scores(&px, &cat).unwrap();
            let b = hsv_scores(&px, &scaled).unwrap();
            for (k, v) in &a {
                prop_assert!((v - b[k]).abs() < 1e-9);
            }
        }
    }
}
