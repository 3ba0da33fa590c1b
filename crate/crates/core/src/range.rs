//! Pinhole ranging from the three typographic features, inverse-variance
//! fusion of the per-feature estimates, and the first-order error budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::typography::StateSpec;

/// Relative standard deviations of the per-feature distance estimates.
pub const HEIGHT_CV: f64 = 0.023;
pub const STROKE_CV: f64 = 0.15;
pub const SPACING_CV: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feature {
    Height,
    Stroke,
    Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureEstimate {
    pub feature: Feature,
    pub d: f64,
    pub sigma: f64,
}

/// `f * H / h`.
pub fn pinhole(f: f64, h_s: f64, h_bar: f64) -> Result<f64> {
    if !(h_bar > 0.0) {
        return Err(Error::invalid("image height must be positive"));
    }
    if !(f > 0.0 && h_s > 0.0) {
        return Err(Error::invalid("focal length and physical height must be positive"));
    }
    Ok(f * h_s / h_bar)
}

/// Image size in pixels of an object of physical size `h_s` at distance `d`.
pub fn project(f: f64, h_s: f64, d: f64) -> f64 {
    f * h_s / d
}

/// Per-frame image measurements in plate pixels; absent features are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Measurements {
    pub h_bar: Option<f64>,
    pub s_bar: Option<f64>,
    pub g_bar: Option<f64>,
}

/// Suspect-height handling: when the height estimate departs from the prior
/// by more than `threshold` (relative), its sigma is multiplied by `factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InflationParams {
    pub threshold: f64,
    pub factor: f64,
}

impl Default for InflationParams {
    fn default() -> Self {
        InflationParams {
            threshold: 0.25,
            factor: 4.0,
        }
    }
}

/// One pinhole estimate per available feature, with sigmas proportional to
/// the prior distance.
pub fn feature_estimates(
    f: f64,
    spec: &StateSpec,
    m: &Measurements,
    d_prior: f64,
    inflation: InflationParams,
) -> Result<Vec<FeatureEstimate>> {
    if !(d_prior > 0.0) {
        return Err(Error::invalid("prior distance must be positive"));
    }
    let mut out = Vec::with_capacity(3);
    let usable = |v: Option<f64>| v.filter(|x| *x > 0.0 && x.is_finite());
    if let Some(h) = usable(m.h_bar) {
        let d = pinhole(f, spec.char_height_m, h)?;
        let mut sigma = HEIGHT_CV * d_prior;
        if (d - d_prior).abs() > inflation.threshold * d_prior {
            sigma *= inflation.factor;
        }
        out.push(FeatureEstimate {
            feature: Feature::Height,
            d,
            sigma,
        });
    }
    if let Some(s) = usable(m.s_bar) {
        out.push(FeatureEstimate {
            feature: Feature::Stroke,
            d: pinhole(f, spec.stroke_m, s)?,
            sigma: STROKE_CV * d_prior,
        });
    }
    if let Some(g) = usable(m.g_bar) {
        out.push(FeatureEstimate {
            feature: Feature::Spacing,
            d: pinhole(f, spec.gap_m, g)?,
            sigma: SPACING_CV * d_prior,
        });
    }
    if out.is_empty() {
        return Err(Error::Empty("no usable feature measurement"));
    }
    Ok(out)
}

/// Inverse-variance weighted mean; returns `(D, sigma)` with
/// `sigma^2 = 1 / sum(w)`.
pub fn fuse_features(ests: &[FeatureEstimate]) -> Result<(f64, f64)> {
    if ests.is_empty() {
        return Err(Error::Empty("no feature estimates to fuse"));
    }
    let mut sw = 0.0;
    let mut swd = 0.0;
    for e in ests {
        if !(e.sigma > 0.0) {
            return Err(Error::invalid("feature sigma must be positive"));
        }
        let w = 1.0 / (e.sigma * e.sigma);
        sw += w;
        swd += w * e.d;
    }
    Ok((swd / sw, (1.0 / sw).sqrt()))
}

/// Relative error contributions and their linear and root-sum-square totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub df_over_f: f64,
    pub dh_s_over_h_s: f64,
    pub dh_over_h: f64,
    pub pitch_term: f64,
    pub roll_term: f64,
    pub linear_total: f64,
    pub rss_total: f64,
}

pub fn error_budget(
    df_over_f: f64,
    dh_s_over_h_s: f64,
    dh_over_h: f64,
    pitch_term: f64,
    roll_term: f64,
) -> Result<ErrorBudget> {
    let terms = [df_over_f, dh_s_over_h_s, dh_over_h, pitch_term, roll_term];
    if terms.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid("error terms must be finite and non-negative"));
    }
    Ok(ErrorBudget {
        df_over_f,
        dh_s_over_h_s,
        dh_over_h,
        pitch_term,
        roll_term,
        linear_total: terms.iter().sum(),
        rss_total: terms.iter().map(|t| t * t).sum::<f64>().sqrt(),
    })
}

/// Relative error of the mean height: `sigma_h / (sqrt(n) h)`.
pub fn measurement_noise_term(sigma_h: f64, n: usize, h_bar: f64) -> f64 {
    sigma_h / ((n.max(1) as f64).sqrt() * h_bar)
}
