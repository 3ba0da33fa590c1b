use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the deep-branch variance, m^2.
pub const VAR_DEEP_FLOOR: f64 = 1e-4;

/// Exponential moving average of `D_geo / d_plate`, the metres per unit of
/// relative depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTracker {
    s: f64,
    alpha: f64,
    window: VecDeque<f64>,
    capacity: usize,
    ratio_var: f64,
    var_deep: f64,
    initialized: bool,
}

impl Default for ScaleTracker {
    fn default() -> Self {
        ScaleTracker::new(1.0, 0.9, 30)
    }
}

impl ScaleTracker {
    pub fn new(s0: f64, alpha: f64, window: usize) -> Self {
        ScaleTracker {
            s: s0,
            alpha,
            window: VecDeque::with_capacity(window.max(1)),
            capacity: window.max(1),
            ratio_var: 0.0,
            var_deep: VAR_DEEP_FLOOR,
            initialized: false,
        }
    }

    /// `s <- alpha s + (1 - alpha) D_geo / d_plate`; the ratio also enters
    /// the window whose spread about the new `s` sets the deep variance.
    pub fn update(&mut self, d_geo: f64, d_plate: f64) -> Result<()> {
        if !(d_geo > 0.0 && d_plate > 0.0) || !d_geo.is_finite() || !d_plate.is_finite() {
            return Err(Error::invalid("scale update needs positive finite inputs"));
        }
        let ratio = d_geo / d_plate;
        self.s = self.alpha * self.s + (1.0 - self.alpha) * ratio;
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(ratio);
        let s = self.s;
        self.ratio_var =
            self.window.iter().map(|r| (r - s).powi(2)).sum::<f64>() / self.window.len() as f64;
        self.var_deep = self.deep_variance(d_plate);
        self.initialized = true;
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        self.s
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Deep variance in m^2 as of the last update.
    pub fn var_deep(&self) -> f64 {
        self.var_deep
    }

    /// Ratio variance converted to m^2 at relative depth `d_plate`, floored.
    pub fn deep_variance(&self, d_plate: f64) -> f64 {
        (self.ratio_var * d_plate * d_plate).max(VAR_DEEP_FLOOR)
    }
}

/// `s_t * d_plate`.
pub fn deep_metric(t: &ScaleTracker, d_plate: f64) -> Result<f64> {
    if !t.initialized {
        return Err(Error::UninitializedScale);
    }
    Ok(t.s * d_plate)
}
