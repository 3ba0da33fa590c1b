use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanParams {
    /// Process noise, times the identity.
    pub q: f64,
    /// Measurement noise variance, m^2.
    pub r: f64,
    /// Initial variances of distance and velocity.
    pub p0_d: f64,
    pub p0_v: f64,
    /// Multiplier on `r` for the step after an inconsistency.
    pub r_inflation: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams {
            q: 0.1,
            r: 0.5,
            p0_d: 1.0,
            p0_v: 25.0,
            r_inflation: 4.0,
        }
    }
}

/// Constant-velocity filter over `[D, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub x: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub q: Matrix2<f64>,
    pub r: f64,
    pub dt: f64,
    initialized: bool,
    params: KalmanParams,
}

impl TrackState {
    /// Uninitialized filter; the first measurement sets `x = [z, 0]` and
    /// `P = diag(p0_d, p0_v)`.
    pub fn new(dt: f64, params: KalmanParams) -> Self {
        TrackState {
            x: Vector2::zeros(),
            p: Matrix2::from_diagonal(&Vector2::new(params.p0_d, params.p0_v)),
            q: Matrix2::identity() * params.q,
            r: params.r,
            dt,
            initialized: false,
            params,
        }
    }

    /// Filter with an explicit prior.
    pub fn with_prior(x: Vector2<f64>, p: Matrix2<f64>, dt: f64, params: KalmanParams) -> Self {
        TrackState {
            x,
            p,
            initialized: true,
            ..TrackState::new(dt, params)
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn distance(&self) -> f64 {
        self.x[0]
    }

    pub fn velocity(&self) -> f64 {
        self.x[1]
    }

    pub fn params(&self) -> KalmanParams {
        self.params
    }
}

/// One predict (and, with `z`, update) cycle.
pub fn kalman_step(s: &TrackState, z: Option<f64>) -> TrackState {
    step_with_r(s, z, s.r)
}

/// As [`kalman_step`] but with measurement variance `r` for this step only.
pub fn step_with_r(s: &TrackState, z: Option<f64>, r: f64) -> TrackState {
    let mut n = s.clone();
    if !s.initialized {
        if let Some(z) = z {
            n.x = Vector2::new(z, 0.0);
            n.p = Matrix2::from_diagonal(&Vector2::new(s.params.p0_d, s.params.p0_v));
            n.initialized = true;
        }
        return n;
    }
    let f = Matrix2::new(1.0, s.dt, 0.0, 1.0);
    n.x = f * s.x;
    n.p = f * s.p * f.transpose() + s.q;
    if let Some(z) = z {
        let innovation = z - n.x[0];
        let sv = n.p[(0, 0)] + r;
        let k = Vector2::new(n.p[(0, 0)], n.p[(1, 0)]) / sv;
        n.x += k * innovation;
        // Joseph form keeps P positive semi-definite
        let ikh = Matrix2::new(1.0 - k[0], 0.0, -k[1], 1.0);
        n.p = ikh * n.p * ikh.transpose() + k * k.transpose() * r;
    }
    n.p = (n.p + n.p.transpose()) * 0.5;
    n
}
