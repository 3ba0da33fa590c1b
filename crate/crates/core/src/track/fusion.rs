use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A distance with its variance (m, m^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub d: f64,
    pub var: f64,
}

impl Estimate {
    pub fn new(d: f64, var: f64) -> Self {
        Estimate { d, var }
    }
}

/// Inverse-variance combination of the geometric and deep estimates. With
/// one branch missing the other passes through unchanged.
pub fn fuse_geo_deep(geo: Option<Estimate>, deep: Option<Estimate>) -> Result<Estimate> {
    match (geo, deep) {
        (Some(g), Some(d)) => {
            if !(g.var > 0.0 && d.var > 0.0) {
                return Err(Error::invalid("fusion variances must be positive"));
            }
            let sum = g.var + d.var;
            Ok(Estimate {
                d: (d.var * g.d + g.var * d.d) / sum,
                var: g.var * d.var / sum,
            })
        }
        (Some(e), None) | (None, Some(e)) => Ok(e),
        (None, None) => Err(Error::Empty("neither geometric nor deep estimate")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let f = fuse_geo_deep(Some(Estimate::new(10.0, 0.1)), Some(Estimate::new(10.3, 0.1))).unwrap();
        assert!((f.d - 10.15).abs() < 1e-12);
        let f = fuse_geo_deep(Some(Estimate::new(10.0, 0.05)), Some(Estimate::new(10.3, 0.1))).unwrap();
        assert!((f.d - 10.1).abs() < 1e-12);
        let deep = Estimate::new(9.7, 0.2);
        assert_eq!(fuse_geo_deep(None, Some(deep)).unwrap(), deep);
        assert!(fuse_geo_deep(None, None).is_err());
    }

    proptest! {
        #[test]
        fn convex_and_variance_reducing(g in 0.5f64..100.0, d in 0.5f64..100.0, vg in 1e-4f64..10.0, vd in 1e-4f64..10.0) {
            let f = fuse_geo_deep(Some(Estimate::new(g, vg)), Some(Estimate::new(d, vd))).unwrap();
            prop_assert!(f.d >= g.min(d) * (1.0 - 1e-12) && f.d <= g.max(d) * (1.0 + 1e-12));
            prop_assert!(f.var <= vg.min(vd) * (1.0 + 1e-12));
        }
    }
}
