//! Wrist-axis projection from three muscle roles, and the variance test of
//! whether each axis tracks the motion it is meant to capture.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats;

/// Channel index for each muscle role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WristRoles {
    pub flexor: usize,
    pub extensor: usize,
    pub abductor: usize,
}

/// Per-role maximum voluntary contraction, in envelope units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WristCalibration<T: Real> {
    pub flexor_mvc: T,
    pub extensor_mvc: T,
    pub abductor_mvc: T,
}

impl<T: Real> WristCalibration<T> {
    /// MVC as the largest envelope seen on each role's channel.
    pub fn from_envelopes(envelopes: &[Vec<T>], roles: &WristRoles) -> Result<Self> {
        let peak = |ch: usize| -> Result<T> {
            let mut m = T::zero();
            for (i, e) in envelopes.iter().enumerate() {
                let v = *e.get(ch).ok_or_else(|| Error::AtSample {
                    index: i,
                    source: Box::new(Error::dim("wrist role channel", ch + 1, e.len())),
                })?;
                m = m.max(v);
            }
            Ok(m)
        };
        let c = Self {
            flexor_mvc: peak(roles.flexor)?,
            extensor_mvc: peak(roles.extensor)?,
            abductor_mvc: peak(roles.abductor)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("flexor", self.flexor_mvc),
            ("extensor", self.extensor_mvc),
            ("abductor", self.abductor_mvc),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} MVC must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `(C1, C2)`, each clamped to `[−1, 1]`:
/// `C1 = f − e`, `C2 = a − (f + e)/2` on MVC-normalized envelopes.
pub fn method3_project<T: Real>(
    envelope: &[T],
    roles: &WristRoles,
    calib: &WristCalibration<T>,
) -> Result<(T, T)> {
    let get = |ch: usize, role: &str| {
        envelope.get(ch).copied().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{role} role assigned to channel {ch}, but only {} channels",
                envelope.len()
            ))
        })
    };
    let f = get(roles.flexor, "flexor")? / calib.flexor_mvc;
    let e = get(roles.extensor, "extensor")? / calib.extensor_mvc;
    let a = get(roles.abductor, "abductor")? / calib.abductor_mvc;
    let one = T::one();
    let c1 = (f - e).clamp_to(-one, one);
    let c2 = (a - T::lit(0.5) * (f + e)).clamp_to(-one, one);
    Ok((c1, c2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WristSegment {
    Rest,
    FlexExtend,
    AbductAdduct,
}

impl WristSegment {
    pub const ALL: [WristSegment; 3] = [
        WristSegment::Rest,
        WristSegment::FlexExtend,
        WristSegment::AbductAdduct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WristSegment::Rest => "rest",
            WristSegment::FlexExtend => "flex_extend",
            WristSegment::AbductAdduct => "abduct_adduct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|w| w.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SegmentVariance<T: Real> {
    pub segment: WristSegment,
    pub n_samples: usize,
    pub var_c1: T,
    pub var_c2: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WristAnalysis<T: Real> {
    /// In `WristSegment::ALL` order.
    pub segments: Vec<SegmentVariance<T>>,
    /// Variance during flexion/extension over rest variance.
    pub c1_ratio: T,
    /// Variance during abduction/adduction over rest variance.
    pub c2_ratio: T,
    /// C1 variance during its own motion over that during the other one.
    pub c1_selectivity: T,
    pub c2_selectivity: T,
    pub threshold: T,
    pub c1_responds: bool,
    pub c2_responds: bool,
}

/// Variance of each axis within each labeled segment.
///
/// An axis "responds to its expected motion" when its variance during that
/// motion is at least `threshold` times its rest variance and at least
/// `threshold` times its variance during the other motion. Denominators are
/// floored at `1e-12`.
pub fn method3_variance_analysis<T: Real>(
    envelopes: &[Vec<T>],
    segments: &[Option<WristSegment>],
    roles: &WristRoles,
    calib: &WristCalibration<T>,
    threshold: T,
) -> Result<WristAnalysis<T>> {
    if envelopes.len() != segments.len() {
        return Err(Error::dim(
            "segment labels",
            envelopes.len(),
            segments.len(),
        ));
    }
    calib.validate()?;
    let mut c1: [Vec<T>; 3] = Default::default();
    let mut c2: [Vec<T>; 3] = Default::default();
    for (i, (env, seg)) in envelopes.iter().zip(segments).enumerate() {
        let Some(seg) = seg else { continue };
        let (a, b) = method3_project(env, roles, calib).map_err(|e| Error::AtSample {
            index: i,
            source: Box::new(e),
        })?;
        let k = *seg as usize;
        c1[k].push(a);
        c2[k].push(b);
    }
    let mut rows = Vec::with_capacity(3);
    for seg in WristSegment::ALL {
        let k = seg as usize;
        let (Some(v1), Some(v2)) = (stats::variance(&c1[k]), stats::variance(&c2[k])) else {
            return Err(Error::InvalidInput(format!(
                "segment `{}` has no samples",
                seg.as_str()
            )));
        };
        rows.push(SegmentVariance {
            segment: seg,
            n_samples: c1[k].len(),
            var_c1: v1,
            var_c2: v2,
        });
    }
    let floor = T::lit(1e-12);
    let ratio = |num: T, den: T| num / den.max(floor);
    let [rest, flex, abd] = [&rows[0], &rows[1], &rows[2]];
    let c1_ratio = ratio(flex.var_c1, rest.var_c1);
    let c2_ratio = ratio(abd.var_c2, rest.var_c2);
    let c1_selectivity = ratio(flex.var_c1, abd.var_c1);
    let c2_selectivity = ratio(abd.var_c2, flex.var_c2);
    Ok(WristAnalysis {
        c1_responds: c1_ratio >= threshold && c1_selectivity >= threshold,
        c2_responds: c2_ratio >= threshold && c2_selectivity >= threshold,
        segments: rows,
        c1_ratio,
        c2_ratio,
        c1_selectivity,
        c2_selectivity,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROLES: WristRoles = WristRoles {
        flexor: 0,
        extensor: 1,
        abductor: 2,
    };

    fn calib() -> WristCalibration<f64> {
        WristCalibration {
            flexor_mvc: 2.0,
            extensor_mvc: 4.0,
            abductor_mvc: 1.0,
        }
    }

    #[test]
    fn projection_examples() {
        let c = calib();
        assert_eq!(
            method3_project(&[0.0, 0.0, 0.0], &ROLES, &c).unwrap(),
            (0.0, 0.0)
        );
        assert_eq!(
            method3_project(&[2.0, 0.0, 0.0], &ROLES, &c).unwrap().0,
            1.0
        );
        let (c1, c2) = method3_project(&[2.0, 4.0, 1.0], &ROLES, &c).unwrap();
        assert_eq!(c1, 0.0);
        assert_eq!(c2, 0.0);
    }

    #[test]
    fn missing_role_channel_is_an_error() {
        assert!(method3_project(&[1.0, 1.0], &ROLES, &calib()).is_err());
    }

    #[test]
    fn empty_segment_is_an_error() {
        let env = vec![vec![1.0, 1.0, 1.0]; 4];
        let seg = vec![Some(WristSegment::Rest); 4];
        assert!(method3_variance_analysis(&env, &seg, &ROLES, &calib(), 10.0).is_err());
    }
}
