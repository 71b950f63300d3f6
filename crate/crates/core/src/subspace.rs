//! The teleoperation subspace: poses `ψ = (α, σ, ε)` and per-hand affine maps
//! between joint space and the subspace.
//!
//! Forward (robot side): `q = ((ψ ⊙ δ*) · Aᵀ) + o`, clamped to joint limits.
//! Inverse (human side): `ψ = ((q − o) · A) ⊙ δ`, clamped to `[0, 1]³`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Index of each subspace axis in `[T; 3]` representations.
pub const ALPHA: usize = 0;
pub const SIGMA: usize = 1;
pub const EPSILON: usize = 2;

/// Position in the teleoperation subspace. Components live in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SubspacePose<T: Real> {
    /// finger spread
    pub alpha: T,
    /// hand size / aperture
    pub sigma: T,
    /// finger curl
    pub epsilon: T,
}

impl<T: Real> Default for SubspacePose<T> {
    fn default() -> Self {
        Self::origin()
    }
}

impl<T: Real> SubspacePose<T> {
    /// Builds a pose, clamping each component into `[0, 1]`.
    pub fn new(alpha: T, sigma: T, epsilon: T) -> Self {
        Self::from_array([alpha, sigma, epsilon])
    }

    pub fn origin() -> Self {
        Self {
            alpha: T::zero(),
            sigma: T::zero(),
            epsilon: T::zero(),
        }
    }

    pub fn from_array(v: [T; 3]) -> Self {
        let c = |x: T| x.clamp_to(T::zero(), T::one());
        Self {
            alpha: c(v[0]),
            sigma: c(v[1]),
            epsilon: c(v[2]),
        }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.alpha, self.sigma, self.epsilon]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array()
            .iter()
            .all(|&x| x.is_finite() && x >= T::zero() && x <= T::one())
    }

    /// Componentwise `(1 − u)·self + u·other`.
    pub fn lerp(self, other: Self, u: T) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        Self::from_array(std::array::from_fn(|i| (T::one() - u) * a[i] + u * b[i]))
    }
}

/// Joint angles for one hand, with one clamp flag per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct JointCommand<T: Real> {
    pub q: Vec<T>,
    pub clamped: Vec<bool>,
}

impl<T: Real> JointCommand<T> {
    pub fn clamp_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }
}

/// Affine map between a hand's joint space and the subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HandMap<T: Real> {
    pub name: String,
    pub n_joints: usize,
    /// `n_joints × 3` linear map, one row per joint (columns α, σ, ε).
    pub a: Vec<[T; 3]>,
    /// Joint offsets in radians.
    pub o: Vec<T>,
    /// Inverse-side scale δ.
    pub delta: [T; 3],
    /// Robot-side scale δ*.
    pub delta_star: [T; 3],
    /// `(lo, hi)` per joint in radians.
    pub joint_limits: Vec<[T; 2]>,
}

impl<T: Real> HandMap<T> {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_joints;
        if n == 0 {
            return Err(Error::InvalidConfig(format!(
                "hand map `{}` has no joints",
                self.name
            )));
        }
        if self.a.len() != n {
            return Err(Error::dim("hand map A rows", n, self.a.len()));
        }
        if self.o.len() != n {
            return Err(Error::dim("hand map offset", n, self.o.len()));
        }
        if self.joint_limits.len() != n {
            return Err(Error::dim(
                "hand map joint_limits",
                n,
                self.joint_limits.len(),
            ));
        }
        for (name, d) in [("delta", self.delta), ("delta_star", self.delta_star)] {
            if d.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "hand map `{}`: {name} must be strictly positive and finite",
                    self.name
                )));
            }
        }
        for (j, ([lo, hi], &o)) in self.joint_limits.iter().zip(&self.o).enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "hand map `{}`: joint {j} limits ({lo}, {hi}) need lo < hi",
                    self.name
                )));
            }
            if !(o >= *lo && o <= *hi) {
                return Err(Error::InvalidConfig(format!(
                    "hand map `{}`: offset {o} of joint {j} is outside its limits",
                    self.name
                )));
            }
        }
        if self.a.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "hand map `{}`: A is not finite",
                self.name
            )));
        }
        let gram = ndarray::Array2::from_shape_fn((3, 3), |(r, c)| {
            self.a.iter().map(|row| row[r] * row[c]).sum::<T>()
        });
        linalg::cholesky(gram.view()).map_err(|_| {
            Error::InvalidConfig(format!(
                "hand map `{}`: columns of A are not linearly independent",
                self.name
            ))
        })?;
        Ok(())
    }

    /// Joints with a nonzero coefficient on the given subspace axis.
    pub fn driven_by(&self, axis: usize) -> Vec<bool> {
        self.a.iter().map(|row| row[axis] != T::zero()).collect()
    }

    /// Eq.-1 output before clamping.
    pub fn forward_unclamped(&self, psi: &SubspacePose<T>) -> Vec<T> {
        let p = psi.to_array();
        let s: [T; 3] = std::array::from_fn(|i| p[i] * self.delta_star[i]);
        self.a
            .iter()
            .zip(&self.o)
            .map(|(row, &o)| s[0] * row[0] + s[1] * row[1] + s[2] * row[2] + o)
            .collect()
    }

    /// Inverse projection before clamping to the unit box.
    pub fn inverse_unclamped(&self, q: &[T]) -> Result<[T; 3]> {
        if q.len() != self.n_joints || self.a.len() != self.n_joints {
            return Err(Error::dim("joint vector", self.n_joints, q.len()));
        }
        let mut acc = [T::zero(); 3];
        for ((row, &qj), &o) in self.a.iter().zip(q).zip(&self.o) {
            let d = qj - o;
            for k in 0..3 {
                acc[k] += d * row[k];
            }
        }
        Ok(std::array::from_fn(|k| acc[k] * self.delta[k]))
    }
}

/// Maps a subspace pose to robot joints and clamps to the joint limits.
pub fn project_to_robot<T: Real>(
    psi: &SubspacePose<T>,
    map: &HandMap<T>,
) -> Result<JointCommand<T>> {
    if map.a.len() != map.n_joints
        || map.o.len() != map.n_joints
        || map.joint_limits.len() != map.n_joints
    {
        return Err(Error::dim(
            "hand map",
            format!("{} rows in A, o and joint_limits", map.n_joints),
            format!("{}/{}/{}", map.a.len(), map.o.len(), map.joint_limits.len()),
        ));
    }
    let raw = map.forward_unclamped(psi);
    let mut clamped = Vec::with_capacity(raw.len());
    let q = raw
        .into_iter()
        .zip(&map.joint_limits)
        .map(|(x, &[lo, hi])| {
            let c = x.clamp_to(lo, hi);
            clamped.push(c != x);
            c
        })
        .collect();
    Ok(JointCommand { q, clamped })
}

/// Maps joint angles into the subspace and clamps to `[0, 1]³`.
pub fn project_from_joints<T: Real>(
    q: &[T],
    map: &HandMap<T>,
) -> Result<(SubspacePose<T>, [bool; 3])> {
    let raw = map.inverse_unclamped(q)?;
    let pose = SubspacePose::from_array(raw);
    let c = pose.to_array();
    Ok((pose, std::array::from_fn(|i| c[i] != raw[i])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> HandMap<f64> {
        HandMap {
            name: "toy".into(),
            n_joints: 3,
            a: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            o: vec![0.1; 3],
            delta: [0.5; 3],
            delta_star: [2.0; 3],
            joint_limits: vec![[-3.0, 3.0], [-3.0, 1.5], [-3.0, 3.0]],
        }
    }

    #[test]
    fn zero_pose_maps_to_offset() {
        let m = toy();
        let out = project_to_robot(&SubspacePose::origin(), &m).unwrap();
        assert_eq!(out.q, m.o);
        assert!(out.clamped.iter().all(|c| !c));
    }

    #[test]
    fn toy_hand_forward_and_inverse() {
        let m = toy();
        let psi = SubspacePose::new(0.5, 0.5, 0.5);
        let out = project_to_robot(&psi, &m).unwrap();
        for q in &out.q {
            assert!((q - 1.1).abs() < 1e-15);
        }
        let (back, flags) = project_from_joints(&out.q, &m).unwrap();
        assert!((back.alpha - 0.5).abs() < 1e-15);
        assert!((back.sigma - 0.5).abs() < 1e-15);
        assert!((back.epsilon - 0.5).abs() < 1e-15);
        assert_eq!(flags, [false; 3]);
        let (zero, _) = project_from_joints(&m.o, &m).unwrap();
        assert_eq!(zero, SubspacePose::origin());
    }

    #[test]
    fn clamp_flag_on_limited_joint() {
        let m = toy();
        let out = project_to_robot(&SubspacePose::new(1.0, 1.0, 1.0), &m).unwrap();
        assert_eq!(out.q[1], 1.5);
        assert_eq!(out.clamped, vec![false, true, false]);
    }

    #[test]
    fn inverse_rejects_wrong_length() {
        assert!(matches!(
            project_from_joints(&[0.0, 1.0], &toy()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn validation_catches_bad_maps() {
        let mut m = toy();
        assert!(m.validate().is_ok());
        m.delta[1] = 0.0;
        assert!(m.validate().is_err());
        let mut m = toy();
        m.a[2] = [1.0, 1.0, 0.0]; // rank 2
        m.a[0] = [1.0, 1.0, 0.0];
        m.a[1] = [0.0, 0.0, 0.0];
        assert!(m.validate().is_err());
        let mut m = toy();
        m.o[0] = 5.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn pose_clamps_inputs() {
        let p = SubspacePose::new(-0.2, 1.7, 0.3);
        assert_eq!(p.to_array(), [0.0, 1.0, 0.3]);
        assert!(p.is_valid());
    }
}
