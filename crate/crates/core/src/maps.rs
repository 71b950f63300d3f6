//! Built-in hand maps and their TOML representation.
//!
//! Both built-ins have orthonormal columns in `A` with disjoint joint
//! support per axis and `δ = 1/δ*`, so the inverse map undoes the forward
//! map exactly wherever no joint limit is hit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::subspace::HandMap;

pub const HUMAN15: &str = "human15";
pub const SDH7: &str = "sdh7";

fn finish<T: Real>(
    name: &str,
    a: Vec<[f64; 3]>,
    o: Vec<f64>,
    delta_star: [f64; 3],
    limits: Vec<[f64; 2]>,
) -> HandMap<T> {
    let map = HandMap {
        name: name.to_string(),
        n_joints: a.len(),
        a: a.into_iter().map(|r| r.map(T::lit)).collect(),
        o: o.into_iter().map(T::lit).collect(),
        delta: delta_star.map(|d| T::one() / T::lit(d)),
        delta_star: delta_star.map(T::lit),
        joint_limits: limits.into_iter().map(|r| r.map(T::lit)).collect(),
    };
    map.validate().expect("built-in map is valid");
    map
}

/// Joint limits covering the forward image of `[0, 1]³` plus a margin.
fn reach_limits(a: &[[f64; 3]], o: &[f64], delta_star: [f64; 3], margin: f64) -> Vec<[f64; 2]> {
    a.iter()
        .zip(o)
        .map(|(row, &off)| {
            let (mut lo, mut hi) = (off, off);
            for k in 0..3 {
                let c = row[k] * delta_star[k];
                if c < 0.0 {
                    lo += c;
                } else {
                    hi += c;
                }
            }
            [lo - margin, hi + margin]
        })
        .collect()
}

/// Five fingers (thumb → little) × (abduction, MCP flexion, PIP flexion).
///
/// α spreads the fingers about the middle one, σ flexes the MCP joints and
/// ε the PIP joints. Limits never bind for poses inside `[0, 1]³`.
pub fn human15<T: Real>() -> HandMap<T> {
    let spread = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let s_norm = 10f64.sqrt();
    let e_norm = 5f64.sqrt();
    let mut a = Vec::with_capacity(15);
    let mut o = Vec::with_capacity(15);
    for &s in &spread {
        a.push([s / s_norm, 0.0, 0.0]);
        o.push(0.0);
        a.push([0.0, 1.0 / e_norm, 0.0]);
        o.push(0.1);
        a.push([0.0, 0.0, 1.0 / e_norm]);
        o.push(0.1);
    }
    let delta_star = [0.55, 1.4 * e_norm, 1.6 * e_norm];
    let limits = reach_limits(&a, &o, delta_star, 0.1);
    finish(HUMAN15, a, o, delta_star, limits)
}

/// Three-fingered gripper: one finger-rotation joint plus
/// (proximal, distal) for each finger.
///
/// The proximal joints stop at 1.4 rad while σ = 1 asks for 1.6 rad, so a
/// full close stalls against the limits.
pub fn sdh7<T: Real>() -> HandMap<T> {
    let n = 3f64.sqrt();
    let mut a = vec![[1.0, 0.0, 0.0]];
    let mut o = vec![0.0];
    for _ in 0..3 {
        a.push([0.0, 1.0 / n, 0.0]);
        o.push(0.0);
        a.push([0.0, 0.0, 1.0 / n]);
        o.push(0.0);
    }
    let delta_star = [std::f64::consts::FRAC_PI_2, 1.6 * n, 1.2 * n];
    let mut limits = vec![[-0.1, std::f64::consts::FRAC_PI_2 + 0.1]];
    for _ in 0..3 {
        limits.push([-1.4, 1.4]);
        limits.push([-1.4, 1.4]);
    }
    finish(SDH7, a, o, delta_star, limits)
}

pub fn builtin<T: Real>(name: &str) -> Option<HandMap<T>> {
    match name {
        HUMAN15 => Some(human15()),
        SDH7 => Some(sdh7()),
        _ => None,
    }
}

pub fn from_toml<T: Real>(text: &str) -> Result<HandMap<T>> {
    let map: HandMap<T> = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
    map.validate()?;
    Ok(map)
}

pub fn to_toml<T: Real>(map: &HandMap<T>) -> Result<String> {
    toml::to_string(map).map_err(|e| Error::Toml(e.to_string()))
}

pub fn load_hand_map<T: Real>(path: impl AsRef<Path>) -> Result<HandMap<T>> {
    from_toml(&std::fs::read_to_string(path)?)
}

pub fn save_hand_map<T: Real>(map: &HandMap<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_toml(map)?)?;
    Ok(())
}

/// A built-in name or a path to a TOML map file.
pub fn resolve<T: Real>(name_or_path: &str) -> Result<HandMap<T>> {
    match builtin(name_or_path) {
        Some(m) => Ok(m),
        None => load_hand_map(name_or_path),
    }
}
