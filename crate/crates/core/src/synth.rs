//! Seeded synthetic recording sessions and the session file format.
//!
//! A latent subspace pose wanders smoothly inside `[0, 1]³`; joint angles
//! are its image under the human hand map, and eight EMG channels mix a
//! handful of latent muscle activations that depend on the pose, plus
//! gesture bursts and Gaussian noise. The parameters are not calibrated
//! against any real recording.
//!
//! # File format
//!
//! ```text
//! # teleop session
//! schema_version = 1          <- TOML header, keys below
//! ...
//! ---
//! t,e1,...,eC,j1,...,jJ,label
//! 0,0.412345678,...,Normal
//! ```
//!
//! Header keys: `schema_version`, `sample_rate_hz`, `channels`, `joints`,
//! `labels`, `hand_map`, `protocol`, `seed`, `config_hash`. Rows are
//! comma-separated; numbers use shortest round-trip decimal formatting,
//! an empty label field means "unlabeled". Generated EMG values carry 9
//! significant digits.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::controllers::{default_templates, GestureClass, PoseClass, WristRoles, WristSegment};
use crate::error::{Error, Result};
use crate::maps;
use crate::scalar::Real;
use crate::signal::EmgSample;
use crate::subspace::{project_to_robot, HandMap, SubspacePose};

pub const SCHEMA_VERSION: u32 = 1;
pub const N_CHANNELS: usize = 8;
/// Latent muscles driving the channels through the mixing matrix.
pub const N_MUSCLES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Free motion with Spread/Contract gestures at fixed intervals.
    Hybrid,
    /// Free motion, no gestures, no labels.
    Continuous,
    /// Cycling grasp types with a varying contraction force.
    GraspPoses,
    /// Rest, then wrist flexion/extension, then abduction/adduction.
    Wrist,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Hybrid => "hybrid",
            Protocol::Continuous => "continuous",
            Protocol::GraspPoses => "grasp_poses",
            Protocol::Wrist => "wrist",
        }
    }

    pub fn labels(self) -> Vec<String> {
        match self {
            Protocol::Hybrid => GestureClass::ALL.iter().map(|g| g.to_string()).collect(),
            Protocol::Continuous => Vec::new(),
            Protocol::GraspPoses => PoseClass::ALL.iter().map(|g| g.to_string()).collect(),
            Protocol::Wrist => WristSegment::ALL
                .iter()
                .map(|w| w.as_str().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionSpec {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub gesture_interval_s: f64,
    pub gesture_duration_s: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub protocol: Protocol,
    pub human_map: HandMap<f64>,
    /// `N_CHANNELS × N_MUSCLES`, non-negative.
    pub mixing: Vec<Vec<f64>>,
    pub wrist_roles: WristRoles,
}

impl Default for SessionSpec {
    fn default() -> Self {
        Self {
            duration_s: 120.0,
            sample_rate_hz: 200.0,
            gesture_interval_s: 30.0,
            gesture_duration_s: 2.0,
            noise_std: 0.02,
            seed: 0,
            protocol: Protocol::Hybrid,
            human_map: maps::human15(),
            mixing: default_mixing(),
            wrist_roles: WristRoles {
                flexor: 0,
                extensor: 4,
                abductor: 2,
            },
        }
    }
}

/// Muscles sit at evenly spaced angles around the armband; each channel
/// picks up nearby muscles with a Gaussian falloff.
pub fn default_mixing() -> Vec<Vec<f64>> {
    let n = N_CHANNELS as f64;
    (0..N_CHANNELS)
        .map(|c| {
            (0..N_MUSCLES)
                .map(|j| {
                    let pos = j as f64 * n / N_MUSCLES as f64;
                    let d = (c as f64 - pos).abs();
                    let d = d.min(n - d);
                    0.05 + (-d * d / 1.5).exp()
                })
                .collect()
        })
        .collect()
}

impl SessionSpec {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            ));
        }
        if self.n_samples() == 0 {
            return bad("duration_s * sample_rate_hz must cover at least one sample".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!(
                "noise_std must be non-negative, got {}",
                self.noise_std
            ));
        }
        if !(self.gesture_interval_s > 0.0 && self.gesture_duration_s > 0.0) {
            return bad("gesture_interval_s and gesture_duration_s must be positive".into());
        }
        if self.gesture_duration_s >= self.gesture_interval_s {
            return bad(format!(
                "gesture_duration_s ({}) must be shorter than gesture_interval_s ({})",
                self.gesture_duration_s, self.gesture_interval_s
            ));
        }
        if self.mixing.len() != N_CHANNELS || self.mixing.iter().any(|r| r.len() != N_MUSCLES) {
            return bad(format!("mixing must be {N_CHANNELS} x {N_MUSCLES}"));
        }
        if self
            .mixing
            .iter()
            .flatten()
            .any(|&v| !(v >= 0.0 && v.is_finite()))
        {
            return bad("mixing entries must be finite and non-negative".into());
        }
        let r = self.wrist_roles;
        if [r.flexor, r.extensor, r.abductor]
            .iter()
            .any(|&c| c >= N_CHANNELS)
        {
            return bad(format!("wrist roles must name channels below {N_CHANNELS}"));
        }
        self.human_map.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub schema_version: u32,
    pub sample_rate_hz: f64,
    pub channels: usize,
    pub joints: usize,
    pub labels: Vec<String>,
    pub hand_map: String,
    pub protocol: String,
    pub seed: u64,
    #[serde(default)]
    pub config_hash: String,
}

const META_KEYS: [&str; 9] = [
    "schema_version",
    "sample_rate_hz",
    "channels",
    "joints",
    "labels",
    "hand_map",
    "protocol",
    "seed",
    "config_hash",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSample {
    pub t: f64,
    pub emg: Vec<f64>,
    pub joints: Option<Vec<f64>>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub meta: SessionMeta,
    pub samples: Vec<SessionSample>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn emg<T: Real>(&self) -> Vec<EmgSample<T>> {
        self.samples
            .iter()
            .map(|s| EmgSample::new(T::lit(s.t), s.emg.iter().map(|&v| T::lit(v)).collect()))
            .collect()
    }

    pub fn labels(&self) -> Vec<Option<&str>> {
        self.samples.iter().map(|s| s.label.as_deref()).collect()
    }

    /// Fails with a schema error naming the first missing/extra column.
    pub fn expect_channels(&self, n: usize) -> Result<()> {
        if self.meta.channels != n {
            let column = format!("e{}", self.meta.channels.min(n) + 1);
            return Err(Error::Schema {
                column,
                message: format!(
                    "session has {} EMG channels, expected {n}",
                    self.meta.channels
                ),
            });
        }
        Ok(())
    }

    /// `(start, end)` index ranges of maximal runs carrying `label`.
    pub fn label_runs(&self, label: &str) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, s) in self.samples.iter().enumerate() {
            let hit = s.label.as_deref() == Some(label);
            match (hit, start) {
                (true, None) => start = Some(i),
                (false, Some(b)) => {
                    runs.push((b, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(b) = start {
            runs.push((b, self.samples.len()));
        }
        runs
    }
}

/// Rounds to 9 significant digits so the value prints compactly and
/// survives a decimal round trip.
fn sig9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

struct Walk {
    p: [f64; 3],
    v: [f64; 3],
}

impl Walk {
    const TAU: f64 = 1.5;
    const VEL_STD: f64 = 0.2;

    fn new(rng: &mut ChaCha8Rng) -> Self {
        Self {
            p: std::array::from_fn(|_| rng.random_range(0.2..0.8)),
            v: [0.0; 3],
        }
    }

    /// One Euler–Maruyama step of a damped random velocity, reflected at
    /// the bounds of the unit cube.
    fn step(&mut self, rng: &mut ChaCha8Rng, dt: f64, frozen: bool) {
        let kick = Self::VEL_STD * (2.0 / Self::TAU).sqrt() * dt.sqrt();
        for k in 0..3 {
            let n: f64 = rng.sample(StandardNormal);
            self.v[k] += -self.v[k] / Self::TAU * dt + kick * n;
            if frozen {
                continue;
            }
            let mut p = self.p[k] + self.v[k] * dt;
            if p > 1.0 {
                p = 2.0 - p;
                self.v[k] = -self.v[k];
            } else if p < 0.0 {
                p = -p;
                self.v[k] = -self.v[k];
            }
            self.p[k] = p.clamp(0.0, 1.0);
        }
    }
}

/// Sample index ranges of the scheduled gesture windows.
fn gesture_windows(spec: &SessionSpec, n: usize) -> Vec<(usize, usize, GestureClass)> {
    let len = (spec.gesture_duration_s * spec.sample_rate_hz).round() as usize;
    let mut out = Vec::new();
    let mut k = 1;
    loop {
        let start = (k as f64 * spec.gesture_interval_s * spec.sample_rate_hz).round() as usize;
        if start + len > n {
            break;
        }
        let class = if k % 2 == 1 {
            GestureClass::Spread
        } else {
            GestureClass::Contract
        };
        out.push((start, start + len, class));
        k += 1;
    }
    out
}

fn mix(spec: &SessionSpec, m: &[f64; N_MUSCLES], rng: &mut ChaCha8Rng) -> Vec<f64> {
    spec.mixing
        .iter()
        .map(|row| {
            let clean: f64 = row.iter().zip(m).map(|(w, a)| w * a).sum();
            let n: f64 = rng.sample(StandardNormal);
            sig9(clean + spec.noise_std * n)
        })
        .collect()
}

/// Generates a session and returns the latent pose behind every sample.
pub fn generate_with_latent(spec: &SessionSpec) -> Result<(Session, Vec<SubspacePose<f64>>)> {
    spec.validate()?;
    let n = spec.n_samples();
    let dt = 1.0 / spec.sample_rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    let map = &spec.human_map;
    let t_of = |i: usize| i as f64 / spec.sample_rate_hz;

    match spec.protocol {
        Protocol::Hybrid | Protocol::Continuous => {
            let windows = if spec.protocol == Protocol::Hybrid {
                gesture_windows(spec, n)
            } else {
                Vec::new()
            };
            let mut walk = Walk::new(&mut rng);
            let mut w = 0;
            for i in 0..n {
                while w < windows.len() && i >= windows[w].1 {
                    w += 1;
                }
                let gesture = windows.get(w).filter(|g| i >= g.0).map(|g| g.2);
                if i > 0 {
                    walk.step(&mut rng, dt, gesture.is_some());
                }
                let psi = SubspacePose::from_array(walk.p);
                let [a, s, e] = walk.p;
                let (vs, ve) = if gesture.is_some() {
                    (0.0, 0.0)
                } else {
                    (walk.v[1].abs(), walk.v[2].abs())
                };
                let mut m = [
                    0.15 + 0.7 * s + 0.2 * vs,
                    0.15 + 0.7 * (1.0 - s),
                    0.15 + 0.7 * e + 0.2 * ve,
                    0.15 + 0.7 * (1.0 - e),
                    0.15 + 0.5 * a,
                    0.05,
                    0.05,
                ];
                match gesture {
                    Some(GestureClass::Spread) => m[5] = 1.0,
                    Some(GestureClass::Contract) => {
                        m[6] = 1.0;
                        m[..4].iter_mut().for_each(|x| *x += 0.4);
                    }
                    _ => {}
                }
                let label = match spec.protocol {
                    Protocol::Hybrid => Some(gesture.unwrap_or(GestureClass::Normal).to_string()),
                    _ => None,
                };
                samples.push(SessionSample {
                    t: t_of(i),
                    emg: mix(spec, &m, &mut rng),
                    joints: Some(project_to_robot(&psi, map)?.q),
                    label,
                });
                latent.push(psi);
            }
        }
        Protocol::GraspPoses => {
            let templates = default_templates::<f64>();
            let segment = (6.0 * spec.sample_rate_hz).round().max(1.0) as usize;
            let patterns: [[f64; N_MUSCLES]; 3] = [
                [1.0, 0.2, 1.0, 0.2, 0.3, 0.1, 0.6],
                [0.2, 1.0, 0.3, 0.9, 1.0, 0.2, 0.1],
                [0.1, 0.3, 0.2, 0.3, 0.2, 1.0, 0.9],
            ];
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            for i in 0..n {
                let g = (i / segment) % 3;
                let class = PoseClass::ALL[g];
                let t = t_of(i);
                let theta = 0.5 + 0.45 * (std::f64::consts::TAU * t / 3.0 + phase).sin();
                let tpl = &templates[class.as_str()];
                let psi = tpl.closed.lerp(tpl.open, theta);
                let gain = 0.2 + 0.8 * theta;
                let m: [f64; N_MUSCLES] = std::array::from_fn(|j| patterns[g][j] * gain);
                samples.push(SessionSample {
                    t,
                    emg: mix(spec, &m, &mut rng),
                    joints: Some(project_to_robot(&psi, map)?.q),
                    label: Some(class.to_string()),
                });
                latent.push(psi);
            }
        }
        Protocol::Wrist => {
            // flexor/extensor alternate during flexion/extension; the
            // abduction channel carries the same oscillation in both motions
            let r = spec.wrist_roles;
            let base = 0.1;
            let amp = 0.8;
            for i in 0..n {
                let t = t_of(i);
                let seg = WristSegment::ALL[(3 * i / n).min(2)];
                let wave = (std::f64::consts::TAU * t).sin();
                let mut ch = [base; N_CHANNELS];
                match seg {
                    WristSegment::Rest => {}
                    WristSegment::FlexExtend => {
                        ch[r.flexor] = base + amp * 0.5 * (1.0 + wave);
                        ch[r.extensor] = base + amp * 0.5 * (1.0 - wave);
                        ch[r.abductor] = base + amp * 0.5 * (1.0 + wave);
                    }
                    WristSegment::AbductAdduct => {
                        ch[r.abductor] = base + amp * 0.5 * (1.0 + wave);
                    }
                }
                let emg = ch
                    .iter()
                    .map(|&c| {
                        let z: f64 = rng.sample(StandardNormal);
                        sig9(c + spec.noise_std * z)
                    })
                    .collect();
                samples.push(SessionSample {
                    t,
                    emg,
                    joints: None,
                    label: Some(seg.as_str().to_string()),
                });
                latent.push(SubspacePose::origin());
            }
        }
    }

    let joints = samples
        .first()
        .and_then(|s| s.joints.as_ref())
        .map_or(0, Vec::len);
    let meta = SessionMeta {
        schema_version: SCHEMA_VERSION,
        sample_rate_hz: spec.sample_rate_hz,
        channels: N_CHANNELS,
        joints,
        labels: spec.protocol.labels(),
        hand_map: if joints > 0 {
            map.name.clone()
        } else {
            String::new()
        },
        protocol: spec.protocol.as_str().to_string(),
        seed: spec.seed,
        config_hash: String::new(),
    };
    Ok((Session { meta, samples }, latent))
}

pub fn generate_session(spec: &SessionSpec) -> Result<Session> {
    Ok(generate_with_latent(spec)?.0)
}

fn column_names(meta: &SessionMeta) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=meta.channels).map(|i| format!("e{i}")));
    cols.extend((1..=meta.joints).map(|i| format!("j{i}")));
    cols.push("label".into());
    cols
}

pub fn session_to_string(session: &Session) -> Result<String> {
    let header = toml::to_string(&session.meta).map_err(|e| Error::Toml(e.to_string()))?;
    let mut out = String::with_capacity(64 * (session.len() + 16));
    out.push_str("# teleop session\n");
    out.push_str(&header);
    out.push_str("---\n");
    out.push_str(&column_names(&session.meta).join(","));
    out.push('\n');
    for (i, s) in session.samples.iter().enumerate() {
        let joints = s.joints.as_deref().unwrap_or(&[]);
        if s.emg.len() != session.meta.channels || joints.len() != session.meta.joints {
            return Err(Error::AtSample {
                index: i,
                source: Box::new(Error::dim(
                    "session row",
                    format!(
                        "{} channels + {} joints",
                        session.meta.channels, session.meta.joints
                    ),
                    format!("{} + {}", s.emg.len(), joints.len()),
                )),
            });
        }
        write!(out, "{}", s.t).expect("string write");
        for v in s.emg.iter().chain(joints) {
            write!(out, ",{v}").expect("string write");
        }
        out.push(',');
        if let Some(l) = &s.label {
            out.push_str(l);
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_header(text: &str, line_offset: usize) -> Result<SessionMeta> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let at = e.span().map_or(0, |s| s.start);
        Error::Parse {
            line: line_offset + text[..at.min(text.len())].matches('\n').count(),
            byte_offset: at,
            field: "header".into(),
            message: e.message().to_string(),
        }
    })?;
    let version = match table.get("schema_version") {
        Some(toml::Value::Integer(v)) if *v >= 0 => *v as u32,
        _ => {
            return Err(Error::Schema {
                column: "schema_version".into(),
                message: "header must declare a non-negative integer schema_version".into(),
            })
        }
    };
    if version > SCHEMA_VERSION {
        return Err(Error::Version {
            found: version,
            supported: SCHEMA_VERSION,
            detail: String::new(),
        });
    }
    if let Some(key) = table.keys().find(|k| !META_KEYS.contains(&k.as_str())) {
        return Err(Error::Version {
            found: version,
            supported: SCHEMA_VERSION,
            detail: format!("; unknown header field `{key}`"),
        });
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Schema {
            column: "header".into(),
            message: e.message().to_string(),
        })
}

pub fn session_from_str(text: &str) -> Result<Session> {
    let mut offset = 0usize;
    let mut header_end = None;
    for (n, line) in text.split_inclusive('\n').enumerate() {
        if line.trim_end() == "---" {
            header_end = Some((n, offset, offset + line.len()));
            break;
        }
        offset += line.len();
    }
    let Some((sep_line, sep_start, body_start)) = header_end else {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            byte_offset: text.len(),
            field: "header".into(),
            message: "missing `---` separator after header".into(),
        });
    };
    let meta = parse_header(&text[..sep_start], 1)?;

    let cols = column_names(&meta);
    let mut line_no = sep_line + 2;
    let mut lines = text[body_start..].split_inclusive('\n');
    let mut pos = body_start;
    let Some(head) = lines.next() else {
        return Err(Error::Parse {
            line: line_no,
            byte_offset: pos,
            field: "columns".into(),
            message: "missing column header line".into(),
        });
    };
    let found: Vec<&str> = head.trim_end_matches(['\n', '\r']).split(',').collect();
    for (i, want) in cols.iter().enumerate() {
        match found.get(i) {
            Some(&got) if got == want => {}
            Some(&got) => {
                return Err(Error::Schema {
                    column: want.clone(),
                    message: format!(
                        "expected column `{want}` at position {}, found `{got}`",
                        i + 1
                    ),
                })
            }
            None => {
                return Err(Error::Schema {
                    column: want.clone(),
                    message: format!("column `{want}` missing"),
                })
            }
        }
    }
    if found.len() > cols.len() {
        return Err(Error::Schema {
            column: found[cols.len()].to_string(),
            message: format!(
                "unexpected extra column (header declares {} columns)",
                cols.len()
            ),
        });
    }
    pos += head.len();
    line_no += 1;

    let n_num = 1 + meta.channels + meta.joints;
    let mut samples = Vec::new();
    for raw in lines {
        let complete = raw.ends_with('\n');
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.is_empty() && !complete {
            break;
        }
        let mut values = Vec::with_capacity(n_num);
        let mut field_start = pos;
        let mut parts = line.split(',');
        for name in &cols[..n_num] {
            let Some(part) = parts.next() else {
                return Err(Error::Parse {
                    line: line_no,
                    byte_offset: pos + line.len(),
                    field: name.clone(),
                    message: "row ended early (truncated?)".into(),
                });
            };
            let v: f64 = part.parse().map_err(|_| Error::Parse {
                line: line_no,
                byte_offset: field_start,
                field: name.clone(),
                message: format!("`{part}` is not a number"),
            })?;
            values.push(v);
            field_start += part.len() + 1;
        }
        let Some(label) = parts.next() else {
            return Err(Error::Parse {
                line: line_no,
                byte_offset: pos + line.len(),
                field: "label".into(),
                message: "row ended early (truncated?)".into(),
            });
        };
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                byte_offset: field_start + label.len(),
                field: "label".into(),
                message: "more fields than declared columns".into(),
            });
        }
        if !label.is_empty() && !meta.labels.iter().any(|l| l == label) {
            return Err(Error::Parse {
                line: line_no,
                byte_offset: field_start,
                field: "label".into(),
                message: format!("label `{label}` not in the declared label set"),
            });
        }
        if !complete {
            return Err(Error::Parse {
                line: line_no,
                byte_offset: pos + raw.len(),
                field: "label".into(),
                message: "last row has no line terminator (truncated?)".into(),
            });
        }
        if let Some(prev) = samples.last().map(|s: &SessionSample| s.t) {
            if !(values[0] > prev) {
                return Err(Error::Parse {
                    line: line_no,
                    byte_offset: pos,
                    field: "t".into(),
                    message: format!("time {} does not increase past {prev}", values[0]),
                });
            }
        }
        let joints = (meta.joints > 0).then(|| values[1 + meta.channels..].to_vec());
        values.truncate(1 + meta.channels);
        let t = values.remove(0);
        samples.push(SessionSample {
            t,
            emg: values,
            joints,
            label: (!label.is_empty()).then(|| label.to_string()),
        });
        pos += raw.len();
        line_no += 1;
    }
    Ok(Session { meta, samples })
}

pub fn save_session(session: &Session, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, session_to_string(session)?)?;
    Ok(())
}

pub fn load_session(path: impl AsRef<Path>) -> Result<Session> {
    session_from_str(&std::fs::read_to_string(path)?)
}
