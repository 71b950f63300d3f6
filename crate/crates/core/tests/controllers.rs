use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teleop_core::controllers::stubs::{ConstantRegressor, FeatureRegressor, LabelFromFeature};
use teleop_core::controllers::{
    default_templates, method3_project, method3_variance_analysis, run_controller, run_filtered,
    Controller, ForceCalibration, Method1, Method1Config, Method2, Method4, Mode, StepOutput,
    WristCalibration, WristRoles, WristSegment,
};
use teleop_core::maps::{human15, sdh7};
use teleop_core::pca::{fit_pca_components, pca_project};
use teleop_core::signal::{envelope, EmgSample, FilterConfig};
use teleop_core::subspace::{project_from_joints, project_to_robot, HandMap, SubspacePose};
use teleop_core::synth::{generate_session, Protocol, SessionSpec};

/// Identity-like map whose limits never bind inside the unit cube.
fn wide_map() -> HandMap<f64> {
    HandMap {
        name: "wide".into(),
        n_joints: 3,
        a: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        o: vec![0.0; 3],
        delta: [1.0; 3],
        delta_star: [1.0; 3],
        joint_limits: vec![[-5.0, 5.0]; 3],
    }
}

const N: u8 = 0;
const S: u8 = 1;
const C: u8 = 2;

/// Features are `[class index, σ̂, ε̂]`; the regressor echoes the last two.
fn drive(
    cfg: Method1Config<f64>,
    dt: f64,
    map: &HandMap<f64>,
    script: &[(u8, f64, f64)],
) -> Vec<StepOutput<f64>> {
    let clf = LabelFromFeature::gestures(3, 0);
    let reg = FeatureRegressor {
        features: vec![1, 2],
        n_features: 3,
    };
    let mut m = Method1::new(cfg, dt, &clf, &reg, map).unwrap();
    script
        .iter()
        .map(|&(c, s, e)| m.step(&[c as f64, s, e]).unwrap())
        .collect()
}

fn assert_trace(out: &[StepOutput<f64>], want: &[([f64; 3], Mode)]) {
    assert_eq!(out.len(), want.len());
    for (i, (o, (psi, mode))) in out.iter().zip(want).enumerate() {
        for (k, (a, b)) in o.psi.to_array().iter().zip(psi).enumerate() {
            assert!(
                (a - b).abs() <= 1e-12,
                "step {} axis {k}: {a} vs {b}",
                i + 1
            );
        }
        assert_eq!(o.mode, Some(*mode), "step {}", i + 1);
    }
}

#[test]
fn golden_pure_spread() {
    let cfg = Method1Config {
        delta: 0.25,
        initial: SubspacePose::new(0.0, 0.3, 0.6),
        ..Method1Config::default()
    };
    let out = drive(cfg, 0.2, &wide_map(), &[(S, 0.0, 0.0); 10]);
    let want: Vec<([f64; 3], Mode)> = (1..=10)
        .map(|k| ([0.05 * k as f64, 0.3, 0.6], Mode::Spreading))
        .collect();
    assert_trace(&out, &want);
}

#[test]
fn golden_spread_from_upper_bound() {
    let clf = LabelFromFeature::gestures(3, 0);
    let reg = ConstantRegressor::new(vec![0.3, 0.7], 3);
    let map = wide_map();
    let cfg = Method1Config {
        delta: 0.25,
        initial: SubspacePose::new(1.0, 0.5, 0.5),
        ..Method1Config::default()
    };
    let mut m = Method1::new(cfg, 0.2, &clf, &reg, &map).unwrap();
    let o = m.step(&[1.0, 0.0, 0.0]).unwrap();
    assert!((o.psi.alpha - 0.95).abs() <= 1e-12);
    assert!(m.state.delta_rate < 0.0);
}

#[test]
fn golden_contract_toggle() {
    let cfg = Method1Config {
        gamma: 0.5,
        initial: SubspacePose::new(0.2, 0.1, 0.4),
        ..Method1Config::default()
    };
    let classes = [N, N, C, N, N, N, N, C, N, N];
    let script: Vec<_> = classes.iter().map(|&c| (c, 0.3, 0.7)).collect();
    let out = drive(cfg, 0.1, &wide_map(), &script);
    use Mode::*;
    assert_trace(
        &out,
        &[
            ([0.2, 0.3, 0.7], Regressing),
            ([0.2, 0.3, 0.7], Regressing),
            ([0.2, 0.35, 0.7], Closing),
            ([0.2, 0.40, 0.7], Closing),
            ([0.2, 0.45, 0.7], Closing),
            ([0.2, 0.50, 0.7], Closing),
            ([0.2, 0.55, 0.7], Closing),
            ([0.2, 0.55, 0.7], Regressing),
            ([0.2, 0.3, 0.7], Regressing),
            ([0.2, 0.3, 0.7], Regressing),
        ],
    );
}

#[test]
fn golden_mixed_sequence() {
    let cfg = Method1Config {
        delta: 2.5,
        gamma: 0.5,
        initial: SubspacePose::new(0.5, 0.2, 0.4),
        ..Method1Config::default()
    };
    let classes = [S, S, S, N, C, N, C, S, N, C, C, N, S, S, S, S];
    let script: Vec<_> = classes.iter().map(|&c| (c, 0.3, 0.7)).collect();
    let out = drive(cfg, 0.1, &wide_map(), &script);
    use Mode::*;
    assert_trace(
        &out,
        &[
            ([0.75, 0.2, 0.4], Spreading),
            ([1.0, 0.2, 0.4], Spreading),
            ([0.75, 0.2, 0.4], Spreading),
            ([0.75, 0.3, 0.7], Regressing),
            ([0.75, 0.35, 0.7], Closing),
            ([0.75, 0.40, 0.7], Closing),
            // second rising edge inside the refractory period is ignored
            ([0.75, 0.45, 0.7], Closing),
            ([0.75, 0.50, 0.7], Closing),
            ([0.75, 0.55, 0.7], Closing),
            ([0.75, 0.55, 0.7], Regressing),
            ([0.75, 0.55, 0.7], Regressing),
            ([0.75, 0.3, 0.7], Regressing),
            ([0.5, 0.3, 0.7], Spreading),
            ([0.25, 0.3, 0.7], Spreading),
            ([0.0, 0.3, 0.7], Spreading),
            ([0.25, 0.3, 0.7], Spreading),
        ],
    );
}

/// Random class runs with random (possibly out-of-range) regressor output.
fn random_script(rng: &mut ChaCha8Rng, len: usize) -> Vec<(u8, f64, f64)> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let class = rng.random_range(0..3u8);
        let run = rng.random_range(1..40);
        for _ in 0..run.min(len - out.len()) {
            out.push((
                class,
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
            ));
        }
    }
    out
}

fn check_laws(
    script: &[(u8, f64, f64)],
    out: &[StepOutput<f64>],
    initial: SubspacePose<f64>,
    deltas: &[f64],
) {
    let mut prev = initial;
    for (i, ((class, _, _), o)) in script.iter().zip(out).enumerate() {
        let p = o.psi;
        assert!(p.is_valid(), "step {i}: {p:?}");
        match (*class, o.mode) {
            (S, Some(m)) if m != Mode::Closing => {
                assert_eq!((p.sigma, p.epsilon), (prev.sigma, prev.epsilon), "step {i}");
            }
            _ => {}
        }
        if o.mode == Some(Mode::Closing) {
            assert_eq!((p.alpha, p.epsilon), (prev.alpha, prev.epsilon), "step {i}");
            assert!(p.sigma >= prev.sigma, "step {i}");
        }
        if *class == N && o.mode == Some(Mode::Regressing) {
            assert_eq!(p.alpha, prev.alpha, "step {i}");
        }
        if i > 0 && deltas[i].signum() != deltas[i - 1].signum() {
            let at_bound = |a: f64| a == 0.0 || a == 1.0;
            assert!(
                at_bound(p.alpha) || at_bound(prev.alpha),
                "step {i}: flip at α {}",
                p.alpha
            );
        }
        prev = p;
    }
}

#[test]
fn freeze_laws_hold_under_fuzzing() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let clf = LabelFromFeature::gestures(3, 0);
    let reg = FeatureRegressor {
        features: vec![1, 2],
        n_features: 3,
    };
    let maps = [wide_map(), sdh7()];
    for round in 0..20 {
        let map = &maps[round % 2];
        let initial = SubspacePose::new(rng.random(), rng.random(), rng.random());
        let cfg = Method1Config {
            delta: rng.random_range(0.05..3.0),
            gamma: rng.random_range(0.05..3.0),
            refractory_s: rng.random_range(0.0..0.5),
            stall_window: rng.random_range(1..10),
            initial,
            ..Method1Config::default()
        };
        let dt = [0.005, 0.01, 0.05][round % 3];
        let script = random_script(&mut rng, 2000);
        let mut m = Method1::new(cfg, dt, &clf, &reg, map).unwrap();
        let mut out = Vec::new();
        let mut deltas = Vec::new();
        for &(c, s, e) in &script {
            let o = m.step(&[c as f64, s, e]).unwrap();
            for (q, [lo, hi]) in o.command.q.iter().zip(&map.joint_limits) {
                assert!(q >= lo && q <= hi);
            }
            out.push(o);
            deltas.push(m.state.delta_rate);
        }
        check_laws(&script, &out, initial, &deltas);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closing_reaches_one_and_stays(gamma in 0.05f64..5.0, dt in 0.001f64..0.05, sigma0 in 0.0f64..1.0, extra in 1usize..50) {
        let clf = LabelFromFeature::gestures(3, 0);
        let reg = ConstantRegressor::new(vec![0.3, 0.7], 3);
        let map = wide_map();
        let cfg = Method1Config { gamma, initial: SubspacePose::new(0.4, sigma0, 0.6), ..Method1Config::default() };
        let mut m = Method1::new(cfg, dt, &clf, &reg, &map).unwrap();
        m.step(&[2.0, 0.0, 0.0]).unwrap();
        prop_assert_eq!(m.state.mode, Mode::Closing);
        let bound = (1.0 / (gamma * dt)).ceil() as usize;
        let mut reached = None;
        for k in 1..=bound + extra {
            let o = m.step(&[0.0, 0.0, 0.0]).unwrap();
            if o.psi.sigma == 1.0 && reached.is_none() {
                reached = Some(k);
            }
            if reached.is_some() {
                prop_assert_eq!(o.psi.sigma, 1.0);
            }
        }
        prop_assert!(reached.is_some_and(|k| k <= bound));
    }

    #[test]
    fn method4_is_lipschitz_in_force(class in 0usize..3, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let clf = LabelFromFeature::poses(4, 0);
        let mut ranges = BTreeMap::new();
        for (i, name) in ["Power", "Precision", "Pinch"].iter().enumerate() {
            ranges.insert(name.to_string(), [0.1 + 0.05 * i as f64, 0.6 + 0.1 * i as f64]);
        }
        let calib = ForceCalibration { ranges };
        let templates = default_templates::<f64>();
        let map = sdh7::<f64>();
        let mut m = Method4::new(&clf, &calib, &templates, &map).unwrap();
        // F is the mean over all four channels, class channel included
        let x = |f: f64| {
            let rest = (4.0 * f - class as f64) / 3.0;
            vec![class as f64, rest, rest, rest]
        };
        prop_assume!((4.0 * f1 - class as f64) >= 0.0 && (4.0 * f2 - class as f64) >= 0.0);
        let a = m.step(&x(f1)).unwrap();
        let b = m.step(&x(f2)).unwrap();
        let label = a.label.clone().unwrap();
        let t = &templates[&label];
        let [lo, hi] = calib.ranges[&label];
        let (pa, pb) = (a.psi.to_array(), b.psi.to_array());
        let (open, closed) = (t.open.to_array(), t.closed.to_array());
        for k in 0..3 {
            let lip = (open[k] - closed[k]).abs() / (hi - lo);
            prop_assert!((pa[k] - pb[k]).abs() <= lip * (f1 - f2).abs() + 1e-12);
        }
        for (q, [lo, hi]) in a.command.q.iter().zip(&map.joint_limits) {
            prop_assert!(q >= lo && q <= hi);
        }
    }
}

#[test]
fn method4_endpoints_and_midpoint() {
    let clf = LabelFromFeature::poses(2, 0);
    let mut ranges = BTreeMap::new();
    // F = (1 + x1) / 2 for class Precision
    for name in ["Power", "Precision", "Pinch"] {
        ranges.insert(name.to_string(), [0.5, 1.0]);
    }
    let calib = ForceCalibration { ranges };
    let templates = default_templates::<f64>();
    let map = sdh7::<f64>();
    let mut m = Method4::new(&clf, &calib, &templates, &map).unwrap();
    let t = &templates["Precision"];
    assert_eq!(m.step(&[1.0, 0.0]).unwrap().psi, t.closed);
    assert_eq!(m.step(&[1.0, 1.0]).unwrap().psi, t.open);
    let mid = m.step(&[1.0, 0.5]).unwrap().psi.to_array();
    for ((v, o), c) in mid.iter().zip(t.open.to_array()).zip(t.closed.to_array()) {
        assert!((v - 0.5 * (o + c)).abs() < 1e-12);
    }
    let missing = ForceCalibration {
        ranges: BTreeMap::from([("Power".to_string(), [0.0, 1.0])]),
    };
    assert!(Method4::new(&clf, &missing, &templates, &map).is_err());
}

fn human_training_joints(seed: u64, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map = human15::<f64>();
    (0..n)
        .map(|_| {
            project_to_robot(
                &SubspacePose::new(rng.random(), rng.random(), rng.random()),
                &map,
            )
            .unwrap()
            .q
        })
        .collect()
}

#[test]
fn method2_examples() {
    let human = human15::<f64>();
    let robot = sdh7::<f64>();
    let joints = human_training_joints(8, 200);
    let pca = fit_pca_components(&joints, 3).unwrap();

    // zero coefficients decode to the mean pose
    let zero = ConstantRegressor::new(vec![0.0; 3], 2);
    let mut m = Method2::new(0.005, 0.2, &zero, &pca, &human, &robot).unwrap();
    let (psi_mean, _) = project_from_joints(&pca.mean, &human).unwrap();
    let o = m.step(&[0.0, 0.0]).unwrap();
    assert_eq!(o.psi, psi_mean);
    assert_eq!(o.command, project_to_robot(&psi_mean, &robot).unwrap());

    // a training pose in the span comes back through its coefficients
    let target = &joints[17];
    let coef = pca_project(target, &pca).unwrap();
    let (want, _) = project_from_joints(target, &human).unwrap();
    let reg = ConstantRegressor::new(coef, 2);
    let mut m = Method2::new(0.005, 0.2, &reg, &pca, &human, &robot).unwrap();
    let got = m.step(&[0.0, 0.0]).unwrap().psi;
    for (a, b) in got.to_array().iter().zip(want.to_array()) {
        assert!((a - b).abs() < 1e-6);
    }

    // identity chain reproduces the encoded joints
    let mut m = Method2::new(0.005, 0.2, &reg, &pca, &human, &human).unwrap();
    let q = m.step(&[0.0, 0.0]).unwrap().command.q;
    for (a, b) in q.iter().zip(target) {
        assert!((a - b).abs() < 1e-6);
    }

    let bad = ConstantRegressor::new(vec![0.0; 2], 2);
    assert!(Method2::new(0.005, 0.2, &bad, &pca, &human, &robot).is_err());
}

#[test]
fn method3_on_constructed_wrist_session() {
    let spec = SessionSpec {
        duration_s: 30.0,
        noise_std: 0.0,
        protocol: Protocol::Wrist,
        ..SessionSpec::default()
    };
    let session = generate_session(&spec).unwrap();
    let cfg = FilterConfig::default();
    let x: Vec<Vec<f64>> = envelope(&session.emg::<f64>(), &cfg)
        .unwrap()
        .into_iter()
        .map(|s| s.channels)
        .collect();
    let segments: Vec<Option<WristSegment>> = session
        .labels()
        .iter()
        .map(|l| l.and_then(WristSegment::parse))
        .collect();
    let roles = spec.wrist_roles;
    let calib = WristCalibration::from_envelopes(&x, &roles).unwrap();
    let a = method3_variance_analysis(&x, &segments, &roles, &calib, 10.0).unwrap();
    assert_eq!((a.segments[0].var_c1, a.segments[0].var_c2), (0.0, 0.0));
    assert!(a.c1_ratio >= 10.0 && a.c1_responds);
    assert!(!a.c2_responds);

    // direct variance of C1 in the flex_extend segment agrees
    let c1: Vec<f64> = x
        .iter()
        .zip(&segments)
        .filter(|(_, s)| **s == Some(WristSegment::FlexExtend))
        .map(|(e, _)| method3_project(e, &roles, &calib).unwrap().0)
        .collect();
    let mean = c1.iter().sum::<f64>() / c1.len() as f64;
    let var = c1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c1.len() as f64;
    assert!((var - a.segments[1].var_c1).abs() <= 1e-12 * var.max(1.0));
}

#[test]
fn method3_rejects_missing_role_and_empty_segment() {
    let roles = WristRoles {
        flexor: 0,
        extensor: 1,
        abductor: 9,
    };
    let calib = WristCalibration {
        flexor_mvc: 1.0,
        extensor_mvc: 1.0,
        abductor_mvc: 1.0,
    };
    assert!(method3_project(&[0.1, 0.2, 0.3], &roles, &calib).is_err());
    let ok = WristRoles {
        abductor: 2,
        ..roles
    };
    let env = vec![vec![0.1, 0.2, 0.3]; 4];
    let segs = vec![
        Some(WristSegment::Rest),
        Some(WristSegment::FlexExtend),
        None,
        None,
    ];
    assert!(method3_variance_analysis(&env, &segs, &ok, &calib, 10.0).is_err());
}

#[test]
fn run_controller_examples() {
    let clf = LabelFromFeature::gestures(2, 0);
    let reg = ConstantRegressor::new(vec![0.3, 0.7], 2);
    let map = sdh7::<f64>();
    let cfg = FilterConfig::default();
    let init = Method1Config {
        initial: SubspacePose::new(0.4, 0.0, 0.0),
        ..Method1Config::default()
    };
    let mut m = Method1::new(init.clone(), 0.005, &clf, &reg, &map).unwrap();
    assert!(run_controller(&mut m, &[], &cfg).unwrap().is_empty());

    // channel 0 stays at 0 so the stub keeps reporting Normal
    let samples: Vec<EmgSample<f64>> = (0..400)
        .map(|i| EmgSample::new(i as f64 * 0.005, vec![0.0, (i as f64).sin()]))
        .collect();
    let a = run_controller(&mut m, &samples, &cfg).unwrap();
    assert_eq!(a.len(), samples.len());
    assert!(a.iter().all(|p| p.psi == SubspacePose::new(0.4, 0.3, 0.7)));
    m.reset();
    assert_eq!(run_controller(&mut m, &samples, &cfg).unwrap(), a);

    let mut bad = samples.clone();
    bad[100].t += 0.003;
    let err = run_controller(&mut m, &bad, &cfg).unwrap_err();
    assert_eq!(err.kind(), "sampling");
}

#[test]
fn closing_stalls_when_joints_clamp() {
    let clf = LabelFromFeature::gestures(3, 0);
    let reg = ConstantRegressor::new(vec![0.0, 0.0], 3);
    let map = sdh7::<f64>();
    let cfg = Method1Config {
        gamma: 0.4,
        stall_window: 5,
        initial: SubspacePose::new(0.0, 0.0, 0.0),
        ..Method1Config::default()
    };
    let mut m = Method1::new(cfg, 0.01, &clf, &reg, &map).unwrap();
    let mut x = vec![vec![2.0, 0.0, 0.0]];
    x.extend(std::iter::repeat_n(vec![0.0, 0.0, 0.0], 400));
    let out = run_filtered(&mut m, &x).unwrap();
    let last = out.last().unwrap();
    assert!(last.stalled);
    assert!(
        last.psi.sigma < 1.0,
        "stalled before σ reached 1: {}",
        last.psi.sigma
    );
    let first_stall = out.iter().position(|o| o.stalled).unwrap();
    assert!(out[first_stall..]
        .iter()
        .all(|o| o.psi.sigma == last.psi.sigma));
}
