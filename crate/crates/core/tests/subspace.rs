use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teleop_core::maps::{self, human15, sdh7};
use teleop_core::pca::{fit_pca_components, fit_pca_subspace, pca_project, pca_reconstruct};
use teleop_core::subspace::{project_from_joints, project_to_robot, HandMap, SubspacePose};

fn unit() -> impl Strategy<Value = f64> {
    0.0f64..=1.0
}

fn pose() -> impl Strategy<Value = SubspacePose<f64>> {
    (unit(), unit(), unit()).prop_map(|(a, s, e)| SubspacePose::new(a, s, e))
}

/// Column-orthonormal map onto `n` joints from a seeded Gram–Schmidt.
fn random_orthonormal_map(n: usize, seed: u64) -> HandMap<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
    let q = m.qr().q();
    let delta_star: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..3.0));
    HandMap {
        name: format!("random{seed}"),
        n_joints: n,
        a: (0..n).map(|j| [q[(j, 0)], q[(j, 1)], q[(j, 2)]]).collect(),
        o: (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
        delta: delta_star.map(|d| 1.0 / d),
        delta_star,
        joint_limits: vec![[-100.0, 100.0]; n],
    }
}

proptest! {
    #[test]
    fn affine_difference_law(p in pose(), r in pose(), which in 0usize..3) {
        let map = match which {
            0 => human15::<f64>(),
            1 => sdh7(),
            _ => random_orthonormal_map(6, 9),
        };
        let a = map.forward_unclamped(&p);
        let b = map.forward_unclamped(&r);
        let (pa, ra) = (p.to_array(), r.to_array());
        for (j, row) in map.a.iter().enumerate() {
            let expect: f64 = (0..3).map(|k| (pa[k] - ra[k]) * map.delta_star[k] * row[k]).sum();
            prop_assert!((a[j] - b[j] - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn inverse_undoes_forward_on_orthonormal_maps(p in pose(), seed in 0u64..50, n in 3usize..12) {
        let map = random_orthonormal_map(n, seed);
        let q = project_to_robot(&p, &map).unwrap();
        prop_assert!(q.clamped.iter().all(|&c| !c));
        let (back, flags) = project_from_joints(&q.q, &map).unwrap();
        for (x, y) in back.to_array().iter().zip(p.to_array()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert!(flags.iter().all(|&f| !f) || back.to_array().iter().any(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn robot_commands_respect_limits(a in -0.5f64..1.5, s in -0.5f64..1.5, e in -0.5f64..1.5) {
        let map = sdh7::<f64>();
        let q = project_to_robot(&SubspacePose::new(a, s, e), &map).unwrap();
        for (v, [lo, hi]) in q.q.iter().zip(&map.joint_limits) {
            prop_assert!(*v >= *lo && *v <= *hi);
        }
    }

    #[test]
    fn pca_components_are_orthonormal(seed in 0u64..200, d in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..d).map(|j| rng.random_range(-1.0..1.0) * (j + 1) as f64).collect()).collect();
        let p = fit_pca_components(&rows, d).unwrap();
        let g = p.components.dot(&p.components.t());
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g[[i, j]] - want).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn fixed_examples_round_trip_on_builtin_human_map() {
    let map = human15::<f64>();
    for p in [
        [0.0, 0.0, 0.0],
        [1.0, 1.0, 1.0],
        [0.5, 0.25, 0.75],
        [0.1, 0.9, 0.3],
    ] {
        let psi = SubspacePose::from_array(p);
        let q = project_to_robot(&psi, &map).unwrap();
        assert_eq!(q.clamp_count(), 0);
        let (back, _) = project_from_joints(&q.q, &map).unwrap();
        for (x, y) in back.to_array().iter().zip(p) {
            assert!((x - y).abs() <= 1e-12, "{p:?}");
        }
    }
}

#[test]
fn origin_maps_to_offsets() {
    let map = sdh7::<f64>();
    let q = project_to_robot(&SubspacePose::origin(), &map).unwrap();
    assert_eq!(q.q, map.o);
}

#[test]
fn sdh_closes_into_its_limits() {
    let map = sdh7::<f64>();
    let q = project_to_robot(&SubspacePose::new(0.0, 1.0, 0.0), &map).unwrap();
    let driven = map.driven_by(teleop_core::subspace::SIGMA);
    assert!(driven.iter().zip(&q.clamped).all(|(&d, &c)| !d || c));
}

#[test]
fn hand_map_toml_round_trip() {
    for name in [maps::HUMAN15, maps::SDH7] {
        let map: HandMap<f64> = maps::resolve(name).unwrap();
        let back: HandMap<f64> = maps::from_toml(&maps::to_toml(&map).unwrap()).unwrap();
        assert_eq!(back, map);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hand.toml");
    let map = random_orthonormal_map(5, 3);
    maps::save_hand_map(&map, &path).unwrap();
    assert_eq!(maps::resolve::<f64>(path.to_str().unwrap()).unwrap(), map);
}

/// Population covariance eigenvalues, descending, from an independent solver.
fn oracle_spectrum(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let d = rows[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean = x.row_mean();
    let c = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = c.transpose() * &c / n as f64;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

#[test]
fn reconstruction_error_equals_discarded_spectrum() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 6;
        let scales = [3.0, 2.0, 1.5, 1.0, 0.5, 0.2];
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                (0..d)
                    .map(|j| rng.random_range(-1.0..1.0) * scales[j] + 0.3 * j as f64)
                    .collect()
            })
            .collect();
        let oracle = oracle_spectrum(&rows);
        for k in 1..d {
            let p = fit_pca_components(&rows, k).unwrap();
            for (a, b) in p.explained_variance.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9 * oracle[0]);
            }
            let mse: f64 = rows
                .iter()
                .map(|r| {
                    let rec = pca_reconstruct(&pca_project(r, &p).unwrap(), &p).unwrap();
                    r.iter()
                        .zip(&rec)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / rows.len() as f64;
            let discarded: f64 = oracle[k..].iter().sum();
            assert!(
                (mse - discarded).abs() <= 1e-6 * discarded,
                "seed {seed} k {k}: {mse} vs {discarded}"
            );
        }
    }
}

#[test]
fn threshold_picks_smallest_sufficient_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..500)
        .map(|_| {
            vec![
                rng.random_range(-1.0..1.0) * 4.0,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0) * 0.1,
            ]
        })
        .collect();
    let spec = oracle_spectrum(&rows);
    let total: f64 = spec.iter().sum();
    for threshold in [0.5, 0.9, 0.99, 1.0] {
        let p = fit_pca_subspace(&rows, threshold).unwrap();
        let k = p.n_components();
        assert!(spec[..k].iter().sum::<f64>() >= threshold * total * (1.0 - 1e-9));
        if k > 1 {
            assert!(spec[..k - 1].iter().sum::<f64>() < threshold * total);
        }
    }
}
