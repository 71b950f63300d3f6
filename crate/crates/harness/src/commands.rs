//! The subcommand implementations, callable without the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::info;
use teleop_core::controllers::{
    calibrate_force, default_templates, method3_variance_analysis, run_controller, Controller,
    ForceCalibration, Method1, Method2, Method4, TrajectoryPoint, WristCalibration, WristSegment,
};
use teleop_core::models::persist::{load_model, save_model};
use teleop_core::models::{
    classification_report, nrmse, train_forest, train_krr, train_latent_space, train_nmf_lr,
    train_svm, AnyClassifier, AnyRegressor, Classifier, KrrConfig, LabeledWindow, NmfConfig,
    Regressor,
};
use teleop_core::pca::{fit_pca_subspace, pca_project, PcaSubspace};
use teleop_core::signal::envelope;
use teleop_core::subspace::{project_from_joints, HandMap};
use teleop_core::synth::{self, Protocol, Session, SessionSpec, N_CHANNELS};
use teleop_core::{maps, Error};

use crate::config::ExperimentConfig;
use crate::report::{
    mean, write_all, ClassifierRow, CompareReport, ComparisonReport, MethodStats, RegressorRow,
    WristReport,
};

pub const REGRESSORS: [&str; 3] = ["krr", "nmf_lr", "ls"];
pub const CLASSIFIERS: [&str; 2] = ["rf", "svm"];

fn display_name(file_stem: &str) -> &'static str {
    match file_stem {
        "krr" => "KRR",
        "nmf_lr" => "NMF+LR",
        "ls" => "LS",
        "rf" => "RF",
        "svm" => "SVM",
        _ => "?",
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn spec_for(
    cfg: &ExperimentConfig,
    seed: u64,
    protocol: Protocol,
) -> anyhow::Result<SessionSpec> {
    Ok(SessionSpec {
        duration_s: cfg.synth.duration_s,
        sample_rate_hz: cfg.synth.sample_rate_hz,
        gesture_interval_s: cfg.synth.gesture_interval_s,
        gesture_duration_s: cfg.synth.gesture_duration_s,
        noise_std: cfg.synth.noise_std,
        seed,
        protocol,
        human_map: maps::resolve(&cfg.human_map)?,
        ..SessionSpec::default()
    })
}

/// Writes the training session (seed `s`) and the test sessions (`s+1..`).
pub fn synth(cfg: &ExperimentConfig) -> anyhow::Result<Vec<PathBuf>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let protocol = cfg.protocol();
    let mut targets = vec![cfg.train_path()];
    targets.extend(cfg.test_paths());
    let mut written = Vec::new();
    for (i, path) in targets.into_iter().enumerate() {
        let mut session = synth::generate_session(&spec_for(cfg, cfg.seed + i as u64, protocol)?)?;
        session.meta.config_hash = hash.clone();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        synth::save_session(&session, &path)
            .with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {} ({} samples)", path.display(), session.len());
        written.push(path);
    }
    Ok(written)
}

pub fn load_checked(cfg: &ExperimentConfig, path: &Path) -> anyhow::Result<Session> {
    let s =
        synth::load_session(path).with_context(|| format!("loading session {}", path.display()))?;
    s.expect_channels(N_CHANNELS)?;
    if s.meta.sample_rate_hz != cfg.filter.sample_rate_hz {
        bail!(Error::Schema {
            column: "sample_rate_hz".into(),
            message: format!(
                "session {} is sampled at {} Hz, configuration expects {} Hz",
                path.display(),
                s.meta.sample_rate_hz,
                cfg.filter.sample_rate_hz
            ),
        });
    }
    Ok(s)
}

/// Filtered EMG vectors `x̂`, one per sample.
pub fn features(cfg: &ExperimentConfig, session: &Session) -> anyhow::Result<Vec<Vec<f64>>> {
    Ok(envelope(&session.emg::<f64>(), &cfg.filter)?
        .into_iter()
        .map(|s| s.channels)
        .collect())
}

fn joints(session: &Session) -> anyhow::Result<Vec<&[f64]>> {
    session
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.joints.as_deref().ok_or_else(|| {
                anyhow::Error::new(Error::AtSample {
                    index: i,
                    source: Box::new(Error::InvalidInput(
                        "session carries no joint angles".into(),
                    )),
                })
            })
        })
        .collect()
}

/// `(σ, ε)` ground truth from the recorded human joints.
fn subspace_targets(session: &Session, human: &HandMap<f64>) -> anyhow::Result<Vec<Vec<f64>>> {
    joints(session)?
        .into_iter()
        .map(|q| {
            let (psi, _) = project_from_joints(q, human)?;
            Ok(vec![psi.sigma, psi.epsilon])
        })
        .collect()
}

fn require_labels<'a>(session: &'a Session, what: &str) -> anyhow::Result<Vec<&'a str>> {
    session
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label.as_deref().ok_or_else(|| {
                anyhow::Error::new(Error::AtSample {
                    index: i,
                    source: Box::new(Error::InvalidInput(format!(
                        "missing gesture label required for {what} training"
                    ))),
                })
            })
        })
        .collect()
}

/// Training sets derived from one session, following the method's protocol.
pub struct TrainingSets {
    pub regression: Vec<LabeledWindow<f64>>,
    pub classification: Vec<LabeledWindow<f64>>,
    pub output_names: Vec<String>,
    pub pca: Option<PcaSubspace<f64>>,
}

/// Builds the supervised sets for `session`. For Method 2 the joint PCA is
/// fitted on the session unless `pca` supplies the trained one, so held-out
/// targets stay in the training basis.
pub fn training_sets(
    cfg: &ExperimentConfig,
    session: &Session,
    pca: Option<&PcaSubspace<f64>>,
) -> anyhow::Result<TrainingSets> {
    let x = features(cfg, session)?;
    let human: HandMap<f64> = maps::resolve(&cfg.human_map)?;
    match cfg.method {
        1 => {
            let labels = require_labels(session, "Method 1")?;
            let targets = subspace_targets(session, &human)?;
            // the regressor never sees gesture windows; the classifier sees everything
            let regression = x
                .iter()
                .zip(&targets)
                .zip(&labels)
                .filter(|(_, &l)| l == "Normal")
                .map(|((f, t), _)| LabeledWindow::regression(f.clone(), t.clone()))
                .collect();
            let classification = x
                .iter()
                .zip(&labels)
                .map(|(f, &l)| LabeledWindow::classification(f.clone(), l))
                .collect();
            Ok(TrainingSets {
                regression,
                classification,
                output_names: vec!["sigma".into(), "epsilon".into()],
                pca: None,
            })
        }
        2 => {
            let q = joints(session)?;
            let pca = match pca {
                Some(p) => p.clone(),
                None => fit_pca_subspace(&q, cfg.models.pca_threshold)?,
            };
            let regression = x
                .iter()
                .zip(&q)
                .map(|(f, q)| Ok(LabeledWindow::regression(f.clone(), pca_project(q, &pca)?)))
                .collect::<teleop_core::Result<Vec<_>>>()?;
            Ok(TrainingSets {
                regression,
                classification: Vec::new(),
                output_names: (1..=pca.n_components()).map(|i| format!("pc{i}")).collect(),
                pca: Some(pca),
            })
        }
        4 => {
            let labels = require_labels(session, "Method 4")?;
            let classification = x
                .iter()
                .zip(&labels)
                .map(|(f, &l)| LabeledWindow::classification(f.clone(), l))
                .collect();
            Ok(TrainingSets {
                regression: Vec::new(),
                classification,
                output_names: Vec::new(),
                pca: None,
            })
        }
        m => bail!(Error::InvalidConfig(format!(
            "method {m} has no training step; use analyze-wrist"
        ))),
    }
}

pub fn fit_regressor(
    cfg: &ExperimentConfig,
    which: &str,
    sets: &TrainingSets,
) -> anyhow::Result<AnyRegressor<f64>> {
    let names = &sets.output_names;
    Ok(match which {
        "krr" => AnyRegressor::Krr(train_krr(
            &sets.regression,
            &KrrConfig {
                output_names: names.clone(),
                ..cfg.models.krr.clone()
            },
        )?),
        "nmf_lr" => AnyRegressor::NmfLr(train_nmf_lr(
            &sets.regression,
            &NmfConfig {
                seed: cfg.seed,
                output_names: names.clone(),
                ..cfg.models.nmf.clone()
            },
        )?),
        "ls" => AnyRegressor::Latent(train_latent_space(
            &sets.regression,
            cfg.models.latent_dim,
            names,
        )?),
        other => bail!(Error::InvalidConfig(format!(
            "unknown regressor `{other}` (krr, nmf_lr, ls)"
        ))),
    })
}

pub fn fit_classifier(
    cfg: &ExperimentConfig,
    which: &str,
    sets: &TrainingSets,
) -> anyhow::Result<AnyClassifier<f64>> {
    Ok(match which {
        "rf" => AnyClassifier::Forest(train_forest(
            &sets.classification,
            &teleop_core::models::ForestConfig {
                seed: cfg.seed,
                ..cfg.models.forest.clone()
            },
        )?),
        "svm" => AnyClassifier::Svm(train_svm(&sets.classification, &cfg.models.svm)?),
        other => bail!(Error::InvalidConfig(format!(
            "unknown classifier `{other}` (rf, svm)"
        ))),
    })
}

fn force_calibration(
    cfg: &ExperimentConfig,
    session: &Session,
) -> anyhow::Result<ForceCalibration<f64>> {
    let labels = require_labels(session, "Method 4")?;
    let x = features(cfg, session)?;
    let pairs: Vec<(&str, Vec<f64>)> = labels.into_iter().zip(x).collect();
    Ok(calibrate_force(&pairs)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub files: Vec<PathBuf>,
    pub n_regression: usize,
    pub n_classification: usize,
}

/// Trains every regressor and classifier the method uses and writes them
/// to `<out_dir>/models`.
pub fn train(cfg: &ExperimentConfig) -> anyhow::Result<TrainSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    if cfg.method == 3 {
        bail!(Error::InvalidConfig(
            "method 3 is an analysis path; use analyze-wrist".into()
        ));
    }
    let session = load_checked(cfg, &cfg.train_path())?;
    let sets = training_sets(cfg, &session, None)?;
    let dir = cfg.model_dir();
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut put =
        |name: &str, save: &dyn Fn(&Path) -> teleop_core::Result<()>| -> anyhow::Result<()> {
            let p = dir.join(format!("{name}.json"));
            save(&p).with_context(|| format!("writing {}", p.display()))?;
            info!("wrote {}", p.display());
            files.push(p);
            Ok(())
        };
    if !sets.regression.is_empty() {
        for which in REGRESSORS {
            let m = fit_regressor(cfg, which, &sets)?;
            put(which, &|p| save_model(p, &m, Some(&hash)))?;
        }
    }
    if !sets.classification.is_empty() {
        for which in CLASSIFIERS {
            let m = fit_classifier(cfg, which, &sets)?;
            put(which, &|p| save_model(p, &m, Some(&hash)))?;
        }
    }
    if let Some(pca) = &sets.pca {
        put("pca", &|p| save_model(p, pca, Some(&hash)))?;
    }
    if cfg.method == 4 {
        let cal = force_calibration(cfg, &session)?;
        put("force_calibration", &|p| save_model(p, &cal, Some(&hash)))?;
    }
    Ok(TrainSummary {
        files,
        n_regression: sets.regression.len(),
        n_classification: sets.classification.len(),
    })
}

fn load_regressor(cfg: &ExperimentConfig, which: &str) -> anyhow::Result<AnyRegressor<f64>> {
    let p = cfg.model_dir().join(format!("{which}.json"));
    Ok(load_model(&p)
        .with_context(|| format!("loading {}", p.display()))?
        .model)
}

fn load_classifier(cfg: &ExperimentConfig, which: &str) -> anyhow::Result<AnyClassifier<f64>> {
    let p = cfg.model_dir().join(format!("{which}.json"));
    Ok(load_model(&p)
        .with_context(|| format!("loading {}", p.display()))?
        .model)
}

/// Per-session nRMSE for each regressor and accuracy for each classifier,
/// then the mean over sessions.
pub fn eval(cfg: &ExperimentConfig) -> anyhow::Result<ComparisonReport> {
    cfg.validate()?;
    if cfg.method == 3 {
        bail!(Error::InvalidConfig(
            "method 3 is an analysis path; use analyze-wrist".into()
        ));
    }
    let regressors: Vec<(&str, AnyRegressor<f64>)> = if cfg.method == 4 {
        Vec::new()
    } else {
        REGRESSORS
            .iter()
            .map(|&w| Ok((w, load_regressor(cfg, w)?)))
            .collect::<anyhow::Result<_>>()?
    };
    let classifiers: Vec<(&str, AnyClassifier<f64>)> = if cfg.method == 2 {
        Vec::new()
    } else {
        CLASSIFIERS
            .iter()
            .map(|&w| Ok((w, load_classifier(cfg, w)?)))
            .collect::<anyhow::Result<_>>()?
    };
    let pca: Option<PcaSubspace<f64>> = if cfg.method == 2 {
        Some(load_model(cfg.model_dir().join("pca.json"))?.model)
    } else {
        None
    };
    let outputs: Vec<String> = match regressors.first() {
        Some((_, AnyRegressor::Krr(m))) => m.output_names.clone(),
        Some((_, AnyRegressor::NmfLr(m))) => m.output_names.clone(),
        Some((_, AnyRegressor::Latent(m))) => m.output_names.clone(),
        None => Vec::new(),
    };

    let mut reg_scores: Vec<Vec<BTreeMap<String, f64>>> = vec![Vec::new(); regressors.len()];
    let mut clf_scores: Vec<Vec<f64>> = vec![Vec::new(); classifiers.len()];
    let mut names = Vec::new();
    for path in cfg.test_paths() {
        let session = load_checked(cfg, &path)?;
        names.push(stem(&path));
        let sets = training_sets(cfg, &session, pca.as_ref())?;
        if !regressors.is_empty() {
            let truth: Vec<&[f64]> = sets
                .regression
                .iter()
                .map(|w| w.target.as_deref().expect("set"))
                .collect();
            for (k, (_, model)) in regressors.iter().enumerate() {
                let pred: Vec<Vec<f64>> = sets
                    .regression
                    .iter()
                    .map(|w| model.predict(&w.features))
                    .collect::<teleop_core::Result<_>>()?;
                let mut per = BTreeMap::new();
                for (j, name) in outputs.iter().enumerate() {
                    let t: Vec<f64> = truth.iter().map(|r| r[j]).collect();
                    let p: Vec<f64> = pred.iter().map(|r| r[j]).collect();
                    per.insert(name.clone(), nrmse(&t, &p)?);
                }
                reg_scores[k].push(per);
            }
        }
        let truth: Vec<&str> = sets
            .classification
            .iter()
            .map(|w| w.gesture.as_deref().expect("set"))
            .collect();
        for (k, (_, model)) in classifiers.iter().enumerate() {
            let pred: Vec<&str> = sets
                .classification
                .iter()
                .map(|w| model.predict_label(&w.features))
                .collect::<teleop_core::Result<_>>()?;
            let r = classification_report(&truth, &pred)?;
            clf_scores[k].push(r.global_accuracy.expect("non-empty"));
        }
    }

    let report = ComparisonReport {
        method: cfg.method,
        config_hash: cfg.hash(),
        sessions: names,
        outputs: outputs.clone(),
        regressors: regressors
            .iter()
            .zip(reg_scores)
            .map(|((w, _), per_session)| RegressorRow {
                model: display_name(w).into(),
                nrmse: outputs
                    .iter()
                    .map(|o| {
                        (
                            o.clone(),
                            mean(&per_session.iter().map(|m| m[o]).collect::<Vec<_>>()),
                        )
                    })
                    .collect(),
                per_session,
            })
            .collect(),
        classifiers: classifiers
            .iter()
            .zip(clf_scores)
            .map(|((w, _), per_session)| ClassifierRow {
                model: display_name(w).into(),
                accuracy: mean(&per_session),
                per_session,
            })
            .collect(),
    };
    write_all(
        &cfg.out_dir,
        &format!("report_method{}", cfg.method),
        &report.to_text(),
        &report.to_tsv(),
        &report,
    )?;
    Ok(report)
}

pub fn trajectory_to_csv(points: &[TrajectoryPoint<f64>], config_hash: &str) -> String {
    let n = points.first().map_or(0, |p| p.q.len());
    let mut out = format!("# config_hash = {config_hash}\nt,label,mode,alpha,sigma,epsilon");
    for i in 1..=n {
        write!(out, ",q{i}").unwrap();
    }
    out.push_str(",n_clamped,stalled\n");
    for p in points {
        let mode = p.mode.map(|m| format!("{m:?}")).unwrap_or_default();
        write!(
            out,
            "{},{},{},{},{},{}",
            p.t,
            p.label.as_deref().unwrap_or(""),
            mode,
            p.psi.alpha,
            p.psi.sigma,
            p.psi.epsilon
        )
        .unwrap();
        for q in &p.q {
            write!(out, ",{q}").unwrap();
        }
        writeln!(
            out,
            ",{},{}",
            p.clamped.iter().filter(|&&c| c).count(),
            p.stalled
        )
        .unwrap();
    }
    out
}

/// Models and maps a controller borrows while it runs.
pub struct Bundle {
    pub method: u8,
    pub regressor: Option<AnyRegressor<f64>>,
    pub classifier: Option<AnyClassifier<f64>>,
    pub pca: Option<PcaSubspace<f64>>,
    pub calibration: Option<ForceCalibration<f64>>,
    pub human: HandMap<f64>,
    pub robot: HandMap<f64>,
}

impl Bundle {
    pub fn load(cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        let dir = cfg.model_dir();
        let load_pca =
            || -> anyhow::Result<PcaSubspace<f64>> { Ok(load_model(dir.join("pca.json"))?.model) };
        let load_cal = || -> anyhow::Result<ForceCalibration<f64>> {
            Ok(load_model(dir.join("force_calibration.json"))?.model)
        };
        Ok(Self {
            method: cfg.method,
            regressor: matches!(cfg.method, 1 | 2)
                .then(|| load_regressor(cfg, &cfg.models.regressor))
                .transpose()?,
            classifier: matches!(cfg.method, 1 | 4)
                .then(|| load_classifier(cfg, &cfg.models.classifier))
                .transpose()?,
            pca: (cfg.method == 2).then(load_pca).transpose()?,
            calibration: (cfg.method == 4).then(load_cal).transpose()?,
            human: maps::resolve(&cfg.human_map)?,
            robot: maps::resolve(&cfg.robot_map)?,
        })
    }

    /// Trains in memory what [`Bundle::load`] would read from disk.
    pub fn train(cfg: &ExperimentConfig, session: &Session) -> anyhow::Result<Self> {
        let sets = training_sets(cfg, session, None)?;
        Ok(Self {
            method: cfg.method,
            regressor: matches!(cfg.method, 1 | 2)
                .then(|| fit_regressor(cfg, &cfg.models.regressor, &sets))
                .transpose()?,
            classifier: matches!(cfg.method, 1 | 4)
                .then(|| fit_classifier(cfg, &cfg.models.classifier, &sets))
                .transpose()?,
            calibration: (cfg.method == 4)
                .then(|| force_calibration(cfg, session))
                .transpose()?,
            pca: sets.pca,
            human: maps::resolve(&cfg.human_map)?,
            robot: maps::resolve(&cfg.robot_map)?,
        })
    }

    pub fn run(
        &self,
        cfg: &ExperimentConfig,
        session: &Session,
    ) -> anyhow::Result<Vec<TrajectoryPoint<f64>>> {
        let dt = 1.0 / cfg.filter.sample_rate_hz;
        let emg = session.emg::<f64>();
        let missing = || {
            anyhow::anyhow!(Error::InvalidConfig(
                "controller bundle is missing a model".into()
            ))
        };
        let templates = default_templates::<f64>();
        let mut ctrl: Box<dyn Controller<f64> + '_> = match self.method {
            1 => Box::new(Method1::new(
                cfg.controller.clone(),
                dt,
                self.classifier.as_ref().ok_or_else(missing)?,
                self.regressor.as_ref().ok_or_else(missing)?,
                &self.robot,
            )?),
            2 => Box::new(Method2::new(
                dt,
                cfg.filter.median_window_s,
                self.regressor.as_ref().ok_or_else(missing)?,
                self.pca.as_ref().ok_or_else(missing)?,
                &self.human,
                &self.robot,
            )?),
            4 => Box::new(Method4::new(
                self.classifier.as_ref().ok_or_else(missing)?,
                self.calibration.as_ref().ok_or_else(missing)?,
                &templates,
                &self.robot,
            )?),
            m => bail!(Error::InvalidConfig(format!(
                "method {m} has no controller; use analyze-wrist"
            ))),
        };
        Ok(run_controller(ctrl.as_mut(), &emg, &cfg.filter)?)
    }
}

/// Runs the configured controller over each session and writes one
/// trajectory file per session.
pub fn run(cfg: &ExperimentConfig, sessions: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    cfg.validate()?;
    let bundle = Bundle::load(cfg)?;
    let hash = cfg.hash();
    let dir = cfg.out_dir.join("trajectories");
    std::fs::create_dir_all(&dir)?;
    let paths = if sessions.is_empty() {
        cfg.test_paths()
    } else {
        sessions.to_vec()
    };
    let mut out = Vec::new();
    for path in paths {
        let session = load_checked(cfg, &path)?;
        let traj = bundle.run(cfg, &session)?;
        let p = dir.join(format!("method{}_{}.csv", cfg.method, stem(&path)));
        std::fs::write(&p, trajectory_to_csv(&traj, &hash))?;
        info!("wrote {} ({} steps)", p.display(), traj.len());
        out.push(p);
    }
    Ok(out)
}

pub fn trajectory_stats(method: u8, runs: &[Vec<TrajectoryPoint<f64>>]) -> MethodStats {
    let mut s = MethodStats {
        method,
        steps: 0,
        mean_sigma: 0.0,
        sigma_jitter: 0.0,
        clamped_steps: 0,
        clamped_joints: 0,
        stalled_steps: 0,
    };
    let mut sigma_sum = 0.0;
    let mut jitter_sum = 0.0;
    let mut jitter_n = 0usize;
    for traj in runs {
        for (i, p) in traj.iter().enumerate() {
            s.steps += 1;
            sigma_sum += p.psi.sigma;
            let c = p.clamped.iter().filter(|&&c| c).count();
            s.clamped_joints += c;
            s.clamped_steps += usize::from(c > 0);
            s.stalled_steps += usize::from(p.stalled);
            if i > 0 {
                jitter_sum += (p.psi.sigma - traj[i - 1].psi.sigma).abs();
                jitter_n += 1;
            }
        }
    }
    s.mean_sigma = if s.steps > 0 {
        sigma_sum / s.steps as f64
    } else {
        0.0
    };
    s.sigma_jitter = if jitter_n > 0 {
        jitter_sum / jitter_n as f64
    } else {
        0.0
    };
    s
}

/// Methods 1, 2 and 4 on identical test sessions.
///
/// Methods 1 and 2 train on the configured training session; Method 4
/// needs grasp-type labels, so it trains on a grasp calibration session
/// generated from the same seed.
pub fn compare(cfg: &ExperimentConfig) -> anyhow::Result<CompareReport> {
    cfg.validate()?;
    let train = load_checked(cfg, &cfg.train_path())?;
    let tests: Vec<(String, Session)> = cfg
        .test_paths()
        .iter()
        .map(|p| Ok((stem(p), load_checked(cfg, p)?)))
        .collect::<anyhow::Result<_>>()?;
    let grasp = synth::generate_session(&spec_for(cfg, cfg.seed, Protocol::GraspPoses)?)?;
    let mut methods = Vec::new();
    for method in [1u8, 2, 4] {
        let mcfg = ExperimentConfig {
            method,
            ..cfg.clone()
        };
        let bundle = Bundle::train(&mcfg, if method == 4 { &grasp } else { &train })?;
        let runs: Vec<Vec<TrajectoryPoint<f64>>> = tests
            .iter()
            .map(|(_, s)| bundle.run(&mcfg, s))
            .collect::<anyhow::Result<_>>()?;
        info!(
            "method {method}: {} steps",
            runs.iter().map(Vec::len).sum::<usize>()
        );
        methods.push(trajectory_stats(method, &runs));
    }
    let report = CompareReport {
        config_hash: cfg.hash(),
        sessions: tests.into_iter().map(|(n, _)| n).collect(),
        methods,
    };
    write_all(
        &cfg.out_dir,
        "compare",
        &report.to_text(),
        &report.to_tsv(),
        &report,
    )?;
    Ok(report)
}

/// Wrist-axis variance analysis of the training session, calibrated on
/// its own per-role maxima.
pub fn analyze_wrist(cfg: &ExperimentConfig) -> anyhow::Result<WristReport> {
    cfg.validate()?;
    let path = cfg.train_path();
    let session = load_checked(cfg, &path)?;
    let x = features(cfg, &session)?;
    let segments: Vec<Option<WristSegment>> = session
        .samples
        .iter()
        .map(|s| s.label.as_deref().and_then(WristSegment::parse))
        .collect();
    let roles = cfg.wrist.roles;
    let calib = WristCalibration::from_envelopes(&x, &roles)?;
    let analysis = method3_variance_analysis(&x, &segments, &roles, &calib, cfg.wrist.threshold)?;
    let report = WristReport {
        config_hash: cfg.hash(),
        session: stem(&path),
        analysis,
    };
    write_all(
        &cfg.out_dir,
        "wrist_analysis",
        &report.to_text(),
        &report.to_tsv(),
        &report,
    )?;
    Ok(report)
}
