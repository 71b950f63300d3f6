//! Evaluation and comparison reports in aligned-text, TSV and JSON form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use teleop_core::controllers::WristAnalysis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorRow {
    pub model: String,
    /// Mean over sessions, per output axis (percent).
    pub nrmse: BTreeMap<String, f64>,
    pub per_session: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRow {
    pub model: String,
    /// Mean global accuracy over sessions (percent).
    pub accuracy: f64,
    pub per_session: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub method: u8,
    pub config_hash: String,
    pub sessions: Vec<String>,
    /// Output axis names, in column order.
    pub outputs: Vec<String>,
    pub regressors: Vec<RegressorRow>,
    pub classifiers: Vec<ClassifierRow>,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn axis_symbol(name: &str) -> &str {
    match name {
        "sigma" => "σ",
        "epsilon" => "ε",
        "alpha" => "α",
        other => other,
    }
}

impl ComparisonReport {
    pub fn regressor(&self, model: &str) -> Option<&RegressorRow> {
        self.regressors.iter().find(|r| r.model == model)
    }

    pub fn classifier(&self, model: &str) -> Option<&ClassifierRow> {
        self.classifiers.iter().find(|r| r.model == model)
    }

    pub fn to_text(&self) -> String {
        let mut cols: Vec<String> = self
            .outputs
            .iter()
            .map(|o| format!("nRMSE {}", axis_symbol(o)))
            .collect();
        cols.push("Accuracy".into());
        let mut out = String::new();
        writeln!(
            out,
            "Method {}: normalized RMSE of regressors and global accuracy of classifiers, averaged over {} test session(s)",
            self.method,
            self.sessions.len()
        )
        .unwrap();
        writeln!(out, "config_hash: {}", self.config_hash).unwrap();
        write!(out, "{:<8}", "Model").unwrap();
        for c in &cols {
            write!(out, " {c:>10}").unwrap();
        }
        out.push('\n');
        for r in &self.regressors {
            write!(out, "{:<8}", r.model).unwrap();
            for o in &self.outputs {
                write!(out, " {:>9.1}%", r.nrmse[o]).unwrap();
            }
            writeln!(out, " {:>10}", "-").unwrap();
        }
        for c in &self.classifiers {
            write!(out, "{:<8}", c.model).unwrap();
            for _ in &self.outputs {
                write!(out, " {:>10}", "-").unwrap();
            }
            writeln!(out, " {:>9.1}%", c.accuracy).unwrap();
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# config_hash\t{}\nmodel", self.config_hash);
        for o in &self.outputs {
            write!(out, "\tnrmse_{o}").unwrap();
        }
        out.push_str("\taccuracy\n");
        for r in &self.regressors {
            out.push_str(&r.model);
            for o in &self.outputs {
                write!(out, "\t{}", r.nrmse[o]).unwrap();
            }
            out.push_str("\t\n");
        }
        for c in &self.classifiers {
            out.push_str(&c.model);
            for _ in &self.outputs {
                out.push('\t');
            }
            writeln!(out, "\t{}", c.accuracy).unwrap();
        }
        out
    }
}

/// Per-method trajectory statistics over the same test sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: u8,
    pub steps: usize,
    pub mean_sigma: f64,
    /// Mean absolute per-step change of σ.
    pub sigma_jitter: f64,
    /// Steps with at least one clamped joint.
    pub clamped_steps: usize,
    pub clamped_joints: usize,
    pub stalled_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config_hash: String,
    pub sessions: Vec<String>,
    pub methods: Vec<MethodStats>,
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "Controller comparison over {} session(s)\nconfig_hash: {}\n{:<8} {:>8} {:>10} {:>12} {:>10} {:>10} {:>8}\n",
            self.sessions.len(),
            self.config_hash,
            "Method",
            "steps",
            "mean σ",
            "σ jitter",
            "clamped",
            "joints",
            "stalled"
        );
        for m in &self.methods {
            writeln!(
                out,
                "{:<8} {:>8} {:>10.4} {:>12.6} {:>10} {:>10} {:>8}",
                m.method,
                m.steps,
                m.mean_sigma,
                m.sigma_jitter,
                m.clamped_steps,
                m.clamped_joints,
                m.stalled_steps
            )
            .unwrap();
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# config_hash\t{}\n", self.config_hash);
        out.push_str("method\tsteps\tmean_sigma\tsigma_jitter\tclamped_steps\tclamped_joints\tstalled_steps\n");
        for m in &self.methods {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                m.method,
                m.steps,
                m.mean_sigma,
                m.sigma_jitter,
                m.clamped_steps,
                m.clamped_joints,
                m.stalled_steps
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WristReport {
    pub config_hash: String,
    pub session: String,
    pub analysis: WristAnalysis<f64>,
}

fn verdict(yes: bool) -> &'static str {
    if yes {
        "axis responds to expected motion"
    } else {
        "axis does NOT respond to expected motion"
    }
}

impl WristReport {
    pub fn to_text(&self) -> String {
        let a = &self.analysis;
        let mut out = format!(
            "Wrist-axis variance analysis: {}\nconfig_hash: {}\n{:<14} {:>8} {:>14} {:>14}\n",
            self.session, self.config_hash, "segment", "samples", "var C1", "var C2"
        );
        for s in &a.segments {
            writeln!(
                out,
                "{:<14} {:>8} {:>14.6} {:>14.6}",
                s.segment.as_str(),
                s.n_samples,
                s.var_c1,
                s.var_c2
            )
            .unwrap();
        }
        writeln!(
            out,
            "C1: flex_extend/rest ratio {:.3e}, selectivity {:.3e} -> {}",
            a.c1_ratio,
            a.c1_selectivity,
            verdict(a.c1_responds)
        )
        .unwrap();
        writeln!(
            out,
            "C2: abduct_adduct/rest ratio {:.3e}, selectivity {:.3e} -> {}",
            a.c2_ratio,
            a.c2_selectivity,
            verdict(a.c2_responds)
        )
        .unwrap();
        writeln!(out, "threshold: {}", a.threshold).unwrap();
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# config_hash\t{}\nsegment\tsamples\tvar_c1\tvar_c2\n",
            self.config_hash
        );
        for s in &self.analysis.segments {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                s.segment.as_str(),
                s.n_samples,
                s.var_c1,
                s.var_c2
            )
            .unwrap();
        }
        out
    }
}

/// Writes `<stem>.txt`, `<stem>.tsv` and `<stem>.json` into `dir`.
pub fn write_all<R: Serialize>(
    dir: &Path,
    stem: &str,
    text: &str,
    tsv: &str,
    report: &R,
) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths = [
        (dir.join(format!("{stem}.txt")), text.to_string()),
        (dir.join(format!("{stem}.tsv")), tsv.to_string()),
        (
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(report)? + "\n",
        ),
    ];
    let mut out = Vec::new();
    for (p, body) in paths {
        std::fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}
