//! Dataset evaluation: manifests, batch feature extraction, metrics and reports.

pub mod dataset;
pub mod manifest;
pub mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dataset::{
    extract_dataset_features, frame_features, load_frame, Extraction, FeatureCache, FeatureRow, FeatureTable,
    ImageFailure, PipelineParams,
};
pub use manifest::{load_manifest, Manifest, ManifestEntry};
pub use metrics::{auc, eer, metrics_from_confusion, roc_curve, Confusion, RocPoint};

use crate::baseline::Method;
use crate::error::{Error, Result};
use crate::saturation::{saturation_histogram, SatMethod, SatParams};
use crate::svm::{label_for_score, train, SvmParams};

/// An enhancement followed by GM-LoG features and the SVM, or a
/// saturation-histogram classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMethod {
    Svm(Method),
    Saturation(SatMethod),
}

impl EvalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMethod::Svm(m) => m.as_str(),
            EvalMethod::Saturation(s) => s.as_str(),
        }
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Method>()
            .map(EvalMethod::Svm)
            .or_else(|_| s.parse::<SatMethod>().map(EvalMethod::Saturation))
            .map_err(|_| Error::invalid(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalParams {
    pub pipeline: PipelineParams,
    pub svm: SvmParams,
    pub saturation: SatParams,
}

/// Parameters and decisions behind a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub classifier: String,
    /// How hard labels (and hence the confusion matrix) were obtained.
    pub decision_rule: String,
    pub decision_threshold: f64,
    pub feature_scaling: Option<String>,
    pub train_images: usize,
    pub test_images: usize,
    pub train_failures: usize,
    pub test_failures: usize,
    pub params: EvalParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub f1: f64,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub eer: f64,
    pub config_echo: ConfigEcho,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("bad report: {e}")))
    }

    /// Rows `fpr,tpr,threshold`; the initial threshold is written as `inf`.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.roc {
            let t = p.threshold.map_or("inf".to_string(), |t| t.to_string());
            out.push_str(&format!("{},{},{t}\n", p.fpr, p.tpr));
        }
        out
    }
}

fn check_disjoint(train: &Manifest, test: &Manifest) -> Result<()> {
    let test_ids = test.video_ids();
    let shared: Vec<&str> = train
        .video_ids()
        .into_iter()
        .filter(|id| test_ids.contains(id))
        .collect();
    if !shared.is_empty() {
        return Err(Error::Protocol(format!(
            "video ids in both train and test manifests: {}",
            shared.join(", ")
        )));
    }
    Ok(())
}

fn build_report(
    method: EvalMethod,
    labels: &[u8],
    scores: &[f64],
    predicted: &[u8],
    config_echo: ConfigEcho,
) -> Result<EvalReport> {
    let confusion = Confusion::from_predictions(labels, predicted)?;
    let (accuracy, f1) = confusion.metrics()?;
    let roc = roc_curve(scores, labels)?;
    Ok(EvalReport {
        method: method.to_string(),
        confusion,
        accuracy,
        f1,
        auc: auc(&roc),
        eer: eer(&roc),
        roc,
        config_echo,
    })
}

/// Trains on `train` (SVM methods only) and reports on `test`.
///
/// Video ids must not be shared between the two manifests.
pub fn evaluate(
    train_manifest: &Manifest,
    test_manifest: &Manifest,
    method: EvalMethod,
    params: &EvalParams,
    cache: Option<&FeatureCache>,
) -> Result<EvalReport> {
    check_disjoint(train_manifest, test_manifest)?;
    let enhancement = match method {
        EvalMethod::Saturation(s) => return evaluate_saturation(test_manifest, s, params),
        EvalMethod::Svm(m) => m,
    };
    let tr = extract_dataset_features(train_manifest, enhancement, &params.pipeline, cache)?;
    let te = extract_dataset_features(test_manifest, enhancement, &params.pipeline, cache)?;
    let model = train(&tr.table.features(), &tr.table.labels(), &params.svm)?;
    let scores = te
        .table
        .rows
        .iter()
        .map(|r| model.decision_score(&r.values))
        .collect::<Result<Vec<_>>>()?;
    let predicted: Vec<u8> = scores.iter().map(|&s| label_for_score(s)).collect();
    let echo = ConfigEcho {
        classifier: "linear_svm".into(),
        decision_rule: "smoke iff svm score > threshold".into(),
        decision_threshold: 0.0,
        feature_scaling: Some("per-dimension min-max to [0, 1], fitted on the training set".into()),
        train_images: tr.table.len(),
        test_images: te.table.len(),
        train_failures: tr.failures.len(),
        test_failures: te.failures.len(),
        params: *params,
    };
    build_report(method, &te.table.labels(), &scores, &predicted, echo)
}

/// Applies a saturation classifier to every image of `manifest`.
pub fn evaluate_saturation(
    manifest: &Manifest,
    method: SatMethod,
    params: &EvalParams,
) -> Result<EvalReport> {
    params.pipeline.validate()?;
    params.saturation.validate()?;
    let (done, failures) = dataset::map_entries(manifest, params.pipeline.max_failure_fraction, |path| {
        let frame = load_frame(path, &params.pipeline)?;
        method.classify(&saturation_histogram(&frame)?, &params.saturation)
    })?;
    let labels: Vec<u8> = done.iter().map(|(i, _)| manifest.entries()[*i].label).collect();
    let scores: Vec<f64> = done.iter().map(|(_, c)| c.score).collect();
    let predicted: Vec<u8> = done.iter().map(|(_, c)| c.label).collect();
    let (rule, threshold) = match method {
        SatMethod::San => ("smoke iff low-saturation fraction > threshold", 0.5),
        SatMethod::Spa => (
            "smoke iff peaks below t_c >= peaks above and at least one below",
            0.0,
        ),
    };
    let echo = ConfigEcho {
        classifier: method.to_string(),
        decision_rule: rule.into(),
        decision_threshold: threshold,
        feature_scaling: None,
        train_images: 0,
        test_images: done.len(),
        train_failures: 0,
        test_failures: failures.len(),
        params: *params,
    };
    build_report(EvalMethod::Saturation(method), &labels, &scores, &predicted, echo)
}
