//! Confusion-matrix metrics, ROC curves, AUC and EER.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    /// Counts with label 1 as the positive (smoke) class.
    pub fn from_predictions(labels: &[u8], predicted: &[u8]) -> Result<Self> {
        if labels.len() != predicted.len() {
            return Err(Error::invalid(format!(
                "{} labels but {} predictions",
                labels.len(),
                predicted.len()
            )));
        }
        let mut c = Confusion::default();
        for (&y, &p) in labels.iter().zip(predicted) {
            match (y, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                (1, 0) => c.fn_ += 1,
                _ => return Err(Error::invalid(format!("labels must be 0 or 1, got ({y}, {p})"))),
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `(accuracy, f1)`.
    pub fn metrics(&self) -> Result<(f64, f64)> {
        metrics_from_confusion(self.tp, self.fp, self.tn, self.fn_)
    }
}

/// Accuracy `(tp + tn) / total` and F1 `2tp / (2tp + fp + fn)`, with F1 = 0
/// when there are no positives at all.
pub fn metrics_from_confusion(tp: u64, fp: u64, tn: u64, fn_: u64) -> Result<(f64, f64)> {
    let total = tp + fp + tn + fn_;
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let accuracy = (tp + tn) as f64 / total as f64;
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    };
    Ok((accuracy, f1))
}

/// One operating point. `threshold` is `None` for the initial point that
/// rejects everything (an infinite threshold).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: Option<f64>,
}

/// Sweeps thresholds over the distinct scores, highest first; a sample is
/// called positive when its score is `>=` the threshold.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite score {s}")));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data(format!(
            "ROC needs both classes, got {pos} positives and {neg} negatives"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: Some(t),
        });
    }
    Ok(points)
}

/// Trapezoid-rule area under the curve.
pub fn auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Rate at which the false-accept rate (FPR) equals the false-reject rate
/// (1 - TPR), interpolated linearly between the two bracketing points.
pub fn eer(roc: &[RocPoint]) -> f64 {
    // gap = FPR - FNR rises from -1 at (0,0) to +1 at (1,1).
    let gap = |p: &RocPoint| p.fpr - (1.0 - p.tpr);
    for w in roc.windows(2) {
        let (g0, g1) = (gap(&w[0]), gap(&w[1]));
        if g0 == 0.0 {
            return w[0].fpr;
        }
        if g0 < 0.0 && g1 >= 0.0 {
            let t = -g0 / (g1 - g0);
            return w[0].fpr + t * (w[1].fpr - w[0].fpr);
        }
    }
    roc.last().map_or(1.0, |p| p.fpr)
}
