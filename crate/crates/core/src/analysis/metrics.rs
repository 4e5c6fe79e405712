use serde::{Deserialize, Serialize};

use crate::events::Label;
use crate::filters::Decision;

use super::AnalysisError;

/// Confusion counts with Signal as the positive class.
///
/// A ratio whose denominator is zero is reported as 0 and flagged in
/// `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

impl MetricsReport {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let mut undefined = Vec::new();
        let mut ratio = |name: &str, num: u64, den: u64| {
            if den == 0 {
                undefined.push(name.to_owned());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio("precision", tp, tp + fp);
        let recall = ratio("recall", tp, tp + fn_);
        let accuracy = ratio("accuracy", tp + tn, tp + fp + tn + fn_);
        Self {
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            accuracy,
            undefined,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn compute_metrics(
    decisions: &[Decision],
    labels: impl IntoIterator<Item = Label>,
) -> Result<MetricsReport, AnalysisError> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    let mut n = 0usize;
    for (i, label) in labels.into_iter().enumerate() {
        let Some(d) = decisions.get(i) else {
            return Err(AnalysisError::LengthMismatch {
                decisions: decisions.len(),
                labels: i + 1,
            });
        };
        match (label, d.is_signal) {
            (Label::Signal, true) => tp += 1,
            (Label::Signal, false) => fn_ += 1,
            (Label::Noise, true) => fp += 1,
            (Label::Noise, false) => tn += 1,
            (Label::Unknown, _) => return Err(AnalysisError::UnlabeledEvent { index: i }),
        }
        n = i + 1;
    }
    if n != decisions.len() {
        return Err(AnalysisError::LengthMismatch {
            decisions: decisions.len(),
            labels: n,
        });
    }
    Ok(MetricsReport::from_counts(tp, fp, tn, fn_))
}
