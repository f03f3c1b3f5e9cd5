//! Confusion-derived metrics and ROC / PR curves. Hallucinated is the
//! positive class and a score below the threshold predicts it.

use serde::{Deserialize, Serialize};

use super::{BenchError, GoldLabel};
use crate::pipeline::Confusion;

/// Ratio with zero-denominator flag.
fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of precision and recall, undefined when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> Option<f64> {
    let sum = precision + recall;
    (sum > 0.0).then(|| 2.0 * precision * recall / sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    /// Names of metrics whose denominator was zero; those are reported as 0.
    pub undefined: Vec<String>,
}

pub fn metrics_from_confusion(c: Confusion) -> Result<MetricsReport, BenchError> {
    let n = c.total();
    if n == 0 {
        return Err(BenchError::EmptyInput);
    }
    let mut undefined = Vec::new();
    let mut value = |name: &str, v: Option<f64>| {
        v.unwrap_or_else(|| {
            undefined.push(name.to_owned());
            0.0
        })
    };
    let accuracy = (c.tp + c.tn) as f64 / n as f64;
    let precision = value("precision", ratio(c.tp, c.tp + c.fp));
    let recall = value("recall", ratio(c.tp, c.tp + c.fn_));
    let specificity = value("specificity", ratio(c.tn, c.tn + c.fp));
    let f1 = value("f1", f1_score(precision, recall));
    let balanced_accuracy = (recall + specificity) / 2.0;
    Ok(MetricsReport {
        accuracy,
        balanced_accuracy,
        precision,
        recall,
        f1,
        confusion: c,
        undefined,
    })
}

/// Metrics over `(predicted hallucination, gold label)` pairs.
pub fn compute_metrics(verdicts: &[(bool, GoldLabel)]) -> Result<MetricsReport, BenchError> {
    let mut c = Confusion::default();
    for &(predicted, gold) in verdicts {
        c.record(predicted, gold.is_positive());
    }
    metrics_from_confusion(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Roc,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveData {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

impl CurveData {
    /// `threshold,x,y` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,x,y\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.x, p.y));
        }
        out
    }
}

pub fn trapezoid_auc(points: &[CurvePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[0].y + w[1].y) / 2.0)
        .sum()
}

/// Sweeps thresholds over `{0} ∪ scores ∪ {1}` in ascending order. When
/// some score is at least 1, one more point just above the largest score
/// makes every example positive. ROC needs both classes; PR needs a
/// positive. PR precision with no predicted positives is taken as 1.
pub fn build_curve(scored: &[(f64, GoldLabel)], kind: CurveKind) -> Result<CurveData, BenchError> {
    if scored.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    if scored.iter().any(|(s, _)| !s.is_finite()) {
        return Err(BenchError::NonFiniteScore);
    }
    let positives = scored.iter().filter(|(_, g)| g.is_positive()).count();
    let negatives = scored.len() - positives;
    match kind {
        CurveKind::Roc if positives == 0 || negatives == 0 => return Err(BenchError::SingleClass),
        CurveKind::Pr if positives == 0 => return Err(BenchError::SingleClass),
        _ => {}
    }
    let mut thresholds: Vec<f64> = scored.iter().map(|(s, _)| *s).chain([0.0, 1.0]).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let max = *thresholds.last().expect("nonempty");
    if scored.iter().any(|(s, _)| *s >= max) {
        thresholds.push(max + max.abs().max(1.0) * f64::EPSILON);
    }
    let points = thresholds
        .into_iter()
        .map(|threshold| {
            let mut c = Confusion::default();
            for &(s, g) in scored {
                c.record(s < threshold, g.is_positive());
            }
            let (x, y) = match kind {
                CurveKind::Roc => (c.fp as f64 / negatives as f64, c.tp as f64 / positives as f64),
                CurveKind::Pr => (c.tp as f64 / positives as f64, ratio(c.tp, c.tp + c.fp).unwrap_or(1.0)),
            };
            CurvePoint { x, y, threshold }
        })
        .collect::<Vec<_>>();
    let auc = trapezoid_auc(&points).clamp(0.0, 1.0);
    Ok(CurveData { kind, points, auc })
}
