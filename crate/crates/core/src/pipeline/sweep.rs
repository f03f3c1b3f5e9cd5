use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    /// Tally of `score < threshold` predictions against gold labels, where
    /// `true` marks a hallucination.
    pub fn at_threshold(scores: &[(f64, bool)], threshold: f64) -> Self {
        let mut c = Self::default();
        for &(score, gold) in scores {
            c.record(score < threshold, gold);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTally {
    pub threshold: f64,
    #[serde(flatten)]
    pub confusion: Confusion,
}

/// Confusion counts at each grid threshold. The grid must be nonempty,
/// ascending and inside `[0, 1]`.
pub fn sweep_thresholds(scores: &[(f64, bool)], grid: &[f64]) -> Result<Vec<ThresholdTally>, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::InvalidGrid("grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(PipelineError::InvalidGrid(format!("threshold {t} outside [0, 1]")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(PipelineError::InvalidGrid("grid is not ascending".into()));
    }
    Ok(grid
        .iter()
        .map(|&threshold| ThresholdTally {
            threshold,
            confusion: Confusion::at_threshold(scores, threshold),
        })
        .collect())
}
