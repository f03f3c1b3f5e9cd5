use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::explain::{Thresholds, DEFAULT_AGREE_THRESHOLD, DEFAULT_DISAGREE_THRESHOLD};
use crate::extraction::DEFAULT_RETRY_LIMIT;
use crate::kernel::{Directedness, WlOptions, DEFAULT_WL_ITERATIONS};
use crate::semantics::DEFAULT_CLUSTER_DISTANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    ClosedDomain,
    OpenDomain,
}

/// Named per-dataset defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Summeval,
    QagsC,
    Wikibio,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Summeval, Profile::QagsC, Profile::Wikibio];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Summeval => "summeval",
            Profile::QagsC => "qags_c",
            Profile::Wikibio => "wikibio",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        let norm = name.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|p| p.name() == norm)
    }

    pub fn threshold(self) -> f64 {
        match self {
            Profile::Summeval => 0.15,
            Profile::QagsC => 0.5,
            Profile::Wikibio => 0.3,
        }
    }

    pub fn mode(self) -> DetectionMode {
        match self {
            Profile::Summeval | Profile::QagsC => DetectionMode::ClosedDomain,
            Profile::Wikibio => DetectionMode::OpenDomain,
        }
    }

    pub fn config(self) -> DetectionConfig {
        DetectionConfig {
            mode: self.mode(),
            kernel_threshold: self.threshold(),
            ..DetectionConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub mode: DetectionMode,
    pub kernel_threshold: f64,
    pub wl_iterations: usize,
    pub cluster_distance: f64,
    pub explain_on_detect: bool,
    pub directedness: Directedness,
    pub agree_threshold: f64,
    pub disagree_threshold: f64,
    pub model_id: String,
    pub retry_limit: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            mode: DetectionMode::ClosedDomain,
            kernel_threshold: 0.5,
            wl_iterations: DEFAULT_WL_ITERATIONS,
            cluster_distance: DEFAULT_CLUSTER_DISTANCE,
            explain_on_detect: false,
            directedness: Directedness::Undirected,
            agree_threshold: DEFAULT_AGREE_THRESHOLD,
            disagree_threshold: DEFAULT_DISAGREE_THRESHOLD,
            model_id: String::new(),
            retry_limit: DEFAULT_RETRY_LIMIT,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |m: String| Err(PipelineError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.kernel_threshold) {
            return invalid(format!("kernel_threshold {} outside [0, 1]", self.kernel_threshold));
        }
        if !(self.cluster_distance >= 0.0 && self.cluster_distance.is_finite()) {
            return invalid(format!(
                "cluster_distance {} must be a nonnegative number",
                self.cluster_distance
            ));
        }
        if Thresholds::new(self.agree_threshold, self.disagree_threshold).is_err() {
            return invalid(format!(
                "contradiction thresholds need 0 <= disagree ({}) <= agree ({}) <= 1",
                self.disagree_threshold, self.agree_threshold
            ));
        }
        Ok(())
    }

    pub fn wl_options(&self) -> WlOptions {
        WlOptions {
            iterations: self.wl_iterations,
            directedness: self.directedness,
        }
    }

    pub fn contradiction_thresholds(&self) -> Thresholds {
        Thresholds {
            agree: self.agree_threshold,
            disagree: self.disagree_threshold,
        }
    }

    pub fn is_hallucination(&self, score: f64) -> bool {
        score < self.kernel_threshold
    }
}
