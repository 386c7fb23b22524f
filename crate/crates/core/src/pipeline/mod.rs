//! End-to-end commands: synthesize, analyze, evaluate.
//!
//! Every function here works on in-memory values and returns documents as
//! strings or byte buffers; the command-line front end only moves them to
//! and from files.

mod analyze;
mod evaluate;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use analyze::{
    analyze, detections_csv, detections_json, parse_detections_csv, Analysis, DetectionRecord,
};
pub use evaluate::{
    evaluate, parse_ground_truth, truth_csv, EvaluationReport, GroundTruthEntry, GroundTruthLog,
    SpeedError,
};

use crate::dsp::{DetectionConfig, StftConfig};
use crate::model::SensorGeometry;
use crate::synth::{self, Scenario};
use crate::wavio::{self, Recording};

pub const DEFAULT_MATCH_WINDOW_S: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Bad flags or configuration values.
    #[error("config error: {0}")]
    Config(String),
    /// An input file could not be read or parsed.
    #[error("input error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Output(String),
}

impl PipelineError {
    /// 0 is success; 1 usage/config; 2 input parse.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Output(_) => 1,
            PipelineError::Input(_) => 2,
        }
    }
}

/// Everything that influences an analysis run; echoed into every output
/// document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub geometry: SensorGeometry<f64>,
    pub stft: StftConfig,
    pub detection: DetectionConfig<f64>,
    pub match_window_s: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            geometry: SensorGeometry::with_angles(20.0, 20.0).expect("valid default geometry"),
            stft: StftConfig::default(),
            detection: DetectionConfig::default(),
            match_window_s: DEFAULT_MATCH_WINDOW_S,
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let cfg: AnalysisConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.stft
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.detection
            .validate(self.geometry.sample_rate())
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.match_window_s.is_finite() && self.match_window_s > 0.0) {
            return Err(PipelineError::Config(format!(
                "match_window_s must be positive, got {}",
                self.match_window_s
            )));
        }
        Ok(())
    }
}

/// Result of rendering a scenario file.
pub struct SynthOutput {
    pub wav: Vec<u8>,
    /// Ground truth in the evaluation input format.
    pub truth_csv: String,
}

pub fn synth_from_toml(text: &str) -> Result<SynthOutput, PipelineError> {
    let scenario: Scenario<f64> =
        Scenario::from_toml_str(text).map_err(|e| PipelineError::Input(e.to_string()))?;
    Ok(synth_scenario(&scenario))
}

pub fn synth_scenario(scenario: &Scenario<f64>) -> SynthOutput {
    let recording: Recording = synth::render(scenario);
    let truth = GroundTruthLog::from_expected(&synth::expected_detections(scenario));
    SynthOutput {
        wav: wavio::write_wav(&recording),
        truth_csv: truth_csv(&truth),
    }
}
