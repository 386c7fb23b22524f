use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AnalysisConfig, PipelineError};
use crate::dsp::{self, MaskedSpectrogram, Spectrogram};
use crate::model::DetectionEvent;
use crate::wavio::Recording;

pub struct Analysis {
    /// Effective configuration; the geometry carries the recording's rate.
    pub config: AnalysisConfig,
    pub n_samples: usize,
    pub noise_floor_db: f64,
    pub spectrogram: Spectrogram<f64>,
    pub masked: MaskedSpectrogram<f64>,
    pub detections: Vec<DetectionEvent<f64>>,
}

impl Analysis {
    pub fn records(&self) -> Vec<DetectionRecord> {
        self.detections.iter().map(DetectionRecord::from).collect()
    }
}

/// Runs the full detector over one recording.
pub fn analyze(rec: &Recording, cfg: &AnalysisConfig) -> Result<Analysis, PipelineError> {
    let mut config = *cfg;
    if config.geometry.sample_rate() != rec.sample_rate {
        log::info!(
            "recording is {} Hz, overriding configured {} Hz",
            rec.sample_rate,
            config.geometry.sample_rate()
        );
        config.geometry = config
            .geometry
            .with_sample_rate(rec.sample_rate)
            .map_err(|e| PipelineError::Input(e.to_string()))?;
    }
    config.validate()?;

    let samples = rec.to_float::<f64>();
    let spectrogram = dsp::spectrogram(&samples, rec.sample_rate, &config.stft)
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    let noise_floor_db = dsp::estimate_noise_floor(&spectrogram, config.detection.min_frequency_hz);
    let masked = dsp::apply_thresholds(&spectrogram, &config.detection, noise_floor_db);
    let events = dsp::segment_events(&masked, &config.detection);
    let detections = dsp::estimate_speeds(&events, &config.geometry);
    log::info!(
        "{} frames, floor {:.1} dB, {} retained cells, {} detections",
        spectrogram.n_frames(),
        noise_floor_db,
        masked.retained_count(),
        detections.len()
    );
    Ok(Analysis {
        config,
        n_samples: rec.samples.len(),
        noise_floor_db,
        spectrogram,
        masked,
        detections,
    })
}

/// A detection at reporting precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub t_start: f64,
    pub t_end: f64,
    pub peak_frequency_hz: f64,
    pub speed_kmh: f64,
    pub peak_power_db: f64,
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

impl From<&DetectionEvent<f64>> for DetectionRecord {
    fn from(e: &DetectionEvent<f64>) -> Self {
        DetectionRecord {
            t_start: round_to(e.t_start, 3),
            t_end: round_to(e.t_end, 3),
            peak_frequency_hz: round_to(e.peak_frequency, 1),
            speed_kmh: round_to(e.estimated_speed, 1),
            peak_power_db: round_to(e.peak_power_db, 1),
        }
    }
}

impl DetectionRecord {
    pub fn reference_time(&self) -> f64 {
        self.t_end
    }
}

pub const DETECTIONS_HEADER: &str = "t_start,t_end,peak_frequency_hz,speed_kmh,peak_power_db";

pub fn detections_csv(records: &[DetectionRecord]) -> String {
    let mut out = String::from(DETECTIONS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{:.3},{:.3},{:.1},{:.1},{:.1}",
            r.t_start, r.t_end, r.peak_frequency_hz, r.speed_kmh, r.peak_power_db
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct DetectionsDocument<'a> {
    source: &'a str,
    sample_rate: u32,
    n_samples: usize,
    duration_s: f64,
    config: &'a AnalysisConfig,
    noise_floor_db: f64,
    detections: Vec<DetectionRecord>,
}

/// Structured detection document including the effective configuration.
pub fn detections_json(analysis: &Analysis, source: &str) -> String {
    let sample_rate = analysis.config.geometry.sample_rate();
    let doc = DetectionsDocument {
        source,
        sample_rate,
        n_samples: analysis.n_samples,
        duration_s: round_to(analysis.n_samples as f64 / sample_rate as f64, 6),
        config: &analysis.config,
        noise_floor_db: round_to(analysis.noise_floor_db, 2),
        detections: analysis.records(),
    };
    serde_json::to_string_pretty(&doc).expect("document serializes") + "\n"
}

pub fn parse_detections_csv(text: &str) -> Result<Vec<DetectionRecord>, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| PipelineError::Input(format!("detections row {}: {e}", i + 1)))
        })
        .collect()
}
