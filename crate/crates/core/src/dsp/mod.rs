//! Spectrogram construction and the threshold / segmentation detector.
//!
//! The chain is:
//!
//! ```text
//! samples -> spectrogram -> estimate_noise_floor -> apply_thresholds
//!         -> segment_events -> estimate_speeds
//! ```

mod detect;
mod export;
mod stft;

pub use detect::{
    apply_thresholds, estimate_noise_floor, estimate_speeds, segment_events, DetectionConfig,
    MaskedSpectrogram,
};
pub use export::{write_csv, write_pgm};
pub use stft::{spectrogram, Spectrogram, StftConfig, WindowFunction, LOG_EPSILON};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("insufficient samples: need at least {needed} for one window, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid STFT config: {0}")]
    Stft(String),
    #[error("invalid detection config: {0}")]
    Detection(String),
}
