//! Vehicle detection and speed estimation from continuous-wave Doppler radar
//! recordings taken beside the road, plus a pass-by simulator that produces
//! recordings with known ground truth.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for everyday use.

pub mod dsp;
pub mod model;
pub mod num;
pub mod pipeline;
pub mod synth;
pub mod wavio;

pub use dsp::{StftConfig, WindowFunction};
pub use model::{doppler_to_speed, max_unambiguous_speed, speed_to_doppler, Lane};
pub use num::Real;
pub use wavio::{read_wav, write_wav, Recording};

pub type SensorGeometry = model::SensorGeometry<f64>;
pub type SensorGeometryF32 = model::SensorGeometry<f32>;
pub type DetectionEvent = model::DetectionEvent<f64>;
pub type DetectionEventF32 = model::DetectionEvent<f32>;
pub type Spectrogram = dsp::Spectrogram<f64>;
pub type SpectrogramF32 = dsp::Spectrogram<f32>;
pub type MaskedSpectrogram = dsp::MaskedSpectrogram<f64>;
pub type DetectionConfig = dsp::DetectionConfig<f64>;
pub type DetectionConfigF32 = dsp::DetectionConfig<f32>;
pub type Scenario = synth::Scenario<f64>;
pub type ScenarioF32 = synth::Scenario<f32>;
pub type VehiclePass = synth::VehiclePass<f64>;
pub type VehiclePassF32 = synth::VehiclePass<f32>;
pub type NoiseModel = synth::NoiseModel<f64>;
pub type BeamPattern = synth::BeamPattern<f64>;
