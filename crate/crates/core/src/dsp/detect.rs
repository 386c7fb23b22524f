use serde::{Deserialize, Serialize};

use super::{DspError, Spectrogram};
use crate::model::{DetectionEvent, SensorGeometry};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig<T: Real> {
    /// Retention level above the estimated noise floor, dB.
    pub power_threshold_db: T,
    /// Cells below this frequency are discarded (supply and amplifier noise).
    pub min_frequency_hz: T,
    pub min_event_duration_s: T,
    /// Active runs closer than this are merged into one event.
    pub max_gap_s: T,
    /// Frames a bin must be retained in before it may define the event peak.
    pub min_peak_persistence_frames: usize,
}

impl<T: Real> Default for DetectionConfig<T> {
    fn default() -> Self {
        DetectionConfig {
            power_threshold_db: T::lit(12.0),
            min_frequency_hz: T::lit(700.0),
            min_event_duration_s: T::lit(0.2),
            max_gap_s: T::lit(0.5),
            min_peak_persistence_frames: 2,
        }
    }
}

impl<T: Real> DetectionConfig<T> {
    pub fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        let positive = [
            ("power_threshold_db", self.power_threshold_db),
            ("min_frequency_hz", self.min_frequency_hz),
            ("min_event_duration_s", self.min_event_duration_s),
            ("max_gap_s", self.max_gap_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(DspError::Detection(format!("{name} must be positive, got {v}")));
            }
        }
        if self.min_peak_persistence_frames == 0 {
            return Err(DspError::Detection(
                "min_peak_persistence_frames must be positive".into(),
            ));
        }
        let nyquist = T::from_u32(sample_rate).unwrap() / T::lit(2.0);
        if self.min_frequency_hz >= nyquist {
            return Err(DspError::Detection(format!(
                "min_frequency_hz {} must be below Nyquist {}",
                self.min_frequency_hz, nyquist
            )));
        }
        Ok(())
    }
}

/// Median power over the cells at or above `min_frequency_hz`. Vehicle
/// returns occupy a small fraction of the matrix, so the median tracks the
/// background rather than the targets.
pub fn estimate_noise_floor<T: Real>(spec: &Spectrogram<T>, min_frequency_hz: T) -> T {
    let first_bin = spec
        .bin_freqs
        .iter()
        .position(|&f| f >= min_frequency_hz)
        .unwrap_or(0);
    let mut cells: Vec<T> = (0..spec.n_frames())
        .flat_map(|f| spec.frame(f)[first_bin..].iter().copied())
        .collect();
    median(&mut cells)
}

fn median<T: Real>(values: &mut [T]) -> T {
    if values.is_empty() {
        return T::nan();
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
    let len = values.len();
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, cmp);
    let upper = *upper;
    if len % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (lower + upper) / T::lit(2.0)
    }
}

/// Spectrogram after thresholding: masked cells are overwritten with `floor`
/// and flagged in `retained`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSpectrogram<T: Real> {
    pub spectrogram: Spectrogram<T>,
    pub retained: Vec<bool>,
    pub floor: T,
}

impl<T: Real> MaskedSpectrogram<T> {
    pub fn is_retained(&self, frame: usize, bin: usize) -> bool {
        self.retained[frame * self.spectrogram.n_bins() + bin]
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().filter(|&&r| r).count()
    }
}

/// Masks weak cells (below `floor + power_threshold_db`) and every cell
/// below `min_frequency_hz`. Everything else passes through unchanged.
pub fn apply_thresholds<T: Real>(
    spec: &Spectrogram<T>,
    cfg: &DetectionConfig<T>,
    floor: T,
) -> MaskedSpectrogram<T> {
    let level = floor + cfg.power_threshold_db;
    let n_bins = spec.n_bins();
    let mut out = spec.clone();
    let mut retained = vec![false; spec.power_db.len()];
    for (i, (cell, keep)) in out.power_db.iter_mut().zip(retained.iter_mut()).enumerate() {
        let freq = spec.bin_freqs[i % n_bins];
        if freq >= cfg.min_frequency_hz && *cell >= level {
            *keep = true;
        } else {
            *cell = floor;
        }
    }
    MaskedSpectrogram {
        spectrogram: out,
        retained,
        floor,
    }
}

/// Groups active frames into vehicle events.
///
/// A frame is active when any cell survived masking. Runs of active frames
/// closer than `max_gap_s` merge; events shorter than
/// `min_event_duration_s` are dropped, as are events where no bin below
/// Nyquist is retained in `min_peak_persistence_frames` frames. Speeds are
/// left as NaN for [`estimate_speeds`].
pub fn segment_events<T: Real>(
    masked: &MaskedSpectrogram<T>,
    cfg: &DetectionConfig<T>,
) -> Vec<DetectionEvent<T>> {
    let spec = &masked.spectrogram;
    let n_bins = spec.n_bins();
    let active: Vec<usize> = (0..spec.n_frames())
        .filter(|&f| masked.retained[f * n_bins..(f + 1) * n_bins].iter().any(|&r| r))
        .collect();

    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &f in &active {
        match runs.last_mut() {
            Some((_, last)) if spec.frame_times[f] - spec.frame_times[*last] < cfg.max_gap_s => {
                *last = f
            }
            _ => runs.push((f, f)),
        }
    }

    let half_step = spec.frame_step() / T::lit(2.0);
    // the Nyquist bin is excluded so peaks stay strictly below fs/2
    let peak_bins = n_bins.saturating_sub(1);
    runs.into_iter()
        .filter_map(|(first, last)| {
            let t_start = spec.frame_times[first] - half_step;
            let t_end = spec.frame_times[last] + half_step;
            if t_end - t_start < cfg.min_event_duration_s {
                return None;
            }
            let peak_bin = (0..peak_bins).rev().find(|&b| {
                (first..=last)
                    .filter(|&f| masked.is_retained(f, b))
                    .take(cfg.min_peak_persistence_frames)
                    .count()
                    >= cfg.min_peak_persistence_frames
            });
            let Some(peak_bin) = peak_bin else {
                log::debug!(
                    "dropping {:.2}-{:.2} s: no persistent bin",
                    t_start.to_f64_lossy(),
                    t_end.to_f64_lossy()
                );
                return None;
            };
            let peak_power_db = (first..=last)
                .flat_map(|f| (0..n_bins).map(move |b| (f, b)))
                .filter(|&(f, b)| masked.is_retained(f, b))
                .map(|(f, b)| spec.at(f, b))
                .fold(T::neg_infinity(), T::max);
            Some(DetectionEvent {
                t_start,
                t_end,
                peak_frequency: spec.bin_freqs[peak_bin],
                estimated_speed: T::nan(),
                peak_power_db,
            })
        })
        .collect()
}

/// Converts each event's peak frequency to a vehicle speed.
pub fn estimate_speeds<T: Real>(
    events: &[DetectionEvent<T>],
    geom: &SensorGeometry<T>,
) -> Vec<DetectionEvent<T>> {
    events.iter().map(|e| e.with_speed(geom)).collect()
}
