use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::DspError;
use crate::num::Real;

/// Guard added to |X|² before taking the log so silent frames stay finite.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFunction {
    #[default]
    #[serde(alias = "hanning")]
    Hann,
    Hamming,
    Rectangular,
}

impl WindowFunction {
    /// Periodic (DFT-even) coefficients of length `n`.
    pub fn coefficients<T: Real>(self, n: usize) -> Vec<T> {
        let two_pi = T::TAU();
        let len = T::from_usize_lossy(n);
        (0..n)
            .map(|i| {
                let phase = two_pi * T::from_usize_lossy(i) / len;
                match self {
                    WindowFunction::Hann => T::lit(0.5) - T::lit(0.5) * phase.cos(),
                    WindowFunction::Hamming => T::lit(0.54) - T::lit(0.46) * phase.cos(),
                    WindowFunction::Rectangular => T::one(),
                }
            })
            .collect()
    }
}

/// STFT framing. `overlap` counts the samples shared by consecutive frames,
/// so the hop is `window_size - overlap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window_size: usize,
    pub overlap: usize,
    pub window_function: WindowFunction,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_size: 4096,
            overlap: 512,
            window_function: WindowFunction::Hann,
        }
    }
}

impl StftConfig {
    pub fn hop(&self) -> usize {
        self.window_size - self.overlap
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.window_size < 2 {
            return Err(DspError::Stft(format!(
                "window_size must be at least 2, got {}",
                self.window_size
            )));
        }
        if self.overlap >= self.window_size {
            return Err(DspError::Stft(format!(
                "overlap {} must be below window_size {}",
                self.overlap, self.window_size
            )));
        }
        Ok(())
    }

    pub fn frame_count(&self, n_samples: usize) -> usize {
        if n_samples < self.window_size {
            0
        } else {
            1 + (n_samples - self.window_size) / self.hop()
        }
    }
}

/// Time-frequency power matrix, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T: Real> {
    pub power_db: Vec<T>,
    /// Center time of each frame, seconds.
    pub frame_times: Vec<T>,
    pub bin_freqs: Vec<T>,
    pub sample_rate: u32,
    pub hop: usize,
}

impl<T: Real> Spectrogram<T> {
    pub fn n_frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn n_bins(&self) -> usize {
        self.bin_freqs.len()
    }

    pub fn frame(&self, f: usize) -> &[T] {
        let n = self.n_bins();
        &self.power_db[f * n..(f + 1) * n]
    }

    pub fn at(&self, frame: usize, bin: usize) -> T {
        self.power_db[frame * self.n_bins() + bin]
    }

    /// Seconds between consecutive frame centers.
    pub fn frame_step(&self) -> T {
        T::from_usize_lossy(self.hop) / T::from_u32(self.sample_rate).unwrap()
    }

    pub fn bin_width(&self) -> T {
        if self.n_bins() < 2 {
            T::zero()
        } else {
            self.bin_freqs[1] - self.bin_freqs[0]
        }
    }

    /// Index of the loudest bin in each frame.
    pub fn argmax_bins(&self) -> Vec<usize> {
        (0..self.n_frames())
            .map(|f| {
                self.frame(f)
                    .iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |best, (i, &p)| {
                        if p > best.1 {
                            (i, p)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// Short-time power spectrum of `samples`. Every frame is mean-removed and
/// tapered before the transform; cells hold `10·log10(|X|² + ε)`.
pub fn spectrogram<T: Real>(
    samples: &[T],
    sample_rate: u32,
    cfg: &StftConfig,
) -> Result<Spectrogram<T>, DspError> {
    cfg.validate()?;
    if sample_rate == 0 {
        return Err(DspError::Stft("sample_rate must be positive".into()));
    }
    let n = cfg.window_size;
    if samples.len() < n {
        return Err(DspError::InsufficientSamples {
            needed: n,
            got: samples.len(),
        });
    }
    let hop = cfg.hop();
    let n_frames = cfg.frame_count(samples.len());
    let n_bins = n / 2 + 1;
    let fs = T::from_u32(sample_rate).unwrap();
    let len = T::from_usize_lossy(n);

    let window = cfg.window_function.coefficients::<T>(n);
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let eps = T::lit(LOG_EPSILON);
    let ten = T::lit(10.0);

    let mut power_db = vec![T::zero(); n_frames * n_bins];
    power_db
        .par_chunks_mut(n_bins)
        .enumerate()
        .for_each_init(
            || {
                (
                    vec![Complex::<T>::default(); n],
                    vec![Complex::<T>::default(); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), (f, row)| {
                let frame = &samples[f * hop..f * hop + n];
                let mean = frame.iter().fold(T::zero(), |acc, &x| acc + x) / len;
                for ((slot, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
                    *slot = Complex::new((x - mean) * w, T::zero());
                }
                fft.process_with_scratch(buf, scratch);
                for (cell, z) in row.iter_mut().zip(buf.iter()) {
                    *cell = ten * (z.norm_sqr() + eps).log10();
                }
            },
        );

    let half = T::from_usize_lossy(n / 2);
    let frame_times = (0..n_frames)
        .map(|f| (T::from_usize_lossy(f * hop) + half) / fs)
        .collect();
    let bin_freqs = (0..n_bins)
        .map(|k| T::from_usize_lossy(k) * fs / len)
        .collect();

    Ok(Spectrogram {
        power_db,
        frame_times,
        bin_freqs,
        sample_rate,
        hop,
    })
}
