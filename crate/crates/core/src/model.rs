//! Sensor geometry, detection records and the closed-form Doppler relations.
//!
//! A CW sensor at 24.125 GHz produces a beat frequency of `k` Hz for every
//! km/h of radial closing speed (`k = 44.68` for the reference module). When
//! the sensor is mounted beside the road, the vehicle velocity vector makes
//! an azimuth angle θ with the antenna beam and the beam is tilted up from
//! the ground by an elevation angle φ, so a vehicle at true speed `v` shows
//!
//! ```text
//! f = k · v · cos θ · cos φ
//! ```
//!
//! All angles are configured in degrees and converted at the point of use.

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Hz per km/h of radial speed for a 24.125 GHz CW module.
pub const DEFAULT_DOPPLER_CONSTANT: f64 = 44.68;
pub const DEFAULT_SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("{field} must lie in [0, 90) degrees, got {value}")]
    AngleOutOfRange { field: &'static str, value: f64 },
    #[error("doppler_constant must be positive and finite, got {0}")]
    DopplerConstant(f64),
    #[error("sample_rate must be positive")]
    ZeroSampleRate,
}

/// Placement of a roadside sensor. Construct through [`SensorGeometry::new`]
/// (or deserialize, which runs the same checks) so that the angle correction
/// `cos θ · cos φ` is always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct SensorGeometry<T: Real> {
    azimuth_deg: T,
    elevation_deg: T,
    doppler_constant: T,
    sample_rate: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(default)]
    azimuth_deg: f64,
    #[serde(default)]
    elevation_deg: f64,
    #[serde(default = "default_doppler_constant")]
    doppler_constant: f64,
    #[serde(default = "default_sample_rate")]
    sample_rate: u32,
}

fn default_doppler_constant() -> f64 {
    DEFAULT_DOPPLER_CONSTANT
}

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

impl<T: Real> TryFrom<RawGeometry> for SensorGeometry<T> {
    type Error = GeometryError;

    fn try_from(raw: RawGeometry) -> Result<Self, Self::Error> {
        SensorGeometry::new(
            T::lit(raw.azimuth_deg),
            T::lit(raw.elevation_deg),
            T::lit(raw.doppler_constant),
            raw.sample_rate,
        )
    }
}

impl<T: Real> From<SensorGeometry<T>> for RawGeometry {
    fn from(g: SensorGeometry<T>) -> Self {
        RawGeometry {
            azimuth_deg: g.azimuth_deg.to_f64_lossy(),
            elevation_deg: g.elevation_deg.to_f64_lossy(),
            doppler_constant: g.doppler_constant.to_f64_lossy(),
            sample_rate: g.sample_rate,
        }
    }
}

impl<T: Real> SensorGeometry<T> {
    pub fn new(
        azimuth_deg: T,
        elevation_deg: T,
        doppler_constant: T,
        sample_rate: u32,
    ) -> Result<Self, GeometryError> {
        check_angle("azimuth_deg", azimuth_deg)?;
        check_angle("elevation_deg", elevation_deg)?;
        if !(doppler_constant.is_finite() && doppler_constant > T::zero()) {
            return Err(GeometryError::DopplerConstant(
                doppler_constant.to_f64_lossy(),
            ));
        }
        if sample_rate == 0 {
            return Err(GeometryError::ZeroSampleRate);
        }
        Ok(SensorGeometry {
            azimuth_deg,
            elevation_deg,
            doppler_constant,
            sample_rate,
        })
    }

    /// Roadside placement with the reference module's constant and 48 kHz capture.
    pub fn with_angles(azimuth_deg: T, elevation_deg: T) -> Result<Self, GeometryError> {
        Self::new(
            azimuth_deg,
            elevation_deg,
            T::lit(DEFAULT_DOPPLER_CONSTANT),
            DEFAULT_SAMPLE_RATE,
        )
    }

    /// Sensor looking straight down the lane: no angle correction.
    pub fn boresight() -> Self {
        Self::with_angles(T::zero(), T::zero()).expect("zero angles are valid")
    }

    pub fn with_sample_rate(self, sample_rate: u32) -> Result<Self, GeometryError> {
        Self::new(
            self.azimuth_deg,
            self.elevation_deg,
            self.doppler_constant,
            sample_rate,
        )
    }

    pub fn azimuth_deg(&self) -> T {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> T {
        self.elevation_deg
    }

    pub fn doppler_constant(&self) -> T {
        self.doppler_constant
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn nyquist_hz(&self) -> T {
        T::from_u32(self.sample_rate).unwrap() / T::lit(2.0)
    }

    /// `cos θ · cos φ`, strictly positive by construction.
    pub fn angle_factor(&self) -> T {
        self.azimuth_deg.to_radians().cos() * self.elevation_deg.to_radians().cos()
    }
}

impl<T: Real> Default for SensorGeometry<T> {
    fn default() -> Self {
        Self::boresight()
    }
}

fn check_angle<T: Real>(field: &'static str, value: T) -> Result<(), GeometryError> {
    if value.is_finite() && value >= T::zero() && value < T::lit(90.0) {
        Ok(())
    } else {
        Err(GeometryError::AngleOutOfRange {
            field,
            value: value.to_f64_lossy(),
        })
    }
}

/// Doppler beat frequency in Hz produced by a vehicle at `speed_kmh`.
pub fn speed_to_doppler<T: Real>(speed_kmh: T, geom: &SensorGeometry<T>) -> T {
    geom.doppler_constant * speed_kmh * geom.angle_factor()
}

/// Inverse of [`speed_to_doppler`]: true vehicle speed in km/h.
pub fn doppler_to_speed<T: Real>(freq_hz: T, geom: &SensorGeometry<T>) -> T {
    freq_hz / (geom.doppler_constant * geom.angle_factor())
}

/// Highest radial speed representable below Nyquist, before angle correction.
pub fn max_unambiguous_speed<T: Real>(geom: &SensorGeometry<T>) -> T {
    geom.nyquist_hz() / geom.doppler_constant
}

/// Traffic lane relative to the sensor. Only the close lane is meant to be
/// counted; far-lane returns should fall under the power threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    #[default]
    Close,
    Far,
}

impl Lane {
    pub fn as_str(self) -> &'static str {
        match self {
            Lane::Close => "close",
            Lane::Far => "far",
        }
    }
}

impl std::str::FromStr for Lane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "close" => Ok(Lane::Close),
            "far" => Ok(Lane::Far),
            other => Err(format!("unknown lane {other:?} (expected close or far)")),
        }
    }
}

/// One vehicle pass found in a spectrogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent<T: Real> {
    pub t_start: T,
    pub t_end: T,
    /// Highest persistent above-threshold frequency of the event.
    pub peak_frequency: T,
    /// km/h; NaN until [`DetectionEvent::with_speed`] has been applied.
    pub estimated_speed: T,
    pub peak_power_db: T,
}

impl<T: Real> DetectionEvent<T> {
    pub fn with_speed(mut self, geom: &SensorGeometry<T>) -> Self {
        self.estimated_speed = doppler_to_speed(self.peak_frequency, geom);
        self
    }

    pub fn duration(&self) -> T {
        self.t_end - self.t_start
    }

    /// Time used when matching against ground truth. Doppler collapses as
    /// the vehicle draws level with the sensor, so the end of the event is
    /// the closest estimate of the pass-by instant.
    pub fn reference_time(&self) -> T {
        self.t_end
    }
}
