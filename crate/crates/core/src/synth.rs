//! Synthetic roadside recordings.
//!
//! The road runs along the x axis with the sensor at the origin. A vehicle
//! approaches from `+x` along the line `y = lateral_offset_m`, so its range
//! is `R(t) = sqrt(x(t)² + y²)` and the closing speed seen by the sensor is
//! `v · x/R`, scaled by the fixed `cos φ` of the beam elevation. Integrating
//! the Doppler frequency gives the closed form phase
//!
//! ```text
//! Φ(t) = k · cos φ · 3.6 · (R(t₀) − R(t))
//! ```
//!
//! so the rendered chirp is exactly phase-continuous. Amplitude falls as
//! `1/R²` (voltage) and is capped at `amplitude_ceiling`. Vehicles are
//! point reflectors that vanish once they draw level with the sensor (the
//! antenna looks into oncoming traffic only).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::{Lane, SensorGeometry};
use crate::num::Real;
use crate::wavio::Recording;

const KMH_PER_MS: f64 = 3.6;
/// Interference is modeled only where it was observed: below 700 Hz.
pub const MAX_INTERFERENCE_HZ: f64 = 700.0;
/// Output is scaled down, if needed, so the peak sits at this fraction of full scale.
pub const PEAK_HEADROOM: f64 = 0.9;
/// LOS angle from the road axis (deg) where the forward-looking pattern starts to roll off.
const EDGE_TAPER_START_DEG: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario field {field}: {reason}")]
pub struct ScenarioError {
    pub field: String,
    pub reason: String,
}

impl ScenarioError {
    fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehiclePass<T: Real> {
    pub speed_kmh: T,
    /// Perpendicular distance from the sensor to the travel line.
    pub lateral_offset_m: T,
    /// Initial position along the road; positive means still approaching.
    pub start_along_m: T,
    pub start_time_s: T,
    #[serde(default = "one")]
    pub reflectivity: T,
    #[serde(default)]
    pub lane: Lane,
}

fn one<T: Real>() -> T {
    T::one()
}

impl<T: Real> VehiclePass<T> {
    pub fn new(speed_kmh: T, lateral_offset_m: T, start_along_m: T, start_time_s: T) -> Self {
        VehiclePass {
            speed_kmh,
            lateral_offset_m,
            start_along_m,
            start_time_s,
            reflectivity: T::one(),
            lane: Lane::Close,
        }
    }

    pub fn speed_ms(&self) -> T {
        self.speed_kmh / T::lit(KMH_PER_MS)
    }

    /// Seconds from the start of the pass until the vehicle is level with the sensor.
    pub fn time_to_closest_approach(&self) -> T {
        self.start_along_m.max(T::zero()) / self.speed_ms()
    }

    pub fn closest_approach_time(&self) -> T {
        self.start_time_s + self.time_to_closest_approach()
    }

    pub fn is_active(&self, t: T) -> bool {
        t >= self.start_time_s && t < self.closest_approach_time()
    }

    /// Position along the road at time `t`.
    pub fn along_at(&self, t: T) -> T {
        self.start_along_m - self.speed_ms() * (t - self.start_time_s)
    }

    pub fn range_at(&self, t: T) -> T {
        self.along_at(t).hypot(self.lateral_offset_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceTone<T: Real> {
    pub frequency_hz: T,
    pub amplitude: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel<T: Real> {
    /// Standard deviation of white Gaussian noise, dB relative to full scale.
    /// `None` disables it.
    #[serde(default)]
    pub white_noise_db: Option<T>,
    #[serde(default)]
    pub interference_tones: Vec<InterferenceTone<T>>,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        NoiseModel {
            white_noise_db: None,
            interference_tones: Vec::new(),
            seed: 0,
        }
    }
}

impl<T: Real> NoiseModel<T> {
    pub fn silent() -> Self {
        Self::default()
    }

    pub fn white(level_db: T, seed: u64) -> Self {
        NoiseModel {
            white_noise_db: Some(level_db),
            interference_tones: Vec::new(),
            seed,
        }
    }

    pub fn white_sigma(&self) -> Option<T> {
        self.white_noise_db
            .map(|db| T::lit(10.0).powf(db / T::lit(20.0)))
    }
}

/// Gaussian azimuth beam. `width_3db_deg` is the full width at half power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamPattern<T: Real> {
    /// Beam direction measured from the road axis; defaults to the geometry azimuth.
    #[serde(default)]
    pub boresight_deg: Option<T>,
    pub width_3db_deg: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario<T: Real> {
    pub geometry: SensorGeometry<T>,
    pub duration_s: T,
    #[serde(default)]
    pub vehicles: Vec<VehiclePass<T>>,
    #[serde(default)]
    pub noise: NoiseModel<T>,
    /// Omitted means isotropic over the forward half-plane.
    #[serde(default)]
    pub antenna: Option<BeamPattern<T>>,
    #[serde(default = "default_ceiling")]
    pub amplitude_ceiling: T,
    /// Raised-cosine fade applied at the start of every pass.
    #[serde(default = "default_fade")]
    pub fade_in_s: T,
}

fn default_ceiling<T: Real>() -> T {
    T::one()
}

fn default_fade<T: Real>() -> T {
    T::lit(0.05)
}

impl<T: Real> Scenario<T> {
    pub fn new(geometry: SensorGeometry<T>, duration_s: T) -> Self {
        Scenario {
            geometry,
            duration_s,
            vehicles: Vec::new(),
            noise: NoiseModel::default(),
            antenna: None,
            amplitude_ceiling: default_ceiling(),
            fade_in_s: default_fade(),
        }
    }

    pub fn with_vehicle(mut self, pass: VehiclePass<T>) -> Self {
        self.vehicles.push(pass);
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel<T>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_beam(mut self, beam: BeamPattern<T>) -> Self {
        self.antenna = Some(beam);
        self
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * T::from_u32(self.geometry.sample_rate()).unwrap())
            .round()
            .to_usize()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s.is_finite() && self.duration_s > T::zero()) {
            return Err(ScenarioError::new("duration_s", "must be positive"));
        }
        if !(self.amplitude_ceiling > T::zero()) {
            return Err(ScenarioError::new("amplitude_ceiling", "must be positive"));
        }
        if !(self.fade_in_s >= T::zero()) {
            return Err(ScenarioError::new("fade_in_s", "must be non-negative"));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let field = |name: &str| format!("vehicles[{i}].{name}");
            for (name, value) in [
                ("speed_kmh", v.speed_kmh),
                ("lateral_offset_m", v.lateral_offset_m),
                ("reflectivity", v.reflectivity),
            ] {
                if !(value.is_finite() && value > T::zero()) {
                    return Err(ScenarioError::new(field(name), "must be positive"));
                }
            }
            if !v.start_along_m.is_finite() {
                return Err(ScenarioError::new(field("start_along_m"), "must be finite"));
            }
            if !(v.start_time_s >= T::zero() && v.start_time_s <= self.duration_s) {
                return Err(ScenarioError::new(
                    field("start_time_s"),
                    "must lie within [0, duration_s]",
                ));
            }
            if v.closest_approach_time() > self.duration_s {
                return Err(ScenarioError::new(
                    field("start_along_m"),
                    format!(
                        "pass reaches the sensor at {} s, after the end of the recording",
                        v.closest_approach_time()
                    ),
                ));
            }
        }
        for (i, tone) in self.noise.interference_tones.iter().enumerate() {
            let f = tone.frequency_hz;
            if !(f >= T::zero() && f < T::lit(MAX_INTERFERENCE_HZ)) {
                return Err(ScenarioError::new(
                    format!("noise.interference_tones[{i}].frequency_hz"),
                    "must lie in [0, 700) Hz",
                ));
            }
            if !tone.amplitude.is_finite() {
                return Err(ScenarioError::new(
                    format!("noise.interference_tones[{i}].amplitude"),
                    "must be finite",
                ));
            }
        }
        if let Some(db) = self.noise.white_noise_db {
            if !db.is_finite() {
                return Err(ScenarioError::new("noise.white_noise_db", "must be finite"));
            }
        }
        if let Some(beam) = &self.antenna {
            if !(beam.width_3db_deg.is_finite() && beam.width_3db_deg > T::zero()) {
                return Err(ScenarioError::new("antenna.width_3db_deg", "must be positive"));
            }
        }
        Ok(())
    }

    /// Parses and validates a TOML scenario description.
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let scenario: Scenario<T> = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("at bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "document".into());
            ScenarioError::new(field, e.message().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Closing speed in km/h seen by the sensor at time `t`, including the
/// fixed elevation factor. Zero outside the pass.
pub fn instantaneous_radial_speed<T: Real>(
    pass: &VehiclePass<T>,
    geom: &SensorGeometry<T>,
    t: T,
) -> T {
    if !pass.is_active(t) {
        return T::zero();
    }
    let x = pass.along_at(t);
    let cos_los = x / x.hypot(pass.lateral_offset_m);
    pass.speed_kmh * cos_los * geom.elevation_deg().to_radians().cos()
}

/// Angle between the road axis and the line of sight, degrees.
fn los_angle_deg<T: Real>(x: T, y: T) -> T {
    y.atan2(x).to_degrees()
}

fn pattern_gain<T: Real>(beam: Option<&BeamPattern<T>>, default_boresight: T, los_deg: T) -> T {
    let start = T::lit(EDGE_TAPER_START_DEG);
    let right = T::lit(90.0);
    let edge = if los_deg >= right {
        T::zero()
    } else if los_deg > start {
        let u = (los_deg - start) / (right - start) * T::FRAC_PI_2();
        u.cos().powi(2)
    } else {
        T::one()
    };
    let beam_gain = match beam {
        None => T::one(),
        Some(b) => {
            let offset = (los_deg - b.boresight_deg.unwrap_or(default_boresight)) / b.width_3db_deg;
            // −3 dB (power) at half the width off boresight
            let power_db = T::lit(-12.0) * offset * offset;
            T::lit(10.0).powf(power_db / T::lit(20.0))
        }
    };
    edge * beam_gain
}

/// Adds one vehicle's echo into `out`. Sample `n` sits at time `n / fs`.
fn render_pass<T: Real>(scenario: &Scenario<T>, pass: &VehiclePass<T>, out: &mut [T]) {
    let geom = &scenario.geometry;
    let fs = T::from_u32(geom.sample_rate()).unwrap();
    if pass.start_along_m <= T::zero() {
        return;
    }
    let first = (pass.start_time_s * fs).ceil().to_usize().unwrap_or(0);
    let last = (pass.closest_approach_time() * fs)
        .ceil()
        .to_usize()
        .unwrap_or(0)
        .min(out.len());
    let y = pass.lateral_offset_m;
    let r0 = pass.start_along_m.hypot(y);
    let phase_per_m =
        geom.doppler_constant() * geom.elevation_deg().to_radians().cos() * T::lit(KMH_PER_MS);
    let v = pass.speed_ms();
    for (n, slot) in out.iter_mut().enumerate().take(last).skip(first) {
        let elapsed = T::from_usize_lossy(n) / fs - pass.start_time_s;
        let x = pass.start_along_m - v * elapsed;
        let r = x.hypot(y);
        let gain = pattern_gain(scenario.antenna.as_ref(), geom.azimuth_deg(), los_angle_deg(x, y));
        let mut amp = (pass.reflectivity / (r * r)).min(scenario.amplitude_ceiling) * gain;
        if elapsed < scenario.fade_in_s {
            amp = amp * T::lit(0.5) * (T::one() - (T::PI() * elapsed / scenario.fade_in_s).cos());
        }
        let cycles = phase_per_m * (r0 - r);
        *slot = *slot + amp * (T::TAU() * cycles.fract()).sin();
    }
}

/// Unquantized, unnormalized sum of every echo plus noise, in full-scale units.
pub fn render_float<T: Real>(scenario: &Scenario<T>) -> Vec<T> {
    let n = scenario.n_samples();
    let fs = T::from_u32(scenario.geometry.sample_rate()).unwrap();
    let mut out = vec![T::zero(); n];
    for pass in &scenario.vehicles {
        render_pass(scenario, pass, &mut out);
    }
    for tone in &scenario.noise.interference_tones {
        let step = tone.frequency_hz / fs;
        for (i, slot) in out.iter_mut().enumerate() {
            let cycles = (step * T::from_usize_lossy(i)).fract();
            *slot = *slot + tone.amplitude * (T::TAU() * cycles).sin();
        }
    }
    if let Some(sigma) = scenario.noise.white_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.noise.seed);
        for slot in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *slot = *slot + sigma * T::lit(z);
        }
    }
    out
}

/// Factor applied by [`render`] before quantization: 1, or less when the
/// peak would exceed the headroom.
pub fn normalization_gain<T: Real>(samples: &[T]) -> T {
    let peak = samples.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let headroom = T::lit(PEAK_HEADROOM);
    if peak > headroom {
        headroom / peak
    } else {
        T::one()
    }
}

/// Renders the scenario to 16-bit PCM.
pub fn render<T: Real>(scenario: &Scenario<T>) -> Recording {
    let samples = render_float(scenario);
    let gain = normalization_gain(&samples) * T::lit(32768.0);
    let lo = T::lit(i16::MIN as f64);
    let hi = T::lit(i16::MAX as f64);
    let quantized = samples
        .iter()
        .map(|&x| (x * gain).round().max(lo).min(hi).to_i16().unwrap_or(0))
        .collect();
    Recording::new(quantized, scenario.geometry.sample_rate())
}

/// Ground truth for one rendered pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedPass<T: Real> {
    /// Closest-approach time, seconds.
    pub time_s: T,
    pub speed_kmh: T,
    pub lane: Lane,
}

/// Closest-approach time and true speed of every approaching vehicle, in time order.
pub fn expected_detections<T: Real>(scenario: &Scenario<T>) -> Vec<ExpectedPass<T>> {
    let mut out: Vec<ExpectedPass<T>> = scenario
        .vehicles
        .iter()
        .filter(|v| v.start_along_m > T::zero())
        .map(|v| ExpectedPass {
            time_s: v.closest_approach_time(),
            speed_kmh: v.speed_kmh,
            lane: v.lane,
        })
        .collect();
    out.sort_by(|a, b| a.time_s.partial_cmp(&b.time_s).unwrap());
    out
}
