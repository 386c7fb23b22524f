//! Scenario builders shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadside_doppler::model::{Lane, SensorGeometry};
use roadside_doppler::synth::{NoiseModel, Scenario, VehiclePass};

/// Close-lane travel line: sensor ~10 cm off the kerb, lane center ~1.8 m out.
pub const CLOSE_OFFSET_M: f64 = 1.8;
/// Far lane of a two-lane road, three times further out.
pub const FAR_OFFSET_M: f64 = 5.4;
/// Broadband noise used for every "moderate noise" scenario, dBFS.
pub const MODERATE_NOISE_DB: f64 = -28.0;
/// Where passes enter the scene.
pub const START_ALONG_M: f64 = 60.0;

pub fn roadside_geometry() -> SensorGeometry<f64> {
    SensorGeometry::with_angles(20.0, 20.0).unwrap()
}

/// One pass that reaches the sensor at `closest_s`.
pub fn pass(speed_kmh: f64, offset_m: f64, closest_s: f64, lane: Lane) -> VehiclePass<f64> {
    let lead = START_ALONG_M / (speed_kmh / 3.6);
    VehiclePass {
        lane,
        ..VehiclePass::new(speed_kmh, offset_m, START_ALONG_M, closest_s - lead)
    }
}

pub fn single_pass(speed_kmh: f64, seed: u64) -> Scenario<f64> {
    Scenario::new(roadside_geometry(), 12.0)
        .with_vehicle(pass(speed_kmh, CLOSE_OFFSET_M, 9.0, Lane::Close))
        .with_noise(NoiseModel::white(MODERATE_NOISE_DB, seed))
}

/// Ten minutes of two-lane traffic: 28 close-lane and 24 far-lane passes,
/// speeds uniform in 45–75 km/h, one pass roughly every 11.5 s.
pub fn two_lane_traffic(seed: u64) -> Scenario<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lanes: Vec<Lane> = std::iter::repeat(Lane::Close)
        .take(28)
        .chain(std::iter::repeat(Lane::Far).take(24))
        .collect();
    lanes.shuffle(&mut rng);
    let mut scenario = Scenario::new(roadside_geometry(), 600.0)
        .with_noise(NoiseModel::white(MODERATE_NOISE_DB, seed));
    for (i, lane) in lanes.into_iter().enumerate() {
        let closest = 8.0 + 11.4 * i as f64 + rng.random_range(-1.5..1.5);
        let speed = rng.random_range(45.0..75.0);
        let offset = match lane {
            Lane::Close => CLOSE_OFFSET_M,
            Lane::Far => FAR_OFFSET_M,
        };
        scenario = scenario.with_vehicle(pass(speed, offset, closest, lane));
    }
    scenario
}
