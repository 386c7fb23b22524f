use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{DetectionRecord, PipelineError};
use crate::model::Lane;
use crate::synth::ExpectedPass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub time_s: f64,
    pub lane: Lane,
    pub speed_kmh: Option<f64>,
}

/// Manually logged (or simulated) passes, ordered by time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLog {
    entries: Vec<GroundTruthEntry>,
}

impl GroundTruthLog {
    pub fn new(entries: Vec<GroundTruthEntry>) -> Result<Self, PipelineError> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.time_s.is_finite() && e.time_s >= 0.0) {
                return Err(PipelineError::Input(format!(
                    "ground truth row {}: time_s must be non-negative",
                    i + 1
                )));
            }
            if i > 0 && e.time_s < entries[i - 1].time_s {
                return Err(PipelineError::Input(format!(
                    "ground truth row {}: times must be non-decreasing",
                    i + 1
                )));
            }
        }
        Ok(GroundTruthLog { entries })
    }

    pub fn from_expected(passes: &[ExpectedPass<f64>]) -> Self {
        GroundTruthLog {
            entries: passes
                .iter()
                .map(|p| GroundTruthEntry {
                    time_s: p.time_s,
                    lane: p.lane,
                    speed_kmh: Some(p.speed_kmh),
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[GroundTruthEntry] {
        &self.entries
    }

    pub fn count(&self, lane: Lane) -> usize {
        self.entries.iter().filter(|e| e.lane == lane).count()
    }
}

#[derive(Deserialize)]
struct TruthRow {
    time_s: f64,
    lane: String,
    #[serde(default)]
    speed_kmh: Option<f64>,
}

/// Parses `time_s,lane,speed_kmh` text; the speed column may be empty.
pub fn parse_ground_truth(text: &str) -> Result<GroundTruthLog, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (i, row) in reader.deserialize::<TruthRow>().enumerate() {
        let row =
            row.map_err(|e| PipelineError::Input(format!("ground truth row {}: {e}", i + 1)))?;
        let lane = row
            .lane
            .parse()
            .map_err(|e| PipelineError::Input(format!("ground truth row {}: {e}", i + 1)))?;
        entries.push(GroundTruthEntry {
            time_s: row.time_s,
            lane,
            speed_kmh: row.speed_kmh,
        });
    }
    GroundTruthLog::new(entries)
}

pub fn truth_csv(log: &GroundTruthLog) -> String {
    let mut out = String::from("time_s,lane,speed_kmh\n");
    for e in &log.entries {
        let speed = e.speed_kmh.map(|s| format!("{s:.1}")).unwrap_or_default();
        writeln!(out, "{:.3},{},{}", e.time_s, e.lane.as_str(), speed).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedError {
    pub truth_time_s: f64,
    pub true_kmh: f64,
    pub estimated_kmh: f64,
    /// estimated − true
    pub error_kmh: f64,
}

/// Counts in the shape of a lane-by-lane vehicle tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub close_lane_total: usize,
    pub far_lane_total: usize,
    pub close_lane_identified: usize,
    pub far_lane_filtered: usize,
    pub false_alarms: usize,
    pub match_window_s: f64,
    pub speed_errors: Vec<SpeedError>,
}

impl EvaluationReport {
    pub fn mean_abs_speed_error(&self) -> Option<f64> {
        if self.speed_errors.is_empty() {
            None
        } else {
            Some(
                self.speed_errors.iter().map(|e| e.error_kmh.abs()).sum::<f64>()
                    / self.speed_errors.len() as f64,
            )
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cars in close lane             {:>5}", self.close_lane_total)?;
        writeln!(f, "cars in far lane               {:>5}", self.far_lane_total)?;
        writeln!(f, "close-lane cars identified     {:>5}", self.close_lane_identified)?;
        writeln!(f, "far-lane cars filtered out     {:>5}", self.far_lane_filtered)?;
        writeln!(f, "unmatched detections           {:>5}", self.false_alarms)?;
        match self.mean_abs_speed_error() {
            Some(mae) => writeln!(f, "mean |speed error| [km/h]      {mae:>5.1}"),
            None => writeln!(f, "mean |speed error| [km/h]          -"),
        }
    }
}

/// Greedy one-to-one matching of detections to ground truth.
///
/// Candidate pairs closer than `match_window_s` are taken in order of
/// increasing time difference. Ties are broken by values, not positions, so
/// the order of `detections` does not affect the result.
pub fn evaluate(
    detections: &[DetectionRecord],
    truth: &GroundTruthLog,
    match_window_s: f64,
) -> EvaluationReport {
    let entries = truth.entries();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in entries.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let dt = (d.reference_time() - t.time_s).abs();
            if dt <= match_window_s {
                pairs.push((dt, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| {
        let (da, db) = (&detections[a.2], &detections[b.2]);
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(da.reference_time().total_cmp(&db.reference_time()))
            .then(da.speed_kmh.total_cmp(&db.speed_kmh))
            .then(da.t_start.total_cmp(&db.t_start))
    });

    let mut truth_match: Vec<Option<usize>> = vec![None; entries.len()];
    let mut used = vec![false; detections.len()];
    for (_, ti, di) in pairs {
        if truth_match[ti].is_none() && !used[di] {
            truth_match[ti] = Some(di);
            used[di] = true;
        }
    }

    let mut close_identified = 0;
    let mut far_matched = 0;
    let mut speed_errors = Vec::new();
    for (t, m) in entries.iter().zip(&truth_match) {
        let Some(di) = *m else { continue };
        match t.lane {
            Lane::Close => close_identified += 1,
            Lane::Far => far_matched += 1,
        }
        if let Some(true_kmh) = t.speed_kmh {
            let estimated = detections[di].speed_kmh;
            speed_errors.push(SpeedError {
                truth_time_s: t.time_s,
                true_kmh,
                estimated_kmh: estimated,
                error_kmh: estimated - true_kmh,
            });
        }
    }
    let far_total = truth.count(Lane::Far);
    EvaluationReport {
        close_lane_total: truth.count(Lane::Close),
        far_lane_total: far_total,
        close_lane_identified: close_identified,
        far_lane_filtered: far_total - far_matched,
        false_alarms: used.iter().filter(|&&u| !u).count(),
        match_window_s,
        speed_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(t: f64, speed: f64) -> DetectionRecord {
        DetectionRecord {
            t_start: t - 1.0,
            t_end: t,
            peak_frequency_hz: 2000.0,
            speed_kmh: speed,
            peak_power_db: -30.0,
        }
    }

    fn entry(t: f64, lane: Lane) -> GroundTruthEntry {
        GroundTruthEntry {
            time_s: t,
            lane,
            speed_kmh: Some(60.0),
        }
    }

    #[test]
    fn table_shaped_tally() {
        // 28 close, 24 far interleaved; one close vehicle missed, no far detections
        let mut entries = Vec::new();
        let mut dets = Vec::new();
        for i in 0..52 {
            let t = 10.0 + 11.0 * i as f64;
            let lane = if i % 13 < 7 && entries.iter().filter(|e: &&GroundTruthEntry| e.lane == Lane::Close).count() < 28 {
                Lane::Close
            } else if entries.iter().filter(|e: &&GroundTruthEntry| e.lane == Lane::Far).count() < 24 {
                Lane::Far
            } else {
                Lane::Close
            };
            entries.push(entry(t, lane));
        }
        let log = GroundTruthLog::new(entries.clone()).unwrap();
        assert_eq!((log.count(Lane::Close), log.count(Lane::Far)), (28, 24));
        let mut skipped = false;
        for e in &entries {
            if e.lane == Lane::Close {
                if !skipped {
                    skipped = true;
                    continue;
                }
                dets.push(det(e.time_s + 0.3, 61.0));
            }
        }
        let r = evaluate(&dets, &log, 2.0);
        assert_eq!(
            (r.close_lane_total, r.far_lane_total, r.close_lane_identified, r.far_lane_filtered),
            (28, 24, 27, 24)
        );
        assert_eq!(r.false_alarms, 0);
        assert_eq!(r.speed_errors.len(), 27);
        assert!((r.mean_abs_speed_error().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_inputs() {
        let r = evaluate(&[], &GroundTruthLog::default(), 2.0);
        assert_eq!(
            (r.close_lane_total, r.far_lane_total, r.close_lane_identified, r.far_lane_filtered, r.false_alarms),
            (0, 0, 0, 0, 0)
        );
    }

    #[test]
    fn window_rule() {
        let log = GroundTruthLog::new(vec![entry(10.0, Lane::Close)]).unwrap();
        assert_eq!(evaluate(&[det(11.5, 60.0)], &log, 2.0).close_lane_identified, 1);
        let r = evaluate(&[det(12.5, 60.0)], &log, 2.0);
        assert_eq!((r.close_lane_identified, r.false_alarms), (0, 1));
    }

    #[test]
    fn far_lane_detection_counts_against_filtering() {
        let log = GroundTruthLog::new(vec![entry(10.0, Lane::Far)]).unwrap();
        let r = evaluate(&[det(10.2, 60.0)], &log, 2.0);
        assert_eq!(r.far_lane_filtered, 0);
        assert_eq!(r.false_alarms, 0);
    }

    #[test]
    fn nearest_pair_wins() {
        let log = GroundTruthLog::new(vec![entry(10.0, Lane::Close), entry(11.0, Lane::Close)]).unwrap();
        let r = evaluate(&[det(10.9, 50.0)], &log, 2.0);
        assert_eq!(r.speed_errors[0].truth_time_s, 11.0);
    }

    #[test]
    fn truth_parsing() {
        let log = parse_ground_truth("time_s,lane,speed_kmh\n1.0,close,40\n2.5, far ,\n").unwrap();
        assert_eq!(log.entries().len(), 2);
        assert_eq!(log.entries()[1].lane, Lane::Far);
        assert_eq!(log.entries()[1].speed_kmh, None);
        assert_eq!(parse_ground_truth(&truth_csv(&log)).unwrap(), log);

        assert!(parse_ground_truth("time_s,lane,speed_kmh\n3.0,close,\n1.0,close,\n").is_err());
        assert!(parse_ground_truth("time_s,lane,speed_kmh\n-1.0,close,\n").is_err());
        assert!(parse_ground_truth("time_s,lane,speed_kmh\n1.0,middle,\n").is_err());
    }

    #[test]
    fn report_renders() {
        let text = evaluate(&[], &GroundTruthLog::default(), 2.0).to_string();
        assert!(text.contains("close-lane cars identified"));
    }

    proptest! {
        #[test]
        fn detection_order_is_irrelevant(
            truth_times in proptest::collection::vec(0.0f64..100.0, 0..15),
            det_times in proptest::collection::vec(0.0f64..100.0, 0..15),
            seed in any::<u64>(),
        ) {
            let mut tt = truth_times;
            tt.sort_by(f64::total_cmp);
            let entries = tt.iter().enumerate()
                .map(|(i, &t)| entry(t, if i % 3 == 0 { Lane::Far } else { Lane::Close }))
                .collect();
            let log = GroundTruthLog::new(entries).unwrap();
            let dets: Vec<_> = det_times.iter().map(|&t| det(t, t)).collect();
            let mut shuffled = dets.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let a = evaluate(&dets, &log, 2.0);
            let b = evaluate(&shuffled, &log, 2.0);
            prop_assert_eq!(a.clone(), b);
            prop_assert!(a.close_lane_identified <= a.close_lane_total);
            prop_assert!(a.far_lane_filtered <= a.far_lane_total);
        }
    }
}
