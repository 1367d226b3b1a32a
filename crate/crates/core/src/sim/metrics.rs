//! Run records: mode-switch events, detections, movement-phase accounting,
//! trajectory samples and the convergence-time tracker.

use serde::Serialize;

use crate::config::ScenarioKind;
use crate::exploration::ExploredArea;
use crate::hybrid::OperatingMode;
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ListenStart,
    MoveStart,
    Detection,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::ListenStart => "listen_start",
            EventKind::MoveStart => "move_start",
            EventKind::Detection => "detection",
        }
    }
}

/// One entry of the event log. `unit` is the supervisor index: the agent
/// index in the multi-source scenario, 0 for the whole formation in the
/// single-source scenario. The payload depends on the kind: the latched
/// step target for `MoveStart`, the traveled distance of the completed
/// movement for `ListenStart`, and the matched area index for `Detection`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEvent {
    pub step: u64,
    pub time_s: f64,
    pub unit: usize,
    pub kind: EventKind,
    pub position: Vec2,
    pub payload: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub step: u64,
    pub time_s: f64,
    pub agent: usize,
    pub position: Vec2,
    /// Index of the explored area this detection created or grew.
    pub area: usize,
    pub new_area: bool,
}

/// Completed movement phase: the latched target and the distance actually
/// traveled when the switch condition fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MovementPhaseRecord {
    pub unit: usize,
    pub step_target: f64,
    pub traveled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub step: u64,
    pub time_s: f64,
    pub agent: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub mode: OperatingMode,
    pub step_mean: f64,
    pub step_variance: f64,
    pub doa_mean: f64,
    pub doa_concentration: f64,
}

/// Everything recorded by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub duration_s: f64,
    pub dt_s: f64,
    /// Convergence time: earliest instant from which the unit is listening
    /// and the centroid stays within the convergence radius for the rest of
    /// the run. Absent when that never happens (single-source scenario
    /// only).
    pub t_s: Option<f64>,
    /// Cumulative time spent listening up to `t_s`, for accounting that
    /// excludes travel and settling.
    pub listening_time_to_ts_s: Option<f64>,
    pub listening_phases_to_ts: Option<usize>,
    pub final_centroid_distance: Option<f64>,
    /// Largest per-edge bearing error observed after the initial transient
    /// (single-source scenario only).
    pub max_bearing_error_after_transient: Option<f64>,
    /// Number of true sources with a detection within the scoring radius
    /// (multi-source scenario only).
    pub sources_located: Option<usize>,
    pub detections: Vec<DetectionRecord>,
    pub events: Vec<SimEvent>,
    pub movement_phases: Vec<MovementPhaseRecord>,
    /// Decimated (time, centroid-target distance) trace, single-source only.
    pub centroid_distance_series: Vec<(f64, f64)>,
    /// Per-agent samples, only filled when trajectories were requested.
    pub trajectories: Vec<TrajectorySample>,
    pub mode_switches: usize,
    pub true_sources: Vec<Vec2>,
    /// Final shared registry contents (multi-source scenario only).
    pub explored_areas: Vec<ExploredArea>,
}

impl RunMetrics {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            scenario: self.scenario,
            seed: self.seed,
            duration_s: self.duration_s,
            t_s_s: self.t_s,
            converged: self.t_s.is_some(),
            listening_time_to_ts_s: self.listening_time_to_ts_s,
            listening_phases_to_ts: self.listening_phases_to_ts,
            final_centroid_distance_m: self.final_centroid_distance,
            max_bearing_error_after_transient: self.max_bearing_error_after_transient,
            sources_located: self.sources_located,
            detection_events: self.detections.len(),
            mode_switches: self.mode_switches,
            movement_phases: self.movement_phases.len(),
        }
    }
}

/// Compact serializable per-run summary for the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub duration_s: f64,
    pub t_s_s: Option<f64>,
    pub converged: bool,
    pub listening_time_to_ts_s: Option<f64>,
    pub listening_phases_to_ts: Option<usize>,
    pub final_centroid_distance_m: Option<f64>,
    pub max_bearing_error_after_transient: Option<f64>,
    pub sources_located: Option<usize>,
    pub detection_events: usize,
    pub mode_switches: usize,
    pub movement_phases: usize,
}

/// Online tracker for the convergence time: scans the distance/mode stream
/// once and keeps the earliest listening instant of the current
/// within-radius streak. If the streak survives to the end of the run, that
/// instant is the convergence time.
#[derive(Debug, Clone)]
pub struct ConvergenceTracker {
    radius: f64,
    in_streak: bool,
    candidate: Option<CandidatePoint>,
}

#[derive(Debug, Clone, Copy)]
struct CandidatePoint {
    step: u64,
    listening_steps: u64,
    listening_phases: usize,
}

impl ConvergenceTracker {
    pub fn new(radius: f64) -> Self {
        ConvergenceTracker {
            radius,
            in_streak: false,
            candidate: None,
        }
    }

    pub fn observe(
        &mut self,
        step: u64,
        distance: f64,
        mode: OperatingMode,
        listening_steps: u64,
        listening_phases: usize,
    ) {
        if distance > self.radius {
            self.in_streak = false;
            self.candidate = None;
            return;
        }
        self.in_streak = true;
        if self.candidate.is_none() && mode == OperatingMode::Listening {
            self.candidate = Some(CandidatePoint {
                step,
                listening_steps,
                listening_phases,
            });
        }
    }

    /// `(t_s, listening seconds to t_s, listening phases to t_s)`.
    pub fn finalize(&self, dt: f64) -> Option<(f64, f64, usize)> {
        self.candidate.map(|c| {
            (
                c.step as f64 * dt,
                c.listening_steps as f64 * dt,
                c.listening_phases,
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_takes_the_first_listening_instant_of_the_last_streak() {
        let mut t = ConvergenceTracker::new(0.05);
        // Approach: too far, then a streak that breaks, then a final streak.
        t.observe(1, 1.0, OperatingMode::Moving, 0, 1);
        t.observe(2, 0.04, OperatingMode::Moving, 0, 1);
        t.observe(3, 0.03, OperatingMode::Listening, 10, 2);
        t.observe(4, 0.06, OperatingMode::Listening, 20, 2); // breaks
        t.observe(5, 0.02, OperatingMode::Moving, 20, 2);
        t.observe(6, 0.02, OperatingMode::Listening, 30, 3);
        t.observe(7, 0.01, OperatingMode::Listening, 40, 3);
        let (ts, listen_s, phases) = t.finalize(1.0).unwrap();
        assert_eq!(ts, 6.0);
        assert_eq!(listen_s, 30.0);
        assert_eq!(phases, 3);
    }

    #[test]
    fn tracker_reports_nothing_without_a_surviving_streak() {
        let mut t = ConvergenceTracker::new(0.05);
        t.observe(1, 0.01, OperatingMode::Listening, 0, 1);
        t.observe(2, 0.30, OperatingMode::Listening, 1, 1);
        assert!(t.finalize(1.0).is_none());
    }
}
