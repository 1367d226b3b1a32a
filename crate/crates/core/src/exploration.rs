//! Multi-source machinery: per-agent array-based DoA/step estimation, the
//! virtual-velocity exploration dynamics, the shared registry of explored
//! areas, and detection scoring.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::CHANNEL_COUNT;
use crate::estimation::normalize_angle;
use crate::vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplorationError {
    #[error("all channels read the same intensity: no directional signal")]
    NoSignal,
    #[error("exploration parameter {name} out of range: {requirement} (got {value})")]
    ParameterOutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Number of quantized escape directions drawn when leaving an explored
/// area (multiples of pi/4 around the circle).
pub const ESCAPE_DIRECTIONS: u32 = 8;

/// Disk recorded around a detected target. Radii only ever grow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExploredArea {
    pub center: Vec2,
    pub radius: f64,
}

impl ExploredArea {
    pub fn contains(&self, point: Vec2) -> bool {
        self.center.distance(point) <= self.radius
    }
}

/// What happened to the registry when a detection was recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionOutcome {
    /// A new area was appended at this index.
    NewArea(usize),
    /// An existing area (index) grew to the given radius.
    GrewArea(usize, f64),
}

impl DetectionOutcome {
    pub fn area_index(&self) -> usize {
        match *self {
            DetectionOutcome::NewArea(i) => i,
            DetectionOutcome::GrewArea(i, _) => i,
        }
    }

    pub fn is_new(&self) -> bool {
        matches!(self, DetectionOutcome::NewArea(_))
    }
}

/// Append/grow-only collection of explored areas shared by all agents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExploredAreaRegistry {
    areas: Vec<ExploredArea>,
}

impl ExploredAreaRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_areas(areas: Vec<ExploredArea>) -> Self {
        ExploredAreaRegistry { areas }
    }

    pub fn areas(&self) -> &[ExploredArea] {
        &self.areas
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Index of the area containing `point`, if any. When several areas
    /// contain the point, the one whose boundary is nearest wins (smallest
    /// `radius - distance`), with ties going to the earliest-created area.
    pub fn containing_area(&self, point: Vec2) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, area) in self.areas.iter().enumerate() {
            let margin = area.radius - area.center.distance(point);
            if margin >= 0.0 {
                match best {
                    Some((_, m)) if margin >= m => {}
                    _ => best = Some((i, margin)),
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Record a detection at `position`: grow the containing area by
    /// `growth_factor` if there is one, otherwise append a fresh area of
    /// `initial_radius` centered on the detecting agent.
    pub fn register_detection(
        &mut self,
        position: Vec2,
        growth_factor: f64,
        initial_radius: f64,
    ) -> DetectionOutcome {
        match self.containing_area(position) {
            Some(i) => {
                self.areas[i].radius *= growth_factor;
                DetectionOutcome::GrewArea(i, self.areas[i].radius)
            }
            None => {
                self.areas.push(ExploredArea {
                    center: position,
                    radius: initial_radius,
                });
                DetectionOutcome::NewArea(self.areas.len() - 1)
            }
        }
    }
}

/// Parameters of the exploration dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationParams {
    /// Scale applied to the inverse-intensity spread when estimating the
    /// step length from the six channels.
    pub step_scale: f64,
    /// Seconds of virtual velocity converted into movement-phase length.
    pub switch_time: f64,
    /// Decay applied to the previous virtual velocity on each update, in
    /// (0, 1).
    pub velocity_decay: f64,
    /// Multiple of the containing area's radius used for escape hops, >= 1.
    pub escape_gain: f64,
    /// Multiplicative growth of an area on repeated detection, > 1.
    pub area_growth: f64,
    /// Step-length estimate at or below which a detection fires.
    pub detection_step_threshold: f64,
    /// Radius around a detection point within which a true source counts as
    /// located.
    pub scoring_radius: f64,
    /// Radius of a freshly created explored area.
    pub initial_area_radius: f64,
}

impl ExplorationParams {
    pub fn validated(self) -> Result<Self, ExplorationError> {
        let check = |name: &'static str,
                     requirement: &'static str,
                     ok: bool,
                     value: f64|
         -> Result<(), ExplorationError> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ExplorationError::ParameterOutOfRange {
                    name,
                    requirement,
                    value,
                })
            }
        };
        check("step_scale", "> 0", self.step_scale > 0.0, self.step_scale)?;
        check("switch_time", "> 0", self.switch_time > 0.0, self.switch_time)?;
        check(
            "velocity_decay",
            "0 < velocity_decay < 1",
            self.velocity_decay > 0.0 && self.velocity_decay < 1.0,
            self.velocity_decay,
        )?;
        check("escape_gain", ">= 1", self.escape_gain >= 1.0, self.escape_gain)?;
        check("area_growth", "> 1", self.area_growth > 1.0, self.area_growth)?;
        check(
            "detection_step_threshold",
            "> 0",
            self.detection_step_threshold > 0.0,
            self.detection_step_threshold,
        )?;
        check(
            "scoring_radius",
            "> 0",
            self.scoring_radius > 0.0,
            self.scoring_radius,
        )?;
        check(
            "initial_area_radius",
            "> 0",
            self.initial_area_radius > 0.0,
            self.initial_area_radius,
        )?;
        Ok(self)
    }
}

/// Direction of arrival seen by a single six-channel array: the direction
/// from the quietest microphone to the loudest one. Ties are broken by the
/// lowest channel index, so the output is one of the twelve inter-vertex
/// directions of the hexagon.
pub fn array_doa(
    intensities: &[f64; CHANNEL_COUNT],
    positions: &[Vec2; CHANNEL_COUNT],
) -> Result<f64, ExplorationError> {
    let mut max_idx = 0;
    let mut min_idx = 0;
    for h in 1..CHANNEL_COUNT {
        if intensities[h] > intensities[max_idx] {
            max_idx = h;
        }
        if intensities[h] < intensities[min_idx] {
            min_idx = h;
        }
    }
    if intensities[max_idx] == intensities[min_idx] {
        return Err(ExplorationError::NoSignal);
    }
    let direction = (positions[max_idx] - positions[min_idx])
        .normalized()
        .expect("distinct hexagon vertices");
    Ok(normalize_angle(direction.angle()))
}

/// Step length from the spread between the loudest and quietest channel.
/// Zero when every channel reads the same (e.g. fully inside the near
/// field), which is what makes the estimate shrink near a source.
pub fn array_step(intensities: &[f64; CHANNEL_COUNT], step_scale: f64) -> f64 {
    let max = intensities.iter().cloned().fold(f64::MIN, f64::max);
    let min = intensities.iter().cloned().fold(f64::MAX, f64::min);
    step_scale * (1.0 / min - 1.0 / max)
}

/// Virtual-velocity update applied at each measurement-to-movement switch.
///
/// Inside an explored area the agent commits to an escape hop: a random
/// direction quantized to pi/4 with magnitude `escape_gain * radius`, which
/// exceeds the area radius and therefore carries the agent out of it (when
/// started from the center). Outside, the previous virtual velocity decays
/// and the fresh gradient estimate is added in.
pub fn update_virtual_velocity<R: Rng + ?Sized>(
    current: Vec2,
    agent_position: Vec2,
    registry: &ExploredAreaRegistry,
    step_mean: f64,
    doa_mean: f64,
    params: &ExplorationParams,
    rng: &mut R,
) -> Vec2 {
    match registry.containing_area(agent_position) {
        Some(i) => {
            let slot = rng.random_range(0..ESCAPE_DIRECTIONS);
            let angle = std::f64::consts::FRAC_PI_4 * slot as f64;
            Vec2::from_angle(angle) * (params.escape_gain * registry.areas()[i].radius)
        }
        None => current * params.velocity_decay + Vec2::from_angle(doa_mean) * step_mean,
    }
}

/// Heading of the exploration reference; `None` when the virtual velocity is
/// zero and the agent should hold position.
pub fn exploration_heading(virtual_velocity: Vec2) -> Option<f64> {
    virtual_velocity
        .normalized()
        .map(|d| normalize_angle(d.angle()))
}

/// Number of true sources with at least one detection point within
/// `scoring_radius`. Each source counts at most once however many
/// detections land near it.
pub fn score_detections(
    detection_points: &[Vec2],
    sources: &[Vec2],
    scoring_radius: f64,
) -> usize {
    sources
        .iter()
        .filter(|&&s| {
            detection_points
                .iter()
                .any(|&d| d.distance(s) <= scoring_radius)
        })
        .count()
}
