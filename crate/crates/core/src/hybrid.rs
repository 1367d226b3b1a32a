//! Two-mode hybrid supervisor: a control unit is either listening (standing
//! still, fusing measurements) or moving (tracking a reference), with
//! threshold-based switching and estimator resets on every return to
//! listening.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{EstimationError, GaussianEstimate, NoiseModel, VonMisesEstimate};
use crate::vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error("threshold {name} must be > 0 (got {value})")]
    NonPositiveThreshold { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatingMode {
    Listening,
    Moving,
}

/// Switching thresholds for the listening-to-movement decision plus the
/// speed below which a braking unit counts as settled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchThresholds {
    /// Maximum step-length posterior variance allowed before moving.
    pub step_variance_max: f64,
    /// Maximum DoA uncertainty (inverse concentration) allowed before moving.
    pub doa_uncertainty_max: f64,
    /// Speed below which the unit is considered stationary.
    pub settle_speed: f64,
}

impl SwitchThresholds {
    pub fn new(
        step_variance_max: f64,
        doa_uncertainty_max: f64,
        settle_speed: f64,
    ) -> Result<Self, HybridError> {
        let check = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(value)
            } else {
                Err(HybridError::NonPositiveThreshold { name, value })
            }
        };
        Ok(SwitchThresholds {
            step_variance_max: check("step_variance_max", step_variance_max)?,
            doa_uncertainty_max: check("doa_uncertainty_max", doa_uncertainty_max)?,
            settle_speed: check("settle_speed", settle_speed)?,
        })
    }
}

/// Per-unit supervisor state: the active mode, the position where the
/// current (or most recent) listening phase took place, and the two
/// estimators fed during listening.
///
/// The anchor is only rewritten on entry to listening, so it is constant for
/// the whole of any movement phase. Both estimators are reset on every
/// movement-to-listening transition.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorState {
    mode: OperatingMode,
    measurement_anchor: Vec2,
    step_estimate: GaussianEstimate,
    doa_estimate: VonMisesEstimate,
}

impl SupervisorState {
    /// Initial state: listening at `anchor` with freshly reset estimators.
    pub fn start(anchor: Vec2, noise: &NoiseModel) -> Self {
        SupervisorState {
            mode: OperatingMode::Listening,
            measurement_anchor: anchor,
            step_estimate: GaussianEstimate::reset(noise.step_variance),
            doa_estimate: VonMisesEstimate::reset(noise.doa_concentration),
        }
    }

    pub fn mode(&self) -> OperatingMode {
        self.mode
    }

    pub fn measurement_anchor(&self) -> Vec2 {
        self.measurement_anchor
    }

    pub fn step_estimate(&self) -> &GaussianEstimate {
        &self.step_estimate
    }

    pub fn doa_estimate(&self) -> &VonMisesEstimate {
        &self.doa_estimate
    }

    /// Fuse one measurement pair. Must only be called in listening mode.
    pub fn listening_step(
        &mut self,
        step_measurement: f64,
        doa_measurement: f64,
    ) -> Result<(), EstimationError> {
        assert_eq!(
            self.mode,
            OperatingMode::Listening,
            "listening_step called in movement mode"
        );
        self.step_estimate = self.step_estimate.update(step_measurement)?;
        self.doa_estimate = self.doa_estimate.update(doa_measurement)?;
        Ok(())
    }

    /// Listening-to-movement condition: both estimators must be precise
    /// enough, i.e. the variance and the inverse concentration are both at
    /// or below their thresholds. False on freshly reset estimators.
    pub fn should_start_moving(&self, thresholds: &SwitchThresholds) -> bool {
        self.step_estimate.variance() <= thresholds.step_variance_max
            && self.doa_estimate.uncertainty() <= thresholds.doa_uncertainty_max
    }

    /// Movement-to-listening condition: the unit has traveled at least
    /// `step_target` from the anchor. The caller supplies the target that
    /// was latched when movement began.
    pub fn should_start_listening(&self, current_position: Vec2, step_target: f64) -> bool {
        debug_assert_eq!(self.mode, OperatingMode::Moving);
        current_position.distance(self.measurement_anchor) >= step_target
    }

    /// Flip to movement mode. The estimates are left frozen so the caller
    /// can latch the step target and heading from them; the anchor is
    /// unchanged for the whole movement phase.
    pub fn start_moving(&mut self) {
        assert_eq!(self.mode, OperatingMode::Listening, "not in listening mode");
        self.mode = OperatingMode::Moving;
    }

    /// Flip back to listening mode at `position`: the anchor moves there and
    /// both estimators are reset (infinite prior / zero concentration).
    pub fn start_listening(&mut self, position: Vec2) {
        assert_eq!(self.mode, OperatingMode::Moving, "not in movement mode");
        self.mode = OperatingMode::Listening;
        self.measurement_anchor = position;
        self.step_estimate = GaussianEstimate::reset(self.step_estimate.measurement_variance());
        self.doa_estimate = VonMisesEstimate::reset(self.doa_estimate.measurement_concentration());
    }
}
