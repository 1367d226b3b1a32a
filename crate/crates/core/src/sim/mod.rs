//! Deterministic fixed-step simulation: double-integrator agents, the
//! hybrid listening/movement orchestration for both scenarios, and the
//! experiment sweeps.

pub mod metrics;
pub mod multi;
pub mod single;
pub mod sweep;

use serde::Serialize;
use thiserror::Error;

use crate::acoustics::AcousticsError;
use crate::config::ScenarioKind;
use crate::estimation::EstimationError;
use crate::exploration::ExplorationError;
use crate::formation::FormationError;
use crate::vec2::Vec2;

pub use metrics::{
    DetectionRecord, EventKind, MovementPhaseRecord, RunMetrics, RunSummary, SimEvent,
    TrajectorySample,
};
pub use multi::run_multi_source;
pub use single::run_single_source;
pub use sweep::run_seed;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite acceleration for agent {agent} at step {step}")]
    NonFiniteAcceleration { agent: usize, step: u64 },
    #[error("configuration is for the {found} scenario, expected {expected}")]
    ScenarioMismatch {
        expected: ScenarioKind,
        found: ScenarioKind,
    },
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Formation(#[from] FormationError),
    #[error(transparent)]
    Exploration(#[from] ExplorationError),
}

/// Kinematic state of one double-integrator agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentBody {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl AgentBody {
    pub fn at_rest(position: Vec2) -> Self {
        AgentBody {
            position,
            velocity: Vec2::ZERO,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Semi-implicit Euler step: the velocity is advanced first and the new
/// velocity moves the position, which keeps second-order tracking loops
/// well-behaved at fixed step sizes.
pub fn integrate_step(body: AgentBody, acceleration: Vec2, dt: f64) -> AgentBody {
    let velocity = body.velocity + acceleration * dt;
    AgentBody {
        velocity,
        position: body.position + velocity * dt,
    }
}

/// Integer-step clock; the elapsed time is always `step * dt` exactly.
#[derive(Debug, Clone, Copy)]
pub struct SimClock {
    step: u64,
    dt: f64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        SimClock { step: 0, dt }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time_s(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// Options that affect what a run records, not what it computes.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub emit_trajectories: bool,
}
