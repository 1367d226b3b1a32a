//! Deterministic, seeded multi-agent simulator for acoustic source seeking.
//!
//! Agents carry circular six-microphone arrays in a field of incoherent
//! point sources and alternate between a stationary listening mode, where
//! recursive Bayesian estimators fuse noisy direction-of-arrival and
//! step-length measurements, and a movement mode, where a PD-tracked
//! reference carries them toward the estimated direction. Two scenarios are
//! supported: a bearing-rigid four-agent formation seeking a single source,
//! and independent explorer agents locating multiple sources while sharing
//! a registry of explored areas.

pub mod acoustics;
pub mod config;
pub mod estimation;
pub mod exploration;
pub mod formation;
pub mod hybrid;
pub mod sim;
pub mod vec2;

pub use acoustics::{AcousticWorld, MicrophoneArray, SoundSource};
pub use config::{load_config, ScenarioConfig, ScenarioKind};
pub use estimation::{GaussianEstimate, NoiseModel, VonMisesEstimate};
pub use exploration::{ExplorationParams, ExploredArea, ExploredAreaRegistry};
pub use formation::{FormationGraph, GainSet};
pub use hybrid::{OperatingMode, SupervisorState, SwitchThresholds};
pub use sim::{run_multi_source, run_single_source, RunMetrics, RunSummary, SimError};
pub use vec2::Vec2;
