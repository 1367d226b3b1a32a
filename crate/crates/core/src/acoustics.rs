//! Static acoustic field model: incoherent point sources whose intensities
//! add, plus the geometry of a circular six-microphone array.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec2::Vec2;

/// Number of microphones in one array.
pub const CHANNEL_COUNT: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticsError {
    #[error("source power must be > 0 (got {0})")]
    NonPositivePower(f64),
    #[error("source position must be finite")]
    NonFinitePosition,
    #[error("an acoustic world needs at least one source")]
    NoSources,
    #[error("microphone array radius must be > 0 (got {0})")]
    NonPositiveRadius(f64),
}

/// A static omnidirectional point source with a fixed emission power in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoundSource {
    position: Vec2,
    power: f64,
}

impl SoundSource {
    pub fn new(position: Vec2, power: f64) -> Result<Self, AcousticsError> {
        if !position.is_finite() {
            return Err(AcousticsError::NonFinitePosition);
        }
        if power <= 0.0 || !power.is_finite() {
            return Err(AcousticsError::NonPositivePower(power));
        }
        Ok(SoundSource { position, power })
    }

    pub fn position(&self) -> Vec2 {
        self.position
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Intensity contributed by this source at `point`, in W/m².
    ///
    /// Constant within 1 m of the source, then falling off with the square of
    /// the distance. The two branches agree at exactly 1 m.
    fn intensity_at(&self, point: Vec2) -> f64 {
        let d = self.position.distance(point);
        if d <= 1.0 {
            self.power / (4.0 * PI)
        } else {
            self.power / (4.0 * PI * d * d)
        }
    }
}

/// The set of sources active in a scenario. Sources are incoherent, so the
/// intensity observed anywhere is the sum of the per-source intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticWorld {
    sources: Vec<SoundSource>,
}

impl AcousticWorld {
    pub fn new(sources: Vec<SoundSource>) -> Result<Self, AcousticsError> {
        if sources.is_empty() {
            return Err(AcousticsError::NoSources);
        }
        Ok(AcousticWorld { sources })
    }

    pub fn sources(&self) -> &[SoundSource] {
        &self.sources
    }

    /// Total intensity at `point`. Strictly positive for finite points.
    pub fn intensity_at(&self, point: Vec2) -> f64 {
        self.sources.iter().map(|s| s.intensity_at(point)).sum()
    }
}

/// Circular array of six omnidirectional microphones around a center point.
///
/// Channel `h` (1-based) sits at `center + radius * (cos(pi/3 * (h-1)),
/// sin(pi/3 * (h-1)))`, so consecutive channels subtend 60 degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrophoneArray {
    center: Vec2,
    radius: f64,
}

impl MicrophoneArray {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, AcousticsError> {
        if !center.is_finite() {
            return Err(AcousticsError::NonFinitePosition);
        }
        if radius <= 0.0 || !radius.is_finite() {
            return Err(AcousticsError::NonPositiveRadius(radius));
        }
        Ok(MicrophoneArray { center, radius })
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn positions(&self) -> [Vec2; CHANNEL_COUNT] {
        std::array::from_fn(|h| {
            let angle = PI / 3.0 * h as f64;
            self.center + Vec2::from_angle(angle) * self.radius
        })
    }
}

/// Per-channel intensity readings for an array placed in a world.
pub fn array_intensities(world: &AcousticWorld, array: &MicrophoneArray) -> [f64; CHANNEL_COUNT] {
    array.positions().map(|p| world.intensity_at(p))
}

/// Single omnidirectional reading for an agent: the mean over the six
/// channels of its array.
pub fn omni_intensity(world: &AcousticWorld, array: &MicrophoneArray) -> f64 {
    mean(&array_intensities(world, array))
}

fn mean(values: &[f64; CHANNEL_COUNT]) -> f64 {
    values.iter().sum::<f64>() / CHANNEL_COUNT as f64
}
