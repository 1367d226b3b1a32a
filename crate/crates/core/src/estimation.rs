//! Recursive Bayesian estimators for step length (Gaussian) and direction of
//! arrival (von Mises), their reset semantics, and the seeded samplers for
//! the two measurement noise channels.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("measurement must be finite (got {0})")]
    NonFiniteMeasurement(f64),
    #[error("step measurement variance must be > 0 (got {0})")]
    NonPositiveVariance(f64),
    #[error("DoA measurement concentration must be > 0 (got {0})")]
    NonPositiveConcentration(f64),
}

/// Measurement noise parameters shared by both estimators: the variance of
/// the step-length channel and the concentration of the angular channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub step_variance: f64,
    pub doa_concentration: f64,
}

impl NoiseModel {
    pub fn new(step_variance: f64, doa_concentration: f64) -> Result<Self, EstimationError> {
        if step_variance <= 0.0 || !step_variance.is_finite() {
            return Err(EstimationError::NonPositiveVariance(step_variance));
        }
        if doa_concentration <= 0.0 || !doa_concentration.is_finite() {
            return Err(EstimationError::NonPositiveConcentration(doa_concentration));
        }
        Ok(NoiseModel {
            step_variance,
            doa_concentration,
        })
    }
}

/// Normalize an angle to the half-open interval `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Signed circular difference `a - b` in `(-pi, pi]`, computed through
/// sine/cosine so large inputs cannot pick the wrong branch.
pub fn circular_difference(a: f64, b: f64) -> f64 {
    let d = a - b;
    normalize_angle(d.sin().atan2(d.cos()))
}

/// Running mean/variance of the step length under recursive Bayesian
/// updates with a fixed measurement variance.
///
/// A reset puts the estimate in the "infinite prior" state: the variance
/// reports as infinite (so threshold tests stay false) and the first update
/// adopts the measurement exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEstimate {
    mean: f64,
    variance: f64,
    measurement_variance: f64,
    infinite_prior: bool,
}

impl GaussianEstimate {
    /// Fresh estimator with an infinite prior.
    pub fn reset(measurement_variance: f64) -> Self {
        debug_assert!(measurement_variance > 0.0);
        GaussianEstimate {
            mean: 0.0,
            variance: 0.0,
            measurement_variance,
            infinite_prior: true,
        }
    }

    /// In the infinite-prior state the stored mean is a placeholder and the
    /// variance reports as infinite.
    pub fn has_infinite_prior(&self) -> bool {
        self.infinite_prior
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.infinite_prior {
            f64::INFINITY
        } else {
            self.variance
        }
    }

    pub fn measurement_variance(&self) -> f64 {
        self.measurement_variance
    }

    /// Fuse one noisy measurement into the estimate.
    ///
    /// The posterior is the precision-weighted combination of the prior and
    /// the measurement; the variance contracts by `r / (r + P)` per update,
    /// so from a reset the variance after `k` updates is `r / k`.
    pub fn update(&self, measurement: f64) -> Result<Self, EstimationError> {
        if !measurement.is_finite() {
            return Err(EstimationError::NonFiniteMeasurement(measurement));
        }
        let r = self.measurement_variance;
        if self.infinite_prior {
            return Ok(GaussianEstimate {
                mean: measurement,
                variance: r,
                measurement_variance: r,
                infinite_prior: false,
            });
        }
        let p = self.variance;
        Ok(GaussianEstimate {
            mean: (measurement * p + self.mean * r) / (r + p),
            variance: r * p / (r + p),
            measurement_variance: r,
            infinite_prior: false,
        })
    }
}

/// Running circular mean and concentration of the direction of arrival.
///
/// The concentration plays the role of an inverse variance: `1/K` is the
/// uncertainty used in switching tests, with `K = 0` (the reset state)
/// treated as infinitely uncertain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesEstimate {
    mean: f64,
    concentration: f64,
    measurement_concentration: f64,
}

impl VonMisesEstimate {
    /// Fresh estimator with zero concentration.
    pub fn reset(measurement_concentration: f64) -> Self {
        debug_assert!(measurement_concentration > 0.0);
        VonMisesEstimate {
            mean: 0.0,
            concentration: 0.0,
            measurement_concentration,
        }
    }

    /// Estimator in an explicit state, for resuming or testing.
    pub fn new(
        mean: f64,
        concentration: f64,
        measurement_concentration: f64,
    ) -> Result<Self, EstimationError> {
        if !mean.is_finite() {
            return Err(EstimationError::NonFiniteMeasurement(mean));
        }
        if concentration < 0.0 || !concentration.is_finite() {
            return Err(EstimationError::NonPositiveConcentration(concentration));
        }
        if measurement_concentration <= 0.0 || !measurement_concentration.is_finite() {
            return Err(EstimationError::NonPositiveConcentration(
                measurement_concentration,
            ));
        }
        Ok(VonMisesEstimate {
            mean: normalize_angle(mean),
            concentration,
            measurement_concentration,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn measurement_concentration(&self) -> f64 {
        self.measurement_concentration
    }

    /// `1/K`, reported as infinite at `K = 0` so comparisons against any
    /// finite threshold are false right after a reset.
    pub fn uncertainty(&self) -> f64 {
        if self.concentration > 0.0 {
            self.concentration.recip()
        } else {
            f64::INFINITY
        }
    }

    /// Fuse one noisy angular measurement: the resultant of the prior and
    /// measurement concentration vectors gives the new mean direction and
    /// concentration.
    pub fn update(&self, measurement: f64) -> Result<Self, EstimationError> {
        if !measurement.is_finite() {
            return Err(EstimationError::NonFiniteMeasurement(measurement));
        }
        let km = self.measurement_concentration;
        let c = self.concentration * self.mean.cos() + km * measurement.cos();
        let s = self.concentration * self.mean.sin() + km * measurement.sin();
        Ok(VonMisesEstimate {
            mean: normalize_angle(s.atan2(c)),
            concentration: (c * c + s * s).sqrt(),
            measurement_concentration: km,
        })
    }
}

/// Concentration after fusing, written in magnitude form:
/// `sqrt(K^2 + k^2 + 2 K k cos(mean - measurement))`.
///
/// Algebraically identical to the resultant norm computed by
/// [`VonMisesEstimate::update`]; kept as an independent route for
/// cross-checking.
pub fn fused_concentration(
    prior_concentration: f64,
    measurement_concentration: f64,
    mean_minus_measurement: f64,
) -> f64 {
    let k0 = prior_concentration;
    let k1 = measurement_concentration;
    (k0 * k0 + k1 * k1 + 2.0 * k0 * k1 * mean_minus_measurement.cos()).sqrt()
}

/// Draw a noisy step-length measurement around the true value.
pub fn sample_step<R: Rng + ?Sized>(rng: &mut R, true_step: f64, step_variance: f64) -> f64 {
    debug_assert!(step_variance > 0.0);
    let normal = Normal::new(true_step, step_variance.sqrt()).expect("finite parameters");
    normal.sample(rng)
}

/// Draw a noisy direction-of-arrival measurement from a von Mises
/// distribution centered on the true angle.
///
/// Uses Best–Fisher rejection sampling with a wrapped-Cauchy envelope, which
/// is exact for any concentration. The result is normalized to `(-pi, pi]`.
pub fn sample_doa<R: Rng + ?Sized>(rng: &mut R, true_doa: f64, concentration: f64) -> f64 {
    debug_assert!(concentration >= 0.0);
    if concentration == 0.0 {
        let u: f64 = rng.random();
        return PI - TAU * u;
    }
    let tau = 1.0 + (1.0 + 4.0 * concentration * concentration).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * concentration);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = ((1.0 + r * z) / (r + z)).clamp(-1.0, 1.0);
        let c = concentration * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let offset = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return normalize_angle(true_doa + offset);
        }
    }
}
