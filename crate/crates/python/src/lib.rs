//! Python extension module exposing the simulator's main types and
//! operations: acoustic field queries, the two recursive Bayesian
//! estimators, the noise samplers, formation/array DoA and step estimation,
//! configuration handling, and full scenario runs.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use soundseek::acoustics;
use soundseek::config;
use soundseek::estimation;
use soundseek::exploration;
use soundseek::formation;
use soundseek::sim;
use soundseek::vec2::Vec2;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vec2s(points: &[(f64, f64)]) -> Vec<Vec2> {
    points.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
}

/// Scenario configuration wrapper. Build one from defaults, a TOML string,
/// or a file; tweak the common knobs; pass it to `run_single`/`run_multi`.
#[pyclass(name = "ScenarioConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: config::ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[new]
    fn new(scenario: &str) -> PyResult<Self> {
        let inner = match scenario {
            "single" => config::ScenarioConfig::default_single(),
            "multi" => config::ScenarioConfig::default_multi(),
            other => {
                return Err(value_err(format!(
                    "unknown scenario {other:?}; use \"single\" or \"multi\""
                )))
            }
        };
        Ok(PyScenarioConfig { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyScenarioConfig {
            inner: config::ScenarioConfig::from_toml_str(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(PyScenarioConfig {
            inner: config::load_config(path).map_err(value_err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn scenario(&self) -> String {
        self.inner.scenario.to_string()
    }

    #[getter]
    fn get_seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn get_duration_s(&self) -> f64 {
        self.inner.duration_s
    }

    #[setter]
    fn set_duration_s(&mut self, duration_s: f64) -> PyResult<()> {
        self.inner.duration_s = duration_s;
        self.inner.validate().map_err(value_err)
    }

    fn set_noise(&mut self, step_variance: f64, doa_concentration: f64) -> PyResult<()> {
        self.inner.noise.step_variance = step_variance;
        self.inner.noise.doa_concentration = doa_concentration;
        self.inner.validate().map_err(value_err)
    }

    fn set_sources(&mut self, sources: Vec<(f64, f64, f64)>) -> PyResult<()> {
        self.inner.sources = Some(
            sources
                .into_iter()
                .map(|(x, y, power)| config::SourceSpec {
                    x,
                    y,
                    power: Some(power),
                })
                .collect(),
        );
        self.inner.spawn = None;
        self.inner.validate().map_err(value_err)
    }

    fn set_spawn(&mut self, count: usize, area_side: f64) -> PyResult<()> {
        self.inner.spawn = Some(config::SpawnSpec { count, area_side });
        self.inner.sources = None;
        self.inner.validate().map_err(value_err)
    }

    fn set_agents(&mut self, agents: Vec<(f64, f64)>) -> PyResult<()> {
        self.inner.agents = agents.into_iter().map(|(x, y)| [x, y]).collect();
        self.inner.validate().map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(scenario={}, seed={}, duration_s={})",
            self.inner.scenario, self.inner.seed, self.inner.duration_s
        )
    }
}

/// Result of one scenario run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    inner: sim::RunMetrics,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn t_s(&self) -> Option<f64> {
        self.inner.t_s
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.t_s.is_some()
    }

    #[getter]
    fn final_centroid_distance(&self) -> Option<f64> {
        self.inner.final_centroid_distance
    }

    #[getter]
    fn max_bearing_error(&self) -> Option<f64> {
        self.inner.max_bearing_error_after_transient
    }

    #[getter]
    fn sources_located(&self) -> Option<usize> {
        self.inner.sources_located
    }

    #[getter]
    fn detection_count(&self) -> usize {
        self.inner.detections.len()
    }

    #[getter]
    fn mode_switches(&self) -> usize {
        self.inner.mode_switches
    }

    /// Events as `(time_s, agent_id, kind, x, y, payload)` tuples.
    fn events(&self) -> Vec<(f64, usize, String, f64, f64, f64)> {
        self.inner
            .events
            .iter()
            .map(|e| {
                (
                    e.time_s,
                    e.unit,
                    e.kind.as_str().to_string(),
                    e.position.x,
                    e.position.y,
                    e.payload,
                )
            })
            .collect()
    }

    /// Detection points as `(time_s, agent_id, x, y)` tuples.
    fn detections(&self) -> Vec<(f64, usize, f64, f64)> {
        self.inner
            .detections
            .iter()
            .map(|d| (d.time_s, d.agent, d.position.x, d.position.y))
            .collect()
    }

    fn true_sources(&self) -> Vec<(f64, f64)> {
        self.inner.true_sources.iter().map(|s| (s.x, s.y)).collect()
    }

    /// Decimated `(time_s, centroid_distance_m)` trace (single scenario).
    fn centroid_distance_series(&self) -> Vec<(f64, f64)> {
        self.inner.centroid_distance_series.clone()
    }

    fn __repr__(&self) -> String {
        match self.inner.scenario {
            config::ScenarioKind::Single => format!(
                "RunResult(scenario=single, seed={}, t_s={:?})",
                self.inner.seed, self.inner.t_s
            ),
            config::ScenarioKind::Multi => format!(
                "RunResult(scenario=multi, seed={}, sources_located={:?})",
                self.inner.seed, self.inner.sources_located
            ),
        }
    }
}

/// Gaussian step-length estimator with reset semantics.
#[pyclass(name = "GaussianEstimate", skip_from_py_object)]
#[derive(Clone)]
struct PyGaussianEstimate {
    inner: estimation::GaussianEstimate,
}

#[pymethods]
impl PyGaussianEstimate {
    /// Freshly reset estimator (infinite prior).
    #[new]
    fn new(measurement_variance: f64) -> PyResult<Self> {
        if !(measurement_variance.is_finite() && measurement_variance > 0.0) {
            return Err(value_err("measurement_variance must be > 0"));
        }
        Ok(PyGaussianEstimate {
            inner: estimation::GaussianEstimate::reset(measurement_variance),
        })
    }

    fn update(&self, measurement: f64) -> PyResult<Self> {
        Ok(PyGaussianEstimate {
            inner: self.inner.update(measurement).map_err(value_err)?,
        })
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn __repr__(&self) -> String {
        format!(
            "GaussianEstimate(mean={}, variance={})",
            self.inner.mean(),
            self.inner.variance()
        )
    }
}

/// Von Mises direction-of-arrival estimator with reset semantics.
#[pyclass(name = "VonMisesEstimate", skip_from_py_object)]
#[derive(Clone)]
struct PyVonMisesEstimate {
    inner: estimation::VonMisesEstimate,
}

#[pymethods]
impl PyVonMisesEstimate {
    /// Freshly reset estimator (zero concentration).
    #[new]
    fn new(measurement_concentration: f64) -> PyResult<Self> {
        if !(measurement_concentration.is_finite() && measurement_concentration > 0.0) {
            return Err(value_err("measurement_concentration must be > 0"));
        }
        Ok(PyVonMisesEstimate {
            inner: estimation::VonMisesEstimate::reset(measurement_concentration),
        })
    }

    fn update(&self, measurement: f64) -> PyResult<Self> {
        Ok(PyVonMisesEstimate {
            inner: self.inner.update(measurement).map_err(value_err)?,
        })
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn concentration(&self) -> f64 {
        self.inner.concentration()
    }

    #[getter]
    fn uncertainty(&self) -> f64 {
        self.inner.uncertainty()
    }

    fn __repr__(&self) -> String {
        format!(
            "VonMisesEstimate(mean={}, concentration={})",
            self.inner.mean(),
            self.inner.concentration()
        )
    }
}

/// Static acoustic field of incoherent point sources.
#[pyclass(name = "AcousticWorld")]
struct PyAcousticWorld {
    inner: acoustics::AcousticWorld,
}

#[pymethods]
impl PyAcousticWorld {
    /// `sources` is a list of `(x, y, power)` triples.
    #[new]
    fn new(sources: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let sources: Result<Vec<_>, _> = sources
            .into_iter()
            .map(|(x, y, power)| acoustics::SoundSource::new(Vec2::new(x, y), power))
            .collect();
        Ok(PyAcousticWorld {
            inner: acoustics::AcousticWorld::new(sources.map_err(value_err)?)
                .map_err(value_err)?,
        })
    }

    fn intensity_at(&self, x: f64, y: f64) -> f64 {
        self.inner.intensity_at(Vec2::new(x, y))
    }
}

/// Circular six-microphone array.
#[pyclass(name = "MicrophoneArray")]
struct PyMicrophoneArray {
    inner: acoustics::MicrophoneArray,
}

#[pymethods]
impl PyMicrophoneArray {
    #[new]
    fn new(center_x: f64, center_y: f64, radius: f64) -> PyResult<Self> {
        Ok(PyMicrophoneArray {
            inner: acoustics::MicrophoneArray::new(Vec2::new(center_x, center_y), radius)
                .map_err(value_err)?,
        })
    }

    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.positions().iter().map(|p| (p.x, p.y)).collect()
    }

    fn channel_intensities(&self, world: &PyAcousticWorld) -> Vec<f64> {
        acoustics::array_intensities(&world.inner, &self.inner).to_vec()
    }

    fn omni_intensity(&self, world: &PyAcousticWorld) -> f64 {
        acoustics::omni_intensity(&world.inner, &self.inner)
    }
}

/// Run the single-source formation scenario.
#[pyfunction]
#[pyo3(signature = (config, seed, emit_trajectories = false))]
fn run_single(config: &PyScenarioConfig, seed: u64, emit_trajectories: bool) -> PyResult<PyRunResult> {
    let options = sim::RunOptions { emit_trajectories };
    Ok(PyRunResult {
        inner: sim::single::run_single_source_with(&config.inner, seed, options)
            .map_err(value_err)?,
    })
}

/// Run the multi-source exploration scenario.
#[pyfunction]
#[pyo3(signature = (config, seed, emit_trajectories = false))]
fn run_multi(config: &PyScenarioConfig, seed: u64, emit_trajectories: bool) -> PyResult<PyRunResult> {
    let options = sim::RunOptions { emit_trajectories };
    Ok(PyRunResult {
        inner: sim::multi::run_multi_source_with(&config.inner, seed, options)
            .map_err(value_err)?,
    })
}

/// Formation-level DoA from per-agent intensities over ordered edges.
#[pyfunction]
fn formation_doa(
    intensities: Vec<f64>,
    positions: Vec<(f64, f64)>,
    edges: Vec<(usize, usize)>,
) -> PyResult<f64> {
    formation::formation_doa(&intensities, &to_vec2s(&positions), &edges).map_err(value_err)
}

/// Formation-level step length from the two opposite agent pairs.
#[pyfunction]
fn formation_step(intensities: Vec<f64>, step_scale: f64) -> PyResult<f64> {
    let values: [f64; 4] = intensities
        .try_into()
        .map_err(|_| value_err("formation_step takes exactly four intensities"))?;
    Ok(formation::formation_step(&values, step_scale))
}

/// Array-level DoA: direction from the quietest to the loudest channel.
#[pyfunction]
fn array_doa(intensities: Vec<f64>, positions: Vec<(f64, f64)>) -> PyResult<f64> {
    let values: [f64; 6] = intensities
        .try_into()
        .map_err(|_| value_err("array_doa takes exactly six intensities"))?;
    let points: [Vec2; 6] = to_vec2s(&positions)
        .try_into()
        .map_err(|_| value_err("array_doa takes exactly six positions"))?;
    exploration::array_doa(&values, &points).map_err(value_err)
}

/// Array-level step length from the loudest/quietest channel spread.
#[pyfunction]
fn array_step(intensities: Vec<f64>, step_scale: f64) -> PyResult<f64> {
    let values: [f64; 6] = intensities
        .try_into()
        .map_err(|_| value_err("array_step takes exactly six intensities"))?;
    Ok(exploration::array_step(&values, step_scale))
}

/// Seeded draws from the von Mises direction-noise channel.
#[pyfunction]
fn sample_doa_series(seed: u64, count: usize, mean: f64, concentration: f64) -> PyResult<Vec<f64>> {
    use rand::SeedableRng;
    if !(concentration.is_finite() && concentration > 0.0) {
        return Err(value_err("concentration must be > 0"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| estimation::sample_doa(&mut rng, mean, concentration))
        .collect())
}

/// Seeded draws from the Gaussian step-noise channel.
#[pyfunction]
fn sample_step_series(seed: u64, count: usize, mean: f64, variance: f64) -> PyResult<Vec<f64>> {
    use rand::SeedableRng;
    if !(variance.is_finite() && variance > 0.0) {
        return Err(value_err("variance must be > 0"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| estimation::sample_step(&mut rng, mean, variance))
        .collect())
}

/// Normalize an angle to `(-pi, pi]`.
#[pyfunction]
fn normalize_angle(angle: f64) -> f64 {
    estimation::normalize_angle(angle)
}

#[pymodule]
fn soundseek_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyGaussianEstimate>()?;
    m.add_class::<PyVonMisesEstimate>()?;
    m.add_class::<PyAcousticWorld>()?;
    m.add_class::<PyMicrophoneArray>()?;
    m.add_function(wrap_pyfunction!(run_single, m)?)?;
    m.add_function(wrap_pyfunction!(run_multi, m)?)?;
    m.add_function(wrap_pyfunction!(formation_doa, m)?)?;
    m.add_function(wrap_pyfunction!(formation_step, m)?)?;
    m.add_function(wrap_pyfunction!(array_doa, m)?)?;
    m.add_function(wrap_pyfunction!(array_step, m)?)?;
    m.add_function(wrap_pyfunction!(sample_doa_series, m)?)?;
    m.add_function(wrap_pyfunction!(sample_step_series, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_angle, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
