//! Scenario configuration: a TOML key-value schema with per-scenario
//! defaults, fail-fast validation, and round-trippable serialization so an
//! effective-config echo reproduces the exact same run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::SoundSource;
use crate::estimation::NoiseModel;
use crate::exploration::ExplorationParams;
use crate::formation::GainSet;
use crate::hybrid::SwitchThresholds;
use crate::vec2::Vec2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config key `{key}`: {message}")]
    Domain { key: String, message: String },
}

fn domain(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Domain {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Single,
    Multi,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioKind::Single => write!(f, "single"),
            ScenarioKind::Multi => write!(f, "multi"),
        }
    }
}

/// One explicit source entry. `power` falls back to
/// `acoustics.source_power` when omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub x: f64,
    pub y: f64,
    pub power: Option<f64>,
}

/// Random target placement: `count` targets drawn uniformly from an
/// axis-aligned square of side `area_side` centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnSpec {
    pub count: usize,
    pub area_side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub step_variance: f64,
    pub doa_concentration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub leader_kp: f64,
    pub leader_kd: f64,
    pub follower_kp: f64,
    pub follower_kd: f64,
    pub cruise_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsSection {
    pub step_variance_max: f64,
    pub doa_uncertainty_max: f64,
    pub settle_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticsSection {
    pub source_power: f64,
    pub array_radius: f64,
}

/// Formation topology knobs. Agent ids are 1-based in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSection {
    pub step_scale: f64,
    pub leaders: Vec<usize>,
    pub doa_edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSection {
    pub step_scale: f64,
    pub switch_time: f64,
    pub velocity_decay: f64,
    pub escape_gain: f64,
    pub area_growth: f64,
    pub detection_step_threshold: f64,
    pub scoring_radius: f64,
    pub initial_area_radius: f64,
}

/// Fully resolved scenario configuration. Every field is concrete, so the
/// serialized form is a complete record of the run and reloading it yields
/// an identical configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub runs: u32,
    pub duration_s: f64,
    pub dt_s: f64,
    /// Step stride between trajectory samples when trajectories are emitted.
    pub trajectory_decimation: u32,
    /// Initial agent positions, `[x, y]` per agent.
    pub agents: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<SourceSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spawn: Option<SpawnSpec>,
    pub noise: NoiseSection,
    pub gains: GainsSection,
    pub thresholds: ThresholdsSection,
    pub acoustics: AcousticsSection,
    pub formation: FormationSection,
    pub exploration: ExplorationSection,
}

/// What the user actually wrote; everything optional except the scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioKind,
    seed: Option<u64>,
    runs: Option<u32>,
    duration_s: Option<f64>,
    dt_s: Option<f64>,
    trajectory_decimation: Option<u32>,
    agents: Option<Vec<[f64; 2]>>,
    sources: Option<Vec<SourceSpec>>,
    spawn: Option<SpawnSpec>,
    noise: Option<NoiseSection>,
    gains: Option<GainsSection>,
    thresholds: Option<ThresholdsSection>,
    acoustics: Option<AcousticsSection>,
    formation: Option<FormationSection>,
    exploration: Option<ExplorationSection>,
}

fn default_gains() -> GainsSection {
    GainsSection {
        leader_kp: 10.0,
        leader_kd: 10.0,
        follower_kp: 10.0,
        follower_kd: 10.0,
        cruise_speed: 0.2,
    }
}

fn default_thresholds() -> ThresholdsSection {
    ThresholdsSection {
        step_variance_max: 1e-4,
        doa_uncertainty_max: 1e-4,
        settle_speed: 1e-3,
    }
}

fn default_acoustics() -> AcousticsSection {
    AcousticsSection {
        source_power: 1e8,
        // Calibrated together with exploration.detection_step_threshold so
        // that multi-source detections fire at ~1.57 m, just inside the
        // scoring radius, while keeping exploration hops short enough to
        // reach several sources within a run.
        array_radius: 0.0125,
    }
}

fn default_formation() -> FormationSection {
    FormationSection {
        step_scale: 1e6,
        leaders: vec![1, 3],
        doa_edges: vec![[2, 1], [4, 1]],
    }
}

fn default_exploration() -> ExplorationSection {
    ExplorationSection {
        step_scale: 4.0 * 1e13f64.sqrt(),
        switch_time: 1.0,
        velocity_decay: 0.9,
        escape_gain: 1.1,
        area_growth: 1.2,
        detection_step_threshold: 0.125,
        scoring_radius: 1.5,
        initial_area_radius: 3.1,
    }
}

impl ScenarioConfig {
    /// Single-source defaults: the unit-square formation seeking one source
    /// at (30, 40).
    pub fn default_single() -> Self {
        ScenarioConfig {
            scenario: ScenarioKind::Single,
            seed: 0,
            runs: 1,
            duration_s: 2e4,
            dt_s: 1e-3,
            trajectory_decimation: 100,
            agents: vec![[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]],
            sources: Some(vec![SourceSpec {
                x: 30.0,
                y: 40.0,
                power: Some(1e8),
            }]),
            spawn: None,
            noise: NoiseSection {
                step_variance: 0.1,
                doa_concentration: 1.0,
            },
            gains: default_gains(),
            thresholds: default_thresholds(),
            acoustics: default_acoustics(),
            formation: default_formation(),
            exploration: default_exploration(),
        }
    }

    /// Multi-source defaults: four agents on the corners of a 60 m square
    /// searching for three randomly spawned targets for 1000 s.
    pub fn default_multi() -> Self {
        ScenarioConfig {
            scenario: ScenarioKind::Multi,
            seed: 0,
            runs: 1,
            duration_s: 1e3,
            dt_s: 1e-3,
            trajectory_decimation: 100,
            agents: vec![[30.0, 30.0], [30.0, -30.0], [-30.0, -30.0], [-30.0, 30.0]],
            sources: None,
            spawn: Some(SpawnSpec {
                count: 3,
                area_side: 50.0,
            }),
            noise: NoiseSection {
                step_variance: 0.01,
                doa_concentration: 100.0,
            },
            gains: default_gains(),
            thresholds: default_thresholds(),
            acoustics: default_acoustics(),
            formation: default_formation(),
            exploration: default_exploration(),
        }
    }

    pub fn defaults_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Single => Self::default_single(),
            ScenarioKind::Multi => Self::default_multi(),
        }
    }

    /// Parse a config from TOML text, apply scenario defaults for anything
    /// omitted, and validate every field.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let base = Self::defaults_for(raw.scenario);
        let explicit_sources = raw.sources.is_some();
        let explicit_spawn = raw.spawn.is_some();
        let mut cfg = ScenarioConfig {
            scenario: raw.scenario,
            seed: raw.seed.unwrap_or(base.seed),
            runs: raw.runs.unwrap_or(base.runs),
            duration_s: raw.duration_s.unwrap_or(base.duration_s),
            dt_s: raw.dt_s.unwrap_or(base.dt_s),
            trajectory_decimation: raw
                .trajectory_decimation
                .unwrap_or(base.trajectory_decimation),
            agents: raw.agents.unwrap_or(base.agents),
            sources: raw.sources.or(base.sources),
            spawn: raw.spawn.or(base.spawn),
            noise: raw.noise.unwrap_or(base.noise),
            gains: raw.gains.unwrap_or(base.gains),
            thresholds: raw.thresholds.unwrap_or(base.thresholds),
            acoustics: raw.acoustics.unwrap_or(base.acoustics),
            formation: raw.formation.unwrap_or(base.formation),
            exploration: raw.exploration.unwrap_or(base.exploration),
        };
        // Writing one placement style overrides the default of the other.
        if explicit_sources && !explicit_spawn {
            cfg.spawn = None;
        }
        if explicit_spawn && !explicit_sources {
            cfg.sources = None;
        }
        cfg.fill_source_powers();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn fill_source_powers(&mut self) {
        let power = self.acoustics.source_power;
        if let Some(sources) = &mut self.sources {
            for s in sources {
                if s.power.is_none() {
                    s.power = Some(power);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(domain(key, format!("must be > 0 (got {v})")))
            }
        };
        positive("duration_s", self.duration_s)?;
        positive("dt_s", self.dt_s)?;
        if self.runs == 0 {
            return Err(domain("runs", "must be >= 1"));
        }
        if self.trajectory_decimation == 0 {
            return Err(domain("trajectory_decimation", "must be >= 1"));
        }
        positive("noise.step_variance", self.noise.step_variance)?;
        positive("noise.doa_concentration", self.noise.doa_concentration)?;
        positive("gains.leader_kp", self.gains.leader_kp)?;
        positive("gains.leader_kd", self.gains.leader_kd)?;
        positive("gains.follower_kp", self.gains.follower_kp)?;
        positive("gains.follower_kd", self.gains.follower_kd)?;
        positive("gains.cruise_speed", self.gains.cruise_speed)?;
        positive("thresholds.step_variance_max", self.thresholds.step_variance_max)?;
        positive("thresholds.doa_uncertainty_max", self.thresholds.doa_uncertainty_max)?;
        positive("thresholds.settle_speed", self.thresholds.settle_speed)?;
        positive("acoustics.source_power", self.acoustics.source_power)?;
        positive("acoustics.array_radius", self.acoustics.array_radius)?;
        positive("formation.step_scale", self.formation.step_scale)?;
        positive("exploration.step_scale", self.exploration.step_scale)?;
        positive("exploration.switch_time", self.exploration.switch_time)?;
        if !(self.exploration.velocity_decay > 0.0 && self.exploration.velocity_decay < 1.0) {
            return Err(domain(
                "exploration.velocity_decay",
                format!(
                    "must satisfy 0 < velocity_decay < 1 (got {})",
                    self.exploration.velocity_decay
                ),
            ));
        }
        if !(self.exploration.escape_gain >= 1.0 && self.exploration.escape_gain.is_finite()) {
            return Err(domain(
                "exploration.escape_gain",
                format!("must be >= 1 (got {})", self.exploration.escape_gain),
            ));
        }
        if !(self.exploration.area_growth > 1.0 && self.exploration.area_growth.is_finite()) {
            return Err(domain(
                "exploration.area_growth",
                format!("must be > 1 (got {})", self.exploration.area_growth),
            ));
        }
        positive(
            "exploration.detection_step_threshold",
            self.exploration.detection_step_threshold,
        )?;
        positive("exploration.scoring_radius", self.exploration.scoring_radius)?;
        positive(
            "exploration.initial_area_radius",
            self.exploration.initial_area_radius,
        )?;

        for (i, a) in self.agents.iter().enumerate() {
            if !(a[0].is_finite() && a[1].is_finite()) {
                return Err(domain("agents", format!("agent {} must be finite", i + 1)));
            }
        }
        if let Some(sources) = &self.sources {
            if sources.is_empty() {
                return Err(domain("sources", "must list at least one source"));
            }
            for (i, s) in sources.iter().enumerate() {
                if !(s.x.is_finite() && s.y.is_finite()) {
                    return Err(domain("sources", format!("source {} must be finite", i + 1)));
                }
                if let Some(p) = s.power {
                    positive("sources.power", p)?;
                }
            }
        }
        if let Some(spawn) = &self.spawn {
            if spawn.count == 0 {
                return Err(domain("spawn.count", "must be >= 1"));
            }
            positive("spawn.area_side", spawn.area_side)?;
        }

        match self.scenario {
            ScenarioKind::Single => self.validate_single(),
            ScenarioKind::Multi => self.validate_multi(),
        }
    }

    fn validate_single(&self) -> Result<(), ConfigError> {
        if self.agents.len() != 4 {
            return Err(domain(
                "agents",
                format!(
                    "single scenario uses the four-agent formation (got {} agents)",
                    self.agents.len()
                ),
            ));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if self.agents[i] == self.agents[j] {
                    return Err(domain("agents", "formation agents must be distinct"));
                }
            }
        }
        if self.spawn.is_some() {
            return Err(domain(
                "spawn",
                "single scenario requires an explicit source, not random spawn",
            ));
        }
        let sources = self
            .sources
            .as_ref()
            .ok_or_else(|| domain("sources", "single scenario requires one source"))?;
        if sources.len() != 1 {
            return Err(domain(
                "sources",
                format!("single scenario uses exactly one source (got {})", sources.len()),
            ));
        }
        if self.formation.leaders.len() < 2 {
            return Err(domain("formation.leaders", "need at least two leaders"));
        }
        for &l in &self.formation.leaders {
            if l == 0 || l > 4 {
                return Err(domain(
                    "formation.leaders",
                    format!("agent ids are 1..=4 (got {l})"),
                ));
            }
        }
        if self.formation.doa_edges.is_empty() {
            return Err(domain("formation.doa_edges", "need at least one edge"));
        }
        let layout = self.agent_positions();
        let mut bearings = Vec::new();
        for &[from, to] in &self.formation.doa_edges {
            if from == 0 || from > 4 || to == 0 || to > 4 || from == to {
                return Err(domain(
                    "formation.doa_edges",
                    format!("edges are ordered pairs of distinct agent ids 1..=4 (got [{from}, {to}])"),
                ));
            }
            let b = crate::formation::bearing(layout[from - 1], layout[to - 1])
                .map_err(|e| domain("formation.doa_edges", e.to_string()))?;
            bearings.push(b);
        }
        let spans_plane = bearings.iter().enumerate().any(|(i, a)| {
            bearings[i + 1..]
                .iter()
                .any(|b| (a.x * b.y - a.y * b.x).abs() > 1e-9)
        });
        if !spans_plane {
            return Err(domain(
                "formation.doa_edges",
                "edge bearings must span the plane",
            ));
        }
        Ok(())
    }

    fn validate_multi(&self) -> Result<(), ConfigError> {
        if self.agents.is_empty() {
            return Err(domain("agents", "multi scenario needs at least one agent"));
        }
        if self.sources.is_none() && self.spawn.is_none() {
            return Err(domain(
                "sources",
                "multi scenario needs explicit sources or a spawn spec",
            ));
        }
        if self.sources.is_some() && self.spawn.is_some() {
            return Err(domain(
                "sources",
                "give either explicit sources or a spawn spec, not both",
            ));
        }
        Ok(())
    }

    pub fn agent_positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| Vec2::new(a[0], a[1])).collect()
    }

    /// 0-based leader indices.
    pub fn leader_indices(&self) -> Vec<usize> {
        self.formation.leaders.iter().map(|&l| l - 1).collect()
    }

    /// 0-based ordered DoA edges.
    pub fn doa_edge_indices(&self) -> Vec<(usize, usize)> {
        self.formation
            .doa_edges
            .iter()
            .map(|&[from, to]| (from - 1, to - 1))
            .collect()
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel::new(self.noise.step_variance, self.noise.doa_concentration)
            .expect("validated configuration")
    }

    pub fn switch_thresholds(&self) -> SwitchThresholds {
        SwitchThresholds::new(
            self.thresholds.step_variance_max,
            self.thresholds.doa_uncertainty_max,
            self.thresholds.settle_speed,
        )
        .expect("validated configuration")
    }

    pub fn gain_set(&self) -> GainSet {
        GainSet {
            leader_kp: self.gains.leader_kp,
            leader_kd: self.gains.leader_kd,
            follower_kp: self.gains.follower_kp,
            follower_kd: self.gains.follower_kd,
            cruise_speed: self.gains.cruise_speed,
            step_scale: self.formation.step_scale,
        }
        .validated()
        .expect("validated configuration")
    }

    pub fn exploration_params(&self) -> ExplorationParams {
        ExplorationParams {
            step_scale: self.exploration.step_scale,
            switch_time: self.exploration.switch_time,
            velocity_decay: self.exploration.velocity_decay,
            escape_gain: self.exploration.escape_gain,
            area_growth: self.exploration.area_growth,
            detection_step_threshold: self.exploration.detection_step_threshold,
            scoring_radius: self.exploration.scoring_radius,
            initial_area_radius: self.exploration.initial_area_radius,
        }
        .validated()
        .expect("validated configuration")
    }

    /// Materialize the source list. Random spawns consume draws from `rng`
    /// (two uniforms per target, in order), so placement is part of the
    /// run's deterministic stream.
    pub fn resolve_sources<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<SoundSource> {
        if let Some(sources) = &self.sources {
            sources
                .iter()
                .map(|s| {
                    SoundSource::new(
                        Vec2::new(s.x, s.y),
                        s.power.unwrap_or(self.acoustics.source_power),
                    )
                    .expect("validated configuration")
                })
                .collect()
        } else {
            let spawn = self.spawn.as_ref().expect("validated configuration");
            let half = spawn.area_side / 2.0;
            (0..spawn.count)
                .map(|_| {
                    let x = -half + rng.random::<f64>() * spawn.area_side;
                    let y = -half + rng.random::<f64>() * spawn.area_side;
                    SoundSource::new(Vec2::new(x, y), self.acoustics.source_power)
                        .expect("validated configuration")
                })
                .collect()
        }
    }
}

/// Read and fully validate a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}
