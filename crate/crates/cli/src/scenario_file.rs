//! Versioned TOML scenario documents.
//!
//! Lengths are in meters, speeds in m/s, time in seconds and angles in
//! degrees; positions are north-east-down. A minimal file:
//!
//! ```toml
//! version = 1
//! seed = 7
//!
//! [start]
//! position = [500.0, 2500.0, -500.0]
//! speed = 30.0
//! heading_deg = 0.0
//! flight_path_deg = 0.0
//!
//! [goal]
//! position = [7000.0, 2500.0, -1000.0]
//! speed = 30.0
//! heading_deg = 0.0
//! flight_path_deg = 0.0
//!
//! [[obstacles]]
//! north = 3000.0
//! east = 2600.0
//! radius = 300.0
//! ```
//!
//! Optional sections: `[start_controls]` / `[goal_controls]` (`nx`, `ny`,
//! `nz`, default level flight), `[bounds]` (two-element ranges `speed`,
//! `flight_path_deg`, `nx`, `ny`, `nz`, default reference bounds), `[time]`
//! (`mode = "min_time" | "window" | "fixed"` with `min`/`max` or
//! `duration`), `[random_obstacles]` (`north`, `east` extents, `density`
//! per km², `radius` range; drawn with `seed` and appended to the explicit
//! list) and `[solver]` (any field of [`SolverConfig`]), plus top-level
//! `safe_radius` and `gravity`.

use std::path::Path;

use flatfw_core::costs::Range;
use flatfw_core::{Bounds, LoadControls, Obstacle, Scenario, SolverConfig, TimeMode, UavState, Vec3, GRAVITY};
use serde::{Deserialize, Serialize};

use crate::env::{gen_random_env, EnvSpec, Region};
use crate::scenarios::SAFE_RADIUS;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unsupported scenario schema version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Invalid(#[from] flatfw_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// North, east, down [m].
    pub position: [f64; 3],
    pub speed: f64,
    pub heading_deg: f64,
    #[serde(default)]
    pub flight_path_deg: f64,
}

impl StateSpec {
    pub fn to_state(&self) -> UavState {
        UavState::new(Vec3::from(self.position), self.speed, self.heading_deg.to_radians(), self.flight_path_deg.to_radians())
    }

    pub fn from_state(s: &UavState) -> Self {
        Self {
            position: s.position.into(),
            speed: s.speed,
            heading_deg: s.heading.to_degrees(),
            flight_path_deg: s.flight_path.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self { nx: 0.0, ny: 0.0, nz: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    /// [m/s]
    pub speed: [f64; 2],
    pub flight_path_deg: [f64; 2],
    pub nx: [f64; 2],
    pub ny: [f64; 2],
    pub nz: [f64; 2],
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self::from_bounds(&Bounds::reference())
    }
}

impl BoundsSpec {
    pub fn to_bounds(&self) -> Bounds {
        let r = |v: [f64; 2]| Range::new(v[0], v[1]);
        Bounds {
            speed: r(self.speed),
            flight_path: Range::new(self.flight_path_deg[0].to_radians(), self.flight_path_deg[1].to_radians()),
            nx: r(self.nx),
            ny: r(self.ny),
            nz: r(self.nz),
        }
    }

    pub fn from_bounds(b: &Bounds) -> Self {
        let r = |v: Range| [v.min, v.max];
        Self {
            speed: r(b.speed),
            flight_path_deg: [b.flight_path.min.to_degrees(), b.flight_path.max.to_degrees()],
            nx: r(b.nx),
            ny: r(b.ny),
            nz: r(b.nz),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub north: f64,
    pub east: f64,
    pub radius: f64,
}

/// Obstacle field drawn from the file's seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomObstacles {
    pub north: [f64; 2],
    pub east: [f64; 2],
    /// Obstacles per km².
    pub density: f64,
    pub radius: [f64; 2],
}

impl RandomObstacles {
    pub fn spec(&self) -> EnvSpec {
        EnvSpec {
            region: Region::new((self.north[0], self.north[1]), (self.east[0], self.east[1])),
            density: self.density,
            radius: (self.radius[0], self.radius[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub start: StateSpec,
    #[serde(default)]
    pub start_controls: ControlSpec,
    pub goal: StateSpec,
    #[serde(default)]
    pub goal_controls: ControlSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    /// [m]
    #[serde(default = "default_safe_radius")]
    pub safe_radius: f64,
    /// [m/s²]
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_time")]
    pub time: TimeMode,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_obstacles: Option<RandomObstacles>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_safe_radius() -> f64 {
    SAFE_RADIUS
}

fn default_gravity() -> f64 {
    GRAVITY
}

fn default_time() -> TimeMode {
    TimeMode::MinTime
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = toml::from_str(text)?;
        if header.version != SCHEMA_VERSION {
            return Err(ScenarioFileError::Version(header.version));
        }
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioFileError> {
        Ok(toml::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioFileError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })
    }

    /// Document describing `scenario` with explicit obstacles.
    pub fn from_scenario(scenario: &Scenario, config: &SolverConfig, seed: u64) -> Self {
        let controls = |u: &LoadControls| ControlSpec { nx: u.nx, ny: u.ny, nz: u.nz };
        Self {
            version: SCHEMA_VERSION,
            seed,
            start: StateSpec::from_state(&scenario.start),
            start_controls: controls(&scenario.start_controls),
            goal: StateSpec::from_state(&scenario.goal),
            goal_controls: controls(&scenario.goal_controls),
            bounds: BoundsSpec::from_bounds(&scenario.bounds),
            safe_radius: scenario.safe_radius,
            gravity: scenario.gravity,
            time: scenario.time_mode,
            obstacles: scenario
                .obstacles
                .iter()
                .map(|o| ObstacleSpec { north: o.center.x, east: o.center.y, radius: o.radius })
                .collect(),
            random_obstacles: None,
            solver: config.clone(),
        }
    }

    /// Scenario in SI units and radians, validated together with the solver
    /// settings.
    pub fn build(&self) -> Result<(Scenario, SolverConfig), ScenarioFileError> {
        let mut obstacles: Vec<Obstacle> = self.obstacles.iter().map(|o| Obstacle::new(o.north, o.east, o.radius)).collect();
        if let Some(r) = &self.random_obstacles {
            let spec = r.spec();
            if !(spec.density >= 0.0 && spec.radius.0 > 0.0 && spec.radius.0 <= spec.radius.1) {
                return Err(flatfw_core::Error::InvalidScenario("random_obstacles needs density >= 0 and 0 < radius[0] <= radius[1]".into()).into());
            }
            obstacles.extend(gen_random_env(&spec, self.seed));
        }
        let c = |u: &ControlSpec| LoadControls::new(u.nx, u.ny, u.nz);
        let scenario = Scenario {
            start: self.start.to_state(),
            start_controls: c(&self.start_controls),
            goal: self.goal.to_state(),
            goal_controls: c(&self.goal_controls),
            bounds: self.bounds.to_bounds(),
            obstacles,
            safe_radius: self.safe_radius,
            time_mode: self.time,
            gravity: self.gravity,
        };
        scenario.validate()?;
        self.solver.validate()?;
        Ok((scenario, self.solver.clone()))
    }
}
