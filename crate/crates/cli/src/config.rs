//! JSON scenario files.
//!
//! Every key is optional; unknown keys are rejected. Defaults: `v_max` 0.3 m/s,
//! `dt` 750 s, `horizon` 2000 steps, `n` 49 samples, `c` 19 controls,
//! `gamma` 2, `arrival_eps` `1.5 * v_max * dt`, and a 4x4 gyre lattice with
//! 1 m/s peak flow and 50 km cells.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use streamplan::{
    load_grid, AnalyticField, DiscScheme, Domain, FlowError, FlowField, IntegratorParams, Vec2,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Validation(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Bounds are `[x_min, x_max, y_min, y_max]`.
    Uniform {
        u: f64,
        v: f64,
        domain: [f64; 4],
    },
    LinearSaddle {
        k: f64,
        domain: [f64; 4],
    },
    GyreLattice {
        v_peak: f64,
        cell_size: f64,
        n_x: usize,
        n_y: usize,
    },
    /// FLOWGRID file; relative paths resolve against the config file.
    Grid {
        path: PathBuf,
    },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::GyreLattice {
            v_peak: 1.0,
            cell_size: 50_000.0,
            n_x: 4,
            n_y: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineSpec {
    Polar {
        n_r: usize,
        n_theta: usize,
    },
    Square {
        n: usize,
    },
    /// About `c * c` samples.
    EqualResolution,
    /// Exactly `c` samples where possible.
    EqualBudget,
}

impl BaselineSpec {
    pub fn scheme(self, c: usize) -> DiscScheme {
        match self {
            BaselineSpec::Polar { n_r, n_theta } => DiscScheme::PolarGrid { n_r, n_theta },
            BaselineSpec::Square { n } => DiscScheme::SquareGridClipped { n },
            BaselineSpec::EqualResolution => DiscScheme::equal_resolution(c),
            BaselineSpec::EqualBudget => DiscScheme::equal_budget(c),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    field: Option<FieldSpec>,
    start: Option<[f64; 2]>,
    goal: Option<[f64; 2]>,
    v_max: Option<f64>,
    dt: Option<f64>,
    horizon: Option<usize>,
    n: Option<usize>,
    c: Option<usize>,
    seed: Option<u64>,
    gamma: Option<f64>,
    arrival_eps: Option<f64>,
    stall_speed_frac: Option<f64>,
    hessian_h: Option<f64>,
    baseline: Option<BaselineSpec>,
}

/// A validated scenario description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub field: FieldSpec,
    /// `None` means "an eighth of the way in from the lower-left corner".
    pub start: Option<Vec2>,
    /// `None` means "an eighth of the way in from the upper-right corner".
    pub goal: Option<Vec2>,
    pub v_max: f64,
    pub dt: f64,
    pub horizon: usize,
    pub n: usize,
    pub c: usize,
    pub seed: u64,
    pub gamma: f64,
    pub arrival_eps: f64,
    pub stall_speed_frac: f64,
    /// `None` uses the field's own finite-difference step.
    pub hessian_h: Option<f64>,
    pub baseline: BaselineSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let v_max = 0.3;
        let dt = IntegratorParams::DEFAULT_DT;
        ScenarioConfig {
            field: FieldSpec::default(),
            start: None,
            goal: None,
            v_max,
            dt,
            horizon: IntegratorParams::DEFAULT_HORIZON,
            n: 49,
            c: 19,
            seed: 0,
            gamma: 2.0,
            arrival_eps: 1.5 * dt * v_max,
            stall_speed_frac: IntegratorParams::DEFAULT_STALL_SPEED_FRAC,
            hessian_h: None,
            baseline: BaselineSpec::EqualResolution,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

fn point(name: &str, p: [f64; 2]) -> Result<Vec2, ConfigError> {
    let v = Vec2::new(p[0], p[1]);
    if v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("{name} must be finite"))
    }
}

fn domain(bounds: [f64; 4]) -> Result<Domain, ConfigError> {
    let [x0, x1, y0, y1] = bounds;
    Domain::new(x0, x1, y0, y1).ok_or_else(|| {
        ConfigError::Validation(format!(
            "domain {bounds:?} needs finite bounds with min < max"
        ))
    })
}

/// Parses and validates a JSON scenario.
pub fn parse_config<R: Read>(source: R) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig =
        serde_json::from_reader(source).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let d = ScenarioConfig::default();
    let v_max = positive("v_max", raw.v_max.unwrap_or(d.v_max))?;
    let dt = positive("dt", raw.dt.unwrap_or(d.dt))?;
    let cfg = ScenarioConfig {
        field: raw.field.unwrap_or_default(),
        start: raw.start.map(|p| point("start", p)).transpose()?,
        goal: raw.goal.map(|p| point("goal", p)).transpose()?,
        v_max,
        dt,
        horizon: raw.horizon.unwrap_or(d.horizon),
        n: raw.n.unwrap_or(d.n),
        c: raw.c.unwrap_or(d.c),
        seed: raw.seed.unwrap_or(d.seed),
        gamma: positive("gamma", raw.gamma.unwrap_or(d.gamma))?,
        arrival_eps: positive("arrival_eps", raw.arrival_eps.unwrap_or(1.5 * dt * v_max))?,
        stall_speed_frac: raw.stall_speed_frac.unwrap_or(d.stall_speed_frac),
        hessian_h: raw
            .hessian_h
            .map(|h| positive("hessian_h", h))
            .transpose()?,
        baseline: raw.baseline.unwrap_or(d.baseline),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file and resolves a relative grid path against its directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let file = File::open(path).map_err(|e| ConfigError::Io {
        path: path.to_owned(),
        msg: e.to_string(),
    })?;
    let mut cfg = parse_config(BufReader::new(file))?;
    if let FieldSpec::Grid { path: grid } = &mut cfg.field {
        if grid.is_relative() {
            if let Some(dir) = path.parent() {
                *grid = dir.join(&*grid);
            }
        }
    }
    Ok(cfg)
}

impl ScenarioConfig {
    /// Checks the numeric ranges that do not need the field itself.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon < 1 {
            return invalid("horizon must be at least 1");
        }
        if self.c < 2 {
            return invalid(format!("c must be at least 2, got {}", self.c));
        }
        if !(self.stall_speed_frac > 0.0 && self.stall_speed_frac < 1.0) {
            return invalid(format!(
                "stall_speed_frac must lie in (0, 1), got {}",
                self.stall_speed_frac
            ));
        }
        match self.baseline.scheme(self.c) {
            DiscScheme::PolarGrid { n_r, n_theta } if n_r == 0 || n_theta == 0 => {
                return invalid("polar baseline needs n_r >= 1 and n_theta >= 1")
            }
            DiscScheme::SquareGridClipped { n } if n < 2 => {
                return invalid("square baseline needs n >= 2")
            }
            _ => {}
        }
        if let FieldSpec::Uniform { domain: b, .. } | FieldSpec::LinearSaddle { domain: b, .. } =
            self.field
        {
            domain(b)?;
        }
        Ok(())
    }

    /// Integrator settings for `field`.
    pub fn params(&self, field: &dyn FlowField) -> IntegratorParams {
        IntegratorParams {
            v_max: self.v_max,
            dt: self.dt,
            horizon: self.horizon,
            arrival_eps: self.arrival_eps,
            stall_speed_frac: self.stall_speed_frac,
            hessian_h: self
                .hessian_h
                .unwrap_or_else(|| field.default_hessian_step()),
        }
    }

    pub fn baseline_scheme(&self) -> DiscScheme {
        self.baseline.scheme(self.c)
    }
}

/// Builds the flow field a [`FieldSpec`] describes.
pub fn build_field(spec: &FieldSpec) -> Result<Box<dyn FlowField>, ConfigError> {
    Ok(match spec {
        FieldSpec::Uniform { u, v, domain: b } => {
            Box::new(AnalyticField::uniform(*u, *v, domain(*b)?)?)
        }
        FieldSpec::LinearSaddle { k, domain: b } => {
            Box::new(AnalyticField::linear_saddle(*k, domain(*b)?)?)
        }
        FieldSpec::GyreLattice {
            v_peak,
            cell_size,
            n_x,
            n_y,
        } => Box::new(AnalyticField::gyre_lattice(
            *v_peak, *cell_size, *n_x, *n_y,
        )?),
        FieldSpec::Grid { path } => {
            let file = File::open(path).map_err(|e| ConfigError::Io {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            Box::new(load_grid(BufReader::new(file))?)
        }
    })
}

/// A config together with its materialized field and endpoints.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub field: Box<dyn FlowField>,
    pub start: Vec2,
    pub goal: Vec2,
    pub params: IntegratorParams,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("config", &self.config)
            .field("start", &self.start)
            .field("goal", &self.goal)
            .finish_non_exhaustive()
    }
}

impl Scenario {
    /// Loads the field and checks that start and goal lie in free space.
    pub fn new(config: ScenarioConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let field = build_field(&config.field)?;
        let d = field.domain();
        let start = config.start.unwrap_or(Vec2::new(
            d.x_min + d.width() / 8.0,
            d.y_min + d.height() / 16.0,
        ));
        let goal = config.goal.unwrap_or(Vec2::new(
            d.x_max - d.width() / 8.0,
            d.y_max - d.height() / 16.0,
        ));
        for (name, p) in [("start", start), ("goal", goal)] {
            if !field.is_free(p) {
                return invalid(format!(
                    "{name} ({}, {}) is outside the domain or masked",
                    p.x, p.y
                ));
            }
        }
        let params = config.params(field.as_ref());
        params
            .validate()
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        Ok(Scenario {
            config,
            field,
            start,
            goal,
            params,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::new(load_config(path)?)
    }
}
