//! Experiment configuration: one TOML document plus `key.path=value` overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use twopoint_core::affine::AffineMap;
use twopoint_core::analytic::{Direction, PlaneWaveSpec};
use twopoint_core::current::CurrentSpec;
use twopoint_core::forge::{Pde1D, PdeKind};
use twopoint_core::grid::{FieldState, GridSpec};
use twopoint_core::laws::{
    law_inversion, law_local_energy, law_rotation, law_translation, TimeStencil, TwoPointLawSpec,
};
use twopoint_core::maxwell::{cfl_max_dt, Stepper};

/// Environment variable that replaces `output.dir`.
pub const OUT_DIR_ENV: &str = "TWOPOINT_OUT_DIR";

/// Invalid or inconsistent configuration (exit status 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub source: CurrentSpec,
    #[serde(default)]
    pub laws: Vec<LawConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    pub refinement: Option<RefinementConfig>,
    pub discover: Option<DiscoverConfig>,
    pub forge: Option<ForgeConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 3],
    pub lengths: Option<[f64; 3]>,
    pub spacing: Option<[f64; 3]>,
}

impl GridConfig {
    pub fn build(&self) -> anyhow::Result<GridSpec> {
        let g = match (self.lengths, self.spacing) {
            (Some(l), None) => GridSpec::with_lengths(self.dims, l)?,
            (None, Some(h)) => GridSpec::new(self.dims, h)?,
            (None, None) => GridSpec::with_lengths(self.dims, [1.0; 3])?,
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "give either grid.lengths or grid.spacing, not both",
                ))
            }
        };
        Ok(g)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub stepper: Stepper,
    pub dt: Option<f64>,
    pub cfl_fraction: Option<f64>,
    pub nsteps: Option<usize>,
    pub t_end: Option<f64>,
    /// Sample the balance every `stride` steps.
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "yes")]
    pub pointwise: bool,
    #[serde(default)]
    pub stencil: StencilName,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stepper: Stepper::default(),
            dt: None,
            cfl_fraction: None,
            nsteps: None,
            t_end: None,
            stride: 1,
            pointwise: true,
            stencil: StencilName::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilName {
    #[default]
    Centered2,
    Centered4,
}

impl From<StencilName> for TimeStencil {
    fn from(s: StencilName) -> Self {
        match s {
            StencilName::Centered2 => TimeStencil::Centered2,
            StencilName::Centered4 => TimeStencil::Centered4,
        }
    }
}

impl RunConfig {
    /// Step size on `grid`: explicit `dt`, else `cfl_fraction` of the stability limit (default 0.25).
    pub fn step(&self, grid: &GridSpec) -> anyhow::Result<f64> {
        match (self.dt, self.cfl_fraction) {
            (Some(_), Some(_)) => Err(config_err(
                "give either run.dt or run.cfl_fraction, not both",
            )),
            (Some(dt), None) => Ok(dt),
            (None, f) => {
                let f = f.unwrap_or(0.25);
                if !(f > 0.0 && f <= 1.0) {
                    return Err(config_err(format!(
                        "run.cfl_fraction must be in (0, 1], got {f}"
                    )));
                }
                Ok(f * cfl_max_dt(grid, self.stepper))
            }
        }
    }

    /// `(dt, nsteps)` with `t_end` rounded to a whole number of steps.
    pub fn schedule(&self, grid: &GridSpec) -> anyhow::Result<(f64, usize)> {
        let dt = self.step(grid)?;
        let n = match (self.nsteps, self.t_end) {
            (Some(_), Some(_)) => {
                return Err(config_err("give either run.nsteps or run.t_end, not both"))
            }
            (Some(n), None) => n,
            (None, Some(t)) => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(config_err(format!("run.t_end must be positive, got {t}")));
                }
                (t / dt * (1.0 - 1e-12)).ceil() as usize
            }
            (None, None) => return Err(config_err("run.nsteps or run.t_end is required")),
        };
        if n == 0 {
            return Err(config_err("the run needs at least one step"));
        }
        // shrink dt so t_end is hit exactly
        let dt = match self.t_end {
            Some(t) if self.nsteps.is_none() => t / n as f64,
            _ => dt,
        };
        let stride = self.stride.max(1);
        if n % stride != 0 {
            return Err(config_err(format!(
                "run.stride = {stride} does not divide {n} steps"
            )));
        }
        Ok((dt, n))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Zero,
    Planewave {
        #[serde(default = "unit")]
        amplitude: f64,
        mode: u32,
        #[serde(default)]
        direction: Direction,
    },
    Standingwave {
        #[serde(default = "unit")]
        amplitude: f64,
        mode: u32,
    },
    Random {
        seed: Option<u64>,
        #[serde(default = "one_u32")]
        kmax: u32,
    },
}

fn unit() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

impl InitialConfig {
    pub fn build(&self, grid: &GridSpec) -> anyhow::Result<FieldState> {
        use twopoint_core::analytic::{plane_wave, standing_wave};
        Ok(match self {
            InitialConfig::Zero => FieldState::zeros(*grid, 0.0),
            InitialConfig::Planewave {
                amplitude,
                mode,
                direction,
            } => {
                let mut s = PlaneWaveSpec::new(*amplitude, *mode);
                s.direction = *direction;
                plane_wave(&s, grid, 0.0)?
            }
            InitialConfig::Standingwave { amplitude, mode } => {
                standing_wave(&PlaneWaveSpec::new(*amplitude, *mode), grid, 0.0)?
            }
            InitialConfig::Random { seed, kmax } => {
                let seed =
                    seed.ok_or_else(|| config_err("initial.seed is required for random data"))?;
                twopoint_core::random::random_state(grid, *kmax, seed)?
            }
        })
    }
}

// `flatten` and `deny_unknown_fields` do not combine in serde
#[derive(Debug, Clone, Deserialize)]
pub struct LawConfig {
    #[serde(flatten)]
    pub kind: LawKind,
    /// Largest accepted `max |defect| / (‖E‖² + ‖B‖²)`.
    #[serde(default = "defect_tol")]
    pub tolerance: f64,
    /// Largest accepted `max |r| / r_scale` when pointwise residuals are on.
    #[serde(default = "residual_tol")]
    pub residual_tolerance: f64,
}

fn defect_tol() -> f64 {
    1e-7
}

fn residual_tol() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawKind {
    LocalEnergy,
    Inversion,
    Rotation {
        axis: usize,
        quarter_turns: i64,
    },
    Translation {
        #[serde(default)]
        nodes: [i64; 3],
        #[serde(default)]
        steps: usize,
    },
    Custom {
        file: PathBuf,
    },
}

impl LawKind {
    /// Relative law-file paths resolve against `base`.
    pub fn build(&self, grid: &GridSpec, base: &Path) -> anyhow::Result<TwoPointLawSpec> {
        Ok(match self {
            LawKind::LocalEnergy => law_local_energy(),
            LawKind::Inversion => law_inversion(),
            LawKind::Rotation {
                axis,
                quarter_turns,
            } => law_rotation(&AffineMap::quarter_turn(*axis, *quarter_turns, grid)?)?,
            LawKind::Translation { nodes, steps } => {
                let mut law = law_translation(grid, *nodes, *steps);
                law.name = format!(
                    "translation_{}_{}_{}_{}",
                    nodes[0], nodes[1], nodes[2], steps
                );
                law
            }
            LawKind::Custom { file } => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    base.join(file)
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    config_err(format!("cannot read law file {}: {e}", path.display()))
                })?;
                TwoPointLawSpec::from_toml(&text, grid)?
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            LawKind::LocalEnergy => "local-energy".into(),
            LawKind::Inversion => "inversion".into(),
            LawKind::Rotation {
                axis,
                quarter_turns,
            } => format!("rotation_{axis}_{quarter_turns}"),
            LawKind::Translation { nodes, steps } => {
                format!(
                    "translation_{}_{}_{}_{}",
                    nodes[0], nodes[1], nodes[2], steps
                )
            }
            LawKind::Custom { file } => {
                let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned());
                format!("custom_{}", stem.unwrap_or_default())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("twopoint-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ladder {
    /// Spacing and step refined together.
    #[default]
    Joint,
    /// Step refined on a fixed grid.
    Dt,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    pub levels: usize,
    #[serde(default = "two")]
    pub factor: usize,
    #[serde(default)]
    pub ladder: Ladder,
    pub min_order: f64,
    pub max_order: Option<f64>,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapConfig {
    Identity,
    Inversion,
    Rotation { axis: usize, quarter_turns: i64 },
    Translation { nodes: [i64; 3] },
    Affine { alpha: [f64; 9], beta: [f64; 3] },
}

impl MapConfig {
    pub fn build(&self, grid: &GridSpec) -> anyhow::Result<AffineMap> {
        Ok(match self {
            MapConfig::Identity => AffineMap::identity(),
            MapConfig::Inversion => AffineMap::inversion(),
            MapConfig::Rotation {
                axis,
                quarter_turns,
            } => AffineMap::quarter_turn(*axis, *quarter_turns, grid)?,
            MapConfig::Translation { nodes } => AffineMap::node_translation(grid, *nodes),
            MapConfig::Affine { alpha, beta } => {
                let a = std::array::from_fn(|r| std::array::from_fn(|c| alpha[3 * r + c]));
                AffineMap::classify(a, *beta, grid)?
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverConfig {
    pub map: MapConfig,
    #[serde(default = "twenty")]
    pub ensemble: usize,
    pub seed: u64,
    #[serde(default = "one_u32")]
    pub kmax: u32,
    pub dt: f64,
    #[serde(default = "four")]
    pub nsteps: usize,
    #[serde(default)]
    pub time_shift: usize,
    #[serde(default = "null_tol")]
    pub null_tolerance: f64,
}

fn twenty() -> usize {
    20
}

fn four() -> usize {
    4
}

fn null_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PdeConfig {
    Advection { c: f64 },
    Burgers { nu: f64 },
    Kdv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForgeConfig {
    pub pde: PdeConfig,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default = "sixty_four")]
    pub n: usize,
    /// Initial data `mean + Σ a cos(2πm x/L) + b sin(2πm x/L)` as `[m, a, b]` triples.
    #[serde(default)]
    pub modes: Vec<[f64; 3]>,
    #[serde(default)]
    pub mean: f64,
    pub points: Vec<f64>,
    pub order: usize,
    pub horizon: f64,
    #[serde(default = "samples")]
    pub samples: usize,
    #[serde(default = "forge_tol")]
    pub tolerance: f64,
    #[serde(default = "fit_window")]
    pub fit_window: f64,
    pub max_drift: Option<f64>,
    pub min_exponent: Option<f64>,
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

fn sixty_four() -> usize {
    64
}

fn samples() -> usize {
    400
}

fn forge_tol() -> f64 {
    twopoint_core::forge::DEFAULT_TOLERANCE
}

fn fit_window() -> f64 {
    0.1
}

impl ForgeConfig {
    pub fn pde(&self) -> anyhow::Result<Pde1D> {
        let kind = match self.pde {
            PdeConfig::Advection { c } => PdeKind::Advection { c },
            PdeConfig::Burgers { nu } => PdeKind::Burgers { nu },
            PdeConfig::Kdv => PdeKind::Kdv,
        };
        Ok(Pde1D::new(kind, self.length, self.n)?)
    }

    pub fn initial(&self, pde: &Pde1D) -> Vec<f64> {
        let k0 = 2.0 * std::f64::consts::PI / self.length;
        pde.sample(|x| {
            self.mean
                + self
                    .modes
                    .iter()
                    .map(|[m, a, b]| a * (m * k0 * x).cos() + b * (m * k0 * x).sin())
                    .sum::<f64>()
        })
    }
}

/// Sets `path = value` inside `table`, creating intermediate tables.
fn apply_override(table: &mut toml::Table, spec: &str) -> anyhow::Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{spec}` is not of the form key=value")))?;
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads `path`, applies overrides and the output-directory environment variable.
pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.output.dir = PathBuf::from(dir);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

impl ExperimentConfig {
    pub fn grid(&self) -> anyhow::Result<GridSpec> {
        self.grid
            .as_ref()
            .ok_or_else(|| config_err("[grid] section is required"))?
            .build()
    }

    pub fn planewave_spec(&self) -> Option<PlaneWaveSpec> {
        match self.initial {
            InitialConfig::Planewave {
                amplitude,
                mode,
                direction,
            } => {
                let mut s = PlaneWaveSpec::new(amplitude, mode);
                s.direction = direction;
                Some(s)
            }
            _ => None,
        }
    }
}
