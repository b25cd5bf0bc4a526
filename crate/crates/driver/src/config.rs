//! Scenario configuration: TOML files layered over per-scenario presets,
//! with `key.path=value` overrides on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{DriverError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "stefan_1d")]
    Stefan1d,
    #[serde(rename = "cavity_melt")]
    CavityMelt,
    #[serde(rename = "corner_flow")]
    CornerFlow,
    #[serde(rename = "custom")]
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Stefan1d => "stefan_1d",
            ScenarioKind::CavityMelt => "cavity_melt",
            ScenarioKind::CornerFlow => "corner_flow",
            ScenarioKind::Custom => "custom",
        }
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "stefan_1d" => Ok(ScenarioKind::Stefan1d),
            "cavity_melt" => Ok(ScenarioKind::CavityMelt),
            "corner_flow" => Ok(ScenarioKind::CornerFlow),
            "custom" => Ok(ScenarioKind::Custom),
            other => Err(DriverError::config(format!(
                "unknown scenario `{other}` (expected stefan_1d, cavity_melt, corner_flow or custom)"
            ))),
        }
    }

    /// Preset layered under user files of this scenario.
    pub fn preset(self) -> &'static str {
        match self {
            ScenarioKind::Stefan1d => include_str!("../configs/stefan_1d.toml"),
            ScenarioKind::CavityMelt => include_str!("../configs/cavity_melt.toml"),
            ScenarioKind::CornerFlow => include_str!("../configs/corner_flow.toml"),
            ScenarioKind::Custom => include_str!("../configs/custom.toml"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Tri,
    Quad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub kind: MeshKind,
    /// Cell size of generated rectangles.
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "unit_square")]
    pub size: [f64; 2],
    #[serde(default)]
    pub origin: [f64; 2],
    /// Mesh file for `custom`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn default_h() -> f64 {
    0.02
}

fn unit_square() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub rho: f64,
    pub cp: f64,
    pub kappa: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub h_m: f64,
    pub t_m: f64,
    pub liquid: PhaseConfig,
    pub solid: PhaseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_start: f64,
    pub dt: f64,
    pub steps: usize,
    pub adaptive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetConfig {
    pub epsilon: f64,
    pub reinit_interval: usize,
    /// Forces the interface velocity to zero.
    pub freeze_interface: bool,
}

/// Initial interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterfaceConfig {
    VerticalLine {
        x0: f64,
        liquid_left: bool,
    },
    HorizontalLine {
        y0: f64,
        liquid_below: bool,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        liquid_inside: bool,
    },
    /// Front of the similarity solution at `t_start` (stefan_1d).
    Analytic,
    /// Middle of the outflow channel (corner_flow).
    MidChannel,
    /// Everything liquid.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub interface: InterfaceConfig,
    pub t_liquid: f64,
    pub t_solid: f64,
    pub velocity: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub enabled: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub body_force: [f64; 2],
}

/// `u = (a (y - y0) (y1 - y), 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicConfig {
    pub amplitude: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Conditions on one boundary tag. Entries are applied in order, so later
/// entries own shared corner nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parabolic: Option<ParabolicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traction: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_flux: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// VTK cadence in steps; 0 writes only the final state.
    pub field_every: usize,
    pub series_every: usize,
    pub vtk: bool,
}

/// Geometry and grid of the corner-flow domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerConfig {
    /// Outflow channel thickness.
    pub d: f64,
    pub height: f64,
    pub inflow_length: f64,
    pub inflow_width: f64,
    pub nx_inflow: usize,
    pub nx_outflow: usize,
    pub ny_inflow: usize,
    pub ny_outflow: usize,
    /// Growth ratio of cell heights above the inflow channel.
    pub grading: f64,
}

impl Default for CornerConfig {
    fn default() -> Self {
        CornerConfig {
            d: 0.2,
            height: 0.6,
            inflow_length: 0.2,
            inflow_width: 0.01,
            nx_inflow: 6,
            nx_outflow: 11,
            ny_inflow: 3,
            ny_outflow: 14,
            grading: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioKind,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub corner: CornerConfig,
    pub materials: MaterialsConfig,
    pub time: TimeConfig,
    pub level_set: LevelSetConfig,
    pub initial: InitialConfig,
    pub flow: FlowConfig,
    #[serde(default)]
    pub boundary: Vec<BoundaryConfig>,
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn parse_table(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| DriverError::config(format!("{origin}: {}", e.to_string().trim())))
}

/// Recursively overlays `top` onto `base`; tables merge, everything else
/// (arrays included) is replaced.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c=value`; the value is parsed as TOML and taken verbatim as
/// a string when that fails.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| {
        DriverError::config(format!("override `{spec}` is not of the form key=value"))
    })?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(DriverError::config(format!(
            "override key `{key}` is malformed"
        )));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(DriverError::config(format!(
                    "override key `{key}`: `{p}` is not a section"
                )))
            }
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl Config {
    /// Parses a config document layered over its scenario preset.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let user = parse_table(text, "config")?;
        let mut scenario = user
            .get("scenario")
            .and_then(Value::as_str)
            .map(str::to_string);
        for o in overrides {
            if let Some(("scenario", v)) = o.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
                scenario = Some(v.trim_matches('"').to_string());
            }
        }
        let kind = ScenarioKind::parse(
            &scenario.ok_or_else(|| DriverError::config("config does not name a `scenario`"))?,
        )?;
        let mut table = parse_table(kind.preset(), kind.name())?;
        if kind == ScenarioKind::Custom {
            // the example mesh of the shipped file is not a default
            if let Some(Value::Table(mesh)) = table.get_mut("mesh") {
                mesh.remove("file");
            }
        }
        merge(&mut table, user);
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: Config = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| DriverError::config(e.to_string().trim().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DriverError::io(path, e))?;
        let mut config = Self::from_toml(&text, overrides).map_err(|e| match e {
            DriverError::Config(m) => DriverError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn preset(kind: ScenarioKind) -> Self {
        Self::from_toml(&format!("scenario = \"{}\"", kind.name()), &[])
            .expect("shipped presets are valid")
    }

    /// Returns a copy with `overrides` applied.
    pub fn with_overrides(&self, overrides: &[&str]) -> Result<Self> {
        let text = toml::to_string(self).map_err(|e| DriverError::config(e.to_string()))?;
        let owned: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        let mut c = Self::from_toml(&text, &owned)?;
        c.base_dir = self.base_dir.clone();
        Ok(c)
    }

    pub fn mesh_file(&self) -> Option<PathBuf> {
        self.mesh.file.as_ref().map(|f| {
            if f.is_absolute() {
                f.clone()
            } else {
                self.base_dir.join(f)
            }
        })
    }

    /// Checks everything that does not need the mesh.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DriverError::Config(m));
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(DriverError::config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        if self.time.steps == 0 {
            return bad("time.steps must be at least 1".into());
        }
        positive("time.dt", self.time.dt)?;
        if !self.time.t_start.is_finite() {
            return bad("time.t_start must be finite".into());
        }
        if self.scenario != ScenarioKind::CornerFlow {
            positive("mesh.h", self.mesh.h)?;
            positive("mesh.size[0]", self.mesh.size[0])?;
            positive("mesh.size[1]", self.mesh.size[1])?;
        }
        for (phase, p) in [
            ("liquid", self.materials.liquid),
            ("solid", self.materials.solid),
        ] {
            positive(&format!("materials.{phase}.rho"), p.rho)?;
            positive(&format!("materials.{phase}.cp"), p.cp)?;
            positive(&format!("materials.{phase}.kappa"), p.kappa)?;
            positive(&format!("materials.{phase}.mu"), p.mu)?;
        }
        positive("materials.h_m", self.materials.h_m)?;
        if !(self.level_set.epsilon >= 0.0) {
            return bad(format!(
                "level_set.epsilon must be non-negative, got {}",
                self.level_set.epsilon
            ));
        }
        if self.level_set.reinit_interval == 0 {
            return bad("level_set.reinit_interval must be at least 1".into());
        }
        if self.flow.enabled {
            positive("flow.tol", self.flow.tol)?;
            if self.flow.max_iter == 0 {
                return bad("flow.max_iter must be at least 1".into());
            }
        }
        if self.output.series_every == 0 {
            return bad("output.series_every must be at least 1".into());
        }
        for b in &self.boundary {
            let kinematic = [
                b.velocity.is_some(),
                b.parabolic.is_some(),
                b.traction.is_some(),
            ];
            if kinematic.iter().filter(|&&x| x).count() > 1 {
                return bad(format!(
                    "boundary `{}` sets more than one of velocity, parabolic, traction",
                    b.tag
                ));
            }
            if b.temperature.is_some() && b.heat_flux.is_some() {
                return bad(format!(
                    "boundary `{}` sets both temperature and heat_flux",
                    b.tag
                ));
            }
        }
        match self.initial.interface {
            InterfaceConfig::Analytic => {
                if self.scenario != ScenarioKind::Stefan1d {
                    return bad("interface type `analytic` is only available for stefan_1d".into());
                }
                if !(self.initial.t_liquid > self.materials.t_m) {
                    return bad("stefan_1d needs initial.t_liquid above materials.t_m".into());
                }
                if !(self.time.t_start > 0.0) {
                    return bad(
                        "stefan_1d starts from the similarity solution and needs time.t_start > 0"
                            .into(),
                    );
                }
            }
            InterfaceConfig::MidChannel if self.scenario != ScenarioKind::CornerFlow => {
                return bad(
                    "interface type `mid_channel` is only available for corner_flow".into(),
                );
            }
            _ => {}
        }
        if self.scenario == ScenarioKind::CornerFlow {
            let c = &self.corner;
            for (name, v) in [
                ("d", c.d),
                ("height", c.height),
                ("inflow_length", c.inflow_length),
                ("inflow_width", c.inflow_width),
            ] {
                positive(&format!("corner.{name}"), v)?;
            }
            positive("corner.grading", c.grading)?;
            if c.inflow_width >= c.height {
                return bad("corner.inflow_width must be below corner.height".into());
            }
            if [c.nx_inflow, c.nx_outflow, c.ny_inflow, c.ny_outflow].contains(&0) {
                return bad("corner cell counts must be at least 1".into());
            }
        }
        if self.scenario == ScenarioKind::Custom && self.mesh.file.is_none() {
            return bad("custom scenarios need mesh.file".into());
        }
        Ok(())
    }
}
