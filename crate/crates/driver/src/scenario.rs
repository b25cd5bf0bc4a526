//! Turns a [`Config`] into a mesh, materials, boundary tables and initial
//! fields.

use stefanst_core::flow::{BodyForce, FlowBoundary, FlowState, PicardOptions};
use stefanst_core::heat::TempBoundary;
use stefanst_core::levelset::{init_from_geometry, liquid_phi_integral, Geometry, LevelSet};
use stefanst_core::materials::{MaterialPair, Phase, PhaseProps};
use stefanst_core::mesh::{load_mesh, ElementKind, Mesh, RectilinearGrid, Side, StructuredSpec};

use crate::analytic::AnalyticalStefan;
use crate::config::{Config, InterfaceConfig, MeshKind, ScenarioKind};
use crate::error::{DriverError, Result};

/// Flow solve settings of a scenario.
#[derive(Debug, Clone)]
pub struct FlowSetup {
    pub bc: FlowBoundary<f64>,
    pub force: BodyForce<f64>,
    pub options: PicardOptions<f64>,
}

/// Everything a simulation starts from.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: Config,
    pub mesh: Mesh<f64>,
    pub materials: MaterialPair<f64>,
    pub level_set: LevelSet<f64>,
    pub temperature: Vec<f64>,
    pub heat_bc: TempBoundary<f64>,
    pub flow: Option<FlowSetup>,
    pub flow_state: FlowState<f64>,
    pub analytic: Option<AnalyticalStefan>,
    /// `∫_{phi_0 < 0} phi_0`, the normalization of the liquid integral.
    pub reference_integral: f64,
}

fn element_kind(k: MeshKind) -> ElementKind {
    match k {
        MeshKind::Tri => ElementKind::Tri,
        MeshKind::Quad => ElementKind::Quad,
    }
}

fn cells(length: f64, h: f64) -> usize {
    ((length / h).round() as usize).max(1)
}

fn numerical(e: stefanst_core::Error) -> DriverError {
    DriverError::Config(e.to_string())
}

/// Graded corner-flow grid: an inflow channel along the bottom feeding an
/// outflow channel of thickness `d`.
pub fn corner_mesh(config: &Config) -> Result<Mesh<f64>> {
    let c = &config.corner;
    let x_split = c.inflow_length;
    let mut xs: Vec<f64> = (0..=c.nx_inflow)
        .map(|i| x_split * i as f64 / c.nx_inflow as f64)
        .collect();
    xs.extend((1..=c.nx_outflow).map(|i| x_split + c.d * i as f64 / c.nx_outflow as f64));
    let mut ys: Vec<f64> = (0..=c.ny_inflow)
        .map(|j| c.inflow_width * j as f64 / c.ny_inflow as f64)
        .collect();
    let rise = c.height - c.inflow_width;
    let weights: Vec<f64> = (0..c.ny_outflow)
        .map(|k| c.grading.powi(k as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut y = c.inflow_width;
    for (k, w) in weights.iter().enumerate() {
        y = if k + 1 == c.ny_outflow {
            c.height
        } else {
            y + rise * w / total
        };
        ys.push(y);
    }
    let x_mid = x_split + 0.5 * c.d;
    let (nxi, nyi) = (c.nx_inflow, c.ny_inflow);
    let tol = 1e-9 * c.height;
    let grid = RectilinearGrid {
        xs,
        ys,
        kind: element_kind(config.mesh.kind),
    };
    grid.build(
        |i, j| i >= nxi || j < nyi,
        |mid, side| {
            let name = match side {
                Side::Left if mid[0] < tol => "in",
                Side::Left => "left",
                Side::Right => "right",
                Side::Bottom => "bottom",
                Side::Top if (mid[1] - c.height).abs() < tol && mid[0] < x_mid => "out",
                Side::Top if (mid[1] - c.height).abs() < tol => "top",
                Side::Top => "left",
            };
            name.to_string()
        },
    )
    .map_err(numerical)
}

fn build_mesh(config: &Config) -> Result<Mesh<f64>> {
    match config.scenario {
        ScenarioKind::CornerFlow => corner_mesh(config),
        ScenarioKind::Custom => {
            let path = config
                .mesh_file()
                .ok_or_else(|| DriverError::config("custom scenarios need mesh.file"))?;
            let text = std::fs::read_to_string(&path).map_err(|e| DriverError::io(&path, e))?;
            let mesh: Mesh<f64> = load_mesh(&text)
                .map_err(|e| DriverError::Config(format!("{}: {e}", path.display())))?;
            if mesh.kind() != element_kind(config.mesh.kind) {
                return Err(DriverError::config(format!(
                    "mesh file holds {} elements but mesh.kind says otherwise",
                    mesh.kind().name()
                )));
            }
            Ok(mesh)
        }
        _ => {
            let m = &config.mesh;
            StructuredSpec::new(
                cells(m.size[0], m.h),
                cells(m.size[1], m.h),
                m.size[0],
                m.size[1],
            )
            .origin(m.origin)
            .kind(element_kind(m.kind))
            .build()
            .map_err(numerical)
        }
    }
}

fn props(p: crate::config::PhaseConfig) -> PhaseProps<f64> {
    PhaseProps::new(p.rho, p.cp, p.kappa, p.mu)
}

/// Builds the initial problem and checks every tag against the mesh.
pub fn build_problem(config: &Config) -> Result<Problem> {
    config.validate()?;
    let mesh = build_mesh(config)?;
    let n = mesh.node_count();
    let mc = &config.materials;
    let materials =
        MaterialPair::new(props(mc.liquid), props(mc.solid), mc.h_m, mc.t_m).map_err(numerical)?;

    let analytic = match config.scenario {
        ScenarioKind::Stefan1d => Some(AnalyticalStefan::new(
            mc.liquid.rho,
            mc.liquid.cp,
            mc.liquid.kappa,
            mc.h_m,
            config.initial.t_liquid,
            mc.t_m,
        )?),
        _ => None,
    };

    let (lo, hi) = mesh.bounding_box();
    let geometry = match config.initial.interface {
        InterfaceConfig::VerticalLine { x0, liquid_left } => {
            Some(Geometry::VerticalLine { x0, liquid_left })
        }
        InterfaceConfig::HorizontalLine { y0, liquid_below } => {
            Some(Geometry::HorizontalLine { y0, liquid_below })
        }
        InterfaceConfig::Circle {
            center,
            radius,
            liquid_inside,
        } => Some(Geometry::Circle {
            center,
            radius,
            liquid_inside,
        }),
        InterfaceConfig::Analytic => {
            let a = analytic
                .as_ref()
                .expect("validated: analytic interface belongs to stefan_1d");
            Some(Geometry::VerticalLine {
                x0: lo[0] + a.front(config.time.t_start),
                liquid_left: true,
            })
        }
        InterfaceConfig::MidChannel => Some(Geometry::VerticalLine {
            x0: config.corner.inflow_length + 0.5 * config.corner.d,
            liquid_left: true,
        }),
        InterfaceConfig::None => None,
    };
    let phi = match geometry {
        Some(g) => init_from_geometry(&mesh, g).map_err(numerical)?,
        // all liquid, one domain diameter away from any interface
        None => vec![-((hi[0] - lo[0]).hypot(hi[1] - lo[1])); n],
    };
    let level_set = LevelSet::new(
        phi,
        config.level_set.epsilon,
        config.level_set.reinit_interval,
    )
    .map_err(numerical)?;

    let mut temperature: Vec<f64> = level_set
        .phi
        .iter()
        .map(|&p| match Phase::of(p) {
            Phase::Liquid => config.initial.t_liquid,
            Phase::Solid => config.initial.t_solid,
        })
        .collect();
    if let Some(a) = &analytic {
        for (t, p) in temperature.iter_mut().zip(mesh.coords()) {
            *t = a.temperature(p[0] - lo[0], config.time.t_start);
        }
    }

    let mut heat_bc = TempBoundary::new(n);
    let mut flow_bc = FlowBoundary::new(n);
    for b in &config.boundary {
        if !mesh.has_tag(&b.tag) {
            let tags: Vec<String> = mesh.tags().iter().map(|t| t.as_str().to_string()).collect();
            return Err(DriverError::config(format!(
                "boundary tag `{}` does not exist on the mesh (tags: {})",
                b.tag,
                tags.join(", ")
            )));
        }
        if let Some(t) = b.temperature {
            heat_bc = heat_bc
                .with_dirichlet(&mesh, &b.tag, t)
                .map_err(numerical)?;
        }
        if let Some(q) = b.heat_flux {
            heat_bc = heat_bc.with_neumann(&mesh, &b.tag, q).map_err(numerical)?;
        }
        if let Some(v) = b.velocity {
            flow_bc = flow_bc
                .with_velocity(&mesh, &b.tag, |_| v)
                .map_err(numerical)?;
        }
        if let Some(par) = b.parabolic {
            flow_bc = flow_bc
                .with_velocity(&mesh, &b.tag, |x| {
                    [par.amplitude * (x[1] - par.y0) * (par.y1 - x[1]), 0.0]
                })
                .map_err(numerical)?;
        }
        if let Some(h) = b.traction {
            flow_bc = flow_bc.with_traction(&mesh, &b.tag, h).map_err(numerical)?;
        }
    }
    for (t, fixed) in temperature.iter_mut().zip(heat_bc.dirichlet()) {
        if let Some(v) = fixed {
            *t = *v;
        }
    }

    let mut flow_state = FlowState::rest(n);
    let flow = if config.flow.enabled && config.scenario != ScenarioKind::Stefan1d {
        let v0 = config.initial.velocity;
        for (i, u) in flow_state.top.u.iter_mut().enumerate() {
            *u = flow_bc.velocity()[i].unwrap_or(v0);
        }
        flow_state.bottom = flow_state.top.clone();
        Some(FlowSetup {
            bc: flow_bc,
            force: BodyForce {
                f: config.flow.body_force,
            },
            options: PicardOptions {
                tol: config.flow.tol,
                max_iter: config.flow.max_iter,
                ..PicardOptions::default()
            },
        })
    } else {
        None
    };

    let reference_integral = liquid_phi_integral(&mesh, &level_set.phi);
    Ok(Problem {
        config: config.clone(),
        mesh,
        materials,
        level_set,
        temperature,
        heat_bc,
        flow,
        flow_state,
        analytic,
        reference_integral,
    })
}
