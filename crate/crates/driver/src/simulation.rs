//! The time loop: materials, flow, ghost-split temperature, crossings,
//! Stefan velocity, extension, reinitialization, advection.

use std::path::Path;

use log::{debug, info};
use stefanst_core::coupling::{
    build_ghost_split, compose_temperature, crossing_velocities, extend_velocity, find_crossings,
    TimeStepController,
};
use stefanst_core::fem::SlabVelocity;
use stefanst_core::flow::FlowState;
use stefanst_core::heat::{solve_heat_slab, Region};
use stefanst_core::levelset::{advect, liquid_fraction_integral, reinitialize_with, LevelSet};
use stefanst_core::materials::MaterialField;
use stefanst_core::mesh::Mesh;
use stefanst_core::Vec2;

use crate::config::Config;
use crate::error::{DriverError, Result};
use crate::output::{write_timeseries, write_vtk, Fields, TimeSeriesRecord};
use crate::scenario::{build_problem, Problem};

/// Stages of one step, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Materials,
    Flow,
    Heat,
    Crossings,
    StefanVelocity,
    Extension,
    Reinitialize,
    Advect,
}

/// Running simulation state.
#[derive(Debug, Clone)]
pub struct Simulation {
    problem: Problem,
    controller: TimeStepController<f64>,
    pub step: usize,
    pub t: f64,
    pub level_set: LevelSet<f64>,
    pub temperature: Vec<f64>,
    pub flow: FlowState<f64>,
    /// Extended Stefan velocity of the last step; drives the next `dt`.
    pub extended: Vec<Vec2<f64>>,
    /// Stages executed by the last step.
    pub trace: Vec<Stage>,
    pub records: Vec<TimeSeriesRecord>,
}

/// Mean x coordinate of the crossings of `phi`, `NaN` without interface.
pub fn front_position(mesh: &Mesh<f64>, phi: &[f64]) -> f64 {
    let c = find_crossings(mesh, phi);
    if c.is_empty() {
        return f64::NAN;
    }
    c.iter().map(|c| c.position[0]).sum::<f64>() / c.len() as f64
}

fn max_speed(v: &[Vec2<f64>]) -> f64 {
    v.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
}

impl Simulation {
    pub fn new(config: &Config) -> Result<Self> {
        Self::from_problem(build_problem(config)?)
    }

    pub fn from_problem(problem: Problem) -> Result<Self> {
        let c = &problem.config;
        let controller =
            TimeStepController::new(c.time.dt, c.time.adaptive, problem.mesh.min_face_length())?;
        let n = problem.mesh.node_count();
        Ok(Simulation {
            controller,
            step: 0,
            t: c.time.t_start,
            level_set: problem.level_set.clone(),
            temperature: problem.temperature.clone(),
            flow: problem.flow_state.clone(),
            extended: vec![[0.0; 2]; n],
            trace: Vec::new(),
            records: Vec::new(),
            problem,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn mesh(&self) -> &Mesh<f64> {
        &self.problem.mesh
    }

    pub fn config(&self) -> &Config {
        &self.problem.config
    }

    /// Liquid integral normalized by its initial value.
    pub fn liquid_integral(&self) -> f64 {
        liquid_fraction_integral(
            &self.problem.mesh,
            &self.level_set.phi,
            self.problem.reference_integral,
        )
        .unwrap_or(f64::NAN)
    }

    /// Largest positive level-set value; `<= 0` once everything is liquid.
    pub fn max_phi(&self) -> f64 {
        self.level_set
            .phi
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Advances one step; errors carry the step number.
    pub fn step(&mut self) -> Result<&TimeSeriesRecord> {
        let step = self.step + 1;
        self.advance()
            .map_err(|source| DriverError::Numerical { step, source })?;
        self.step = step;
        Ok(self.records.last().expect("advance pushes a record"))
    }

    fn advance(&mut self) -> stefanst_core::Result<()> {
        let p = &self.problem;
        let mesh = &p.mesh;
        let n = mesh.node_count();
        let mut trace = Vec::with_capacity(8);

        let dt = self.controller.update(&self.extended);

        trace.push(Stage::Materials);
        let phi = &self.level_set.phi;
        let materials = MaterialField::blended(p.materials, phi, self.level_set.epsilon);

        let velocity = match &p.flow {
            Some(f) => {
                trace.push(Stage::Flow);
                let sol = stefanst_core::flow::solve_ns_slab(
                    mesh, &self.flow, &materials, dt, &f.bc, f.force, &f.options,
                )?;
                debug!(
                    "step {}: Picard {} iterations",
                    self.step + 1,
                    sol.iterations
                );
                self.flow = sol.state;
                self.flow.slab_velocity()
            }
            None => SlabVelocity::zeros(n),
        };

        trace.push(Stage::Heat);
        let (liquid, solid) = build_ghost_split(mesh, phi, p.materials.t_m);
        let solve_phase =
            |spec: &stefanst_core::heat::SubdomainSpec<f64>| -> stefanst_core::Result<Vec<f64>> {
                if spec.is_empty() {
                    return Ok(self.temperature.clone());
                }
                let (field, _) = solve_heat_slab(
                    mesh,
                    &self.temperature,
                    &velocity,
                    &materials,
                    dt,
                    Region::Subdomain(spec),
                    &p.heat_bc,
                )?;
                Ok(field.top)
            };
        let t_liquid = solve_phase(&liquid)?;
        let t_solid = solve_phase(&solid)?;
        self.temperature = compose_temperature(phi, &t_liquid, &t_solid);

        trace.push(Stage::Crossings);
        let crossings = find_crossings(mesh, phi);
        if crossings.is_empty() {
            self.extended = vec![[0.0; 2]; n];
        } else {
            trace.push(Stage::StefanVelocity);
            let speeds: Vec<Vec2<f64>> = if p.config.level_set.freeze_interface {
                vec![[0.0; 2]; crossings.len()]
            } else {
                crossing_velocities(mesh, phi, &crossings, &t_liquid, &t_solid, &p.materials)?
                    .into_iter()
                    .map(|c| c.u)
                    .collect()
            };

            // the distance search also yields the nearest-crossing map
            let reinit = reinitialize_with(mesh, &self.level_set, &crossings)?;
            trace.push(Stage::Extension);
            self.extended = extend_velocity(&speeds, Some(&reinit.nearest))?;

            let due = (self.step + 1).is_multiple_of(self.level_set.reinit_interval);
            if due {
                trace.push(Stage::Reinitialize);
                self.level_set = reinit.level_set;
            }

            trace.push(Stage::Advect);
            self.level_set = advect(mesh, &self.level_set, &self.extended, dt)?;
        }

        self.t += dt;
        self.trace = trace;
        self.records.push(TimeSeriesRecord {
            t: self.t,
            pci_x: front_position(mesh, &self.level_set.phi),
            liquid_integral: self.liquid_integral(),
            v_max: max_speed(&self.extended),
            dt,
        });
        Ok(())
    }

    /// Runs `steps` steps (the configured count when `None`), writing the
    /// series and field files into `out` when given.
    pub fn run(&mut self, steps: Option<usize>, out: Option<&Path>) -> Result<()> {
        let total = steps.unwrap_or(self.config().time.steps);
        let cadence = self.config().output;
        if let Some(dir) = out {
            std::fs::create_dir_all(dir).map_err(|e| DriverError::io(dir, e))?;
            if cadence.vtk {
                self.write_fields(&dir.join("fields_0000.vtk"))?;
            }
        }
        for _ in 0..total {
            let rec = *self.step()?;
            if self.step.is_multiple_of(50) || self.step == total {
                info!(
                    "step {} t={:.6e} dt={:.3e} pci_x={:.6e} I={:.6} v_max={:.3e}",
                    self.step, rec.t, rec.dt, rec.pci_x, rec.liquid_integral, rec.v_max
                );
            }
            if let Some(dir) = out {
                if cadence.vtk
                    && cadence.field_every > 0
                    && self.step.is_multiple_of(cadence.field_every)
                {
                    self.write_fields(&dir.join(format!("fields_{:04}.vtk", self.step)))?;
                }
            }
        }
        if let Some(dir) = out {
            write_timeseries(&self.sampled_records(), &dir.join("series.csv"))?;
        }
        Ok(())
    }

    /// Records thinned to the configured series cadence; the last record is
    /// always kept.
    pub fn sampled_records(&self) -> Vec<TimeSeriesRecord> {
        let every = self.config().output.series_every.max(1);
        let last = self.records.len();
        self.records
            .iter()
            .enumerate()
            .filter(|(k, _)| (k + 1) % every == 0 || k + 1 == last)
            .map(|(_, r)| *r)
            .collect()
    }

    pub fn write_fields(&self, path: &Path) -> Result<()> {
        write_vtk(
            self.mesh(),
            &Fields {
                velocity: self.flow.velocity(),
                pressure: self.flow.pressure(),
                temperature: &self.temperature,
                phi: &self.level_set.phi,
                epsilon: self.level_set.epsilon,
            },
            path,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioKind;

    fn small_stefan() -> Config {
        Config::preset(ScenarioKind::Stefan1d)
            .with_overrides(&["mesh.h=2e-3", "time.steps=20"])
            .unwrap()
    }

    #[test]
    fn stage_order() {
        let mut sim = Simulation::new(&small_stefan()).unwrap();
        sim.step().unwrap();
        use Stage::*;
        assert_eq!(
            sim.trace,
            vec![
                Materials,
                Heat,
                Crossings,
                StefanVelocity,
                Extension,
                Reinitialize,
                Advect
            ]
        );
    }

    #[test]
    fn front_advances_and_time_increases() {
        let mut sim = Simulation::new(&small_stefan()).unwrap();
        sim.run(None, None).unwrap();
        for w in sim.records.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].pci_x >= w[0].pci_x - 1e-12);
        }
        assert!(sim.records.last().unwrap().pci_x > sim.records[0].pci_x);
    }

    #[test]
    fn frozen_interface_keeps_level_set() {
        let c = small_stefan()
            .with_overrides(&["level_set.freeze_interface=true"])
            .unwrap();
        let mut sim = Simulation::new(&c).unwrap();
        let phi0 = sim.level_set.phi.clone();
        sim.run(Some(3), None).unwrap();
        let i = sim.liquid_integral();
        assert!((i - 1.0).abs() < 1e-12, "I = {i}");
        // reinitialization of an exact distance leaves it unchanged
        for (a, b) in phi0.iter().zip(&sim.level_set.phi) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_are_step_stamped() {
        let mut sim = Simulation::new(&small_stefan()).unwrap();
        sim.step().unwrap();
        sim.temperature[7] = f64::NAN;
        match sim.step() {
            Err(e @ DriverError::Numerical { step: 2, .. }) => assert_eq!(e.exit_code(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
