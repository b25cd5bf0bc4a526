//! Mesh-refinement study of the one-phase Stefan problem.

use log::info;

use crate::config::{Config, ScenarioKind};
use crate::error::{DriverError, Result};
use crate::metrics::{convergence_rate, l2_error, L2Error};
use crate::output::ConvergenceRow;
use crate::simulation::Simulation;

/// Final-time errors of one mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceEntry {
    pub h: f64,
    pub nodes: usize,
    pub t_final: f64,
    pub error: L2Error,
    /// Numerical front position.
    pub front: f64,
    /// Exact front position at `t_final`.
    pub front_exact: f64,
}

impl ConvergenceEntry {
    pub fn front_error(&self) -> f64 {
        (self.front - self.front_exact).abs()
    }

    pub fn row(&self) -> ConvergenceRow {
        ConvergenceRow {
            h: self.h,
            nodes: self.nodes,
            abs_err: self.error.normalized,
            rel_err: self.error.relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub entries: Vec<ConvergenceEntry>,
    /// Fitted rate against the per-direction node count.
    pub rate: f64,
}

impl ConvergenceStudy {
    pub fn rows(&self) -> Vec<ConvergenceRow> {
        self.entries.iter().map(ConvergenceEntry::row).collect()
    }
}

/// Runs `base` to completion and measures it against the similarity
/// solution.
pub fn stefan_errors(base: &Config) -> Result<ConvergenceEntry> {
    if base.scenario != ScenarioKind::Stefan1d {
        return Err(DriverError::config(
            "error measurement needs the stefan_1d scenario",
        ));
    }
    let mut sim = Simulation::new(base)?;
    sim.run(None, None)?;
    let p = sim.problem();
    let exact = p.analytic.expect("stefan_1d carries the analytic solution");
    let x0 = p.mesh.bounding_box().0[0];
    let t = sim.t;
    let error = l2_error(&p.mesh, &sim.temperature, |x| {
        exact.temperature(x[0] - x0, t)
    });
    Ok(ConvergenceEntry {
        h: base.mesh.h,
        nodes: p.mesh.node_count(),
        t_final: t,
        error,
        front: sim.records.last().map_or(f64::NAN, |r| r.pci_x),
        front_exact: x0 + exact.front(t),
    })
}

/// One run per mesh size in `hs`; at least three sizes are required.
pub fn convergence_study(base: &Config, hs: &[f64]) -> Result<ConvergenceStudy> {
    if hs.len() < 3 {
        return Err(DriverError::config(
            "a convergence study needs at least three mesh sizes",
        ));
    }
    let mut entries = Vec::with_capacity(hs.len());
    for &h in hs {
        let cfg = base.with_overrides(&[&format!("mesh.h={h:e}")])?;
        let entry = stefan_errors(&cfg)?;
        info!(
            "h={h:e} nodes={} abs={:.4e} rel={:.4e} front error={:.3e}",
            entry.nodes,
            entry.error.normalized,
            entry.error.relative,
            entry.front_error()
        );
        entries.push(entry);
    }
    let nodes: Vec<usize> = entries.iter().map(|e| e.nodes).collect();
    let rel: Vec<f64> = entries.iter().map(|e| e.error.relative).collect();
    let rate = convergence_rate(&nodes, &rel);
    Ok(ConvergenceStudy { entries, rate })
}
