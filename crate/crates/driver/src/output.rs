//! VTK snapshots and CSV tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use stefanst_core::levelset::smoothed_heaviside;
use stefanst_core::mesh::{ElementKind, Mesh};

use crate::error::{DriverError, Result};

/// Nodal fields of one snapshot.
#[derive(Debug, Clone, Copy)]
pub struct Fields<'a> {
    pub velocity: &'a [[f64; 2]],
    pub pressure: &'a [f64],
    pub temperature: &'a [f64],
    pub phi: &'a [f64],
    pub epsilon: f64,
}

/// Legacy ASCII VTK unstructured grid with point data `u, v, p, T, phi` and
/// `H_eps(phi)`.
pub fn write_vtk(mesh: &Mesh<f64>, fields: &Fields<'_>, path: &Path) -> Result<()> {
    let n = mesh.node_count();
    for (name, len) in [
        ("velocity", fields.velocity.len()),
        ("pressure", fields.pressure.len()),
        ("temperature", fields.temperature.len()),
        ("phi", fields.phi.len()),
    ] {
        if len != n {
            return Err(DriverError::config(format!(
                "{name} has {len} values for {n} nodes"
            )));
        }
    }
    let io = |e| DriverError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let nen = mesh.nodes_per_element();
    let cell_type = match mesh.kind() {
        ElementKind::Tri => 5,
        ElementKind::Quad => 9,
    };
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 2.0\nstefanst\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    s.push_str(&format!("POINTS {n} double\n"));
    for p in mesh.coords() {
        s.push_str(&format!("{} {} 0\n", p[0], p[1]));
    }
    let ne = mesh.element_count();
    s.push_str(&format!("CELLS {ne} {}\n", ne * (nen + 1)));
    for el in mesh.elements() {
        s.push_str(&nen.to_string());
        for i in el {
            s.push_str(&format!(" {i}"));
        }
        s.push('\n');
    }
    s.push_str(&format!("CELL_TYPES {ne}\n"));
    for _ in 0..ne {
        s.push_str(&format!("{cell_type}\n"));
    }
    s.push_str(&format!("POINT_DATA {n}\n"));
    let heaviside: Vec<f64> = fields
        .phi
        .iter()
        .map(|&p| smoothed_heaviside(p, fields.epsilon))
        .collect();
    let u: Vec<f64> = fields.velocity.iter().map(|v| v[0]).collect();
    let v: Vec<f64> = fields.velocity.iter().map(|v| v[1]).collect();
    for (name, data) in [
        ("u", &u[..]),
        ("v", &v[..]),
        ("p", fields.pressure),
        ("T", fields.temperature),
        ("phi", fields.phi),
        ("H_eps", &heaviside[..]),
    ] {
        s.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for x in data {
            s.push_str(&format!("{x}\n"));
        }
    }
    w.write_all(s.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    /// Mean x of the interface crossings; NaN without an interface.
    pub pci_x: f64,
    #[serde(rename = "I")]
    pub liquid_integral: f64,
    pub v_max: f64,
    pub dt: f64,
}

pub fn write_timeseries(records: &[TimeSeriesRecord], path: &Path) -> Result<()> {
    let io = |e: csv::Error| DriverError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if records.is_empty() {
        w.write_record(["t", "pci_x", "I", "v_max", "dt"])
            .map_err(io)?;
    }
    for r in records {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| DriverError::io(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let io = |e: csv::Error| DriverError::io(path, e.into());
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    r.deserialize().map(|row| row.map_err(io)).collect()
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub nodes: usize,
    pub abs_err: f64,
    pub rel_err: f64,
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let io = |e: csv::Error| DriverError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if rows.is_empty() {
        w.write_record(["h", "nodes", "abs_err", "rel_err"])
            .map_err(io)?;
    }
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| DriverError::io(path, e))
}
