//! Numerical core of the stefanst phase-change solver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod error;
mod scalar;

pub mod coupling;
pub mod fem;
pub mod flow;
pub mod heat;
pub mod levelset;
pub mod linalg;
pub mod materials;
pub mod mesh;

pub use error::{Error, Result};
pub use scalar::{Real, Vec2};

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
