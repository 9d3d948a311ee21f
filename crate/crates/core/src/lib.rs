//! Numerical laboratory for Hamilton-Jacobi equations with Neumann boundary
//! conditions: reflected (Skorokhod) trajectories, the variational value
//! function, reflected Hamiltonian flows, semiconcavity probes, and the
//! exterior-disk and two-hole front experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod cli;
pub mod error;
pub mod frontlab;
pub mod geodesic;
pub mod geometry;
pub mod hamiltonian;
pub mod probe;
mod quasi_newton;
pub mod reflected_flow;
pub mod skorokhod;

pub use error::{LabError, Result};

pub type Point = nalgebra::Vector2<f64>;
pub type Vector = nalgebra::Vector2<f64>;
pub type Matrix = nalgebra::Matrix2<f64>;
