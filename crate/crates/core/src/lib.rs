//! Finite-element solver for parabolic optimal control problems whose state
//! equation is driven by measure-valued data in time, on polygonal domains
//! such as the L-shape `(0,1)^2 \ [0.5,1]^2`.
//!
//! The pipeline is: [`mesh`] builds a triangulation, [`fem`] assembles P1
//! operators, [`measure`] turns time measures into per-interval loads,
//! [`dynamics`] runs the backward-Euler state and co-state sweeps,
//! [`control`] holds the piecewise-constant controls and the projected
//! gradient optimizer, and [`verify`] measures errors against a manufactured
//! solution and runs convergence studies. [`cli`] wires these to the
//! `lshape-ocp` binary.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod fem;
pub mod measure;
pub mod mesh;
pub mod verify;

pub use error::{Error, Result};
