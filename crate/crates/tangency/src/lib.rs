//! Numerical study of single-round periodic orbits near a resonant
//! homoclinic tangency of a planar map family: orbit solving, bifurcation
//! scans along parameter rays, leading-order scaling-law predictors, and
//! phase-portrait data generation.

pub mod asymptotics;
pub mod exec;
pub mod model;
pub mod orbit;
pub mod portrait;
pub mod scan;

pub use model::{ModelParams, Point};
