//! Spectral geometry of the Robin infinity-Laplacian on planar polygons.

pub mod cli;
pub mod domain;
pub mod geometry;
pub mod infty_spectrum;
pub mod optim;
pub mod plap_fem;
