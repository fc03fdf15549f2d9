//! Spectral building blocks for the surface PDE solvers.

pub mod fourier;
