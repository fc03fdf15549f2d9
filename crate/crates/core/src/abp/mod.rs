//! Discrete verification of the Alexandrov–Bakelman–Pucci constructions.

pub mod contact;
pub mod harmonics;
pub mod logsob;
pub mod pipeline;
pub mod quermass;
pub mod serre;
pub mod solver;

pub use contact::{covering_check, sample_contact_set, ContactProblem, ContactSample, CoveringResult, FiberGrid, FiberModel};
pub use solver::{solve_divergence_form, DivergenceCoefficient, NewtonTensorCoefficient, ScalarCoefficient, SolutionFunction, SurfacePDESolution};
