//! Numerical verification of ABP-type geometric inequalities.

pub mod abp;
pub mod error;
pub mod geom;
pub mod jet;
pub mod logsob;
pub mod numeric;
pub mod quermass;
pub mod report;
pub mod serre;
pub mod spectral;
pub mod symalg;

pub use error::{Error, Result};
pub use report::VerificationReport;
