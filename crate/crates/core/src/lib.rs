pub mod defect;
pub mod dissipation;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod noise;
pub mod pathlaw;
pub mod scheme;
pub mod testfn;
pub mod thermo;
pub mod torus;

pub use error::{Result, SceError};
