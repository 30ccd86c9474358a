pub mod edge;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod locallaw;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod selfconsistent;
pub mod stats;
pub mod tracy_widom;

pub use error::{Error, Result};
