pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod fmt;
pub mod kernel;
pub mod obstacle;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
