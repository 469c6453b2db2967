pub mod aa;
pub mod aggregation;
pub mod error;
pub mod losses;
pub mod math;
pub mod oracle;
pub mod pointwise;
pub mod sampling;
pub mod synthetic;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
