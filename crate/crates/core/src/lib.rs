pub mod bits;
pub mod channel;
pub mod cli;
pub mod codec;
pub mod error;
pub mod lp;
pub mod model;
pub mod placement;
pub mod regions;
pub mod schedule;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
