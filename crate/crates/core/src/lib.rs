pub mod acceptance;
pub mod attitude;
pub mod cli;
pub mod comparative;
pub mod error;
pub mod lottery;
pub mod preferences;
pub mod premium;
pub mod rdu;
pub mod sharing;
pub mod solve;

pub use error::{Error, Result};
