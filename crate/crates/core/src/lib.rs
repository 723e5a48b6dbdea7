pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod gates;
pub mod liealg;
pub mod network;
pub mod operators;
pub mod presets;
pub mod trainer;

pub use error::{Error, Result};
