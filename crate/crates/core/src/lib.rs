//! Structured UV-space Gaussian avatars: a skinned body model, UV atlas
//! utilities, parameter maps, lifting, deformation and software splatting.

pub mod body;
pub mod error;
pub mod gaussians;
pub mod lift;
pub mod math;
pub mod metrics;
pub mod records;
pub mod render;
pub mod synthetic;
pub mod uv;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
