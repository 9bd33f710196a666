pub mod core_profile;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod linalg;
pub mod motion;
pub mod pde_sim;
pub mod special;
pub mod wavenumber;

pub use error::{Error, Result};
pub use geometry::{Point, RectDomain, Spiral};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
