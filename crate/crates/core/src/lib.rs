//! Codimensional incremental-potential contact simulation.

pub mod accd;
pub mod audit;
pub mod barrier;
pub mod broadphase;
pub mod ccd_bench;
pub mod distance;
pub mod elasticity;
pub mod error;
pub mod friction;
pub mod io;
pub mod math;
pub mod mesh;
pub mod scene;
pub mod shapes;
pub mod solver;
pub mod strain_limit;

pub use error::{Error, Result};
pub use math::Vec3;
