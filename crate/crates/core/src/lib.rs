//! Numerical toolkit for Lyapunov families bifurcating from the equal-mass
//! regular N-gon relative equilibrium, observed in rotating frames.
//!
//! Conventions shared by every module: gravitational constant 1, unit
//! masses for the N-gon, horizontal plane identified with ℂ. Unless a
//! function says otherwise, "normalized units" means the time unit in which
//! the vertical frequency of the mode under study is 2π, so that loops
//! invariant under `G_{r/s}(N,k,η)` have period `s`.

pub mod error;
pub mod minimize;
pub mod ngon;
pub mod path;
pub mod spectrum;
pub mod symmetry;
pub mod torsion;

pub use error::{Error, Result};
pub use ngon::{Configuration, NGonSystem, RotatingFrame};
pub use path::{FourierLoop, LoopPath, Vec3};
pub use symmetry::{GroupElement, GroupSpec};
