//! Periodic orbits of the equal-mass N-body problem in rotating frames:
//! high-order integration, symmetric shooting, and arclength continuation
//! of the Lyapunov families classified by `unchained_core`.

pub mod dop853;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod shooting;

pub use error::{Error, Result};
pub use family::{continue_family, Controls, Direction, Family, FamilyRecord};
pub use shooting::{shoot_symmetric, PeriodicOrbit, Pin, Tolerances};
