//! Travelling waves and periodic homogenization for curvature-driven flame
//! fronts propagating through striated media.
//!
//! The model couples a stationary advection–diffusion problem for the
//! temperature `u` below a periodic front `x = v(y)` with the front law
//!
//! ```text
//! −c + R(y, u)·√(1 + v_y²) = μ·v_yy / (1 + v_y²)
//! ```
//!
//! Modules, bottom-up:
//!
//! * [`medium`]: layered coefficient fields `a, b, g`, combustion rates and
//!   their standing assumptions.
//! * [`front`]: the periodic front equation for a frozen rate `H(y)`.
//! * [`temperature`]: the temperature problem on the strip below a given front.
//! * [`wave`]: fixed-point coupling of the two into travelling waves.
//! * [`homog`]: homogenized speeds, correctors, the speed curve `c⁰(λ)`,
//!   second-order profiles and ε-sweeps.
//! * [`cli`]: the command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod front;
pub mod grid;
pub mod homog;
pub mod linalg;
pub mod medium;
pub mod par;
pub mod temperature;
pub mod wave;

pub use error::{Error, Result};
pub use front::{solve_front, FrontConfig, FrontProfile, FrontSolution};
pub use grid::PeriodicGrid;
pub use medium::{eval_rate, CombustionRate, MediumSpec, PeriodicField};
pub use par::Execution;
pub use temperature::{solve_temperature, MeshConfig, TemperatureField};
pub use wave::{solve_travelling_wave, FixedPointConfig, TravellingWave};
