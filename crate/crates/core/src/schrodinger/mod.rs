//! Potentials and the Neumann solution `ξ(x, z)` of `−ξ'' + Vξ = zξ`.

mod picard;
mod potential;
mod solver;

pub use picard::{greens, xi_picard, xi_picard_series, PicardSum, DEFAULT_PICARD_DEPTH};
pub use potential::{parse_number, Potential, PotentialKind};
pub use solver::{grid_for, xi_at, xi_at_real, xi_solve, Field, WaveField};

#[allow(unused_imports)]
pub(crate) use solver::{shoot, tabulate};
