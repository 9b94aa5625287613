//! Min-max Euclidean multiple TSP (m³TSP) solver library.
//!
//! `k` salesmen start and end at a shared depot and must jointly visit a set
//! of cities in the plane; the objective is to minimize the longest tour
//! (the makespan). The main solver is a randomized approximation scheme
//! built from:
//!
//! - [`perturb`]: snapping cities to an integer grid with minimum separation
//!   8 inside a power-of-two bounding box of side `L`,
//! - [`dissection`]: an `(a, b)`-shifted quadtree with `m`-regular portal
//!   sets on square edges,
//! - [`scale`]: per-level geometric rounding ladders for tour lengths,
//! - [`dpcore`]: a portal-restricted dynamic program over per-square
//!   configurations `(A, B, C)` of portal multisets, entry-exit pairings and
//!   rounded lengths, with witness recording for tour reconstruction,
//! - [`solve`]: the end-to-end pipeline plus exact enumeration oracles,
//! - [`baseline`]: cheap heuristic solvers used for benchmark comparison.
//!
//! Everything is deterministic given seeds, shifts and parameters.

pub mod baseline;
pub mod bench;
pub mod dissection;
pub mod dpcore;
pub mod error;
pub mod geom;
pub mod instance;
pub mod perturb;
pub mod scale;
pub mod solve;

pub use error::{Error, Result};
pub use instance::{Instance, Solution, SolutionMeta};
pub use perturb::PerturbedInstance;
// pub use solve::SolveReport; // restored once solve lands
