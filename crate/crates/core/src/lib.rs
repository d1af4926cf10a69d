//! Exact toolkit for load balancing games on identical machines.
//!
//! * [`game`]: instances, allocations, loads, the squared-load potential and
//!   the Nash and bundle-swap conditions.
//! * [`solvers`]: optimal makespan, the full set of potential minimizers and
//!   the worst makespan among them, by branch-and-bound with brute-force
//!   oracles.
//! * [`dynamics`]: potential-descending local search and logit dynamics with
//!   an exact stationary distribution.
//! * [`generators`]: the `7/6` lower-bound family and seeded random instances.
//! * [`search`]: sweeps over instance spaces that check `1 ≤ IRSE ≤ 4/3` on
//!   every instance solved.

pub mod dynamics;
pub mod error;
pub mod game;
pub mod generators;
pub mod ratio;
pub mod search;
pub mod solvers;

pub use error::{Error, Result};
pub use game::{Allocation, BundleSplit, Instance, LoadProfile, Potential};
pub use ratio::Ratio;
pub use solvers::{Objective, SolveReport, SolverConfig};
