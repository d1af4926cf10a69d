//! Equilibrium selection: potential-descending local search and logit
//! dynamics with an exact stationary distribution.

mod local;
mod logit;
mod stationary;

pub use local::{first_improving_move, local_search, local_search_trace, Descent, Move, NeighborhoodSpec};
pub use logit::{
    logit_step, placement_probabilities, round_significant, simulate, simulate_replicas, DynamicsConfig, InitialState,
    LogitChain, TraceStats, ASSIGNMENT_COUNT_CAP,
};
pub use stationary::{exact_stationary, transition_rows, StationaryDistribution, STATIONARY_STATE_CAP};
