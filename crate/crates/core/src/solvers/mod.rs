//! Exact optimization: optimal makespan, minimal potential, the worst
//! makespan over every potential minimizer, and the ratio between the two.

mod bnb;
mod brute;
mod lpt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Allocation, Instance, Potential};
use crate::ratio::Ratio;

pub use bnb::{MakespanOptimum, PotentialLevelSet};
pub use brute::{brute_force, brute_force_with_cap, for_each_assignment, BruteForceResult, DEFAULT_BRUTE_FORCE_CAP};
pub use lpt::lpt;

pub const DEFAULT_NODE_LIMIT: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Makespan,
    Potential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Search nodes allowed per solve, summed over all phases.
    pub node_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub opt_makespan: u64,
    pub min_potential: Potential,
    pub worst_po_makespan: u64,
    pub opt_witness: Allocation,
    pub worst_po_witness: Allocation,
    pub nodes_explored: u64,
    pub po_count_up_to_symmetry: u64,
}

impl SolveReport {
    /// `worst_po_makespan / opt_makespan`.
    pub fn irse(&self) -> Result<Ratio> {
        if self.opt_makespan == 0 {
            return Err(Error::InvalidInstance("irse is undefined without jobs".into()));
        }
        Ratio::new(self.worst_po_makespan, self.opt_makespan)
    }
}

pub fn optimal_makespan(instance: &Instance) -> Result<MakespanOptimum> {
    optimal_makespan_with(instance, &SolverConfig::default())
}

pub fn optimal_makespan_with(instance: &Instance, config: &SolverConfig) -> Result<MakespanOptimum> {
    bnb::solve_makespan(instance, 0, config.node_limit)
}

pub fn potential_level_set(instance: &Instance, config: &SolverConfig) -> Result<PotentialLevelSet> {
    bnb::solve_potential(instance, 0, config.node_limit)
}

/// Full report: optimal makespan plus the potential minimizers' level set.
pub fn potential_optimum(instance: &Instance) -> Result<SolveReport> {
    solve(instance, &SolverConfig::default())
}

pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolveReport> {
    let makespan = bnb::solve_makespan(instance, 0, config.node_limit)?;
    let level = bnb::solve_potential(instance, makespan.nodes_explored, config.node_limit)?;
    Ok(SolveReport {
        opt_makespan: makespan.value,
        min_potential: level.min_potential,
        worst_po_makespan: level.worst_makespan,
        opt_witness: makespan.witness,
        worst_po_witness: level.worst_witness,
        nodes_explored: level.nodes_explored,
        po_count_up_to_symmetry: level.classes,
    })
}

pub fn irse(instance: &Instance) -> Result<Ratio> {
    irse_with(instance, &SolverConfig::default())
}

pub fn irse_with(instance: &Instance, config: &SolverConfig) -> Result<Ratio> {
    if instance.is_empty() {
        return Err(Error::InvalidInstance("irse is undefined without jobs".into()));
    }
    solve(instance, config)?.irse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{is_nash, loads};

    fn inst(m: usize, w: &[u64]) -> Instance {
        Instance::new(m, w.to_vec()).unwrap()
    }

    #[test]
    fn family_k3_report() {
        let i = inst(4, &[7, 5, 5, 4, 4, 3, 3, 3]);
        let r = potential_optimum(&i).unwrap();
        assert_eq!(r.opt_makespan, 9);
        assert_eq!(r.min_potential, 292);
        assert_eq!(r.worst_po_makespan, 10);
        assert_eq!(loads(&i, &r.opt_witness).unwrap().makespan(), 9);
        let worst = loads(&i, &r.worst_po_witness).unwrap();
        assert_eq!((worst.makespan(), worst.potential()), (10, 292));
        assert!(is_nash(&i, &r.worst_po_witness).unwrap());
        assert_eq!(r.irse().unwrap(), Ratio::new(10, 9).unwrap());
    }

    #[test]
    fn small_examples() {
        let r = potential_optimum(&inst(2, &[1, 1])).unwrap();
        assert_eq!((r.min_potential, r.worst_po_makespan), (2, 1));
        let r = potential_optimum(&inst(3, &[9, 6, 6, 4, 4, 4])).unwrap();
        assert_eq!((r.opt_makespan, r.min_potential, r.worst_po_makespan), (12, 369, 13));
        assert_eq!(irse(&inst(3, &[5])).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn irse_rejects_empty() {
        assert!(matches!(irse(&inst(3, &[])), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn witnesses_are_lexicographically_smallest() {
        let i = inst(2, &[2, 1, 1]);
        let bf = brute_force(&i, Objective::Makespan).unwrap();
        let bb = optimal_makespan(&i).unwrap();
        assert_eq!(bb.witness, bf.witnesses[0]);
        let bf = brute_force(&i, Objective::Potential).unwrap();
        let level = potential_level_set(&i, &SolverConfig::default()).unwrap();
        assert_eq!(level.min_witness, bf.witnesses[0]);
    }

    #[test]
    fn node_limit_counts_across_phases() {
        let i = inst(4, &[7, 5, 5, 4, 4, 3, 3, 3]);
        let full = potential_optimum(&i).unwrap();
        let tight = SolverConfig {
            node_limit: full.nodes_explored - 1,
        };
        assert!(matches!(solve(&i, &tight), Err(Error::ResourceExhausted { .. })));
        let exact = SolverConfig {
            node_limit: full.nodes_explored,
        };
        assert_eq!(solve(&i, &exact).unwrap(), full);
    }
}
