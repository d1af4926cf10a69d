//! First-improvement local search on the potential.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{move_delta_loads, swap_delta, Allocation, BundleSplit, Instance, Potential};

/// Which rearrangements local search may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    /// Move one job to another machine.
    pub single_move: bool,
    /// Exchange two jobs on different machines.
    pub pair_swap: bool,
    /// Exchange bundles of up to this many jobs between two machines
    /// (an empty side turns the swap into a bundle move). 0 disables.
    pub bundle_swap_max: usize,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        NeighborhoodSpec {
            single_move: true,
            pair_swap: true,
            bundle_swap_max: 2,
        }
    }
}

impl NeighborhoodSpec {
    pub fn single_moves() -> Self {
        NeighborhoodSpec {
            single_move: true,
            pair_swap: false,
            bundle_swap_max: 0,
        }
    }

    pub fn bundles(b: usize) -> Self {
        NeighborhoodSpec {
            single_move: false,
            pair_swap: false,
            bundle_swap_max: b,
        }
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if !self.single_move && !self.pair_swap && self.bundle_swap_max == 0 {
            return Err(Error::InvalidParameter("no neighborhood enabled".into()));
        }
        if self.bundle_swap_max > instance.n() {
            return Err(Error::InvalidParameter(format!(
                "bundle size {} exceeds job count {}",
                self.bundle_swap_max,
                instance.n()
            )));
        }
        Ok(())
    }
}

/// A rearrangement of jobs between machines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Single {
        job: usize,
        target: usize,
    },
    Pair {
        a: usize,
        b: usize,
    },
    Bundle {
        machine_i: usize,
        bundle_i: Vec<usize>,
        machine_j: usize,
        bundle_j: Vec<usize>,
    },
}

impl Move {
    pub fn apply(&self, alloc: &mut Allocation) {
        match self {
            Move::Single { job, target } => alloc.set(*job, *target),
            Move::Pair { a, b } => {
                let (ma, mb) = (alloc.machine_of(*a), alloc.machine_of(*b));
                alloc.set(*a, mb);
                alloc.set(*b, ma);
            }
            Move::Bundle {
                machine_i,
                bundle_i,
                machine_j,
                bundle_j,
            } => {
                for &job in bundle_i {
                    alloc.set(job, *machine_j);
                }
                for &job in bundle_j {
                    alloc.set(job, *machine_i);
                }
            }
        }
    }
}

/// First strictly improving move in scan order: single moves by (job,
/// target), then pair swaps by (a, b), then bundle swaps by machine pair and
/// bundle size and combination order.
pub fn first_improving_move(
    instance: &Instance,
    alloc: &Allocation,
    spec: &NeighborhoodSpec,
) -> Result<Option<(Move, Potential)>> {
    let loads = alloc.machine_loads(instance)?;
    let (n, m) = (instance.n(), instance.m());
    let w = instance.weights();

    if spec.single_move {
        for (job, &weight) in w.iter().enumerate() {
            let source = alloc.machine_of(job);
            for target in (0..m).filter(|&t| t != source) {
                let delta = move_delta_loads(loads[source], loads[target], weight);
                if delta < 0 {
                    return Ok(Some((Move::Single { job, target }, delta)));
                }
            }
        }
    }

    if spec.pair_swap {
        for a in 0..n {
            for b in a + 1..n {
                let (ma, mb) = (alloc.machine_of(a), alloc.machine_of(b));
                if ma == mb || w[a] == w[b] {
                    continue;
                }
                let delta = swap_delta(&BundleSplit {
                    machine_i: ma,
                    machine_j: mb,
                    x_i: w[a],
                    y_i: loads[ma] - w[a],
                    x_j: w[b],
                    y_j: loads[mb] - w[b],
                });
                if delta < 0 {
                    return Ok(Some((Move::Pair { a, b }, delta)));
                }
            }
        }
    }

    let b = spec.bundle_swap_max;
    if b > 0 {
        let jobs: Vec<Vec<usize>> = (0..m).map(|i| alloc.jobs_on(i)).collect();
        for mi in 0..m {
            for mj in mi + 1..m {
                let subsets_i = subsets_up_to(&jobs[mi], b);
                let subsets_j = subsets_up_to(&jobs[mj], b);
                for si in &subsets_i {
                    let x_i: u64 = si.iter().map(|&j| w[j]).sum();
                    for sj in &subsets_j {
                        if si.is_empty() && sj.is_empty() {
                            continue;
                        }
                        let x_j: u64 = sj.iter().map(|&j| w[j]).sum();
                        let delta = swap_delta(&BundleSplit {
                            machine_i: mi,
                            machine_j: mj,
                            x_i,
                            y_i: loads[mi] - x_i,
                            x_j,
                            y_j: loads[mj] - x_j,
                        });
                        if delta < 0 {
                            let mv = Move::Bundle {
                                machine_i: mi,
                                bundle_i: si.clone(),
                                machine_j: mj,
                                bundle_j: sj.clone(),
                            };
                            return Ok(Some((mv, delta)));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

fn subsets_up_to(jobs: &[usize], b: usize) -> Vec<Vec<usize>> {
    (0..=b.min(jobs.len()))
        .flat_map(|size| jobs.iter().copied().combinations(size))
        .collect()
}

/// Result of a descent with the potential after every accepted move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Descent {
    pub allocation: Allocation,
    /// Potential at the start, then after each accepted move.
    pub potentials: Vec<Potential>,
}

/// Applies first-improving moves until none of the enabled neighborhoods
/// contains one. Each move lowers the integer potential, so this terminates.
pub fn local_search(instance: &Instance, start: &Allocation, spec: &NeighborhoodSpec) -> Result<Allocation> {
    Ok(local_search_trace(instance, start, spec)?.allocation)
}

pub fn local_search_trace(instance: &Instance, start: &Allocation, spec: &NeighborhoodSpec) -> Result<Descent> {
    spec.validate(instance)?;
    let mut alloc = start.clone();
    let mut potential: Potential = alloc
        .machine_loads(instance)?
        .iter()
        .map(|&l| (l as i128) * (l as i128))
        .sum();
    let mut potentials = vec![potential];
    while let Some((mv, delta)) = first_improving_move(instance, &alloc, spec)? {
        mv.apply(&mut alloc);
        potential += delta;
        potentials.push(potential);
    }
    Ok(Descent {
        allocation: alloc,
        potentials,
    })
}
