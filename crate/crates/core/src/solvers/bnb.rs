//! Depth-first branch-and-bound over symmetry-broken assignment vectors.
//!
//! Jobs are placed in nonincreasing weight order. A job may go to any machine
//! already in use or to the first unused one (restricted growth), and a job
//! whose weight equals its predecessor's may not go to a lower machine index
//! than that predecessor. The lexicographically smallest vector in every
//! class of equivalent allocations (machine relabeling plus permutation of
//! equal-weight jobs) satisfies both rules, so the searched space contains
//! one representative of every class. Children are visited in increasing
//! machine index, which makes the DFS order lexicographic: the first witness
//! reached for a value is the lexicographically smallest.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::game::{Allocation, Instance, Potential};

use super::lpt::lpt;

struct Tree<'a> {
    weights: &'a [u64],
    m: usize,
    assign: Vec<usize>,
    loads: Vec<u64>,
    opened: usize,
    remaining: Vec<u64>,
    nodes: u64,
    limit: u64,
    scratch: Vec<u64>,
}

impl<'a> Tree<'a> {
    fn new(instance: &'a Instance, nodes: u64, limit: u64) -> Self {
        let weights = instance.weights();
        let mut remaining = vec![0u64; weights.len() + 1];
        for d in (0..weights.len()).rev() {
            remaining[d] = remaining[d + 1] + weights[d];
        }
        Tree {
            weights,
            m: instance.m(),
            assign: vec![0; weights.len()],
            loads: vec![0; instance.m()],
            opened: 0,
            remaining,
            nodes,
            limit,
            scratch: Vec::with_capacity(instance.m()),
        }
    }

    fn n(&self) -> usize {
        self.weights.len()
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Error::ResourceExhausted {
                nodes: self.nodes,
                limit: self.limit,
            });
        }
        Ok(())
    }

    /// Machines job `depth` may be placed on.
    fn branches(&self, depth: usize) -> std::ops::RangeInclusive<usize> {
        let lo = if depth > 0 && self.weights[depth] == self.weights[depth - 1] {
            self.assign[depth - 1]
        } else {
            0
        };
        lo..=self.opened.min(self.m - 1)
    }

    fn place(&mut self, depth: usize, machine: usize) -> usize {
        let opened = self.opened;
        self.assign[depth] = machine;
        self.loads[machine] += self.weights[depth];
        if machine == self.opened {
            self.opened += 1;
        }
        opened
    }

    fn unplace(&mut self, depth: usize, machine: usize, opened: usize) {
        self.loads[machine] -= self.weights[depth];
        self.opened = opened;
    }

    fn potential(&self) -> Potential {
        self.loads.iter().map(|&l| (l as i128) * (l as i128)).sum()
    }

    /// Least potential reachable by spreading the remaining weight in integer
    /// units over the machines. Whole jobs can only do worse.
    fn water_fill_bound(&mut self, remaining: u64) -> Potential {
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.loads);
        water_fill(&mut self.scratch, remaining)
    }

    fn class_key(&self) -> Vec<Vec<u64>> {
        let mut machines = vec![Vec::new(); self.opened];
        for (job, &i) in self.assign.iter().enumerate() {
            machines[i].push(self.weights[job]);
        }
        machines.sort_unstable();
        machines
    }
}

/// Minimum of `Σ (l_j + d_j)²` over nonnegative integers `d_j` summing to
/// `remaining`. Sorts `loads` in place.
pub(crate) fn water_fill(loads: &mut [u64], remaining: u64) -> Potential {
    loads.sort_unstable();
    let m = loads.len();
    let sq = |v: u64| (v as i128) * (v as i128);
    if remaining == 0 {
        return loads.iter().map(|&l| sq(l)).sum();
    }
    // raise the lowest `p` machines to a common level
    let mut prefix: u64 = 0;
    let mut p = 0;
    while p < m {
        prefix += loads[p];
        p += 1;
        if p == m || (loads[p] as u128) * (p as u128) >= (prefix + remaining) as u128 {
            break;
        }
    }
    let total = prefix + remaining;
    let level = total / p as u64;
    let extra = total % p as u64;
    let filled = (extra as i128) * sq(level + 1) + ((p as u64 - extra) as i128) * sq(level);
    filled + loads[p..].iter().map(|&l| sq(l)).sum::<i128>()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MakespanOptimum {
    pub value: u64,
    pub witness: Allocation,
    pub nodes_explored: u64,
}

struct MakespanIncumbent {
    value: u64,
    witness: Option<Vec<usize>>,
    lower_bound: u64,
}

impl MakespanIncumbent {
    fn done(&self) -> bool {
        self.witness.is_some() && self.value == self.lower_bound
    }

    /// Largest load a new leaf may have and still be recorded.
    fn cap(&self) -> u64 {
        if self.witness.is_some() {
            self.value - 1
        } else {
            self.value
        }
    }
}

pub(crate) fn solve_makespan(instance: &Instance, nodes: u64, limit: u64) -> Result<MakespanOptimum> {
    if instance.is_empty() {
        return Ok(MakespanOptimum {
            value: 0,
            witness: Allocation::new(vec![]),
            nodes_explored: nodes,
        });
    }
    let greedy = lpt(instance);
    let greedy_value = greedy.machine_loads(instance)?.into_iter().max().unwrap_or(0);
    let mut best = MakespanIncumbent {
        value: greedy_value,
        witness: None,
        lower_bound: instance.makespan_lower_bound(),
    };
    let mut tree = Tree::new(instance, nodes, limit);
    makespan_dfs(&mut tree, 0, 0, &mut best)?;
    let witness = best
        .witness
        .expect("the canonical form of the greedy allocation lies in the search space");
    Ok(MakespanOptimum {
        value: best.value,
        witness: Allocation::new(witness),
        nodes_explored: tree.nodes,
    })
}

fn makespan_dfs(tree: &mut Tree, depth: usize, current_max: u64, best: &mut MakespanIncumbent) -> Result<()> {
    tree.tick()?;
    if depth == tree.n() {
        if current_max <= best.cap() {
            best.value = current_max;
            best.witness = Some(tree.assign.clone());
        }
        return Ok(());
    }
    let cap = best.cap();
    // the remaining jobs must fit into the room left under the cap
    let smallest = tree.weights[tree.n() - 1];
    let room: u64 = tree
        .loads
        .iter()
        .map(|&l| cap.saturating_sub(l))
        .filter(|&r| r >= smallest)
        .sum();
    if room < tree.remaining[depth] {
        return Ok(());
    }
    let w = tree.weights[depth];
    for machine in tree.branches(depth) {
        if tree.loads[machine] + w > best.cap() {
            continue;
        }
        let opened = tree.place(depth, machine);
        let next_max = current_max.max(tree.loads[machine]);
        let result = makespan_dfs(tree, depth + 1, next_max, best);
        tree.unplace(depth, machine, opened);
        result?;
        if best.done() {
            break;
        }
    }
    Ok(())
}

/// The set of potential minimizers, summarized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialLevelSet {
    pub min_potential: Potential,
    /// Lexicographically smallest potential minimizer.
    pub min_witness: Allocation,
    pub worst_makespan: u64,
    /// Lexicographically smallest minimizer of makespan `worst_makespan`.
    pub worst_witness: Allocation,
    /// Minimizers counted up to machine relabeling and equal-weight job swaps.
    pub classes: u64,
    pub nodes_explored: u64,
}

struct PotentialIncumbent {
    value: Potential,
    witness: Option<Vec<usize>>,
    lower_bound: Potential,
}

impl PotentialIncumbent {
    fn prunes(&self, bound: Potential) -> bool {
        bound > self.value || (bound == self.value && self.witness.is_some())
    }
}

pub(crate) fn solve_potential(instance: &Instance, nodes: u64, limit: u64) -> Result<PotentialLevelSet> {
    if instance.is_empty() {
        return Ok(PotentialLevelSet {
            min_potential: 0,
            min_witness: Allocation::new(vec![]),
            worst_makespan: 0,
            worst_witness: Allocation::new(vec![]),
            classes: 1,
            nodes_explored: nodes,
        });
    }
    let greedy = lpt(instance);
    let greedy_value: Potential = greedy
        .machine_loads(instance)?
        .iter()
        .map(|&l| (l as i128) * (l as i128))
        .sum();

    // phase 1: the minimum and its lexicographically smallest witness
    let mut tree = Tree::new(instance, nodes, limit);
    let root_bound = tree.water_fill_bound(instance.total_weight());
    let mut best = PotentialIncumbent {
        value: greedy_value,
        witness: None,
        lower_bound: root_bound,
    };
    potential_dfs(&mut tree, 0, &mut best)?;
    let min_potential = best.value;
    let min_witness = best
        .witness
        .expect("the canonical form of the greedy allocation lies in the search space");

    // phase 2: every minimizer, keeping the worst makespan
    let mut level = LevelSetScan {
        target: min_potential,
        worst: None,
        classes: HashSet::new(),
    };
    let mut tree = Tree::new(instance, tree.nodes, limit);
    level_set_dfs(&mut tree, 0, 0, &mut level)?;
    let (worst_makespan, worst_witness) = level.worst.expect("phase 1 found a minimizer");
    Ok(PotentialLevelSet {
        min_potential,
        min_witness: Allocation::new(min_witness),
        worst_makespan,
        worst_witness: Allocation::new(worst_witness),
        classes: level.classes.len() as u64,
        nodes_explored: tree.nodes,
    })
}

fn potential_dfs(tree: &mut Tree, depth: usize, best: &mut PotentialIncumbent) -> Result<()> {
    tree.tick()?;
    if depth == tree.n() {
        let value = tree.potential();
        if !best.prunes(value) {
            best.value = value;
            best.witness = Some(tree.assign.clone());
        }
        return Ok(());
    }
    for machine in tree.branches(depth) {
        let opened = tree.place(depth, machine);
        let bound = tree.water_fill_bound(tree.remaining[depth + 1]);
        let result = if best.prunes(bound) {
            Ok(())
        } else {
            potential_dfs(tree, depth + 1, best)
        };
        tree.unplace(depth, machine, opened);
        result?;
        if best.witness.is_some() && best.value == best.lower_bound {
            break;
        }
    }
    Ok(())
}

struct LevelSetScan {
    target: Potential,
    worst: Option<(u64, Vec<usize>)>,
    classes: HashSet<Vec<Vec<u64>>>,
}

fn level_set_dfs(tree: &mut Tree, depth: usize, current_max: u64, scan: &mut LevelSetScan) -> Result<()> {
    tree.tick()?;
    if depth == tree.n() {
        debug_assert_eq!(tree.potential(), scan.target);
        if scan.worst.as_ref().is_none_or(|(v, _)| current_max > *v) {
            scan.worst = Some((current_max, tree.assign.clone()));
        }
        scan.classes.insert(tree.class_key());
        return Ok(());
    }
    for machine in tree.branches(depth) {
        let opened = tree.place(depth, machine);
        let bound = tree.water_fill_bound(tree.remaining[depth + 1]);
        let next_max = current_max.max(tree.loads[machine]);
        // ties must survive: pruning on >= would lose minimizers
        let result = if bound > scan.target {
            Ok(())
        } else {
            level_set_dfs(tree, depth + 1, next_max, scan)
        };
        tree.unplace(depth, machine, opened);
        result?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: usize, w: &[u64]) -> Instance {
        Instance::new(m, w.to_vec()).unwrap()
    }

    /// Brute-force minimum of Σ(l+d)² over integer d ≥ 0 with Σd = r.
    fn water_fill_oracle(loads: &[u64], r: u64) -> Potential {
        fn rec(loads: &mut Vec<u64>, i: usize, r: u64) -> Potential {
            if i + 1 == loads.len() {
                loads[i] += r;
                let v = loads.iter().map(|&l| (l as i128) * (l as i128)).sum();
                loads[i] -= r;
                return v;
            }
            (0..=r)
                .map(|d| {
                    loads[i] += d;
                    let v = rec(loads, i + 1, r - d);
                    loads[i] -= d;
                    v
                })
                .min()
                .unwrap()
        }
        rec(&mut loads.to_vec(), 0, r)
    }

    #[test]
    fn water_fill_matches_oracle() {
        let cases: &[(&[u64], u64)] = &[
            (&[0, 0, 0], 7),
            (&[5, 1, 0], 3),
            (&[5, 1, 0], 12),
            (&[10, 8, 8, 8], 0),
            (&[4], 9),
            (&[3, 3, 9, 0], 5),
            (&[2, 7], 6),
        ];
        for &(loads, r) in cases {
            let mut buf = loads.to_vec();
            assert_eq!(water_fill(&mut buf, r), water_fill_oracle(loads, r), "{loads:?} {r}");
        }
    }

    #[test]
    fn branches_respect_symmetry_rules() {
        let i = inst(3, &[2, 2, 1]);
        let mut tree = Tree::new(&i, 0, u64::MAX);
        assert_eq!(tree.branches(0), 0..=0);
        let o = tree.place(0, 0);
        assert_eq!(o, 0);
        assert_eq!(tree.branches(1), 0..=1);
        tree.place(1, 1);
        // equal weight predecessor on machine 1 does not constrain weight 1
        assert_eq!(tree.branches(2), 0..=2);
    }

    #[test]
    fn makespan_examples() {
        assert_eq!(
            solve_makespan(&inst(4, &[7, 5, 5, 4, 4, 3, 3, 3]), 0, u64::MAX)
                .unwrap()
                .value,
            9
        );
        assert_eq!(solve_makespan(&inst(2, &[4, 3, 3, 2]), 0, u64::MAX).unwrap().value, 6);
        assert_eq!(solve_makespan(&inst(3, &[5]), 0, u64::MAX).unwrap().value, 5);
    }

    #[test]
    fn level_set_counts_classes() {
        // {1,1} on 2 machines: split is the only class
        let r = solve_potential(&inst(2, &[1, 1]), 0, u64::MAX).unwrap();
        assert_eq!((r.min_potential, r.worst_makespan, r.classes), (2, 1, 1));
        // four unit jobs on three machines: loads {2,1,1}, one class
        let r = solve_potential(&inst(3, &[1, 1, 1, 1]), 0, u64::MAX).unwrap();
        assert_eq!((r.min_potential, r.classes), (6, 1));
        // [3,3,2,2,2] on 2 machines: {3,3} | {2,2,2} and {3,2}... loads 6,6 only via {3,3},{2,2,2}
        let r = solve_potential(&inst(2, &[3, 3, 2, 2, 2]), 0, u64::MAX).unwrap();
        assert_eq!((r.min_potential, r.worst_makespan, r.classes), (72, 6, 1));
    }

    #[test]
    fn node_limit_is_reported() {
        let i = inst(4, &[7, 5, 5, 4, 4, 3, 3, 3]);
        assert!(matches!(
            solve_potential(&i, 0, 10),
            Err(Error::ResourceExhausted { limit: 10, .. })
        ));
    }
}
