//! Exhaustive enumeration of all `m^n` assignment vectors. Ground truth for
//! the branch-and-bound solvers; only usable on tiny instances.

use crate::error::{Error, Result};
use crate::game::{Allocation, Instance};

use super::Objective;

/// Default cap on `m^n`.
pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceResult {
    pub value: i128,
    /// Every optimal assignment vector, in lexicographic order.
    pub witnesses: Vec<Allocation>,
}

pub fn brute_force(instance: &Instance, objective: Objective) -> Result<BruteForceResult> {
    brute_force_with_cap(instance, objective, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_with_cap(instance: &Instance, objective: Objective, cap: u128) -> Result<BruteForceResult> {
    let mut best = i128::MAX;
    let mut witnesses = Vec::new();
    for_each_assignment(instance, cap, |assignment, loads| {
        let value = match objective {
            Objective::Makespan => loads.iter().copied().max().unwrap_or(0) as i128,
            Objective::Potential => loads.iter().map(|&l| (l as i128) * (l as i128)).sum(),
        };
        if value < best {
            best = value;
            witnesses.clear();
        }
        if value == best {
            witnesses.push(Allocation::new(assignment.to_vec()));
        }
    })?;
    Ok(BruteForceResult { value: best, witnesses })
}

/// Calls `visit(assignment, machine_loads)` for every assignment vector in
/// lexicographic order (job 0 most significant).
pub fn for_each_assignment<F>(instance: &Instance, cap: u128, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize], &[u64]),
{
    let states = instance.state_count();
    if states > cap {
        return Err(Error::OracleTooLarge { states, cap });
    }
    let (n, m) = (instance.n(), instance.m());
    let weights = instance.weights();
    let mut assignment = vec![0usize; n];
    let mut loads = vec![0u64; m];
    loads[0] = instance.total_weight();
    loop {
        visit(&assignment, &loads);
        // odometer increment from the last job
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            let w = weights[pos];
            loads[assignment[pos]] -= w;
            if assignment[pos] + 1 < m {
                assignment[pos] += 1;
                loads[assignment[pos]] += w;
                break;
            }
            assignment[pos] = 0;
            loads[0] += w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: usize, w: &[u64]) -> Instance {
        Instance::new(m, w.to_vec()).unwrap()
    }

    #[test]
    fn two_machines_makespan() {
        let r = brute_force(&inst(2, &[2, 1, 1]), Objective::Makespan).unwrap();
        assert_eq!(r.value, 2);
        assert!(r.witnesses.contains(&vec![0, 1, 1].into()));
        assert_eq!(r.witnesses.len(), 2);
    }

    #[test]
    fn family_potential() {
        let r = brute_force(&inst(4, &[7, 5, 5, 4, 4, 3, 3, 3]), Objective::Potential).unwrap();
        assert_eq!(r.value, 292);
    }

    #[test]
    fn single_machine() {
        let i = inst(1, &[5, 3]);
        let a = brute_force(&i, Objective::Makespan).unwrap();
        let b = brute_force(&i, Objective::Potential).unwrap();
        assert_eq!((a.value, a.witnesses.len()), (8, 1));
        assert_eq!((b.value, b.witnesses.len()), (64, 1));
    }

    #[test]
    fn enumerates_every_vector_once_in_order() {
        let i = inst(3, &[1, 1, 1]);
        let mut seen = Vec::new();
        for_each_assignment(&i, 100, |a, loads| {
            assert_eq!(loads.iter().sum::<u64>(), 3);
            seen.push(a.to_vec());
        })
        .unwrap();
        assert_eq!(seen.len(), 27);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cap_is_enforced() {
        let i = inst(10, &[1; 10]);
        assert!(matches!(
            brute_force_with_cap(&i, Objective::Makespan, 1000),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn empty_instance_has_one_state() {
        let r = brute_force(&inst(2, &[]), Objective::Potential).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.witnesses, vec![Allocation::new(vec![])]);
    }
}
