use crate::game::{Allocation, Instance};

/// Longest-processing-time greedy: jobs in nonincreasing weight order, each to
/// the currently least-loaded machine (lowest index on ties).
pub fn lpt(instance: &Instance) -> Allocation {
    let mut loads = vec![0u64; instance.m()];
    let assignment = instance
        .weights()
        .iter()
        .map(|&w| {
            let (target, _) = loads
                .iter()
                .enumerate()
                .min_by_key(|&(i, &l)| (l, i))
                .expect("at least one machine");
            loads[target] += w;
            target
        })
        .collect();
    Allocation::new(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::loads;

    #[test]
    fn greedy_on_family() {
        let i = Instance::new(4, vec![7, 5, 5, 4, 4, 3, 3, 3]).unwrap();
        let a = lpt(&i);
        assert_eq!(a.as_slice(), &[0, 1, 2, 3, 3, 1, 2, 0]);
        assert_eq!(loads(&i, &a).unwrap().loads(), &[10, 8, 8, 8]);
    }

    #[test]
    fn empty_instance() {
        let i = Instance::new(3, vec![]).unwrap();
        assert!(lpt(&i).is_empty());
    }
}
