use irse_core::game::{is_nash, loads, move_delta, swap_delta, Allocation, BundleSplit, Instance};
use irse_core::solvers::{brute_force, Objective};
use proptest::prelude::*;

fn instance_and_alloc(max_n: usize, max_m: usize, max_w: u64) -> impl Strategy<Value = (Instance, Allocation)> {
    (1..=max_m, prop::collection::vec(1..=max_w, 1..=max_n)).prop_flat_map(|(m, weights)| {
        let n = weights.len();
        let instance = Instance::new(m, weights).unwrap();
        (Just(instance), prop::collection::vec(0..m, n).prop_map(Allocation::new))
    })
}

fn recompute(instance: &Instance, alloc: &Allocation) -> i128 {
    let mut per_machine = vec![0i128; instance.m()];
    for (job, &i) in alloc.as_slice().iter().enumerate() {
        per_machine[i] += instance.weight(job) as i128;
    }
    per_machine.iter().map(|l| l * l).sum()
}

proptest! {
    #[test]
    fn potential_matches_scratch((instance, alloc) in instance_and_alloc(10, 5, 50)) {
        let p = loads(&instance, &alloc).unwrap();
        prop_assert_eq!(p.potential(), recompute(&instance, &alloc));
        prop_assert_eq!(p.total(), instance.total_weight());
        prop_assert_eq!(p.loads().len(), instance.m());
        prop_assert!(p.loads().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn move_delta_matches_recomputation((instance, alloc) in instance_and_alloc(8, 4, 30)) {
        let before = recompute(&instance, &alloc);
        for job in 0..instance.n() {
            for target in 0..instance.m() {
                if target == alloc.machine_of(job) {
                    prop_assert!(move_delta(&instance, &alloc, job, target).is_err());
                    continue;
                }
                let mut after = alloc.clone();
                after.set(job, target);
                let delta = move_delta(&instance, &alloc, job, target).unwrap();
                prop_assert_eq!(delta, recompute(&instance, &after) - before);
            }
        }
    }

    #[test]
    fn nash_iff_no_improving_move((instance, alloc) in instance_and_alloc(8, 4, 20)) {
        let mut least = i128::MAX;
        for job in 0..instance.n() {
            for target in (0..instance.m()).filter(|&t| t != alloc.machine_of(job)) {
                least = least.min(move_delta(&instance, &alloc, job, target).unwrap());
            }
        }
        let no_improving = least == i128::MAX || least >= 0;
        prop_assert_eq!(is_nash(&instance, &alloc).unwrap(), no_improving);
    }

    #[test]
    fn relabeling_keeps_makespan_and_potential(
        (instance, alloc) in instance_and_alloc(8, 5, 20),
        seed in any::<u64>(),
    ) {
        // a permutation of machine labels derived from the seed
        let mut perm: Vec<usize> = (0..instance.m()).collect();
        let mut s = seed;
        for i in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let relabeled = Allocation::new(alloc.as_slice().iter().map(|&i| perm[i]).collect());
        let a = loads(&instance, &alloc).unwrap();
        let b = loads(&instance, &relabeled).unwrap();
        prop_assert_eq!(a.makespan(), b.makespan());
        prop_assert_eq!(a.potential(), b.potential());
        prop_assert_eq!(alloc.relabeled(), relabeled.relabeled());
    }

    #[test]
    fn scaling_multiplies_loads((instance, alloc) in instance_and_alloc(8, 4, 20), c in 1u64..7) {
        let scaled = instance.scaled(c).unwrap();
        let a = loads(&instance, &alloc).unwrap();
        let b = loads(&scaled, &alloc).unwrap();
        prop_assert_eq!(b.makespan(), c * a.makespan());
        prop_assert_eq!(b.potential(), (c * c) as i128 * a.potential());
        prop_assert!(b.loads().iter().zip(a.loads()).all(|(x, y)| *x == c * y));
    }

    #[test]
    fn scaling_keeps_optimal_sets((instance, _) in instance_and_alloc(6, 3, 9), c in 2u64..5) {
        let scaled = instance.scaled(c).unwrap();
        for objective in [Objective::Makespan, Objective::Potential] {
            let a = brute_force(&instance, objective).unwrap();
            let b = brute_force(&scaled, objective).unwrap();
            prop_assert_eq!(a.witnesses, b.witnesses);
        }
        prop_assert_eq!(scaled.canonicalize(), instance.canonicalize());
    }

    #[test]
    fn swap_delta_matches_recomputation((instance, alloc) in instance_and_alloc(8, 3, 15), mi in 0usize..3, mj in 0usize..3, mask in any::<u16>()) {
        let m = instance.m();
        let (mi, mj) = (mi % m, mj % m);
        prop_assume!(mi != mj);
        // the mask picks which jobs of the two machines are in the bundles
        let bundle_i: Vec<usize> = alloc.jobs_on(mi).into_iter().filter(|j| mask >> j & 1 == 1).collect();
        let bundle_j: Vec<usize> = alloc.jobs_on(mj).into_iter().filter(|j| mask >> (j + 8) & 1 == 1).collect();
        let split = BundleSplit::from_bundles(&instance, &alloc, mi, &bundle_i, mj, &bundle_j).unwrap();
        let mut after = alloc.clone();
        for &j in &bundle_i { after.set(j, mj); }
        for &j in &bundle_j { after.set(j, mi); }
        prop_assert_eq!(swap_delta(&split), recompute(&instance, &after) - recompute(&instance, &alloc));
        let improving = (split.x_i as i128 - split.x_j as i128).signum() * (split.y_i as i128 - split.y_j as i128).signum() == 1;
        prop_assert_eq!(swap_delta(&split) < 0, improving);
    }

    #[test]
    fn canonicalize_divides_gcd(weights in prop::collection::vec(1u64..40, 1..8), m in 1usize..5, c in 1u64..6) {
        let scaled: Vec<u64> = weights.iter().map(|w| w * c).collect();
        let canon = Instance::new(m, scaled).unwrap().canonicalize();
        prop_assert!(canon.is_canonical());
        prop_assert_eq!(canon.m(), m);
        prop_assert_eq!(canon, Instance::new(m, weights).unwrap().canonicalize());
    }
}
