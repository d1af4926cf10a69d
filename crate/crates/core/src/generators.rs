//! Instance construction: the `7/6` lower-bound family and seeded random
//! instances.
//!
//! The family for parameter `k ≥ 2` has `m = k + 1` machines and `2k + 2`
//! jobs: three jobs of weight `k`, two jobs of each weight `k+1, …, 2k−1`, and
//! one big job of weight `(5k−1)/2`. For even `k` the big weight is a
//! half-integer, so every weight is doubled. Sorted nonincreasing, the job
//! indices are
//!
//! ```text
//! 0            big job
//! 2i−1, 2i     the two jobs of weight 2k−i, for i = 1..k−1
//! 2k−1..=2k+1  the three jobs of weight k
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Allocation, Instance};
use crate::ratio::Ratio;

/// Name of the seeded generator behind every random draw in this crate.
pub const GENERATOR_NAME: &str = "ChaCha8Rng";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub k: u64,
}

impl FamilyParams {
    pub fn new(k: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "family parameter k must be at least 2, got {k}"
            )));
        }
        // keeps m, n and the weights far from any overflow
        if k > 1 << 20 {
            return Err(Error::InvalidParameter(format!(
                "family parameter k = {k} is too large"
            )));
        }
        Ok(FamilyParams { k })
    }

    pub fn machines(&self) -> usize {
        self.k as usize + 1
    }

    pub fn jobs(&self) -> usize {
        2 * self.k as usize + 2
    }

    /// 1 for odd `k`, 2 for even `k`.
    pub fn scale(&self) -> u64 {
        if self.k % 2 == 1 {
            1
        } else {
            2
        }
    }
}

/// Values the family is built to exhibit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predictions {
    pub opt_makespan: u64,
    pub worst_po_makespan: u64,
    /// `(7m − 8)/(6m − 6)`.
    pub irse: Ratio,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBoundFamily {
    pub k: u64,
    /// Factor every weight was multiplied by (2 for even `k`).
    pub scale: u64,
    pub instance: Instance,
    pub predictions: Predictions,
}

pub fn lower_bound_family(k: u64) -> Result<LowerBoundFamily> {
    let params = FamilyParams::new(k)?;
    let scale = params.scale();
    // all weights times two, then divided by two again when k is odd
    let mut doubled = vec![5 * k - 1];
    for i in 1..k {
        doubled.extend([2 * (2 * k - i); 2]);
    }
    doubled.extend([2 * k; 3]);
    let weights = doubled.into_iter().map(|w| w * scale / 2).collect();
    let instance = Instance::new(params.machines(), weights)?;
    let m = params.machines() as u64;
    Ok(LowerBoundFamily {
        k,
        scale,
        instance,
        predictions: Predictions {
            opt_makespan: 3 * k * scale,
            worst_po_makespan: (7 * k - 1) * scale / 2,
            irse: Ratio::new(7 * m - 8, 6 * m - 6)?,
        },
    })
}

/// The two allocations exhibiting the bound, relabeled to restricted-growth
/// form.
///
/// `left`: the big job together with one weight-`k` job; the other jobs
/// paired as `(k+j, 2k−1−j)` for `j = 0..k−1`, one pair per machine, each of
/// load `3k−1`.
///
/// `right`: the big job alone; the three weight-`k` jobs together; pairs
/// `(2k−i, k+i)` for `i = 1..k−1`, each of load `3k`.
pub fn paper_allocations(k: u64) -> Result<(Allocation, Allocation)> {
    let params = FamilyParams::new(k)?;
    let k = k as usize;
    let n = params.jobs();
    // index of the first and second job of weight v, k < v < 2k
    let first = |v: usize| 2 * (2 * k - v) - 1;
    let second = |v: usize| 2 * (2 * k - v);

    let mut left = vec![usize::MAX; n];
    left[0] = 0;
    left[2 * k + 1] = 0;
    for j in 0..k {
        let machine = 1 + j;
        // weight k+j takes the first copy (index 2k−1 when j = 0)
        left[first(k + j)] = machine;
        // weight 2k−1−j takes the second copy (index 2k when j = k−1)
        left[second(2 * k - 1 - j)] = machine;
    }

    let mut right = vec![usize::MAX; n];
    right[0] = 0;
    for job in [2 * k - 1, 2 * k, 2 * k + 1] {
        right[job] = 1;
    }
    for i in 1..k {
        let machine = 1 + i;
        right[first(2 * k - i)] = machine;
        right[second(k + i)] = machine;
    }

    debug_assert!(left.iter().chain(&right).all(|&i| i <= k));
    Ok((Allocation::new(left).relabeled(), Allocation::new(right).relabeled()))
}

/// `n` weights drawn uniformly from `[1, w_max]`, sorted nonincreasing.
pub fn random_instance(n: usize, m: usize, w_max: u64, seed: u64) -> Result<Instance> {
    let mut rng = seeded_rng(seed);
    random_instance_from(&mut rng, n, m, w_max)
}

pub fn random_instance_from<R: Rng>(rng: &mut R, n: usize, m: usize, w_max: u64) -> Result<Instance> {
    if n == 0 || m == 0 || w_max == 0 {
        return Err(Error::InvalidParameter(format!(
            "random instance needs n, m, w_max ≥ 1 (got n={n}, m={m}, w_max={w_max})"
        )));
    }
    let weights = (0..n).map(|_| rng.random_range(1..=w_max)).collect();
    Instance::new(m, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{is_nash, loads};

    #[test]
    fn family_k3() {
        let f = lower_bound_family(3).unwrap();
        assert_eq!(f.instance, Instance::new(4, vec![7, 5, 5, 4, 4, 3, 3, 3]).unwrap());
        assert_eq!(f.scale, 1);
        assert_eq!(f.predictions.opt_makespan, 9);
        assert_eq!(f.predictions.worst_po_makespan, 10);
        assert_eq!(f.predictions.irse, Ratio::new(10, 9).unwrap());
    }

    #[test]
    fn family_k2_is_doubled() {
        let f = lower_bound_family(2).unwrap();
        assert_eq!(f.instance, Instance::new(3, vec![9, 6, 6, 4, 4, 4]).unwrap());
        assert_eq!(f.scale, 2);
        assert_eq!((f.predictions.opt_makespan, f.predictions.worst_po_makespan), (12, 13));
        assert_eq!(f.predictions.irse, Ratio::new(13, 12).unwrap());
    }

    #[test]
    fn family_k5() {
        let f = lower_bound_family(5).unwrap();
        assert_eq!(
            f.instance,
            Instance::new(6, vec![12, 9, 9, 8, 8, 7, 7, 6, 6, 5, 5, 5]).unwrap()
        );
        assert_eq!((f.predictions.opt_makespan, f.predictions.worst_po_makespan), (15, 17));
        assert_eq!(f.predictions.irse, Ratio::new(17, 15).unwrap());
    }

    #[test]
    fn rejects_small_k() {
        assert!(matches!(lower_bound_family(1), Err(Error::InvalidParameter(_))));
        assert!(matches!(paper_allocations(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn allocations_k3() {
        let f = lower_bound_family(3).unwrap();
        let (left, right) = paper_allocations(3).unwrap();
        let l = loads(&f.instance, &left).unwrap();
        let r = loads(&f.instance, &right).unwrap();
        assert_eq!(l.loads(), &[10, 8, 8, 8]);
        assert_eq!(r.loads(), &[9, 9, 9, 7]);
    }

    #[test]
    fn allocations_shape_for_many_k() {
        for k in 2..=30 {
            let f = lower_bound_family(k).unwrap();
            let (left, right) = paper_allocations(k).unwrap();
            let l = loads(&f.instance, &left).unwrap();
            let r = loads(&f.instance, &right).unwrap();
            assert_eq!(l.potential(), r.potential(), "k={k}");
            assert_eq!(l.makespan(), f.predictions.worst_po_makespan, "k={k}");
            assert_eq!(r.makespan(), f.predictions.opt_makespan, "k={k}");
            assert!(is_nash(&f.instance, &left).unwrap(), "k={k}");
            assert!(is_nash(&f.instance, &right).unwrap(), "k={k}");
            assert_eq!(f.instance.n(), 2 * k as usize + 2);
            assert_eq!(f.instance.m(), k as usize + 1);
        }
    }

    #[test]
    fn random_instances() {
        assert_eq!(
            random_instance(1, 1, 1, 99).unwrap(),
            Instance::new(1, vec![1]).unwrap()
        );
        let a = random_instance(5, 2, 4, 42).unwrap();
        let b = random_instance(5, 2, 4, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.weights().iter().all(|&w| (1..=4).contains(&w)));
        assert!(a.weights().windows(2).all(|w| w[0] >= w[1]));
        assert!(random_instance(0, 2, 4, 42).is_err());
        assert!(random_instance(3, 0, 4, 42).is_err());
        assert!(random_instance(3, 2, 0, 42).is_err());
    }
}
