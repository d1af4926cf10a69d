//! Load balancing games on identical machines: instances, allocations,
//! load profiles, the squared-load potential and the stability conditions.
//!
//! All arithmetic is over integers. Potentials are `i128`; an [`Instance`]
//! refuses to exist unless `n² · (Σw)²` fits in an `i128`, so every potential
//! and every potential difference computed from it is exact.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Potential values and potential differences.
pub type Potential = i128;

/// A game: `m` identical machines and a multiset of positive job weights,
/// stored nonincreasing. Jobs are identified by their index in that order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    m: usize,
    weights: Vec<u64>,
}

#[derive(Deserialize)]
struct RawInstance {
    m: usize,
    weights: Vec<u64>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.m, raw.weights)
    }
}

impl Instance {
    /// Builds an instance, sorting the weights nonincreasing. The gcd is left
    /// alone; see [`Instance::canonicalize`].
    pub fn new(m: usize, mut weights: Vec<u64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInstance("machine count must be at least 1".into()));
        }
        if let Some(pos) = weights.iter().position(|&w| w == 0) {
            return Err(Error::InvalidInstance(format!("job {pos} has weight 0")));
        }
        check_capacity(weights.len(), &weights)?;
        weights.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Instance { m, weights })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn weight(&self, job: usize) -> u64 {
        self.weights[job]
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> u64 {
        self.weights.first().copied().unwrap_or(0)
    }

    /// `max(⌈Σw/m⌉, w_max)`, the trivial lower bound on any makespan.
    pub fn makespan_lower_bound(&self) -> u64 {
        self.total_weight().div_ceil(self.m as u64).max(self.max_weight())
    }

    /// Sorted weights divided by their gcd. `m` is unchanged.
    pub fn canonicalize(&self) -> Instance {
        let g = self.weights.iter().fold(0u64, |g, &w| g.gcd(&w));
        if g <= 1 {
            return self.clone();
        }
        Instance {
            m: self.m,
            weights: self.weights.iter().map(|w| w / g).collect(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.weights.iter().fold(0u64, |g, &w| g.gcd(&w)) <= 1
    }

    /// All weights multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Instance> {
        if factor == 0 {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        let weights = self
            .weights
            .iter()
            .map(|w| w.checked_mul(factor))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::CapacityExceeded("scaled weight overflows u64".into()))?;
        Instance::new(self.m, weights)
    }

    /// Same jobs on a different number of machines.
    pub fn with_machines(&self, m: usize) -> Result<Instance> {
        Instance::new(m, self.weights.clone())
    }

    /// Number of assignment vectors, `m^n`, saturating at `u128::MAX`.
    pub fn state_count(&self) -> u128 {
        let mut count: u128 = 1;
        for _ in 0..self.n() {
            count = count.saturating_mul(self.m as u128);
        }
        count
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={} weights={:?}", self.m, self.weights)
    }
}

fn check_capacity(n: usize, weights: &[u64]) -> Result<()> {
    let too_big = || Error::CapacityExceeded(format!("n²·(Σw)² must fit in i128 (n = {n}, weights too large)"));
    let total = weights
        .iter()
        .try_fold(0u64, |acc, &w| acc.checked_add(w))
        .ok_or_else(too_big)?;
    let scaled = (n as u128).checked_mul(total as u128).ok_or_else(too_big)?;
    let square = scaled.checked_mul(scaled).ok_or_else(too_big)?;
    if square > i128::MAX as u128 {
        return Err(too_big());
    }
    Ok(())
}

/// Job-to-machine assignment, one machine index per job in instance order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<usize>);

impl Allocation {
    pub fn new(assignment: Vec<usize>) -> Self {
        Allocation(assignment)
    }

    /// Every job on machine 0.
    pub fn all_on_first(n: usize) -> Self {
        Allocation(vec![0; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn machine_of(&self, job: usize) -> usize {
        self.0[job]
    }

    pub fn set(&mut self, job: usize, machine: usize) {
        self.0[job] = machine;
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.0.len() != instance.n() {
            return Err(Error::InvalidAllocation(format!(
                "{} entries for {} jobs",
                self.0.len(),
                instance.n()
            )));
        }
        if let Some((job, &machine)) = self.0.iter().enumerate().find(|(_, &i)| i >= instance.m()) {
            return Err(Error::InvalidAllocation(format!(
                "job {job} assigned to machine {machine} but m = {}",
                instance.m()
            )));
        }
        Ok(())
    }

    /// Per-machine loads indexed by machine (not sorted).
    pub fn machine_loads(&self, instance: &Instance) -> Result<Vec<u64>> {
        self.validate(instance)?;
        let mut loads = vec![0u64; instance.m()];
        for (job, &machine) in self.0.iter().enumerate() {
            loads[machine] += instance.weight(job);
        }
        Ok(loads)
    }

    /// Relabels machines in order of first use, the restricted-growth form.
    pub fn relabeled(&self) -> Allocation {
        let mut map: Vec<Option<usize>> = Vec::new();
        let mut next = 0;
        let out = self
            .0
            .iter()
            .map(|&i| {
                if i >= map.len() {
                    map.resize(i + 1, None);
                }
                *map[i].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Allocation(out)
    }

    /// Jobs assigned to `machine`, in increasing job index.
    pub fn jobs_on(&self, machine: usize) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &i)| i == machine)
            .map(|(j, _)| j)
            .collect()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl From<Vec<usize>> for Allocation {
    fn from(v: Vec<usize>) -> Self {
        Allocation(v)
    }
}

/// Machine loads sorted nonincreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct LoadProfile(Vec<u64>);

impl TryFrom<Vec<u64>> for LoadProfile {
    type Error = Error;

    fn try_from(loads: Vec<u64>) -> Result<Self> {
        LoadProfile::new(loads)
    }
}

impl From<LoadProfile> for Vec<u64> {
    fn from(p: LoadProfile) -> Self {
        p.0
    }
}

impl LoadProfile {
    pub fn new(mut loads: Vec<u64>) -> Result<Self> {
        if loads.is_empty() {
            return Err(Error::InvalidParameter(
                "a load profile needs at least one machine".into(),
            ));
        }
        let total = loads
            .iter()
            .try_fold(0u64, |acc, &l| acc.checked_add(l))
            .ok_or_else(|| Error::CapacityExceeded("total load overflows u64".into()))?;
        // Σ l² ≤ (Σ l)²
        let sq = (total as u128).checked_mul(total as u128);
        if sq.is_none_or(|s| s > i128::MAX as u128) {
            return Err(Error::CapacityExceeded("potential does not fit in i128".into()));
        }
        loads.sort_unstable_by(|a, b| b.cmp(a));
        Ok(LoadProfile(loads))
    }

    pub fn loads(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn makespan(&self) -> u64 {
        self.0[0]
    }

    pub fn potential(&self) -> Potential {
        self.0.iter().map(|&l| (l as i128) * (l as i128)).sum()
    }

    /// Comma-joined sorted loads, e.g. `10,8,8,8`.
    pub fn signature(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        parts.join(",")
    }
}

/// Sorted load profile of `alloc`.
pub fn loads(instance: &Instance, alloc: &Allocation) -> Result<LoadProfile> {
    LoadProfile::new(alloc.machine_loads(instance)?)
}

pub fn makespan(profile: &LoadProfile) -> u64 {
    profile.makespan()
}

/// Sum of squared machine loads.
pub fn potential(profile: &LoadProfile) -> Potential {
    profile.potential()
}

/// Potential change from moving `job` to machine `target`:
/// `2w(l_target − l_source + w)`.
pub fn move_delta(instance: &Instance, alloc: &Allocation, job: usize, target: usize) -> Result<Potential> {
    let machine_loads = alloc.machine_loads(instance)?;
    if job >= instance.n() {
        return Err(Error::InvalidAllocation(format!("no job {job}")));
    }
    if target >= instance.m() {
        return Err(Error::InvalidAllocation(format!("no machine {target}")));
    }
    let source = alloc.machine_of(job);
    if source == target {
        return Err(Error::NoOpMove { job, machine: target });
    }
    Ok(move_delta_loads(
        machine_loads[source],
        machine_loads[target],
        instance.weight(job),
    ))
}

/// [`move_delta`] on raw loads.
#[inline]
pub fn move_delta_loads(source_load: u64, target_load: u64, weight: u64) -> Potential {
    let w = weight as i128;
    2 * w * (target_load as i128 - source_load as i128 + w)
}

/// Pure Nash test: for every job of weight `w` on machine `i` and every other
/// machine `j`, `l_i − w ≤ l_j`.
pub fn is_nash(instance: &Instance, alloc: &Allocation) -> Result<bool> {
    let machine_loads = alloc.machine_loads(instance)?;
    if instance.m() == 1 {
        return Ok(true);
    }
    // smallest and second-smallest loads let each job see the minimum over other machines
    let mut order: Vec<usize> = (0..instance.m()).collect();
    order.sort_by_key(|&i| (machine_loads[i], i));
    let (lowest, second) = (order[0], order[1]);
    Ok(alloc.as_slice().iter().enumerate().all(|(job, &i)| {
        let other_min = if i == lowest {
            machine_loads[second]
        } else {
            machine_loads[lowest]
        };
        machine_loads[i] - instance.weight(job) <= other_min
    }))
}

/// Split of two machines' loads into exchanged bundles `x` and residuals `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSplit {
    pub machine_i: usize,
    pub machine_j: usize,
    pub x_i: u64,
    pub y_i: u64,
    pub x_j: u64,
    pub y_j: u64,
}

impl BundleSplit {
    /// Split from explicit job bundles. Each bundle must consist of distinct
    /// jobs currently on its machine.
    pub fn from_bundles(
        instance: &Instance,
        alloc: &Allocation,
        machine_i: usize,
        bundle_i: &[usize],
        machine_j: usize,
        bundle_j: &[usize],
    ) -> Result<Self> {
        let machine_loads = alloc.machine_loads(instance)?;
        if machine_i == machine_j {
            return Err(Error::InvalidParameter(
                "bundle swap needs two distinct machines".into(),
            ));
        }
        let bundle_weight = |machine: usize, bundle: &[usize]| -> Result<u64> {
            let mut seen = std::collections::BTreeSet::new();
            let mut total = 0;
            for &job in bundle {
                if job >= instance.n() || alloc.machine_of(job) != machine || !seen.insert(job) {
                    return Err(Error::InvalidParameter(format!(
                        "job {job} is not a distinct job on machine {machine}"
                    )));
                }
                total += instance.weight(job);
            }
            Ok(total)
        };
        let x_i = bundle_weight(machine_i, bundle_i)?;
        let x_j = bundle_weight(machine_j, bundle_j)?;
        Ok(BundleSplit {
            machine_i,
            machine_j,
            x_i,
            y_i: machine_loads[machine_i] - x_i,
            x_j,
            y_j: machine_loads[machine_j] - x_j,
        })
    }
}

/// Potential change from exchanging bundle `x_i` with bundle `x_j`:
/// `−2(x_j − x_i)(y_j − y_i)`.
pub fn swap_delta(split: &BundleSplit) -> Potential {
    let dx = split.x_j as i128 - split.x_i as i128;
    let dy = split.y_j as i128 - split.y_i as i128;
    -2 * dx * dy
}

pub fn canonicalize(instance: &Instance) -> Instance {
    instance.canonicalize()
}
