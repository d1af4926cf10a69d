//! Logit dynamics on the potential.
//!
//! One step activates a uniformly random job and resamples its machine from
//! the Gibbs distribution over its `m` placements: placement `p` is chosen
//! with probability proportional to `exp(−β · Φ(p))`, where `Φ(p)` is the
//! potential after the job is put on `p`. The chain is reversible with
//! stationary distribution proportional to `exp(−β · Φ)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{move_delta_loads, Allocation, Instance, LoadProfile, Potential};
use crate::generators::{seeded_rng, GENERATOR_NAME};
use crate::ratio::Ratio;
use crate::solvers::{self, SolverConfig};

/// Largest `m^n` for which per-assignment visit counts are kept.
pub const ASSIGNMENT_COUNT_CAP: u128 = 10_000;
/// Node budget for finding the minimal potential before a simulation.
pub const MIN_POTENTIAL_NODE_LIMIT: u64 = 10_000_000;
const POTENTIAL_SAMPLES: u64 = 1000;

/// Probabilities of putting a job of `weight`, now on `source`, onto each
/// machine. Exponents are shifted by the smallest potential change.
pub fn placement_probabilities(machine_loads: &[u64], source: usize, weight: u64, beta: f64) -> Vec<f64> {
    let deltas: Vec<Potential> = (0..machine_loads.len())
        .map(|p| {
            if p == source {
                0
            } else {
                move_delta_loads(machine_loads[source], machine_loads[p], weight)
            }
        })
        .collect();
    let least = deltas.iter().copied().min().unwrap_or(0);
    let mut probs: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            if beta == 0.0 {
                1.0
            } else {
                (-beta * (d - least) as f64).exp()
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// A running chain: allocation, machine loads and potential kept in sync.
#[derive(Clone, Debug)]
pub struct LogitChain<'a> {
    instance: &'a Instance,
    beta: f64,
    alloc: Allocation,
    loads: Vec<u64>,
    potential: Potential,
    probs: Vec<f64>,
}

impl<'a> LogitChain<'a> {
    pub fn new(instance: &'a Instance, start: Allocation, beta: Ratio) -> Result<Self> {
        let loads = start.machine_loads(instance)?;
        let potential = loads.iter().map(|&l| (l as i128) * (l as i128)).sum();
        Ok(LogitChain {
            instance,
            beta: beta.to_f64(),
            alloc: start,
            loads,
            potential,
            probs: Vec::with_capacity(instance.m()),
        })
    }

    pub fn allocation(&self) -> &Allocation {
        &self.alloc
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn machine_loads(&self) -> &[u64] {
        &self.loads
    }

    pub fn step<R: Rng>(&mut self, rng: &mut R) {
        let n = self.instance.n();
        if n == 0 {
            return;
        }
        let job = rng.random_range(0..n);
        let w = self.instance.weight(job);
        let source = self.alloc.machine_of(job);
        self.probs = placement_probabilities(&self.loads, source, w, self.beta);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut target = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(source);
        for (p, &prob) in self.probs.iter().enumerate() {
            acc += prob;
            if u < acc {
                target = p;
                break;
            }
        }
        if target != source {
            self.potential += move_delta_loads(self.loads[source], self.loads[target], w);
            self.loads[source] -= w;
            self.loads[target] += w;
            self.alloc.set(job, target);
        }
    }
}

/// One logit step from `alloc`.
pub fn logit_step<R: Rng>(instance: &Instance, alloc: &Allocation, beta: Ratio, rng: &mut R) -> Result<Allocation> {
    let mut chain = LogitChain::new(instance, alloc.clone(), beta)?;
    chain.step(rng);
    Ok(chain.alloc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// Uniform over all assignment vectors, drawn from the run's generator.
    Random,
    Given(Allocation),
}

impl Serialize for InitialState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InitialState::Random => serializer.serialize_str("random"),
            InitialState::Given(a) => a.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for InitialState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct InitialVisitor;
        impl<'de> Visitor<'de> for InitialVisitor {
            type Value = InitialState;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"random\" or an array of machine indices")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<InitialState, E> {
                if v == "random" {
                    Ok(InitialState::Random)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<InitialState, A::Error> {
                let mut v = Vec::new();
                while let Some(i) = seq.next_element::<usize>()? {
                    v.push(i);
                }
                Ok(InitialState::Given(Allocation::new(v)))
            }
        }
        deserializer.deserialize_any(InitialVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Inverse temperature per unit of potential.
    pub beta: Ratio,
    pub steps: u64,
    pub seed: u64,
    pub initial: InitialState,
}

impl DynamicsConfig {
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if let InitialState::Given(a) = &self.initial {
            a.validate(instance)?;
        }
        Ok(())
    }
}

/// Visit statistics of a simulation. Each step contributes the state it ends
/// in, so counts sum to `steps · replicas`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub format_version: u32,
    pub generator: String,
    pub seed: u64,
    pub beta: Ratio,
    pub steps: u64,
    pub replicas: u64,
    /// Known when the instance is small enough to solve exactly.
    pub min_potential: Option<Potential>,
    pub visits_at_min_potential: Option<u64>,
    #[serde(rename = "final")]
    pub final_allocation: Allocation,
    /// Visits per sorted-load signature, e.g. `"2,0"`.
    pub signature_counts: BTreeMap<String, u64>,
    pub empirical_state_frequencies: BTreeMap<String, f64>,
    /// Visits per assignment vector, e.g. `"0,1"`, on instances with at most
    /// [`ASSIGNMENT_COUNT_CAP`] states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment_counts: Option<BTreeMap<String, u64>>,
    /// Potential every `sample_every` steps of the first replica.
    pub sample_every: u64,
    pub potential_samples: Vec<Potential>,
}

impl TraceStats {
    pub fn total_steps(&self) -> u64 {
        self.steps * self.replicas
    }

    pub fn fraction_at_min_potential(&self) -> Option<f64> {
        self.visits_at_min_potential
            .map(|v| v as f64 / self.total_steps() as f64)
    }

    /// Visit frequency of each assignment vector, indexed like
    /// [`crate::dynamics::StationaryDistribution`].
    pub fn assignment_frequencies(&self, instance: &Instance) -> Option<Vec<f64>> {
        let counts = self.assignment_counts.as_ref()?;
        let states = instance.state_count() as usize;
        let mut freq = vec![0.0; states];
        let total = self.total_steps() as f64;
        for (key, &count) in counts {
            let index = key
                .split(',')
                .filter(|s| !s.is_empty())
                .try_fold(0usize, |acc, d| d.parse::<usize>().ok().map(|d| acc * instance.m() + d))?;
            freq[index] = count as f64 / total;
        }
        Some(freq)
    }

    fn refresh_frequencies(&mut self) {
        let total = self.total_steps() as f64;
        self.empirical_state_frequencies = self
            .signature_counts
            .iter()
            .map(|(k, &c)| (k.clone(), round_significant(c as f64 / total)))
            .collect();
    }
}

/// Rounds to 12 significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn assignment_key(alloc: &Allocation) -> String {
    let parts: Vec<String> = alloc.as_slice().iter().map(|i| i.to_string()).collect();
    parts.join(",")
}

/// Runs `config.steps` logit steps. Reproducible from the seed.
pub fn simulate(instance: &Instance, config: &DynamicsConfig) -> Result<TraceStats> {
    let min_potential = known_min_potential(instance);
    run_chain(instance, config, config.seed, min_potential)
}

fn known_min_potential(instance: &Instance) -> Option<Potential> {
    let config = SolverConfig {
        node_limit: MIN_POTENTIAL_NODE_LIMIT,
    };
    solvers::potential_level_set(instance, &config)
        .ok()
        .map(|level| level.min_potential)
}

fn run_chain(
    instance: &Instance,
    config: &DynamicsConfig,
    seed: u64,
    min_potential: Option<Potential>,
) -> Result<TraceStats> {
    config.validate(instance)?;
    let mut rng = seeded_rng(seed);
    let start = match &config.initial {
        InitialState::Given(a) => a.clone(),
        InitialState::Random => Allocation::new((0..instance.n()).map(|_| rng.random_range(0..instance.m())).collect()),
    };
    let mut chain = LogitChain::new(instance, start, config.beta)?;
    let track_assignments = instance.state_count() <= ASSIGNMENT_COUNT_CAP;

    // counts keyed by the raw state, converted to strings once at the end
    let mut by_loads: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut by_assignment: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut at_min = 0u64;
    let sample_every = config.steps.div_ceil(POTENTIAL_SAMPLES).max(1);
    let mut samples = Vec::new();
    let mut sorted = Vec::with_capacity(instance.m());

    for step in 0..config.steps {
        chain.step(&mut rng);
        sorted.clear();
        sorted.extend_from_slice(chain.machine_loads());
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        match by_loads.get_mut(&sorted) {
            Some(c) => *c += 1,
            None => {
                by_loads.insert(sorted.clone(), 1);
            }
        }
        if track_assignments {
            *by_assignment.entry(chain.allocation().as_slice().to_vec()).or_insert(0) += 1;
        }
        if Some(chain.potential()) == min_potential {
            at_min += 1;
        }
        if step % sample_every == 0 {
            samples.push(chain.potential());
        }
    }

    let signature_counts = by_loads
        .into_iter()
        .map(|(loads, c)| Ok((LoadProfile::new(loads)?.signature(), c)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let assignment_counts = track_assignments.then(|| {
        by_assignment
            .into_iter()
            .map(|(a, c)| (assignment_key(&Allocation::new(a)), c))
            .collect()
    });
    let mut stats = TraceStats {
        format_version: 1,
        generator: GENERATOR_NAME.to_string(),
        seed,
        beta: config.beta,
        steps: config.steps,
        replicas: 1,
        min_potential,
        visits_at_min_potential: min_potential.map(|_| at_min),
        final_allocation: chain.alloc,
        signature_counts,
        empirical_state_frequencies: BTreeMap::new(),
        assignment_counts,
        sample_every,
        potential_samples: samples,
    };
    stats.refresh_frequencies();
    Ok(stats)
}

/// Runs `replicas` independent chains with seeds `seed, seed+1, …` on
/// `workers` threads and sums their counts. The result does not depend on
/// `workers`. `final` and the potential samples come from the first replica.
pub fn simulate_replicas(
    instance: &Instance,
    config: &DynamicsConfig,
    replicas: u64,
    workers: usize,
) -> Result<TraceStats> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be at least 1".into()));
    }
    config.validate(instance)?;
    let min_potential = known_min_potential(instance);
    let seeds: Vec<u64> = (0..replicas).map(|r| config.seed.wrapping_add(r)).collect();
    let workers = workers.clamp(1, seeds.len());
    let chunk = seeds.len().div_ceil(workers);
    let runs: Vec<Result<TraceStats>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&s| run_chain(instance, config, s, min_potential))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    let mut runs = runs.into_iter();
    let mut merged = runs.next().expect("at least one replica")?;
    for run in runs {
        let run = run?;
        for (k, c) in run.signature_counts {
            *merged.signature_counts.entry(k).or_insert(0) += c;
        }
        if let (Some(total), Some(extra)) = (merged.assignment_counts.as_mut(), run.assignment_counts) {
            for (k, c) in extra {
                *total.entry(k).or_insert(0) += c;
            }
        }
        if let (Some(v), Some(extra)) = (merged.visits_at_min_potential.as_mut(), run.visits_at_min_potential) {
            *v += extra;
        }
    }
    merged.replicas = replicas;
    merged.refresh_frequencies();
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: usize, w: &[u64]) -> Instance {
        Instance::new(m, w.to_vec()).unwrap()
    }

    #[test]
    fn zero_beta_is_uniform() {
        let p = placement_probabilities(&[7, 0, 3], 0, 2, 0.0);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn large_beta_splits_together_state() {
        // {1,1} together on machine 0: moving is Δ = −2
        let p = placement_probabilities(&[2, 0], 0, 1, 1000.0);
        assert_eq!(p[1], 1.0);
        assert_eq!(p[0], 0.0);
        let p = placement_probabilities(&[2, 0], 0, 1, 1.0);
        let e = (-2.0f64).exp();
        assert!((p[0] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn step_keeps_state_consistent() {
        let i = inst(3, &[5, 4, 3, 3, 1]);
        let mut rng = seeded_rng(1);
        let mut chain = LogitChain::new(&i, Allocation::all_on_first(5), Ratio::new(1, 10).unwrap()).unwrap();
        for _ in 0..500 {
            chain.step(&mut rng);
            let loads = chain.allocation().machine_loads(&i).unwrap();
            assert_eq!(loads, chain.machine_loads());
            let pot: i128 = loads.iter().map(|&l| (l as i128).pow(2)).sum();
            assert_eq!(pot, chain.potential());
        }
    }

    #[test]
    fn logit_step_is_seeded() {
        let i = inst(2, &[1, 1]);
        let a = Allocation::all_on_first(2);
        let beta = Ratio::from_integer(1);
        let x = logit_step(&i, &a, beta, &mut seeded_rng(3)).unwrap();
        let y = logit_step(&i, &a, beta, &mut seeded_rng(3)).unwrap();
        assert_eq!(x, y);
    }

    fn config(beta: Ratio, steps: u64, seed: u64) -> DynamicsConfig {
        DynamicsConfig {
            beta,
            steps,
            seed,
            initial: InitialState::Random,
        }
    }

    #[test]
    fn simulate_counts_add_up() {
        let i = inst(2, &[2, 1]);
        let s = simulate(&i, &config(Ratio::from_integer(1), 10_000, 7)).unwrap();
        assert_eq!(s.signature_counts.values().sum::<u64>(), 10_000);
        assert_eq!(s.assignment_counts.as_ref().unwrap().values().sum::<u64>(), 10_000);
        assert_eq!(s.min_potential, Some(5));
        let f: f64 = s.assignment_frequencies(&i).unwrap().iter().sum();
        assert!((f - 1.0).abs() < 1e-12);
        assert_eq!(s.potential_samples.len(), 1000);
        assert_eq!(s.generator, "ChaCha8Rng");
    }

    #[test]
    fn simulate_is_reproducible() {
        let i = inst(3, &[3, 2, 2, 1]);
        let c = config(Ratio::new(1, 2).unwrap(), 5_000, 11);
        assert_eq!(simulate(&i, &c).unwrap(), simulate(&i, &c).unwrap());
    }

    #[test]
    fn replicas_independent_of_workers() {
        let i = inst(2, &[2, 1, 1]);
        let c = config(Ratio::from_integer(1), 2_000, 5);
        let one = simulate_replicas(&i, &c, 5, 1).unwrap();
        let many = simulate_replicas(&i, &c, 5, 3).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.signature_counts.values().sum::<u64>(), 10_000);
        assert_eq!(one.final_allocation, simulate(&i, &c).unwrap().final_allocation);
    }

    #[test]
    fn rejects_bad_configs() {
        let i = inst(2, &[1, 1]);
        assert!(simulate(&i, &config(Ratio::from_integer(1), 0, 1)).is_err());
        let mut c = config(Ratio::from_integer(1), 10, 1);
        c.initial = InitialState::Given(vec![0, 2].into());
        assert!(simulate(&i, &c).is_err());
    }

    #[test]
    fn initial_state_serde() {
        let r: InitialState = serde_json::from_str("\"random\"").unwrap();
        assert_eq!(r, InitialState::Random);
        let g: InitialState = serde_json::from_str("[0,1]").unwrap();
        assert_eq!(g, InitialState::Given(vec![0, 1].into()));
        assert_eq!(serde_json::to_string(&g).unwrap(), "[0,1]");
        assert!(serde_json::from_str::<InitialState>("\"other\"").is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_significant(0.123456789012345), 0.123456789012);
        assert_eq!(round_significant(0.0), 0.0);
        assert_eq!(round_significant(1.0 / 3.0).to_string(), "0.333333333333");
    }
}
