//! Stationary distribution of the logit chain, computed from its transition
//! matrix.

use crate::error::{Error, Result};
use crate::game::{Allocation, Instance};
use crate::ratio::Ratio;

use super::logit::placement_probabilities;

/// Largest state space accepted.
pub const STATIONARY_STATE_CAP: u128 = 10_000;
/// Up to this many states the linear system is solved directly.
const DENSE_STATE_LIMIT: usize = 2048;

/// A distribution over all `m^n` assignment vectors. State `s` encodes the
/// vector in base `m` with job 0 as the most significant digit, so indices
/// follow lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    pub m: usize,
    pub n: usize,
    pub probabilities: Vec<f64>,
}

impl StationaryDistribution {
    pub fn allocation(&self, state: usize) -> Allocation {
        decode(state, self.m, self.n)
    }

    pub fn index_of(&self, alloc: &Allocation) -> usize {
        encode(alloc.as_slice(), self.m)
    }

    pub fn probability(&self, alloc: &Allocation) -> f64 {
        self.probabilities[self.index_of(alloc)]
    }
}

pub(crate) fn decode(mut state: usize, m: usize, n: usize) -> Allocation {
    let mut v = vec![0; n];
    for slot in v.iter_mut().rev() {
        *slot = state % m;
        state /= m;
    }
    Allocation::new(v)
}

pub(crate) fn encode(assignment: &[usize], m: usize) -> usize {
    assignment.iter().fold(0, |acc, &i| acc * m + i)
}

/// Sparse rows of the transition matrix: `(target, probability)` pairs,
/// self-loops merged.
pub fn transition_rows(instance: &Instance, beta: Ratio) -> Result<Vec<Vec<(usize, f64)>>> {
    let states = check_cap(instance)?;
    let (n, m) = (instance.n(), instance.m());
    let beta = beta.to_f64();
    let mut rows = Vec::with_capacity(states);
    for s in 0..states {
        let alloc = decode(s, m, n);
        let loads = alloc.machine_loads(instance)?;
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(n * (m - 1) + 1);
        let mut stay = 0.0;
        if n == 0 {
            stay = 1.0;
        }
        for job in 0..n {
            let source = alloc.machine_of(job);
            let probs = placement_probabilities(&loads, source, instance.weight(job), beta);
            let place = m.pow((n - 1 - job) as u32);
            for (p, prob) in probs.into_iter().enumerate() {
                let prob = prob / n as f64;
                if p == source {
                    stay += prob;
                } else {
                    let target = s - source * place + p * place;
                    row.push((target, prob));
                }
            }
        }
        row.push((s, stay));
        rows.push(row);
    }
    Ok(rows)
}

fn check_cap(instance: &Instance) -> Result<usize> {
    let states = instance.state_count();
    if states > STATIONARY_STATE_CAP {
        return Err(Error::OracleTooLarge {
            states,
            cap: STATIONARY_STATE_CAP,
        });
    }
    Ok(states as usize)
}

/// Solves `πP = π, Σπ = 1` for the logit chain at inverse temperature `beta`.
///
/// Up to 2048 states the chain is solved directly by state reduction (GTH
/// elimination). Larger chains (up to
/// [`STATIONARY_STATE_CAP`]) use power iteration on the sparse rows.
pub fn exact_stationary(instance: &Instance, beta: Ratio) -> Result<StationaryDistribution> {
    let rows = transition_rows(instance, beta)?;
    let states = rows.len();
    let probabilities = if states <= DENSE_STATE_LIMIT {
        solve_dense(&rows).unwrap_or_else(|_| power_iteration(&rows))
    } else {
        power_iteration(&rows)
    };
    Ok(StationaryDistribution {
        m: instance.m(),
        n: instance.n(),
        probabilities,
    })
}

fn solve_dense(rows: &[Vec<(usize, f64)>]) -> Result<Vec<f64>> {
    let states = rows.len();
    let mut p = vec![0.0f64; states * states];
    for (s, row) in rows.iter().enumerate() {
        for &(t, q) in row {
            p[s * states + t] += q;
        }
    }
    // Grassmann-Taksar-Heyman elimination: states are censored from the
    // last down, using only additions and multiplications of nonnegatives.
    for k in (1..states).rev() {
        let exit: f64 = p[k * states..k * states + k].iter().sum();
        if exit <= 0.0 {
            return Err(Error::InvalidParameter(
                "transition matrix is numerically reducible".into(),
            ));
        }
        for i in 0..k {
            p[i * states + k] /= exit;
        }
        for i in 0..k {
            let f = p[i * states + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                p[i * states + j] += f * p[k * states + j];
            }
        }
    }
    let mut pi = vec![0.0; states];
    pi[0] = 1.0;
    for k in 1..states {
        pi[k] = (0..k).map(|i| pi[i] * p[i * states + k]).sum();
        if pi[k] > 1e100 {
            let scale = pi[k];
            pi[..=k].iter_mut().for_each(|x| *x /= scale);
        }
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|x| x / total).collect())
}

fn power_iteration(rows: &[Vec<(usize, f64)>]) -> Vec<f64> {
    let states = rows.len();
    let mut pi = vec![1.0 / states as f64; states];
    let mut next = vec![0.0; states];
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, row) in rows.iter().enumerate() {
            for &(t, p) in row {
                next[t] += pi[s] * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < 1e-14 {
            break;
        }
    }
    pi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: usize, w: &[u64]) -> Instance {
        Instance::new(m, w.to_vec()).unwrap()
    }

    #[test]
    fn encoding_round_trips() {
        for s in 0..27 {
            let a = decode(s, 3, 3);
            assert_eq!(encode(a.as_slice(), 3), s);
        }
        assert_eq!(decode(5, 3, 2).as_slice(), &[1, 2]);
    }

    #[test]
    fn rows_are_stochastic() {
        let i = inst(3, &[3, 2, 1]);
        for row in transition_rows(&i, Ratio::new(1, 3).unwrap()).unwrap() {
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_unit_jobs_closed_form() {
        let d = exact_stationary(&inst(2, &[1, 1]), Ratio::from_integer(1)).unwrap();
        let (e2, e4) = ((-2.0f64).exp(), (-4.0f64).exp());
        let split = e2 / (2.0 * e2 + 2.0 * e4);
        let together = e4 / (2.0 * e2 + 2.0 * e4);
        let expect = [together, split, split, together];
        for (p, q) in d.probabilities.iter().zip(expect) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_beta_is_uniform() {
        let d = exact_stationary(&inst(3, &[2, 2, 1]), Ratio::from_integer(0)).unwrap();
        assert!(d.probabilities.iter().all(|&p| (p - 1.0 / 27.0).abs() < 1e-12));
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            exact_stationary(&inst(10, &[1; 5]), Ratio::from_integer(1)),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn sparse_route_agrees_with_dense() {
        let i = inst(3, &[3, 2, 2, 1, 1]);
        let rows = transition_rows(&i, Ratio::new(1, 2).unwrap()).unwrap();
        let dense = solve_dense(&rows).unwrap();
        let sparse = power_iteration(&rows);
        let tv: f64 = dense.iter().zip(&sparse).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 1e-10, "tv = {tv}");
    }
}
