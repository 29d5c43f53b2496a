//! Trajectory storage and generalized advantage estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One environment step as recorded during collection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    /// Episode boundary flag.
    pub done: bool,
    /// Value used across the boundary when `done`: 0 for a true termination,
    /// the critic's estimate of the post-step state for a time-limit
    /// truncation. Ignored when `done` is false.
    pub terminal_value: f64,
    /// Assist-force magnitude actually applied at this step (N).
    pub assist_applied: f64,
}

/// Ordered transition sequences, one per environment instance.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub sequences: Vec<Vec<Transition>>,
    pub gamma: f64,
    pub lambda: f64,
}

impl RolloutBatch {
    pub fn new(sequences: Vec<Vec<Transition>>, gamma: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Domain(format!("gamma {gamma} outside [0,1]")));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda {lambda} outside [0,1]")));
        }
        Ok(Self { sequences, gamma, lambda })
    }

    pub fn len(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates transitions in sequence-major order, matching the flattened
    /// layout of [`compute_gae`]'s outputs.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.sequences.iter().flatten()
    }
}

/// Backward-recursion GAE.
///
/// A_t = delta_t + gamma * lambda * A_{t+1}, with delta_t = r_t + gamma *
/// V(s_{t+1}) - V(s_t). Propagation truncates at done flags; across a done
/// boundary V(s_{t+1}) is the stored terminal value (0 for terminations).
/// `bootstrap_values` supplies V for the state after each sequence's last
/// step when that step is not done.
///
/// Returns flattened (advantages, returns) in sequence-major order, with
/// returns = advantages + values.
pub fn compute_gae(batch: &RolloutBatch, bootstrap_values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Domain("empty rollout batch".into()));
    }
    if bootstrap_values.len() != batch.sequences.len() {
        return Err(Error::Dimension {
            context: "bootstrap values",
            expected: batch.sequences.len(),
            got: bootstrap_values.len(),
        });
    }
    let total = batch.len();
    let mut advantages = vec![0.0; total];
    let mut returns = vec![0.0; total];
    let mut offset = total;
    for (seq, &bootstrap) in batch.sequences.iter().zip(bootstrap_values).rev() {
        offset -= seq.len();
        let adv = &mut advantages[offset..offset + seq.len()];
        let ret = &mut returns[offset..offset + seq.len()];
        let mut acc = 0.0;
        for t in (0..seq.len()).rev() {
            let tr = &seq[t];
            let next_value = if tr.done {
                tr.terminal_value
            } else if t + 1 == seq.len() {
                bootstrap
            } else {
                seq[t + 1].value
            };
            let delta = tr.reward + batch.gamma * next_value - tr.value;
            acc = if tr.done {
                delta
            } else {
                delta + batch.gamma * batch.lambda * acc
            };
            adv[t] = acc;
            ret[t] = acc + tr.value;
        }
    }
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn step(reward: f64, value: f64, done: bool, terminal_value: f64) -> Transition {
        Transition {
            observation: vec![],
            action: vec![],
            log_prob: 0.0,
            reward,
            value,
            done,
            terminal_value,
            assist_applied: 0.0,
        }
    }

    /// Literal truncated sum of (gamma*lambda)^k * delta_{t+k}, written
    /// independently of the recursion it checks.
    pub(crate) fn gae_brute_force(
        seq: &[Transition],
        gamma: f64,
        lambda: f64,
        bootstrap: f64,
    ) -> Vec<f64> {
        let delta = |t: usize| -> f64 {
            let next_value = if seq[t].done {
                seq[t].terminal_value
            } else if t + 1 == seq.len() {
                bootstrap
            } else {
                seq[t + 1].value
            };
            seq[t].reward + gamma * next_value - seq[t].value
        };
        (0..seq.len())
            .map(|t| {
                let mut total = 0.0;
                let mut weight = 1.0;
                for k in t..seq.len() {
                    total += weight * delta(k);
                    if seq[k].done {
                        break;
                    }
                    weight *= gamma * lambda;
                }
                total
            })
            .collect()
    }

    #[test]
    fn single_step_undiscounted() {
        let batch = RolloutBatch::new(vec![vec![step(1.0, 0.0, false, 0.0)]], 1.0, 1.0).unwrap();
        let (adv, ret) = compute_gae(&batch, &[0.0]).unwrap();
        assert_eq!(adv, vec![1.0]);
        assert_eq!(ret, vec![1.0]);
    }

    #[test]
    fn lambda_zero_collapses_to_td_error() {
        let seq = vec![
            step(0.5, 0.2, false, 0.0),
            step(-1.0, 0.1, false, 0.0),
            step(2.0, -0.4, false, 0.0),
        ];
        let gamma = 0.9;
        let bootstrap = 0.3;
        let batch = RolloutBatch::new(vec![seq.clone()], gamma, 0.0).unwrap();
        let (adv, _) = compute_gae(&batch, &[bootstrap]).unwrap();
        for t in 0..seq.len() {
            let next_value = if t + 1 == seq.len() { bootstrap } else { seq[t + 1].value };
            let delta = seq[t].reward + gamma * next_value - seq[t].value;
            assert!((adv[t] - delta).abs() < 1e-15);
        }
    }

    #[test]
    fn five_step_random_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let seq: Vec<Transition> = (0..5)
            .map(|_| step(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), false, 0.0))
            .collect();
        let bootstrap = rng.gen_range(-1.0..1.0);
        let batch = RolloutBatch::new(vec![seq.clone()], 0.97, 0.9).unwrap();
        let (adv, _) = compute_gae(&batch, &[bootstrap]).unwrap();
        let oracle = gae_brute_force(&seq, 0.97, 0.9, bootstrap);
        for (a, b) in adv.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn done_truncates_propagation_and_uses_terminal_value() {
        let seq = vec![
            step(1.0, 0.5, false, 0.0),
            step(-5.0, 0.4, true, 0.0),     // termination: v_next = 0
            step(0.2, 0.1, true, 0.7),      // truncation: bootstrap 0.7
            step(0.3, 0.0, false, 0.0),
        ];
        let gamma = 0.99;
        let lambda = 0.95;
        let batch = RolloutBatch::new(vec![seq.clone()], gamma, lambda).unwrap();
        let (adv, _) = compute_gae(&batch, &[0.25]).unwrap();
        let oracle = gae_brute_force(&seq, gamma, lambda, 0.25);
        for (a, b) in adv.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        // Step 2's delta must include the truncation bootstrap, not zero.
        let d2 = 0.2 + gamma * 0.7 - 0.1;
        assert!((adv[2] - d2).abs() < 1e-12);
    }

    #[test]
    fn random_sequences_match_brute_force_for_all_gamma_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let len = rng.gen_range(1..=20);
            let gamma: f64 = rng.gen_range(0.0..=1.0);
            let lambda: f64 = rng.gen_range(0.0..=1.0);
            let seq: Vec<Transition> = (0..len)
                .map(|_| {
                    let done = rng.gen_bool(0.15);
                    step(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        done,
                        if done { rng.gen_range(-1.0..1.0) } else { 0.0 },
                    )
                })
                .collect();
            let bootstrap = rng.gen_range(-1.0..1.0);
            let batch = RolloutBatch::new(vec![seq.clone()], gamma, lambda).unwrap();
            let (adv, ret) = compute_gae(&batch, &[bootstrap]).unwrap();
            let oracle = gae_brute_force(&seq, gamma, lambda, bootstrap);
            for t in 0..len {
                assert!((adv[t] - oracle[t]).abs() < 1e-10);
                assert!((ret[t] - (oracle[t] + seq[t].value)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_batch_is_a_domain_error() {
        let batch = RolloutBatch::new(vec![], 0.99, 0.95).unwrap();
        assert!(matches!(compute_gae(&batch, &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        assert!(RolloutBatch::new(vec![], 1.5, 0.95).is_err());
    }
}
