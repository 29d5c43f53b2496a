//! Diagonal-Gaussian policy over a small MLP mean with a learned,
//! state-independent log standard deviation.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::Mlp;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Default bounds on the learned log standard deviation.
pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 1.0;

/// Distribution parameters produced by one policy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicyOut {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

/// action = mean + exp(log_std) * noise, with the diagonal-Gaussian
/// log-density of the resulting action.
pub fn sample_action(out: &GaussianPolicyOut, noise: &[f64]) -> Result<(Vec<f64>, f64)> {
    if noise.len() != out.mean.len() {
        return Err(Error::Dimension {
            context: "action noise",
            expected: out.mean.len(),
            got: noise.len(),
        });
    }
    let action: Vec<f64> = out
        .mean
        .iter()
        .zip(&out.log_std)
        .zip(noise)
        .map(|((m, ls), n)| m + ls.exp() * n)
        .collect();
    let lp = log_prob(out, &action)?;
    Ok((action, lp))
}

/// Diagonal-Gaussian log-density of `action` under `out`.
pub fn log_prob(out: &GaussianPolicyOut, action: &[f64]) -> Result<f64> {
    if action.len() != out.mean.len() {
        return Err(Error::Dimension {
            context: "action log-prob",
            expected: out.mean.len(),
            got: action.len(),
        });
    }
    let mut lp = 0.0;
    for ((m, ls), a) in out.mean.iter().zip(&out.log_std).zip(action) {
        let z = (a - m) / ls.exp();
        lp += -ls - 0.5 * LN_2PI - 0.5 * z * z;
    }
    Ok(lp)
}

/// Entropy of the diagonal Gaussian; depends only on log_std.
pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (1.0 + LN_2PI)).sum()
}

/// Policy network: MLP mean head plus a free log_std vector clamped to
/// [`LOG_STD_MIN`, `LOG_STD_MAX`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub log_std: Vec<f64>,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl GaussianPolicy {
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], init_log_std: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(act_dim);
        Ok(Self {
            mean_net: Mlp::init(&sizes, rng, 0.01)?,
            log_std: vec![init_log_std; act_dim],
            log_std_min: LOG_STD_MIN,
            log_std_max: LOG_STD_MAX,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn evaluate(&self, obs: &[f64]) -> Result<GaussianPolicyOut> {
        Ok(GaussianPolicyOut {
            mean: self.mean_net.forward(obs)?,
            log_std: self.log_std.clone(),
        })
    }

    /// Draws noise from `rng` and samples an action.
    pub fn act(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
        let out = self.evaluate(obs)?;
        let noise: Vec<f64> = (0..out.mean.len())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        sample_action(&out, &noise)
    }

    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.clamp(self.log_std_min, self.log_std_max);
        }
    }

    pub fn param_count(&self) -> usize {
        self.mean_net.param_count() + self.log_std.len()
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        self.mean_net.flatten_into(out);
        out.extend_from_slice(&self.log_std);
    }

    pub fn unflatten_from(&mut self, flat: &[f64]) {
        let used = self.mean_net.unflatten_from(flat);
        self.log_std.copy_from_slice(&flat[used..used + self.log_std.len()]);
    }
}

/// Gradient accumulator mirroring [`GaussianPolicy`].
#[derive(Debug, Clone)]
pub struct PolicyGrads {
    pub mean_net: Mlp,
    pub log_std: Vec<f64>,
}

impl PolicyGrads {
    pub fn zeros_like(policy: &GaussianPolicy) -> Self {
        Self {
            mean_net: policy.mean_net.zeros_like(),
            log_std: vec![0.0; policy.log_std.len()],
        }
    }

    pub fn add(&mut self, other: &PolicyGrads) {
        self.mean_net.add_scaled(&other.mean_net, 1.0);
        for (a, b) in self.log_std.iter_mut().zip(&other.log_std) {
            *a += b;
        }
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        self.mean_net.flatten_into(out);
        out.extend_from_slice(&self.log_std);
    }
}
