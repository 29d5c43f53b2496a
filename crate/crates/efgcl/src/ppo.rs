//! Clipped-surrogate policy optimization over the Gaussian policy and a
//! scalar value net, with hand-derived gradients.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::Mlp;
use crate::optim::Adam;
use crate::policy::{entropy, GaussianPolicy, PolicyGrads};

/// Update hyperparameters. The source papers for this algorithm family leave
/// these unstated; the defaults here are ordinary continuous-control values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub step_size: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            step_size: 3e-4,
            clip_eps: 0.2,
            epochs: 4,
            minibatch_size: 512,
            value_coef: 0.5,
            entropy_coef: 1e-3,
            max_grad_norm: 10.0,
            gamma: 0.99,
            lambda: 0.95,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clip_eps <= 0.0 {
            return Err(Error::Config("clip_eps must be positive".into()));
        }
        if self.epochs == 0 || self.minibatch_size == 0 {
            return Err(Error::Config("epochs and minibatch_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config("gamma and lambda must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// min(r*A, clip(r, 1-eps, 1+eps)*A) with r = exp(lp_new - lp_old).
/// This is the per-sample objective to be maximized.
pub fn ppo_clip_objective(log_prob_new: f64, log_prob_old: f64, advantage: f64, clip_eps: f64) -> f64 {
    let ratio = (log_prob_new - log_prob_old).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    unclipped.min(clipped)
}

/// Flattened sample-major training batch (advantages still raw).
#[derive(Debug, Clone)]
pub struct PpoBatch {
    pub obs: Vec<f64>,
    pub obs_dim: usize,
    pub actions: Vec<f64>,
    pub act_dim: usize,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action_row(&self, i: usize) -> &[f64] {
        &self.actions[i * self.act_dim..(i + 1) * self.act_dim]
    }
}

/// Diagnostics from one [`ppo_update`] call.
#[derive(Debug, Clone, Default)]
pub struct UpdateStats {
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub value_loss: f64,
    pub policy_loss: f64,
    pub entropy: f64,
    /// Set when non-finite gradients forced the update to be rolled back.
    pub aborted: Option<String>,
}

/// Mean 0, std 1 over the batch (population std). A constant batch maps to
/// all zeros, so zero-advantage batches stay exactly zero.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    advantages.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

struct ChunkGrads {
    policy: PolicyGrads,
    value: Mlp,
    sum_ratio: f64,
    n_clipped: usize,
    sum_value_loss: f64,
    sum_policy_loss: f64,
    count: usize,
}

/// Per-sample loss: -surrogate + value_coef*(V-R)^2 - entropy_coef*H.
/// Gradients are accumulated (not averaged) into `out`.
fn accumulate_sample(
    policy: &GaussianPolicy,
    value: &Mlp,
    cfg: &PpoConfig,
    obs: &[f64],
    action: &[f64],
    old_log_prob: f64,
    advantage: f64,
    ret: f64,
    out: &mut ChunkGrads,
) -> Result<()> {
    let cache = policy.mean_net.forward_cached(obs)?;
    let mean = cache.output();

    // Diagonal-Gaussian log-prob and its partials.
    let mut log_prob = 0.0;
    let mut z = vec![0.0; action.len()];
    for i in 0..action.len() {
        let ls = policy.log_std[i];
        let zi = (action[i] - mean[i]) / ls.exp();
        z[i] = zi;
        log_prob += -ls - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * zi * zi;
    }

    let ratio = (log_prob - old_log_prob).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantage;
    let surrogate = unclipped.min(clipped);
    // d surrogate / d log_prob: zero when the clipped branch is strictly
    // smaller (the constant branch is active), ratio*A otherwise.
    let dsur_dlp = if unclipped <= clipped { ratio * advantage } else { 0.0 };
    let dloss_dlp = -dsur_dlp;

    // Mean head: d lp / d mean_i = z_i / sigma_i.
    let grad_mean: Vec<f64> = z
        .iter()
        .zip(&policy.log_std)
        .map(|(zi, ls)| dloss_dlp * zi / ls.exp())
        .collect();
    policy.mean_net.backward(&cache, &grad_mean, &mut out.policy.mean_net);

    // log_std: d lp / d log_std_i = z_i^2 - 1; entropy adds d H / d ls = 1.
    for i in 0..action.len() {
        out.policy.log_std[i] += dloss_dlp * (z[i] * z[i] - 1.0) - cfg.entropy_coef;
    }

    // Value head: squared error against the return.
    let vcache = value.forward_cached(obs)?;
    let v = vcache.output()[0];
    let verr = v - ret;
    value.backward(&vcache, &[cfg.value_coef * 2.0 * verr], &mut out.value);

    out.sum_ratio += ratio;
    if (ratio - 1.0).abs() > cfg.clip_eps {
        out.n_clipped += 1;
    }
    out.sum_value_loss += verr * verr;
    out.sum_policy_loss += -surrogate;
    out.count += 1;
    Ok(())
}

/// One PPO update over `batch`: several epochs of shuffled minibatches of
/// gradient steps on the clipped surrogate minus value error minus entropy
/// bonus. Advantages are normalized across the whole batch first.
///
/// Gradients are reduced over fixed-size chunks in index order, so the result
/// is identical for any rayon worker count. If a non-finite gradient appears,
/// both networks are restored to their entry state and the returned stats
/// carry the diagnostic.
pub fn ppo_update(
    batch: &PpoBatch,
    policy: &mut GaussianPolicy,
    value: &mut Mlp,
    policy_opt: &mut Adam,
    value_opt: &mut Adam,
    cfg: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::Domain("empty ppo batch".into()));
    }

    let advantages = normalize_advantages(&batch.advantages);
    let n = batch.len();

    let policy_backup = policy.clone();
    let value_backup = value.clone();
    let policy_opt_backup = policy_opt.clone();
    let value_opt_backup = value_opt.clone();

    let mut stats = UpdateStats::default();
    let mut stat_samples = 0usize;
    let mut indices: Vec<usize> = (0..n).collect();

    const CHUNK: usize = 64;

    for _epoch in 0..cfg.epochs {
        indices.shuffle(rng);
        for mb in indices.chunks(cfg.minibatch_size.min(n)) {
            let chunk_results: Vec<Result<ChunkGrads>> = mb
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut acc = ChunkGrads {
                        policy: PolicyGrads::zeros_like(policy),
                        value: value.zeros_like(),
                        sum_ratio: 0.0,
                        n_clipped: 0,
                        sum_value_loss: 0.0,
                        sum_policy_loss: 0.0,
                        count: 0,
                    };
                    for &i in chunk {
                        accumulate_sample(
                            policy,
                            value,
                            cfg,
                            batch.obs_row(i),
                            batch.action_row(i),
                            batch.old_log_probs[i],
                            advantages[i],
                            batch.returns[i],
                            &mut acc,
                        )?;
                    }
                    Ok(acc)
                })
                .collect();

            let mut total = ChunkGrads {
                policy: PolicyGrads::zeros_like(policy),
                value: value.zeros_like(),
                sum_ratio: 0.0,
                n_clipped: 0,
                sum_value_loss: 0.0,
                sum_policy_loss: 0.0,
                count: 0,
            };
            for res in chunk_results {
                let c = res?;
                total.policy.add(&c.policy);
                total.value.add_scaled(&c.value, 1.0);
                total.sum_ratio += c.sum_ratio;
                total.n_clipped += c.n_clipped;
                total.sum_value_loss += c.sum_value_loss;
                total.sum_policy_loss += c.sum_policy_loss;
                total.count += c.count;
            }

            let scale = 1.0 / total.count as f64;
            let mut pg = Vec::with_capacity(policy.param_count());
            total.policy.flatten_into(&mut pg);
            let mut vg = Vec::with_capacity(value.param_count());
            total.value.flatten_into(&mut vg);
            for g in pg.iter_mut().chain(vg.iter_mut()) {
                *g *= scale;
            }

            let norm_sq: f64 = pg.iter().chain(vg.iter()).map(|g| g * g).sum();
            if !norm_sq.is_finite() {
                *policy = policy_backup;
                *value = value_backup;
                *policy_opt = policy_opt_backup;
                *value_opt = value_opt_backup;
                stats.aborted = Some(format!(
                    "non-finite gradient (norm^2 = {norm_sq}); update rolled back"
                ));
                return Ok(stats);
            }
            let norm = norm_sq.sqrt();
            if norm > cfg.max_grad_norm {
                let s = cfg.max_grad_norm / norm;
                for g in pg.iter_mut().chain(vg.iter_mut()) {
                    *g *= s;
                }
            }

            let mut pp = Vec::with_capacity(policy.param_count());
            policy.flatten_into(&mut pp);
            policy_opt.step(&mut pp, &pg);
            policy.unflatten_from(&pp);
            policy.clamp_log_std();

            let mut vp = Vec::with_capacity(value.param_count());
            value.flatten_into(&mut vp);
            value_opt.step(&mut vp, &vg);
            value.unflatten_from(&vp);

            stats.mean_ratio += total.sum_ratio;
            stats.clip_fraction += total.n_clipped as f64;
            stats.value_loss += total.sum_value_loss;
            stats.policy_loss += total.sum_policy_loss;
            stat_samples += total.count;
        }
    }

    let s = 1.0 / stat_samples as f64;
    stats.mean_ratio *= s;
    stats.clip_fraction *= s;
    stats.value_loss *= s;
    stats.policy_loss *= s;
    stats.entropy = entropy(&policy.log_std);
    Ok(stats)
}

/// Total PPO loss for a fixed batch, as a pure function of the parameters.
/// Used by finite-difference gradient checks; must mirror
/// [`accumulate_sample`] exactly.
pub fn ppo_loss(
    batch: &PpoBatch,
    normalized_advantages: &[f64],
    policy: &GaussianPolicy,
    value: &Mlp,
    cfg: &PpoConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let out = policy.evaluate(batch.obs_row(i))?;
        let lp = crate::policy::log_prob(&out, batch.action_row(i))?;
        let surrogate =
            ppo_clip_objective(lp, batch.old_log_probs[i], normalized_advantages[i], cfg.clip_eps);
        let v = value.forward(batch.obs_row(i))?[0];
        let verr = v - batch.returns[i];
        total += -surrogate + cfg.value_coef * verr * verr
            - cfg.entropy_coef * entropy(&policy.log_std);
    }
    Ok(total / batch.len() as f64)
}
