//! Proximal policy optimization: rollouts, GAE, clipped surrogate updates and evaluation.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{decode_action, EnvError, EpisodeConfig, LayoutEnv, Observation, StepInfo, ACTION_DIM};
use crate::nn::{
    adam_step, gaussian_grads, logprob_and_entropy, sample_action, AdamState, ArchConfig, NnError,
    OutputGrad, PolicyParams,
};
use crate::rewards::{PlacedItem, RewardBreakdown};

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("sequence lengths differ: {0}")]
    LengthMismatch(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no environment configurations supplied")]
    NoEnvironments,
    #[error("training diverged at epoch {epoch}: non-finite parameters")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    pub episodes_per_update: usize,
    pub minibatch_size: usize,
    pub ppo_epochs: usize,
    pub seed: u64,
    /// Let the value loss shape the shared trunk as well as the critic head.
    pub value_into_trunk: bool,
    pub arch: ArchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip_eps: 0.2,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            value_coef: 0.5,
            entropy_coef: 0.01,
            epochs: 1000,
            episodes_per_update: 32,
            minibatch_size: 256,
            ppo_epochs: 4,
            seed: 0,
            value_into_trunk: true,
            arch: ArchConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let fail = |m: &str| Err(PpoError::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return fail("lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return fail("clip_eps must be positive");
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return fail("learning rates must be positive");
        }
        if self.episodes_per_update == 0 || self.minibatch_size == 0 || self.ppo_epochs == 0 {
            return fail("batch sizes must be positive");
        }
        self.arch.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub raw: [f64; ACTION_DIM],
    pub logprob_old: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub episodes: Vec<Vec<Transition>>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.episodes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.episodes.iter().flatten()
    }

    /// Runs GAE over every episode, then normalizes the advantages.
    pub fn finish(&mut self, gamma: f64, lambda: f64) {
        let t: Vec<&Transition> = self.transitions().collect();
        let rewards: Vec<f64> = t.iter().map(|x| x.reward).collect();
        let values: Vec<f64> = t.iter().map(|x| x.value).collect();
        let dones: Vec<bool> = t.iter().map(|x| x.done).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, gamma, lambda).expect("aligned by construction");
        self.returns = ret;
        self.advantages = normalize(&adv);
    }
}

/// Generalized advantage estimates and λ-returns.
///
/// The value after a `done` step (and after the last step) is taken as zero.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), PpoError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(PpoError::LengthMismatch(format!(
            "rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut gae = 0.0;
    for t in (0..n).rev() {
        let next_value = if dones[t] || t + 1 == n { 0.0 } else { values[t + 1] };
        if dones[t] {
            gae = 0.0;
        }
        let delta = rewards[t] + gamma * next_value - values[t];
        gae = delta + gamma * lambda * gae;
        adv[t] = gae;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

/// Zero mean, unit variance; only centers when the spread is negligible.
pub fn normalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = if std > 1e-8 { 1.0 / std } else { 1.0 };
    x.iter().map(|v| (v - mean) * scale).collect()
}

/// Clipped surrogate objective (to be maximized), averaged over the minibatch.
pub fn clipped_loss(logprob_new: &[f64], logprob_old: &[f64], advantages: &[f64], clip_eps: f64) -> f64 {
    let n = logprob_new.len();
    if n == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        let r = (logprob_new[i] - logprob_old[i]).exp();
        let a = advantages[i];
        sum += (r * a).min(r.clamp(1.0 - clip_eps, 1.0 + clip_eps) * a);
    }
    sum / n as f64
}

/// Derivative of [`clipped_loss`] with respect to each `logprob_new`.
pub fn clipped_loss_grad(logprob_new: &[f64], logprob_old: &[f64], advantages: &[f64], clip_eps: f64) -> Vec<f64> {
    let n = logprob_new.len() as f64;
    (0..logprob_new.len())
        .map(|i| {
            let r = (logprob_new[i] - logprob_old[i]).exp();
            let a = advantages[i];
            let dead = (a > 0.0 && r > 1.0 + clip_eps) || (a < 0.0 && r < 1.0 - clip_eps);
            if dead {
                0.0
            } else {
                r * a / n
            }
        })
        .collect()
}

/// `−objective + c_v·value_loss − c_e·entropy`.
pub fn total_loss(policy_obj: f64, value_loss: f64, entropy: f64, value_coef: f64, entropy_coef: f64) -> f64 {
    -policy_obj + value_coef * value_loss - entropy_coef * entropy
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean final-step reward of the epoch's rollouts.
    pub mean_reward: f64,
    pub p_loss: f64,
    pub v_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub metrics: Vec<EpochMetrics>,
    /// Wall-clock seconds per epoch, kept apart so the metrics stay reproducible.
    pub epoch_seconds: Vec<f64>,
}

fn episode_rng(seed: u64, epoch: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((epoch << 24) ^ episode);
    rng
}

fn shuffle_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    rng.set_stream(epoch);
    rng
}

pub fn init_params(cfg: &TrainConfig) -> Result<PolicyParams, PpoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    Ok(PolicyParams::init(&cfg.arch, &mut rng)?)
}

fn build_envs(configs: &[EpisodeConfig]) -> Result<Vec<LayoutEnv>, PpoError> {
    if configs.is_empty() {
        return Err(PpoError::NoEnvironments);
    }
    configs
        .iter()
        .map(|c| LayoutEnv::new(c.clone()).map_err(PpoError::from))
        .collect()
}

fn collect_episode<R: Rng>(
    params: &PolicyParams,
    env: &mut LayoutEnv,
    rng: &mut R,
) -> Result<Vec<Transition>, PpoError> {
    let (_, mut obs) = env.reset();
    let mut out = Vec::new();
    loop {
        let (o, _) = params.forward(&obs)?;
        let (raw, lp) = sample_action(&o.mu, &o.log_std, rng);
        let step = env.step(&raw)?;
        out.push(Transition {
            observation: obs,
            raw,
            logprob_old: lp,
            reward: step.reward,
            value: o.value,
            done: step.done,
        });
        match step.observation {
            Some(next) if !step.done => obs = next,
            _ => return Ok(out),
        }
    }
}

/// Clipped-surrogate and value statistics of one minibatch update.
struct UpdateStats {
    objective: f64,
    value_loss: f64,
}

fn update_minibatch(
    params: &mut PolicyParams,
    adam: &mut AdamState,
    batch: &[(&Transition, f64, f64)],
    cfg: &TrainConfig,
) -> Result<UpdateStats, PpoError> {
    let n = batch.len() as f64;
    let mut grads = params.zeros_like();
    let mut objective = 0.0;
    let mut value_loss = 0.0;
    for &(t, adv, ret) in batch {
        let (o, cache) = params.forward(&t.observation)?;
        let (lp, _) = logprob_and_entropy(&o.mu, &o.log_std, &t.raw);
        objective += clipped_loss(&[lp], &[t.logprob_old], &[adv], cfg.clip_eps) / n;
        let d_obj = clipped_loss_grad(&[lp], &[t.logprob_old], &[adv], cfg.clip_eps)[0] / n;
        let err = o.value - ret;
        value_loss += err * err / n;

        let (dlp_mu, dlp_ls, dent_ls) = gaussian_grads(&o.mu, &o.log_std, &t.raw);
        let mut g = OutputGrad {
            value: cfg.value_coef * 2.0 * err / n,
            ..Default::default()
        };
        for i in 0..ACTION_DIM {
            g.mu[i] = -d_obj * dlp_mu[i];
            g.log_std[i] = -d_obj * dlp_ls[i] - cfg.entropy_coef * dent_ls[i] / n;
        }
        params.backward_into(&cache, &g, cfg.value_into_trunk, &mut grads);
    }
    adam_step(params, &grads, adam);
    Ok(UpdateStats { objective, value_loss })
}

/// Trains a fresh policy; see [`train_from`].
pub fn train(configs: &[EpisodeConfig], cfg: &TrainConfig) -> Result<TrainOutput, PpoError> {
    train_from(configs, cfg, init_params(cfg)?, |_, _| {})
}

/// Trains `params` on episodes drawn uniformly from `configs`.
///
/// Rollouts and minibatch order depend only on `cfg.seed`, so two runs with the
/// same inputs produce identical parameters and metrics.
pub fn train_from(
    configs: &[EpisodeConfig],
    cfg: &TrainConfig,
    mut params: PolicyParams,
    mut on_epoch: impl FnMut(&EpochMetrics, &PolicyParams),
) -> Result<TrainOutput, PpoError> {
    cfg.validate()?;
    if params.arch != cfg.arch {
        return Err(PpoError::InvalidConfig("parameters do not match cfg.arch".into()));
    }
    let mut envs = build_envs(configs)?;
    let mut adam = AdamState::new(&params, cfg.lr_actor, cfg.lr_critic);
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let mut buffer = RolloutBuffer::default();
        let mut final_rewards = 0.0;
        for ep in 0..cfg.episodes_per_update {
            let mut rng = episode_rng(cfg.seed, epoch as u64, ep as u64);
            let which = rng.gen_range(0..envs.len());
            let episode = collect_episode(&params, &mut envs[which], &mut rng)?;
            final_rewards += episode.last().map_or(0.0, |t| t.reward);
            buffer.episodes.push(episode);
        }
        buffer.finish(cfg.gamma, cfg.lambda);

        let samples: Vec<(&Transition, f64, f64)> = buffer
            .transitions()
            .zip(buffer.advantages.iter().zip(&buffer.returns))
            .map(|(t, (&a, &r))| (t, a, r))
            .collect();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = shuffle_rng(cfg.seed, epoch as u64);
        let (mut p_sum, mut v_sum, mut updates) = (0.0, 0.0, 0usize);
        for _ in 0..cfg.ppo_epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                let batch: Vec<_> = chunk.iter().map(|&i| samples[i]).collect();
                let stats = update_minibatch(&mut params, &mut adam, &batch, cfg)?;
                if !params.is_finite() {
                    return Err(PpoError::Diverged { epoch });
                }
                p_sum += stats.objective.abs();
                v_sum += stats.value_loss;
                updates += 1;
            }
        }
        let denom = updates.max(1) as f64;
        let row = EpochMetrics {
            epoch,
            mean_reward: final_rewards / cfg.episodes_per_update as f64,
            p_loss: p_sum / denom,
            v_loss: v_sum / denom,
        };
        on_epoch(&row, &params);
        metrics.push(row);
        epoch_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(TrainOutput {
        params,
        metrics,
        epoch_seconds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Act with the mean action instead of sampling.
    pub greedy: bool,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { greedy: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub config_index: usize,
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub placed: Vec<PlacedItem>,
    pub rewards: Vec<f64>,
    pub valid: bool,
    /// Breakdown of the complete layout when the episode finished validly.
    pub breakdown: Option<RewardBreakdown>,
    pub seconds: f64,
}

impl EpisodeRecord {
    pub fn final_reward(&self) -> f64 {
        self.rewards.last().copied().unwrap_or(0.0)
    }

    pub fn episode_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Rotation bucket chosen by each action, including a rejected final one.
    pub fn rotations(&self, config: &EpisodeConfig) -> Vec<u8> {
        self.actions
            .iter()
            .map(|a| decode_action(a, &config.room).1.get())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_return: f64,
    pub invalid_rate: f64,
    pub mean_length: f64,
    pub mean_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub stats: EvalStats,
    pub records: Vec<EpisodeRecord>,
}

/// Runs `episodes` episodes, cycling through `configs` in order.
pub fn evaluate(
    params: &PolicyParams,
    configs: &[EpisodeConfig],
    episodes: usize,
    opts: EvalOptions,
) -> Result<EvalReport, PpoError> {
    let mut envs = build_envs(configs)?;
    let mut records = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let which = ep % envs.len();
        let env = &mut envs[which];
        let mut rng = episode_rng(opts.seed, u64::from(u32::MAX), ep as u64);
        let start = Instant::now();
        let (_, mut obs) = env.reset();
        let mut actions = Vec::new();
        let mut rewards = Vec::new();
        let mut breakdown = None;
        let mut valid = true;
        loop {
            let (o, _) = params.forward(&obs)?;
            let raw = if opts.greedy {
                o.mu
            } else {
                sample_action(&o.mu, &o.log_std, &mut rng).0
            };
            let step = env.step(&raw)?;
            actions.push(raw);
            rewards.push(step.reward);
            match step.info {
                StepInfo::Invalid => valid = false,
                StepInfo::Placed(b) => breakdown = Some(b),
            }
            match step.observation {
                Some(next) if !step.done => obs = next,
                _ => break,
            }
        }
        records.push(EpisodeRecord {
            config_index: which,
            actions,
            placed: env.state().placed.clone(),
            rewards,
            valid,
            breakdown: if valid { breakdown } else { None },
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let n = episodes.max(1) as f64;
    let stats = EvalStats {
        episodes,
        mean_reward: records.iter().map(EpisodeRecord::final_reward).sum::<f64>() / n,
        mean_return: records.iter().map(EpisodeRecord::episode_return).sum::<f64>() / n,
        invalid_rate: records.iter().filter(|r| !r.valid).count() as f64 / n,
        mean_length: records.iter().map(|r| r.actions.len() as f64).sum::<f64>() / n,
        mean_time_s: records.iter().map(|r| r.seconds).sum::<f64>() / n,
    };
    Ok(EvalReport { stats, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gae_examples() {
        let (a, r) = compute_gae(&[1.0], &[0.0], &[true], 0.99, 0.95).unwrap();
        assert_eq!((a[0], r[0]), (1.0, 1.0));

        let rewards = [0.5, -0.2, 1.0];
        let values = [0.1, 0.3, -0.4];
        let dones = [false, false, true];
        let (a, _) = compute_gae(&rewards, &values, &dones, 0.9, 0.0).unwrap();
        let delta = [0.5 + 0.9 * 0.3 - 0.1, -0.2 + 0.9 * -0.4 - 0.3, 1.0 + 0.4];
        for i in 0..3 {
            assert!((a[i] - delta[i]).abs() < 1e-15);
        }
        assert!(compute_gae(&[1.0], &[], &[true], 0.9, 0.9).is_err());
    }

    #[test]
    fn episodes_do_not_leak_across_boundaries() {
        let (a, _) = compute_gae(&[1.0, 5.0], &[0.0, 0.0], &[true, true], 0.99, 0.95).unwrap();
        assert_eq!(a, vec![1.0, 5.0]);
    }

    #[test]
    fn clip_examples() {
        assert!((clipped_loss(&[0.3, -0.1], &[0.3, -0.1], &[1.0, -2.0], 0.2) + 0.5).abs() < 1e-15);
        let r15 = 1.5f64.ln();
        assert!((clipped_loss(&[r15], &[0.0], &[1.0], 0.2) - 1.2).abs() < 1e-12);
        let r05 = 0.5f64.ln();
        assert!((clipped_loss(&[r05], &[0.0], &[-1.0], 0.2) + 0.8).abs() < 1e-12);
        assert_eq!(clipped_loss_grad(&[r15], &[0.0], &[1.0], 0.2), vec![0.0]);
        assert_eq!(clipped_loss_grad(&[r05], &[0.0], &[-1.0], 0.2), vec![0.0]);
        assert!(clipped_loss_grad(&[r05], &[0.0], &[1.0], 0.2)[0] > 0.0);
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(1.0, 0.0, 0.0, 0.5, 0.01), -1.0);
        assert_eq!(total_loss(0.0, 2.0, 0.0, 0.5, 0.01), 1.0);
        assert!((total_loss(0.0, 0.0, 4.0, 0.5, 0.01) + 0.04).abs() < 1e-15);
    }

    #[test]
    fn normalize_handles_constant_input() {
        assert_eq!(normalize(&[2.0, 2.0]), vec![0.0, 0.0]);
        let z = normalize(&[1.0, 2.0, 3.0, 4.0]);
        let mean: f64 = z.iter().sum::<f64>() / 4.0;
        let var: f64 = z.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        let c = TrainConfig {
            lambda: 1.5,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
