//! Group relative policy optimization: group-normalized advantages, the k3
//! KL estimate against a reference policy, and the surrogate loss with its
//! gradient. [`toy`] trains a tabular SMILES policy with them.

pub mod toy;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrpoError {
    #[error("a group needs at least 2 completions, got {0}")]
    GroupTooSmall(usize),
    #[error("group has {got} completions, config expects {expected}")]
    GroupSizeMismatch { expected: usize, got: usize },
    #[error("completion {0} is empty")]
    EmptyCompletion(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid config: {0}")]
    BadConfig(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub kl_coeff: f64,
    pub temperature: f64,
    pub topk: usize,
    pub advantage_epsilon: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 4,
            kl_coeff: 0.04,
            temperature: 1.0,
            topk: 10,
            advantage_epsilon: 1e-8,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::GroupTooSmall(self.group_size));
        }
        if !(self.kl_coeff >= 0.0) {
            return Err(GrpoError::BadConfig("kl_coeff must be non-negative"));
        }
        if !(self.temperature > 0.0) {
            return Err(GrpoError::BadConfig("temperature must be positive"));
        }
        if self.topk == 0 {
            return Err(GrpoError::BadConfig("topk must be at least 1"));
        }
        Ok(())
    }
}

/// One sampled output. Entries past `len` (padding after the end token)
/// are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub tokens: Vec<usize>,
    pub logp_current: Vec<f64>,
    pub logp_ref: Vec<f64>,
    /// Tokens up to and including the end token.
    pub len: usize,
    pub reward: f64,
}

impl Completion {
    pub fn new(logp_current: Vec<f64>, logp_ref: Vec<f64>, reward: f64) -> Self {
        let n = logp_current.len();
        Completion {
            tokens: vec![0; n],
            logp_current,
            logp_ref,
            len: n,
            reward,
        }
    }
}

/// `(r_i - mean) / (std + eps)` with the population standard deviation.
pub fn group_advantages(rewards: &[f64], eps: f64) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(rewards.iter().map(|r| (r - mean) / (std + eps)).collect())
}

/// `exp(ref - cur) - (ref - cur) - 1` per token.
pub fn kl_per_token(logp_current: &[f64], logp_ref: &[f64]) -> Result<Vec<f64>, GrpoError> {
    if logp_current.len() != logp_ref.len() {
        return Err(GrpoError::LengthMismatch(
            logp_current.len(),
            logp_ref.len(),
        ));
    }
    Ok(logp_current
        .iter()
        .zip(logp_ref)
        .map(|(c, r)| {
            let d = r - c;
            d.exp() - d - 1.0
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrpoLoss {
    pub loss: f64,
    pub advantages: Vec<f64>,
    /// Gradient with respect to `logp_current`, one row per completion,
    /// covering the true length only.
    pub grad: Vec<Vec<f64>>,
    /// Mean over completions of the per-token mean KL.
    pub mean_kl: f64,
}

fn check_group(group: &[Completion], cfg: &GrpoConfig) -> Result<(), GrpoError> {
    if group.len() != cfg.group_size {
        return Err(GrpoError::GroupSizeMismatch {
            expected: cfg.group_size,
            got: group.len(),
        });
    }
    for (i, c) in group.iter().enumerate() {
        if c.len == 0 {
            return Err(GrpoError::EmptyCompletion(i));
        }
        if c.logp_current.len() < c.len || c.logp_ref.len() < c.len {
            return Err(GrpoError::LengthMismatch(c.logp_current.len(), c.len));
        }
    }
    Ok(())
}

/// Surrogate value with the ratio denominator pinned to `detached`:
/// `-(1/G) Σ_i (1/|o_i|) Σ_t [exp(c - d) Â_i - β KL(c, ref)]`.
pub fn grpo_surrogate(
    group: &[Completion],
    detached: &[Vec<f64>],
    cfg: &GrpoConfig,
) -> Result<f64, GrpoError> {
    check_group(group, cfg)?;
    let rewards: Vec<f64> = group.iter().map(|c| c.reward).collect();
    let adv = group_advantages(&rewards, cfg.advantage_epsilon)?;
    let mut total = 0.0;
    for ((c, a), d) in group.iter().zip(&adv).zip(detached) {
        let cur = &c.logp_current[..c.len];
        let kl = kl_per_token(cur, &c.logp_ref[..c.len])?;
        let s: f64 = (0..c.len)
            .map(|t| (cur[t] - d[t]).exp() * a - cfg.kl_coeff * kl[t])
            .sum();
        total += s / c.len as f64;
    }
    Ok(-total / group.len() as f64)
}

/// Loss value at the current policy and its gradient with respect to every
/// token's current log-probability, treating the ratio denominator as
/// constant.
pub fn grpo_loss(group: &[Completion], cfg: &GrpoConfig) -> Result<GrpoLoss, GrpoError> {
    check_group(group, cfg)?;
    let rewards: Vec<f64> = group.iter().map(|c| c.reward).collect();
    let advantages = group_advantages(&rewards, cfg.advantage_epsilon)?;
    let g = group.len() as f64;
    let mut loss = 0.0;
    let mut mean_kl = 0.0;
    let mut grad = Vec::with_capacity(group.len());
    for (c, &a) in group.iter().zip(&advantages) {
        let cur = &c.logp_current[..c.len];
        let rf = &c.logp_ref[..c.len];
        let kl = kl_per_token(cur, rf)?;
        let n = c.len as f64;
        loss -= kl.iter().map(|k| a - cfg.kl_coeff * k).sum::<f64>() / (g * n);
        mean_kl += kl.iter().sum::<f64>() / n;
        grad.push(
            cur.iter()
                .zip(rf)
                .map(|(c, r)| -(a - cfg.kl_coeff * (1.0 - (r - c).exp())) / (g * n))
                .collect(),
        );
    }
    Ok(GrpoLoss {
        loss,
        advantages,
        grad,
        mean_kl: mean_kl / g,
    })
}
