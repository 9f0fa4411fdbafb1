//! A tabular next-token policy over SMILES tokens, trained with GRPO
//! against the combined reward.
//!
//! Logits are indexed by `[bucket][previous token][next token]`, where the
//! bucket is derived from the target (first heavy element and token length)
//! and stands in for image conditioning.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grpo_loss, Completion, GrpoConfig, GrpoError};
use crate::reward::{combined_reward, RewardBreakdown, RewardConfig};

pub const END: usize = 0;
pub const VOCAB: [&str; 16] = [
    "<end>", "C", "c", "N", "O", "S", "(", ")", "=", "#", "1", "[C@H]", "[C@@H]", "/", "\\", "Cl",
];
pub const MAX_LEN: usize = 128;

const ELEMENT_BUCKETS: [&str; 7] = ["C", "N", "O", "S", "F", "Cl", "Br"];
const LENGTH_BUCKETS: usize = 16;
/// Row index for "no previous token".
const START: usize = VOCAB.len();

/// Splits SMILES into bracket atoms, two-letter halogens and single
/// characters.
pub fn tokenize(smiles: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = smiles.chars().peekable();
    while let Some(ch) = chars.next() {
        let mut tok = ch.to_string();
        if ch == '[' {
            for c in chars.by_ref() {
                tok.push(c);
                if c == ']' {
                    break;
                }
            }
        } else if (ch == 'C' && chars.peek() == Some(&'l'))
            || (ch == 'B' && chars.peek() == Some(&'r'))
        {
            tok.push(chars.next().unwrap());
        }
        out.push(tok);
    }
    out
}

/// Conditioning bucket of a target SMILES.
pub fn bucket_of(target: &str) -> usize {
    let toks = tokenize(target);
    let first = toks
        .iter()
        .map(|t| {
            let t = t.trim_start_matches('[');
            let letters: String = t.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
            let mut cs = letters.chars();
            match cs.next() {
                Some(h) => {
                    let up = h.to_ascii_uppercase().to_string();
                    let two = format!("{up}{}", cs.next().unwrap_or(' '));
                    if ELEMENT_BUCKETS.contains(&two.trim_end()) {
                        two.trim_end().to_string()
                    } else {
                        up
                    }
                }
                None => String::new(),
            }
        })
        .find(|e| !e.is_empty() && e != "H");
    let e = first
        .and_then(|e| ELEMENT_BUCKETS.iter().position(|x| *x == e))
        .unwrap_or(ELEMENT_BUCKETS.len());
    e * LENGTH_BUCKETS + toks.len().min(LENGTH_BUCKETS - 1)
}

pub fn bucket_count() -> usize {
    (ELEMENT_BUCKETS.len() + 1) * LENGTH_BUCKETS
}

/// Tokens with logit at least the k-th largest (ties kept).
fn top_k(logits: &[f64], k: usize) -> Vec<usize> {
    if k >= logits.len() {
        return (0..logits.len()).collect();
    }
    let mut sorted = logits.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[k - 1];
    (0..logits.len()).filter(|&i| logits[i] >= cut).collect()
}

fn log_softmax_over(logits: &[f64], kept: &[usize], temperature: f64, token: usize) -> f64 {
    let m = kept
        .iter()
        .map(|&i| logits[i])
        .fold(f64::NEG_INFINITY, f64::max)
        / temperature;
    let z: f64 = kept
        .iter()
        .map(|&i| (logits[i] / temperature - m).exp())
        .sum();
    logits[token] / temperature - m - z.ln()
}

/// Draws a token from `softmax(logits / temperature)` truncated to the top
/// `k`; returns it with its log-probability under the truncated,
/// renormalized distribution.
pub fn sample_token(
    logits: &[f64],
    temperature: f64,
    k: usize,
    rng: &mut impl Rng,
) -> (usize, f64) {
    let kept = top_k(logits, k);
    let lps: Vec<f64> = kept
        .iter()
        .map(|&t| log_softmax_over(logits, &kept, temperature, t))
        .collect();
    let mut u: f64 = rng.gen();
    for (&t, &lp) in kept.iter().zip(&lps) {
        u -= lp.exp();
        if u < 0.0 {
            return (t, lp);
        }
    }
    let last = kept.len() - 1;
    (kept[last], lps[last])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyPolicy {
    /// `buckets × (VOCAB + 1) × VOCAB`, row-major.
    pub logits: Vec<f64>,
}

impl ToyPolicy {
    const ROWS: usize = VOCAB.len() + 1;

    /// Small random logits with the end token favored, so that early
    /// samples are short.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = bucket_count() * Self::ROWS * VOCAB.len();
        let logits = (0..n)
            .map(|i| {
                let bias = if i % VOCAB.len() == END { 1.0 } else { 0.0 };
                bias + rng.gen_range(-0.1..0.1)
            })
            .collect();
        ToyPolicy { logits }
    }

    fn offset(bucket: usize, prev: usize) -> usize {
        (bucket * Self::ROWS + prev) * VOCAB.len()
    }

    pub fn row(&self, bucket: usize, prev: usize) -> &[f64] {
        let o = Self::offset(bucket, prev);
        &self.logits[o..o + VOCAB.len()]
    }

    fn prev_of(tokens: &[usize], t: usize) -> usize {
        if t == 0 {
            START
        } else {
            tokens[t - 1]
        }
    }

    /// Log-probability of each token of `tokens` under `self`, truncated to
    /// the candidate set `policy` would keep at that position.
    fn score(
        &self,
        policy: &ToyPolicy,
        bucket: usize,
        tokens: &[usize],
        cfg: &GrpoConfig,
    ) -> Vec<f64> {
        (0..tokens.len())
            .map(|t| {
                let prev = Self::prev_of(tokens, t);
                let kept = top_k(policy.row(bucket, prev), cfg.topk);
                log_softmax_over(self.row(bucket, prev), &kept, cfg.temperature, tokens[t])
            })
            .collect()
    }

    /// Adds `scale · ∂logp/∂logits` for every token of `tokens`, where
    /// `scale[t]` multiplies token `t`.
    fn accumulate_grad(
        &self,
        bucket: usize,
        tokens: &[usize],
        scale: &[f64],
        cfg: &GrpoConfig,
        out: &mut [f64],
    ) {
        for (t, &s) in scale.iter().enumerate() {
            let prev = Self::prev_of(tokens, t);
            let row = self.row(bucket, prev);
            let kept = top_k(row, cfg.topk);
            let o = Self::offset(bucket, prev);
            for &j in &kept {
                let p = log_softmax_over(row, &kept, cfg.temperature, j).exp();
                let d = if j == tokens[t] { 1.0 - p } else { -p };
                out[o + j] += s * d / cfg.temperature;
            }
        }
    }
}

pub fn detokenize(tokens: &[usize]) -> String {
    tokens
        .iter()
        .take_while(|&&t| t != END)
        .map(|&t| VOCAB[t])
        .collect()
}

/// `group_size` completions for `bucket`, each drawn from its own stream of
/// `seed`. Rewards are left at zero.
pub fn sample_completions(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    bucket: usize,
    cfg: &GrpoConfig,
    seed: u64,
) -> Vec<Completion> {
    (0..cfg.group_size)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut tokens = Vec::new();
            let mut logp_current = Vec::new();
            while tokens.len() < MAX_LEN {
                let prev = ToyPolicy::prev_of(&tokens, tokens.len());
                let (tok, lp) = sample_token(
                    policy.row(bucket, prev),
                    cfg.temperature,
                    cfg.topk,
                    &mut rng,
                );
                tokens.push(tok);
                logp_current.push(lp);
                if tok == END {
                    break;
                }
            }
            let logp_ref = reference.score(policy, bucket, &tokens, cfg);
            Completion {
                len: tokens.len(),
                tokens,
                logp_current,
                logp_ref,
                reward: 0.0,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Tanimoto,
    Stereo,
    Weighted,
}

impl RewardMode {
    pub fn pick(self, b: &RewardBreakdown) -> f64 {
        match self {
            RewardMode::Tanimoto => b.r_tanimoto,
            RewardMode::Stereo => b.r_stereo,
            RewardMode::Weighted => b.r_combined,
        }
    }
}

impl std::str::FromStr for RewardMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tanimoto" => Ok(RewardMode::Tanimoto),
            "stereo" => Ok(RewardMode::Stereo),
            "weighted" => Ok(RewardMode::Weighted),
            _ => Err(format!("unknown reward mode {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyConfig {
    pub grpo: GrpoConfig,
    pub steps: usize,
    pub learning_rate: f64,
    /// Gradients with a larger L2 norm are scaled down to this norm.
    pub clip_norm: f64,
    pub mode: RewardMode,
    pub reward: RewardConfig,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            grpo: GrpoConfig::default(),
            steps: 400,
            learning_rate: 1.0,
            clip_norm: 1.0,
            mode: RewardMode::Weighted,
            reward: RewardConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub mean_reward: f64,
    pub mean_kl: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyRun {
    pub trajectory: Vec<StepStats>,
    pub initial: ToyPolicy,
    pub policy: ToyPolicy,
}

impl ToyRun {
    pub fn to_csv(&self) -> String {
        trajectory_csv(&self.trajectory)
    }

    /// Mean absolute logit change from the reference policy.
    pub fn mean_logit_change(&self) -> f64 {
        let n = self.policy.logits.len() as f64;
        self.policy
            .logits
            .iter()
            .zip(&self.initial.logits)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / n
    }
}

pub fn trajectory_csv(rows: &[StepStats]) -> String {
    let mut out = String::from("step,mean_reward,mean_kl\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.step, r.mean_reward, r.mean_kl);
    }
    out
}

/// One GRPO step over every target; returns the step statistics.
fn train_step(
    policy: &mut ToyPolicy,
    reference: &ToyPolicy,
    targets: &[(String, usize)],
    cfg: &ToyConfig,
    seed: u64,
    step: usize,
) -> Result<StepStats, GrpoError> {
    let mut grad = vec![0.0; policy.logits.len()];
    let (mut reward_sum, mut kl_sum, mut count) = (0.0, 0.0, 0usize);
    for (ti, (target, bucket)) in targets.iter().enumerate() {
        let stream_seed =
            seed ^ ((step as u64) << 20 | ti as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut group = sample_completions(policy, reference, *bucket, &cfg.grpo, stream_seed);
        for c in &mut group {
            let b = combined_reward(&detokenize(&c.tokens), target, &cfg.reward);
            c.reward = cfg.mode.pick(&b);
            reward_sum += c.reward;
        }
        count += group.len();
        let l = grpo_loss(&group, &cfg.grpo)?;
        kl_sum += l.mean_kl * group.len() as f64;
        for (c, g) in group.iter().zip(&l.grad) {
            policy.accumulate_grad(*bucket, &c.tokens[..c.len], g, &cfg.grpo, &mut grad);
        }
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let shrink = if norm > cfg.clip_norm {
        cfg.clip_norm / norm
    } else {
        1.0
    };
    for (w, g) in policy.logits.iter_mut().zip(&grad) {
        *w -= cfg.learning_rate * shrink * g;
    }
    Ok(StepStats {
        step,
        mean_reward: reward_sum / count as f64,
        mean_kl: kl_sum / count as f64,
    })
}

/// Trains a fresh policy on `targets`; the reference is the initial policy.
pub fn toy_train<S: AsRef<str>>(
    targets: &[S],
    cfg: &ToyConfig,
    seed: u64,
) -> Result<ToyRun, GrpoError> {
    if targets.is_empty() {
        return Err(GrpoError::BadConfig("no targets"));
    }
    cfg.grpo.validate()?;
    let initial = ToyPolicy::init(seed);
    let mut policy = initial.clone();
    let targets: Vec<(String, usize)> = targets
        .iter()
        .map(|t| (t.as_ref().to_string(), bucket_of(t.as_ref())))
        .collect();
    let trajectory = (0..cfg.steps)
        .map(|step| train_step(&mut policy, &initial, &targets, cfg, seed, step))
        .collect::<Result<_, _>>()?;
    Ok(ToyRun {
        trajectory,
        initial,
        policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer() {
        assert_eq!(
            tokenize("C[C@H](Cl)Br"),
            vec!["C", "[C@H]", "(", "Cl", ")", "Br"]
        );
        assert_ne!(bucket_of("CC(=O)O"), bucket_of("C[C@H](N)C"));
        assert_eq!(bucket_of("ClCC") / LENGTH_BUCKETS, 5);
    }

    #[test]
    fn topk_keeps_ties() {
        assert_eq!(top_k(&[1.0, 2.0, 2.0, 0.0], 2), vec![1, 2]);
        assert_eq!(top_k(&[1.0, 2.0, 1.0, 0.0], 2), vec![0, 1, 2]);
    }

    #[test]
    fn greedy_is_identical() {
        let p = ToyPolicy::init(3);
        let cfg = GrpoConfig {
            topk: 1,
            ..GrpoConfig::default()
        };
        let g = sample_completions(&p, &p, 5, &cfg, 11);
        assert!(g.windows(2).all(|w| w[0].tokens == w[1].tokens));
        assert!(g[0].logp_current.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn sampling_deterministic() {
        let p = ToyPolicy::init(3);
        let cfg = GrpoConfig::default();
        assert_eq!(
            sample_completions(&p, &p, 7, &cfg, 1),
            sample_completions(&p, &p, 7, &cfg, 1)
        );
    }

    #[test]
    fn zero_steps_and_no_targets() {
        let cfg = ToyConfig {
            steps: 0,
            ..ToyConfig::default()
        };
        assert!(toy_train(&["CCO"], &cfg, 1).unwrap().trajectory.is_empty());
        assert!(toy_train(&[] as &[&str], &cfg, 1).is_err());
    }

    #[test]
    fn equal_rewards_leave_policy_unchanged() {
        // an unparseable target scores every completion 0
        let cfg = ToyConfig {
            steps: 1,
            grpo: GrpoConfig {
                kl_coeff: 0.0,
                ..GrpoConfig::default()
            },
            ..ToyConfig::default()
        };
        let run = toy_train(&["C1CC"], &cfg, 4).unwrap();
        assert_eq!(run.policy, run.initial);
    }
}
