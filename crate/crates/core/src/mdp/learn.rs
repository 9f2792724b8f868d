//! Sampling-based learning and evaluation. All randomness comes from an
//! explicitly seeded ChaCha generator.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::Serialize;

use super::solve::{check_policy, greedy, q_table_csv};
use super::{clip, HumanModel, Policy, TeamMdp};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Draws cases and human decisions for one scenario.
struct Sampler<'a> {
    mdp: &'a TeamMdp,
    cases: WeightedIndex<f64>,
    rows: Option<Vec<WeightedIndex<f64>>>,
    noise: Option<Normal<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(mdp: &'a TeamMdp) -> Self {
        let cases = WeightedIndex::new(mdp.case_weights_f64()).expect("validated case distribution");
        let (rows, noise) = match &mdp.human {
            HumanModel::Table { rows } => {
                let rows = rows
                    .iter()
                    .map(|r| WeightedIndex::new(r.iter().map(|p| p.to_f64())).expect("validated human row"))
                    .collect();
                (Some(rows), None)
            }
            HumanModel::AdditiveBias { noise_sd, .. } if *noise_sd > 0.0 => {
                (None, Some(Normal::new(0.0, *noise_sd).expect("validated noise sd")))
            }
            _ => (None, None),
        };
        Self { mdp, cases, rows, noise }
    }

    fn case<R: Rng>(&self, rng: &mut R) -> usize {
        self.cases.sample(rng)
    }

    fn decision<R: Rng>(&self, action: usize, rng: &mut R) -> usize {
        match &self.mdp.human {
            HumanModel::Identity => action,
            HumanModel::AdditiveBias { shift, .. } => {
                let mean = action as f64 + *shift as f64;
                let value = match &self.noise {
                    Some(n) => mean + n.sample(rng),
                    None => mean,
                };
                clip(value.round() as i64, self.mdp.s_max)
            }
            HumanModel::Table { .. } => self.rows.as_ref().expect("table rows")[action].sample(rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QLearningConfig {
    pub episodes: usize,
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the run over which epsilon decays linearly.
    pub decay_fraction: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self { episodes: 200_000, alpha: 0.1, epsilon_start: 1.0, epsilon_end: 0.05, decay_fraction: 0.5 }
    }
}

impl QLearningConfig {
    fn epsilon(&self, episode: usize) -> f64 {
        let horizon = (self.episodes as f64 * self.decay_fraction).max(1.0);
        let t = (episode as f64 / horizon).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QLearningResult {
    pub q: Vec<Vec<f64>>,
    pub policy: Policy,
}

impl QLearningResult {
    pub fn q_csv(&self) -> String {
        q_table_csv(&self.q)
    }
}

/// Tabular Q-learning over single-decision episodes. With `gamma > 0` the
/// target bootstraps from a freshly drawn next case.
pub fn q_learning(mdp: &TeamMdp, config: &QLearningConfig, seed: u64) -> Result<QLearningResult> {
    if config.episodes < 1 {
        return Err(Error::InvalidArgument("episodes must be at least 1".into()));
    }
    if !(config.alpha > 0.0 && config.alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {} must lie in (0, 1]", config.alpha)));
    }
    let n = mdp.num_states();
    let sampler = Sampler::new(mdp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![vec![0.0f64; n]; n];
    for episode in 0..config.episodes {
        let s = sampler.case(&mut rng);
        let action = if rng.random::<f64>() < config.epsilon(episode) { rng.random_range(0..n) } else { greedy(&q[s]) };
        let d = sampler.decision(action, &mut rng);
        let reward = mdp.reward.reward_f64(s, d, mdp.s_max);
        let target = if mdp.gamma > 0.0 {
            let next = sampler.case(&mut rng);
            reward + mdp.gamma * q[next].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        } else {
            reward
        };
        q[s][action] += config.alpha * (target - q[s][action]);
    }
    let policy = Policy::new(q.iter().map(|row| greedy(row)).collect());
    Ok(QLearningResult { q, policy })
}

/// Monte Carlo summary of a policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub episodes: usize,
    pub mean_reward: f64,
    pub reward_sd: f64,
    pub standard_error: f64,
    pub state_counts: Vec<u64>,
    /// `decision_histogram[s][d]`
    pub decision_histogram: Vec<Vec<u64>>,
}

const CHUNK: usize = 8192;

#[derive(Clone)]
struct Partial {
    n: usize,
    sum: f64,
    sum_sq: f64,
    hist: Vec<Vec<u64>>,
}

pub fn simulate_episodes(mdp: &TeamMdp, policy: &Policy, n: usize, seed: u64) -> Result<EpisodeStats> {
    simulate_episodes_with(mdp, policy, n, seed, Execution::default())
}

/// Episodes are split into fixed-size chunks, each with its own ChaCha
/// stream, so the result is identical for sequential and parallel runs.
pub fn simulate_episodes_with(
    mdp: &TeamMdp,
    policy: &Policy,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<EpisodeStats> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    check_policy(mdp, policy)?;
    let states = mdp.num_states();
    let sampler = Sampler::new(mdp);
    let chunks = n.div_ceil(CHUNK);
    let partials = exec::map_range(chunks, exec, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        let mut part = Partial { n: len, sum: 0.0, sum_sq: 0.0, hist: vec![vec![0; states]; states] };
        for _ in 0..len {
            let s = sampler.case(&mut rng);
            let d = sampler.decision(policy.action(s), &mut rng);
            let r = mdp.reward.reward_f64(s, d, mdp.s_max);
            part.sum += r;
            part.sum_sq += r * r;
            part.hist[s][d] += 1;
        }
        part
    });
    let mut total = Partial { n: 0, sum: 0.0, sum_sq: 0.0, hist: vec![vec![0; states]; states] };
    for p in partials {
        total.n += p.n;
        total.sum += p.sum;
        total.sum_sq += p.sum_sq;
        for (acc, row) in total.hist.iter_mut().zip(&p.hist) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    let nf = total.n as f64;
    let mean = total.sum / nf;
    let var = if total.n > 1 { ((total.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    let sd = var.sqrt();
    Ok(EpisodeStats {
        episodes: total.n,
        mean_reward: mean,
        reward_sd: sd,
        standard_error: sd / nf.sqrt(),
        state_counts: total.hist.iter().map(|row| row.iter().sum()).collect(),
        decision_histogram: total.hist,
    })
}
