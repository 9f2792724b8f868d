//! Learning the human's reward from noisy utility feedback and measuring
//! the misalignment that survives retraining.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::compensation::{compensation_metric, CompensationReport};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::mdp::{policy_value_exact, value_iteration, RewardSpec, TeamMdp};
use crate::rational::Rational;

const VI_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeedbackSample {
    pub state: usize,
    pub decision: usize,
    pub observed_utility: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeedbackSet {
    pub s_max: usize,
    pub noise_sd: f64,
    pub samples: Vec<FeedbackSample>,
}

/// How `(state, decision)` cells are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingPlan {
    /// Every sample picks a cell uniformly at random.
    #[default]
    Uniform,
    /// The first samples visit each cell once in row-major order; the rest
    /// are uniform.
    Stratified,
}

pub fn sample_feedback(
    true_reward: &RewardSpec,
    s_max: usize,
    n: usize,
    noise_sd: f64,
    seed: u64,
    plan: SamplingPlan,
) -> Result<FeedbackSet> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sd {noise_sd} must be nonnegative")));
    }
    let side = s_max + 1;
    let noise = (noise_sd > 0.0).then(|| Normal::new(0.0, noise_sd).expect("checked sd"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let (state, decision) = match plan {
                SamplingPlan::Stratified if i < side * side => (i / side, i % side),
                _ => (rng.random_range(0..side), rng.random_range(0..side)),
            };
            let mut observed_utility = true_reward.reward_f64(state, decision, s_max);
            if let Some(noise) = &noise {
                observed_utility += noise.sample(&mut rng);
            }
            FeedbackSample { state, decision, observed_utility }
        })
        .collect();
    Ok(FeedbackSet { s_max, noise_sd, samples })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InferredReward {
    /// `table[s][d]`
    pub table: Vec<Vec<f64>>,
    /// Fraction of cells with at least one sample.
    pub coverage: f64,
    pub kappa: f64,
    pub noise_sd: f64,
}

impl InferredReward {
    pub fn reward_spec(&self) -> RewardSpec {
        RewardSpec::Table { values: self.table.clone() }
    }

    /// CSV with header `state,decision,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,decision,value\n");
        for (s, row) in self.table.iter().enumerate() {
            for (d, v) in row.iter().enumerate() {
                out.push_str(&format!("{s},{d},{v}\n"));
            }
        }
        out
    }
}

fn smooth_row(row: &[Option<f64>], kappa: f64) -> Vec<Option<f64>> {
    let covered: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(j, v)| v.map(|v| (j, v))).collect();
    if kappa == 0.0 || covered.is_empty() {
        return row.to_vec();
    }
    if kappa >= (row.len() - 1) as f64 {
        let mean = covered.iter().map(|(_, v)| v).sum::<f64>() / covered.len() as f64;
        return vec![Some(mean); row.len()];
    }
    (0..row.len())
        .map(|d| {
            let (mut num, mut den) = (0.0, 0.0);
            for &(j, v) in &covered {
                let w = 1.0 - (j as f64 - d as f64).abs() / (kappa + 1.0);
                if w > 0.0 {
                    num += w * v;
                    den += w;
                }
            }
            (den > 0.0).then(|| num / den)
        })
        .collect()
}

/// Index of the nearest `Some` entry to `i`, lower index on ties.
fn nearest<T>(items: &[Option<T>], i: usize) -> Option<usize> {
    (0..items.len()).filter(|&j| items[j].is_some()).min_by_key(|&j| (j.abs_diff(i), j))
}

/// Cell means, triangular smoothing of half-width `kappa` along the
/// decision axis, then nearest-neighbor fill for cells nothing reached.
pub fn fit_reward(feedback: &FeedbackSet, kappa: f64) -> Result<InferredReward> {
    if feedback.samples.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a reward from zero samples".into()));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} must be nonnegative")));
    }
    let side = feedback.s_max + 1;
    let mut sum = vec![vec![0.0f64; side]; side];
    let mut count = vec![vec![0usize; side]; side];
    for f in &feedback.samples {
        if f.state >= side || f.decision >= side {
            return Err(Error::InvalidArgument(format!("sample ({}, {}) outside the grid", f.state, f.decision)));
        }
        sum[f.state][f.decision] += f.observed_utility;
        count[f.state][f.decision] += 1;
    }
    let covered = count.iter().flatten().filter(|&&c| c > 0).count();
    let smoothed: Vec<Vec<Option<f64>>> = (0..side)
        .map(|s| {
            let means: Vec<Option<f64>> =
                (0..side).map(|d| (count[s][d] > 0).then(|| sum[s][d] / count[s][d] as f64)).collect();
            smooth_row(&means, kappa)
        })
        .collect();
    let filled_rows: Vec<Option<Vec<f64>>> = smoothed
        .iter()
        .map(|row| {
            nearest(row, 0)?;
            Some((0..side).map(|d| row[nearest(row, d).expect("row has a value")].expect("nearest is some")).collect())
        })
        .collect();
    let table = (0..side)
        .map(|s| filled_rows[nearest(&filled_rows, s).expect("at least one sample")].clone().expect("nearest is some"))
        .collect();
    Ok(InferredReward { table, coverage: covered as f64 / (side * side) as f64, kappa, noise_sd: feedback.noise_sd })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Misalignment {
    /// `J_H(pi_H) - J_H(pi_hat)`, both under an identity human.
    pub m: Rational,
    pub residual_compensation: CompensationReport,
}

pub fn residual_misalignment(
    inferred: &InferredReward,
    true_reward: &RewardSpec,
    mdp: &TeamMdp,
) -> Result<Misalignment> {
    if inferred.table.len() != mdp.num_states() {
        return Err(Error::StateMismatch { left: inferred.table.len(), right: mdp.num_states() });
    }
    let truth = mdp.ideal().with_reward(true_reward.clone());
    truth.validate()?;
    let learned = truth.with_reward(inferred.reward_spec());
    learned.validate()?;
    let pi_true = value_iteration(&truth, VI_TOL)?.policy;
    let pi_hat = value_iteration(&learned, VI_TOL)?.policy;
    let m = policy_value_exact(&truth, &pi_true)? - policy_value_exact(&truth, &pi_hat)?;
    let residual_compensation = compensation_metric(&pi_hat, &pi_true, &mdp.cases)?;
    Ok(Misalignment { m, residual_compensation })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    pub config_id: String,
    pub sigma: f64,
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendRow {
    pub config: TrendConfig,
    pub m: f64,
    pub coverage: f64,
}

/// Sample, fit and score each config independently.
pub fn run_trend(
    mdp: &TeamMdp,
    true_reward: &RewardSpec,
    configs: &[TrendConfig],
    plan: SamplingPlan,
    exec: Execution,
) -> Result<Vec<TrendRow>> {
    exec::map_slice(configs, exec, |c| {
        let feedback = sample_feedback(true_reward, mdp.s_max, c.n, c.sigma, c.seed, plan)?;
        let inferred = fit_reward(&feedback, c.kappa)?;
        let mis = residual_misalignment(&inferred, true_reward, mdp)?;
        Ok(TrendRow { config: c.clone(), m: mis.m.to_f64(), coverage: inferred.coverage })
    })
    .into_iter()
    .collect()
}

/// CSV with header `config_id,sigma,kappa,n,seed,M`.
pub fn trend_csv(rows: &[TrendRow]) -> String {
    let mut out = String::from("config_id,sigma,kappa,n,seed,M\n");
    for r in rows {
        let c = &r.config;
        out.push_str(&format!("{},{},{},{},{},{}\n", c.config_id, c.sigma, c.kappa, c.n, c.seed, r.m));
    }
    out
}
