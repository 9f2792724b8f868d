//! The human–AI team decision problem.
//!
//! Each step an environment case `s` (e.g. true severity in `0..=s_max`) is
//! drawn independently from the case distribution. The AI proposes a
//! decision `a`, the human turns it into the final decision `d = human(a)`,
//! and the team is rewarded `R(s, d)`. Because cases are redrawn
//! independently of the action, the ideal-human and actual-human variants of
//! a scenario differ only in their [`HumanModel`].

mod learn;
mod solve;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub use learn::{
    q_learning, simulate_episodes, simulate_episodes_with, EpisodeStats, QLearningConfig, QLearningResult,
};
pub use solve::{expected_reward_table, policy_value, policy_value_exact, value_iteration, ValueIterationResult};

const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// How the human turns the AI's proposal into the team decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HumanModel {
    Identity,
    /// `d = clip(round(a + shift + noise))`, `noise ~ N(0, noise_sd^2)`.
    AdditiveBias {
        shift: i64,
        #[serde(default)]
        noise_sd: f64,
    },
    /// `rows[a][d] = P(d | a)`.
    Table {
        rows: Vec<Vec<Rational>>,
    },
}

impl HumanModel {
    /// Exact decision distribution for proposal `a` (length `s_max + 1`).
    ///
    /// Gaussian probabilities are computed in floating point; the cdf values
    /// are then taken exactly so the distribution sums to one exactly.
    pub fn decision_distribution(&self, action: usize, s_max: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); s_max + 1];
        match self {
            HumanModel::Identity => out[action] = Rational::one(),
            HumanModel::AdditiveBias { shift, noise_sd } if *noise_sd == 0.0 => {
                out[clip(action as i64 + shift, s_max)] = Rational::one();
            }
            HumanModel::AdditiveBias { shift, noise_sd } => {
                let normal = Normal::new(action as f64 + *shift as f64, *noise_sd).expect("validated noise sd");
                let cdf: Vec<Rational> = (0..s_max)
                    .map(|k| Rational::from_f64_exact(normal.cdf(k as f64 + 0.5)).expect("finite cdf"))
                    .collect();
                let mut prev = Rational::zero();
                for (k, c) in cdf.iter().enumerate() {
                    out[k] = c - &prev;
                    prev = c.clone();
                }
                out[s_max] = Rational::one() - prev;
            }
            HumanModel::Table { rows } => out.clone_from(&rows[action]),
        }
        out
    }

    /// The additive shift, when this is an additive-bias human.
    pub fn shift(&self) -> Option<i64> {
        match self {
            HumanModel::Identity => Some(0),
            HumanModel::AdditiveBias { shift, .. } => Some(*shift),
            HumanModel::Table { .. } => None,
        }
    }

    fn validate(&self, s_max: usize) -> Result<()> {
        match self {
            HumanModel::Identity => Ok(()),
            HumanModel::AdditiveBias { noise_sd, .. } => {
                if noise_sd.is_finite() && *noise_sd >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidScenario(format!("noise_sd {noise_sd} must be finite and nonnegative")))
                }
            }
            HumanModel::Table { rows } => {
                if rows.len() != s_max + 1 {
                    return Err(Error::InvalidScenario(format!(
                        "human table has {} rows, expected {}",
                        rows.len(),
                        s_max + 1
                    )));
                }
                for (a, row) in rows.iter().enumerate() {
                    if row.len() != s_max + 1 || row.iter().any(Rational::is_negative) {
                        return Err(Error::InvalidScenario(format!("human table row {a} is not a distribution")));
                    }
                    check_sums_to_one(row, &format!("human table row {a}"))?;
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn clip(v: i64, s_max: usize) -> usize {
    v.clamp(0, s_max as i64) as usize
}

fn check_sums_to_one(values: &[Rational], what: &str) -> Result<()> {
    let total: Rational = values.iter().sum();
    if (total.to_f64() - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::InvalidScenario(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Team reward `R(s, d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    /// External goal: `-(d - s)^2`.
    QuadraticG,
    /// Human goal: `-(d - clip(s + target_shift))^2`.
    QuadraticH { target_shift: i64 },
    /// `values[s][d]`.
    Table { values: Vec<Vec<f64>> },
}

impl RewardSpec {
    pub fn reward(&self, state: usize, decision: usize, s_max: usize) -> Rational {
        match self {
            RewardSpec::QuadraticG => {
                let e = decision as i64 - state as i64;
                Rational::from(-(e * e))
            }
            RewardSpec::QuadraticH { target_shift } => {
                let target = clip(state as i64 + target_shift, s_max) as i64;
                let e = decision as i64 - target;
                Rational::from(-(e * e))
            }
            RewardSpec::Table { values } => {
                Rational::from_f64_exact(values[state][decision]).expect("validated finite table")
            }
        }
    }

    pub fn reward_f64(&self, state: usize, decision: usize, s_max: usize) -> f64 {
        match self {
            RewardSpec::Table { values } => values[state][decision],
            _ => self.reward(state, decision, s_max).to_f64(),
        }
    }

    /// Full `[s][d]` table.
    pub fn table(&self, s_max: usize) -> Vec<Vec<Rational>> {
        (0..=s_max).map(|s| (0..=s_max).map(|d| self.reward(s, d, s_max)).collect()).collect()
    }

    fn validate(&self, s_max: usize) -> Result<()> {
        if let RewardSpec::Table { values } = self {
            let ok = values.len() == s_max + 1
                && values.iter().all(|row| row.len() == s_max + 1 && row.iter().all(|v| v.is_finite()));
            if !ok {
                return Err(Error::InvalidScenario(format!(
                    "reward table must be {n}x{n} with finite entries",
                    n = s_max + 1
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic AI policy: one proposed decision per environment case.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions }
    }

    pub fn from_fn(s_max: usize, f: impl Fn(usize) -> usize) -> Self {
        Self { actions: (0..=s_max).map(f).collect() }
    }

    /// Always proposes the true case: optimal for an ideal human under the
    /// external goal.
    pub fn deferential(s_max: usize) -> Self {
        Self::from_fn(s_max, |s| s)
    }

    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// CSV with header `state,action`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,action\n");
        for (s, a) in self.actions.iter().enumerate() {
            out.push_str(&format!("{s},{a}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("state,action") => {}
            other => {
                return Err(Error::InvalidArgument(format!("policy csv header must be `state,action`, got {other:?}")))
            }
        }
        let mut pairs = Vec::new();
        for (i, line) in lines.enumerate() {
            let (s, a) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidArgument(format!("policy csv line {}: expected two fields", i + 2)))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("policy csv line {}: bad integer {v:?}", i + 2)))
            };
            pairs.push((parse(s)?, parse(a)?));
        }
        pairs.sort_unstable();
        if pairs.iter().enumerate().any(|(i, (s, _))| *s != i) {
            return Err(Error::InvalidArgument("policy csv must list states 0..=s_max exactly once".into()));
        }
        Ok(Self { actions: pairs.into_iter().map(|(_, a)| a).collect() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeamMdp {
    pub s_max: usize,
    /// Probability of each environment case.
    pub cases: Vec<Rational>,
    pub human: HumanModel,
    pub reward: RewardSpec,
    pub gamma: f64,
}

impl TeamMdp {
    pub fn new(s_max: usize, cases: Vec<Rational>, human: HumanModel, reward: RewardSpec, gamma: f64) -> Result<Self> {
        let mdp = Self { s_max, cases, human, reward, gamma };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_max < 1 {
            return Err(Error::InvalidScenario("s_max must be at least 1".into()));
        }
        if self.cases.len() != self.s_max + 1 || self.cases.iter().any(Rational::is_negative) {
            return Err(Error::InvalidScenario(format!(
                "case distribution must have {} nonnegative entries",
                self.s_max + 1
            )));
        }
        check_sums_to_one(&self.cases, "case distribution")?;
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidScenario(format!("gamma {} must lie in [0, 1)", self.gamma)));
        }
        self.human.validate(self.s_max)?;
        self.reward.validate(self.s_max)
    }

    pub fn num_states(&self) -> usize {
        self.s_max + 1
    }

    pub fn uniform_cases(s_max: usize) -> Vec<Rational> {
        vec![Rational::new(1, s_max as i64 + 1).expect("positive"); s_max + 1]
    }

    pub fn with_human(&self, human: HumanModel) -> Self {
        Self { human, ..self.clone() }
    }

    pub fn with_reward(&self, reward: RewardSpec) -> Self {
        Self { reward, ..self.clone() }
    }

    /// The same scenario with an ideal (pass-through) human.
    pub fn ideal(&self) -> Self {
        self.with_human(HumanModel::Identity)
    }

    pub fn case_weights_f64(&self) -> Vec<f64> {
        self.cases.iter().map(Rational::to_f64).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let cases = match file.case_distribution {
            CaseSpec::Named(name) if name == "uniform" => Self::uniform_cases(file.s_max),
            CaseSpec::Named(name) => {
                return Err(Error::InvalidScenario(format!("unknown case distribution {name:?}")));
            }
            CaseSpec::Explicit(v) => v,
        };
        Self::new(file.s_max, cases, file.human, file.reward, file.gamma)
    }

    pub fn to_json(&self) -> String {
        let uniform = self.cases == Self::uniform_cases(self.s_max);
        let file = ScenarioFile {
            description: None,
            s_max: self.s_max,
            case_distribution: if uniform {
                CaseSpec::Named("uniform".into())
            } else {
                CaseSpec::Explicit(self.cases.clone())
            },
            human: self.human.clone(),
            reward: self.reward.clone(),
            gamma: self.gamma,
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization is infallible")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CaseSpec {
    Named(String),
    Explicit(Vec<Rational>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    s_max: usize,
    case_distribution: CaseSpec,
    human: HumanModel,
    reward: RewardSpec,
    #[serde(default)]
    gamma: f64,
}

/// Uniform cases, a doctor who shifts every decision by `bias_shift`
/// (clipped to the decision range) and the external-goal reward.
pub fn build_clinic_scenario(s_max: usize, bias_shift: i64, gamma: f64) -> Result<TeamMdp> {
    if s_max < 1 {
        return Err(Error::InvalidArgument("s_max must be at least 1".into()));
    }
    if bias_shift.unsigned_abs() as usize > s_max {
        return Err(Error::InvalidArgument(format!("|bias_shift| = {} exceeds s_max = {s_max}", bias_shift.abs())));
    }
    TeamMdp::new(
        s_max,
        TeamMdp::uniform_cases(s_max),
        HumanModel::AdditiveBias { shift: bias_shift, noise_sd: 0.0 },
        RewardSpec::QuadraticG,
        gamma,
    )
}
