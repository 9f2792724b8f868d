//! Escalating compensation loops.
//!
//! Each round the AI best-responds to the human's current bias, the human
//! measures how far the team outcome fell short of their own goal, and
//! pushes their bias further in the direction of that goal.

use serde::Serialize;

use crate::compensation::compensation_metric;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::mdp::{build_clinic_scenario, policy_value_exact, value_iteration, HumanModel, Policy, RewardSpec, TeamMdp};
use crate::rational::{decimal12, Rational};
use crate::report::{self, Object};

const VI_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    FixedPoint,
    Oscillation,
    Unsustainable,
    MaxRounds,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::FixedPoint => "FIXED_POINT",
            Classification::Oscillation => "OSCILLATION",
            Classification::Unsustainable => "UNSUSTAINABLE",
            Classification::MaxRounds => "MAX_ROUNDS",
        }
    }
}

/// How the human updates their bias after each round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationRule {
    /// `b' = b + sign(target_shift) * eta * clip(shortfall / range, 0, 1)`
    #[default]
    ProportionalShortfall,
}

impl AdaptationRule {
    fn next_bias(self, bias: f64, direction: f64, eta: f64, normalized_shortfall: f64) -> f64 {
        match self {
            AdaptationRule::ProportionalShortfall => bias + direction * eta * normalized_shortfall,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopConfig {
    /// Scenario whose human bias is replaced each round. Evaluated with `gamma = 0`.
    #[serde(skip)]
    pub base: TeamMdp,
    /// Shift of the human's own goal, `QuadraticH { target_shift }`.
    pub target_shift: i64,
    pub initial_bias: f64,
    pub eta: f64,
    pub b_max: f64,
    pub max_rounds: usize,
    pub tol: f64,
    pub rule: AdaptationRule,
}

impl LoopConfig {
    /// Uniform clinic with the human starting at their goal shift.
    pub fn clinic(s_max: usize, target_shift: i64) -> Result<Self> {
        let base = build_clinic_scenario(s_max, target_shift, 0.0)?;
        Ok(Self::with_defaults(base, target_shift, target_shift as f64))
    }

    /// Loop over an arbitrary scenario whose human is an additive bias.
    pub fn for_scenario(mdp: &TeamMdp, target_shift: i64) -> Result<Self> {
        let shift = mdp
            .human
            .shift()
            .ok_or_else(|| Error::InvalidScenario("escalation needs an additive-bias or identity human".into()))?;
        let mut base = mdp.clone();
        base.gamma = 0.0;
        Ok(Self::with_defaults(base, target_shift, shift as f64))
    }

    fn with_defaults(base: TeamMdp, target_shift: i64, initial_bias: f64) -> Self {
        Self {
            base,
            target_shift,
            initial_bias,
            eta: 0.5,
            b_max: 20.0,
            max_rounds: 100,
            tol: 1e-6,
            rule: AdaptationRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta {} must be a nonnegative number", self.eta));
        }
        if !(self.b_max > 0.0 && self.b_max.is_finite()) {
            return bad(format!("B_max {} must be positive", self.b_max));
        }
        if self.max_rounds < 1 {
            return bad("T must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol {} must be positive", self.tol));
        }
        if !self.initial_bias.is_finite() {
            return bad("initial bias must be finite".into());
        }
        self.base.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    pub bias: f64,
    /// `round(bias)`, the shift the human model actually applies.
    pub applied_shift: i64,
    pub next_bias: f64,
    /// Human-goal value lost relative to the human's optimum.
    pub shortfall: Rational,
    pub normalized_shortfall: f64,
    /// External-goal value of the team this round.
    pub team_value: Rational,
    /// Expected absolute deviation from the deferential policy.
    pub compensation: Rational,
    pub policy: Policy,
    /// Set on the round at which the loop stopped.
    pub classification: Option<Classification>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopTrajectory {
    pub config: LoopConfig,
    pub records: Vec<RoundRecord>,
    pub classification: Classification,
}

impl LoopTrajectory {
    /// CSV with header `round,bias,shortfall,team_value,classification_so_far`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,bias,shortfall,team_value,classification_so_far\n");
        for r in &self.records {
            let label = match r.classification {
                Some(c) => c.as_str(),
                None => "RUNNING",
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round,
                r.bias,
                decimal12(r.shortfall.to_f64()),
                decimal12(r.team_value.to_f64()),
                label
            ));
        }
        out
    }

    pub fn final_bias(&self) -> f64 {
        self.records.last().map_or(self.config.initial_bias, |r| r.next_bias)
    }

    pub fn summary(&self) -> Object {
        let mut obj = Object::new();
        report::put(&mut obj, "classification", self.classification.as_str());
        report::put(&mut obj, "rounds", self.records.len());
        report::put_real(&mut obj, "initial_bias", self.config.initial_bias);
        report::put_real(&mut obj, "final_bias", self.final_bias());
        report::put_real(&mut obj, "eta", self.config.eta);
        report::put_real(&mut obj, "b_max", self.config.b_max);
        obj
    }
}

fn optimum_per_case(mdp: &TeamMdp, reward: &RewardSpec) -> Rational {
    let table = reward.table(mdp.s_max);
    mdp.cases.iter().zip(&table).map(|(p, row)| p * row.iter().max().expect("non-empty row")).sum()
}

/// Human-goal value of the outcome that exactly meets the external goal.
fn external_outcome_value(mdp: &TeamMdp, reward: &RewardSpec) -> Rational {
    mdp.cases.iter().enumerate().map(|(s, p)| p * reward.reward(s, s, mdp.s_max)).sum()
}

pub fn run_loop(config: &LoopConfig) -> Result<LoopTrajectory> {
    config.validate()?;
    let base = &config.base;
    let noise_sd = match base.human {
        HumanModel::AdditiveBias { noise_sd, .. } => noise_sd,
        _ => 0.0,
    };
    let h_reward = RewardSpec::QuadraticH { target_shift: config.target_shift };
    let h_optimum = optimum_per_case(base, &h_reward);
    let range = &h_optimum - external_outcome_value(base, &h_reward);
    let deferential = value_iteration(&base.ideal(), VI_TOL)?.policy;
    let direction = config.target_shift.signum() as f64;

    let mut records: Vec<RoundRecord> = Vec::new();
    let mut bias = config.initial_bias;
    for round in 1..=config.max_rounds {
        let applied_shift = bias.round() as i64;
        let mdp = base.with_human(HumanModel::AdditiveBias { shift: applied_shift, noise_sd });
        let policy = value_iteration(&mdp, VI_TOL)?.policy;
        let team_value = policy_value_exact(&mdp, &policy)?;
        let achieved = policy_value_exact(&mdp.with_reward(h_reward.clone()), &policy)?;
        let shortfall = &h_optimum - achieved;
        let normalized_shortfall = if range.is_positive() {
            (&shortfall / &range).to_f64().clamp(0.0, 1.0)
        } else if shortfall.is_positive() {
            1.0
        } else {
            0.0
        };
        let next_bias = config.rule.next_bias(bias, direction, config.eta, normalized_shortfall);
        let compensation = compensation_metric(&policy, &deferential, &base.cases)?.magnitude;
        records.push(RoundRecord {
            round,
            bias,
            applied_shift,
            next_bias,
            shortfall,
            normalized_shortfall,
            team_value,
            compensation,
            policy,
            classification: None,
        });
        if let Some(c) = classify_round(&records, records.len() - 1, config.tol, config.b_max) {
            records.last_mut().expect("just pushed").classification = Some(c);
            return Ok(LoopTrajectory { config: config.clone(), records, classification: c });
        }
        bias = next_bias;
    }
    records.last_mut().expect("T >= 1").classification = Some(Classification::MaxRounds);
    Ok(LoopTrajectory { config: config.clone(), records, classification: Classification::MaxRounds })
}

fn classify_round(records: &[RoundRecord], t: usize, tol: f64, b_max: f64) -> Option<Classification> {
    let r = &records[t];
    if r.bias.abs() >= b_max || r.next_bias.abs() >= b_max {
        return Some(Classification::Unsustainable);
    }
    if (r.next_bias - r.bias).abs() < tol {
        return Some(Classification::FixedPoint);
    }
    let next_state = r.next_bias.round();
    let last_seen = records[..=t].iter().rposition(|p| p.bias.round() == next_state);
    match last_seen {
        Some(j) if j < t => Some(Classification::Oscillation),
        _ => None,
    }
}

/// Classification implied by a record sequence, with the same per-round
/// precedence as [`run_loop`].
pub fn classify(records: &[RoundRecord], tol: f64, b_max: f64) -> Result<Classification> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("cannot classify an empty trajectory".into()));
    }
    Ok((0..records.len()).find_map(|t| classify_round(records, t, tol, b_max)).unwrap_or(Classification::MaxRounds))
}

/// Runs each config independently; output order follows input order.
pub fn sweep(configs: &[LoopConfig], exec: Execution) -> Result<Vec<LoopTrajectory>> {
    exec::map_slice(configs, exec, run_loop).into_iter().collect()
}

/// Sweep summary keyed by the decimal rendering of each eta.
pub fn sweep_json(trajectories: &[LoopTrajectory]) -> String {
    let mut obj = Object::new();
    for t in trajectories {
        obj.insert(decimal12(t.config.eta), t.summary().into());
    }
    report::to_pretty(&obj.into())
}
