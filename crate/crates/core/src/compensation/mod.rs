//! Measuring, detecting and minimizing compensation.
//!
//! Compensation is the AI's deviation from the deferential policy (the one
//! that would be optimal with an ideal human). Actions are ordered
//! severities, so the primary metric is the expected absolute deviation;
//! the disagreement rate is reported alongside.

mod audit;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{expected_reward_table, policy_value_exact, Policy, TeamMdp};
use crate::rational::Rational;

pub use audit::{audit, AuditInput, AuditReport, ConditionVerdict, EscalationSettings, Metric, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateDeviation {
    pub state: usize,
    pub ref_action: usize,
    pub deployed_action: usize,
    /// `deployed - ref`
    pub deviation: i64,
    pub probability: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompensationReport {
    /// `sum_s P(s) |sigma(s) - pi_ref(s)|`
    pub magnitude: Rational,
    /// `sum_{s : sigma(s) != pi_ref(s)} P(s)`
    pub disagreement_rate: Rational,
    pub per_state: Vec<StateDeviation>,
}

impl CompensationReport {
    /// CSV with header `state,ref_action,deployed_action,deviation,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,ref_action,deployed_action,deviation,probability\n");
        for d in &self.per_state {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                d.state, d.ref_action, d.deployed_action, d.deviation, d.probability
            ));
        }
        out
    }
}

pub fn compensation_metric(deployed: &Policy, reference: &Policy, cases: &[Rational]) -> Result<CompensationReport> {
    if deployed.len() != reference.len() {
        return Err(Error::StateMismatch { left: deployed.len(), right: reference.len() });
    }
    if cases.len() != deployed.len() {
        return Err(Error::StateMismatch { left: deployed.len(), right: cases.len() });
    }
    let per_state: Vec<StateDeviation> = (0..deployed.len())
        .map(|s| StateDeviation {
            state: s,
            ref_action: reference.action(s),
            deployed_action: deployed.action(s),
            deviation: deployed.action(s) as i64 - reference.action(s) as i64,
            probability: cases[s].clone(),
        })
        .collect();
    let magnitude = per_state.iter().map(|d| &d.probability * Rational::from(d.deviation.abs())).sum();
    let disagreement_rate = per_state.iter().filter(|d| d.deviation != 0).map(|d| &d.probability).sum();
    Ok(CompensationReport { magnitude, disagreement_rate, per_state })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub state: usize,
    pub current_action: usize,
    /// Best action under the actual human (lowest index on ties).
    pub improving_action: usize,
    /// Exact expected-reward gain of switching at this state.
    pub gain: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompensationCheck {
    pub required: bool,
    pub witness: Option<Witness>,
}

fn require_one_step(mdp: &TeamMdp) -> Result<()> {
    if mdp.gamma != 0.0 {
        return Err(Error::InvalidArgument(format!("one-step analysis needs gamma = 0 (scenario has {})", mdp.gamma)));
    }
    Ok(())
}

fn best_action(row: &[Rational]) -> usize {
    let mut best = 0;
    for (a, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = a;
        }
    }
    best
}

/// Whether some reachable case admits an action strictly better than the
/// reference policy's under the actual human. Returns the first such case.
pub fn compensation_required(mdp: &TeamMdp, reference: &Policy) -> Result<CompensationCheck> {
    require_one_step(mdp)?;
    crate::mdp::policy_value_exact(mdp, reference)?;
    let table = expected_reward_table(mdp);
    for (s, p) in mdp.cases.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let current = reference.action(s);
        let best = best_action(&table[s]);
        let gain = &table[s][best] - &table[s][current];
        if gain.is_positive() {
            return Ok(CompensationCheck {
                required: true,
                witness: Some(Witness { state: s, current_action: current, improving_action: best, gain }),
            });
        }
    }
    Ok(CompensationCheck { required: false, witness: None })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinimalCompensation {
    pub policy: Policy,
    /// Least compensation magnitude meeting the value constraint.
    pub c_min: Rational,
    /// Exact value of `policy`.
    pub value: Rational,
    /// Exact value of the unconstrained optimum.
    pub optimal_value: Rational,
    pub slack: Rational,
}

#[derive(Clone)]
struct Partial {
    cost: Rational,
    gain: Rational,
    choices: Vec<usize>,
}

/// Keeps, in `(cost asc, gain desc)` order, only entries whose gain beats
/// every cheaper entry.
fn pareto_prune(mut items: Vec<Partial>) -> Vec<Partial> {
    items.sort_by(|a, b| a.cost.cmp(&b.cost).then_with(|| b.gain.cmp(&a.gain)));
    let mut out: Vec<Partial> = Vec::with_capacity(items.len());
    for it in items {
        if out.last().is_none_or(|last| it.gain > last.gain) {
            out.push(it);
        }
    }
    out
}

/// Least-compensation policy whose value is within `slack` of optimal.
///
/// The objective and the constraint are both sums of per-case terms, so
/// the search merges per-case Pareto frontiers of `(deviation cost, reward)`
/// and prunes dominated partial policies. Everything is exact; the winner
/// is re-evaluated independently before it is returned.
pub fn minimal_compensation(mdp: &TeamMdp, reference: &Policy, slack: &Rational) -> Result<MinimalCompensation> {
    require_one_step(mdp)?;
    if slack.is_negative() {
        return Err(Error::InvalidArgument(format!("slack {slack} must be nonnegative")));
    }
    policy_value_exact(mdp, reference)?;
    let table = expected_reward_table(mdp);
    let n = mdp.num_states();
    let optimal_value: Rational = (0..n).map(|s| &mdp.cases[s] * &table[s][best_action(&table[s])]).sum();
    let target = &optimal_value - slack;

    let options: Vec<Vec<Partial>> = (0..n)
        .map(|s| {
            let p = &mdp.cases[s];
            if p.is_zero() {
                return vec![Partial {
                    cost: Rational::zero(),
                    gain: Rational::zero(),
                    choices: vec![reference.action(s)],
                }];
            }
            let all = (0..n)
                .map(|a| Partial {
                    cost: p * Rational::from((a as i64 - reference.action(s) as i64).abs()),
                    gain: p * &table[s][a],
                    choices: vec![a],
                })
                .collect();
            pareto_prune(all)
        })
        .collect();
    // best achievable gain from states s.. onwards
    let mut remaining = vec![Rational::zero(); n + 1];
    for s in (0..n).rev() {
        let best = options[s].iter().map(|o| o.gain.clone()).max().expect("non-empty options");
        remaining[s] = &remaining[s + 1] + best;
    }

    let mut frontier = vec![Partial { cost: Rational::zero(), gain: Rational::zero(), choices: Vec::new() }];
    for (s, opts) in options.iter().enumerate() {
        let mut next = Vec::with_capacity(frontier.len() * opts.len());
        for f in &frontier {
            for o in opts {
                let gain = &f.gain + &o.gain;
                if &gain + &remaining[s + 1] < target {
                    continue;
                }
                let mut choices = f.choices.clone();
                choices.push(o.choices[0]);
                next.push(Partial { cost: &f.cost + &o.cost, gain, choices });
            }
        }
        frontier = pareto_prune(next);
    }
    let winner = frontier
        .into_iter()
        .find(|f| f.gain >= target)
        .expect("the unconstrained optimum always satisfies the constraint");
    let policy = Policy::new(winner.choices);
    let value = policy_value_exact(mdp, &policy)?;
    let c_min = compensation_metric(&policy, reference, &mdp.cases)?.magnitude;
    assert!(value >= target && c_min == winner.cost, "minimal-compensation search returned an inconsistent policy");
    Ok(MinimalCompensation { policy, c_min, value, optimal_value, slack: slack.clone() })
}

/// `slack,C_min,J` rows for a list of slacks.
pub fn frontier_csv(results: &[MinimalCompensation]) -> String {
    let mut out = String::from("slack,C_min,J\n");
    for r in results {
        out.push_str(&format!("{},{},{}\n", r.slack, r.c_min, r.value));
    }
    out
}
