use serde::Serialize;

use super::{Policy, TeamMdp};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Exact one-step expected reward `r(s, a) = sum_d P(d | a) R(s, d)`,
/// indexed `[s][a]`.
pub fn expected_reward_table(mdp: &TeamMdp) -> Vec<Vec<Rational>> {
    let n = mdp.num_states();
    let outcome: Vec<Vec<Rational>> = (0..n).map(|a| mdp.human.decision_distribution(a, mdp.s_max)).collect();
    let reward = mdp.reward.table(mdp.s_max);
    (0..n)
        .map(|s| {
            (0..n)
                .map(|a| outcome[a].iter().zip(&reward[s]).filter(|(p, _)| !p.is_zero()).map(|(p, r)| p * r).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn check_policy(mdp: &TeamMdp, policy: &Policy) -> Result<()> {
    if policy.len() != mdp.num_states() {
        return Err(Error::StateMismatch { left: policy.len(), right: mdp.num_states() });
    }
    if let Some(a) = policy.actions.iter().find(|&&a| a > mdp.s_max) {
        return Err(Error::InvalidArgument(format!("policy action {a} outside 0..={}", mdp.s_max)));
    }
    Ok(())
}

/// Exact `J(pi)` over the model's stored numbers.
///
/// Cases are redrawn independently each step, so the policy's value
/// satisfies `V = r_pi + gamma * E[V]`, i.e. `J = E[r_pi] / (1 - gamma)`.
pub fn policy_value_exact(mdp: &TeamMdp, policy: &Policy) -> Result<Rational> {
    check_policy(mdp, policy)?;
    let table = expected_reward_table(mdp);
    Ok(value_from_table(mdp, &table, policy))
}

pub(crate) fn value_from_table(mdp: &TeamMdp, table: &[Vec<Rational>], policy: &Policy) -> Rational {
    let one_step: Rational =
        mdp.cases.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(s, p)| p * &table[s][policy.action(s)]).sum();
    if mdp.gamma == 0.0 {
        one_step
    } else {
        let gamma = Rational::from_f64_exact(mdp.gamma).expect("validated gamma");
        one_step / (Rational::one() - gamma)
    }
}

pub fn policy_value(mdp: &TeamMdp, policy: &Policy) -> Result<f64> {
    policy_value_exact(mdp, policy).map(|v| v.to_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueIterationResult {
    /// `q[s][a]`
    pub q: Vec<Vec<f64>>,
    pub policy: Policy,
    pub iterations: usize,
    pub residual: f64,
}

impl ValueIterationResult {
    /// CSV with header `state,action,q`.
    pub fn q_csv(&self) -> String {
        q_table_csv(&self.q)
    }
}

pub(crate) fn q_table_csv(q: &[Vec<f64>]) -> String {
    let mut out = String::from("state,action,q\n");
    for (s, row) in q.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            out.push_str(&format!("{s},{a},{v}\n"));
        }
    }
    out
}

/// Lowest index attaining the row maximum.
pub(crate) fn greedy(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = a;
        }
    }
    best
}

/// Bellman iteration on `Q` until the sup-norm change is at most `tol`.
/// With `gamma = 0` the fixed point is the one-step expected reward and is
/// returned directly.
pub fn value_iteration(mdp: &TeamMdp, tol: f64) -> Result<ValueIterationResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let r: Vec<Vec<f64>> =
        expected_reward_table(mdp).iter().map(|row| row.iter().map(Rational::to_f64).collect()).collect();
    let (q, iterations, residual) = if mdp.gamma == 0.0 {
        (r, 1, 0.0)
    } else {
        let weights = mdp.case_weights_f64();
        let mut q = vec![vec![0.0; mdp.num_states()]; mdp.num_states()];
        let mut iterations = 0;
        loop {
            iterations += 1;
            let continuation: f64 = mdp.gamma
                * q.iter()
                    .zip(&weights)
                    .map(|(row, w)| w * row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                    .sum::<f64>();
            let mut residual: f64 = 0.0;
            for (q_row, r_row) in q.iter_mut().zip(&r) {
                for (qv, rv) in q_row.iter_mut().zip(r_row) {
                    let next = rv + continuation;
                    residual = residual.max((next - *qv).abs());
                    *qv = next;
                }
            }
            if residual <= tol {
                break (q, iterations, residual);
            }
        }
    };
    let policy = Policy::new(q.iter().map(|row| greedy(row)).collect());
    Ok(ValueIterationResult { q, policy, iterations, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{build_clinic_scenario, HumanModel, RewardSpec};

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn clinic_values() {
        let m = build_clinic_scenario(10, 2, 0.0).unwrap();
        let sigma = Policy::from_fn(10, |s| s.saturating_sub(2));
        assert_eq!(policy_value_exact(&m, &sigma).unwrap(), q("-5/11"));
        assert_eq!(policy_value_exact(&m, &Policy::deferential(10)).unwrap(), q("-37/11"));
        assert!((policy_value(&m, &sigma).unwrap() + 5.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn zero_reward_has_zero_value() {
        let m =
            build_clinic_scenario(3, 1, 0.0).unwrap().with_reward(RewardSpec::Table { values: vec![vec![0.0; 4]; 4] });
        assert_eq!(policy_value_exact(&m, &Policy::deferential(3)).unwrap(), Rational::zero());
    }

    #[test]
    fn value_iteration_clinic() {
        let m = build_clinic_scenario(10, 2, 0.0).unwrap();
        let vi = value_iteration(&m, 1e-9).unwrap();
        assert_eq!(vi.policy, Policy::from_fn(10, |s| s.saturating_sub(2)));
        let ideal = value_iteration(&m.ideal(), 1e-9).unwrap();
        assert_eq!(ideal.policy, Policy::deferential(10));
        for s in 1..=10 {
            assert_ne!(vi.policy.action(s), ideal.policy.action(s));
        }
        assert_eq!(vi.policy.action(0), ideal.policy.action(0));
    }

    #[test]
    fn discounted_iteration_converges_to_same_policy() {
        let m = build_clinic_scenario(10, 2, 0.9).unwrap();
        let vi = value_iteration(&m, 1e-9).unwrap();
        assert!(vi.residual <= 1e-9);
        assert!(vi.iterations > 1);
        assert_eq!(vi.policy, Policy::from_fn(10, |s| s.saturating_sub(2)));
        let j = policy_value_exact(&m, &vi.policy).unwrap();
        let gamma = Rational::from_f64_exact(0.9).unwrap();
        assert_eq!(j, q("-5/11") / (Rational::one() - gamma));
        // Q at the fixed point: r + gamma/(1-gamma) * E[max r]
        let expected = 0.0 + 0.9 / 0.1 * (-5.0 / 11.0);
        assert!((vi.q[5][3] - expected).abs() < 1e-7);
    }

    #[test]
    fn gamma_zero_q_is_one_step_reward() {
        let m = build_clinic_scenario(6, -2, 0.0)
            .unwrap()
            .with_human(HumanModel::AdditiveBias { shift: -2, noise_sd: 0.8 });
        let vi = value_iteration(&m, 1e-9).unwrap();
        let exact = expected_reward_table(&m);
        for s in 0..=6 {
            for a in 0..=6 {
                assert_eq!(vi.q[s][a], exact[s][a].to_f64());
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = build_clinic_scenario(4, 1, 0.0).unwrap();
        assert!(value_iteration(&m, 0.0).is_err());
        assert!(policy_value(&m, &Policy::deferential(3)).is_err());
        assert!(policy_value(&m, &Policy::new(vec![0, 0, 0, 0, 5])).is_err());
    }
}
