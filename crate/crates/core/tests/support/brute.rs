//! Exhaustive policy enumeration for minimal compensation.

use teamcomp_core::mdp::{expected_reward_table, Policy, TeamMdp};
use teamcomp_core::Rational;

/// Least cost, then greatest value, over every deterministic policy.
pub fn enumerate(mdp: &TeamMdp, reference: &Policy, slack: &Rational) -> (Rational, Rational) {
    let n = mdp.num_states();
    let table = expected_reward_table(mdp);
    let optimal: Rational = (0..n).map(|s| &mdp.cases[s] * table[s].iter().max().unwrap()).sum();
    let target = optimal - slack;
    let mut best: Option<(Rational, Rational)> = None;
    let mut actions = vec![0usize; n];
    loop {
        let value: Rational = (0..n).map(|s| &mdp.cases[s] * &table[s][actions[s]]).sum();
        if value >= target {
            let cost: Rational = (0..n)
                .map(|s| &mdp.cases[s] * Rational::from((actions[s] as i64 - reference.action(s) as i64).abs()))
                .sum();
            let better = match &best {
                None => true,
                Some((c, v)) => cost < *c || (cost == *c && value > *v),
            };
            if better {
                best = Some((cost, value));
            }
        }
        // odometer over (S_max + 1)^(S_max + 1) policies
        let mut i = 0;
        while i < n && actions[i] == n - 1 {
            actions[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        actions[i] += 1;
    }
    best.expect("optimum is feasible")
}
