//! Perfect Bayesian equilibria by support enumeration.
//!
//! Each of `a, b, x, y` is either pure 0, pure 1, or strictly interior,
//! giving 81 support patterns. For a fixed pattern the problem splits in
//! two independent linear feasibility problems:
//!
//! * response side `(x, y)`: the sender types' best-response conditions are
//!   linear in the receiver's mixing;
//! * sender side `(a, b)`: on an on-path message the receiver's condition
//!   `mu * D_I + (1 - mu) * D_II >= 0` becomes linear after multiplying by
//!   the message's reach probability.
//!
//! Off-path responses only need some belief in `[0, 1]` supporting them;
//! that set is an interval. Each feasible set is a polytope of dimension at
//! most two; its vertices are found exactly and the vertex mean is used as
//! the representative profile.

use std::collections::BTreeMap;

use serde::Serialize;

use super::pipeline::{bayes_forward, receiver_gain, sender_gain_coefficients};
use super::polytope::{centroid, unit_box, vertices, Constraint, Relation};
use super::{BehaviorProfile, Message, Response, SenderType, SignalingGame};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Support {
    Zero,
    One,
    Interior,
}

impl Support {
    const ALL: [Support; 3] = [Support::Zero, Support::One, Support::Interior];

    fn fixed(self) -> Option<Rational> {
        match self {
            Support::Zero => Some(Rational::zero()),
            Support::One => Some(Rational::one()),
            Support::Interior => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SupportPattern {
    pub a: Support,
    pub b: Support,
    pub x: Support,
    pub y: Support,
}

impl SupportPattern {
    pub fn all() -> Vec<SupportPattern> {
        let mut out = Vec::with_capacity(81);
        for a in Support::ALL {
            for b in Support::ALL {
                for x in Support::ALL {
                    for y in Support::ALL {
                        out.push(SupportPattern { a, b, x, y });
                    }
                }
            }
        }
        out
    }

    fn on_path(&self, m: Message) -> bool {
        match m {
            Message::A1 => self.a != Support::Zero || self.b != Support::Zero,
            Message::A2 => self.a != Support::One || self.b != Support::One,
        }
    }

    fn response(&self, m: Message) -> Support {
        match m {
            Message::A1 => self.x,
            Message::A2 => self.y,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquilibriumRecord {
    pub profile: BehaviorProfile,
    pub support_pattern: SupportPattern,
    /// Beliefs at the off-path message that support its response.
    pub offpath_belief_interval: Option<(Rational, Rational)>,
    pub max_regret: Rational,
    /// Extreme points of the set of `(a, b)` in this family.
    pub sender_mix_vertices: Vec<[Rational; 2]>,
    /// Extreme points of the set of `(x, y)` in this family.
    pub response_mix_vertices: Vec<[Rational; 2]>,
}

impl EquilibriumRecord {
    /// Whether the family contains more than one strategy profile.
    pub fn is_continuum(&self) -> bool {
        self.sender_mix_vertices.len() > 1 || self.response_mix_vertices.len() > 1
    }
}

/// Exact regrets of a profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegretReport {
    /// Best message payoff minus achieved payoff, per sender type.
    pub sender: [Rational; 2],
    /// Best response payoff minus achieved payoff, per message. On-path
    /// messages use the Bayes posterior, off-path ones the stated belief.
    pub receiver: [Rational; 2],
    pub on_path: [bool; 2],
    /// On-path messages whose stated belief differs from the posterior.
    pub bayes_inconsistent: Vec<Message>,
    pub max_regret: Rational,
}

impl RegretReport {
    pub fn is_equilibrium(&self) -> bool {
        self.max_regret.is_zero() && self.bayes_inconsistent.is_empty()
    }
}

fn expected_sender(game: &SignalingGame, t: SenderType, m: Message, z: &Rational) -> Rational {
    let one = Rational::one();
    z * game.sender(t, m, Response::R1) + (&one - z) * game.sender(t, m, Response::R2)
}

fn expected_receiver(game: &SignalingGame, m: Message, r: Response, mu: &Rational) -> Rational {
    let one = Rational::one();
    mu * game.receiver(SenderType::I, m, r) + (&one - mu) * game.receiver(SenderType::II, m, r)
}

pub fn verify_profile(game: &SignalingGame, profile: &BehaviorProfile) -> RegretReport {
    let one = Rational::one();
    let sender = SenderType::ALL.map(|t| {
        let u1 = expected_sender(game, t, Message::A1, &profile.x);
        let u2 = expected_sender(game, t, Message::A2, &profile.y);
        let mix = profile.mix(t);
        let achieved = mix * &u1 + (&one - mix) * &u2;
        u1.max(u2) - achieved
    });
    let (post_r, post_q) = bayes_forward(&game.prior_honest, &profile.a, &profile.b);
    let posts = [post_r, post_q];
    let mut bayes_inconsistent = Vec::new();
    let on_path = [posts[0].is_some(), posts[1].is_some()];
    let receiver = Message::ALL.map(|m| {
        let stated = profile.belief(m);
        let mu = match &posts[m.index()] {
            Some(post) => {
                if post != stated {
                    bayes_inconsistent.push(m);
                }
                post.clone()
            }
            None => stated.clone(),
        };
        let e1 = expected_receiver(game, m, Response::R1, &mu);
        let e2 = expected_receiver(game, m, Response::R2, &mu);
        let z = profile.response(m);
        let achieved = z * &e1 + (&one - z) * &e2;
        e1.max(e2) - achieved
    });
    let max_regret = sender.iter().chain(receiver.iter()).cloned().max().expect("four regrets");
    RegretReport { sender, receiver, on_path, bayes_inconsistent, max_regret }
}

/// Variables of one subsystem: which of the two coordinates are unknowns.
struct Subsystem {
    fixed: [Option<Rational>; 2],
}

impl Subsystem {
    fn new(first: Support, second: Support) -> Self {
        Self { fixed: [first.fixed(), second.fixed()] }
    }

    fn unknowns(&self) -> Vec<usize> {
        (0..2).filter(|&i| self.fixed[i].is_none()).collect()
    }

    /// Restricts `c0 v0 + c1 v1 + k (rel) 0` to the unknown coordinates.
    fn constraint(&self, coeffs: [Rational; 2], constant: Rational, relation: Relation) -> Constraint {
        let mut k = constant;
        let mut reduced = Vec::new();
        for (i, c) in coeffs.into_iter().enumerate() {
            match &self.fixed[i] {
                Some(v) => k = k + c * v,
                None => reduced.push(c),
            }
        }
        Constraint::new(reduced, k, relation)
    }

    /// Solves the subsystem; returns the vertex list in full coordinates and
    /// the representative point, or `None` when infeasible.
    fn solve(&self, mut constraints: Vec<Constraint>) -> Option<(Vec<[Rational; 2]>, [Rational; 2])> {
        let unknowns = self.unknowns();
        let dim = unknowns.len();
        constraints.extend(unit_box(dim));
        let verts = vertices(dim, &constraints);
        if verts.is_empty() {
            return None;
        }
        let rep = centroid(&verts, dim);
        // Interior unknowns must be strictly inside (0, 1); checking the
        // relative-interior point suffices.
        if rep.iter().any(|v| !v.is_positive() || *v >= Rational::one()) {
            return None;
        }
        let expand = |point: &[Rational]| {
            let mut full = [Rational::zero(), Rational::zero()];
            let mut it = point.iter();
            for i in 0..2 {
                full[i] = match &self.fixed[i] {
                    Some(v) => v.clone(),
                    None => it.next().expect("one value per unknown").clone(),
                };
            }
            full
        };
        let full_verts = verts.iter().map(|v| expand(v)).collect();
        Some((full_verts, expand(&rep)))
    }
}

fn relation_for(support: Support) -> (Relation, Rational) {
    // sign multiplies the "first option minus second option" gain
    match support {
        Support::Interior => (Relation::Eq, Rational::one()),
        Support::One => (Relation::Ge, Rational::one()),
        Support::Zero => (Relation::Ge, -Rational::one()),
    }
}

fn solve_pattern(game: &SignalingGame, pattern: SupportPattern) -> Option<EquilibriumRecord> {
    let p = &game.prior_honest;
    let not_p = Rational::one() - p;

    // Response side: sender best responses, linear in (x, y).
    let response_side = Subsystem::new(pattern.x, pattern.y);
    let mut cons = Vec::new();
    for (t, support) in [(SenderType::I, pattern.a), (SenderType::II, pattern.b)] {
        let (cx, cy, k) = sender_gain_coefficients(game, t);
        let (rel, sign) = relation_for(support);
        cons.push(response_side.constraint([&sign * &cx, &sign * &cy], &sign * &k, rel));
    }
    let (response_vertices, xy) = response_side.solve(cons)?;

    // Sender side: receiver best responses at on-path messages, linear in (a, b).
    let sender_side = Subsystem::new(pattern.a, pattern.b);
    let mut cons = Vec::new();
    let mut offpath_interval = None;
    let mut offpath_messages = Vec::new();
    for m in Message::ALL {
        let d_honest = receiver_gain(game, SenderType::I, m);
        let d_dishonest = receiver_gain(game, SenderType::II, m);
        let (rel, sign) = relation_for(pattern.response(m));
        if pattern.on_path(m) {
            // reach-weighted gain: w_I * p * D_I + w_II * (1-p) * D_II, with
            // w = a, b after A1 and 1 - a, 1 - b after A2.
            let ci = p * &d_honest * &sign;
            let cii = &not_p * &d_dishonest * &sign;
            let c = match m {
                Message::A1 => sender_side.constraint([ci, cii], Rational::zero(), rel),
                Message::A2 => sender_side.constraint([-&ci, -&cii], ci + cii, rel),
            };
            cons.push(c);
        } else {
            offpath_messages.push(m);
            // mu * (D_I - D_II) + D_II (rel) 0 over mu in [0, 1]
            let mut belief_cons =
                vec![Constraint::new(vec![&sign * (&d_honest - &d_dishonest)], &sign * &d_dishonest, rel)];
            belief_cons.extend(unit_box(1));
            let verts = vertices(1, &belief_cons);
            let lo = verts.first()?[0].clone();
            let hi = verts.last()?[0].clone();
            offpath_interval = Some((lo, hi));
        }
    }
    let (sender_vertices, ab) = sender_side.solve(cons)?;

    let [a, b] = ab;
    let [x, y] = xy;
    let (post_r, post_q) = bayes_forward(p, &a, &b);
    let midpoint = offpath_interval.as_ref().map(|(lo, hi)| (lo + hi) / Rational::from(2));
    let r = post_r.or_else(|| midpoint.clone())?;
    let q = post_q.or(midpoint)?;
    let profile = BehaviorProfile { a, b, x, y, r, q, offpath_messages };
    let regret = verify_profile(game, &profile);
    if !regret.is_equilibrium() {
        return None;
    }
    Some(EquilibriumRecord {
        profile,
        support_pattern: pattern,
        offpath_belief_interval: offpath_interval,
        max_regret: regret.max_regret,
        sender_mix_vertices: sender_vertices,
        response_mix_vertices: response_vertices,
    })
}

/// All equilibrium families, one representative each, in canonical
/// `(a, b, x, y)` order.
pub fn enumerate_equilibria(game: &SignalingGame) -> Result<Vec<EquilibriumRecord>> {
    enumerate_equilibria_with(game, Execution::default())
}

pub fn enumerate_equilibria_with(game: &SignalingGame, exec: Execution) -> Result<Vec<EquilibriumRecord>> {
    let p = &game.prior_honest;
    if !(p.is_positive() && *p < Rational::one()) {
        return Err(Error::InvalidGame(format!("prior_honest {p} must be strictly between 0 and 1")));
    }
    let patterns = SupportPattern::all();
    let found = exec::map_slice(&patterns, exec, |&pat| solve_pattern(game, pat));
    let mut unique: BTreeMap<[Rational; 4], EquilibriumRecord> = BTreeMap::new();
    for rec in found.into_iter().flatten() {
        let key = rec.profile.strategy_key().map(Clone::clone);
        unique.entry(key).or_insert(rec);
    }
    Ok(unique.into_values().collect())
}
