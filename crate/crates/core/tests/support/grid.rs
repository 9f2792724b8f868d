//! Floating-point grid search over signaling-game profiles, independent of
//! the exact enumeration.

use teamcomp_core::signaling::{EquilibriumRecord, Message, Response, SenderType, SignalingGame};

pub const STEPS: usize = 100;
pub const TOL: f64 = 1.0 / 50.0;

struct Payoffs {
    prior: f64,
    /// `sender[t][m][r]`
    sender: [[[f64; 2]; 2]; 2],
    receiver: [[[f64; 2]; 2]; 2],
}

impl Payoffs {
    fn new(game: &SignalingGame) -> Self {
        let table = |f: &dyn Fn(SenderType, Message, Response) -> f64| {
            SenderType::ALL.map(|t| Message::ALL.map(|m| Response::ALL.map(|r| f(t, m, r))))
        };
        Self {
            prior: game.prior_honest.to_f64(),
            sender: table(&|t, m, r| game.sender(t, m, r).to_f64()),
            receiver: table(&|t, m, r| game.receiver(t, m, r).to_f64()),
        }
    }

    /// Grid mixes for one sender type with regret at most TOL.
    fn sender_candidates(&self, t: usize, x: f64, y: f64) -> Vec<usize> {
        let u = |m: usize, z: f64| z * self.sender[t][m][0] + (1.0 - z) * self.sender[t][m][1];
        let (u1, u2) = (u(0, x), u(1, y));
        (0..=STEPS)
            .filter(|&i| {
                let a = i as f64 / STEPS as f64;
                u1.max(u2) - (a * u1 + (1.0 - a) * u2) <= TOL
            })
            .collect()
    }

    fn receiver_regret(&self, m: usize, mu: f64, z: f64) -> f64 {
        let e = |r: usize| mu * self.receiver[0][m][r] + (1.0 - mu) * self.receiver[1][m][r];
        e(0).max(e(1)) - (z * e(0) + (1.0 - z) * e(1))
    }

    fn receiver_ok(&self, m: usize, honest: f64, dishonest: f64, z: f64) -> bool {
        let total = honest + dishonest;
        if total > 0.0 {
            self.receiver_regret(m, honest / total, z) <= TOL
        } else {
            (0..=STEPS).any(|k| self.receiver_regret(m, k as f64 / STEPS as f64, z) <= TOL)
        }
    }
}

pub fn grid_survivors(game: &SignalingGame) -> Vec<[f64; 4]> {
    let g = Payoffs::new(game);
    let p = g.prior;
    let mut out = Vec::new();
    for ix in 0..=STEPS {
        let x = ix as f64 / STEPS as f64;
        for iy in 0..=STEPS {
            let y = iy as f64 / STEPS as f64;
            let cand_a = g.sender_candidates(0, x, y);
            let cand_b = g.sender_candidates(1, x, y);
            for &ia in &cand_a {
                let a = ia as f64 / STEPS as f64;
                for &ib in &cand_b {
                    let b = ib as f64 / STEPS as f64;
                    if g.receiver_ok(0, p * a, (1.0 - p) * b, x)
                        && g.receiver_ok(1, p * (1.0 - a), (1.0 - p) * (1.0 - b), y)
                    {
                        out.push([a, b, x, y]);
                    }
                }
            }
        }
    }
    out
}

/// Whether a grid survivor lies within `TOL` (L-infinity over `a, b, x, y`)
/// of the record's representative profile.
pub fn near_record(survivor: &[f64; 4], record: &EquilibriumRecord) -> bool {
    let key = record.profile.strategy_key().map(|v| v.to_f64());
    survivor.iter().zip(key).all(|(u, v)| (u - v).abs() <= TOL + 1e-12)
}
