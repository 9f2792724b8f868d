//! Two-type, two-message, two-response sender–receiver game.
//!
//! The sender (an AI of hidden type I = honest or II = dishonest) picks a
//! message A1 (plain data) or A2 (data plus a recommendation); the receiver
//! observes the message and picks R1 or R2. All quantities are exact.

mod equilibrium;
mod pipeline;
mod polytope;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub use equilibrium::{
    enumerate_equilibria, enumerate_equilibria_with, verify_profile, EquilibriumRecord, RegretReport, Support,
    SupportPattern,
};
pub use pipeline::{
    bayes_forward, bayes_invert, receiver_indifference, reproduce_appendix, sender_indifference, AppendixReport,
    IndifferenceResult, InversionResult, PublishedTable, SolveStatus,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SenderType {
    I,
    II,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Message {
    A1,
    A2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Response {
    R1,
    R2,
}

impl SenderType {
    pub const ALL: [SenderType; 2] = [SenderType::I, SenderType::II];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl Message {
    pub const ALL: [Message; 2] = [Message::A1, Message::A2];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl Response {
    pub const ALL: [Response; 2] = [Response::R1, Response::R2];
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Payoffs indexed `[type][message][response]`.
pub type PayoffTable = [[[Rational; 2]; 2]; 2];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalingGame {
    /// Prior probability of the honest type I.
    pub prior_honest: Rational,
    pub sender_payoff: PayoffTable,
    pub receiver_payoff: PayoffTable,
}

impl SignalingGame {
    pub fn new(prior_honest: Rational, sender_payoff: PayoffTable, receiver_payoff: PayoffTable) -> Result<Self> {
        if !prior_honest.is_probability() {
            return Err(Error::InvalidGame(format!("prior_honest {prior_honest} is not a probability")));
        }
        Ok(Self { prior_honest, sender_payoff, receiver_payoff })
    }

    /// The honest/dishonest AI game with a 2/5 prior on the dishonest type.
    ///
    /// Payoffs are read off the expected-utility equations for each sender
    /// type and for the receiver after each message.
    pub fn appendix_default() -> Self {
        let f = Rational::frac;
        let sender = [[[f(2, 1), f(1, 2)], [f(3, 5), f(7, 10)]], [[f(1, 1), f(1, 5)], [f(2, 5), f(7, 10)]]];
        let receiver = [[[f(2, 1), f(0, 1)], [f(3, 10), f(1, 5)]], [[f(3, 10), f(2, 5)], [f(2, 5), f(3, 5)]]];
        Self { prior_honest: f(3, 5), sender_payoff: sender, receiver_payoff: receiver }
    }

    pub fn sender(&self, t: SenderType, m: Message, r: Response) -> &Rational {
        &self.sender_payoff[t.index()][m.index()][r.index()]
    }

    pub fn receiver(&self, t: SenderType, m: Message, r: Response) -> &Rational {
        &self.receiver_payoff[t.index()][m.index()][r.index()]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        Self::new(file.prior_honest, file.sender_payoff.into(), file.receiver_payoff.into())
    }

    pub fn to_json(&self) -> String {
        let file = GameFile {
            description: None,
            prior_honest: self.prior_honest.clone(),
            sender_payoff: (&self.sender_payoff).into(),
            receiver_payoff: (&self.receiver_payoff).into(),
        };
        serde_json::to_string_pretty(&file).expect("game serialization is infallible")
    }

    /// Applies `payoff -> scale * payoff + shift` to every entry of one
    /// player's table.
    pub fn affine_transformed(&self, sender: bool, scale: &Rational, shift: &Rational) -> Self {
        let mut out = self.clone();
        let table = if sender { &mut out.sender_payoff } else { &mut out.receiver_payoff };
        for v in table.iter_mut().flatten().flatten() {
            *v = scale * &*v + shift;
        }
        out
    }
}

/// Strategies and beliefs for both players.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BehaviorProfile {
    /// P(A1 | type I)
    pub a: Rational,
    /// P(A1 | type II)
    pub b: Rational,
    /// P(R1 | A1)
    pub x: Rational,
    /// P(R1 | A2)
    pub y: Rational,
    /// Posterior P(type I | A1)
    pub r: Rational,
    /// Posterior P(type I | A2)
    pub q: Rational,
    pub offpath_messages: Vec<Message>,
}

impl BehaviorProfile {
    pub fn mix(&self, t: SenderType) -> &Rational {
        match t {
            SenderType::I => &self.a,
            SenderType::II => &self.b,
        }
    }

    pub fn response(&self, m: Message) -> &Rational {
        match m {
            Message::A1 => &self.x,
            Message::A2 => &self.y,
        }
    }

    pub fn belief(&self, m: Message) -> &Rational {
        match m {
            Message::A1 => &self.r,
            Message::A2 => &self.q,
        }
    }

    pub fn strategy_key(&self) -> [&Rational; 4] {
        [&self.a, &self.b, &self.x, &self.y]
    }
}

// On-disk layout: nested maps keyed "I"/"II" -> "A1"/"A2" -> "R1"/"R2".

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseEntries {
    #[serde(rename = "R1")]
    r1: Rational,
    #[serde(rename = "R2")]
    r2: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageEntries {
    #[serde(rename = "A1")]
    a1: ResponseEntries,
    #[serde(rename = "A2")]
    a2: ResponseEntries,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeEntries {
    #[serde(rename = "I")]
    honest: MessageEntries,
    #[serde(rename = "II")]
    dishonest: MessageEntries,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    prior_honest: Rational,
    sender_payoff: TypeEntries,
    receiver_payoff: TypeEntries,
}

impl From<TypeEntries> for PayoffTable {
    fn from(t: TypeEntries) -> Self {
        let row = |m: MessageEntries| [[m.a1.r1, m.a1.r2], [m.a2.r1, m.a2.r2]];
        [row(t.honest), row(t.dishonest)]
    }
}

impl From<&PayoffTable> for TypeEntries {
    fn from(t: &PayoffTable) -> Self {
        let msg = |m: &[[Rational; 2]; 2]| MessageEntries {
            a1: ResponseEntries { r1: m[0][0].clone(), r2: m[0][1].clone() },
            a2: ResponseEntries { r1: m[1][0].clone(), r2: m[1][1].clone() },
        };
        TypeEntries { honest: msg(&t[0]), dishonest: msg(&t[1]) }
    }
}
