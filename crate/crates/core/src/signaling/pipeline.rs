//! The closed-form solution pipeline: sender indifference fixes the
//! receiver's mixing, receiver indifference fixes the beliefs, and Bayes'
//! rule inverted at those beliefs gives the sender's mixing.

use serde::Serialize;
use serde_json::Value;

use super::{Message, Response, SenderType, SignalingGame};
use crate::error::{Error, Result};
use crate::rational::{solve_2x2, Rational, Solution2x2};
use crate::report::{self, Object};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Unique,
    SingularConsistent,
    SingularInconsistent,
}

impl From<&Solution2x2> for SolveStatus {
    fn from(s: &Solution2x2) -> Self {
        match s {
            Solution2x2::Unique { .. } => SolveStatus::Unique,
            Solution2x2::SingularConsistent => SolveStatus::SingularConsistent,
            Solution2x2::SingularInconsistent => SolveStatus::SingularInconsistent,
        }
    }
}

/// Values solving a pair of indifference conditions, component-wise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndifferenceResult {
    pub values: [Option<Rational>; 2],
    pub feasible: [bool; 2],
    pub status: [SolveStatus; 2],
}

impl IndifferenceResult {
    fn from_components(values: [Option<Rational>; 2], status: [SolveStatus; 2]) -> Self {
        let feasible = [0, 1].map(|i| values[i].as_ref().is_some_and(Rational::is_probability));
        Self { values, feasible, status }
    }

    pub fn solvable(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn value(&self, i: usize) -> Option<&Rational> {
        self.values[i].as_ref()
    }

    fn to_json(&self, names: [&str; 2]) -> Value {
        let mut obj = Object::new();
        for (i, name) in names.iter().enumerate() {
            report::put_opt_rational(&mut obj, name, self.values[i].as_ref());
            report::put(&mut obj, &format!("{name}_feasible"), self.feasible[i]);
            report::put(&mut obj, &format!("{name}_status"), serde_json::to_value(self.status[i]).unwrap());
        }
        report::put(&mut obj, "solvable", self.solvable());
        Value::Object(obj)
    }
}

/// Coefficients `(c_x, c_y, k)` of `u_t(A1) - u_t(A2) = c_x x + c_y y + k`.
pub(crate) fn sender_gain_coefficients(game: &SignalingGame, t: SenderType) -> (Rational, Rational, Rational) {
    use Message::*;
    use Response::*;
    let s = |m, r| game.sender(t, m, r);
    let cx = s(A1, R1) - s(A1, R2);
    let cy = -(s(A2, R1) - s(A2, R2));
    let k = s(A1, R2) - s(A2, R2);
    (cx, cy, k)
}

/// `D_t(m) = v(t, m, R1) - v(t, m, R2)`: the receiver's gain from R1 when the
/// sender is known to be type `t`.
pub(crate) fn receiver_gain(game: &SignalingGame, t: SenderType, m: Message) -> Rational {
    game.receiver(t, m, Response::R1) - game.receiver(t, m, Response::R2)
}

/// Receiver mixing `(x, y)` that leaves both sender types indifferent
/// between A1 and A2.
pub fn sender_indifference(game: &SignalingGame) -> IndifferenceResult {
    let (c1x, c1y, k1) = sender_gain_coefficients(game, SenderType::I);
    let (c2x, c2y, k2) = sender_gain_coefficients(game, SenderType::II);
    let sol = solve_2x2(&c1x, &c1y, &c2x, &c2y, &-k1, &-k2);
    let status = SolveStatus::from(&sol);
    let values = match sol {
        Solution2x2::Unique { x1, x2 } => [Some(x1), Some(x2)],
        _ => [None, None],
    };
    IndifferenceResult::from_components(values, [status; 2])
}

/// Beliefs `(r, q)` leaving the receiver indifferent between R1 and R2
/// after A1 and after A2. Each component is an independent linear equation.
pub fn receiver_indifference(game: &SignalingGame) -> IndifferenceResult {
    let solve = |m: Message| {
        let d_honest = receiver_gain(game, SenderType::I, m);
        let d_dishonest = receiver_gain(game, SenderType::II, m);
        // mu * d_honest + (1 - mu) * d_dishonest = 0
        let slope = &d_honest - &d_dishonest;
        match (-&d_dishonest).checked_div(&slope) {
            Some(mu) => (Some(mu), SolveStatus::Unique),
            None if d_dishonest.is_zero() => (None, SolveStatus::SingularConsistent),
            None => (None, SolveStatus::SingularInconsistent),
        }
    };
    let (r, rs) = solve(Message::A1);
    let (q, qs) = solve(Message::A2);
    IndifferenceResult::from_components([r, q], [rs, qs])
}

/// Posteriors P(I | A1) and P(I | A2); `None` for a message never sent.
pub fn bayes_forward(p: &Rational, a: &Rational, b: &Rational) -> (Option<Rational>, Option<Rational>) {
    let one = Rational::one();
    let not_p = &one - p;
    let posterior = |honest: Rational, dishonest: Rational| {
        let total = &honest + &dishonest;
        honest.checked_div(&total)
    };
    let r = posterior(a * p, b * &not_p);
    let q = posterior((&one - a) * p, (&one - b) * &not_p);
    (r, q)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InversionResult {
    /// `(a, b)`; for a singular-consistent system the representative `a = b = 1/2`.
    pub values: Option<(Rational, Rational)>,
    pub status: SolveStatus,
    pub feasible: [bool; 2],
    /// Whether pushing `values` forward through Bayes' rule reproduces the
    /// input beliefs on every message the values keep on path.
    pub reproduces_beliefs: bool,
}

/// Sender mixing `(a, b)` consistent with beliefs `(r, q)` at prior `p`.
///
/// Clearing denominators gives the linear system
/// `p(1-r) a - r(1-p) b = 0` and `p(1-q) a - q(1-p) b = p - q`.
pub fn bayes_invert(p: &Rational, r: &Rational, q: &Rational) -> Result<InversionResult> {
    if !(p.is_positive() && *p < Rational::one()) {
        return Err(Error::InvalidArgument(format!("prior {p} must lie strictly between 0 and 1")));
    }
    if !r.is_probability() || !q.is_probability() {
        return Err(Error::InvalidArgument(format!("beliefs ({r}, {q}) must be probabilities")));
    }
    let one = Rational::one();
    let not_p = &one - p;
    let sol =
        solve_2x2(&(p * (&one - r)), &-(r * &not_p), &(p * (&one - q)), &-(q * &not_p), &Rational::zero(), &(p - q));
    let status = SolveStatus::from(&sol);
    let values = match sol {
        Solution2x2::Unique { x1, x2 } => Some((x1, x2)),
        Solution2x2::SingularConsistent => Some((Rational::frac(1, 2), Rational::frac(1, 2))),
        Solution2x2::SingularInconsistent => None,
    };
    let feasible = match &values {
        Some((a, b)) => [a.is_probability(), b.is_probability()],
        None => [false, false],
    };
    let reproduces_beliefs = match &values {
        Some((a, b)) if feasible == [true, true] => {
            let (fr, fq) = bayes_forward(p, a, b);
            fr.as_ref().is_none_or(|v| v == r) && fq.as_ref().is_none_or(|v| v == q)
        }
        _ => false,
    };
    Ok(InversionResult { values, status, feasible, reproduces_beliefs })
}

/// The published action probabilities for the two AI types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublishedTable {
    /// `[P(A1), P(A2)]` for type I.
    pub type_i: [Rational; 2],
    /// `[P(A1), P(A2)]` for type II.
    pub type_ii: [Rational; 2],
}

impl PublishedTable {
    pub fn appendix() -> Self {
        let f = Rational::frac;
        Self { type_i: [f(1, 118), f(117, 118)], type_ii: [f(15, 59), f(44, 59)] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppendixReport {
    pub prior_honest: Rational,
    pub sender: IndifferenceResult,
    pub receiver: IndifferenceResult,
    pub inversion: Option<InversionResult>,
    pub published: PublishedTable,
    /// `|a - a_pub|`, `|b - b_pub|` when the inversion produced values.
    pub deviations: Option<(Rational, Rational)>,
    pub flags: Vec<String>,
}

/// Runs sender indifference, receiver indifference and Bayes inversion in
/// that order. Infeasible or unsolvable steps are flagged, never repaired.
pub fn reproduce_appendix(game: &SignalingGame) -> AppendixReport {
    let sender = sender_indifference(game);
    let receiver = receiver_indifference(game);
    let mut flags = Vec::new();
    for (i, name) in ["x", "y"].iter().enumerate() {
        match sender.value(i) {
            Some(v) if !sender.feasible[i] => flags.push(format!("{name} infeasible: {v} {}", out_of_unit(v))),
            None => flags.push(format!("{name} unsolvable: sender indifference system is {:?}", sender.status[i])),
            _ => {}
        }
    }
    for (i, name) in ["r", "q"].iter().enumerate() {
        match receiver.value(i) {
            Some(v) if !receiver.feasible[i] => flags.push(format!("{name} infeasible: {v} {}", out_of_unit(v))),
            None => flags.push(format!(
                "{name} unsolvable: receiver payoffs after {:?} are {:?}",
                Message::ALL[i],
                receiver.status[i]
            )),
            _ => {}
        }
    }
    let p = &game.prior_honest;
    let inversion = match (receiver.value(0), receiver.value(1)) {
        (Some(r), Some(q)) if receiver.feasible == [true, true] => match bayes_invert(p, r, q) {
            Ok(inv) => Some(inv),
            Err(e) => {
                flags.push(format!("inversion skipped: {e}"));
                None
            }
        },
        _ => {
            flags.push("inversion skipped: beliefs unavailable or infeasible".into());
            None
        }
    };
    let published = PublishedTable::appendix();
    let deviations = inversion
        .as_ref()
        .and_then(|inv| inv.values.as_ref())
        .map(|(a, b)| ((a - &published.type_i[0]).abs(), (b - &published.type_ii[0]).abs()));
    if let Some(inv) = &inversion {
        for (i, name) in ["a", "b"].iter().enumerate() {
            if let Some((a, b)) = &inv.values {
                let v = if i == 0 { a } else { b };
                if !inv.feasible[i] {
                    flags.push(format!("{name} infeasible: {v} {}", out_of_unit(v)));
                }
            }
        }
    }
    if let Some((da, db)) = &deviations {
        if !da.is_zero() || !db.is_zero() {
            flags.push(format!("published table differs from exact inversion: |da| = {da}, |db| = {db}"));
        }
    }
    AppendixReport { prior_honest: p.clone(), sender, receiver, inversion, published, deviations, flags }
}

fn out_of_unit(v: &Rational) -> &'static str {
    if v.is_negative() {
        "< 0"
    } else {
        "> 1"
    }
}

impl AppendixReport {
    pub fn a(&self) -> Option<&Rational> {
        self.inversion.as_ref().and_then(|i| i.values.as_ref()).map(|(a, _)| a)
    }

    pub fn b(&self) -> Option<&Rational> {
        self.inversion.as_ref().and_then(|i| i.values.as_ref()).map(|(_, b)| b)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Object::new();
        report::put_rational(&mut obj, "prior_honest", &self.prior_honest);
        obj.insert("receiver_mixing_from_sender_indifference".into(), self.sender.to_json(["x", "y"]));
        // r and q are posteriors over the sender's type, not response rates.
        obj.insert("posteriors_from_receiver_indifference".into(), self.receiver.to_json(["r", "q"]));
        let mut inv = Object::new();
        match &self.inversion {
            Some(i) => {
                let (a, b) = match &i.values {
                    Some((a, b)) => (Some(a), Some(b)),
                    None => (None, None),
                };
                report::put_opt_rational(&mut inv, "a", a);
                report::put_opt_rational(&mut inv, "b", b);
                report::put(&mut inv, "a_feasible", i.feasible[0]);
                report::put(&mut inv, "b_feasible", i.feasible[1]);
                report::put(&mut inv, "status", serde_json::to_value(i.status).unwrap());
                report::put(&mut inv, "reproduces_beliefs", i.reproduces_beliefs);
            }
            None => {
                report::put(&mut inv, "status", "SKIPPED");
            }
        }
        obj.insert("sender_mixing_from_bayes_inversion".into(), Value::Object(inv));
        let mut table = Object::new();
        report::put_rational(&mut table, "type_i_unelaborated", &self.published.type_i[0]);
        report::put_rational(&mut table, "type_i_recommendation", &self.published.type_i[1]);
        report::put_rational(&mut table, "type_ii_unelaborated", &self.published.type_ii[0]);
        report::put_rational(&mut table, "type_ii_recommendation", &self.published.type_ii[1]);
        report::put(
            &mut table,
            "recommendation_frequency",
            format!(
                "type I recommended in {} out of {} interactions; type II in {} out of {}",
                self.published.type_i[1].numerator(),
                self.published.type_i[1].denominator(),
                self.published.type_ii[1].numerator(),
                self.published.type_ii[1].denominator()
            ),
        );
        obj.insert("published_table".into(), Value::Object(table));
        let mut dev = Object::new();
        if let Some((da, db)) = &self.deviations {
            report::put_rational(&mut dev, "abs_a_minus_published", da);
            report::put_rational(&mut dev, "abs_b_minus_published", db);
        }
        obj.insert("deviation_from_published".into(), Value::Object(dev));
        obj.insert("flags".into(), Value::from(self.flags.clone()));
        Value::Object(obj)
    }

    /// `(name, exact, decimal)` rows for CSV output.
    pub fn rows(&self) -> Vec<(String, Option<Rational>)> {
        let mut rows = vec![("prior_honest".to_string(), Some(self.prior_honest.clone()))];
        rows.push(("x".into(), self.sender.values[0].clone()));
        rows.push(("y".into(), self.sender.values[1].clone()));
        rows.push(("r".into(), self.receiver.values[0].clone()));
        rows.push(("q".into(), self.receiver.values[1].clone()));
        rows.push(("a".into(), self.a().cloned()));
        rows.push(("b".into(), self.b().cloned()));
        rows.push(("published_a".into(), Some(self.published.type_i[0].clone())));
        rows.push(("published_b".into(), Some(self.published.type_ii[0].clone())));
        rows.push(("abs_a_minus_published".into(), self.deviations.as_ref().map(|d| d.0.clone())));
        rows.push(("abs_b_minus_published".into(), self.deviations.as_ref().map(|d| d.1.clone())));
        rows
    }
}
