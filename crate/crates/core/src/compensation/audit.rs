//! Five-condition audit of a deployed compensating policy.

use serde::Serialize;
use serde_json::Value;

use super::{compensation_metric, minimal_compensation};
use crate::error::{Error, Result};
use crate::escalation::{run_loop, Classification, LoopConfig};
use crate::mdp::{policy_value_exact, value_iteration, Policy, RewardSpec, TeamMdp};
use crate::rational::Rational;
use crate::report::{self, Object};

const VI_TOL: f64 = 1e-12;

pub const AUDIT_HEADER: &str =
    "These five conditions are sufficient, not necessary, for compensation to be permissible. \
PASS on every condition licenses the deployed compensation under these conditions only; \
FAIL means the compensation is not licensed by these conditions, not that it is impermissible. \
Moral weight is operationalized as the weighted comparison w_G * delta_G > w_H * delta_H.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotComputable,
    PassByAttestation,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotComputable => "NOT_COMPUTABLE",
            Verdict::PassByAttestation => "PASS_BY_ATTESTATION",
        }
    }

    fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Metric {
    Exact(Rational),
    Real(f64),
    Label(String),
    None,
}

impl Metric {
    fn put(&self, obj: &mut Object, key: &str) {
        match self {
            Metric::Exact(v) => report::put_rational(obj, key, v),
            Metric::Real(v) => report::put_real(obj, key, *v),
            Metric::Label(s) => report::put(obj, key, s.as_str()),
            Metric::None => report::put(obj, key, Value::Null),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscalationSettings {
    pub eta: f64,
    pub b_max: f64,
    pub tol: f64,
}

impl Default for EscalationSettings {
    fn default() -> Self {
        Self { eta: 0.5, b_max: 20.0, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditInput {
    /// Scenario with the actual human; its reward is the external goal.
    pub scenario: TeamMdp,
    pub deployed: Policy,
    pub w_g: f64,
    pub w_h: f64,
    /// Attested consent of the affected party, if any.
    pub consent_attestation: Option<String>,
    pub achievability_floor: f64,
    pub minimality_tolerance: f64,
    pub stability_horizon: usize,
    /// Shift of the human's own goal.
    pub human_goal_shift: i64,
    pub escalation: EscalationSettings,
}

impl AuditInput {
    /// Unit weights, floor -1, tolerance 1e-9, horizon 100, and the
    /// human's goal equal to their current bias.
    pub fn new(scenario: TeamMdp, deployed: Policy) -> Self {
        let human_goal_shift = scenario.human.shift().unwrap_or(0);
        Self {
            scenario,
            deployed,
            w_g: 1.0,
            w_h: 1.0,
            consent_attestation: None,
            achievability_floor: -1.0,
            minimality_tolerance: 1e-9,
            stability_horizon: 100,
            human_goal_shift,
            escalation: EscalationSettings::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !finite_nonneg(self.w_g) || !finite_nonneg(self.w_h) {
            return Err(Error::InvalidArgument("weights must be nonnegative".into()));
        }
        if !finite_nonneg(self.minimality_tolerance) {
            return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
        }
        if !self.achievability_floor.is_finite() {
            return Err(Error::InvalidArgument("achievability floor must be finite".into()));
        }
        self.scenario.validate()?;
        policy_value_exact(&self.scenario, &self.deployed).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub id: u8,
    pub verdict: Verdict,
    pub metric_name: String,
    pub metric_value: Metric,
    pub threshold: Metric,
    pub note: String,
}

impl ConditionVerdict {
    fn not_computable(id: u8, metric_name: &str, err: &Error) -> Self {
        Self {
            id,
            verdict: Verdict::NotComputable,
            metric_name: metric_name.into(),
            metric_value: Metric::None,
            threshold: Metric::None,
            note: err.to_string(),
        }
    }

    fn to_object(&self) -> Object {
        let mut obj = Object::new();
        report::put(&mut obj, "id", self.id);
        report::put(&mut obj, "verdict", self.verdict.as_str());
        report::put(&mut obj, "metric_name", self.metric_name.as_str());
        self.metric_value.put(&mut obj, "metric_value");
        self.threshold.put(&mut obj, "threshold");
        report::put(&mut obj, "note", self.note.as_str());
        obj
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub header: String,
    pub conditions: Vec<ConditionVerdict>,
}

impl AuditReport {
    pub fn condition(&self, id: u8) -> &ConditionVerdict {
        &self.conditions[usize::from(id) - 1]
    }

    pub fn to_json(&self) -> String {
        let mut obj = Object::new();
        report::put(&mut obj, "header", self.header.as_str());
        let conditions: Vec<Value> = self.conditions.iter().map(|c| c.to_object().into()).collect();
        report::put(&mut obj, "conditions", conditions);
        report::to_pretty(&obj.into())
    }
}

/// Values shared by several conditions.
struct Baseline {
    reference: Policy,
    j_optimal: Rational,
    j_reference: Rational,
    j_deployed: Rational,
}

fn baseline(input: &AuditInput) -> Result<Baseline> {
    let mdp = &input.scenario;
    let reference = value_iteration(&mdp.ideal(), VI_TOL)?.policy;
    let optimal = value_iteration(mdp, VI_TOL)?.policy;
    Ok(Baseline {
        j_optimal: policy_value_exact(mdp, &optimal)?,
        j_reference: policy_value_exact(mdp, &reference)?,
        j_deployed: policy_value_exact(mdp, &input.deployed)?,
        reference,
    })
}

fn exact(v: f64, what: &str) -> Result<Rational> {
    Rational::from_f64_exact(v).ok_or_else(|| Error::InvalidArgument(format!("{what} {v} is not finite")))
}

fn negative_impact(b: &Baseline) -> ConditionVerdict {
    let delta_g = &b.j_optimal - &b.j_reference;
    ConditionVerdict {
        id: 1,
        verdict: Verdict::from_bool(delta_g.is_positive()),
        metric_name: "delta_G".into(),
        note: "external-goal value lost by deferring to the actual human".into(),
        metric_value: Metric::Exact(delta_g),
        threshold: Metric::Exact(Rational::zero()),
    }
}

fn consent(input: &AuditInput) -> ConditionVerdict {
    match &input.consent_attestation {
        Some(text) => ConditionVerdict {
            id: 2,
            verdict: Verdict::PassByAttestation,
            metric_name: "consent_attestation".into(),
            metric_value: Metric::Label(text.clone()),
            threshold: Metric::None,
            note: "hypothetical consent is attested, not computed".into(),
        },
        None => ConditionVerdict {
            id: 2,
            verdict: Verdict::NotComputable,
            metric_name: "consent_attestation".into(),
            metric_value: Metric::None,
            threshold: Metric::None,
            note: "hypothetical consent is attested, not computed; no attestation supplied".into(),
        },
    }
}

fn moral_weight(input: &AuditInput, b: &Baseline) -> Result<ConditionVerdict> {
    let h_mdp = input.scenario.with_reward(RewardSpec::QuadraticH { target_shift: input.human_goal_shift });
    let delta_g = &b.j_optimal - &b.j_reference;
    let delta_h = policy_value_exact(&h_mdp, &b.reference)? - policy_value_exact(&h_mdp, &input.deployed)?;
    let margin = exact(input.w_g, "w_G")? * delta_g - exact(input.w_h, "w_H")? * &delta_h;
    let floor = exact(input.achievability_floor, "achievability floor")?;
    let weighted = margin.is_positive();
    let achievable = b.j_deployed >= floor;
    Ok(ConditionVerdict {
        id: 3,
        verdict: Verdict::from_bool(weighted && achievable),
        metric_name: "weighted_goal_margin".into(),
        note: format!(
            "delta_H = {delta_h}; J_G(deployed) = {} against floor {}; weighted comparison {}, achievability {}",
            b.j_deployed,
            input.achievability_floor,
            if weighted { "holds" } else { "fails" },
            if achievable { "holds" } else { "fails" },
        ),
        metric_value: Metric::Exact(margin),
        threshold: Metric::Exact(Rational::zero()),
    })
}

fn minimality(input: &AuditInput, b: &Baseline) -> Result<ConditionVerdict> {
    let mdp = &input.scenario;
    let magnitude = compensation_metric(&input.deployed, &b.reference, &mdp.cases)?.magnitude;
    let slack = (&b.j_optimal - &b.j_deployed).max(Rational::zero());
    let minimal = minimal_compensation(mdp, &b.reference, &slack)?;
    let allowed = &minimal.c_min + exact(input.minimality_tolerance, "tolerance")?;
    Ok(ConditionVerdict {
        id: 4,
        verdict: Verdict::from_bool(magnitude <= allowed),
        metric_name: "compensation_magnitude".into(),
        note: format!("threshold is C_min at slack {slack}, plus tolerance {}", input.minimality_tolerance),
        metric_value: Metric::Exact(magnitude),
        threshold: Metric::Exact(minimal.c_min),
    })
}

fn stability(input: &AuditInput) -> Result<ConditionVerdict> {
    let mut config = LoopConfig::for_scenario(&input.scenario, input.human_goal_shift)?;
    config.eta = input.escalation.eta;
    config.b_max = input.escalation.b_max;
    config.tol = input.escalation.tol;
    config.max_rounds = input.stability_horizon;
    let trajectory = run_loop(&config)?;
    Ok(ConditionVerdict {
        id: 5,
        verdict: Verdict::from_bool(trajectory.classification != Classification::Unsustainable),
        metric_name: "escalation_classification".into(),
        note: format!(
            "{} after {} rounds, final bias {}",
            trajectory.classification.as_str(),
            trajectory.records.len(),
            trajectory.final_bias()
        ),
        metric_value: Metric::Label(trajectory.classification.as_str().into()),
        threshold: Metric::Label("not UNSUSTAINABLE".into()),
    })
}

/// Evaluates all five conditions. A sub-computation that fails turns only
/// its own condition into NOT_COMPUTABLE.
pub fn audit(input: &AuditInput) -> Result<AuditReport> {
    input.validate()?;
    let conditions = match baseline(input) {
        Ok(b) => vec![
            negative_impact(&b),
            consent(input),
            moral_weight(input, &b).unwrap_or_else(|e| ConditionVerdict::not_computable(3, "weighted_goal_margin", &e)),
            minimality(input, &b).unwrap_or_else(|e| ConditionVerdict::not_computable(4, "compensation_magnitude", &e)),
            stability(input).unwrap_or_else(|e| ConditionVerdict::not_computable(5, "escalation_classification", &e)),
        ],
        Err(e) => vec![
            ConditionVerdict::not_computable(1, "delta_G", &e),
            consent(input),
            ConditionVerdict::not_computable(3, "weighted_goal_margin", &e),
            ConditionVerdict::not_computable(4, "compensation_magnitude", &e),
            stability(input).unwrap_or_else(|e| ConditionVerdict::not_computable(5, "escalation_classification", &e)),
        ],
    };
    Ok(AuditReport { header: AUDIT_HEADER.into(), conditions })
}
