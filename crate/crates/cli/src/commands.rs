use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};
use teamcomp_core::compensation::{
    audit, compensation_metric, compensation_required, frontier_csv, minimal_compensation, AuditInput,
    EscalationSettings,
};
use teamcomp_core::escalation::{sweep, sweep_json, LoopConfig};
use teamcomp_core::inference::{run_trend, trend_csv, SamplingPlan, TrendConfig};
use teamcomp_core::mdp::{
    policy_value_exact, q_learning, value_iteration, Policy, QLearningConfig, RewardSpec, TeamMdp,
};
use teamcomp_core::rational::decimal12;
use teamcomp_core::report::{self, Object};
use teamcomp_core::signaling::{
    enumerate_equilibria, reproduce_appendix, verify_profile, EquilibriumRecord, SignalingGame,
};
use teamcomp_core::{Execution, Rational};

use crate::args::{Algorithm, AuditArgs, Cli, Command, Format, Plan};
use crate::error::CliError;
use crate::output::{flatten_csv, Run};

/// Executes one subcommand and returns the text to print.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let common = &cli.common;
    let mut summary = String::new();
    let (mut run, report) = match &cli.command {
        Command::ReproduceAppendix { game } => appendix(game, common.seed, &common.out, common.format, &mut summary)?,
        Command::Mdp { scenario, algorithm, episodes, tol } => {
            mdp(scenario, *algorithm, *episodes, *tol, common.seed, &common.out, &mut summary)?
        }
        Command::Minimal { scenario, slack } => minimal(scenario, slack, common.seed, &common.out, &mut summary)?,
        Command::Escalate { scenario, eta, b_max, rounds, tol, goal_shift } => {
            escalate(scenario, eta, *b_max, *rounds, *tol, *goal_shift, common.seed, &common.out, &mut summary)?
        }
        Command::Audit(args) => audit_cmd(args, common.seed, &common.out, &mut summary)?,
        Command::Infer { scenario, sigma, kappa, n, plan, goal_shift } => {
            infer(scenario, sigma, kappa, *n, *plan, *goal_shift, common.seed, &common.out, &mut summary)?
        }
    };
    let (stem, value) = report;
    match common.format {
        Format::Json => run.result(format!("{stem}.json"), report::to_pretty(&value)),
        Format::Csv => run.result(format!("{stem}.csv"), flatten_csv(&value)),
    }
    run.commit()?;
    Ok(summary)
}

type Outcome = (Run, (&'static str, Value));

fn load_scenario(run: &mut Run, path: &Path) -> Result<TeamMdp, CliError> {
    let text = run.read_input(path)?;
    TeamMdp::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn deferential(mdp: &TeamMdp) -> Result<Policy, CliError> {
    Ok(value_iteration(&mdp.ideal(), 1e-12)?.policy)
}

fn file_key(v: &str) -> String {
    v.replace('/', "_").replace('-', "m")
}

fn equilibrium_object(r: &EquilibriumRecord) -> Value {
    let mut obj = Object::new();
    let p = &r.profile;
    for (k, v) in [("a", &p.a), ("b", &p.b), ("x", &p.x), ("y", &p.y), ("r", &p.r), ("q", &p.q)] {
        report::put_rational(&mut obj, k, v);
    }
    report::put(&mut obj, "support_pattern", serde_json::to_value(r.support_pattern).expect("serializable"));
    report::put(&mut obj, "offpath_messages", serde_json::to_value(&p.offpath_messages).expect("serializable"));
    let interval = r.offpath_belief_interval.as_ref().map(|(lo, hi)| vec![lo.to_string(), hi.to_string()]);
    report::put(&mut obj, "offpath_belief_interval", serde_json::to_value(interval).expect("serializable"));
    report::put(&mut obj, "continuum", r.is_continuum());
    report::put_rational(&mut obj, "max_regret", &r.max_regret);
    obj.into()
}

fn equilibria_csv(records: &[EquilibriumRecord]) -> String {
    let mut out = String::from("a,b,x,y,r,q,offpath_low,offpath_high,continuum\n");
    for r in records {
        let p = &r.profile;
        let (lo, hi) = match &r.offpath_belief_interval {
            Some((lo, hi)) => (lo.to_string(), hi.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{},{},{},{lo},{hi},{}", p.a, p.b, p.x, p.y, p.r, p.q, r.is_continuum());
    }
    out
}

fn appendix(
    game_path: &Path,
    seed: u64,
    out: &Path,
    format: Format,
    summary: &mut String,
) -> Result<Outcome, CliError> {
    let mut run = Run::new("reproduce-appendix", seed, out);
    run.argument("game", game_path.display().to_string());
    let text = run.read_input(game_path)?;
    let game = SignalingGame::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", game_path.display())))?;
    let rep = reproduce_appendix(&game);
    let records = enumerate_equilibria(&game)?;
    for r in &records {
        if !verify_profile(&game, &r.profile).is_equilibrium() {
            return Err(CliError::Internal(format!(
                "enumerated profile {:?} has positive regret",
                r.profile.strategy_key()
            )));
        }
    }
    let mut value = rep.to_json();
    value
        .as_object_mut()
        .expect("report is an object")
        .insert("equilibria".into(), records.iter().map(equilibrium_object).collect::<Vec<_>>().into());
    if format == Format::Csv {
        let mut rows = String::from("quantity,exact,decimal\n");
        for (name, v) in rep.rows() {
            match v {
                Some(v) => {
                    let _ = writeln!(rows, "{name},{v},{}", decimal12(v.to_f64()));
                }
                None => {
                    let _ = writeln!(rows, "{name},,");
                }
            }
        }
        run.result("appendix_values.csv", rows);
        run.result("equilibria.csv", equilibria_csv(&records));
    }
    let _ = writeln!(summary, "{:<24} {:>12} {:>16}", "quantity", "exact", "decimal");
    for (name, v) in rep.rows() {
        let (exact, dec) = match v {
            Some(v) => (v.to_string(), decimal12(v.to_f64())),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(summary, "{name:<24} {exact:>12} {dec:>16}");
    }
    for f in &rep.flags {
        let _ = writeln!(summary, "flag: {f}");
    }
    let _ = writeln!(summary, "equilibrium families: {}", records.len());
    Ok((run, ("appendix_report", value)))
}

fn mdp(
    path: &Path,
    algorithm: Algorithm,
    episodes: usize,
    tol: f64,
    seed: u64,
    out: &Path,
    summary: &mut String,
) -> Result<Outcome, CliError> {
    let mut run = Run::new("mdp", seed, out);
    run.argument("scenario", path.display().to_string());
    let scenario = load_scenario(&mut run, path)?;
    let (policy, q_csv) = match algorithm {
        Algorithm::Vi => {
            run.argument("algorithm", "vi");
            run.argument("tol", tol);
            let res = value_iteration(&scenario, tol)?;
            (res.policy.clone(), res.q_csv())
        }
        Algorithm::Q => {
            run.argument("algorithm", "q");
            run.argument("episodes", episodes);
            let cfg = QLearningConfig { episodes, ..Default::default() };
            let res = q_learning(&scenario, &cfg, seed)?;
            (res.policy.clone(), res.q_csv())
        }
    };
    let reference = deferential(&scenario)?;
    let j_deployed = policy_value_exact(&scenario, &policy)?;
    let j_deferential = policy_value_exact(&scenario, &reference)?;
    let comp = compensation_metric(&policy, &reference, &scenario.cases)?;
    let mut obj = Object::new();
    report::put(&mut obj, "algorithm", if algorithm == Algorithm::Vi { "vi" } else { "q" });
    report::put(&mut obj, "policy", serde_json::to_value(&policy.actions).expect("serializable"));
    report::put(&mut obj, "deferential_policy", serde_json::to_value(&reference.actions).expect("serializable"));
    report::put_rational(&mut obj, "J_deployed", &j_deployed);
    report::put_rational(&mut obj, "J_deferential", &j_deferential);
    report::put_rational(&mut obj, "compensation_magnitude", &comp.magnitude);
    report::put_rational(&mut obj, "disagreement_rate", &comp.disagreement_rate);
    if scenario.gamma == 0.0 {
        let check = compensation_required(&scenario, &reference)?;
        report::put(&mut obj, "compensation_required", check.required);
        report::put(&mut obj, "witness", serde_json::to_value(&check.witness).expect("serializable"));
    }
    run.result("policy.csv", policy.to_csv());
    run.result("q_table.csv", q_csv);
    run.result("compensation.csv", comp.to_csv());
    let _ = writeln!(summary, "policy: {:?}", policy.actions);
    let _ = writeln!(summary, "J(deployed) = {j_deployed} ({})", decimal12(j_deployed.to_f64()));
    let _ = writeln!(summary, "J(deferential) = {j_deferential} ({})", decimal12(j_deferential.to_f64()));
    let _ = writeln!(summary, "compensation = {} (disagreement {})", comp.magnitude, comp.disagreement_rate);
    Ok((run, ("mdp_summary", obj.into())))
}

fn minimal(path: &Path, slacks: &[String], seed: u64, out: &Path, summary: &mut String) -> Result<Outcome, CliError> {
    let mut run = Run::new("minimal", seed, out);
    run.argument("scenario", path.display().to_string());
    run.argument("slack", slacks.to_vec());
    let scenario = load_scenario(&mut run, path)?;
    let reference = deferential(&scenario)?;
    let mut results = Vec::with_capacity(slacks.len());
    for s in slacks {
        let slack: Rational = s.trim().parse().map_err(|e| CliError::Input(format!("slack {s:?}: {e}")))?;
        let res = minimal_compensation(&scenario, &reference, &slack)?;
        run.result(format!("minimal_policy_slack_{}.csv", file_key(&slack.to_string())), res.policy.to_csv());
        results.push(res);
    }
    run.result("frontier.csv", frontier_csv(&results));
    let entries: Vec<Value> = results
        .iter()
        .map(|r| {
            let mut obj = Object::new();
            report::put_rational(&mut obj, "slack", &r.slack);
            report::put_rational(&mut obj, "C_min", &r.c_min);
            report::put_rational(&mut obj, "J", &r.value);
            report::put_rational(&mut obj, "J_optimal", &r.optimal_value);
            report::put(&mut obj, "policy", serde_json::to_value(&r.policy.actions).expect("serializable"));
            obj.into()
        })
        .collect();
    for r in &results {
        let _ = writeln!(summary, "slack {}: C_min = {}, J = {}", r.slack, r.c_min, r.value);
    }
    let mut obj = Object::new();
    report::put(&mut obj, "reference_policy", serde_json::to_value(&reference.actions).expect("serializable"));
    report::put(&mut obj, "frontier", entries);
    Ok((run, ("minimal", obj.into())))
}

#[allow(clippy::too_many_arguments)]
fn escalate(
    path: &Path,
    etas: &[f64],
    b_max: f64,
    rounds: usize,
    tol: f64,
    goal_shift: Option<i64>,
    seed: u64,
    out: &Path,
    summary: &mut String,
) -> Result<Outcome, CliError> {
    let mut run = Run::new("escalate", seed, out);
    run.argument("scenario", path.display().to_string());
    run.argument("eta", etas.to_vec());
    run.argument("b_max", b_max);
    run.argument("rounds", rounds);
    run.argument("tol", tol);
    let scenario = load_scenario(&mut run, path)?;
    let shift = goal_shift.or(scenario.human.shift()).unwrap_or(0);
    run.argument("goal_shift", shift);
    let base = LoopConfig::for_scenario(&scenario, shift)?;
    let configs: Vec<LoopConfig> =
        etas.iter().map(|&eta| LoopConfig { eta, b_max, max_rounds: rounds, tol, ..base.clone() }).collect();
    let trajectories = sweep(&configs, Execution::default())?;
    for t in &trajectories {
        run.result(format!("trajectory_eta_{}.csv", file_key(&decimal12(t.config.eta))), t.to_csv());
        let _ = writeln!(
            summary,
            "eta {}: {} after {} rounds (final bias {})",
            decimal12(t.config.eta),
            t.classification.as_str(),
            t.records.len(),
            decimal12(t.final_bias())
        );
    }
    let value: Value = serde_json::from_str(&sweep_json(&trajectories)).expect("valid json");
    Ok((run, ("escalation", value)))
}

fn audit_cmd(args: &AuditArgs, seed: u64, out: &Path, summary: &mut String) -> Result<Outcome, CliError> {
    let mut run = Run::new("audit", seed, out);
    run.argument("scenario", args.scenario.display().to_string());
    run.argument("policy", args.policy.display().to_string());
    run.argument("w_g", args.w_g);
    run.argument("w_h", args.w_h);
    run.argument("attest", args.attest.clone());
    run.argument("floor", args.floor);
    run.argument("tolerance", args.tolerance);
    run.argument("horizon", args.horizon);
    run.argument("eta", args.eta);
    run.argument("b_max", args.b_max);
    run.argument("escalation_tol", args.escalation_tol);
    let scenario = load_scenario(&mut run, &args.scenario)?;
    let policy_text = run.read_input(&args.policy)?;
    let deployed =
        Policy::from_csv(&policy_text).map_err(|e| CliError::Input(format!("{}: {e}", args.policy.display())))?;
    let mut input = AuditInput::new(scenario, deployed);
    input.w_g = args.w_g;
    input.w_h = args.w_h;
    input.consent_attestation = args.attest.clone();
    input.achievability_floor = args.floor;
    input.minimality_tolerance = args.tolerance;
    input.stability_horizon = args.horizon;
    if let Some(shift) = args.goal_shift {
        input.human_goal_shift = shift;
    }
    run.argument("goal_shift", input.human_goal_shift);
    input.escalation = EscalationSettings { eta: args.eta, b_max: args.b_max, tol: args.escalation_tol };
    let rep = audit(&input)?;
    for c in &rep.conditions {
        let _ = writeln!(summary, "condition {}: {:<20} {}", c.id, c.verdict.as_str(), c.metric_name);
    }
    let value: Value = serde_json::from_str(&rep.to_json()).expect("valid json");
    Ok((run, ("audit", value)))
}

#[allow(clippy::too_many_arguments)]
fn infer(
    path: &Path,
    sigmas: &[f64],
    kappas: &[f64],
    n: usize,
    plan: Plan,
    goal_shift: Option<i64>,
    seed: u64,
    out: &Path,
    summary: &mut String,
) -> Result<Outcome, CliError> {
    let mut run = Run::new("infer", seed, out);
    run.argument("scenario", path.display().to_string());
    run.argument("sigma", sigmas.to_vec());
    run.argument("kappa", kappas.to_vec());
    run.argument("n", n);
    let plan = match plan {
        Plan::Uniform => SamplingPlan::Uniform,
        Plan::Stratified => SamplingPlan::Stratified,
    };
    run.argument("plan", serde_json::to_value(plan).expect("serializable"));
    let scenario = load_scenario(&mut run, path)?;
    let shift = goal_shift.or(scenario.human.shift()).unwrap_or(0);
    run.argument("goal_shift", shift);
    let truth = RewardSpec::QuadraticH { target_shift: shift };
    let mut configs = Vec::new();
    for &kappa in kappas {
        for &sigma in sigmas {
            configs.push(TrendConfig {
                config_id: format!("sigma_{}_kappa_{}", decimal12(sigma), decimal12(kappa)),
                sigma,
                kappa,
                n,
                seed,
            });
        }
    }
    let rows = run_trend(&scenario, &truth, &configs, plan, Execution::default())?;
    run.result("trend.csv", trend_csv(&rows));
    let mut obj = Map::new();
    for r in &rows {
        let mut item = Object::new();
        report::put_real(&mut item, "sigma", r.config.sigma);
        report::put_real(&mut item, "kappa", r.config.kappa);
        report::put_real(&mut item, "M", r.m);
        report::put_real(&mut item, "coverage", r.coverage);
        obj.insert(r.config.config_id.clone(), item.into());
        let _ = writeln!(summary, "{}: M = {}", r.config.config_id, decimal12(r.m));
    }
    Ok((run, ("inference", obj.into())))
}
