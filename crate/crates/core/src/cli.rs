//! Command dispatch for the `rfenchel` binary. Everything here is a pure
//! function of the scenario text and the seed, so output is reproducible
//! byte for byte.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::asymptotics::{
    membership_table, rule_corpus, truncation_check, ui_criterion_scan, SequenceModel,
};
use crate::duality::{battery, conjugate_on_l1, fenchel_solve, robust_utility_solve, ConeSpec, DualityReport};
use crate::error::{Error, Result};
use crate::functional::robust_value_with_maximizer;
use crate::report::{num, vector, Report, Table};
use crate::scenario::{Problem, Scenario, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rfenchel", version, about = "Robust integral functionals and their duality on finite spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Eval,
    Conjugate,
    Duality,
    Battery,
    Counterexample,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robust functional, risk measure and gauge norms at the listed points.
    Eval(CommonArgs),
    /// Grid conjugate against the robust divergence at the listed etas.
    Conjugate(CommonArgs),
    /// Fenchel duality over a cone, or robust utility duality when a utility is given.
    Duality(CommonArgs),
    /// Regularity battery and integrability report.
    Battery(CommonArgs),
    /// Sequence-space counterexample: singular conjugate bounds and regular-domain membership.
    Counterexample(CommonArgs),
}

impl Command {
    pub fn split(&self) -> (CommandKind, &CommonArgs) {
        match self {
            Command::Eval(a) => (CommandKind::Eval, a),
            Command::Conjugate(a) => (CommandKind::Conjugate, a),
            Command::Duality(a) => (CommandKind::Duality, a),
            Command::Battery(a) => (CommandKind::Battery, a),
            Command::Counterexample(a) => (CommandKind::Counterexample, a),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON, schema_version 1).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides solver.seed from the scenario.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Eval => "eval",
            CommandKind::Conjugate => "conjugate",
            CommandKind::Duality => "duality",
            CommandKind::Battery => "battery",
            CommandKind::Counterexample => "counterexample",
        }
    }
}

/// Rendered output and process exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

pub fn error_object(kind: &str, message: &str) -> String {
    let v = json!({ "error": { "kind": kind, "message": message } });
    format!("{}\n", serde_json::to_string_pretty(&v).expect("error object serializes"))
}

/// Parses the scenario, runs the command and renders the report. Schema
/// violations exit with 2, failures while solving with 3.
pub fn execute(kind: CommandKind, scenario_text: &str, seed: Option<u64>) -> Outcome {
    let mut scenario = match Scenario::parse(scenario_text) {
        Ok(s) => s,
        Err(e) => return Outcome { output: error_object("schema", &e.to_string()), code: EXIT_SCHEMA },
    };
    if let Some(s) = seed {
        scenario.solver.seed = s;
    }
    let prepared = if kind == CommandKind::Counterexample {
        scenario.counterexample_spec().map(|_| None)
    } else {
        scenario.build().map(Some)
    };
    let problem = match prepared {
        Ok(p) => p,
        Err(e) => return Outcome { output: error_object("schema", &e.to_string()), code: EXIT_SCHEMA },
    };
    let result = match (kind, &problem) {
        (CommandKind::Counterexample, _) => cmd_counterexample(&scenario),
        (_, Some(p)) => match kind {
            CommandKind::Eval => cmd_eval(p),
            CommandKind::Conjugate => cmd_conjugate(p),
            CommandKind::Duality => cmd_duality(p),
            CommandKind::Battery => cmd_battery(p),
            CommandKind::Counterexample => unreachable!(),
        },
        (_, None) => unreachable!("non-counterexample commands build the problem"),
    };
    match result {
        Ok(report) => Outcome { output: report.render(), code: EXIT_OK },
        Err(e) => Outcome { output: error_object("solver", &e.to_string()), code: EXIT_SOLVER },
    }
}

fn report(command: &str, config: Value, result: Value, tables: Vec<Table>) -> Report {
    Report { command: command.into(), schema_version: SCHEMA_VERSION, config, result, tables }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn default_points(p: &Problem, list: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if list.is_empty() {
        vec![vec![0.0; p.space.len()]]
    } else {
        list.to_vec()
    }
}

fn cmd_eval(p: &Problem) -> Result<Report> {
    let mut table = Table::new("eval", &["index", "xi", "functional", "risk", "gauge", "gauge_dual"]);
    let mut rows = Vec::new();
    for (i, x) in default_points(p, &p.points).iter().enumerate() {
        let (value, q) = robust_value_with_maximizer(&p.integrand, &p.space, &p.penalty, x)?;
        let risk = p.penalty.rho(&p.space, x)?;
        let gauge = p.penalty.gauge_norm(&p.space, x)?;
        let gauge_dual = p.penalty.gauge_norm_dual(&p.space, x)?;
        table.push(vec![
            i.to_string(),
            vector(x),
            num(value.value()),
            num(risk.value()),
            num(gauge),
            num(gauge_dual),
        ]);
        rows.push(json!({
            "xi": x,
            "functional": value,
            "maximizing_density": q.values(),
            "risk": risk,
            "gauge": gauge,
            "gauge_dual": gauge_dual,
        }));
    }
    let config = json!({ "penalty": p.penalty.kind_name(), "settings": to_value(&p.settings) });
    Ok(report("eval", config, Value::Array(rows), vec![table]))
}

fn cmd_conjugate(p: &Problem) -> Result<Report> {
    let grid = p.settings.grid();
    let mut table =
        Table::new("conjugate", &["index", "eta", "grid_lower", "divergence", "discrepancy", "monotone", "stalled"]);
    let mut rows = Vec::new();
    for (i, eta) in default_points(p, &p.etas).iter().enumerate() {
        let c = conjugate_on_l1(&p.integrand, &p.space, &p.penalty, eta, grid)?;
        table.push(vec![
            i.to_string(),
            vector(eta),
            num(c.grid_lower.value()),
            num(c.divergence.value()),
            num(c.discrepancy),
            c.monotone.to_string(),
            c.stalled.to_string(),
        ]);
        rows.push(json!({ "eta": eta, "comparison": to_value(&c) }));
    }
    let config = json!({
        "penalty": p.penalty.kind_name(),
        "grid": to_value(&grid),
        "stall_tolerance": crate::duality::conjugate::GRID_TOL,
        "settings": to_value(&p.settings),
    });
    Ok(report("conjugate", config, Value::Array(rows), vec![table]))
}

fn duality_table(r: &DualityReport) -> Table {
    let mut t = Table::new("duality", &["quantity", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("status", format!("{:?}", r.status).to_lowercase()),
        ("primal_value", num(r.primal_value.value())),
        ("dual_value", num(r.dual_value.value())),
        ("gap", num(r.gap)),
        ("primal_point", r.primal_point.as_deref().map(vector).unwrap_or_else(|| "-".into())),
        ("dual_point", r.dual_point.as_deref().map(vector).unwrap_or_else(|| "-".into())),
        ("polar_violation", num(r.polar_violation)),
        ("weak_duality_min_slack", num(r.weak_duality_min_slack)),
        ("converged", r.converged.to_string()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    t
}

fn cmd_duality(p: &Problem) -> Result<Report> {
    let cfg = p.settings.solver();
    let cone = p.cone.clone().unwrap_or_else(ConeSpec::zero);
    let (problem, r) = match &p.utility {
        Some(u) => ("robust_utility", robust_utility_solve(u, &p.space, &p.penalty, &cone, cfg)?),
        None => ("fenchel", fenchel_solve(&p.integrand, &p.space, &p.penalty, &cone, cfg)?),
    };
    let config = json!({
        "problem": problem,
        "penalty": p.penalty.kind_name(),
        "cone": to_value(&cone),
        "solver": to_value(&cfg),
        "settings": to_value(&p.settings),
    });
    let table = duality_table(&r);
    Ok(report("duality", config, to_value(&r), vec![table]))
}

fn cmd_battery(p: &Problem) -> Result<Report> {
    let cfg = p.settings.battery();
    let r = battery(&p.integrand, &p.space, &p.penalty, cfg)?;
    let mut table = Table::new("battery", &["test", "passed", "detail"]);
    for item in &r.items {
        table.push(vec![item.name.clone(), item.passed.to_string(), item.detail.clone()]);
    }
    let config = json!({ "penalty": p.penalty.kind_name(), "battery": to_value(&cfg), "settings": to_value(&p.settings) });
    Ok(report("battery", config, to_value(&r), vec![table]))
}

fn cmd_counterexample(s: &Scenario) -> Result<Report> {
    let spec = s.counterexample_spec()?;
    let mut bounds = Table::new(
        "singular_conjugate",
        &["w", "truncation", "closed_form", "lower", "upper", "gap", "brackets"],
    );
    let mut checks = Vec::new();
    for w in &spec.masses {
        for n in &spec.truncations {
            let c = truncation_check(*w, *n)?;
            bounds.push(vec![
                num(c.w),
                c.truncation.to_string(),
                num(c.closed_form),
                num(c.lower),
                num(c.upper),
                num(c.gap),
                c.brackets.to_string(),
            ]);
            checks.push(c);
        }
    }
    let model = SequenceModel::new(s.solver.truncation).map_err(|e| Error::Scenario(e.to_string()))?;
    let mut corpus = if spec.include_corpus { rule_corpus() } else { vec![] };
    corpus.extend(spec.sequences.iter().map(|n| (n.name.clone(), n.sequence.clone())));
    let rows = membership_table(&model, &corpus)?;
    let mut membership =
        Table::new("regular_domain", &["sequence", "limsup", "in_regular_domain", "tail_limit", "functional"]);
    for r in &rows {
        membership.push(vec![
            r.name.clone(),
            num(r.limsup),
            r.in_regular_domain.to_string(),
            num(r.tail_limit),
            num(r.value),
        ]);
    }
    let mut ui = Vec::new();
    for (name, xi) in &corpus {
        if let Ok(scan) = ui_criterion_scan(xi) {
            ui.push(json!({ "sequence": name, "scan": to_value(&scan) }));
        }
    }
    let config = json!({
        "truncation": model.truncation,
        "masses": spec.masses,
        "truncations": spec.truncations,
        "tail_thresholds": "10^k, k = 0..=8",
        "limit_tolerance": 1e-6,
    });
    let result = json!({
        "singular_conjugate": to_value(&checks),
        "regular_domain": to_value(&rows),
        "uniform_integrability": ui,
    });
    Ok(report("counterexample", config, result, vec![bounds, membership]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENTROPIC: &str = r#"{
        "schema_version": 1,
        "space": {"weights": [0.5, 0.5]},
        "integrand": {"uniform": {"family": "affine", "slope": 1.0, "intercept": 0.0}},
        "penalty": {"kind": "entropic"},
        "points": [[1.0, -1.0]]
    }"#;

    #[test]
    fn entropic_eval_is_log_mean_exp() {
        let out = execute(CommandKind::Eval, ENTROPIC, None);
        assert_eq!(out.code, EXIT_OK);
        let expected = (0.5 * (1f64.exp() + (-1f64).exp())).ln();
        let json_end = out.output.find("\n\n==").unwrap();
        let v: Value = serde_json::from_str(&out.output[..json_end]).unwrap();
        let got = v["result"][0]["functional"].as_f64().unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!(out.output.contains("-- csv: eval --"));
    }

    #[test]
    fn malformed_input_exits_with_schema_code() {
        let out = execute(CommandKind::Eval, "{\"schema_version\": 1, ", None);
        assert_eq!(out.code, EXIT_SCHEMA);
        let v: Value = serde_json::from_str(&out.output).unwrap();
        assert_eq!(v["error"]["kind"], "schema");
    }

    #[test]
    fn counterexample_needs_no_space() {
        let text = r#"{"schema_version": 1, "counterexample": {"masses": [2.0], "truncations": [100]}}"#;
        let out = execute(CommandKind::Counterexample, text, None);
        assert_eq!(out.code, EXIT_OK, "{}", out.output);
        assert!(out.output.contains("== singular_conjugate =="));
        assert_eq!(execute(CommandKind::Eval, text, None).code, EXIT_SCHEMA);
    }

    #[test]
    fn output_is_deterministic() {
        let a = execute(CommandKind::Battery, ENTROPIC, Some(7));
        let b = execute(CommandKind::Battery, ENTROPIC, Some(7));
        assert_eq!(a, b);
        assert_eq!(a.code, EXIT_OK);
    }
}
