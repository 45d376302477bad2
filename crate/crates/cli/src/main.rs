//! lwfs command line: scenario validation, circuit lowering, Born-rule
//! prediction, setting-independence sweeps, statement reasoning, paradox
//! scans, a built-in scenario library, and two closed-form views (the
//! Hardy table and the classical collider).
//!
//! Reports are byte-deterministic. Every probability is printed together
//! with the setting vector or prior it was computed under; statements
//! whose setting label was stripped carry "[I assumed]" or "[I verified]"
//! instead.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use lwfs_core::collider::{collider_table, ClassicalCollider, COLLIDER_DENOMINATOR};
use lwfs_core::compile::{compile, dump_stages, AugmentedCircuit};
use lwfs_core::epistemic::{
    chain, check_setting_independence, check_single_outcome, model_conditional, paradox_scan,
    strip_settings, trace_lines, AssumptionSet, Model, OutcomeSet, Polarity, ScanConfig,
    SettingLabel, Statement, StatementKind, StripMode, ValueMarker,
};
use lwfs_core::error::Error as CoreError;
use lwfs_core::format::{parse_scenario, serialize_scenario, PriorRowDoc};
use lwfs_core::library::{
    by_name, check_scenario, hardy_map, scenario_names, ExpectedKind, RowStatus,
};
use lwfs_core::predict::{prediction_with_prior, SettingPrior};
use lwfs_core::report::{format_probability, fraction_string};
use lwfs_core::scenario::{OutcomeMap, SettingVector};

#[derive(Parser)]
#[command(
    name = "lwfs",
    version,
    about = "Compile Logical Wigner's Friend Scenarios and reason about them",
    long_about = "Scenario arguments resolve to a built-in library name first \
                  (see `lwfs library list`), then to a file path. The reasoning \
                  commands also accept the name `collider` for the classical toy model."
)]
struct Cli {
    /// Emit the report as JSON with the same field names as the text form.
    #[arg(long, global = true)]
    json: bool,
    /// Numeric tolerance for fraction matching and certainty tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Reserved for randomized test harnesses; the commands here are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario and run the structural validity checks.
    Validate { scenario: String },
    /// Lower a scenario to its augmented circuit.
    Compile {
        scenario: String,
        /// List every stage operator with checksums.
        #[arg(long)]
        dump: bool,
    },
    /// Conditional outcome probability at fixed settings or under a prior.
    #[command(group(ArgGroup::new("context").required(true).args(["settings", "prior"])))]
    Predict {
        scenario: String,
        /// Queried outcomes, e.g. "b=1" or "u=ok,w=ok".
        #[arg(long)]
        target: String,
        /// Conditioning outcomes, same syntax as --target.
        #[arg(long)]
        given: Option<String>,
        /// Setting bits for the free agents in agent order, e.g. "0,1".
        #[arg(long)]
        settings: Option<String>,
        /// JSON file: list of {"settings": [bits...], "weight": w}.
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Sweep all setting vectors and test whether a prediction depends on them.
    Independence {
        scenario: String,
        /// Target agents, valued ("a=1") or whole-distribution ("a").
        #[arg(long)]
        target: String,
        #[arg(long)]
        given: Option<String>,
    },
    /// Verify, optionally strip, and chain statements from a file.
    Reason {
        scenario: String,
        /// JSON file: {"statements": [...]}.
        #[arg(long)]
        statements: PathBuf,
        /// Strip setting labels on faith before chaining.
        #[arg(long = "assume-I")]
        assume_i: bool,
    },
    /// Exhaustive search for single-outcome violations.
    #[command(name = "paradox-scan")]
    ParadoxScan {
        scenario: String,
        #[arg(long = "assume-I")]
        assume_i: bool,
        /// Maximum seed statements combined into one chain.
        #[arg(long = "max-chain")]
        max_chain: Option<usize>,
    },
    /// Built-in scenarios.
    Library {
        #[command(subcommand)]
        cmd: LibraryCmd,
    },
    /// Hardy-style correlation table of the entanglement scenario.
    Hardy,
    /// Exact classical collider distribution at fixed station inputs.
    Collider {
        #[arg(long)]
        x1: u8,
        #[arg(long)]
        x2: u8,
    },
}

#[derive(Subcommand)]
enum LibraryCmd {
    /// Names and titles.
    List,
    /// Full definition of one scenario.
    Show { name: String },
    /// Re-derive the expected values and flag published discrepancies.
    Check { name: String },
}

#[derive(Debug)]
enum Failure {
    Domain(CoreError),
    Usage { flag: String, message: String },
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Domain(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(flag: &str, message: impl Into<String>) -> Failure {
    Failure::Usage { flag: flag.to_string(), message: message.into() }
}

struct Report {
    lines: Vec<String>,
    json: Value,
}

impl Report {
    fn render(&self, as_json: bool) -> String {
        let mut out = if as_json {
            serde_json::to_string_pretty(&self.json).expect("report serializes")
        } else {
            self.lines.join("\n")
        };
        out.push('\n');
        out
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on usage errors and 0 for --help/--version.
        Err(e) => e.exit(),
    };
    if let Ok(raw) = std::env::var("LWFS_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n > 0 {
                lwfs_core::exec::configure_threads(n);
            }
        }
    }
    match run(&cli) {
        Ok(report) => {
            let mut stdout = std::io::stdout();
            let _ = stdout.write_all(report.render(cli.json).as_bytes());
            let _ = stdout.flush();
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage { flag, message }) => {
            eprintln!("error: invalid value for '{flag}': {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult<Report> {
    if !cli.tolerance.is_finite() || cli.tolerance < 0.0 {
        return Err(usage("--tolerance", "must be a finite non-negative number"));
    }
    let _ = cli.seed; // consumed by randomized harnesses, not by any command
    let tol = cli.tolerance;
    match &cli.command {
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Compile { scenario, dump } => cmd_compile(scenario, *dump),
        Command::Predict { scenario, target, given, settings, prior } => {
            cmd_predict(tol, scenario, target, given.as_deref(), settings.as_deref(), prior.as_ref())
        }
        Command::Independence { scenario, target, given } => {
            cmd_independence(scenario, target, given.as_deref())
        }
        Command::Reason { scenario, statements, assume_i } => {
            cmd_reason(tol, scenario, statements, *assume_i)
        }
        Command::ParadoxScan { scenario, assume_i, max_chain } => {
            cmd_paradox_scan(scenario, *assume_i, *max_chain)
        }
        Command::Library { cmd } => match cmd {
            LibraryCmd::List => cmd_library_list(),
            LibraryCmd::Show { name } => cmd_library_show(name),
            LibraryCmd::Check { name } => cmd_library_check(tol, name),
        },
        Command::Hardy => cmd_hardy(tol),
        Command::Collider { x1, x2 } => cmd_collider(*x1, *x2),
    }
}

// ---------------------------------------------------------------- loading

static COLLIDER: ClassicalCollider = ClassicalCollider;

enum Loaded {
    Circuit { label: String, circ: AugmentedCircuit },
    Collider,
}

impl Loaded {
    fn label(&self) -> &str {
        match self {
            Loaded::Circuit { label, .. } => label,
            Loaded::Collider => "collider",
        }
    }

    fn model(&self) -> &dyn Model {
        match self {
            Loaded::Circuit { circ, .. } => circ,
            Loaded::Collider => &COLLIDER,
        }
    }

    fn circuit(&self) -> CliResult<&AugmentedCircuit> {
        match self {
            Loaded::Circuit { circ, .. } => Ok(circ),
            Loaded::Collider => Err(Failure::Domain(CoreError::ValidationFailed(
                "the classical collider has no quantum circuit; use a scenario".into(),
            ))),
        }
    }
}

fn load_spec(arg: &str) -> CliResult<lwfs_core::scenario::LWFSpec> {
    Ok(load_scenario(arg)?.0)
}

fn load_scenario(arg: &str) -> CliResult<(lwfs_core::scenario::LWFSpec, Option<Vec<Vec<String>>>)> {
    if scenario_names().contains(&arg) {
        let sc = by_name(arg)?;
        return Ok((sc.spec, Some(sc.outcome_labels)));
    }
    let text = fs::read_to_string(arg).map_err(|e| {
        Failure::Domain(CoreError::ValidationFailed(format!(
            "scenario '{arg}' is neither a library name nor a readable file: {e}"
        )))
    })?;
    Ok((parse_scenario(&text)?, None))
}

fn load_model(arg: &str) -> CliResult<Loaded> {
    if arg == "collider" {
        return Ok(Loaded::Collider);
    }
    let (spec, labels) = load_scenario(arg)?;
    let mut circ = compile(&spec)?;
    if let Some(labels) = labels {
        circ.attach_outcome_labels(labels);
    }
    Ok(Loaded::Circuit { label: arg.to_string(), circ })
}

// ---------------------------------------------------------------- parsing

fn agent_by_name(model: &dyn Model, token: &str) -> Option<usize> {
    (1..=model.agent_count()).find(|&a| model.agent_name(a) == token)
}

/// Outcome labels win over bare indices: "01" must hit the label "01",
/// never parse as the number 1.
fn outcome_value(model: &dyn Model, agent: usize, token: &str) -> Option<usize> {
    let count = model.outcome_count(agent);
    if let Some(v) = (0..count).find(|&v| model.outcome_name(agent, v) == token) {
        return Some(v);
    }
    token.parse::<usize>().ok().filter(|&v| v < count)
}

fn parse_outcomes(model: &dyn Model, raw: &str, flag: &str) -> CliResult<OutcomeMap> {
    let mut map = OutcomeMap::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| usage(flag, format!("'{part}' is not of the form agent=outcome")))?;
        let (name, value) = (name.trim(), value.trim());
        let agent = agent_by_name(model, name)
            .ok_or_else(|| usage(flag, format!("unknown agent '{name}'")))?;
        let v = outcome_value(model, agent, value)
            .ok_or_else(|| usage(flag, format!("unknown outcome '{value}' for agent '{name}'")))?;
        if map.insert(agent, v).is_some() {
            return Err(usage(flag, format!("agent '{name}' listed twice")));
        }
    }
    Ok(map)
}

/// Like [`parse_outcomes`] but a bare agent name selects the whole
/// outcome distribution.
fn parse_sweep_targets(
    model: &dyn Model,
    raw: &str,
) -> CliResult<BTreeMap<usize, Option<usize>>> {
    let flag = "--target";
    let mut map = BTreeMap::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (agent, value) = match part.split_once('=') {
            Some((name, value)) => {
                let name = name.trim();
                let agent = agent_by_name(model, name)
                    .ok_or_else(|| usage(flag, format!("unknown agent '{name}'")))?;
                let v = outcome_value(model, agent, value.trim()).ok_or_else(|| {
                    usage(flag, format!("unknown outcome '{}' for agent '{name}'", value.trim()))
                })?;
                (agent, Some(v))
            }
            None => {
                let agent = agent_by_name(model, part)
                    .ok_or_else(|| usage(flag, format!("unknown agent '{part}'")))?;
                (agent, None)
            }
        };
        if map.insert(agent, value).is_some() {
            return Err(usage(flag, format!("agent listed twice in '{raw}'")));
        }
    }
    Ok(map)
}

fn parse_setting_bits(raw: &str, flag: &str) -> CliResult<Vec<u8>> {
    raw.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<u8>()
                .map_err(|_| usage(flag, format!("'{p}' is not a setting bit")))
        })
        .collect()
}

fn parse_settings(model: &dyn Model, raw: &str, flag: &str) -> CliResult<SettingVector> {
    let bits = parse_setting_bits(raw, flag)?;
    Ok(SettingVector::from_free_bits(&bits, &model.pinned())?)
}

fn outcome_items(model: &dyn Model, map: &OutcomeMap) -> Vec<String> {
    map.iter()
        .map(|(&a, &v)| format!("{}={}", model.agent_name(a), model.outcome_name(a, v)))
        .collect()
}

fn items_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "(none)".to_string()
    } else {
        items.join(", ")
    }
}

fn to_set(map: &OutcomeMap) -> OutcomeSet {
    map.iter().map(|(&a, &v)| (a, v)).collect()
}

// --------------------------------------------------------------- commands

fn cmd_validate(scenario: &str) -> CliResult<Report> {
    let spec = load_spec(scenario)?;
    spec.validate().into_result()?;
    let lines = vec![
        format!("scenario: {scenario}"),
        format!("systems: {}", spec.systems.len()),
        format!("agents: {}", spec.agent_count()),
        "valid".to_string(),
    ];
    let json = json!({
        "scenario": scenario,
        "systems": spec.systems.len(),
        "agents": spec.agent_count(),
        "valid": true,
    });
    Ok(Report { lines, json })
}

fn cmd_compile(scenario: &str, dump: bool) -> CliResult<Report> {
    let loaded = load_model(scenario)?;
    let circ = loaded.circuit()?;
    let stage_lines = dump_stages(circ);
    let mut lines = vec![format!("scenario: {scenario}")];
    let json;
    if dump {
        lines.extend(stage_lines.iter().cloned());
        json = json!({
            "scenario": scenario,
            "dimension": circ.layout.total_dim(),
            "stages": circ.stages.len(),
            "dump": stage_lines,
        });
    } else {
        lines.push(stage_lines[0].clone());
        lines.push(format!("dimension: {}", circ.layout.total_dim()));
        lines.push(format!("stages: {}", circ.stages.len()));
        json = json!({
            "scenario": scenario,
            "layout": stage_lines[0].trim_start_matches("layout: "),
            "dimension": circ.layout.total_dim(),
            "stages": circ.stages.len(),
        });
    }
    Ok(Report { lines, json })
}

fn read_prior(model: &dyn Model, path: &PathBuf) -> CliResult<SettingPrior> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Domain(CoreError::ValidationFailed(format!(
            "cannot read prior file '{}': {e}",
            path.display()
        )))
    })?;
    let rows: Vec<PriorRowDoc> = serde_json::from_str(&text)
        .map_err(|e| Failure::Domain(CoreError::SchemaError(format!("prior file: {e}"))))?;
    let mut weights = Vec::with_capacity(rows.len());
    for row in rows {
        let x = SettingVector::from_free_bits(&row.settings, &model.pinned())?;
        weights.push((x, row.weight));
    }
    Ok(SettingPrior { weights })
}

fn cmd_predict(
    tol: f64,
    scenario: &str,
    target: &str,
    given: Option<&str>,
    settings: Option<&str>,
    prior: Option<&PathBuf>,
) -> CliResult<Report> {
    let loaded = load_model(scenario)?;
    let model = loaded.model();
    let targets = parse_outcomes(model, target, "--target")?;
    if targets.is_empty() {
        return Err(usage("--target", "at least one agent=outcome pair required"));
    }
    let givens = match given {
        Some(raw) => parse_outcomes(model, raw, "--given")?,
        None => OutcomeMap::new(),
    };
    let target_items = outcome_items(model, &targets);
    let given_items = outcome_items(model, &givens);

    let mut lines = vec![
        format!("scenario: {}", loaded.label()),
        format!("target: {}", items_or_none(&target_items)),
        format!("given: {}", items_or_none(&given_items)),
    ];
    let mut fields = serde_json::Map::new();
    fields.insert("scenario".into(), json!(loaded.label()));
    fields.insert("target".into(), json!(target_items));
    fields.insert("given".into(), json!(given_items));

    let value = if let Some(raw) = settings {
        let x = parse_settings(model, raw, "--settings")?;
        lines.push(format!("settings: {x}"));
        fields.insert("settings".into(), json!(x.to_string()));
        model_conditional(model, &targets, &givens, &x)?
    } else {
        let path = prior.expect("clap guarantees settings or prior");
        let prior = read_prior(model, path)?;
        let echo: Vec<String> =
            prior.weights.iter().map(|(x, w)| format!("{x} w={w}")).collect();
        lines.push(format!("prior: {}", echo.join("; ")));
        fields.insert(
            "prior".into(),
            Value::Array(
                prior
                    .weights
                    .iter()
                    .map(|(x, w)| json!({"settings": x.to_string(), "weight": w}))
                    .collect(),
            ),
        );
        prediction_with_prior(loaded.circuit()?, &targets, &givens, &prior)?
    };

    lines.push(format!("value: {}", format_probability(value, tol)));
    fields.insert("value".into(), json!(value));
    fields.insert("fraction".into(), json!(fraction_string(value, tol)));
    Ok(Report { lines, json: Value::Object(fields) })
}

fn marker_text(marker: &ValueMarker) -> String {
    match marker {
        ValueMarker::Defined(values) => {
            let inner: Vec<String> = values.iter().map(|v| format!("{v:.10}")).collect();
            format!("[{}]", inner.join(", "))
        }
        ValueMarker::NullGiven => "null given".to_string(),
        ValueMarker::Undefined => "undefined".to_string(),
    }
}

fn marker_json(marker: &ValueMarker) -> Value {
    match marker {
        ValueMarker::Defined(values) => json!({"kind": "defined", "values": values}),
        ValueMarker::NullGiven => json!({"kind": "null-given"}),
        ValueMarker::Undefined => json!({"kind": "undefined"}),
    }
}

fn cmd_independence(scenario: &str, target: &str, given: Option<&str>) -> CliResult<Report> {
    let loaded = load_model(scenario)?;
    let model = loaded.model();
    let targets = parse_sweep_targets(model, target)?;
    if targets.is_empty() {
        return Err(usage("--target", "at least one agent required"));
    }
    let givens = match given {
        Some(raw) => parse_outcomes(model, raw, "--given")?,
        None => OutcomeMap::new(),
    };
    let report = check_setting_independence(model, &targets, &givens)?;

    let target_items: Vec<String> = targets
        .iter()
        .map(|(&a, v)| match v {
            Some(v) => format!("{}={}", model.agent_name(a), model.outcome_name(a, *v)),
            None => format!("{} (distribution)", model.agent_name(a)),
        })
        .collect();
    let given_items = outcome_items(model, &givens);

    let mut lines = vec![
        format!("scenario: {}", loaded.label()),
        format!("target: {}", items_or_none(&target_items)),
        format!("given: {}", items_or_none(&given_items)),
    ];
    for (x, marker) in &report.rows {
        lines.push(format!("row {x}: {}", marker_text(marker)));
    }
    match &report.witness {
        Some((a, b)) => {
            lines.push(format!("witness: {a} vs {b}"));
            lines.push("setting-dependent".to_string());
        }
        None => lines.push("independent".to_string()),
    }

    let json = json!({
        "scenario": loaded.label(),
        "target": target_items,
        "given": given_items,
        "rows": report.rows.iter()
            .map(|(x, m)| json!({"settings": x.to_string(), "marker": marker_json(m)}))
            .collect::<Vec<_>>(),
        "witness": report.witness.as_ref()
            .map(|(a, b)| json!([a.to_string(), b.to_string()])),
        "independent": report.independent(),
    });
    Ok(Report { lines, json })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementsFile {
    statements: Vec<StatementDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementDoc {
    /// "certain", "impossible", or "observed".
    kind: String,
    #[serde(default)]
    given: BTreeMap<String, Value>,
    target: BTreeMap<String, Value>,
    /// Free-agent setting bits; exclusive with `stripped`.
    #[serde(default)]
    settings: Option<Vec<u8>>,
    /// "assumed" or "verified".
    #[serde(default)]
    stripped: Option<String>,
}

struct ParsedStatement {
    statement: Statement,
    targets: OutcomeMap,
    givens: OutcomeMap,
}

fn schema_err(idx: usize, field: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Domain(CoreError::SchemaError(format!("statements[{idx}].{field}: {msg}")))
}

fn doc_outcomes(
    model: &dyn Model,
    idx: usize,
    field: &str,
    raw: &BTreeMap<String, Value>,
) -> CliResult<OutcomeMap> {
    let mut map = OutcomeMap::new();
    for (name, value) in raw {
        let token = match value {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => return Err(schema_err(idx, field, format!("{other} is not an outcome"))),
        };
        let agent = agent_by_name(model, name)
            .ok_or_else(|| schema_err(idx, field, format!("unknown agent '{name}'")))?;
        let v = outcome_value(model, agent, &token).ok_or_else(|| {
            schema_err(idx, field, format!("unknown outcome '{token}' for agent '{name}'"))
        })?;
        map.insert(agent, v);
    }
    Ok(map)
}

fn parse_statement(model: &dyn Model, idx: usize, doc: &StatementDoc) -> CliResult<ParsedStatement> {
    let targets = doc_outcomes(model, idx, "target", &doc.target)?;
    let givens = doc_outcomes(model, idx, "given", &doc.given)?;
    let statement = match doc.kind.as_str() {
        "observed" => {
            if !givens.is_empty() || doc.settings.is_some() || doc.stripped.is_some() {
                return Err(schema_err(idx, "kind", "observed statements carry targets only"));
            }
            Statement::observed(to_set(&targets))?
        }
        kind @ ("certain" | "impossible") => {
            let label = match (&doc.settings, &doc.stripped) {
                (Some(bits), None) => {
                    SettingLabel::Fixed(SettingVector::from_free_bits(bits, &model.pinned())?)
                }
                (None, Some(mode)) => SettingLabel::Stripped(match mode.as_str() {
                    "assumed" => StripMode::Assumed,
                    "verified" => StripMode::Verified,
                    other => {
                        return Err(schema_err(
                            idx,
                            "stripped",
                            format!("'{other}' is neither 'assumed' nor 'verified'"),
                        ))
                    }
                }),
                _ => {
                    return Err(schema_err(
                        idx,
                        "settings",
                        "logical statements need exactly one of settings/stripped",
                    ))
                }
            };
            if kind == "certain" {
                Statement::certain(to_set(&givens), to_set(&targets), label)?
            } else {
                Statement::impossible(to_set(&givens), to_set(&targets), label)?
            }
        }
        other => {
            return Err(schema_err(
                idx,
                "kind",
                format!("'{other}' is not certain/impossible/observed"),
            ))
        }
    };
    Ok(ParsedStatement { statement, targets, givens })
}

fn cmd_reason(tol: f64, scenario: &str, path: &PathBuf, assume_i: bool) -> CliResult<Report> {
    let loaded = load_model(scenario)?;
    let model = loaded.model();
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Domain(CoreError::ValidationFailed(format!(
            "cannot read statements file '{}': {e}",
            path.display()
        )))
    })?;
    let file: StatementsFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Domain(CoreError::SchemaError(format!("statements file: {e}"))))?;
    if file.statements.is_empty() {
        return Err(Failure::Domain(CoreError::SchemaError(
            "statements file: empty statement list".into(),
        )));
    }

    let mut lines = vec![
        format!("scenario: {}", loaded.label()),
        format!("assume-I: {}", if assume_i { "on" } else { "off" }),
    ];
    let mut json_statements = Vec::new();

    // Echo and, where a fixed setting allows it, re-derive each statement.
    let mut parsed = Vec::new();
    for (i, doc) in file.statements.iter().enumerate() {
        let p = parse_statement(model, i, doc)?;
        lines.push(format!("statement {}: {}", i + 1, p.statement.display(model)));
        let mut entry = serde_json::Map::new();
        entry.insert("display".into(), json!(p.statement.display(model)));
        if let (StatementKind::Logical, SettingLabel::Fixed(x)) =
            (p.statement.kind, &p.statement.label)
        {
            let value = model_conditional(model, &p.targets, &p.givens, x)?;
            let holds = match p.statement.polarity {
                Polarity::Certain => value >= 1.0 - tol,
                Polarity::Impossible => value <= tol,
            };
            let verdict = if holds { "holds" } else { "refuted" };
            lines.push(format!(
                "  value: {} [{verdict}]",
                format_probability(value, tol)
            ));
            entry.insert("value".into(), json!(value));
            entry.insert("verdict".into(), json!(verdict));
        }
        json_statements.push(Value::Object(entry));
        parsed.push(p);
    }

    let mut working: Vec<Statement> = Vec::with_capacity(parsed.len());
    for (i, p) in parsed.iter().enumerate() {
        let s = if assume_i
            && p.statement.kind == StatementKind::Logical
            && matches!(p.statement.label, SettingLabel::Fixed(_))
        {
            let stripped = strip_settings(model, &p.statement, StripMode::Assumed)?;
            lines.push(format!("stripped {}: {}", i + 1, stripped.display(model)));
            stripped
        } else {
            p.statement.clone()
        };
        working.push(s);
    }

    // Chain the certainties in file order; everything else only
    // participates in the final single-outcome check.
    let mut chain_json = Vec::new();
    let mut all = working.clone();
    let certainties: Vec<(usize, &Statement)> = working
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_certainty())
        .collect();
    if certainties.len() >= 2 {
        let mut acc = certainties[0].1.clone();
        let mut members = vec![certainties[0].0 + 1];
        for &(idx, s) in &certainties[1..] {
            acc = chain(&acc, s)?;
            members.push(idx + 1);
            let label: Vec<String> = members.iter().map(|m| m.to_string()).collect();
            lines.push(format!("chain [{}]: {}", label.join(","), acc.display(model)));
            chain_json.push(json!({
                "members": members.clone(),
                "display": acc.display(model),
            }));
            all.push(acc.clone());
        }
    }

    let violations = check_single_outcome(&all);
    if violations.is_empty() {
        lines.push("no violations".to_string());
    } else {
        lines.push(format!("violations: {}", violations.len()));
        for v in &violations {
            lines.push(format!("violation: {}", v.display(model)));
        }
    }

    let json = json!({
        "scenario": loaded.label(),
        "assume_I": assume_i,
        "statements": json_statements,
        "chain": chain_json,
        "violations": violations.iter().map(|v| v.display(model)).collect::<Vec<_>>(),
    });
    Ok(Report { lines, json })
}

fn cmd_paradox_scan(scenario: &str, assume_i: bool, max_chain: Option<usize>) -> CliResult<Report> {
    let loaded = load_model(scenario)?;
    let model = loaded.model();
    let assumptions = AssumptionSet { i: assume_i, ..AssumptionSet::default() };
    let mut config = ScanConfig::default();
    if let Some(n) = max_chain {
        config.max_chain = n;
    }
    let report = paradox_scan(model, assumptions, config)?;

    let mut lines = vec![
        format!("scenario: {}", loaded.label()),
        format!("assumptions: Q U C D S{}", if assume_i { " I" } else { "" }),
        format!("max-chain: {}", config.max_chain),
        format!("queries: {}", report.queries),
        format!("statements: {}", report.nodes.len()),
    ];
    let mut json_violations = Vec::new();
    if report.violations.is_empty() {
        lines.push("no violations".to_string());
    } else {
        lines.push(format!("violations: {}", report.violations.len()));
        for (k, v) in report.violations.iter().enumerate() {
            lines.push(format!("violation {}: {}", k + 1, v.display(model)));
            let (i, j) = v.statements;
            let mut roots = vec![i];
            if j != i {
                roots.push(j);
            }
            let mut trace = Vec::new();
            for root in roots {
                for line in trace_lines(&report, model, root) {
                    trace.push(line);
                }
            }
            for line in &trace {
                lines.push(format!("  {line}"));
            }
            json_violations.push(json!({
                "display": v.display(model),
                "statements": [v.statements.0, v.statements.1],
                "trace": trace,
            }));
        }
    }
    lines.push(format!("paradox: {}", if report.paradox() { "yes" } else { "no" }));

    let json = json!({
        "scenario": loaded.label(),
        "assume_I": assume_i,
        "max_chain": config.max_chain,
        "queries": report.queries,
        "statements": report.nodes.len(),
        "suppressed": report.suppressed,
        "violations": json_violations,
        "paradox": report.paradox(),
    });
    Ok(Report { lines, json })
}

fn cmd_library_list() -> CliResult<Report> {
    let mut lines = Vec::new();
    let mut entries = Vec::new();
    for name in scenario_names() {
        let sc = by_name(name)?;
        lines.push(format!("{name}: {}", sc.title));
        entries.push(json!({"name": name, "title": sc.title}));
    }
    Ok(Report { lines, json: Value::Array(entries) })
}

fn cmd_library_show(name: &str) -> CliResult<Report> {
    let sc = by_name(name)?;
    let document = serialize_scenario(&sc.spec);
    let notes: Vec<String> =
        sc.agent_notes.iter().map(|(agent, note)| format!("{agent}: {note}")).collect();
    let mut lines = vec![
        format!("name: {}", sc.name),
        format!("title: {}", sc.title),
        format!("agents: {}", notes.join("; ")),
        format!("expected rows: {}", sc.expected.len()),
        "document:".to_string(),
    ];
    lines.extend(document.trim_end().split('\n').map(str::to_string));
    let json = json!({
        "name": sc.name,
        "title": sc.title,
        "agents": notes,
        "expected_rows": sc.expected.len(),
        "document": serde_json::from_str::<Value>(&document).expect("documents are JSON"),
    });
    Ok(Report { lines, json })
}

fn cmd_library_check(tol: f64, name: &str) -> CliResult<Report> {
    let sc = by_name(name)?;
    let rows = check_scenario(&sc)?;
    let mut lines = vec![format!("scenario: {}: {}", sc.name, sc.title)];
    let mut json_rows = Vec::new();
    let mut counts = (0usize, 0usize, 0usize);
    for row in &rows {
        let value = format_probability(row.computed, tol);
        let (status, note) = match (&row.status, &row.kind) {
            (RowStatus::Match, _) => {
                counts.0 += 1;
                ("match", String::new())
            }
            (RowStatus::PublishedDiffers, ExpectedKind::Disputed { published, .. }) => {
                counts.1 += 1;
                ("published-differs", format!(" (published {})", format_probability(*published, tol)))
            }
            (RowStatus::Mismatch, ExpectedKind::Verified { value: expected }) => {
                counts.2 += 1;
                ("MISMATCH", format!(" (expected {})", format_probability(*expected, tol)))
            }
            (RowStatus::Mismatch, ExpectedKind::Disputed { evaluated, .. }) => {
                counts.2 += 1;
                ("MISMATCH", format!(" (direct evaluation {})", format_probability(*evaluated, tol)))
            }
            (RowStatus::PublishedDiffers, ExpectedKind::Verified { .. }) => {
                unreachable!("verified rows never differ from publication")
            }
        };
        lines.push(format!(
            "{} @ {}: value {} [{status}]{note}",
            row.description, row.settings, value
        ));
        let mut entry = serde_json::Map::new();
        entry.insert("description".into(), json!(row.description));
        entry.insert("settings".into(), json!(row.settings.to_string()));
        entry.insert("value".into(), json!(row.computed));
        entry.insert("fraction".into(), json!(fraction_string(row.computed, tol)));
        entry.insert("status".into(), json!(status));
        if let ExpectedKind::Disputed { published, evaluated } = row.kind {
            entry.insert("published".into(), json!(published));
            entry.insert("evaluated".into(), json!(evaluated));
        }
        json_rows.push(Value::Object(entry));
    }
    lines.push(format!(
        "summary: {} rows; {} match, {} published-differs, {} mismatch",
        rows.len(),
        counts.0,
        counts.1,
        counts.2
    ));
    let json = json!({
        "scenario": sc.name,
        "title": sc.title,
        "rows": json_rows,
        "summary": {"rows": rows.len(), "match": counts.0, "published_differs": counts.1, "mismatch": counts.2},
    });
    Ok(Report { lines, json })
}

fn cmd_hardy(tol: f64) -> CliResult<Report> {
    let sc = by_name("fr_ent")?;
    let table = hardy_map(&sc)?;
    let mut lines = vec!["hardy view of fr_ent".to_string()];
    let mut cells = Vec::new();
    for x1 in 0..2 {
        for x2 in 0..2 {
            let row: Vec<String> = (0..4)
                .map(|k| {
                    let (a, b) = (k / 2, k % 2);
                    format!("P(a'={a},b'={b})={}", format_probability(table.probability(x1, x2, a, b), tol))
                })
                .collect();
            lines.push(format!("cell x=({x1},{x2}): {}", row.join(" ")));
            cells.push(json!({
                "x1": x1,
                "x2": x2,
                "values": (0..4).map(|k| table.probability(x1, x2, k / 2, k % 2)).collect::<Vec<_>>(),
            }));
        }
    }
    let success = table.probability(0, 0, 1, 1);
    lines.push(format!(
        "success: P(a'=1,b'=1 | x=(0,0)) = {}",
        format_probability(success, tol)
    ));
    let zeros = [(1, 1, 0, 1), (1, 0, 1, 1), (0, 1, 1, 0)];
    for (x1, x2, a, b) in zeros {
        lines.push(format!(
            "zero: P(a'={a},b'={b} | x=({x1},{x2})) = {}",
            format_probability(table.probability(x1, x2, a, b), tol)
        ));
    }
    let extensions = table.extensions_of(0, 0, 1, 1);
    lines.push(format!("extensions of the success event: {}", extensions.len()));
    lines.push(format!(
        "logically contextual: {}",
        if extensions.is_empty() { "yes" } else { "no" }
    ));
    let json = json!({
        "scenario": "fr_ent",
        "cells": cells,
        "success": success,
        "zeros": zeros.iter()
            .map(|&(x1, x2, a, b)| json!({
                "x1": x1, "x2": x2, "a": a, "b": b,
                "value": table.probability(x1, x2, a, b),
            }))
            .collect::<Vec<_>>(),
        "extensions": extensions.len(),
        "logically_contextual": extensions.is_empty(),
    });
    Ok(Report { lines, json })
}

fn cmd_collider(x1: u8, x2: u8) -> CliResult<Report> {
    if x1 > 1 {
        return Err(usage("--x1", "station inputs are bits"));
    }
    if x2 > 1 {
        return Err(usage("--x2", "station inputs are bits"));
    }
    let table = collider_table(x1 == 1, x2 == 1);
    let mut lines = vec![
        format!("station inputs: x1={x1}, x2={x2}"),
        format!("joint counts (out of {COLLIDER_DENOMINATOR}):"),
    ];
    let mut rows = Vec::new();
    let mut marginals = [0u32; 4];
    for ((a, b, u, w), count) in &table {
        lines.push(format!("a={a} b={b} u={u} w={w}: {count}/{COLLIDER_DENOMINATOR}"));
        rows.push(json!({"a": a, "b": b, "u": u, "w": w, "count": count}));
        for (slot, value) in [*a, *b, *u, *w].into_iter().enumerate() {
            if value == 1 {
                marginals[slot] += count;
            }
        }
    }
    lines.push(format!(
        "marginals: P(a=1) = {}/8; P(b=1) = {}/8; P(u=1) = {}/8; P(w=1) = {}/8",
        marginals[0], marginals[1], marginals[2], marginals[3]
    ));
    let json = json!({
        "x1": x1,
        "x2": x2,
        "denominator": COLLIDER_DENOMINATOR,
        "table": rows,
        "marginals": {
            "a": marginals[0], "b": marginals[1], "u": marginals[2], "w": marginals[3],
        },
    });
    Ok(Report { lines, json })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fr_model() -> Loaded {
        load_model("fr_ent").unwrap()
    }

    #[test]
    fn outcome_labels_win_over_indices() {
        let loaded = fr_model();
        let model = loaded.model();
        // Agent u's label "10" must never parse as the number 10.
        let u = agent_by_name(model, "u").unwrap();
        assert_eq!(outcome_value(model, u, "10"), Some(3));
        assert_eq!(outcome_value(model, u, "ok"), Some(0));
        assert_eq!(outcome_value(model, u, "1"), Some(1));
        assert_eq!(outcome_value(model, u, "nope"), None);
    }

    #[test]
    fn outcome_pair_parsing_reports_the_flag() {
        let loaded = fr_model();
        let model = loaded.model();
        let map = parse_outcomes(model, "u=ok, w=fail", "--given").unwrap();
        assert_eq!(map.get(&3), Some(&0));
        assert_eq!(map.get(&4), Some(&1));
        match parse_outcomes(model, "u", "--given") {
            Err(Failure::Usage { flag, .. }) => assert_eq!(flag, "--given"),
            _ => panic!("expected a usage failure"),
        }
    }

    #[test]
    fn sweep_targets_allow_bare_agents() {
        let loaded = fr_model();
        let model = loaded.model();
        let map = parse_sweep_targets(model, "a,b=1").unwrap();
        assert_eq!(map.get(&1), Some(&None));
        assert_eq!(map.get(&2), Some(&Some(1)));
    }

    #[test]
    fn collider_resolves_as_a_model() {
        let loaded = load_model("collider").unwrap();
        assert_eq!(loaded.model().agent_count(), 4);
        assert!(loaded.circuit().is_err());
    }
}
