//! Epistemic layer: setting-labelled logical statements, agent knowledge
//! bases, and the Q/U/C/D/S/I rule engine that searches for single-outcome
//! violations ("paradoxes") in multi-agent scenarios.
//!
//! The engine is generic over a [`Model`] so the same rules run against
//! quantum circuits and classical causal toys alike.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::exec::map_collect;
use crate::scenario::{OutcomeMap, SettingVector};
use crate::tensor::EPS;

/// Set of (agent, outcome) pairs. Unlike a map it can hold two values for
/// one agent, which is exactly what a single-outcome violation looks like.
pub type OutcomeSet = BTreeSet<(usize, usize)>;

/// Anything the epistemic rules can reason about: a fixed roster of
/// agents, a joint outcome distribution parameterized by settings, and
/// enough metadata to decide when outcomes exist at all.
pub trait Model: Sync {
    fn agent_count(&self) -> usize;
    fn agent_name(&self, agent: usize) -> String;
    fn outcome_count(&self, agent: usize) -> usize;
    fn pinned(&self) -> Vec<bool>;
    /// True when an agent's outcome only exists at setting 1 (a reasoning
    /// cut placed on them). Classical models keep outcomes regardless.
    fn outcome_requires_setting(&self) -> bool;
    /// True when some later operation reads or disturbs this agent's
    /// record, making their unrealized outcome genuinely undefined.
    fn memory_touched(&self, agent: usize) -> bool;
    /// Publicly announced outcome events, available to every agent.
    fn announcements(&self) -> Vec<(String, OutcomeMap)>;
    fn joint(&self, x: &SettingVector, assignment: &OutcomeMap) -> Result<f64>;
    fn outcome_name(&self, agent: usize, value: usize) -> String;
}

impl Model for crate::compile::AugmentedCircuit {
    fn agent_count(&self) -> usize {
        self.stages.len()
    }
    fn agent_name(&self, agent: usize) -> String {
        self.stages[agent - 1].name.clone()
    }
    fn outcome_count(&self, agent: usize) -> usize {
        self.stages[agent - 1].outcome_count
    }
    fn pinned(&self) -> Vec<bool> {
        self.pinned_mask()
    }
    fn outcome_requires_setting(&self) -> bool {
        true
    }
    fn memory_touched(&self, agent: usize) -> bool {
        self.stages[agent - 1].memory_touched
    }
    fn announcements(&self) -> Vec<(String, OutcomeMap)> {
        self.announcements
            .iter()
            .map(|a| (a.name.clone(), a.outcomes.clone()))
            .collect()
    }
    fn joint(&self, x: &SettingVector, assignment: &OutcomeMap) -> Result<f64> {
        crate::predict::joint_probability(self, x, assignment)
    }
    fn outcome_name(&self, agent: usize, value: usize) -> String {
        self.outcome_label(agent, value)
    }
}

/// P(targets | givens, x) through the model's joint distribution.
pub fn model_conditional(
    model: &dyn Model,
    targets: &OutcomeMap,
    givens: &OutcomeMap,
    x: &SettingVector,
) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::ValidationFailed("empty prediction target".into()));
    }
    if let Some(agent) = targets.keys().find(|a| givens.contains_key(a)) {
        return Err(Error::ValidationFailed(format!(
            "agent {agent} appears in both targets and givens"
        )));
    }
    let denominator = model.joint(x, givens)?;
    if denominator <= EPS {
        return Err(Error::ConditioningOnNullEvent(format!(
            "given event has probability {denominator} at {x}"
        )));
    }
    let mut all = givens.clone();
    all.extend(targets.iter().map(|(&k, &v)| (k, v)));
    let numerator = model.joint(x, &all)?;
    crate::tensor::clamp_probability(numerator / denominator, EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StatementKind {
    Logical,
    Observational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    /// S¹: the targets happen with certainty given the givens.
    Certain,
    /// S⁰: the targets cannot happen given the givens.
    Impossible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StripMode {
    Verified,
    Assumed,
}

/// Where a logical statement is valid: at one concrete setting vector, or
/// across all of them once the setting label has been stripped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SettingLabel {
    Fixed(SettingVector),
    Stripped(StripMode),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Statement {
    pub kind: StatementKind,
    pub polarity: Polarity,
    pub givens: OutcomeSet,
    pub targets: OutcomeSet,
    pub label: SettingLabel,
}

impl Statement {
    fn validate_parts(givens: &OutcomeSet, targets: &OutcomeSet) -> Result<()> {
        if targets.is_empty() {
            return Err(Error::ValidationFailed("statement has no targets".into()));
        }
        if let Some(pair) = targets.intersection(givens).next() {
            return Err(Error::ValidationFailed(format!(
                "outcome pair {pair:?} appears in both givens and targets"
            )));
        }
        Ok(())
    }

    pub fn certain(givens: OutcomeSet, targets: OutcomeSet, label: SettingLabel) -> Result<Self> {
        Self::validate_parts(&givens, &targets)?;
        Ok(Statement { kind: StatementKind::Logical, polarity: Polarity::Certain, givens, targets, label })
    }

    pub fn impossible(givens: OutcomeSet, targets: OutcomeSet, label: SettingLabel) -> Result<Self> {
        Self::validate_parts(&givens, &targets)?;
        Ok(Statement { kind: StatementKind::Logical, polarity: Polarity::Impossible, givens, targets, label })
    }

    pub fn observed(targets: OutcomeSet) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::ValidationFailed("statement has no targets".into()));
        }
        Ok(Statement {
            kind: StatementKind::Observational,
            polarity: Polarity::Certain,
            givens: OutcomeSet::new(),
            targets,
            label: SettingLabel::Stripped(StripMode::Verified),
        })
    }

    pub fn is_certainty(&self) -> bool {
        self.kind == StatementKind::Logical && self.polarity == Polarity::Certain
    }

    /// Human-readable rendering with outcome aliases from the model.
    pub fn display(&self, model: &dyn Model) -> String {
        let list = |set: &OutcomeSet| -> String {
            set.iter()
                .map(|&(a, v)| format!("{}={}", model.agent_name(a), model.outcome_name(a, v)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self.kind {
            StatementKind::Observational => format!("obs: {}", list(&self.targets)),
            StatementKind::Logical => {
                let head = match self.polarity {
                    Polarity::Certain => "S¹",
                    Polarity::Impossible => "S⁰",
                };
                let body = if self.givens.is_empty() {
                    list(&self.targets)
                } else {
                    format!("{} ⇒ {}", list(&self.givens), list(&self.targets))
                };
                let tail = match &self.label {
                    SettingLabel::Fixed(x) => format!(" @ {x}"),
                    SettingLabel::Stripped(StripMode::Verified) => " [I verified]".to_string(),
                    SettingLabel::Stripped(StripMode::Assumed) => " [I assumed]".to_string(),
                };
                format!("{head}: {body}{tail}")
            }
        }
    }
}

fn outcome_set(map: &OutcomeMap) -> OutcomeSet {
    map.iter().map(|(&a, &v)| (a, v)).collect()
}

fn outcome_map(set: &OutcomeSet) -> Result<OutcomeMap> {
    let mut map = OutcomeMap::new();
    for &(a, v) in set {
        if map.insert(a, v).is_some() {
            return Err(Error::ValidationFailed(format!(
                "conflicting outcome values for agent {a}"
            )));
        }
    }
    Ok(map)
}

/// Turn a prediction into logic: certainty within ε becomes S¹, vanishing
/// probability becomes S⁰, anything in between yields no statement.
pub fn derive_statement(
    model: &dyn Model,
    targets: &OutcomeMap,
    givens: &OutcomeMap,
    x: &SettingVector,
) -> Result<Option<Statement>> {
    let p = model_conditional(model, targets, givens, x)?;
    let label = SettingLabel::Fixed(x.clone());
    if p >= 1.0 - EPS {
        Ok(Some(Statement::certain(outcome_set(givens), outcome_set(targets), label)?))
    } else if p <= EPS {
        Ok(Some(Statement::impossible(outcome_set(givens), outcome_set(targets), label)?))
    } else {
        Ok(None)
    }
}

/// Who holds a statement when knowledge is not shared: the latest agent
/// among its givens, or the outside observer for unconditional ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Owner {
    External,
    Agent(usize),
}

pub fn statement_owner(s: &Statement) -> Owner {
    s.givens
        .iter()
        .map(|&(a, _)| a)
        .max()
        .map_or(Owner::External, Owner::Agent)
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    pub statements: BTreeSet<Statement>,
}

impl KnowledgeBase {
    pub fn add(&mut self, s: Statement) -> bool {
        self.statements.insert(s)
    }

    /// One agent takes over everything another knows.
    pub fn inherit(&mut self, other: &KnowledgeBase) {
        for s in &other.statements {
            self.statements.insert(s.clone());
        }
    }
}

/// Combine two certainties: if the second's premises are entailed by the
/// first, the conclusions accumulate. Labels must agree unless stripped.
pub fn chain(s1: &Statement, s2: &Statement) -> Result<Statement> {
    if !s1.is_certainty() || !s2.is_certainty() {
        return Err(Error::ValidationFailed(
            "only certain (S¹) logical statements chain".into(),
        ));
    }
    let label = match (&s1.label, &s2.label) {
        (SettingLabel::Fixed(a), SettingLabel::Fixed(b)) => {
            if a == b {
                SettingLabel::Fixed(a.clone())
            } else {
                return Err(Error::SettingMismatch(format!(
                    "statements hold at different settings {a} and {b}"
                )));
            }
        }
        // A stripped statement holds at every setting, in particular the
        // other statement's.
        (SettingLabel::Stripped(_), SettingLabel::Fixed(b)) => SettingLabel::Fixed(b.clone()),
        (SettingLabel::Fixed(a), SettingLabel::Stripped(_)) => SettingLabel::Fixed(a.clone()),
        (SettingLabel::Stripped(m1), SettingLabel::Stripped(m2)) => {
            let mode = if *m1 == StripMode::Verified && *m2 == StripMode::Verified {
                StripMode::Verified
            } else {
                StripMode::Assumed
            };
            SettingLabel::Stripped(mode)
        }
    };
    let entailed: OutcomeSet = s1.givens.union(&s1.targets).copied().collect();
    if !s2.givens.is_subset(&entailed) {
        let missing: Vec<_> = s2.givens.difference(&entailed).collect();
        return Err(Error::GivensNotEntailed(format!(
            "premises {missing:?} are neither given nor concluded by the first statement"
        )));
    }
    let mut targets: OutcomeSet = s1.targets.union(&s2.targets).copied().collect();
    // Conclusions that merely restate a given are dropped; conclusions that
    // CONTRADICT a given stay, and surface as single-outcome violations.
    targets.retain(|pair| !s1.givens.contains(pair));
    Statement::certain(s1.givens.clone(), targets, label)
}

/// Per-setting-vector value of a prediction query during an independence
/// sweep. Queries about unrealized outcomes get structural markers rather
/// than numbers, and markers only agree with themselves.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueMarker {
    /// Conditional probabilities, one entry per completion of the
    /// valueless target agents (single entry when all targets are valued).
    Defined(Vec<f64>),
    /// The given event has vanishing probability at this vector.
    NullGiven,
    /// A queried agent is unmeasured here and their record is disturbed
    /// later, so no outcome value exists even in principle.
    Undefined,
}

fn markers_agree(a: &ValueMarker, b: &ValueMarker) -> bool {
    match (a, b) {
        (ValueMarker::Defined(u), ValueMarker::Defined(v)) => {
            u.len() == v.len() && u.iter().zip(v).all(|(x, y)| (x - y).abs() <= EPS)
        }
        (ValueMarker::NullGiven, ValueMarker::NullGiven) => true,
        (ValueMarker::Undefined, ValueMarker::Undefined) => true,
        _ => false,
    }
}

#[derive(Debug, Clone)]
pub struct IndependenceReport {
    /// Vectors where the query has a (possibly marker-valued) answer.
    /// Vectors skipped by the untouched-record reduction do not appear.
    pub rows: Vec<(SettingVector, ValueMarker)>,
    pub witness: Option<(SettingVector, SettingVector)>,
}

impl IndependenceReport {
    pub fn independent(&self) -> bool {
        self.witness.is_none()
    }
}

/// Maximum completions of valueless target agents in one sweep.
const COMPLETION_CAP: usize = 256;

/// Does the prediction depend on where the reasoning cuts sit? Sweeps all
/// scenario-valid setting vectors. Query agents may be left valueless
/// (`None`) to compare whole outcome distributions.
pub fn check_setting_independence(
    model: &dyn Model,
    targets: &BTreeMap<usize, Option<usize>>,
    givens: &OutcomeMap,
) -> Result<IndependenceReport> {
    if targets.is_empty() {
        return Err(Error::ValidationFailed("empty prediction target".into()));
    }
    for agent in targets.keys().chain(givens.keys()) {
        if *agent == 0 || *agent > model.agent_count() {
            return Err(Error::InvalidAgentIndex(format!(
                "agent {agent} of {}",
                model.agent_count()
            )));
        }
    }
    let valueless: Vec<usize> = targets
        .iter()
        .filter_map(|(&a, v)| v.is_none().then_some(a))
        .collect();
    let combos: usize = valueless.iter().map(|&a| model.outcome_count(a)).product();
    if combos > COMPLETION_CAP {
        return Err(Error::BudgetExceeded(format!(
            "{combos} outcome completions exceed the sweep cap {COMPLETION_CAP}"
        )));
    }

    let mentioned: Vec<usize> = targets.keys().chain(givens.keys()).copied().collect();
    let mut rows = Vec::new();
    for x in SettingVector::enumerate(&model.pinned()) {
        if model.outcome_requires_setting() {
            let unrealized: Vec<usize> =
                mentioned.iter().copied().filter(|&a| !x.measured(a)).collect();
            if !unrealized.is_empty() {
                if unrealized.iter().any(|&a| model.memory_touched(a)) {
                    rows.push((x, ValueMarker::Undefined));
                } // else: untouched records defer to the measured vector
                continue;
            }
        }
        let mut values = Vec::with_capacity(combos);
        let mut null = false;
        for combo in 0..combos {
            let mut t = OutcomeMap::new();
            let mut rem = combo;
            for &a in valueless.iter().rev() {
                let d = model.outcome_count(a);
                t.insert(a, rem % d);
                rem /= d;
            }
            for (&a, &v) in targets.iter() {
                if let Some(v) = v {
                    t.insert(a, v);
                }
            }
            match model_conditional(model, &t, givens, &x) {
                Ok(p) => values.push(p),
                Err(Error::ConditioningOnNullEvent(_)) => {
                    null = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        rows.push((x, if null { ValueMarker::NullGiven } else { ValueMarker::Defined(values) }));
    }

    // Prefer a witness with two concrete numbers; fall back to any
    // structural disagreement.
    let mut witness = None;
    'defined: for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            if let (ValueMarker::Defined(_), ValueMarker::Defined(_)) = (&rows[i].1, &rows[j].1) {
                if !markers_agree(&rows[i].1, &rows[j].1) {
                    witness = Some((rows[i].0.clone(), rows[j].0.clone()));
                    break 'defined;
                }
            }
        }
    }
    if witness.is_none() {
        'any: for i in 0..rows.len() {
            for j in (i + 1)..rows.len() {
                if !markers_agree(&rows[i].1, &rows[j].1) {
                    witness = Some((rows[i].0.clone(), rows[j].0.clone()));
                    break 'any;
                }
            }
        }
    }
    Ok(IndependenceReport { rows, witness })
}

/// Erase a statement's setting label so it can chain across settings.
/// `Verified` demands an actual independence check; `Assumed` is the leap
/// of faith that manufactures the classic paradoxes.
pub fn strip_settings(model: &dyn Model, s: &Statement, mode: StripMode) -> Result<Statement> {
    if s.kind != StatementKind::Logical {
        return Err(Error::ValidationFailed(
            "only logical statements carry setting labels".into(),
        ));
    }
    if let SettingLabel::Stripped(_) = s.label {
        return Ok(s.clone());
    }
    if mode == StripMode::Verified {
        let targets: BTreeMap<usize, Option<usize>> = outcome_map(&s.targets)?
            .into_iter()
            .map(|(a, v)| (a, Some(v)))
            .collect();
        let givens = outcome_map(&s.givens)?;
        let report = check_setting_independence(model, &targets, &givens)?;
        if let Some((a, b)) = report.witness {
            return Err(Error::IndependenceNotVerified(format!(
                "prediction differs between settings {a} and {b}"
            )));
        }
    }
    let mut out = s.clone();
    out.label = SettingLabel::Stripped(mode);
    Ok(out)
}

/// Two asserted certainties that cannot both hold: one agent, one context,
/// two different outcome values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleOutcomeViolation {
    pub agent: usize,
    pub values: (usize, usize),
    /// Arena indices of the offending statements; equal indices mean the
    /// conflict sits inside a single statement (given vs concluded).
    pub statements: (usize, usize),
}

impl SingleOutcomeViolation {
    pub fn display(&self, model: &dyn Model) -> String {
        let name = model.agent_name(self.agent);
        format!(
            "{}={} ∧ {}={}",
            name,
            model.outcome_name(self.agent, self.values.0),
            name,
            model.outcome_name(self.agent, self.values.1)
        )
    }
}

fn label_class(label: &SettingLabel) -> Option<&SettingVector> {
    match label {
        SettingLabel::Fixed(x) => Some(x),
        SettingLabel::Stripped(_) => None,
    }
}

/// Find all single-outcome violations among certainties: within one
/// statement (a conclusion contradicting a premise) and across statements
/// sharing givens and a setting context. Duplicate conflicts collapse.
pub fn check_single_outcome(statements: &[Statement]) -> Vec<SingleOutcomeViolation> {
    let mut seen: BTreeSet<(usize, usize, usize, OutcomeSet)> = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |agent: usize, v1: usize, v2: usize, givens: &OutcomeSet, idx: (usize, usize), out: &mut Vec<SingleOutcomeViolation>| {
        let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
        if seen.insert((agent, lo, hi, givens.clone())) {
            out.push(SingleOutcomeViolation { agent, values: (lo, hi), statements: idx });
        }
    };

    for (i, s) in statements.iter().enumerate() {
        if !s.is_certainty() {
            continue;
        }
        for &(a, v) in &s.targets {
            for &(ga, gv) in &s.givens {
                if a == ga && v != gv {
                    push(a, gv, v, &s.givens, (i, i), &mut out);
                }
            }
            for &(ta, tv) in &s.targets {
                if a == ta && v < tv {
                    push(a, v, tv, &s.givens, (i, i), &mut out);
                }
            }
        }
    }

    for i in 0..statements.len() {
        if !statements[i].is_certainty() {
            continue;
        }
        for j in (i + 1)..statements.len() {
            let (s1, s2) = (&statements[i], &statements[j]);
            if !s2.is_certainty() || s1.givens != s2.givens {
                continue;
            }
            let compatible = match (label_class(&s1.label), label_class(&s2.label)) {
                (Some(a), Some(b)) => a == b,
                (None, None) => true,
                _ => false,
            };
            if !compatible {
                continue;
            }
            for &(a, v) in &s1.targets {
                for &(ta, tv) in &s2.targets {
                    if a == ta && v != tv {
                        push(a, v, tv, &s1.givens, (i, j), &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Which reasoning rules are in force during a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionSet {
    /// Q: certainty-1 predictions become logical statements.
    pub q: bool,
    /// U: cuts may be placed anywhere (all setting vectors enumerated).
    pub u: bool,
    /// C: agents share knowledge (one communal knowledge base).
    pub c: bool,
    /// D: certainties chain transitively.
    pub d: bool,
    /// S: two certain values for one outcome count as a contradiction.
    pub s: bool,
    /// I: setting labels are stripped on faith before chaining.
    pub i: bool,
}

impl Default for AssumptionSet {
    fn default() -> Self {
        AssumptionSet { q: true, u: true, c: true, d: true, s: true, i: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Publicly announced event, shared with every knowledge base.
    Announced { name: String },
    /// Derived directly from the model's predictions at one vector.
    Seed { vector: SettingVector },
    Strip { of: usize, mode: StripMode },
    Chain { left: usize, right: usize },
}

impl Provenance {
    /// The rule that produced the statement, for trace rendering.
    pub fn rule(&self) -> &'static str {
        match self {
            Provenance::Announced { .. } => "C",
            Provenance::Seed { .. } => "Q",
            Provenance::Strip { mode: StripMode::Verified, .. } => "strip (I verified)",
            Provenance::Strip { mode: StripMode::Assumed, .. } => "strip (I assumed)",
            Provenance::Chain { .. } => "D",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub statement: Statement,
    pub provenance: Provenance,
    /// Number of seed statements underneath; chaining is capped on it.
    pub weight: usize,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub nodes: Vec<Node>,
    pub violations: Vec<SingleOutcomeViolation>,
    /// True when the single-outcome rule was dropped: conflicts are still
    /// listed, but no longer count as a paradox.
    pub suppressed: bool,
    /// Prediction queries evaluated during seeding.
    pub queries: usize,
}

impl ScanReport {
    pub fn paradox(&self) -> bool {
        !self.suppressed && !self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    /// Maximum seed statements combined into one chained statement.
    pub max_chain: usize,
    /// Hard cap on derived statements.
    pub budget: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { max_chain: 4, budget: 20_000 }
    }
}

struct SeedQuery {
    vector: SettingVector,
    target: (usize, usize),
    givens: OutcomeMap,
}

fn seed_queries(model: &dyn Model, vectors: &[SettingVector]) -> Vec<SeedQuery> {
    let needs_setting = model.outcome_requires_setting();
    let announcements = model.announcements();
    let mut out = Vec::new();
    for x in vectors {
        for t in 1..=model.agent_count() {
            if needs_setting && !x.measured(t) {
                continue;
            }
            for v in 0..model.outcome_count(t) {
                let target = (t, v);
                out.push(SeedQuery { vector: x.clone(), target, givens: OutcomeMap::new() });
                for g in 1..=model.agent_count() {
                    if g == t || (needs_setting && !x.measured(g)) {
                        continue;
                    }
                    for w in 0..model.outcome_count(g) {
                        out.push(SeedQuery {
                            vector: x.clone(),
                            target,
                            givens: [(g, w)].into_iter().collect(),
                        });
                    }
                }
                for (_, event) in &announcements {
                    if event.contains_key(&t)
                        || event.keys().any(|&a| needs_setting && !x.measured(a))
                    {
                        continue;
                    }
                    out.push(SeedQuery { vector: x.clone(), target, givens: event.clone() });
                }
            }
        }
    }
    out
}

/// Run the full rule engine: derive every certainty and impossibility in
/// the single-target fragment (Q over U's vectors), optionally strip
/// labels (I), close under chaining (D) within knowledge bases (C), and
/// report single-outcome conflicts (S) with full provenance.
pub fn paradox_scan(
    model: &dyn Model,
    assumptions: AssumptionSet,
    config: ScanConfig,
) -> Result<ScanReport> {
    if config.max_chain < 1 {
        return Err(Error::ValidationFailed("max_chain must be at least 1".into()));
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: BTreeSet<Statement> = BTreeSet::new();

    for (name, event) in model.announcements() {
        let s = Statement::observed(outcome_set(&event))?;
        if seen.insert(s.clone()) {
            nodes.push(Node { statement: s, provenance: Provenance::Announced { name }, weight: 0 });
        }
    }

    let mut queries = 0usize;
    if assumptions.q {
        let vectors = if assumptions.u {
            SettingVector::enumerate(&model.pinned())
        } else {
            vec![SettingVector::all_ones(model.agent_count())]
        };
        let batch = seed_queries(model, &vectors);
        queries = batch.len();
        let derived: Vec<Result<Option<Statement>>> = map_collect(&batch, |q| {
            let targets: OutcomeMap = [q.target].into_iter().collect();
            match derive_statement(model, &targets, &q.givens, &q.vector) {
                Err(Error::ConditioningOnNullEvent(_)) => Ok(None),
                other => other,
            }
        });
        for (q, d) in batch.iter().zip(derived) {
            if let Some(s) = d? {
                if seen.insert(s.clone()) {
                    nodes.push(Node {
                        statement: s,
                        provenance: Provenance::Seed { vector: q.vector.clone() },
                        weight: 1,
                    });
                }
            }
        }
    }

    if nodes.len() > config.budget {
        return Err(Error::BudgetExceeded(format!(
            "{} statements exceed the scan budget {}",
            nodes.len(),
            config.budget
        )));
    }

    if assumptions.i {
        // Strip on faith; originals stay so Fixed-label conflicts (none,
        // for sound models) would still be visible.
        for idx in 0..nodes.len() {
            if !nodes[idx].statement.is_certainty()
                || nodes[idx].statement.kind != StatementKind::Logical
            {
                continue;
            }
            if let SettingLabel::Fixed(_) = nodes[idx].statement.label {
                let mut s = nodes[idx].statement.clone();
                s.label = SettingLabel::Stripped(StripMode::Assumed);
                if seen.insert(s.clone()) {
                    nodes.push(Node {
                        statement: s,
                        provenance: Provenance::Strip { of: idx, mode: StripMode::Assumed },
                        weight: nodes[idx].weight,
                    });
                }
            }
        }
    }

    if assumptions.d {
        let partition = |s: &Statement| -> Owner {
            if assumptions.c {
                Owner::External
            } else {
                statement_owner(s)
            }
        };
        let chainable = |n: &Node| n.statement.is_certainty();
        let mut frontier: Vec<usize> = (0..nodes.len()).filter(|&i| chainable(&nodes[i])).collect();
        while !frontier.is_empty() {
            let mut added: Vec<usize> = Vec::new();
            let candidates: Vec<usize> =
                (0..nodes.len()).filter(|&i| chainable(&nodes[i])).collect();
            for &i in &candidates {
                for &j in &candidates {
                    if i == j || (!frontier.contains(&i) && !frontier.contains(&j)) {
                        continue;
                    }
                    if nodes[i].weight + nodes[j].weight > config.max_chain {
                        continue;
                    }
                    if partition(&nodes[i].statement) != partition(&nodes[j].statement) {
                        continue;
                    }
                    let Ok(s) = chain(&nodes[i].statement, &nodes[j].statement) else {
                        continue;
                    };
                    if seen.insert(s.clone()) {
                        nodes.push(Node {
                            statement: s,
                            provenance: Provenance::Chain { left: i, right: j },
                            weight: nodes[i].weight + nodes[j].weight,
                        });
                        added.push(nodes.len() - 1);
                        if nodes.len() > config.budget {
                            return Err(Error::BudgetExceeded(format!(
                                "{} statements exceed the scan budget {}",
                                nodes.len(),
                                config.budget
                            )));
                        }
                    }
                }
            }
            frontier = added;
        }
    }

    let statements: Vec<Statement> = nodes.iter().map(|n| n.statement.clone()).collect();
    let violations = check_single_outcome(&statements);
    Ok(ScanReport { nodes, violations, suppressed: !assumptions.s, queries })
}

/// Derivation history of one arena node, sources before conclusions, each
/// line carrying the statement, its setting context, and the rule used.
pub fn trace_lines(report: &ScanReport, model: &dyn Model, root: usize) -> Vec<String> {
    let mut order: Vec<usize> = Vec::new();
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    fn visit(report: &ScanReport, idx: usize, visited: &mut BTreeSet<usize>, order: &mut Vec<usize>) {
        if !visited.insert(idx) {
            return;
        }
        match &report.nodes[idx].provenance {
            Provenance::Strip { of, .. } => visit(report, *of, visited, order),
            Provenance::Chain { left, right } => {
                visit(report, *left, visited, order);
                visit(report, *right, visited, order);
            }
            _ => {}
        }
        order.push(idx);
    }
    visit(report, root, &mut visited, &mut order);
    order
        .into_iter()
        .map(|i| {
            let n = &report.nodes[i];
            format!("[{}] {}", n.provenance.rule(), n.statement.display(model))
        })
        .collect()
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::External => write!(f, "external observer"),
            Owner::Agent(a) => write!(f, "agent {a}"),
        }
    }
}
