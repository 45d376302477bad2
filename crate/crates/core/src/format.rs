//! JSON scenario documents: the on-disk form of a scenario, its parser,
//! and the canonical serializer. Structural problems surface as
//! `SyntaxError` (malformed JSON) or `SchemaError` (wrong shape, with the
//! offending path); everything semantic goes through spec validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{preset_basis, AgentSpec, ChannelSpec, LWFSpec};
use crate::tensor::{c, C64};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub format_version: u32,
    pub systems: Vec<SystemDoc>,
    pub initial_state: InitialStateDoc,
    pub agents: Vec<AgentDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub announcements: Vec<AnnouncementDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub label: String,
    pub dim: usize,
}

/// Exactly one of `amplitudes` / `preset`, checked in conversion so the
/// error carries a field path instead of an opaque enum failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub name: String,
    pub measures: Vec<String>,
    pub basis: BasisDoc,
    pub memory: String,
    pub setting: SettingDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelDoc>,
}

/// Exactly one of `matrix` / `preset`; rows are basis vectors, entries
/// `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettingDoc {
    #[serde(rename = "free")]
    Free,
    #[serde(rename = "pinned1")]
    Pinned1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    pub support: Vec<String>,
    /// Kraus operators, each a row-major square matrix of `[re, im]`.
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnouncementDoc {
    pub name: String,
    /// Agent name → announced outcome index.
    pub outcomes: std::collections::BTreeMap<String, usize>,
}

/// A saved prediction query: settings XOR prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub targets: std::collections::BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub givens: std::collections::BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<PriorRowDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorRowDoc {
    pub settings: Vec<u8>,
    pub weight: f64,
}

pub fn parse_document(text: &str) -> Result<ScenarioDocument> {
    match serde_json::from_str::<ScenarioDocument>(text) {
        Ok(doc) => Ok(doc),
        Err(e) => {
            let at = format!("line {}, column {}", e.line(), e.column());
            match e.classify() {
                serde_json::error::Category::Data => {
                    Err(Error::SchemaError(format!("{e} ({at})")))
                }
                _ => Err(Error::SyntaxError(format!("{e} ({at})"))),
            }
        }
    }
}

fn to_complex_row(row: &[[f64; 2]]) -> Vec<C64> {
    row.iter().map(|[re, im]| c(*re, *im)).collect()
}

fn flatten_matrix(m: &[Vec<[f64; 2]>], path: &str) -> Result<Vec<C64>> {
    let rows = m.len();
    let mut out = Vec::with_capacity(rows * rows);
    for (i, row) in m.iter().enumerate() {
        if row.len() != rows {
            return Err(Error::SchemaError(format!(
                "{path}: row {i} has {} entries in a {rows}-row matrix",
                row.len()
            )));
        }
        out.extend(to_complex_row(row));
    }
    Ok(out)
}

/// Measured-subset dimension using only registers visible to agent
/// `index` (systems plus earlier memories); None when a label is unknown,
/// leaving the complaint to spec validation.
fn visible_dim(doc: &ScenarioDocument, index: usize) -> Option<usize> {
    let mut dims: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for s in &doc.systems {
        dims.insert(s.label.as_str(), s.dim);
    }
    for earlier in 0..index {
        let agent = &doc.agents[earlier];
        let d: Option<usize> = agent
            .measures
            .iter()
            .map(|l| dims.get(l.as_str()).copied())
            .product::<Option<usize>>();
        dims.insert(agent.memory.as_str(), d?);
    }
    doc.agents[index]
        .measures
        .iter()
        .map(|l| dims.get(l.as_str()).copied())
        .product::<Option<usize>>()
}

pub fn document_to_spec(doc: &ScenarioDocument) -> Result<LWFSpec> {
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::SchemaError(format!(
            "format_version: expected {FORMAT_VERSION}, found {}",
            doc.format_version
        )));
    }
    let system_dim: usize = doc.systems.iter().map(|s| s.dim).product();
    let initial = match (&doc.initial_state.amplitudes, &doc.initial_state.preset) {
        (Some(amps), None) => to_complex_row(amps),
        (None, Some(preset)) => match preset.as_str() {
            "uniform" => {
                let a = 1.0 / (system_dim as f64).sqrt();
                vec![c(a, 0.0); system_dim]
            }
            other => {
                return Err(Error::SchemaError(format!(
                    "initial_state.preset: unknown preset '{other}'"
                )))
            }
        },
        _ => {
            return Err(Error::SchemaError(
                "initial_state: exactly one of amplitudes/preset required".into(),
            ))
        }
    };

    let mut agents = Vec::with_capacity(doc.agents.len());
    for (i, a) in doc.agents.iter().enumerate() {
        let dim = visible_dim(doc, i);
        let basis = match (&a.basis.matrix, &a.basis.preset) {
            (Some(m), None) => {
                if let Some(d) = dim {
                    if m.len() != d {
                        return Err(Error::SchemaError(format!(
                            "agents[{i}].basis: {} basis vectors for a dimension-{d} measured \
                             subset (the memory dimension follows the measured subset)",
                            m.len()
                        )));
                    }
                }
                m.iter().map(|row| to_complex_row(row)).collect()
            }
            (None, Some(name)) => {
                let d = dim.unwrap_or(0);
                preset_basis(name, d).map_err(|e| {
                    Error::SchemaError(format!("agents[{i}].basis: {e}"))
                })?
            }
            _ => {
                return Err(Error::SchemaError(format!(
                    "agents[{i}].basis: exactly one of matrix/preset required"
                )))
            }
        };
        let channel = match &a.channel {
            None => None,
            Some(ch) => {
                let mut kraus = Vec::with_capacity(ch.kraus.len());
                for (k, m) in ch.kraus.iter().enumerate() {
                    kraus.push(flatten_matrix(m, &format!("agents[{i}].channel.kraus[{k}]"))?);
                }
                Some(ChannelSpec { support: ch.support.clone(), kraus })
            }
        };
        agents.push(AgentSpec {
            name: a.name.clone(),
            measured_subset: a.measures.clone(),
            basis,
            memory_label: a.memory.clone(),
            post_channel: channel,
            pinned: a.setting == SettingDoc::Pinned1,
        });
    }

    let mut announcements = Vec::with_capacity(doc.announcements.len());
    for (i, ann) in doc.announcements.iter().enumerate() {
        let mut outcomes = crate::scenario::OutcomeMap::new();
        for (name, &value) in &ann.outcomes {
            let agent = doc
                .agents
                .iter()
                .position(|a| &a.name == name)
                .ok_or_else(|| {
                    Error::SchemaError(format!(
                        "announcements[{i}].outcomes: unknown agent '{name}'"
                    ))
                })?;
            outcomes.insert(agent + 1, value);
        }
        announcements.push(crate::scenario::Announcement { name: ann.name.clone(), outcomes });
    }

    Ok(LWFSpec {
        systems: doc.systems.iter().map(|s| (s.label.clone(), s.dim)).collect(),
        initial,
        agents,
        announcements,
    })
}

/// Parse and fully validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<LWFSpec> {
    let doc = parse_document(text)?;
    let spec = document_to_spec(&doc)?;
    spec.validate().into_result()?;
    Ok(spec)
}

fn from_complex_row(row: &[C64]) -> Vec<[f64; 2]> {
    row.iter().map(|z| [z.re, z.im]).collect()
}

/// Canonical document for a spec: amplitudes and matrices always explicit.
pub fn spec_to_document(spec: &LWFSpec) -> ScenarioDocument {
    ScenarioDocument {
        format_version: FORMAT_VERSION,
        systems: spec
            .systems
            .iter()
            .map(|(label, dim)| SystemDoc { label: label.clone(), dim: *dim })
            .collect(),
        initial_state: InitialStateDoc {
            amplitudes: Some(from_complex_row(&spec.initial)),
            preset: None,
        },
        agents: spec
            .agents
            .iter()
            .map(|a| AgentDoc {
                name: a.name.clone(),
                measures: a.measured_subset.clone(),
                basis: BasisDoc {
                    matrix: Some(a.basis.iter().map(|v| from_complex_row(v)).collect()),
                    preset: None,
                },
                memory: a.memory_label.clone(),
                setting: if a.pinned { SettingDoc::Pinned1 } else { SettingDoc::Free },
                channel: a.post_channel.as_ref().map(|ch| {
                    let dim = (ch.kraus.first().map_or(0, Vec::len) as f64).sqrt() as usize;
                    ChannelDoc {
                        support: ch.support.clone(),
                        kraus: ch
                            .kraus
                            .iter()
                            .map(|k| {
                                (0..dim)
                                    .map(|r| from_complex_row(&k[r * dim..(r + 1) * dim]))
                                    .collect()
                            })
                            .collect(),
                    }
                }),
            })
            .collect(),
        announcements: spec
            .announcements
            .iter()
            .map(|ann| AnnouncementDoc {
                name: ann.name.clone(),
                outcomes: ann
                    .outcomes
                    .iter()
                    .map(|(&agent, &v)| (spec.agents[agent - 1].name.clone(), v))
                    .collect(),
            })
            .collect(),
        queries: vec![],
    }
}

pub fn serialize_scenario(spec: &LWFSpec) -> String {
    let doc = spec_to_document(spec);
    let mut text = serde_json::to_string_pretty(&doc).expect("document serialization");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::fr_prepare_measure;

    fn minimal_doc() -> String {
        r#"{
            "format_version": 1,
            "systems": [{"label": "S", "dim": 2}],
            "initial_state": {"preset": "uniform"},
            "agents": [
                {
                    "name": "f",
                    "measures": ["S"],
                    "basis": {"preset": "computational"},
                    "memory": "M",
                    "setting": "free"
                }
            ]
        }"#
        .to_string()
    }

    #[test]
    fn minimal_document_parses_to_valid_spec() {
        let spec = parse_scenario(&minimal_doc()).unwrap();
        assert_eq!(spec.agents.len(), 1);
        assert_eq!(spec.systems, vec![("S".to_string(), 2)]);
        let norm: f64 = spec.initial.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_json_is_a_syntax_error_with_position() {
        let err = parse_scenario("{\"format_version\": 1,").unwrap_err();
        match err {
            Error::SyntaxError(msg) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("expected SyntaxError, got {other}"),
        }
    }

    #[test]
    fn unknown_fields_are_schema_errors() {
        let text = minimal_doc().replace("\"systems\"", "\"sistems\"");
        let err = parse_scenario(&text).unwrap_err();
        match err {
            Error::SchemaError(msg) => assert!(msg.contains("sistems"), "{msg}"),
            other => panic!("expected SchemaError, got {other}"),
        }
    }

    #[test]
    fn basis_dimension_mismatch_is_a_schema_error_with_path() {
        let text = minimal_doc().replace(
            "{\"preset\": \"computational\"}",
            "{\"matrix\": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]],[[1.0,0.0],[1.0,0.0]],[[1.0,0.0],[-1.0,0.0]]]}",
        );
        let err = parse_scenario(&text).unwrap_err();
        match err {
            Error::SchemaError(msg) => {
                assert!(msg.contains("agents[0].basis"), "{msg}");
                assert!(msg.contains("memory dimension follows"), "{msg}");
            }
            other => panic!("expected SchemaError, got {other}"),
        }
    }

    #[test]
    fn preset_dim_mismatch_is_a_schema_error() {
        let text = minimal_doc().replace("computational", "bell");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::SchemaError(_)), "{err}");
    }

    #[test]
    fn exactly_one_variant_is_enforced() {
        let text = minimal_doc().replace(
            "{\"preset\": \"uniform\"}",
            "{\"preset\": \"uniform\", \"amplitudes\": [[1.0,0.0],[0.0,0.0]]}",
        );
        let err = parse_scenario(&text).unwrap_err();
        match err {
            Error::SchemaError(msg) => assert!(msg.contains("exactly one"), "{msg}"),
            other => panic!("expected SchemaError, got {other}"),
        }
    }

    #[test]
    fn semantic_problems_are_validation_failures() {
        // Norm breaks once the amplitudes stop matching a unit vector.
        let text = minimal_doc().replace(
            "{\"preset\": \"uniform\"}",
            "{\"amplitudes\": [[1.0,0.0],[1.0,0.0]]}",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::ValidationFailed(_)), "{err}");
    }

    #[test]
    fn round_trip_is_identity_on_canonical_documents() {
        // A library spec exercises channels and announcements too.
        let spec = fr_prepare_measure().spec;
        let text = serialize_scenario(&spec);
        let doc = parse_document(&text).unwrap();
        let spec2 = document_to_spec(&doc).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(serialize_scenario(&spec2), text);
        spec2.validate().into_result().unwrap();
    }

    #[test]
    fn announcement_names_resolve_to_agent_indices() {
        let spec = fr_prepare_measure().spec;
        let doc = spec_to_document(&spec);
        assert_eq!(doc.announcements.len(), 1);
        assert!(doc.announcements[0].outcomes.contains_key("wbar"));
        let spec2 = document_to_spec(&doc).unwrap();
        assert_eq!(spec2.announcements[0].outcomes, spec.announcements[0].outcomes);
    }

    #[test]
    fn saved_queries_survive_parsing() {
        let mut text = minimal_doc();
        text = text.replace(
            "\"setting\": \"free\"\n                }\n            ]",
            "\"setting\": \"free\"\n                }\n            ],\n            \"queries\": [{\"targets\": {\"f\": 1}, \"settings\": [1]}]",
        );
        let doc = parse_document(&text).unwrap();
        assert_eq!(doc.queries.len(), 1);
        assert_eq!(doc.queries[0].targets["f"], 1);
    }
}
