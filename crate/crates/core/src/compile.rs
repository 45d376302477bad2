//! Compiles a scenario into its augmented circuit: per agent, a record
//! unitary, both setting-indexed projector families, and the optional
//! post-measurement channel, all as operators over the full layout.

use crate::error::{Error, Result};
use crate::scenario::{projector_family, Announcement, LWFSpec, OutcomeMap, SettingVector};
use crate::tensor::{c, DensityOperator, LinearOperator, RegisterLayout, StateVector};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct AgentStage {
    pub index: usize,
    pub name: String,
    pub measured_subset: Vec<String>,
    pub memory_label: String,
    pub copy: LinearOperator,
    /// Setting-0 family: single unconditioned element.
    pub family0: Vec<(Option<usize>, LinearOperator)>,
    /// Setting-1 family: one projector per outcome, in outcome order.
    pub family1: Vec<(Option<usize>, LinearOperator)>,
    pub kraus: Option<Vec<LinearOperator>>,
    pub channel_support: Vec<String>,
    pub memory_touched: bool,
    pub pinned: bool,
    pub outcome_count: usize,
}

#[derive(Debug, Clone)]
pub struct AugmentedCircuit {
    pub layout: RegisterLayout,
    pub system_labels: Vec<String>,
    pub initial: StateVector,
    pub stages: Vec<AgentStage>,
    pub announcements: Vec<Announcement>,
    /// Display names per agent per outcome; numeric unless a scenario
    /// attaches richer labels (ok/fail, heads/tails, ...).
    pub outcome_labels: Vec<Vec<String>>,
}

impl AugmentedCircuit {
    pub fn agent_count(&self) -> usize {
        self.stages.len()
    }

    pub fn pinned_mask(&self) -> Vec<bool> {
        self.stages.iter().map(|s| s.pinned).collect()
    }

    pub fn stage(&self, agent: usize) -> Result<&AgentStage> {
        if agent == 0 || agent > self.stages.len() {
            return Err(Error::InvalidAgentIndex(format!(
                "agent {agent} of {}",
                self.stages.len()
            )));
        }
        Ok(&self.stages[agent - 1])
    }

    pub fn agent_name(&self, agent: usize) -> &str {
        &self.stages[agent - 1].name
    }

    pub fn outcome_label(&self, agent: usize, value: usize) -> String {
        self.outcome_labels
            .get(agent - 1)
            .and_then(|names| names.get(value))
            .cloned()
            .unwrap_or_else(|| value.to_string())
    }

    pub fn attach_outcome_labels(&mut self, labels: Vec<Vec<String>>) {
        self.outcome_labels = labels;
    }
}

/// True iff agent `index`'s memory register matters after its own stage:
/// some later agent measures it, some later channel acts on it, or the
/// agent's own channel moves population between memory values.
pub fn memory_touched(spec: &LWFSpec, index: usize) -> Result<bool> {
    let agent = spec.agent(index)?;
    let memory = &agent.memory_label;
    for later in spec.agents.iter().skip(index) {
        if later.measured_subset.contains(memory) {
            return Ok(true);
        }
        if let Some(channel) = &later.post_channel {
            if channel.support.contains(memory) {
                return Ok(true);
            }
        }
    }
    if let Some(channel) = &agent.post_channel {
        if let Some(pos) = channel.support.iter().position(|l| l == memory) {
            let dims: Vec<usize> = channel
                .support
                .iter()
                .map(|l| register_dim(spec, l))
                .collect::<Result<_>>()?;
            let total: usize = dims.iter().product();
            let stride: usize = dims[pos + 1..].iter().product();
            let dim = dims[pos];
            for mat in &channel.kraus {
                for row in 0..total {
                    let m_row = (row / stride) % dim;
                    for col in 0..total {
                        if (col / stride) % dim != m_row
                            && mat[row * total + col].norm() > crate::tensor::EPS
                        {
                            return Ok(true);
                        }
                    }
                }
            }
        }
    }
    Ok(false)
}

fn register_dim(spec: &LWFSpec, label: &str) -> Result<usize> {
    if let Some((_, d)) = spec.systems.iter().find(|(l, _)| l == label) {
        return Ok(*d);
    }
    for i in 1..=spec.agent_count() {
        if spec.agents[i - 1].memory_label == label {
            return spec.subset_dim(i);
        }
    }
    Err(Error::UnknownLabel(format!("register '{label}'")))
}

pub fn compile(spec: &LWFSpec) -> Result<AugmentedCircuit> {
    spec.validate().into_result()?;
    let layout = spec.full_layout()?;
    let initial = spec.initial_full_state()?;
    let mut stages = Vec::with_capacity(spec.agent_count());
    for i in 1..=spec.agent_count() {
        let agent = spec.agent(i)?;
        let copy = crate::scenario::measurement_unitary(spec, i)?;
        let family0 = projector_family(spec, i, false)?;
        let family1 = projector_family(spec, i, true)?;
        let kraus = match &agent.post_channel {
            None => None,
            Some(channel) => {
                let ops: Vec<LinearOperator> = channel
                    .kraus
                    .iter()
                    .map(|mat| LinearOperator::new(&layout, &channel.support, mat.clone()))
                    .collect::<Result<_>>()?;
                crate::tensor::kraus_complete(&ops)?;
                Some(ops)
            }
        };
        stages.push(AgentStage {
            index: i,
            name: agent.name.clone(),
            measured_subset: agent.measured_subset.clone(),
            memory_label: agent.memory_label.clone(),
            copy,
            family0,
            family1,
            kraus,
            channel_support: agent
                .post_channel
                .as_ref()
                .map(|ch| ch.support.clone())
                .unwrap_or_default(),
            memory_touched: memory_touched(spec, i)?,
            pinned: agent.pinned,
            outcome_count: spec.subset_dim(i)?,
        });
    }
    let outcome_labels = stages
        .iter()
        .map(|s| (0..s.outcome_count).map(|v| v.to_string()).collect())
        .collect();
    Ok(AugmentedCircuit {
        layout,
        system_labels: spec.systems.iter().map(|(l, _)| l.clone()).collect(),
        initial,
        stages,
        announcements: spec.announcements.clone(),
        outcome_labels,
    })
}

/// One agent step of the reduced (memory-free) circuit: projectors on the
/// measured subspace alone, plus the per-outcome channel blocks.
#[derive(Debug, Clone)]
pub struct ReducedStep {
    pub index: usize,
    pub projectors: Vec<LinearOperator>,
    /// Kraus list applied after outcome `a`; identical lists when the
    /// original channel ignored the memory.
    pub outcome_channels: Vec<Vec<LinearOperator>>,
    pub pinned: bool,
    pub outcome_count: usize,
}

#[derive(Debug, Clone)]
pub struct ReducedCircuit {
    pub layout: RegisterLayout,
    pub initial: StateVector,
    pub steps: Vec<ReducedStep>,
}

/// Rewrites the augmented circuit over systems only. Valid precisely when
/// no memory is reused; the outcome-indexed channel blocks absorb each
/// agent's record into classical branching.
pub fn standard_reduction(spec: &LWFSpec) -> Result<ReducedCircuit> {
    spec.validate().into_result()?;
    let mut reused = BTreeSet::new();
    for i in 1..=spec.agent_count() {
        if memory_touched(spec, i)? {
            reused.insert(i);
        }
    }
    // Any channel acting on a foreign memory also blocks the rewrite: the
    // per-outcome blocks below only eliminate the acting agent's own record.
    for (pos, agent) in spec.agents.iter().enumerate() {
        if let Some(channel) = &agent.post_channel {
            for (other_pos, other) in spec.agents.iter().enumerate() {
                if other_pos != pos && channel.support.contains(&other.memory_label) {
                    reused.insert(other_pos + 1);
                }
            }
        }
    }
    if !reused.is_empty() {
        return Err(Error::MemoryReuseDetected(reused.into_iter().collect()));
    }

    let layout = spec.system_layout()?;
    let initial = StateVector::from_amplitudes(layout.clone(), spec.initial.clone())?;
    let mut steps = Vec::with_capacity(spec.agent_count());
    for i in 1..=spec.agent_count() {
        let agent = spec.agent(i)?;
        let d = spec.subset_dim(i)?;
        let mut projectors = Vec::with_capacity(d);
        for a in 0..d {
            projectors.push(crate::tensor::rank1_projector(
                &layout,
                &agent.measured_subset,
                &agent.basis[a],
            )?);
        }
        let outcome_channels = match &agent.post_channel {
            None => vec![Vec::new(); d],
            Some(channel) => {
                let mem_pos = channel.support.iter().position(|l| l == &agent.memory_label);
                match mem_pos {
                    None => {
                        let ops: Vec<LinearOperator> = channel
                            .kraus
                            .iter()
                            .map(|mat| {
                                LinearOperator::new(&layout, &channel.support, mat.clone())
                            })
                            .collect::<Result<_>>()?;
                        vec![ops; d]
                    }
                    Some(pos) => {
                        // Memory-diagonal block for outcome a: rows and
                        // columns with the memory digit fixed to a.
                        let dims: Vec<usize> = channel
                            .support
                            .iter()
                            .map(|l| register_dim(spec, l))
                            .collect::<Result<_>>()?;
                        let total: usize = dims.iter().product();
                        let stride: usize = dims[pos + 1..].iter().product();
                        let rest_support: Vec<String> = channel
                            .support
                            .iter()
                            .filter(|l| *l != &agent.memory_label)
                            .cloned()
                            .collect();
                        let block_dim = total / dims[pos];
                        let mut per_outcome = Vec::with_capacity(d);
                        for a in 0..d {
                            let keep: Vec<usize> = (0..total)
                                .filter(|idx| (idx / stride) % dims[pos] == a)
                                .collect();
                            let ops: Vec<LinearOperator> = channel
                                .kraus
                                .iter()
                                .map(|mat| {
                                    let mut block = vec![c(0.0, 0.0); block_dim * block_dim];
                                    for (bi, &gi) in keep.iter().enumerate() {
                                        for (bj, &gj) in keep.iter().enumerate() {
                                            block[bi * block_dim + bj] = mat[gi * total + gj];
                                        }
                                    }
                                    LinearOperator::new(&layout, &rest_support, block)
                                })
                                .collect::<Result<_>>()?;
                            per_outcome.push(ops);
                        }
                        per_outcome
                    }
                }
            }
        };
        steps.push(ReducedStep {
            index: i,
            projectors,
            outcome_channels,
            pinned: agent.pinned,
            outcome_count: d,
        });
    }
    Ok(ReducedCircuit { layout, initial, steps })
}

/// Joint outcome probability in the reduced picture, by density evolution
/// over the system space: realized outcomes project, unrealized ones
/// decohere, channels act per outcome branch.
pub fn joint_reduced(
    red: &ReducedCircuit,
    x: &SettingVector,
    assignment: &OutcomeMap,
) -> Result<f64> {
    if x.len() != red.steps.len() {
        return Err(Error::SettingOutcomeMismatch(format!(
            "setting vector has {} components for {} agents",
            x.len(),
            red.steps.len()
        )));
    }
    for (&agent, &value) in assignment {
        if agent == 0 || agent > red.steps.len() {
            return Err(Error::InvalidAgentIndex(format!("agent {agent}")));
        }
        if !x.measured(agent) {
            return Err(Error::SettingOutcomeMismatch(format!(
                "agent {agent} has an outcome but setting 0"
            )));
        }
        if value >= red.steps[agent - 1].outcome_count {
            return Err(Error::SettingOutcomeMismatch(format!(
                "outcome {value} out of range for agent {agent}"
            )));
        }
    }
    let prefix = assignment.keys().max().copied().unwrap_or(0);
    let mut rho = DensityOperator::from_pure(&red.initial);
    for step in red.steps.iter().take(prefix) {
        let outcomes: Vec<usize> = match assignment.get(&step.index) {
            Some(&v) => vec![v],
            None if x.measured(step.index) => (0..step.outcome_count).collect(),
            None => (0..step.outcome_count).collect(), // unrealized: same decoherent sum
        };
        let mut acc: Option<DensityOperator> = None;
        for a in outcomes {
            let projected = step.projectors[a].apply_to_density(&rho)?;
            let evolved = if step.outcome_channels[a].is_empty() {
                projected
            } else {
                crate::tensor::apply_channel(&step.outcome_channels[a], &projected)?
            };
            acc = Some(match acc {
                None => evolved,
                Some(mut total) => {
                    for (t, e) in total.mat.iter_mut().zip(&evolved.mat) {
                        *t += e;
                    }
                    total
                }
            });
        }
        rho = acc.expect("outcome list never empty");
    }
    crate::tensor::clamp_probability(rho.trace().re, crate::tensor::EPS)
}

/// FNV-1a over the canonical little-endian bytes of a complex matrix;
/// -0.0 normalizes to +0.0 so algebraically equal operators hash equally.
pub fn operator_checksum(op: &LinearOperator) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for v in op.matrix() {
        let re = if v.re == 0.0 { 0.0 } else { v.re };
        let im = if v.im == 0.0 { 0.0 } else { v.im };
        eat(&re.to_le_bytes());
        eat(&im.to_le_bytes());
    }
    hash
}

/// Ordered stage listing with operator checksums, for `compile --dump`.
pub fn dump_stages(circ: &AugmentedCircuit) -> Vec<String> {
    let mut lines = Vec::new();
    lines.push(format!(
        "layout: {}",
        circ.layout
            .registers()
            .iter()
            .map(|(l, d)| format!("{l}:{d}"))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    for stage in &circ.stages {
        lines.push(format!(
            "stage {} ({}): copy[{}→{}] {:016x}",
            stage.index,
            stage.name,
            stage.measured_subset.join(","),
            stage.memory_label,
            operator_checksum(&stage.copy)
        ));
        lines.push(format!(
            "  family x=0: unconditioned {:016x}",
            operator_checksum(&stage.family0[0].1)
        ));
        for (outcome, op) in &stage.family1 {
            lines.push(format!(
                "  family x=1 outcome {}: {:016x}",
                outcome.expect("setting-1 outcomes are indexed"),
                operator_checksum(op)
            ));
        }
        if let Some(kraus) = &stage.kraus {
            for (k, op) in kraus.iter().enumerate() {
                lines.push(format!(
                    "  channel[{}] op {k}: {:016x}",
                    stage.channel_support.join(","),
                    operator_checksum(op)
                ));
            }
        }
        lines.push(format!(
            "  memory {}: {}",
            stage.memory_label,
            if stage.memory_touched { "reused later" } else { "untouched" }
        ));
    }
    lines
}
