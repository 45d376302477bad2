//! Scenario model: agents, measured subsets, bases, memories, channels.
//!
//! An agent's memory register is implicit: it has the same dimension as the
//! agent's measured subspace and starts in |0⟩. The full register layout is
//! systems in declaration order followed by memories in agent order.

use crate::error::{Error, Result};
use crate::tensor::{c, C64, LinearOperator, RegisterLayout, StateVector, EPS};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Agent index (1-based) to outcome value. Queries use these; an agent
/// missing from the map is summed over (if measured) or unconditioned.
pub type OutcomeMap = BTreeMap<usize, usize>;

/// A declared multi-agent event the epistemic engine may condition on.
#[derive(Debug, Clone, PartialEq)]
pub struct Announcement {
    pub name: String,
    pub outcomes: OutcomeMap,
}

/// A quantum channel given by Kraus matrices over an explicit register
/// subset. The support may be any labels of the full layout, not just the
/// acting agent's own registers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub support: Vec<String>,
    pub kraus: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub name: String,
    pub measured_subset: Vec<String>,
    pub basis: Vec<Vec<C64>>,
    pub memory_label: String,
    pub post_channel: Option<ChannelSpec>,
    pub pinned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LWFSpec {
    pub systems: Vec<(String, usize)>,
    pub initial: Vec<C64>,
    pub agents: Vec<AgentSpec>,
    pub announcements: Vec<Announcement>,
}

/// Structured well-formedness report; empty ⇔ the spec is valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::ValidationFailed(self.issues.join("; ")))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for (i, issue) in self.issues.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{issue}")?;
            }
            Ok(())
        }
    }
}

impl LWFSpec {
    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// 0-based lookup helper; public API is 1-based.
    pub fn agent(&self, index: usize) -> Result<&AgentSpec> {
        if index == 0 || index > self.agents.len() {
            return Err(Error::InvalidAgentIndex(format!(
                "agent {index} of {}",
                self.agents.len()
            )));
        }
        Ok(&self.agents[index - 1])
    }

    /// Dimension of agent `index`'s measured subspace (= its memory dim).
    pub fn subset_dim(&self, index: usize) -> Result<usize> {
        let agent = self.agent(index)?;
        let mut dim = 1usize;
        for label in &agent.measured_subset {
            // Only registers existing before this agent acts are visible,
            // which also grounds the recursion through memory dimensions.
            dim *= self.dim_of_before(label, index)?;
        }
        Ok(dim)
    }

    fn dim_of_before(&self, label: &str, bound: usize) -> Result<usize> {
        if let Some((_, d)) = self.systems.iter().find(|(l, _)| l == label) {
            return Ok(*d);
        }
        for i in 1..bound.min(self.agents.len() + 1) {
            if self.agents[i - 1].memory_label == label {
                return self.subset_dim(i);
            }
        }
        Err(Error::UnknownLabel(format!("register '{label}'")))
    }

    /// Systems in declaration order, then memories in agent order.
    pub fn full_layout(&self) -> Result<RegisterLayout> {
        let mut regs = self.systems.clone();
        for i in 1..=self.agents.len() {
            regs.push((self.agents[i - 1].memory_label.clone(), self.subset_dim(i)?));
        }
        RegisterLayout::new(regs)
    }

    pub fn system_layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new(self.systems.clone())
    }

    /// Initial pure state over systems ⊗ memories, memories in |0⟩.
    pub fn initial_full_state(&self) -> Result<StateVector> {
        let sys = self.system_layout()?;
        let psi = StateVector::from_amplitudes(sys, self.initial.clone())?;
        let mut extra = Vec::new();
        for i in 1..=self.agents.len() {
            extra.push((self.agents[i - 1].memory_label.clone(), self.subset_dim(i)?));
        }
        psi.extend_with_zero_registers(&extra)
    }

    pub fn pinned_mask(&self) -> Vec<bool> {
        self.agents.iter().map(|a| a.pinned).collect()
    }

    pub fn agent_index_by_name(&self, name: &str) -> Result<usize> {
        self.agents
            .iter()
            .position(|a| a.name == name)
            .map(|p| p + 1)
            .ok_or_else(|| Error::UnknownLabel(format!("agent '{name}'")))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut push = |msg: String| report.issues.push(msg);

        let mut labels = BTreeSet::new();
        for (label, dim) in &self.systems {
            if !labels.insert(label.clone()) {
                push(format!("systems: duplicate label '{label}'"));
            }
            if *dim == 0 {
                push(format!("systems: '{label}' has dimension 0"));
            }
        }

        let sys_dim: usize = self.systems.iter().map(|(_, d)| d).product();
        if self.initial.len() != sys_dim {
            push(format!(
                "initial state: {} amplitudes for system dimension {sys_dim}",
                self.initial.len()
            ));
        } else {
            let n: f64 = self.initial.iter().map(|a| a.norm_sqr()).sum();
            if (n - 1.0).abs() > EPS {
                push(format!("initial state: norm² = {n}, expected 1"));
            }
        }

        // Registers visible to agent i: systems plus memories of agents < i.
        let mut visible: BTreeMap<String, usize> = self
            .systems
            .iter()
            .cloned()
            .collect();
        let mut memory_dims: Vec<usize> = Vec::new();
        let mut names = BTreeSet::new();

        for (pos, agent) in self.agents.iter().enumerate() {
            let i = pos + 1;
            let ctx = format!("agent {i} ('{}')", agent.name);
            if agent.name.is_empty() {
                push(format!("{ctx}: empty name"));
            }
            if !names.insert(agent.name.clone()) {
                push(format!("{ctx}: duplicate agent name"));
            }
            if agent.measured_subset.is_empty() {
                push(format!("{ctx}: empty measured subset"));
            }
            let mut seen_measure = BTreeSet::new();
            let mut dim = 1usize;
            for label in &agent.measured_subset {
                if !seen_measure.insert(label.clone()) {
                    push(format!("{ctx}: measured subset repeats '{label}'"));
                }
                match visible.get(label) {
                    Some(d) => dim *= d,
                    None => push(format!(
                        "{ctx}: measured subset references unknown or later register '{label}'"
                    )),
                }
            }
            if agent.measured_subset.contains(&agent.memory_label) {
                push(format!(
                    "{ctx}: memory '{}' inside its own measured subset",
                    agent.memory_label
                ));
            }
            if labels.contains(&agent.memory_label) {
                push(format!(
                    "{ctx}: memory label '{}' already in use",
                    agent.memory_label
                ));
            }
            labels.insert(agent.memory_label.clone());

            if agent.basis.len() != dim {
                push(format!(
                    "{ctx}: basis has {} vectors for subspace dimension {dim}",
                    agent.basis.len()
                ));
            } else {
                for (a, v) in agent.basis.iter().enumerate() {
                    if v.len() != dim {
                        push(format!("{ctx}: basis vector {a} has length {}", v.len()));
                    }
                }
                if agent.basis.iter().all(|v| v.len() == dim) {
                    'ortho: for a in 0..dim {
                        for b in a..dim {
                            let ip: C64 = agent.basis[a]
                                .iter()
                                .zip(&agent.basis[b])
                                .map(|(x, y)| x.conj() * y)
                                .sum();
                            let expect = if a == b { 1.0 } else { 0.0 };
                            if (ip - c(expect, 0.0)).norm() > 1e2 * EPS {
                                push(format!("{ctx}: basis not orthonormal (⟨v{a}|v{b}⟩ = {ip})"));
                                break 'ortho;
                            }
                        }
                    }
                }
            }

            visible.insert(agent.memory_label.clone(), dim);
            memory_dims.push(dim);
        }

        // Channels may act on any register of the full layout, including
        // memories of later agents.
        let full: BTreeMap<String, usize> = self
            .systems
            .iter()
            .cloned()
            .chain(
                self.agents
                    .iter()
                    .zip(&memory_dims)
                    .map(|(a, d)| (a.memory_label.clone(), *d)),
            )
            .collect();
        for (pos, agent) in self.agents.iter().enumerate() {
            let i = pos + 1;
            let ctx = format!("agent {i} ('{}') channel", agent.name);
            let Some(channel) = &agent.post_channel else { continue };
            let mut sup_dim = 1usize;
            let mut seen = BTreeSet::new();
            let mut resolved = true;
            for label in &channel.support {
                if !seen.insert(label.clone()) {
                    push(format!("{ctx}: support repeats '{label}'"));
                }
                match full.get(label) {
                    Some(d) => sup_dim *= d,
                    None => {
                        push(format!("{ctx}: support references unknown register '{label}'"));
                        resolved = false;
                    }
                }
            }
            if !resolved {
                continue;
            }
            if channel.kraus.is_empty() {
                push(format!("{ctx}: empty Kraus list"));
                continue;
            }
            let mut shapes_ok = true;
            for (k, mat) in channel.kraus.iter().enumerate() {
                if mat.len() != sup_dim * sup_dim {
                    push(format!(
                        "{ctx}: Kraus {k} has {} entries for support dimension {sup_dim}",
                        mat.len()
                    ));
                    shapes_ok = false;
                }
            }
            if shapes_ok {
                let mut acc = vec![c(0.0, 0.0); sup_dim * sup_dim];
                for mat in &channel.kraus {
                    for col_i in 0..sup_dim {
                        for col_j in 0..sup_dim {
                            let mut v = c(0.0, 0.0);
                            for row in 0..sup_dim {
                                v += mat[row * sup_dim + col_i].conj() * mat[row * sup_dim + col_j];
                            }
                            acc[col_i * sup_dim + col_j] += v;
                        }
                    }
                }
                let complete = (0..sup_dim).all(|a| {
                    (0..sup_dim).all(|b| {
                        let expect = if a == b { 1.0 } else { 0.0 };
                        (acc[a * sup_dim + b] - c(expect, 0.0)).norm() <= 1e3 * EPS
                    })
                });
                if !complete {
                    push(format!("{ctx}: Kraus operators do not sum to the identity (Σ K†K ≠ 1)"));
                }
            }
        }

        for ann in &self.announcements {
            for (&agent, &value) in &ann.outcomes {
                if agent == 0 || agent > self.agents.len() {
                    push(format!("announcement '{}': unknown agent {agent}", ann.name));
                } else if self.agents[agent - 1].basis.len() <= value
                    && !self.agents[agent - 1].basis.is_empty()
                {
                    push(format!(
                        "announcement '{}': outcome {value} out of range for agent {agent}",
                        ann.name
                    ));
                }
            }
        }

        if let Err(e) = self.full_layout() {
            push(format!("layout: {e}"));
        }

        report
    }
}

/// Per-agent Heisenberg-cut choices; true = the agent's outcome is realized.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingVector(pub Vec<bool>);

impl SettingVector {
    pub fn all_ones(n: usize) -> Self {
        SettingVector(vec![true; n])
    }

    /// Bits for the free agents in agent order; pinned agents forced to 1.
    pub fn from_free_bits(free: &[u8], pinned: &[bool]) -> Result<Self> {
        let mut bits = Vec::with_capacity(pinned.len());
        let mut it = free.iter();
        for &p in pinned {
            if p {
                bits.push(true);
            } else {
                match it.next() {
                    Some(0) => bits.push(false),
                    Some(1) => bits.push(true),
                    Some(b) => {
                        return Err(Error::SettingOutcomeMismatch(format!(
                            "setting bit {b} is not 0 or 1"
                        )))
                    }
                    None => {
                        return Err(Error::SettingOutcomeMismatch(format!(
                            "{} free setting bits expected, got {}",
                            pinned.iter().filter(|p| !**p).count(),
                            free.len()
                        )))
                    }
                }
            }
        }
        if it.next().is_some() {
            return Err(Error::SettingOutcomeMismatch(format!(
                "{} free setting bits expected, got {}",
                pinned.iter().filter(|p| !**p).count(),
                free.len()
            )));
        }
        Ok(SettingVector(bits))
    }

    /// Every vector consistent with the pinned mask, free bits in
    /// lexicographic order (0 before 1, leftmost agent most significant).
    pub fn enumerate(pinned: &[bool]) -> Vec<SettingVector> {
        let free_positions: Vec<usize> = pinned
            .iter()
            .enumerate()
            .filter(|(_, p)| !**p)
            .map(|(i, _)| i)
            .collect();
        let count = 1usize << free_positions.len();
        let mut out = Vec::with_capacity(count);
        for combo in 0..count {
            let mut bits = vec![true; pinned.len()];
            for (k, &pos) in free_positions.iter().enumerate() {
                let shift = free_positions.len() - 1 - k;
                bits[pos] = (combo >> shift) & 1 == 1;
            }
            out.push(SettingVector(bits));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based agent accessor.
    pub fn measured(&self, agent: usize) -> bool {
        self.0[agent - 1]
    }

    pub fn validate(&self, pinned: &[bool]) -> Result<()> {
        if self.0.len() != pinned.len() {
            return Err(Error::SettingOutcomeMismatch(format!(
                "setting vector has {} components for {} agents",
                self.0.len(),
                pinned.len()
            )));
        }
        for (i, (&bit, &p)) in self.0.iter().zip(pinned).enumerate() {
            if p && !bit {
                return Err(Error::PinnedSettingViolated(format!(
                    "agent {} is pinned to setting 1",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SettingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, bit) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u8::from(*bit))?;
        }
        write!(f, ")")
    }
}

/// The agent's record update |v_a⟩|m⟩ ↦ |v_a⟩|m + a mod d⟩.
pub fn measurement_unitary(spec: &LWFSpec, index: usize) -> Result<LinearOperator> {
    let layout = spec.full_layout()?;
    let agent = spec.agent(index)?;
    crate::tensor::controlled_copy_unitary(
        &layout,
        &agent.basis,
        &agent.measured_subset,
        &agent.memory_label,
    )
}

/// Projector family for agent `index` under setting `x`. Setting 0 yields
/// the single unconditioned element; setting 1 yields one projector per
/// outcome, each matching the system state and the memory record jointly.
pub fn projector_family(
    spec: &LWFSpec,
    index: usize,
    x: bool,
) -> Result<Vec<(Option<usize>, LinearOperator)>> {
    if !x {
        return Ok(vec![(None, LinearOperator::identity())]);
    }
    let layout = spec.full_layout()?;
    let agent = spec.agent(index)?;
    let d = spec.subset_dim(index)?;
    let mut support = agent.measured_subset.clone();
    support.push(agent.memory_label.clone());
    let full = d * d;
    let mut family = Vec::with_capacity(d);
    for a in 0..d {
        // |v_a⟩⟨v_a| on the subset ⊗ |a⟩⟨a| on the memory.
        let mut mat = vec![c(0.0, 0.0); full * full];
        for j in 0..d {
            for k in 0..d {
                mat[(j * d + a) * full + (k * d + a)] = agent.basis[a][j] * agent.basis[a][k].conj();
            }
        }
        let op = LinearOperator::new(&layout, &support, mat)?.into_projector()?;
        family.push((Some(a), op));
    }
    Ok(family)
}

// Preset bases. All are exactly orthonormal in f64.

pub fn computational_basis(d: usize) -> Vec<Vec<C64>> {
    (0..d)
        .map(|a| {
            (0..d)
                .map(|i| c(if i == a { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

pub fn hadamard_basis() -> Vec<Vec<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]
}

/// Bell basis ordered Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
pub fn bell_basis() -> Vec<Vec<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
        vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)],
        vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)],
    ]
}

/// Super-agent basis: ok = (|00⟩−|11⟩)/√2, fail = (|00⟩+|11⟩)/√2, then the
/// off-diagonal computational states completing the space.
pub fn okfail_basis() -> Vec<Vec<C64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)],
        vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
    ]
}

pub fn preset_basis(name: &str, dim: usize) -> Result<Vec<Vec<C64>>> {
    match name {
        "computational" => Ok(computational_basis(dim)),
        "hadamard" if dim == 2 => Ok(hadamard_basis()),
        "bell" if dim == 4 => Ok(bell_basis()),
        "okfail" if dim == 4 => Ok(okfail_basis()),
        "hadamard" | "bell" | "okfail" => Err(Error::DimensionMismatch(format!(
            "preset basis '{name}' does not fit dimension {dim}"
        ))),
        _ => Err(Error::UnknownLabel(format!("basis preset '{name}'"))),
    }
}
