//! Born-rule evaluation over augmented circuits: joint, conditional,
//! prior-averaged, and pre/post-selected probabilities.
//!
//! Strategy: forward evolution of unnormalized pure branches, branching
//! only over realized-but-unqueried outcomes and Kraus operators; a dense
//! density-matrix fallback covers branch blowups. Stages beyond the highest
//! queried agent are never evaluated (temporal truncation).

use crate::compile::{AgentStage, AugmentedCircuit};
use crate::error::{Error, Result};
use crate::exec::map_collect;
use crate::scenario::{OutcomeMap, SettingVector};
use crate::tensor::{
    apply_channel, clamp_probability, DensityOperator, LinearOperator, StateVector, EPS,
};

/// Fall back to density evolution past this many live branches.
const BRANCH_CAP: usize = 4096;
/// The density fallback refuses layouts beyond this total dimension.
const DENSITY_DIM_CAP: usize = 1024;
/// Branches below this squared norm cannot move any probability by more
/// than the global tolerance and are dropped.
const PRUNE: f64 = 1e-30;

/// Highest agent index mentioned by a query; stages beyond it cannot
/// influence the value and are skipped.
pub fn minimal_prefix(targets: &OutcomeMap, givens: &OutcomeMap) -> usize {
    targets
        .keys()
        .chain(givens.keys())
        .max()
        .copied()
        .unwrap_or(0)
}

fn validate_query(
    circ: &AugmentedCircuit,
    x: &SettingVector,
    assignment: &OutcomeMap,
) -> Result<()> {
    if x.len() != circ.stages.len() {
        return Err(Error::SettingOutcomeMismatch(format!(
            "setting vector has {} components for {} agents",
            x.len(),
            circ.stages.len()
        )));
    }
    x.validate(&circ.pinned_mask())?;
    for (&agent, &value) in assignment {
        if agent == 0 || agent > circ.stages.len() {
            return Err(Error::InvalidAgentIndex(format!(
                "agent {agent} of {}",
                circ.stages.len()
            )));
        }
        if !x.measured(agent) {
            return Err(Error::SettingOutcomeMismatch(format!(
                "agent {agent} ('{}') is assigned an outcome but has setting 0",
                circ.agent_name(agent)
            )));
        }
        let count = circ.stages[agent - 1].outcome_count;
        if value >= count {
            return Err(Error::SettingOutcomeMismatch(format!(
                "outcome {value} out of range for agent {agent} ({count} outcomes)"
            )));
        }
    }
    Ok(())
}

fn evolve_branches(
    stage: &AgentStage,
    x: &SettingVector,
    assignment: &OutcomeMap,
    branches: Vec<StateVector>,
) -> Result<Vec<StateVector>> {
    let mut current: Vec<StateVector> =
        map_collect(&branches, |b| stage.copy.apply(b)).into_iter().collect::<Result<_>>()?;

    if x.measured(stage.index) {
        match assignment.get(&stage.index) {
            Some(&v) => {
                let projector = &stage.family1[v].1;
                current = map_collect(&current, |b| projector.apply(b))
                    .into_iter()
                    .collect::<Result<_>>()?;
            }
            None => {
                let next: Vec<Result<StateVector>> = map_collect(&current, |b| {
                    stage
                        .family1
                        .iter()
                        .map(|(_, p)| p.apply(b))
                        .collect::<Result<Vec<_>>>()
                })
                .into_iter()
                .collect::<Result<Vec<Vec<_>>>>()?
                .into_iter()
                .flatten()
                .map(Ok)
                .collect();
                current = next.into_iter().collect::<Result<_>>()?;
            }
        }
    }

    if let Some(kraus) = &stage.kraus {
        let expanded: Vec<Vec<StateVector>> = map_collect(&current, |b| {
            kraus.iter().map(|k| k.apply(b)).collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<_>>()?;
        current = expanded.into_iter().flatten().collect();
    }

    current.retain(|b| b.norm_sqr() > PRUNE);
    Ok(current)
}

fn joint_by_density(
    circ: &AugmentedCircuit,
    x: &SettingVector,
    assignment: &OutcomeMap,
    prefix: usize,
) -> Result<f64> {
    if circ.layout.total_dim() > DENSITY_DIM_CAP {
        return Err(Error::BudgetExceeded(format!(
            "branch count exceeds {BRANCH_CAP} and the layout dimension {} exceeds the density fallback cap {DENSITY_DIM_CAP}",
            circ.layout.total_dim()
        )));
    }
    let mut rho = DensityOperator::from_pure(&circ.initial);
    for stage in circ.stages.iter().take(prefix) {
        rho = stage.copy.apply_to_density(&rho)?;
        if x.measured(stage.index) {
            match assignment.get(&stage.index) {
                Some(&v) => rho = stage.family1[v].1.apply_to_density(&rho)?,
                None => {
                    let mut acc: Option<DensityOperator> = None;
                    for (_, p) in &stage.family1 {
                        let term = p.apply_to_density(&rho)?;
                        acc = Some(match acc {
                            None => term,
                            Some(mut total) => {
                                for (t, e) in total.mat.iter_mut().zip(&term.mat) {
                                    *t += e;
                                }
                                total
                            }
                        });
                    }
                    rho = acc.expect("projector family never empty");
                }
            }
        }
        if let Some(kraus) = &stage.kraus {
            rho = apply_channel(kraus, &rho)?;
        }
    }
    clamp_probability(rho.trace().re, EPS)
}

/// Probability of the assigned outcomes at settings `x`; agents measured
/// but unassigned are summed over, truncation applies past the highest
/// assigned agent.
pub fn joint_probability(
    circ: &AugmentedCircuit,
    x: &SettingVector,
    assignment: &OutcomeMap,
) -> Result<f64> {
    validate_query(circ, x, assignment)?;
    let prefix = assignment.keys().max().copied().unwrap_or(0);
    let mut branches = vec![circ.initial.clone()];
    for stage in circ.stages.iter().take(prefix) {
        branches = evolve_branches(stage, x, assignment, branches)?;
        if branches.len() > BRANCH_CAP {
            return joint_by_density(circ, x, assignment, prefix);
        }
    }
    let total: f64 = branches.iter().map(|b| b.norm_sqr()).sum();
    clamp_probability(total, EPS)
}

/// P(targets | givens, x) as the ratio of joints; conditioning on an event
/// of vanishing probability is an error, never 0/0 = 0.
pub fn setting_conditioned(
    circ: &AugmentedCircuit,
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
    let denominator = joint_probability(circ, x, givens)?;
    if denominator <= EPS {
        return Err(Error::ConditioningOnNullEvent(format!(
            "given event has probability {denominator} at {x}"
        )));
    }
    let mut all = givens.clone();
    all.extend(targets.iter().map(|(&k, &v)| (k, v)));
    let numerator = joint_probability(circ, x, &all)?;
    clamp_probability(numerator / denominator, EPS)
}

/// A distribution over setting vectors: weights ≥ 0 summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingPrior {
    pub weights: Vec<(SettingVector, f64)>,
}

impl SettingPrior {
    pub fn point_mass(x: SettingVector) -> Self {
        SettingPrior { weights: vec![(x, 1.0)] }
    }

    pub fn validate(&self, pinned: &[bool]) -> Result<()> {
        let mut total = 0.0;
        for (x, w) in &self.weights {
            x.validate(pinned)?;
            if *w < 0.0 {
                return Err(Error::ValidationFailed(format!(
                    "prior weight {w} is negative"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e2 * EPS {
            return Err(Error::ValidationFailed(format!(
                "prior weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Average of the setting-conditioned prediction over the prior, after
/// pinning every queried agent's setting to 1 inside the prior and
/// renormalizing. Plain average: the prior is not reweighted by the
/// probability of the given event.
pub fn prediction_with_prior(
    circ: &AugmentedCircuit,
    targets: &OutcomeMap,
    givens: &OutcomeMap,
    prior: &SettingPrior,
) -> Result<f64> {
    prior.validate(&circ.pinned_mask())?;
    let mentioned: Vec<usize> = targets.keys().chain(givens.keys()).copied().collect();
    let supported: Vec<&(SettingVector, f64)> = prior
        .weights
        .iter()
        .filter(|(x, w)| *w > 0.0 && mentioned.iter().all(|&a| x.measured(a)))
        .collect();
    let total: f64 = supported.iter().map(|(_, w)| w).sum();
    if total <= EPS {
        return Err(Error::PriorSupportInsufficient(format!(
            "no prior weight on setting vectors measuring agents {mentioned:?}"
        )));
    }
    let values: Vec<Result<f64>> =
        map_collect(&supported, |(x, _)| setting_conditioned(circ, targets, givens, x));
    let mut acc = 0.0;
    for ((_, w), value) in supported.iter().zip(values) {
        acc += w * value?;
    }
    clamp_probability(acc / total, EPS)
}

/// Outcome-k probability under pre-selection ρ and post-selection `post`:
/// tr[post Π_k ρ Π_k] / Σ_j tr[post Π_j ρ Π_j].
pub fn pre_post_selected(
    rho: &DensityOperator,
    family: &[LinearOperator],
    k: usize,
    post: &LinearOperator,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::ValidationFailed("empty projector family".into()));
    }
    if k >= family.len() {
        return Err(Error::ValidationFailed(format!(
            "outcome {k} out of range for a {}-element family",
            family.len()
        )));
    }
    for op in family {
        if !op.is_projector_flagged() {
            return Err(Error::NotAProjector(
                "pre/post-selection requires projector-flagged family members".into(),
            ));
        }
        if op.support() != family[0].support() {
            return Err(Error::ValidationFailed(
                "projector family members must share one support".into(),
            ));
        }
    }
    if !post.is_projector_flagged() {
        return Err(Error::NotAProjector(
            "post-selection operator must be projector-flagged".into(),
        ));
    }
    let dim = family[0].dim();
    for i in 0..dim {
        for j in 0..dim {
            let sum: crate::tensor::C64 =
                family.iter().map(|op| op.matrix()[i * dim + j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            if (sum - crate::tensor::c(expect, 0.0)).norm() > 1e2 * EPS {
                return Err(Error::ValidationFailed(
                    "projector family incomplete on its support".into(),
                ));
            }
        }
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (j, op) in family.iter().enumerate() {
        let collapsed = op.apply_to_density(rho)?;
        let term = crate::tensor::born_probability_density(&collapsed, post)?;
        denominator += term;
        if j == k {
            numerator = term;
        }
    }
    if denominator <= EPS {
        return Err(Error::ConditioningOnNullEvent(format!(
            "post-selection succeeds with probability {denominator}"
        )));
    }
    clamp_probability(numerator / denominator, EPS)
}
