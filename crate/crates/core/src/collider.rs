//! Classical collider toy: a shared bit read through two stations and two
//! noisy detectors. Marginally the stations are independent of each
//! other's inputs; conditioning on a downstream detector manufactures the
//! same setting-dependent correlations the quantum scenarios show.
//!
//! Everything is enumerated exactly over the three hidden bits, so all
//! probabilities are multiples of 1/8 and float arithmetic is lossless.

use crate::epistemic::Model;
use crate::error::{Error, Result};
use crate::scenario::{OutcomeMap, SettingVector};

/// Agents: 1 = a (station A), 2 = b (station B), 3 = u, 4 = w (detectors).
/// With hidden bits (λ, k_U, k_W): a = λ⊕x₁, b = λ⊕x₂, u = a·k_U, w = b·k_W.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClassicalCollider;

pub const COLLIDER_DENOMINATOR: u32 = 8;

fn outputs(lambda: usize, ku: usize, kw: usize, x1: bool, x2: bool) -> (usize, usize, usize, usize) {
    let a = lambda ^ usize::from(x1);
    let b = lambda ^ usize::from(x2);
    (a, b, a & ku, b & kw)
}

/// Hidden-bit combinations (out of 8) compatible with the assignment.
pub fn joint_count(x: &SettingVector, assignment: &OutcomeMap) -> Result<u32> {
    if x.len() != 4 {
        return Err(Error::SettingOutcomeMismatch(format!(
            "setting vector has {} components for 4 agents",
            x.len()
        )));
    }
    for (&agent, &value) in assignment {
        if agent == 0 || agent > 4 {
            return Err(Error::InvalidAgentIndex(format!("agent {agent} of 4")));
        }
        if value > 1 {
            return Err(Error::SettingOutcomeMismatch(format!(
                "outcome {value} out of range for agent {agent} (2 outcomes)"
            )));
        }
    }
    let mut count = 0;
    for hidden in 0..COLLIDER_DENOMINATOR {
        let lambda = (hidden >> 2) as usize & 1;
        let ku = (hidden >> 1) as usize & 1;
        let kw = hidden as usize & 1;
        let (a, b, u, w) = outputs(lambda, ku, kw, x.measured(1), x.measured(2));
        let actual = [a, b, u, w];
        if assignment.iter().all(|(&agent, &v)| actual[agent - 1] == v) {
            count += 1;
        }
    }
    Ok(count)
}

/// Full joint table over (a, b, u, w) at the given station inputs, as
/// exact counts out of 8.
pub fn collider_table(x1: bool, x2: bool) -> Vec<((usize, usize, usize, usize), u32)> {
    let x = SettingVector(vec![x1, x2, true, true]);
    let mut out = Vec::with_capacity(16);
    for a in 0..2 {
        for b in 0..2 {
            for u in 0..2 {
                for w in 0..2 {
                    let assignment: OutcomeMap =
                        [(1, a), (2, b), (3, u), (4, w)].into_iter().collect();
                    let count = joint_count(&x, &assignment).expect("in-range query");
                    out.push(((a, b, u, w), count));
                }
            }
        }
    }
    out
}

impl Model for ClassicalCollider {
    fn agent_count(&self) -> usize {
        4
    }
    fn agent_name(&self, agent: usize) -> String {
        ["a", "b", "u", "w"][agent - 1].to_string()
    }
    fn outcome_count(&self, _agent: usize) -> usize {
        2
    }
    fn pinned(&self) -> Vec<bool> {
        vec![false, false, true, true]
    }
    fn outcome_requires_setting(&self) -> bool {
        // Station inputs change the outputs, but every variable has a
        // value under every input: nothing here needs a reasoning cut.
        false
    }
    fn memory_touched(&self, _agent: usize) -> bool {
        false
    }
    fn announcements(&self) -> Vec<(String, OutcomeMap)> {
        vec![]
    }
    fn joint(&self, x: &SettingVector, assignment: &OutcomeMap) -> Result<f64> {
        Ok(f64::from(joint_count(x, assignment)?) / f64::from(COLLIDER_DENOMINATOR))
    }
    fn outcome_name(&self, _agent: usize, value: usize) -> String {
        value.to_string()
    }
}
