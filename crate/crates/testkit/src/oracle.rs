//! Brute-force reference evaluator for joint outcome probabilities.
//!
//! Everything here is reimplemented from the scenario data alone: index
//! arithmetic, the record unitary, projections, channels. No operator
//! construction, embedding, truncation, pruning or fallback logic is shared
//! with the engine, so agreement between the two is meaningful evidence.
//! Every agent stage is always evolved, realized-but-unqueried outcomes and
//! Kraus operators branch into explicit weighted states, and the final
//! probability is the plain sum of squared branch norms.

use lwfs_core::scenario::{AgentSpec, LWFSpec, OutcomeMap, SettingVector};
use num_complex::Complex64;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Big-endian register bookkeeping: first register owns the most
/// significant digit, matching the convention scenario amplitudes use.
struct Registers {
    labels: Vec<String>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Registers {
    fn of(spec: &LWFSpec) -> Registers {
        let mut labels: Vec<String> = Vec::new();
        let mut dims: Vec<usize> = Vec::new();
        for (l, d) in &spec.systems {
            labels.push(l.clone());
            dims.push(*d);
        }
        // Memory dimensions resolve left to right: each agent's memory is as
        // large as the product of the registers it measures, all of which
        // exist by the time the agent acts.
        for agent in &spec.agents {
            let dim = agent
                .measured_subset
                .iter()
                .map(|l| {
                    let at = labels.iter().position(|k| k == l).expect("validated spec");
                    dims[at]
                })
                .product();
            labels.push(agent.memory_label.clone());
            dims.push(dim);
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let total = dims.iter().product();
        Registers { labels, dims, strides, total }
    }

    fn position(&self, label: &str) -> usize {
        self.labels.iter().position(|l| l == label).expect("validated spec")
    }

    /// Initial amplitudes: the system state with every memory digit zero.
    fn initial(&self, spec: &LWFSpec) -> Vec<C> {
        let sys_count = spec.systems.len();
        let mut amps = vec![ZERO; self.total];
        for (sys_index, &a) in spec.initial.iter().enumerate() {
            let mut digits = vec![0usize; self.dims.len()];
            let mut rem = sys_index;
            for r in (0..sys_count).rev() {
                digits[r] = rem % self.dims[r];
                rem /= self.dims[r];
            }
            let flat: usize = digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum();
            amps[flat] = a;
        }
        amps
    }
}

/// A label subset seen as one joint digit, first label most significant.
struct Subset {
    dims: Vec<usize>,
    strides: Vec<usize>,
    /// Global offset of every joint local index.
    offsets: Vec<usize>,
    dim: usize,
}

impl Subset {
    fn of(regs: &Registers, labels: &[String]) -> Subset {
        let positions: Vec<usize> = labels.iter().map(|l| regs.position(l)).collect();
        let dims: Vec<usize> = positions.iter().map(|&p| regs.dims[p]).collect();
        let strides: Vec<usize> = positions.iter().map(|&p| regs.strides[p]).collect();
        let dim: usize = dims.iter().product();
        let mut offsets = vec![0usize; dim];
        for (local, off) in offsets.iter_mut().enumerate() {
            let mut rem = local;
            let mut acc = 0usize;
            for r in (0..dims.len()).rev() {
                acc += (rem % dims[r]) * strides[r];
                rem /= dims[r];
            }
            *off = acc;
        }
        Subset { dims, strides, offsets, dim }
    }

    fn local_of(&self, global: usize) -> usize {
        let mut local = 0usize;
        for r in 0..self.dims.len() {
            local = local * self.dims[r] + (global / self.strides[r]) % self.dims[r];
        }
        local
    }
}

/// ψ ↦ Σ_a (|v_a⟩⟨v_a| ⊗ shift_a) ψ: project the measured subset onto each
/// basis vector and add the outcome into the memory digit, mod its size.
fn apply_record(
    sub: &Subset,
    mem_dim: usize,
    mem_stride: usize,
    basis: &[Vec<C>],
    amps: &[C],
) -> Vec<C> {
    let mut out = vec![ZERO; amps.len()];
    for (g, &amp) in amps.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let l = sub.local_of(g);
        let m = (g / mem_stride) % mem_dim;
        let base = g - sub.offsets[l] - m * mem_stride;
        for (a, vector) in basis.iter().enumerate() {
            let weight = vector[l].conj() * amp;
            if weight == ZERO {
                continue;
            }
            let shifted = ((m + a) % mem_dim) * mem_stride;
            for (j, &vj) in vector.iter().enumerate() {
                if vj != ZERO {
                    out[base + sub.offsets[j] + shifted] += vj * weight;
                }
            }
        }
    }
    out
}

/// ψ ↦ (|v_a⟩⟨v_a| ⊗ |a⟩⟨a|) ψ: keep only the record-consistent component
/// for outcome `a`.
fn project_outcome(
    sub: &Subset,
    mem_dim: usize,
    mem_stride: usize,
    basis_vector: &[C],
    a: usize,
    amps: &[C],
) -> Vec<C> {
    let mut out = vec![ZERO; amps.len()];
    for (g, &amp) in amps.iter().enumerate() {
        if amp == ZERO || (g / mem_stride) % mem_dim != a {
            continue;
        }
        let l = sub.local_of(g);
        let base = g - sub.offsets[l];
        let weight = basis_vector[l].conj() * amp;
        if weight == ZERO {
            continue;
        }
        for (j, &vj) in basis_vector.iter().enumerate() {
            if vj != ZERO {
                out[base + sub.offsets[j]] += vj * weight;
            }
        }
    }
    out
}

/// One Kraus operator, given as a dense matrix over the support subset.
fn apply_matrix(sub: &Subset, mat: &[C], amps: &[C]) -> Vec<C> {
    let mut out = vec![ZERO; amps.len()];
    for (g, &amp) in amps.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let col = sub.local_of(g);
        let base = g - sub.offsets[col];
        for row in 0..sub.dim {
            let entry = mat[row * sub.dim + col];
            if entry != ZERO {
                out[base + sub.offsets[row]] += entry * amp;
            }
        }
    }
    out
}

fn norm_sqr(amps: &[C]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

fn stage_views(regs: &Registers, agent: &AgentSpec) -> (Subset, usize, usize) {
    let sub = Subset::of(regs, &agent.measured_subset);
    let mem = regs.position(&agent.memory_label);
    (sub, regs.dims[mem], regs.strides[mem])
}

/// Joint probability of `assignment` at settings `x`, by exhaustive branch
/// evolution through every stage. Inputs must already be valid for `spec`.
pub fn oracle_joint(spec: &LWFSpec, x: &SettingVector, assignment: &OutcomeMap) -> f64 {
    let regs = Registers::of(spec);
    let mut branches: Vec<Vec<C>> = vec![regs.initial(spec)];
    for (pos, agent) in spec.agents.iter().enumerate() {
        let i = pos + 1;
        let (sub, mem_dim, mem_stride) = stage_views(&regs, agent);
        for b in &mut branches {
            *b = apply_record(&sub, mem_dim, mem_stride, &agent.basis, b);
        }
        if x.measured(i) {
            let realized: Vec<usize> = match assignment.get(&i) {
                Some(&v) => vec![v],
                None => (0..mem_dim).collect(),
            };
            branches = branches
                .iter()
                .flat_map(|b| {
                    realized.iter().map(|&a| {
                        project_outcome(&sub, mem_dim, mem_stride, &agent.basis[a], a, b)
                    })
                })
                .collect();
        }
        if let Some(channel) = &agent.post_channel {
            let view = Subset::of(&regs, &channel.support);
            branches = branches
                .iter()
                .flat_map(|b| channel.kraus.iter().map(|k| apply_matrix(&view, k, b)))
                .collect();
        }
        // Branches that died exactly carry nothing; everything else stays.
        branches.retain(|b| b.iter().any(|a| *a != ZERO));
    }
    branches.iter().map(|b| norm_sqr(b)).sum()
}

/// Conditional as a plain ratio of brute-force joints; `None` when the
/// given event carries (numerically) no probability.
pub fn oracle_conditional(
    spec: &LWFSpec,
    x: &SettingVector,
    targets: &OutcomeMap,
    givens: &OutcomeMap,
) -> Option<f64> {
    let denominator = oracle_joint(spec, x, givens);
    if denominator <= 1e-9 {
        return None;
    }
    let mut both = givens.clone();
    both.extend(targets.iter().map(|(&k, &v)| (k, v)));
    Some(oracle_joint(spec, x, &both) / denominator)
}
