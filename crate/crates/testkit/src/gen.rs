//! Seeded random scenarios, bases, channels and queries for property
//! suites. Everything is driven by an explicit ChaCha8 stream so a failing
//! case reproduces from its seed alone.

use lwfs_core::scenario::{
    Announcement, AgentSpec, ChannelSpec, LWFSpec, OutcomeMap, SettingVector,
};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random normalized amplitude vector.
pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C> {
    loop {
        let amps: Vec<C> = (0..dim).map(|_| draw(rng)).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return amps.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Haar-ish random unitary as orthonormal rows: a complex Ginibre draw
/// followed by two Gram-Schmidt passes (the second clears the rounding the
/// first leaves behind).
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<C>> {
    'fresh: loop {
        let mut rows: Vec<Vec<C>> = (0..dim).map(|_| (0..dim).map(|_| draw(rng)).collect()).collect();
        for _ in 0..2 {
            for i in 0..dim {
                for j in 0..i {
                    let ip: C = rows[j].iter().zip(&rows[i]).map(|(a, b)| a.conj() * b).sum();
                    for k in 0..dim {
                        let t = rows[j][k];
                        rows[i][k] -= ip * t;
                    }
                }
                let norm: f64 = rows[i].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-6 {
                    continue 'fresh; // near-singular draw, essentially never
                }
                for k in 0..dim {
                    rows[i][k] /= norm;
                }
            }
        }
        return rows;
    }
}

/// Trace-preserving Kraus family over a dim-`e` space via Stinespring: the
/// first `e` columns of a random unitary on the system ⊗ environment space
/// form an isometry, and its environment blocks are the Kraus operators.
pub fn random_kraus(rng: &mut ChaCha8Rng, e: usize, count: usize) -> Vec<Vec<C>> {
    let w = random_unitary(rng, e * count);
    (0..count)
        .map(|j| {
            let mut mat = vec![C::new(0.0, 0.0); e * e];
            for r in 0..e {
                for c in 0..e {
                    mat[r * e + c] = w[r * count + j][c];
                }
            }
            mat
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_agents: usize,
    /// Hard cap on the full layout dimension (systems ⊗ memories).
    pub max_total_dim: usize,
    /// Hard cap on any one measured subset (bounds basis sizes).
    pub max_subset_dim: usize,
    pub channel_probability: f64,
    pub announcement_probability: f64,
    /// Restrict to scenarios whose records are never touched again: agents
    /// measure systems only and channels act on systems only.
    pub untouched_only: bool,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits {
            max_agents: 4,
            max_total_dim: 256,
            max_subset_dim: 4,
            channel_probability: 0.35,
            announcement_probability: 0.3,
            untouched_only: false,
        }
    }
}

pub fn random_scenario(rng: &mut ChaCha8Rng, limits: &GenLimits) -> LWFSpec {
    let system_count = rng.gen_range(1..=2);
    let systems: Vec<(String, usize)> = (0..system_count)
        .map(|i| (format!("S{i}"), rng.gen_range(2..=3)))
        .collect();
    let system_dim: usize = systems.iter().map(|(_, d)| d).product();
    let initial = random_state(rng, system_dim);

    let mut total = system_dim;
    // (label, dim, is_system); agents may remeasure earlier memories.
    let mut registers: Vec<(String, usize, bool)> =
        systems.iter().map(|(l, d)| (l.clone(), *d, true)).collect();
    let mut agents: Vec<AgentSpec> = Vec::new();
    let want = rng.gen_range(1..=limits.max_agents);
    for i in 0..want {
        if total * 2 > limits.max_total_dim {
            break;
        }
        let mut order: Vec<usize> = (0..registers.len())
            .filter(|&r| registers[r].2 || !limits.untouched_only)
            .collect();
        order.shuffle(rng);
        let mut subset: Vec<usize> = Vec::new();
        let mut dim = 1usize;
        for &r in &order {
            let d = registers[r].1;
            if dim * d > limits.max_subset_dim || total * dim * d > limits.max_total_dim {
                continue;
            }
            if subset.is_empty() || rng.gen_bool(0.4) {
                subset.push(r);
                dim *= d;
            }
        }
        if subset.is_empty() {
            break; // every visible register would blow the dimension budget
        }
        let measured_subset: Vec<String> =
            subset.iter().map(|&r| registers[r].0.clone()).collect();
        let memory_label = format!("M{i}");
        let post_channel = if rng.gen_bool(limits.channel_probability) {
            // Never a later agent's memory: a channel writing a record that
            // has not been produced yet would let the future act backwards.
            let mut pool: Vec<(String, usize)> = if limits.untouched_only {
                registers
                    .iter()
                    .filter(|r| r.2)
                    .map(|r| (r.0.clone(), r.1))
                    .collect()
            } else {
                let mut all: Vec<(String, usize)> =
                    registers.iter().map(|r| (r.0.clone(), r.1)).collect();
                all.push((memory_label.clone(), dim));
                all
            };
            pool.shuffle(rng);
            let mut support_dim = 1usize;
            let mut support: Vec<String> = Vec::new();
            for (label, d) in pool {
                if support_dim * d > limits.max_subset_dim {
                    continue;
                }
                if support.is_empty() || rng.gen_bool(0.35) {
                    support_dim *= d;
                    support.push(label);
                }
            }
            let count = rng.gen_range(1..=2);
            Some(ChannelSpec { support, kraus: random_kraus(rng, support_dim, count) })
        } else {
            None
        };
        agents.push(AgentSpec {
            name: format!("a{i}"),
            measured_subset,
            basis: random_unitary(rng, dim),
            memory_label: memory_label.clone(),
            post_channel,
            pinned: rng.gen_bool(0.25),
        });
        registers.push((memory_label, dim, false));
        total *= dim;
    }

    let mut announcements = Vec::new();
    if !agents.is_empty() && rng.gen_bool(limits.announcement_probability) {
        let mut outcomes = OutcomeMap::new();
        for (pos, agent) in agents.iter().enumerate() {
            if rng.gen_bool(0.5) {
                outcomes.insert(pos + 1, rng.gen_range(0..agent.basis.len()));
            }
        }
        if !outcomes.is_empty() {
            announcements.push(Announcement { name: "joint call".into(), outcomes });
        }
    }

    LWFSpec { systems, initial, agents, announcements }
}

/// A settings draw plus a target/given split over some measured agents.
#[derive(Debug, Clone)]
pub struct QueryDraw {
    pub x: SettingVector,
    pub targets: OutcomeMap,
    pub givens: OutcomeMap,
}

impl QueryDraw {
    /// Targets and givens as one joint assignment.
    pub fn combined(&self) -> OutcomeMap {
        let mut all = self.givens.clone();
        all.extend(self.targets.iter().map(|(&k, &v)| (k, v)));
        all
    }
}

pub fn random_query(rng: &mut ChaCha8Rng, spec: &LWFSpec) -> QueryDraw {
    let x = SettingVector(
        spec.agents
            .iter()
            .map(|a| a.pinned || rng.gen_bool(0.7))
            .collect(),
    );
    let mut measured: Vec<usize> = (1..=spec.agents.len()).filter(|&i| x.measured(i)).collect();
    measured.shuffle(rng);
    // Leave at most two realized outcomes unassigned so branch counts and
    // the marginalization code paths both get exercised.
    let drop = rng.gen_range(0..=2.min(measured.len()));
    let assigned = &measured[..measured.len() - drop];
    let mut targets = OutcomeMap::new();
    let mut givens = OutcomeMap::new();
    for (slot, &agent) in assigned.iter().enumerate() {
        let count = spec.agents[agent - 1].basis.len();
        let value = rng.gen_range(0..count);
        // First assigned agent is always a target so the split is usable
        // for conditionals; the rest scatter.
        if slot == 0 || rng.gen_bool(0.5) {
            targets.insert(agent, value);
        } else {
            givens.insert(agent, value);
        }
    }
    QueryDraw { x, targets, givens }
}

/// Rewrites every stage after `prefix`: fresh bases, fresh or dropped
/// channels, and (for unpinned agents) flipped settings. Dimensions are
/// untouched, so the mutant stays valid while everything evaluated past the
/// query's horizon differs.
pub fn perturb_after_prefix(
    rng: &mut ChaCha8Rng,
    spec: &LWFSpec,
    x: &SettingVector,
    prefix: usize,
) -> (LWFSpec, SettingVector) {
    let mut mutant = spec.clone();
    let mut settings = x.0.clone();
    for pos in prefix..mutant.agents.len() {
        let dim = mutant.agents[pos].basis.len();
        mutant.agents[pos].basis = random_unitary(rng, dim);
        mutant.agents[pos].post_channel = match mutant.agents[pos].post_channel.take() {
            Some(_) if rng.gen_bool(0.3) => None,
            Some(channel) if rng.gen_bool(0.5) => {
                // Same support, fresh Kraus family of the same width.
                let e = (1..=16).find(|d| d * d == channel.kraus[0].len()).expect("square kraus");
                Some(ChannelSpec {
                    support: channel.support,
                    kraus: random_kraus(rng, e, channel.kraus.len()),
                })
            }
            other => other,
        };
        if !mutant.agents[pos].pinned {
            settings[pos] = rng.gen_bool(0.5);
        }
    }
    (mutant, SettingVector(settings))
}
