//! Synchronous simulator: delivery, supervisor and node steps, detectors
//! and per-run metrics.

pub mod detect;
pub mod faults;
pub mod topology;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{extract_graph, is_weakly_connected, Configuration, Message, NodeId, NodeState};
use crate::par::prelude::*;
use crate::protocol::{node_round, RoundOutput, Variant};
use crate::supervisor::{Strategy, SupervisorMode, SupervisorState};

pub use detect::{ceil_log2, classify_structures, is_legal, Structures, C_EXTRA};
pub use faults::{inject_faults, Corruption};
pub use topology::{generate, InitialGraph, Topology};

/// Rounds after a bad advice in which new dual-state nodes count as its
/// entrants (the advice pipeline takes four rounds).
pub const ENTRY_WINDOW: u64 = 4;
/// Calibrated constant in the c·⌈log₂ n⌉ rejection and convergence bounds.
pub const LOG_FACTOR: u64 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub n: usize,
    pub topology: Topology,
    pub supervisor: SupervisorMode,
    pub seed: u64,
    pub max_rounds: u64,
    pub corruption: Corruption,
    pub variant: Variant,
}

impl Scenario {
    pub fn new(n: usize, topology: Topology, supervisor: SupervisorMode, seed: u64) -> Self {
        Self {
            n,
            topology,
            supervisor,
            seed,
            max_rounds: default_max_rounds(n),
            corruption: Corruption::None,
            variant: Variant::Standard,
        }
    }
}

/// Generous cap: well above both the 8·n base envelope and the log bounds.
pub fn default_max_rounds(n: usize) -> u64 {
    (10 * n as u64).max(200)
}

/// A node step plus the provenance check against its start state.
struct NodeStep {
    state: NodeState,
    out: RoundOutput,
    sybil: usize,
    entered: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundReport {
    /// Index of the executed round.
    pub round: u64,
    pub messages: usize,
    pub sybil_violations: usize,
    pub rejected: Vec<NodeId>,
    /// Nodes whose S went from empty to non-empty.
    pub entered: Vec<NodeId>,
    pub advised: bool,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: Configuration,
    pub supervisor: Option<SupervisorState>,
    pub variant: Variant,
    /// Node messages addressed to the supervisor, read next round.
    to_supervisor: Vec<Message>,
}

impl Simulation {
    pub fn new(config: Configuration, supervisor: Option<SupervisorState>) -> Self {
        Self { config, supervisor, variant: Variant::Standard, to_supervisor: Vec::new() }
    }

    /// Initial configuration and supervisor for a scenario, plus the far
    /// pair when the topology designates one.
    pub fn from_scenario(s: &Scenario) -> (Self, Option<(NodeId, NodeId)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let graph = generate(s.topology, s.n, &mut rng);
        let mut config = Configuration::with_ids(graph.ids.iter().copied());
        for &(u, v) in &graph.edges {
            config.node_mut(u).expect("generated id").base_mem.insert(v);
        }
        let config = inject_faults(&config, s.corruption, &mut rng);
        let supervisor = match s.supervisor {
            SupervisorMode::Absent => None,
            mode => Some(SupervisorState::new(mode, graph.ids.iter().copied(), s.seed)),
        };
        let mut sim = Self::new(config, supervisor);
        sim.variant = s.variant;
        (sim, graph.pair)
    }

    pub fn step(&mut self) -> RoundReport {
        let round = self.config.round;
        let mut report = RoundReport { round, ..Default::default() };

        if let Some(sup) = self.supervisor.as_mut() {
            let attentive: BTreeMap<NodeId, bool> =
                self.config.nodes.iter().map(|s| (s.id, s.is_attentive())).collect();
            let inbox = std::mem::take(&mut self.to_supervisor);
            let out = sup.step(&inbox, &attentive);
            report.advised = out.advised;
            report.messages += out.sends.len();
            for (to, m) in out.sends {
                if let Some(s) = self.config.node_mut(to) {
                    s.channel.push(m);
                }
            }
        }
        self.to_supervisor.clear();

        let variant = self.variant;
        let steps: Vec<NodeStep> = self
            .config
            .nodes
            .par_iter()
            .map(|start| {
                let (state, out) = node_round(start, variant);
                let sybil = detect::provenance_violations(start, &state, &out.outbound, out.to_supervisor.as_ref());
                let entered = start.fly.s_empty() && !state.fly.s_empty();
                NodeStep { state, out, sybil, entered }
            })
            .collect();

        let mut nodes = Vec::with_capacity(steps.len());
        let mut outbound = Vec::new();
        for step in steps {
            let id = step.state.id;
            report.sybil_violations += step.sybil;
            report.messages += step.out.outbound.len() + usize::from(step.out.to_supervisor.is_some());
            if step.out.rejected {
                report.rejected.push(id);
            }
            if step.entered {
                report.entered.push(id);
            }
            if let Some(m) = step.out.to_supervisor {
                self.to_supervisor.push(m);
            }
            outbound.extend(step.out.outbound);
            nodes.push(step.state);
        }
        self.config.nodes = nodes;
        for (to, m) in outbound {
            if let Some(s) = self.config.node_mut(to) {
                s.channel.push(m);
            }
        }
        self.config.round += 1;
        report
    }
}

/// One supervisor-free round of the standard protocol.
pub fn step_round(config: &Configuration) -> Configuration {
    let mut sim = Simulation::new(config.clone(), None);
    sim.step();
    sim.config
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Episode {
    /// Round in which the bad advice was delivered.
    pub delivered: u64,
    pub entrants: BTreeSet<NodeId>,
    /// Entrants still in dual-state without having rejected.
    pub pending: BTreeSet<NodeId>,
    pub last_reject: Option<u64>,
    pub resolved_at: Option<u64>,
    /// Resolved because all nodes formed one correctly configured flyover.
    pub by_flyover: bool,
    pub deadline: u64,
    /// Deadline passed with entrants still pending.
    pub expired: bool,
}

impl Episode {
    pub fn is_open(&self) -> bool {
        self.resolved_at.is_none() && !self.expired
    }

    pub fn passed(&self) -> bool {
        self.resolved_at.is_some_and(|r| r <= self.deadline)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunMetrics {
    pub rounds_to_legal: Option<u64>,
    pub rounds_to_all_reject: Option<u64>,
    pub max_degree_seen: usize,
    pub messages_per_round: Vec<usize>,
    pub total_messages: usize,
    pub connectivity_violations: usize,
    pub sybil_violations: usize,
    pub first_advice_round: Option<u64>,
    pub episodes: Vec<Episode>,
    pub pair: Option<(NodeId, NodeId)>,
    pub initial_pair_distance: Option<usize>,
    pub distance_floor_violations: usize,
    pub rounds_run: u64,
    pub final_legal: bool,
}

impl RunMetrics {
    pub fn all_episodes_passed(&self) -> bool {
        self.episodes.iter().all(Episode::passed)
    }
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    round: u64,
    messages: usize,
    legal: bool,
    connected: bool,
    backbones: usize,
    flyovers: usize,
    ouroboroi: usize,
    lost: usize,
    rejected: &'a [NodeId],
    nodes: Vec<String>,
}

fn digest(s: &NodeState) -> String {
    format!(
        "{}:v{}:L{}:R{}:x{}:t{}:m{}:c{}:q{}",
        s.id,
        s.fly.vid,
        s.fly.left.len(),
        s.fly.right.len(),
        u8::from(s.fly.exit),
        s.adv.t,
        s.base_mem.len(),
        s.fly.c_ids.len(),
        s.channel.len()
    )
}

fn max_degree(config: &Configuration) -> usize {
    config.nodes.iter().map(detect::explicit_degree).max().unwrap_or(0)
}

/// Runs a scenario until it is legal with every bad-advice episode settled,
/// or until `max_rounds`. Writes one JSON record per round to `trace`.
pub fn run_scenario(s: &Scenario, mut trace: Option<&mut dyn Write>) -> std::io::Result<RunMetrics> {
    let (mut sim, pair) = Simulation::from_scenario(s);
    let n = sim.config.nodes.len();
    let window = LOG_FACTOR * ceil_log2(n).max(1) as u64;
    let malicious = s.supervisor.is_malicious();
    let stale = s.supervisor == SupervisorMode::Malicious(Strategy::Stale);

    let mut m = RunMetrics { pair, ..Default::default() };
    let graph = extract_graph(&sim.config);
    if !is_weakly_connected(&graph) {
        m.connectivity_violations += 1;
    }
    m.initial_pair_distance = pair.and_then(|(u, v)| graph.undirected_distance(u, v));
    m.max_degree_seen = max_degree(&sim.config);
    let mut legal = is_legal(&sim.config, C_EXTRA);
    let mut legal_since = legal.then_some(0);

    while sim.config.round < s.max_rounds {
        let open = m.episodes.iter().any(Episode::is_open);
        if legal && !open {
            break;
        }
        let report = sim.step();
        let r = report.round;
        m.messages_per_round.push(report.messages);
        m.total_messages += report.messages;
        m.sybil_violations += report.sybil_violations;
        if report.advised {
            m.first_advice_round.get_or_insert(r);
            if malicious {
                m.episodes.push(Episode {
                    delivered: r,
                    entrants: BTreeSet::new(),
                    pending: BTreeSet::new(),
                    last_reject: None,
                    resolved_at: None,
                    by_flyover: false,
                    deadline: r + window,
                    expired: false,
                });
            }
        }

        let graph = extract_graph(&sim.config);
        let connected = is_weakly_connected(&graph);
        if !connected {
            m.connectivity_violations += 1;
        }
        if let (Some(p), Some(d0)) = (pair, m.initial_pair_distance) {
            if !detect::distance_floor_holds(&graph, p, d0, r + 1) {
                m.distance_floor_violations += 1;
            }
        }
        m.max_degree_seen = m.max_degree_seen.max(max_degree(&sim.config));
        legal = is_legal(&sim.config, C_EXTRA);
        legal_since = if legal { legal_since.or(Some(r + 1)) } else { None };

        let structures = (malicious || trace.is_some()).then(|| classify_structures(&sim.config));
        for e in m.episodes.iter_mut().filter(|e| e.is_open()) {
            for v in &report.rejected {
                if e.pending.remove(v) {
                    e.last_reject = Some(r);
                }
            }
            if r <= e.delivered + ENTRY_WINDOW {
                for &v in &report.entered {
                    e.entrants.insert(v);
                    e.pending.insert(v);
                }
            }
            if r >= e.delivered + ENTRY_WINDOW {
                if e.pending.is_empty() {
                    e.resolved_at = Some(e.last_reject.unwrap_or(r).max(e.delivered));
                } else if stale && structures.as_ref().is_some_and(|st| st.is_single_flyover(n)) {
                    e.resolved_at = Some(r);
                    e.by_flyover = true;
                } else if r >= e.deadline {
                    e.expired = true;
                }
            }
        }

        if let Some(w) = trace.as_deref_mut() {
            let st = structures.unwrap_or_default();
            let rec = TraceRecord {
                round: r,
                messages: report.messages,
                legal,
                connected,
                backbones: st.backbones.len(),
                flyovers: st.backbones.iter().filter(|b| b.flyover).count(),
                ouroboroi: st.ouroboroi.len(),
                lost: st.lost.len(),
                rejected: &report.rejected,
                nodes: sim.config.nodes.iter().map(digest).collect(),
            };
            serde_json::to_writer(&mut *w, &rec)?;
            writeln!(w)?;
        }
    }

    m.rounds_run = sim.config.round;
    m.final_legal = legal;
    m.rounds_to_legal = legal_since;
    m.rounds_to_all_reject = m
        .episodes
        .iter()
        .filter(|e| e.passed() && !e.by_flyover)
        .filter_map(|e| e.last_reject.map(|r| r - e.delivered))
        .max();
    Ok(m)
}
