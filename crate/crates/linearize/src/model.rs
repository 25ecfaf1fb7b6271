//! Domain model: identifiers, node registers, the message catalog and the
//! communication graph every detector is computed from.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Globally unique, totally ordered node identifier. Only the order matters
/// to the protocol; the simulator also uses it as the routing address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Flyover registers of one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlyoverVars {
    /// `left[i-1]` is the level-i left shortcut S_l(i).
    pub left: Vec<NodeId>,
    /// `right[i-1]` is the level-i right shortcut S_r(i).
    pub right: Vec<NodeId>,
    pub vid: i64,
    pub fly_id: NodeId,
    pub exit: bool,
    pub c_par: i64,
    pub c_dist: i64,
    pub c_ids: BTreeSet<NodeId>,
}

impl FlyoverVars {
    pub fn new(owner: NodeId) -> Self {
        Self {
            left: Vec::new(),
            right: Vec::new(),
            vid: 0,
            fly_id: owner,
            exit: false,
            c_par: 0,
            c_dist: -1,
            c_ids: BTreeSet::new(),
        }
    }

    /// True iff S = L ∪ R is empty, i.e. the node is not in dual-state.
    pub fn s_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    /// S_l(i) with 1-based levels.
    pub fn s_l(&self, level: usize) -> Option<NodeId> {
        level.checked_sub(1).and_then(|i| self.left.get(i).copied())
    }

    /// S_r(i) with 1-based levels.
    pub fn s_r(&self, level: usize) -> Option<NodeId> {
        level.checked_sub(1).and_then(|i| self.right.get(i).copied())
    }

    pub fn shortcut_ids(&self) -> BTreeSet<NodeId> {
        self.left.iter().chain(self.right.iter()).copied().collect()
    }

    pub fn reset(&mut self, owner: NodeId) {
        *self = Self::new(owner);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceVars {
    pub t: i64,
    pub dist: i64,
}

impl AdviceVars {
    pub fn new() -> Self {
        Self { t: 0, dist: -1 }
    }
}

/// Per-node advice computed by the supervisor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AdviceMessage {
    pub vid: i64,
    pub c_par: Option<i64>,
    pub c_dist: i64,
    pub par: Option<NodeId>,
    pub dist: i64,
}

impl AdviceMessage {
    /// Structural well-formedness. Membership of `par` in the recipient's
    /// snapshot is checked by the recipient.
    pub fn is_well_formed(&self) -> bool {
        match (self.par, self.c_par) {
            (None, None) => self.dist == 0 && self.vid == 1 && self.c_dist == 0,
            (Some(_), Some(c_par)) => self.dist > 0 && self.vid > 1 && self.c_dist > 0 && c_par >= 1,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VerifiedKind {
    Parent,
    SibPlus,
    SibMinus,
    Child,
}

/// Every wire message. Senders are anonymous unless a payload field names
/// them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Message {
    RejFlyover,
    TestLineR { sender: NodeId },
    TestLineL { sender: NodeId },
    FlyConstR { w: NodeId, level: u32, sender: NodeId },
    FlyConstL { w: NodeId, level: u32, sender: NodeId },
    TestVid(i64),
    TestFlyId(Option<NodeId>),
    TestCert { origin: NodeId, target_vid: i64, dist: i64 },
    IntroCert(NodeId),
    RequestSnapshot,
    Intro(NodeId),
    Neighborhood { sender: NodeId, ids: BTreeSet<NodeId> },
    Advice(AdviceMessage),
    TestAdvice { dist: i64, sender: NodeId },
    Verified { kind: VerifiedKind, id: NodeId },
    PathPlus(NodeId),
    PathMinus(NodeId),
    Rev { dest: NodeId },
    BaseIntro(NodeId),
}

impl Message {
    /// All node ids carried in payload fields.
    pub fn ids(&self) -> Vec<NodeId> {
        use Message::*;
        match self {
            RejFlyover | TestVid(_) | RequestSnapshot | TestFlyId(None) => vec![],
            TestLineR { sender } | TestLineL { sender } => vec![*sender],
            FlyConstR { w, sender, .. } | FlyConstL { w, sender, .. } => vec![*w, *sender],
            TestFlyId(Some(f)) => vec![*f],
            TestCert { origin, .. } => vec![*origin],
            IntroCert(v) | Intro(v) | PathPlus(v) | PathMinus(v) | BaseIntro(v) => vec![*v],
            Neighborhood { sender, ids } => std::iter::once(*sender).chain(ids.iter().copied()).collect(),
            Advice(a) => a.par.into_iter().collect(),
            TestAdvice { sender, .. } => vec![*sender],
            Verified { id, .. } => vec![*id],
            Rev { dest } => vec![*dest],
        }
    }

    /// Messages only the supervisor emits.
    pub fn from_supervisor(&self) -> bool {
        matches!(self, Message::Advice(_) | Message::RequestSnapshot)
    }

    pub fn tag(&self) -> &'static str {
        use Message::*;
        match self {
            RejFlyover => "RejFlyover",
            TestLineR { .. } => "TestLineR",
            TestLineL { .. } => "TestLineL",
            FlyConstR { .. } => "FlyConstR",
            FlyConstL { .. } => "FlyConstL",
            TestVid(_) => "TestVid",
            TestFlyId(_) => "TestFlyId",
            TestCert { .. } => "TestCert",
            IntroCert(_) => "IntroCert",
            RequestSnapshot => "RequestSnapshot",
            Intro(_) => "Intro",
            Neighborhood { .. } => "Neighborhood",
            Advice(_) => "Advice",
            TestAdvice { .. } => "TestAdvice",
            Verified { .. } => "Verified",
            PathPlus(_) => "PathPlus",
            PathMinus(_) => "PathMinus",
            Rev { .. } => "Rev",
            BaseIntro(_) => "BaseIntro",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub fly: FlyoverVars,
    pub adv: AdviceVars,
    pub base_mem: BTreeSet<NodeId>,
    /// Messages delivered for the next round this node executes.
    pub channel: Vec<Message>,
}

impl NodeState {
    pub fn new(id: NodeId) -> Self {
        Self {
            id,
            fly: FlyoverVars::new(id),
            adv: AdviceVars::new(),
            base_mem: BTreeSet::new(),
            channel: Vec::new(),
        }
    }

    /// Ids held in address variables; the default flyID (self) is not an edge.
    pub fn explicit_ids(&self) -> BTreeSet<NodeId> {
        let mut ids: BTreeSet<NodeId> = self.base_mem.clone();
        ids.extend(self.fly.left.iter().copied());
        ids.extend(self.fly.right.iter().copied());
        ids.extend(self.fly.c_ids.iter().copied());
        ids.insert(self.fly.fly_id);
        ids.remove(&self.id);
        ids
    }

    pub fn implicit_ids(&self) -> BTreeSet<NodeId> {
        let mut ids: BTreeSet<NodeId> = self.channel.iter().flat_map(Message::ids).collect();
        ids.remove(&self.id);
        ids
    }

    /// S = ∅ ∧ exit = 0 ∧ t = 0.
    pub fn is_attentive(&self) -> bool {
        self.fly.s_empty() && !self.fly.exit && self.adv.t == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Explicit,
    Implicit,
}

/// Directed communication graph. An edge can carry both labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommGraph {
    pub nodes: Vec<NodeId>,
    pub edges: BTreeMap<(NodeId, NodeId), BTreeSet<EdgeKind>>,
}

impl CommGraph {
    pub fn has_edge(&self, u: NodeId, v: NodeId, kind: EdgeKind) -> bool {
        self.edges.get(&(u, v)).is_some_and(|k| k.contains(&kind))
    }

    fn undirected_adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = self.nodes.iter().map(|&u| (u, Vec::new())).collect();
        for &(u, v) in self.edges.keys() {
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        adj
    }

    /// Hop distance ignoring edge direction, `None` if unreachable.
    pub fn undirected_distance(&self, from: NodeId, to: NodeId) -> Option<usize> {
        let adj = self.undirected_adjacency();
        bfs_distances(&adj, from).get(&to).copied()
    }

    /// Distances from `from` to every reachable node, ignoring direction.
    pub fn undirected_distances_from(&self, from: NodeId) -> BTreeMap<NodeId, usize> {
        bfs_distances(&self.undirected_adjacency(), from)
    }
}

fn bfs_distances(adj: &BTreeMap<NodeId, Vec<NodeId>>, from: NodeId) -> BTreeMap<NodeId, usize> {
    let mut dist = BTreeMap::new();
    if !adj.contains_key(&from) {
        return dist;
    }
    dist.insert(from, 0);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for &v in &adj[&u] {
            if !dist.contains_key(&v) {
                dist.insert(v, d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All node states, sorted by id, plus the round counter. The supervisor
/// lives in the engine next to the configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub nodes: Vec<NodeState>,
    pub round: u64,
}

impl Configuration {
    pub fn new(mut nodes: Vec<NodeState>) -> Self {
        nodes.sort_by_key(|s| s.id);
        Self { nodes, round: 0 }
    }

    /// Fresh default states over the given ids.
    pub fn with_ids(ids: impl IntoIterator<Item = NodeId>) -> Self {
        Self::new(ids.into_iter().map(NodeState::new).collect())
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.nodes.iter().map(|s| s.id).collect()
    }

    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |s| s.id).ok()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.position(id).map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeState> {
        self.position(id).map(move |i| &mut self.nodes[i])
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.position(id).is_some()
    }

    /// Structured text snapshot, one record per node.
    pub fn to_snapshot_text(&self) -> String {
        let mut out = format!("round={}\n", self.round);
        for s in &self.nodes {
            out.push_str(&node_record(s));
            out.push('\n');
        }
        out
    }
}

fn join_ids<'a>(ids: impl IntoIterator<Item = &'a NodeId>) -> String {
    ids.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn node_record(s: &NodeState) -> String {
    let channel: Vec<String> = s
        .channel
        .iter()
        .map(|m| serde_json::to_string(m).unwrap_or_else(|_| m.tag().to_string()))
        .collect();
    format!(
        "id={} L=[{}] R=[{}] vID={} flyID={} exit={} c_par={} c_dist={} c_ids=[{}] t={} dist={} base_mem=[{}] channel=[{}]",
        s.id,
        join_ids(&s.fly.left),
        join_ids(&s.fly.right),
        s.fly.vid,
        s.fly.fly_id,
        u8::from(s.fly.exit),
        s.fly.c_par,
        s.fly.c_dist,
        join_ids(&s.fly.c_ids),
        s.adv.t,
        s.adv.dist,
        join_ids(&s.base_mem),
        channel.join(";"),
    )
}

/// Explicit edges come from address variables, implicit ones from channel
/// payloads. Ids outside the node set are skipped.
pub fn extract_graph(config: &Configuration) -> CommGraph {
    let mut graph = CommGraph { nodes: config.ids(), edges: BTreeMap::new() };
    for s in &config.nodes {
        for v in s.explicit_ids() {
            if config.contains(v) {
                graph.edges.entry((s.id, v)).or_default().insert(EdgeKind::Explicit);
            }
        }
        for v in s.implicit_ids() {
            if config.contains(v) {
                graph.edges.entry((s.id, v)).or_default().insert(EdgeKind::Implicit);
            }
        }
    }
    graph
}

pub fn is_weakly_connected(graph: &CommGraph) -> bool {
    let Some(&first) = graph.nodes.first() else {
        return true;
    };
    graph.undirected_distances_from(first).len() == graph.nodes.len()
}
