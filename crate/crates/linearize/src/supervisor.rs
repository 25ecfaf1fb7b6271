//! Supervisor: snapshot collection, honest advice via BFS tree and
//! Tree-to-Path, and a catalog of malicious strategies.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{AdviceMessage, Message, NodeId};
use crate::ttp::{self, TreeError};

/// Undirected graph assembled from Neighborhood reports.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Snapshot {
    /// Union of reports. Ids that did not report are dropped.
    pub fn from_reports(reports: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> Self {
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            reports.keys().map(|&u| (u, BTreeSet::new())).collect();
        for (&u, ids) in reports {
            for &v in ids {
                if v != u && reports.contains_key(&v) {
                    adjacency.get_mut(&u).unwrap().insert(v);
                    adjacency.get_mut(&v).unwrap().insert(u);
                }
            }
        }
        Self { adjacency }
    }

    pub fn from_edges(nodes: impl IntoIterator<Item = NodeId>, edges: &[(NodeId, NodeId)]) -> Self {
        let reports: BTreeMap<NodeId, BTreeSet<NodeId>> = nodes.into_iter().map(|u| (u, BTreeSet::new())).collect();
        let mut snap = Self::from_reports(&reports);
        for &(u, v) in edges {
            snap.adjacency.entry(u).or_default().insert(v);
            snap.adjacency.entry(v).or_default().insert(u);
        }
        snap
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.adjacency.keys().copied().collect()
    }

    /// BFS parent map from `root`, neighbours visited in id order.
    pub fn bfs_tree(&self, root: NodeId) -> BTreeMap<NodeId, NodeId> {
        let mut parent = BTreeMap::new();
        let mut seen = BTreeSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in self.adjacency.get(&u).into_iter().flatten() {
                if seen.insert(v) {
                    parent.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        parent
    }

    pub fn is_connected(&self) -> bool {
        match self.adjacency.keys().next() {
            None => true,
            Some(&root) => self.bfs_tree(root).len() + 1 == self.adjacency.len(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdviceError {
    #[error("snapshot is disconnected")]
    Disconnected,
    #[error("root {0} is not in the snapshot")]
    UnknownRoot(NodeId),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Advice for one tree: vIDs from Tree-to-Path over `parent`, certificate
/// fields from the sorted path over the tree's vertices rooted at `root`.
fn advise_tree(root: NodeId, parent: &BTreeMap<NodeId, NodeId>) -> Result<BTreeMap<NodeId, AdviceMessage>, TreeError> {
    let tree = ttp::label_tree(root, parent, 0)?;
    let path = ttp::tree_to_path(&tree)?;
    let vid: BTreeMap<NodeId, i64> = path.iter().enumerate().map(|(i, &v)| (v, i as i64 + 1)).collect();
    let sorted: Vec<NodeId> = tree.vertices().into_iter().collect();
    let root_rank = sorted.binary_search(&root).expect("root is a vertex");
    let mut depth = BTreeMap::from([(root, 0i64)]);
    for &v in &path {
        let mut chain = vec![];
        let mut u = v;
        while !depth.contains_key(&u) {
            chain.push(u);
            u = parent[&u];
        }
        let mut d = depth[&u];
        for &w in chain.iter().rev() {
            d += 1;
            depth.insert(w, d);
        }
    }
    let advice = sorted
        .iter()
        .enumerate()
        .map(|(rank, &u)| {
            let msg = if u == root {
                AdviceMessage { vid: vid[&u], c_par: None, c_dist: 0, par: None, dist: 0 }
            } else {
                let toward = if rank > root_rank { rank - 1 } else { rank + 1 };
                AdviceMessage {
                    vid: vid[&u],
                    c_par: Some(vid[&sorted[toward]]),
                    c_dist: rank.abs_diff(root_rank) as i64,
                    par: Some(parent[&u]),
                    dist: depth[&u],
                }
            };
            (u, msg)
        })
        .collect();
    Ok(advice)
}

/// Honest advice over a connected snapshot with at least two nodes.
pub fn compute_advice(snapshot: &Snapshot, root: NodeId) -> Result<BTreeMap<NodeId, AdviceMessage>, AdviceError> {
    if !snapshot.adjacency.contains_key(&root) {
        return Err(AdviceError::UnknownRoot(root));
    }
    if !snapshot.is_connected() {
        return Err(AdviceError::Disconnected);
    }
    Ok(advise_tree(root, &snapshot.bfs_tree(root))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Split,
    Sybil,
    WrongVids,
    Cycle,
    Partial,
    Stale,
}

impl Strategy {
    pub const ALL: [Strategy; 6] =
        [Strategy::Split, Strategy::Sybil, Strategy::WrongVids, Strategy::Cycle, Strategy::Partial, Strategy::Stale];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SupervisorMode {
    Honest,
    Absent,
    Malicious(Strategy),
}

impl SupervisorMode {
    pub fn is_malicious(self) -> bool {
        matches!(self, SupervisorMode::Malicious(_))
    }
}

impl fmt::Display for SupervisorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SupervisorMode::Honest => "honest",
            SupervisorMode::Absent => "none",
            SupervisorMode::Malicious(Strategy::Split) => "split",
            SupervisorMode::Malicious(Strategy::Sybil) => "sybil",
            SupervisorMode::Malicious(Strategy::WrongVids) => "wrong-vids",
            SupervisorMode::Malicious(Strategy::Cycle) => "cycle",
            SupervisorMode::Malicious(Strategy::Partial) => "partial",
            SupervisorMode::Malicious(Strategy::Stale) => "stale",
        };
        f.write_str(s)
    }
}

impl FromStr for SupervisorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "honest" => SupervisorMode::Honest,
            "none" | "absent" => SupervisorMode::Absent,
            "split" => SupervisorMode::Malicious(Strategy::Split),
            "sybil" => SupervisorMode::Malicious(Strategy::Sybil),
            "wrong-vids" => SupervisorMode::Malicious(Strategy::WrongVids),
            "cycle" => SupervisorMode::Malicious(Strategy::Cycle),
            "partial" => SupervisorMode::Malicious(Strategy::Partial),
            "stale" => SupervisorMode::Malicious(Strategy::Stale),
            other => return Err(format!("unknown supervisor mode `{other}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Waiting,
    Collecting,
    Advising,
}

/// What happened in one supervisor step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SupervisorOutput {
    pub sends: Vec<(NodeId, Message)>,
    pub advised: bool,
}

#[derive(Clone, Debug)]
pub struct SupervisorState {
    pub mode: SupervisorMode,
    pub membership: BTreeSet<NodeId>,
    pub phase: Phase,
    pub wait_counter: u64,
    pub collected: BTreeMap<NodeId, BTreeSet<NodeId>>,
    previous_snapshot: Option<Snapshot>,
    rng: ChaCha8Rng,
}

impl SupervisorState {
    pub fn new(mode: SupervisorMode, membership: impl IntoIterator<Item = NodeId>, seed: u64) -> Self {
        Self {
            mode,
            membership: membership.into_iter().collect(),
            phase: Phase::Idle,
            wait_counter: 0,
            collected: BTreeMap::new(),
            previous_snapshot: None,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5u64.rotate_left(60)),
        }
    }

    /// One round. `inbound` holds node messages sent last round; `attentive`
    /// is the omniscient attentiveness report at round start.
    pub fn step(&mut self, inbound: &[Message], attentive: &BTreeMap<NodeId, bool>) -> SupervisorOutput {
        let mut out = SupervisorOutput::default();
        if self.mode == SupervisorMode::Absent {
            return out;
        }
        let all = !self.membership.is_empty() && self.membership.iter().all(|v| attentive.get(v) == Some(&true));
        let any = self.membership.iter().any(|v| attentive.get(v) == Some(&true));
        match self.phase {
            Phase::Idle | Phase::Advising => {
                self.phase = Phase::Idle;
                if any {
                    self.phase = Phase::Waiting;
                    self.wait_counter = 0;
                    self.try_request(all, &mut out);
                }
            }
            Phase::Waiting => self.try_request(all, &mut out),
            Phase::Collecting => {
                for m in inbound {
                    if let Message::Neighborhood { sender, ids } = m {
                        if self.membership.contains(sender) {
                            self.collected.insert(*sender, ids.clone());
                        }
                    }
                }
                self.phase = Phase::Waiting;
                if self.collected.len() == self.membership.len() {
                    let snap = Snapshot::from_reports(&self.collected);
                    if snap.is_connected() {
                        out.sends = self.advise(snap);
                        out.advised = !out.sends.is_empty();
                        self.phase = Phase::Advising;
                    }
                }
                self.collected.clear();
            }
        }
        out
    }

    fn try_request(&mut self, all: bool, out: &mut SupervisorOutput) {
        self.wait_counter += 1;
        if all {
            self.phase = Phase::Collecting;
            self.collected.clear();
            out.sends = self.membership.iter().map(|&v| (v, Message::RequestSnapshot)).collect();
        }
    }

    fn advise(&mut self, snap: Snapshot) -> Vec<(NodeId, Message)> {
        if snap.adjacency.len() < 2 {
            return vec![];
        }
        let root = *snap.adjacency.keys().next().unwrap();
        let advice = match self.mode {
            SupervisorMode::Absent => return vec![],
            SupervisorMode::Honest => compute_advice(&snap, root).unwrap_or_default(),
            SupervisorMode::Malicious(s) => self.malicious_advice(s, snap, root),
        };
        advice.into_iter().map(|(v, a)| (v, Message::Advice(a))).collect()
    }

    fn malicious_advice(&mut self, strategy: Strategy, snap: Snapshot, root: NodeId) -> BTreeMap<NodeId, AdviceMessage> {
        let honest = || compute_advice(&snap, root).unwrap_or_default();
        let non_roots: Vec<NodeId> = snap.nodes().into_iter().filter(|&v| v != root).collect();
        match strategy {
            Strategy::Split => split_advice(&snap, root),
            Strategy::Sybil => {
                let mut adv = honest();
                let victim = *non_roots.choose(&mut self.rng).unwrap();
                let top = self.membership.last().map_or(0, |v| v.0);
                let fake = NodeId(top.saturating_add(1 + self.rng.random_range(0..1000)));
                adv.get_mut(&victim).unwrap().par = Some(fake);
                adv
            }
            Strategy::WrongVids => {
                let mut adv = honest();
                if non_roots.len() >= 2 {
                    let pair: Vec<NodeId> = non_roots.choose_multiple(&mut self.rng, 2).copied().collect();
                    let vid = adv[&pair[0]].vid;
                    adv.get_mut(&pair[1]).unwrap().vid = vid;
                } else {
                    adv.get_mut(&non_roots[0]).unwrap().vid = 3;
                }
                adv
            }
            Strategy::Cycle => {
                let mut adv = honest();
                if non_roots.len() >= 2 {
                    let k = self.rng.random_range(2..=non_roots.len().min(4));
                    let mut ring: Vec<NodeId> = non_roots.choose_multiple(&mut self.rng, k).copied().collect();
                    ring.sort();
                    let vids: Vec<i64> = ring.iter().map(|v| adv[v].vid).collect();
                    for (i, v) in ring.iter().enumerate() {
                        adv.get_mut(v).unwrap().c_par = Some(vids[(i + 1) % k]);
                    }
                } else {
                    let v = non_roots[0];
                    let own = adv[&v].vid;
                    adv.get_mut(&v).unwrap().c_par = Some(own);
                }
                adv
            }
            Strategy::Partial => {
                let mut adv = honest();
                let mut nodes = snap.nodes();
                nodes.shuffle(&mut self.rng);
                let keep = self.rng.random_range(1..nodes.len());
                let kept: BTreeSet<NodeId> = nodes[..keep].iter().copied().collect();
                adv.retain(|v, _| kept.contains(v));
                adv
            }
            Strategy::Stale => match self.previous_snapshot.replace(snap) {
                None => BTreeMap::new(),
                Some(old) => {
                    let old_root = *old.adjacency.keys().next().unwrap();
                    compute_advice(&old, old_root).unwrap_or_default()
                }
            },
        }
    }
}

/// Two internally consistent advised paths: the BFS subtree whose size is
/// closest to n/2 is cut off and advised on its own.
fn split_advice(snap: &Snapshot, root: NodeId) -> BTreeMap<NodeId, AdviceMessage> {
    let parent = snap.bfs_tree(root);
    let n = snap.adjacency.len();
    let mut size: BTreeMap<NodeId, usize> = snap.nodes().into_iter().map(|v| (v, 1)).collect();
    let mut order: Vec<NodeId> = parent.keys().copied().collect();
    let depth = |mut v: NodeId| {
        let mut d = 0;
        while let Some(&p) = parent.get(&v) {
            v = p;
            d += 1;
        }
        d
    };
    order.sort_by_key(|&v| std::cmp::Reverse(depth(v)));
    for &v in &order {
        let s = size[&v];
        *size.get_mut(&parent[&v]).unwrap() += s;
    }
    let cut = *parent.keys().min_by_key(|&&v| ((2 * size[&v]).abs_diff(n), v)).unwrap();
    let mut inside = BTreeSet::from([cut]);
    for &v in order.iter().rev() {
        if inside.contains(&parent[&v]) {
            inside.insert(v);
        }
    }
    let mut part_a = BTreeMap::new();
    let mut part_b = BTreeMap::new();
    for (&v, &p) in &parent {
        if v == cut {
            continue;
        }
        if inside.contains(&v) {
            part_b.insert(v, p);
        } else {
            part_a.insert(v, p);
        }
    }
    let mut advice = BTreeMap::new();
    for (r, tree) in [(root, part_a), (cut, part_b)] {
        if tree.is_empty() {
            advice.insert(r, AdviceMessage { vid: 1, c_par: None, c_dist: 0, par: None, dist: 0 });
        } else if let Ok(a) = advise_tree(r, &tree) {
            advice.extend(a);
        }
    }
    advice
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn attentive(ids: &[u32], value: bool) -> BTreeMap<NodeId, bool> {
        ids.iter().map(|&v| (id(v), value)).collect()
    }

    #[test]
    fn three_node_path_advice() {
        let snap = Snapshot::from_edges([id(1), id(2), id(3)], &[(id(1), id(2)), (id(2), id(3))]);
        let adv = compute_advice(&snap, id(1)).unwrap();
        assert_eq!(adv[&id(1)], AdviceMessage { vid: 1, c_par: None, c_dist: 0, par: None, dist: 0 });
        assert_eq!(adv[&id(3)].vid, 2);
        assert_eq!(adv[&id(2)], AdviceMessage { vid: 3, c_par: Some(1), c_dist: 1, par: Some(id(1)), dist: 1 });
        assert_eq!(adv[&id(3)], AdviceMessage { vid: 2, c_par: Some(3), c_dist: 2, par: Some(id(2)), dist: 2 });
    }

    #[test]
    fn two_node_advice() {
        let snap = Snapshot::from_edges([id(4), id(9)], &[(id(4), id(9))]);
        let adv = compute_advice(&snap, id(4)).unwrap();
        assert_eq!(adv[&id(9)], AdviceMessage { vid: 2, c_par: Some(1), c_dist: 1, par: Some(id(4)), dist: 1 });
        assert!(adv.values().all(AdviceMessage::is_well_formed));
    }

    #[test]
    fn disconnected_snapshot_is_refused() {
        let snap = Snapshot::from_edges([id(1), id(2), id(3)], &[(id(1), id(2))]);
        assert_eq!(compute_advice(&snap, id(1)), Err(AdviceError::Disconnected));
    }

    #[test]
    fn absent_supervisor_is_silent() {
        let mut s = SupervisorState::new(SupervisorMode::Absent, [id(1), id(2)], 0);
        assert!(s.step(&[], &attentive(&[1, 2], true)).sends.is_empty());
    }

    #[test]
    fn waits_until_everyone_is_attentive() {
        let mut s = SupervisorState::new(SupervisorMode::Honest, [id(1), id(2)], 0);
        let mut report = attentive(&[1, 2], true);
        report.insert(id(2), false);
        for _ in 0..10 {
            assert!(s.step(&[], &report).sends.is_empty());
        }
        assert_eq!(s.phase, Phase::Waiting);
    }

    #[test]
    fn request_then_advice_next_round() {
        let mut s = SupervisorState::new(SupervisorMode::Honest, [id(1), id(2)], 0);
        let out = s.step(&[], &attentive(&[1, 2], true));
        assert_eq!(out.sends.len(), 2);
        assert!(out.sends.iter().all(|(_, m)| *m == Message::RequestSnapshot));
        let reports = vec![
            Message::Neighborhood { sender: id(1), ids: [id(2)].into() },
            Message::Neighborhood { sender: id(2), ids: BTreeSet::new() },
        ];
        let out = s.step(&reports, &attentive(&[1, 2], false));
        assert!(out.advised);
        assert_eq!(out.sends.len(), 2);
        assert_eq!(s.phase, Phase::Advising);
    }

    #[test]
    fn split_yields_two_well_formed_paths() {
        let ids: Vec<NodeId> = (1..=4).map(id).collect();
        let snap = Snapshot::from_edges(ids.clone(), &[(ids[0], ids[1]), (ids[1], ids[2]), (ids[2], ids[3])]);
        let adv = split_advice(&snap, ids[0]);
        assert_eq!(adv.len(), 4);
        assert!(adv.values().all(AdviceMessage::is_well_formed));
        assert_eq!(adv.values().filter(|a| a.vid == 1).count(), 2);
        assert_eq!(adv.values().filter(|a| a.vid == 2).count(), 2);
    }

    #[test]
    fn sybil_names_a_foreign_parent() {
        let mut s = SupervisorState::new(SupervisorMode::Malicious(Strategy::Sybil), [id(1), id(2)], 3);
        let snap = Snapshot::from_edges([id(1), id(2)], &[(id(1), id(2))]);
        let adv = s.malicious_advice(Strategy::Sybil, snap, id(1));
        let par = adv[&id(2)].par.unwrap();
        assert!(!s.membership.contains(&par));
    }

    #[test]
    fn partial_is_a_strict_subset() {
        let ids: Vec<NodeId> = (1..=6).map(id).collect();
        let edges: Vec<_> = ids.windows(2).map(|w| (w[0], w[1])).collect();
        let mut s = SupervisorState::new(SupervisorMode::Malicious(Strategy::Partial), ids.clone(), 5);
        for _ in 0..20 {
            let adv = s.malicious_advice(Strategy::Partial, Snapshot::from_edges(ids.clone(), &edges), ids[0]);
            assert!(!adv.is_empty() && adv.len() < ids.len());
        }
    }

    #[test]
    fn mode_round_trips_through_text() {
        for m in [SupervisorMode::Honest, SupervisorMode::Absent]
            .into_iter()
            .chain(Strategy::ALL.map(SupervisorMode::Malicious))
        {
            assert_eq!(m.to_string().parse::<SupervisorMode>(), Ok(m));
        }
        assert!("bogus".parse::<SupervisorMode>().is_err());
    }
}
