//! Structural detectors over a configuration.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{CommGraph, Configuration, EdgeKind, Message, NodeId, NodeState};

pub const C_EXTRA: usize = 2;

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

pub fn floor_log2(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

/// Sorted-path edges over the configuration's ids.
pub fn sorted_path_edges(config: &Configuration) -> Vec<(NodeId, NodeId)> {
    config.nodes.windows(2).map(|w| (w[0].id, w[1].id)).collect()
}

pub fn explicit_degree(s: &NodeState) -> usize {
    s.explicit_ids().len()
}

/// Every sorted-path pair is joined by an explicit edge in at least one
/// direction and no node exceeds its sorted-path degree by more than
/// `c_extra·(⌈log₂ n⌉ + 1)`.
pub fn is_legal(config: &Configuration, c_extra: usize) -> bool {
    let n = config.nodes.len();
    let slack = c_extra * (ceil_log2(n) + 1);
    let has = |u: &NodeState, v: NodeId| u.explicit_ids().contains(&v);
    let edges_ok = config.nodes.windows(2).all(|w| has(&w[0], w[1].id) || has(&w[1], w[0].id));
    let degree_ok = config.nodes.iter().enumerate().all(|(i, s)| {
        let star_deg = usize::from(i > 0) + usize::from(i + 1 < n);
        explicit_degree(s) <= star_deg + slack
    });
    edges_ok && degree_ok
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Backbone {
    /// Members in spine order, v1 first.
    pub members: Vec<NodeId>,
    pub winged: bool,
    pub flyover: bool,
    pub correctly_configured: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Structures {
    pub backbones: Vec<Backbone>,
    pub ouroboroi: Vec<Vec<NodeId>>,
    pub lost: Vec<NodeId>,
}

impl Structures {
    /// A single correctly configured flyover over all `n` nodes.
    pub fn is_single_flyover(&self, n: usize) -> bool {
        self.backbones.len() == 1
            && self.backbones[0].members.len() == n
            && self.backbones[0].flyover
            && self.backbones[0].correctly_configured
            && self.lost.is_empty()
            && self.ouroboroi.is_empty()
    }
}

/// Partitions the dual-state nodes by the mutual level-1 relation
/// x.S_r(1) = y ∧ y.S_l(1) = x. Chains of at least two nodes whose ends
/// point outside (or nowhere) are backbones; rings and chains whose end
/// points back inside are ouroboroi; everything else is lost.
pub fn classify_structures(config: &Configuration) -> Structures {
    let dual: BTreeMap<NodeId, &NodeState> =
        config.nodes.iter().filter(|s| !s.fly.s_empty()).map(|s| (s.id, s)).collect();
    let next_of = |x: &NodeState| {
        x.fly.s_r(1).filter(|y| dual.get(y).is_some_and(|ys| ys.fly.s_l(1) == Some(x.id)))
    };
    let prev_of = |x: &NodeState| {
        x.fly.s_l(1).filter(|y| dual.get(y).is_some_and(|ys| ys.fly.s_r(1) == Some(x.id)))
    };

    let mut out = Structures::default();
    let mut seen = BTreeSet::new();
    for (&start, &s) in &dual {
        if seen.contains(&start) {
            continue;
        }
        // Walk left to the chain head, detecting rings.
        let mut head = s;
        let mut ring = false;
        let mut steps = 0;
        while let Some(p) = prev_of(head) {
            head = dual[&p];
            steps += 1;
            if head.id == start || steps > dual.len() {
                ring = true;
                break;
            }
        }
        let mut members = vec![head.id];
        let mut cur = head;
        while let Some(nx) = next_of(cur) {
            if members.contains(&nx) {
                ring = true;
                break;
            }
            members.push(nx);
            cur = dual[&nx];
        }
        seen.extend(members.iter().copied());
        if ring {
            out.ouroboroi.push(members);
            continue;
        }
        if members.len() < 2 {
            out.lost.push(start);
            continue;
        }
        let set: BTreeSet<NodeId> = members.iter().copied().collect();
        let first = dual[&members[0]];
        let last = dual[members.last().unwrap()];
        let left_wing = first.fly.s_l(1);
        let right_wing = last.fly.s_r(1);
        if left_wing.is_some_and(|w| set.contains(&w)) || right_wing.is_some_and(|w| set.contains(&w)) {
            out.ouroboroi.push(members);
            continue;
        }
        let nodes: Vec<&NodeState> = members.iter().map(|v| dual[v]).collect();
        out.backbones.push(Backbone {
            winged: left_wing.is_some() || right_wing.is_some(),
            flyover: is_flyover(&nodes),
            correctly_configured: is_correctly_configured(&nodes),
            members,
        });
    }
    out.lost.sort();
    out
}

/// Consecutive vIDs along the spine and every power-of-two shortcut in
/// place in both directions.
pub fn is_flyover(b: &[&NodeState]) -> bool {
    let k = b.len();
    let vids = b.windows(2).all(|w| w[1].fly.vid == w[0].fly.vid + 1);
    let cube = (0..k.saturating_sub(1)).all(|i| {
        (1..=floor_log2(k - 1 - i) + 1).all(|j| {
            let step = 1usize << (j - 1);
            let Some(target) = b.get(i + step) else { return false };
            b[i].fly.s_r(j) == Some(target.id) && target.fly.s_l(j) == Some(b[i].id)
        })
    });
    vids && cube
}

/// vIDs are positions, flyID is the head, and the certificate fields match
/// the sorted path over the members rooted at the head.
pub fn is_correctly_configured(b: &[&NodeState]) -> bool {
    let Some(head) = b.first() else { return false };
    let mut sorted: Vec<NodeId> = b.iter().map(|s| s.id).collect();
    sorted.sort();
    let rank = |v: NodeId| sorted.binary_search(&v).unwrap();
    let vid_of: BTreeMap<NodeId, i64> = b.iter().map(|s| (s.id, s.fly.vid)).collect();
    let root_rank = rank(head.id);
    b.iter().enumerate().all(|(i, s)| {
        let r = rank(s.id);
        let ids_ok = s.fly.vid == i as i64 + 1 && s.fly.fly_id == head.id;
        let dist_ok = s.fly.c_dist == r.abs_diff(root_rank) as i64;
        let par_ok = r == root_rank || {
            let toward = if r > root_rank { r - 1 } else { r + 1 };
            s.fly.c_par == vid_of[&sorted[toward]]
        };
        let mut star = vec![];
        if r > 0 {
            star.push(sorted[r - 1]);
        }
        if r + 1 < sorted.len() {
            star.push(sorted[r + 1]);
        }
        let cert_ok = star.iter().all(|v| s.fly.c_ids.contains(v));
        ids_ok && dist_ok && par_ok && cert_ok
    })
}

/// Ids a node may legitimately use in a round: its memory at round start,
/// ids carried by node-originated messages delivered this round, itself.
pub fn allowed_ids(start: &NodeState) -> BTreeSet<NodeId> {
    let mut ids = start.explicit_ids();
    ids.insert(start.id);
    for m in start.channel.iter().filter(|m| !m.from_supervisor()) {
        ids.extend(m.ids());
    }
    ids
}

/// Counts ids stored or sent by a node that it had no legitimate way to
/// learn this round.
pub fn provenance_violations(
    start: &NodeState,
    end: &NodeState,
    outbound: &[(NodeId, Message)],
    to_supervisor: Option<&Message>,
) -> usize {
    let allowed = allowed_ids(start);
    let stored = end.explicit_ids().into_iter().filter(|v| !allowed.contains(v)).count();
    let sent: usize = outbound
        .iter()
        .map(|(to, m)| usize::from(!allowed.contains(to)) + m.ids().iter().filter(|v| !allowed.contains(v)).count())
        .sum();
    let reported = to_supervisor.map_or(0, |m| m.ids().iter().filter(|v| !allowed.contains(v)).count());
    stored + sent + reported
}

/// dist_t(u, v) ≥ D / 2^t.
pub fn distance_floor_holds(graph: &CommGraph, pair: (NodeId, NodeId), initial: usize, round: u64) -> bool {
    let Some(d) = graph.undirected_distance(pair.0, pair.1) else { return true };
    let scale = 1u128.checked_shl(round.min(127) as u32).unwrap_or(u128::MAX);
    (d as u128) * scale >= initial as u128
}

/// Largest undirected distance between sorted-path neighbours.
pub fn max_sorted_pair_distance(graph: &CommGraph) -> usize {
    let mut nodes = graph.nodes.clone();
    nodes.sort();
    nodes
        .windows(2)
        .filter_map(|w| graph.undirected_distance(w[0], w[1]))
        .max()
        .unwrap_or(0)
}

pub fn has_explicit(graph: &CommGraph, u: NodeId, v: NodeId) -> bool {
    graph.has_edge(u, v, EdgeKind::Explicit)
}
