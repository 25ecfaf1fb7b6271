//! Seeded initial topologies. Every generator returns a weakly connected
//! set of directed knowledge edges (u knows v) over ids 1..=n.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topology {
    RandomConnected,
    Path,
    Star,
    TwoClusters,
    FarPair,
}

impl Topology {
    pub const ALL: [Topology; 5] =
        [Topology::RandomConnected, Topology::Path, Topology::Star, Topology::TwoClusters, Topology::FarPair];
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::RandomConnected => "random_connected",
            Topology::Path => "path",
            Topology::Star => "star",
            Topology::TwoClusters => "two_clusters",
            Topology::FarPair => "far_pair",
        })
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.replace('-', "_").as_str() {
            "random_connected" => Topology::RandomConnected,
            "path" => Topology::Path,
            "star" => Topology::Star,
            "two_clusters" => Topology::TwoClusters,
            "far_pair" => Topology::FarPair,
            _ => return Err(format!("unknown topology `{s}`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialGraph {
    pub ids: Vec<NodeId>,
    pub edges: Vec<(NodeId, NodeId)>,
    /// Designated far pair, set by the far_pair generator.
    pub pair: Option<(NodeId, NodeId)>,
}

fn orient(rng: &mut ChaCha8Rng, u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if rng.random_bool(0.5) {
        (u, v)
    } else {
        (v, u)
    }
}

/// Uniform random spanning tree over `nodes` (Aldous-Broder walk on the
/// complete graph).
fn random_tree(rng: &mut ChaCha8Rng, nodes: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    let k = nodes.len();
    if k < 2 {
        return vec![];
    }
    let mut visited = vec![false; k];
    let mut cur = rng.random_range(0..k);
    visited[cur] = true;
    let mut left = k - 1;
    let mut edges = Vec::with_capacity(k - 1);
    while left > 0 {
        let mut next = rng.random_range(0..k - 1);
        if next >= cur {
            next += 1;
        }
        if !visited[next] {
            visited[next] = true;
            left -= 1;
            edges.push(orient(rng, nodes[cur], nodes[next]));
        }
        cur = next;
    }
    edges
}

fn extra_edges(rng: &mut ChaCha8Rng, nodes: &[NodeId], m: usize) -> Vec<(NodeId, NodeId)> {
    if nodes.len() < 2 {
        return vec![];
    }
    (0..m)
        .map(|_| {
            let pick: Vec<&NodeId> = nodes.choose_multiple(rng, 2).collect();
            orient(rng, *pick[0], *pick[1])
        })
        .collect()
}

fn chain(rng: &mut ChaCha8Rng, nodes: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    nodes.windows(2).map(|w| orient(rng, w[0], w[1])).collect()
}

fn clique(rng: &mut ChaCha8Rng, nodes: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    let mut edges = vec![];
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            edges.push(orient(rng, u, v));
        }
    }
    edges
}

pub fn generate(topology: Topology, n: usize, rng: &mut ChaCha8Rng) -> InitialGraph {
    let ids: Vec<NodeId> = (1..=n as u32).map(NodeId).collect();
    let mut order = ids.clone();
    order.shuffle(rng);
    let mut pair = None;
    let edges = match topology {
        Topology::RandomConnected => {
            let mut e = random_tree(rng, &order);
            e.extend(extra_edges(rng, &order, n / 2));
            e
        }
        Topology::Path => chain(rng, &order),
        Topology::Star => {
            let (center, rest) = order.split_first().expect("n >= 1");
            rest.iter().map(|&v| orient(rng, *center, v)).collect::<Vec<_>>()
        }
        Topology::TwoClusters => {
            let (a, b) = order.split_at(n / 2);
            let mut e = random_tree(rng, a);
            e.extend(random_tree(rng, b));
            e.extend(extra_edges(rng, a, a.len() / 2));
            e.extend(extra_edges(rng, b, b.len() / 2));
            if let (Some(&u), Some(&v)) = (a.choose(rng), b.choose(rng)) {
                e.push(orient(rng, u, v));
            }
            e
        }
        Topology::FarPair => {
            let (layout, p) = far_pair_layout(rng, n);
            pair = p;
            let k = (n / 4).max(1);
            let mut e = vec![];
            if n >= 2 {
                e.extend(clique(rng, &layout[..k]));
                e.extend(clique(rng, &layout[n - k..]));
                e.extend(chain(rng, &layout[k - 1..n - k + 1]));
            }
            e
        }
    };
    InitialGraph { ids, edges, pair }
}

/// Node order for far_pair: clique A, connecting path, clique B. The pair
/// holds consecutive ids at the two far ends.
fn far_pair_layout(rng: &mut ChaCha8Rng, n: usize) -> (Vec<NodeId>, Option<(NodeId, NodeId)>) {
    if n < 2 {
        return ((1..=n as u32).map(NodeId).collect(), None);
    }
    let a = rng.random_range(1..n as u32);
    let (u, v) = (NodeId(a), NodeId(a + 1));
    let mut rest: Vec<NodeId> = (1..=n as u32).map(NodeId).filter(|&x| x != u && x != v).collect();
    rest.shuffle(rng);
    let mut layout = Vec::with_capacity(n);
    layout.push(u);
    layout.extend(rest);
    layout.push(v);
    (layout, Some((u, v)))
}
