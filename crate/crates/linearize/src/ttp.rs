//! Sequential Tree-to-Path: turns a labelled rooted tree into a directed
//! Hamiltonian path whose consecutive vertices are within distance 3 in the
//! tree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree needs at least two vertices")]
    TooSmall,
    #[error("vertex {0} does not reach the root")]
    NotATree(NodeId),
    #[error("label of {0} breaks the depth parity rule")]
    BadLabel(NodeId),
    #[error("edge set is not a Hamiltonian path")]
    NotAPath,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledRootedTree {
    pub root: NodeId,
    pub parent: BTreeMap<NodeId, NodeId>,
    pub label: BTreeMap<NodeId, u8>,
}

impl LabelledRootedTree {
    pub fn vertices(&self) -> BTreeSet<NodeId> {
        std::iter::once(self.root).chain(self.parent.keys().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.parent.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Child sets, each in id order.
    pub fn children(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut children: BTreeMap<NodeId, Vec<NodeId>> =
            self.vertices().into_iter().map(|v| (v, Vec::new())).collect();
        for (&v, &p) in &self.parent {
            children.entry(p).or_default().push(v);
        }
        for c in children.values_mut() {
            c.sort();
        }
        children
    }

    pub fn root_label(&self) -> u8 {
        self.label[&self.root]
    }
}

/// Depth of every vertex, or an error if the parent map is not a tree
/// rooted at `root`.
fn depths(root: NodeId, parent: &BTreeMap<NodeId, NodeId>) -> Result<BTreeMap<NodeId, usize>, TreeError> {
    if parent.contains_key(&root) {
        return Err(TreeError::NotATree(root));
    }
    let mut depth = BTreeMap::from([(root, 0usize)]);
    for &start in parent.keys() {
        let mut chain = Vec::new();
        let mut v = start;
        while !depth.contains_key(&v) {
            if chain.len() > parent.len() {
                return Err(TreeError::NotATree(start));
            }
            chain.push(v);
            v = *parent.get(&v).ok_or(TreeError::NotATree(start))?;
        }
        let mut d = depth[&v];
        for &u in chain.iter().rev() {
            d += 1;
            depth.insert(u, d);
        }
    }
    Ok(depth)
}

/// Labels every vertex with (root_label + depth) mod 2.
pub fn label_tree(
    root: NodeId,
    parent: &BTreeMap<NodeId, NodeId>,
    root_label: u8,
) -> Result<LabelledRootedTree, TreeError> {
    let depth = depths(root, parent)?;
    let label = depth.iter().map(|(&v, &d)| (v, ((root_label as usize + d) % 2) as u8)).collect();
    Ok(LabelledRootedTree { root, parent: parent.clone(), label })
}

fn check_labels(tree: &LabelledRootedTree) -> Result<(), TreeError> {
    let depth = depths(tree.root, &tree.parent)?;
    let root_label = *tree.label.get(&tree.root).ok_or(TreeError::BadLabel(tree.root))?;
    for (v, d) in depth {
        let expected = ((root_label as usize + d) % 2) as u8;
        if tree.label.get(&v) != Some(&expected) {
            return Err(TreeError::BadLabel(v));
        }
    }
    Ok(())
}

/// The directed edge contributed by a non-root vertex.
fn path_edge(v: NodeId, tree: &LabelledRootedTree, children: &BTreeMap<NodeId, Vec<NodeId>>) -> (NodeId, NodeId) {
    let p = tree.parent[&v];
    let siblings = &children[&p];
    let c = &children[&v];
    let min_rsib = siblings.iter().copied().find(|&s| s > v);
    let max_lsib = siblings.iter().copied().rev().find(|&s| s < v);
    if tree.label[&v] == 1 {
        match (min_rsib, c.last()) {
            (None, None) => (p, v),
            (None, Some(&max_c)) => (p, max_c),
            (Some(r), None) => (r, v),
            (Some(r), Some(&max_c)) => (r, max_c),
        }
    } else {
        match (max_lsib, c.first()) {
            (None, None) => (v, p),
            (None, Some(&min_c)) => (min_c, p),
            (Some(l), None) => (v, l),
            (Some(l), Some(&min_c)) => (min_c, l),
        }
    }
}

/// Runs the transformation and chains the resulting edges from Beg to End.
pub fn tree_to_path(tree: &LabelledRootedTree) -> Result<Vec<NodeId>, TreeError> {
    if tree.len() < 2 {
        return Err(TreeError::TooSmall);
    }
    check_labels(tree)?;
    let children = tree.children();
    let mut succ = BTreeMap::new();
    let mut has_pred = BTreeSet::new();
    for &v in tree.parent.keys() {
        let (a, b) = path_edge(v, tree, &children);
        if succ.insert(a, b).is_some() || !has_pred.insert(b) {
            return Err(TreeError::NotAPath);
        }
    }
    let vertices = tree.vertices();
    let mut starts = vertices.iter().filter(|v| !has_pred.contains(v));
    let (Some(&beg), None) = (starts.next(), starts.next()) else {
        return Err(TreeError::NotAPath);
    };
    let mut path = vec![beg];
    while let Some(&next) = succ.get(path.last().unwrap()) {
        if path.len() > vertices.len() {
            return Err(TreeError::NotAPath);
        }
        path.push(next);
    }
    if path.len() != vertices.len() {
        return Err(TreeError::NotAPath);
    }
    Ok(path)
}

/// Hamiltonian over the tree's vertices, with Beg/End fixed by the root
/// label: label 0 gives (root, min C(root)), label 1 gives (max C(root), root).
pub fn oracle_is_valid_output(tree: &LabelledRootedTree, path: &[NodeId]) -> bool {
    let vertices = tree.vertices();
    let seen: BTreeSet<NodeId> = path.iter().copied().collect();
    if path.len() != vertices.len() || seen != vertices {
        return false;
    }
    let root_children = &tree.children()[&tree.root];
    let (Some(&min_c), Some(&max_c)) = (root_children.first(), root_children.last()) else {
        return false;
    };
    let (beg, end) = (path[0], path[path.len() - 1]);
    match tree.label.get(&tree.root) {
        Some(0) => beg == tree.root && end == min_c,
        Some(1) => beg == max_c && end == tree.root,
        _ => false,
    }
}

/// Number of Prüfer codes, i.e. labelled unrooted trees, on `n` vertices.
pub fn prufer_count(n: usize) -> u64 {
    if n < 2 {
        0
    } else {
        (n as u64).pow(n as u32 - 2)
    }
}

/// Edges of the `code`-th labelled tree on vertices 0..n.
pub fn prufer_tree(n: usize, code: u64) -> Vec<(usize, usize)> {
    let mut seq = Vec::with_capacity(n.saturating_sub(2));
    let mut c = code;
    for _ in 0..n.saturating_sub(2) {
        seq.push((c % n as u64) as usize);
        c /= n as u64;
    }
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Every root choice and both root labels for one unrooted tree.
pub fn rooted_variants(n: usize, edges: &[(usize, usize)]) -> Vec<LabelledRootedTree> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut out = Vec::with_capacity(2 * n);
    for root in 0..n {
        let mut parent = BTreeMap::new();
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent.insert(NodeId(v as u32), NodeId(u as u32));
                    queue.push_back(v);
                }
            }
        }
        for root_label in [0, 1] {
            out.push(label_tree(NodeId(root as u32), &parent, root_label).expect("BFS parents form a tree"));
        }
    }
    out
}

/// All rooted labelled trees on exactly `n` vertices (ids 0..n), each with
/// root label 0 and 1: 2·n^(n−1) instances.
pub fn enumerate_labelled_trees_of_size(n: usize) -> impl Iterator<Item = LabelledRootedTree> {
    (0..prufer_count(n)).flat_map(move |code| rooted_variants(n, &prufer_tree(n, code)))
}

/// All rooted labelled trees with 2..=max_n vertices.
pub fn enumerate_labelled_trees(max_n: usize) -> impl Iterator<Item = LabelledRootedTree> {
    (2..=max_n).flat_map(enumerate_labelled_trees_of_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn parents(pairs: &[(u32, u32)]) -> BTreeMap<NodeId, NodeId> {
        pairs.iter().map(|&(c, p)| (id(c), id(p))).collect()
    }

    #[test]
    fn labels_follow_depth_parity() {
        let path = label_tree(id(0), &parents(&[(1, 0), (2, 1)]), 0).unwrap();
        assert_eq!(path.label, BTreeMap::from([(id(0), 0), (id(1), 1), (id(2), 0)]));

        let star = label_tree(id(0), &parents(&[(1, 0), (2, 0), (3, 0)]), 0).unwrap();
        assert!((1..=3).all(|v| star.label[&id(v)] == 1));

        let edge = label_tree(id(0), &parents(&[(1, 0)]), 1).unwrap();
        assert_eq!(edge.label, BTreeMap::from([(id(0), 1), (id(1), 0)]));
    }

    #[test]
    fn label_tree_rejects_cycles() {
        assert!(matches!(label_tree(id(0), &parents(&[(1, 2), (2, 1)]), 0), Err(TreeError::NotATree(_))));
    }

    #[test]
    fn star_reverses_children() {
        let tree = label_tree(id(0), &parents(&[(1, 0), (2, 0), (3, 0)]), 0).unwrap();
        let path = tree_to_path(&tree).unwrap();
        assert_eq!(path, vec![id(0), id(3), id(2), id(1)]);
        assert!(oracle_is_valid_output(&tree, &path));
        assert!(!oracle_is_valid_output(&tree, &[id(0), id(1), id(2), id(3)]));
        assert!(!oracle_is_valid_output(&tree, &[id(0), id(3), id(2)]));
    }

    #[test]
    fn single_child() {
        let tree = label_tree(id(0), &parents(&[(1, 0)]), 0).unwrap();
        assert_eq!(tree_to_path(&tree).unwrap(), vec![id(0), id(1)]);
    }

    #[test]
    fn grandchildren_case() {
        // r=0, a=1 under r, b1=2 < b2=3 under a.
        let tree = label_tree(id(0), &parents(&[(1, 0), (2, 1), (3, 1)]), 0).unwrap();
        assert_eq!(tree_to_path(&tree).unwrap(), vec![id(0), id(3), id(2), id(1)]);
    }

    #[test]
    fn rejects_singleton_and_bad_labels() {
        let single = LabelledRootedTree { root: id(0), parent: BTreeMap::new(), label: BTreeMap::from([(id(0), 0)]) };
        assert_eq!(tree_to_path(&single), Err(TreeError::TooSmall));
        let mut tree = label_tree(id(0), &parents(&[(1, 0)]), 0).unwrap();
        tree.label.insert(id(1), 0);
        assert_eq!(tree_to_path(&tree), Err(TreeError::BadLabel(id(1))));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_labelled_trees(1).count(), 0);
        assert_eq!(enumerate_labelled_trees(2).count(), 4);
        let size3: Vec<_> = enumerate_labelled_trees_of_size(3).collect();
        assert_eq!(size3.iter().filter(|t| t.root_label() == 0).count(), 9);
        assert_eq!(size3.iter().filter(|t| t.root_label() == 1).count(), 9);
        assert_eq!(enumerate_labelled_trees(3).count(), 4 + 18);
    }

    #[test]
    fn enumeration_has_no_duplicates() {
        let trees: Vec<_> = enumerate_labelled_trees_of_size(5).collect();
        let distinct: BTreeSet<_> = trees.iter().map(|t| (t.root, t.parent.clone(), t.root_label())).collect();
        assert_eq!(distinct.len(), trees.len());
        assert_eq!(trees.len(), 2 * 5usize.pow(4));
    }
}
