#![allow(dead_code)]

use hiertype::{LabelSet, NodeId, ScoreVector, TypeTree};
use rand::Rng;

/// Random tree with at most `max_nodes` nodes (ENTITY included) and depth at
/// most `max_depth`, grown by attaching each new node to a random shallower
/// node.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize, max_depth: usize) -> TypeTree {
    let n = rng.random_range(2..=max_nodes);
    let mut paths: Vec<(String, usize)> = vec![(String::new(), 0)];
    for i in 1..n {
        let candidates: Vec<usize> = (0..paths.len()).filter(|&j| paths[j].1 < max_depth).collect();
        let p = candidates[rng.random_range(0..candidates.len())];
        let path = format!("{}/t{i}", paths[p].0);
        let depth = paths[p].1 + 1;
        paths.push((path, depth));
    }
    TypeTree::parse(paths[1..].iter().map(|(p, _)| p.as_str())).unwrap()
}

pub fn random_scores<R: Rng>(rng: &mut R, tree: &TypeTree) -> ScoreVector {
    ScoreVector((0..tree.len()).map(|_| rng.random_range(-3.0..3.0)).collect())
}

/// Random ancestor-closed label set, non-empty.
pub fn random_gold<R: Rng>(rng: &mut R, tree: &TypeTree) -> LabelSet {
    let nodes: Vec<NodeId> = tree.nodes().filter(|&y| y != tree.root()).collect();
    let mut set = LabelSet::new();
    set.insert(nodes[rng.random_range(0..nodes.len())]);
    if rng.random_bool(0.4) {
        set.insert(nodes[rng.random_range(0..nodes.len())]);
    }
    tree.ancestor_closure(&set)
}

/// Every emitted node has its whole ancestor chain strictly increasing in
/// score: the exhaustive reference for unbounded decoding.
pub fn ancestor_chain_oracle(tree: &TypeTree, scores: &ScoreVector) -> LabelSet {
    tree.nodes()
        .filter(|&z| z != tree.root())
        .filter(|&z| {
            let mut a = z;
            while let Some(p) = tree.parent(a) {
                if scores[a] <= scores[p] {
                    return false;
                }
                a = p;
            }
            true
        })
        .collect()
}
