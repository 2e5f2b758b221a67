//! Coarse-to-fine decoding over the type tree.
//!
//! Starting at ENTITY, a child is emitted when it scores strictly above its
//! parent; at most `k[l]` such children are kept per parent at level `l`.
//! Every emitted node's parent is emitted (or is ENTITY), so the output always
//! satisfies the hierarchical property.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{LabelSet, NodeId, TypeTree};
use crate::scorer::ScoreVector;

/// Maximum children admitted per parent, per level (`k[0]` is level 1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchingFactors(pub Vec<usize>);

impl BranchingFactors {
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if k.is_empty() || k.contains(&0) {
            return Err(Error::Domain(format!(
                "branching factors must be >= 1 per level, got {k:?}"
            )));
        }
        Ok(BranchingFactors(k))
    }

    /// `k = (1, …, 1)`: single-path decoding.
    pub fn single_path(depth: usize) -> Self {
        BranchingFactors(vec![1; depth.max(1)])
    }

    /// No pruning at any level.
    pub fn unbounded(depth: usize) -> Self {
        BranchingFactors(vec![usize::MAX; depth.max(1)])
    }

    /// The limit for children at `level` (1-based).
    pub fn at(&self, level: usize) -> usize {
        self.0[level - 1]
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for BranchingFactors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&k| if k == usize::MAX { "inf".into() } else { k.to_string() })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Decodes a label set from per-type scores.
pub fn hier_type_dec(tree: &TypeTree, scores: &ScoreVector, k: &BranchingFactors) -> Result<LabelSet> {
    if scores.len() != tree.len() {
        return Err(Error::Contract(format!(
            "score vector has {} entries for a tree of {} nodes",
            scores.len(),
            tree.len()
        )));
    }
    if k.levels() < tree.depth() {
        return Err(Error::Contract(format!(
            "{} branching factors for a tree of depth {}",
            k.levels(),
            tree.depth()
        )));
    }
    let mut out = LabelSet::new();
    let mut queue = VecDeque::from([tree.root()]);
    while let Some(y) = queue.pop_front() {
        if tree.children(y).is_empty() {
            continue;
        }
        let threshold = scores[y];
        let mut passing: Vec<NodeId> = tree
            .children(y)
            .iter()
            .copied()
            .filter(|&z| scores[z] > threshold)
            .collect();
        // higher score first; node order is canonical-path order
        passing.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        passing.truncate(k.at(tree.level(y) + 1));
        for z in passing {
            out.insert(z);
            queue.push_back(z);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aida_like() -> TypeTree {
        TypeTree::parse([
            "/per/police/officer",
            "/per/police/chief",
            "/per/artist",
            "/org/government",
            "/loc",
        ])
        .unwrap()
    }

    fn scores(t: &TypeTree, pairs: &[(&str, f64)], default: f64) -> ScoreVector {
        let mut v = vec![default; t.len()];
        for (n, s) in pairs {
            v[t.lookup(n).unwrap().0] = *s;
        }
        ScoreVector(v)
    }

    #[test]
    fn nothing_beats_root() {
        let t = aida_like();
        let s = scores(&t, &[("/", 1.0)], 0.0);
        let out = hier_type_dec(&t, &s, &BranchingFactors::unbounded(3)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn equality_excludes_child() {
        let t = aida_like();
        let s = scores(&t, &[("/", 0.0), ("/per", 0.0)], -1.0);
        let out = hier_type_dec(&t, &s, &BranchingFactors::unbounded(3)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn single_path_with_unit_branching() {
        let t = aida_like();
        let s = scores(
            &t,
            &[
                ("/", 0.0),
                ("/per", 2.0),
                ("/org", 1.5),
                ("/per/police", 3.0),
                ("/per/artist", 2.5),
                ("/per/police/officer", 4.0),
                ("/per/police/chief", 5.0),
            ],
            -9.0,
        );
        let out = hier_type_dec(&t, &s, &BranchingFactors::single_path(3)).unwrap();
        assert_eq!(
            t.label_names(&out),
            ["/per", "/per/police", "/per/police/chief"]
        );
        let out = hier_type_dec(&t, &s, &BranchingFactors::new(vec![2, 2, 1]).unwrap()).unwrap();
        assert_eq!(
            t.label_names(&out),
            ["/org", "/per", "/per/artist", "/per/police", "/per/police/chief"]
        );
    }

    #[test]
    fn ties_prefer_canonical_order() {
        let t = aida_like();
        let s = scores(&t, &[("/", 0.0), ("/per", 1.0), ("/org", 1.0), ("/loc", 1.0)], -1.0);
        let out = hier_type_dec(&t, &s, &BranchingFactors::single_path(3)).unwrap();
        assert_eq!(t.label_names(&out), ["/loc"]);
    }

    #[test]
    fn contract_errors() {
        let t = aida_like();
        assert!(matches!(
            hier_type_dec(&t, &ScoreVector(vec![0.0; 2]), &BranchingFactors::single_path(3)),
            Err(Error::Contract(_))
        ));
        assert!(hier_type_dec(&t, &ScoreVector(vec![0.0; t.len()]), &BranchingFactors::single_path(2)).is_err());
        assert!(BranchingFactors::new(vec![1, 0]).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(BranchingFactors(vec![2, 1]).to_string(), "(2,1)");
        assert_eq!(BranchingFactors::unbounded(2).to_string(), "(inf,inf)");
    }
}
