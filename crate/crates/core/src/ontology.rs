//! Type ontologies: path parsing, the augmented type tree, and gold label
//! normalization.
//!
//! Every ontology is rooted at the synthetic ENTITY node (`/`), which turns a
//! forest of top-level types into a single tree. Under the exclusive reading of
//! partial type paths, each branch node additionally receives a synthetic
//! `<other>` child.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Segment name of the synthetic OTHER node.
pub const OTHER: &str = "<other>";

/// How a gold label without any labelled subtype is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PartialPathMode {
    /// The mention is of the type and of none of its subtypes.
    #[default]
    Exclusive,
    /// The mention is of the type; its subtypes are unknown.
    Undefined,
}

impl fmt::Display for PartialPathMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartialPathMode::Exclusive => f.write_str("exclusive"),
            PartialPathMode::Undefined => f.write_str("undefined"),
        }
    }
}

impl FromStr for PartialPathMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclusive" => Ok(PartialPathMode::Exclusive),
            "undefined" => Ok(PartialPathMode::Undefined),
            other => Err(Error::Config(format!(
                "mode must be \"exclusive\" or \"undefined\", got {other:?}"
            ))),
        }
    }
}

/// A `/`-separated type path. The empty path is the ENTITY root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypePath {
    segments: Vec<String>,
}

impl TypePath {
    pub fn root() -> Self {
        TypePath {
            segments: Vec::new(),
        }
    }

    /// Parses a canonical path such as `/person/artist`. `/` parses to the root.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| "path must start with '/'".to_string())?;
        if rest.is_empty() {
            return Ok(TypePath::root());
        }
        let mut segments = Vec::new();
        for seg in rest.split('/') {
            if seg.is_empty() {
                return Err("empty segment".into());
            }
            if seg.trim() != seg {
                return Err(format!("segment {seg:?} has surrounding whitespace"));
            }
            segments.push(seg.to_string());
        }
        Ok(TypePath { segments })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.segments.len()
    }

    pub fn is_other(&self) -> bool {
        self.segments.last().is_some_and(|s| s == OTHER)
    }

    pub fn parent(&self) -> Option<TypePath> {
        if self.is_root() {
            return None;
        }
        Some(TypePath {
            segments: self.segments[..self.segments.len() - 1].to_vec(),
        })
    }

    pub fn child(&self, segment: &str) -> TypePath {
        let mut segments = self.segments.clone();
        segments.push(segment.to_string());
        TypePath { segments }
    }

    /// All proper ancestors except the root, shallowest first.
    fn prefixes(&self) -> impl Iterator<Item = TypePath> + '_ {
        (1..self.segments.len()).map(move |n| TypePath {
            segments: self.segments[..n].to_vec(),
        })
    }
}

impl fmt::Display for TypePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return f.write_str("/");
        }
        for s in &self.segments {
            write!(f, "/{s}")?;
        }
        Ok(())
    }
}

/// Index of a node inside a [`TypeTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// An immutable type tree rooted at ENTITY.
///
/// Nodes are indexed in lexicographic order of their canonical path, so the
/// root is always `NodeId(0)` and node order doubles as the deterministic
/// tie-break everywhere else.
#[derive(Debug, Clone)]
pub struct TypeTree {
    paths: Vec<TypePath>,
    names: Vec<String>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    level: Vec<usize>,
    depth: usize,
    other_augmented: bool,
    index: HashMap<String, NodeId>,
}

impl TypeTree {
    /// Parses an ontology given as lines of type paths. Blank lines and lines
    /// starting with `#` are skipped. Line numbers in errors are 1-based.
    pub fn parse<'a, I>(lines: I) -> Result<TypeTree>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut paths = BTreeSet::new();
        for (i, raw) in lines.into_iter().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: String| Error::MalformedPath {
                line: i + 1,
                path: line.to_string(),
                reason,
            };
            let path = TypePath::parse(line).map_err(malformed)?;
            if path.is_root() {
                return Err(malformed("\"/\" is reserved for the ENTITY root".into()));
            }
            if path.segments.iter().any(|s| s == OTHER) {
                return Err(malformed(format!("segment {OTHER:?} is reserved")));
            }
            paths.extend(path.prefixes());
            paths.insert(path);
        }
        if paths.is_empty() {
            return Err(Error::Domain("ontology contains no types".into()));
        }
        paths.insert(TypePath::root());
        Ok(TypeTree::build(paths, false))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<TypeTree> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TypeTree::parse(text.lines()).map_err(|e| match e {
            Error::MalformedPath { line, path: p, reason } => Error::Input {
                file: path.to_path_buf(),
                line,
                reason: format!("malformed type path {p:?}: {reason}"),
            },
            other => other,
        })
    }

    fn build(paths: BTreeSet<TypePath>, other_augmented: bool) -> TypeTree {
        let mut ordered: Vec<(String, TypePath)> =
            paths.into_iter().map(|p| (p.to_string(), p)).collect();
        ordered.sort_by(|a, b| a.0.cmp(&b.0));

        let index: HashMap<String, NodeId> = ordered
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (name.clone(), NodeId(i)))
            .collect();
        let n = ordered.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut level = vec![0; n];
        for (i, (_, path)) in ordered.iter().enumerate() {
            level[i] = path.depth();
            if let Some(p) = path.parent() {
                let pid = index[&p.to_string()];
                parent[i] = Some(pid);
                children[pid.0].push(NodeId(i));
            }
        }
        let depth = level.iter().copied().max().unwrap_or(0);
        let (names, paths) = ordered.into_iter().unzip();
        TypeTree {
            paths,
            names,
            parent,
            children,
            level,
            depth,
            other_augmented,
            index,
        }
    }

    /// Returns a copy of the tree where every node with at least one child
    /// (ENTITY included) gains a synthetic `<other>` child.
    pub fn augment_other(&self) -> Result<TypeTree> {
        if self.other_augmented {
            return Err(Error::State("type tree is already OTHER-augmented".into()));
        }
        let mut paths: BTreeSet<TypePath> = self.paths.iter().cloned().collect();
        for (i, kids) in self.children.iter().enumerate() {
            if !kids.is_empty() {
                paths.insert(self.paths[i].child(OTHER));
            }
        }
        Ok(TypeTree::build(paths, true))
    }

    /// Parses and, under the exclusive mode, augments.
    pub fn for_mode<'a, I>(lines: I, mode: PartialPathMode) -> Result<TypeTree>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let tree = TypeTree::parse(lines)?;
        match mode {
            PartialPathMode::Exclusive => tree.augment_other(),
            PartialPathMode::Undefined => Ok(tree),
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.paths.len()).map(NodeId)
    }

    pub fn path(&self, id: NodeId) -> &TypePath {
        &self.paths[id.0]
    }

    /// Canonical path string of a node.
    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.0]
    }

    pub fn lookup(&self, path: &str) -> Option<NodeId> {
        self.index.get(path).copied()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id.0]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    /// Sb(y): the other children of y's parent. Empty for the root.
    pub fn siblings(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let kids: &[NodeId] = match self.parent[id.0] {
            Some(p) => &self.children[p.0],
            None => &[],
        };
        kids.iter().copied().filter(move |&k| k != id)
    }

    pub fn level(&self, id: NodeId) -> usize {
        self.level[id.0]
    }

    /// L, the number of levels below ENTITY.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn other_augmented(&self) -> bool {
        self.other_augmented
    }

    pub fn is_other(&self, id: NodeId) -> bool {
        self.paths[id.0].is_other()
    }

    /// The synthetic OTHER child of `id`, if it has one.
    pub fn other_child(&self, id: NodeId) -> Option<NodeId> {
        self.children[id.0].iter().copied().find(|&c| self.is_other(c))
    }

    /// Ancestors of `id` excluding itself and the root, deepest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&p| self.parent(p))
            .filter(move |&p| p != self.root())
    }

    /// Hex SHA-256 over the ordered node list. Two trees with the same hash
    /// index their nodes identically.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.names {
            h.update(name.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    fn resolve(&self, raw: &str) -> Result<NodeId> {
        let parsed = TypePath::parse(raw.trim()).map_err(|_| Error::UnknownType(raw.to_string()))?;
        let id = self
            .lookup(&parsed.to_string())
            .ok_or_else(|| Error::UnknownType(raw.to_string()))?;
        if id == self.root() {
            return Err(Error::UnknownType(raw.to_string()));
        }
        Ok(id)
    }

    /// Turns raw gold paths into an ancestor-closed label set.
    ///
    /// Under [`PartialPathMode::Exclusive`] every label that has children in
    /// the tree but none among the labels also receives its OTHER child.
    pub fn normalize_labels<S: AsRef<str>>(
        &self,
        raw: &[S],
        mode: PartialPathMode,
    ) -> Result<LabelSet> {
        let mut set = LabelSet::new();
        for r in raw {
            set.insert(self.resolve(r.as_ref())?);
        }
        let before = set.len();
        let closed = self.ancestor_closure(&set);
        if closed.len() != before {
            log::warn!(
                "gold labels {:?} completed with {} missing ancestor(s)",
                raw.iter().map(AsRef::as_ref).collect::<Vec<_>>(),
                closed.len() - before
            );
        }
        let mut set = closed;
        if mode == PartialPathMode::Exclusive {
            let partial: Vec<NodeId> = set
                .iter()
                .filter(|&y| {
                    let kids = self.children(y);
                    !kids.is_empty() && !kids.iter().any(|k| set.contains(*k))
                })
                .collect();
            for y in partial {
                let other = self.other_child(y).ok_or_else(|| {
                    Error::State(format!(
                        "exclusive labels need an OTHER-augmented tree (no OTHER under {})",
                        self.name(y)
                    ))
                })?;
                set.insert(other);
            }
        }
        Ok(set)
    }

    /// Adds every non-root ancestor of every member.
    pub fn ancestor_closure(&self, labels: &LabelSet) -> LabelSet {
        let mut out = labels.clone();
        for y in labels.iter() {
            out.extend(self.ancestors(y));
        }
        out.remove(self.root());
        out
    }

    /// `true` iff no member is the root and every member's parent is either a
    /// member or the root.
    pub fn is_ancestor_closed(&self, labels: &LabelSet) -> bool {
        labels.iter().all(|y| match self.parent(y) {
            None => false,
            Some(p) => p == self.root() || labels.contains(p),
        })
    }

    /// Removes every OTHER node. Ancestor closure is preserved because OTHER
    /// nodes are always leaves.
    pub fn strip_synthetic(&self, labels: &LabelSet) -> LabelSet {
        labels.iter().filter(|&y| !self.is_other(y)).collect()
    }

    /// Canonical path strings of a label set, in node order.
    pub fn label_names(&self, labels: &LabelSet) -> Vec<String> {
        labels.iter().map(|y| self.name(y).to_string()).collect()
    }
}

/// A set of tree nodes; iteration follows node order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(BTreeSet<NodeId>);

impl LabelSet {
    pub fn new() -> Self {
        LabelSet(BTreeSet::new())
    }

    pub fn insert(&mut self, id: NodeId) -> bool {
        self.0.insert(id)
    }

    pub fn remove(&mut self, id: NodeId) -> bool {
        self.0.remove(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection_len(&self, other: &LabelSet) -> usize {
        self.0.intersection(&other.0).count()
    }
}

impl FromIterator<NodeId> for LabelSet {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

impl Extend<NodeId> for LabelSet {
    fn extend<T: IntoIterator<Item = NodeId>>(&mut self, iter: T) {
        self.0.extend(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(lines: &[&str]) -> TypeTree {
        TypeTree::parse(lines.iter().copied()).unwrap()
    }

    fn figer_like() -> TypeTree {
        tree(&[
            "/person/artist/singer",
            "/person/artist/actor",
            "/person/athlete",
            "/location/city",
            "/location",
        ])
    }

    #[test]
    fn prefix_closure_and_levels() {
        let t = tree(&["/person/artist/singer", "/location"]);
        let names: Vec<&str> = t.nodes().map(|n| t.name(n)).collect();
        assert_eq!(
            names,
            ["/", "/location", "/person", "/person/artist", "/person/artist/singer"]
        );
        assert_eq!(t.depth(), 3);
        assert_eq!(t.level(t.lookup("/location").unwrap()), 1);
        assert_eq!(t.level(t.lookup("/person/artist/singer").unwrap()), 3);
        assert_eq!(t.level(t.root()), 0);
        assert_eq!(t.parent(t.root()), None);
    }

    #[test]
    fn empty_segment_is_malformed() {
        let err = TypeTree::parse(["/person", "/a//b"]).unwrap_err();
        match err {
            Error::MalformedPath { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        assert!(TypeTree::parse(["/a/"]).is_err());
        assert!(TypeTree::parse(["person"]).is_err());
    }

    #[test]
    fn reserved_names_rejected() {
        assert!(TypeTree::parse(["/"]).is_err());
        assert!(TypeTree::parse(["/person/<other>"]).is_err());
    }

    #[test]
    fn comments_and_duplicates() {
        let t = tree(&["# header", "/a/b", "", "/a/b", "/a"]);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn augment_only_branch_nodes() {
        let t = tree(&["/person/artist"]).augment_other().unwrap();
        let names: Vec<&str> = t.nodes().map(|n| t.name(n)).collect();
        assert_eq!(
            names,
            ["/", "/<other>", "/person", "/person/<other>", "/person/artist"]
        );
        assert!(t.other_augmented());
        let artist = t.lookup("/person/artist").unwrap();
        assert!(t.children(artist).is_empty());
    }

    #[test]
    fn augment_twice_is_state_error() {
        let t = tree(&["/a/b"]).augment_other().unwrap();
        assert!(matches!(t.augment_other(), Err(Error::State(_))));
    }

    #[test]
    fn every_branch_has_exactly_one_other() {
        let t = figer_like().augment_other().unwrap();
        for n in t.nodes() {
            let others = t.children(n).iter().filter(|&&c| t.is_other(c)).count();
            let real = t.children(n).len() - others;
            assert_eq!(others, usize::from(real > 0), "{}", t.name(n));
        }
    }

    #[test]
    fn exclusive_adds_other() {
        let t = figer_like().augment_other().unwrap();
        let y = t.normalize_labels(&["/person"], PartialPathMode::Exclusive).unwrap();
        assert_eq!(t.label_names(&y), ["/person", "/person/<other>"]);
    }

    #[test]
    fn undefined_keeps_labels() {
        let t = figer_like();
        let y = t.normalize_labels(&["/person"], PartialPathMode::Undefined).unwrap();
        assert_eq!(t.label_names(&y), ["/person"]);
    }

    #[test]
    fn ancestor_closure_on_deep_label() {
        let t = figer_like();
        let y = t
            .normalize_labels(&["/person/artist/singer"], PartialPathMode::Undefined)
            .unwrap();
        assert_eq!(
            t.label_names(&y),
            ["/person", "/person/artist", "/person/artist/singer"]
        );
    }

    #[test]
    fn unknown_label() {
        let t = figer_like();
        let err = t
            .normalize_labels(&["/organization"], PartialPathMode::Undefined)
            .unwrap_err();
        assert!(matches!(err, Error::UnknownType(p) if p == "/organization"));
        assert!(t.normalize_labels(&["/"], PartialPathMode::Undefined).is_err());
    }

    #[test]
    fn exclusive_on_unaugmented_tree_fails() {
        let t = figer_like();
        assert!(t.normalize_labels(&["/person"], PartialPathMode::Exclusive).is_err());
    }

    #[test]
    fn siblings_exclude_self() {
        let t = figer_like();
        let singer = t.lookup("/person/artist/singer").unwrap();
        let sb: Vec<&str> = t.siblings(singer).map(|s| t.name(s)).collect();
        assert_eq!(sb, ["/person/artist/actor"]);
        assert_eq!(t.siblings(t.root()).count(), 0);
    }

    #[test]
    fn strip_synthetic_removes_other() {
        let t = figer_like().augment_other().unwrap();
        let y = t.normalize_labels(&["/person"], PartialPathMode::Exclusive).unwrap();
        assert_eq!(t.label_names(&t.strip_synthetic(&y)), ["/person"]);
        assert!(t.strip_synthetic(&LabelSet::new()).is_empty());
        let y = t
            .normalize_labels(&["/person/artist/singer"], PartialPathMode::Exclusive)
            .unwrap();
        assert_eq!(t.strip_synthetic(&y), y);
    }

    #[test]
    fn fingerprint_depends_on_nodes() {
        let a = figer_like();
        let b = tree(&[
            "/location",
            "/location/city",
            "/person/athlete",
            "/person/artist/actor",
            "/person/artist/singer",
        ]);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), a.augment_other().unwrap().fingerprint());
    }
}
