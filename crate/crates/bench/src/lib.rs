//! Fixtures shared by the benchmarks.

use hiertype::{EmbeddedSentence, LabelSet, MentionInstance, ModelDims, ModelParams, ScoreVector, Span, TypeTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A complete tree with `branching` children per node and `depth` levels.
pub fn balanced_tree(branching: usize, depth: usize) -> TypeTree {
    let mut frontier = vec![String::new()];
    let mut paths = Vec::new();
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in &frontier {
            for c in 0..branching {
                next.push(format!("{p}/t{c}"));
            }
        }
        paths.extend(next.iter().cloned());
        frontier = next;
    }
    TypeTree::parse(paths.iter().map(String::as_str)).expect("generated paths are valid")
}

pub fn random_scores(tree: &TypeTree, seed: u64) -> ScoreVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScoreVector((0..tree.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Gold set along the first path of the tree.
pub fn first_path(tree: &TypeTree) -> LabelSet {
    let mut set = LabelSet::new();
    let mut y = tree.root();
    while let Some(&c) = tree.children(y).first() {
        set.insert(c);
        y = c;
    }
    set
}

pub fn random_instance(tree: &TypeTree, d_w: usize, tokens: usize, seed: u64) -> MentionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..tokens)
        .map(|_| (0..d_w).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    MentionInstance {
        sentence: EmbeddedSentence::new(vectors).expect("uniform dims"),
        span: Span::new(tokens / 2, tokens / 2 + 1),
        gold: first_path(tree),
    }
}

pub fn model(tree: &TypeTree, d_w: usize, d_t: usize) -> ModelParams {
    ModelParams::init(
        ModelDims {
            d_w,
            d_h: d_t,
            d_t,
            num_types: tree.len(),
        },
        0.0,
        0,
    )
    .expect("valid dims")
}
