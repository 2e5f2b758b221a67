//! Training objectives: the flat and hierarchical ranking hinge losses, the
//! ComplEx subtyping constraint, and their combination over a minibatch.
//!
//! All hinges use `[x]₊ = max(0, x)` with subgradient 0 at `x = 0`, so a
//! constraint that is met exactly contributes neither loss nor gradient.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::MentionInstance;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{forward, ModelParams};
use crate::ontology::{LabelSet, NodeId, TypeTree};
use crate::scorer::ScoreVector;

/// Per-level margins `ξ_1..ξ_L` together with the split ratio `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSchedule {
    pub xi: Vec<f64>,
    pub alpha: f64,
}

impl MarginSchedule {
    pub fn new(xi: Vec<f64>, alpha: f64) -> Result<Self> {
        if xi.is_empty() || xi.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("margins must be positive, got {xi:?}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must be in [0,1], got {alpha}")));
        }
        Ok(MarginSchedule { xi, alpha })
    }

    /// The default schedule for an `L`-level tree.
    pub fn for_depth(depth: usize, alpha: f64) -> Result<Self> {
        MarginSchedule::new(default_margins(depth)?, alpha)
    }

    /// `ξ_l` for a 1-based level.
    pub fn margin(&self, level: usize) -> f64 {
        self.xi[level - 1]
    }
}

/// `ξ_l = L − l + 1`, so coarser levels demand larger margins.
pub fn default_margins(depth: usize) -> Result<Vec<f64>> {
    if depth < 1 {
        return Err(Error::Domain("margin schedule needs L >= 1".into()));
    }
    Ok((1..=depth).map(|l| (depth - l + 1) as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// Weight of the subtyping relation loss.
    pub beta: f64,
    /// L2 coefficient. Applied by the optimizer as decoupled weight decay,
    /// never added to the loss value.
    pub lambda: f64,
}

/// Complex relation embedding `r ∈ ℂ^{d_t/2}` stored as `[Re r ; Im r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationEmbedding(pub Vec<f64>);

impl RelationEmbedding {
    pub fn zeros(type_dim: usize) -> Result<Self> {
        check_even(type_dim)?;
        Ok(RelationEmbedding(vec![0.0; type_dim]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn check_even(d: usize) -> Result<()> {
    if !d.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "complex embeddings need an even type dimension, got {d}"
        )));
    }
    Ok(())
}

#[inline]
fn hinge(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (x, 1.0)
    } else {
        (0.0, 0.0)
    }
}

/// A loss value with its gradient on every entry of a score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Weston–Watkins style ranking loss: every gold type above every non-gold
/// type (ENTITY excluded) by margin `xi`.
pub fn flat_rank_loss(
    tree: &TypeTree,
    scores: &ScoreVector,
    gold: &LabelSet,
    xi: f64,
) -> Result<ScoreLoss> {
    check_scores(tree, scores)?;
    if gold.is_empty() {
        return Err(Error::Domain("flat ranking loss needs at least one gold type".into()));
    }
    let negatives: Vec<NodeId> = tree
        .nodes()
        .filter(|&n| n != tree.root() && !gold.contains(n))
        .collect();
    let mut out = ScoreLoss {
        loss: 0.0,
        grad: vec![0.0; tree.len()],
    };
    for y in gold.iter() {
        for &neg in &negatives {
            let (v, d) = hinge(xi - scores[y] + scores[neg]);
            out.loss += v;
            out.grad[y.0] -= d;
            out.grad[neg.0] += d;
        }
    }
    Ok(out)
}

fn check_scores(tree: &TypeTree, scores: &ScoreVector) -> Result<()> {
    if scores.len() != tree.len() {
        return Err(Error::Contract(format!(
            "score vector has {} entries for a tree of {} nodes",
            scores.len(),
            tree.len()
        )));
    }
    Ok(())
}

fn check_gold(tree: &TypeTree, gold: &LabelSet) -> Result<()> {
    if let Some(bad) = gold.iter().find(|&n| n.0 >= tree.len()) {
        return Err(Error::Contract(format!("label {bad:?} is not a tree node")));
    }
    if !tree.is_ancestor_closed(gold) {
        return Err(Error::Contract(
            "gold labels must be ancestor-closed and exclude ENTITY".into(),
        ));
    }
    Ok(())
}

/// Hierarchical ranking loss with the parent as threshold.
///
/// For each gold type `y` with parent `p` at level `l`:
/// `[αξ_l − F(y) + F(p)]₊`, and for each non-gold sibling `y'`,
/// `[(1−α)ξ_l − F(p) + F(y')]₊ + [ξ_l − F(y) + F(y')]₊`.
pub fn hier_rank_loss(
    tree: &TypeTree,
    scores: &ScoreVector,
    gold: &LabelSet,
    sched: &MarginSchedule,
) -> Result<ScoreLoss> {
    check_scores(tree, scores)?;
    check_gold(tree, gold)?;
    let alpha = sched.alpha;
    let mut out = ScoreLoss {
        loss: 0.0,
        grad: vec![0.0; tree.len()],
    };
    for y in gold.iter() {
        let level = tree.level(y);
        if level > sched.xi.len() {
            return Err(Error::Contract(format!(
                "{} is at level {level} but only {} margins are configured",
                tree.name(y),
                sched.xi.len()
            )));
        }
        let xi = sched.margin(level);
        let p = tree.parent(y).expect("non-root gold label");

        let (v, d) = hinge(alpha * xi - scores[y] + scores[p]);
        out.loss += v;
        out.grad[y.0] -= d;
        out.grad[p.0] += d;

        for neg in tree.siblings(y).filter(|&s| !gold.contains(s)) {
            let (v, d) = hinge((1.0 - alpha) * xi - scores[p] + scores[neg]);
            out.loss += v;
            out.grad[p.0] -= d;
            out.grad[neg.0] += d;

            let (v, d) = hinge(xi - scores[y] + scores[neg]);
            out.loss += v;
            out.grad[y.0] -= d;
            out.grad[neg.0] += d;
        }
    }
    Ok(out)
}

/// `Re(Σ_k r_k · φ(y)_k · conj(φ(z)_k))` where `φ` reads the first half of a
/// vector as real parts and the second half as imaginary parts.
pub fn complex_subtype_score(y: &[f64], z: &[f64], rel: &RelationEmbedding) -> Result<f64> {
    let d = rel.dim();
    check_even(d)?;
    if y.len() != d || z.len() != d {
        return Err(Error::Shape(format!(
            "embeddings of length {} and {} against relation of length {d}",
            y.len(),
            z.len()
        )));
    }
    let h = d / 2;
    let r = &rel.0;
    let mut s = 0.0;
    for k in 0..h {
        let (a, b) = (y[k], y[h + k]);
        let (c, e) = (z[k], z[h + k]);
        let (p, q) = (r[k], r[h + k]);
        // (p + iq)(a + ib)(c − ie)
        s += p * (a * c + b * e) - q * (b * c - a * e);
    }
    Ok(s)
}

/// Accumulates `scale · ∂score/∂(y, z, r)` into the given buffers.
fn complex_subtype_grad(
    y: &[f64],
    z: &[f64],
    r: &[f64],
    scale: f64,
    gy: &mut [f64],
    gz: &mut [f64],
    gr: &mut [f64],
) {
    let h = r.len() / 2;
    for k in 0..h {
        let (a, b) = (y[k], y[h + k]);
        let (c, e) = (z[k], z[h + k]);
        let (p, q) = (r[k], r[h + k]);
        gy[k] += scale * (p * c + q * e);
        gy[h + k] += scale * (p * e - q * c);
        gz[k] += scale * (p * a - q * b);
        gz[h + k] += scale * (p * b + q * a);
        gr[k] += scale * (a * c + b * e);
        gr[h + k] += scale * (a * e - b * c);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationLoss {
    pub loss: f64,
    pub type_emb: Matrix,
    pub rel: Vec<f64>,
}

/// Subtyping constraint: each gold `y` should be a subtype of its parent and
/// not a subtype of any sibling or parent's sibling.
pub fn subtype_rel_loss(
    tree: &TypeTree,
    gold: &LabelSet,
    type_emb: &Matrix,
    rel: &RelationEmbedding,
) -> Result<RelationLoss> {
    check_gold(tree, gold)?;
    check_even(rel.dim())?;
    if type_emb.rows() != tree.len() || type_emb.cols() != rel.dim() {
        return Err(Error::Shape(format!(
            "type embeddings {:?} for {} nodes and relation dim {}",
            type_emb.shape(),
            tree.len(),
            rel.dim()
        )));
    }
    let d = rel.dim();
    let mut out = RelationLoss {
        loss: 0.0,
        type_emb: Matrix::zeros(tree.len(), d),
        rel: vec![0.0; d],
    };
    let mut gy = vec![0.0; d];
    let mut gz = vec![0.0; d];
    let mut pair = |out: &mut RelationLoss, y: NodeId, z: NodeId, sign: f64| -> Result<()> {
        let s = complex_subtype_score(type_emb.row(y.0), type_emb.row(z.0), rel)?;
        let (v, g) = hinge(1.0 + sign * s);
        out.loss += v;
        if g != 0.0 {
            gy.iter_mut().for_each(|v| *v = 0.0);
            gz.iter_mut().for_each(|v| *v = 0.0);
            complex_subtype_grad(
                type_emb.row(y.0),
                type_emb.row(z.0),
                &rel.0,
                sign,
                &mut gy,
                &mut gz,
                &mut out.rel,
            );
            crate::linalg::axpy(out.type_emb.row_mut(y.0), 1.0, &gy);
            crate::linalg::axpy(out.type_emb.row_mut(z.0), 1.0, &gz);
        }
        Ok(())
    };
    for y in gold.iter() {
        let p = tree.parent(y).expect("non-root gold label");
        pair(&mut out, y, p, -1.0)?;
        let negatives: BTreeSet<NodeId> = tree.siblings(y).chain(tree.siblings(p)).collect();
        for neg in negatives {
            pair(&mut out, y, neg, 1.0)?;
        }
    }
    Ok(out)
}

/// Mean over the batch of `J_hier + β·J_rel`, with gradients on every
/// parameter block. Dropout is active when `train_mode` is set; instance `i`
/// draws its mask from `seed + i`.
pub fn total_objective(
    batch: &[&MentionInstance],
    tree: &TypeTree,
    params: &ModelParams,
    weights: &ObjectiveWeights,
    sched: &MarginSchedule,
    train_mode: bool,
    seed: u64,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Domain("objective needs a non-empty batch".into()));
    }
    if params.num_types() != tree.len() {
        return Err(Error::Shape(format!(
            "model has {} type embeddings for a tree of {} nodes",
            params.num_types(),
            tree.len()
        )));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = params.zeros_like();
    let mut total = 0.0;
    for (i, inst) in batch.iter().enumerate() {
        let (scores, cache) = forward(params, inst, train_mode, seed.wrapping_add(i as u64))?;
        let hier = hier_rank_loss(tree, &scores, &inst.gold, sched)?;
        let mut upstream = hier.grad;
        upstream.iter_mut().for_each(|g| *g *= scale);
        let g = cache.backward(params, &upstream)?;
        grads.accumulate(&g);
        total += hier.loss;

        if weights.beta != 0.0 {
            let rel = subtype_rel_loss(tree, &inst.gold, &params.scorer.type_emb, &params.relation)?;
            total += weights.beta * rel.loss;
            let s = weights.beta * scale;
            crate::linalg::axpy(grads.scorer.type_emb.as_mut_slice(), s, rel.type_emb.as_slice());
            crate::linalg::axpy(&mut grads.relation.0, s, &rel.rel);
        }
    }
    Ok((total * scale, grads))
}
