//! Central-difference gradient check of the full objective on a random tiny
//! model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::MentionInstance;
use crate::encoder::{EmbeddedSentence, Span};
use crate::error::{Error, Result};
use crate::model::{ModelDims, ModelParams};
use crate::objective::{total_objective, MarginSchedule, ObjectiveWeights};
use crate::ontology::{LabelSet, NodeId, TypeTree};

/// Relative errors are measured against `max(|analytic|, |numeric|, FLOOR)`.
/// Central differences at step 1e-5 on losses of order 10 carry round-off
/// near 1e-9, so entries smaller than the floor are effectively held to an
/// absolute tolerance of `FLOOR · tolerance`.
pub const RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GradcheckConfig {
    pub seed: u64,
    pub d_w: usize,
    pub d_h: usize,
    pub d_t: usize,
    pub step: f64,
    pub tolerance: f64,
    /// Negative control: scales the analytic gradient of this block by 1.5.
    pub corrupt: Option<String>,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            seed: 0,
            d_w: 6,
            d_h: 8,
            d_t: 8,
            step: 1e-5,
            tolerance: 1e-4,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub name: String,
    pub entries: usize,
    pub max_rel_err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub loss: f64,
    pub blocks: Vec<BlockReport>,
    pub passed: bool,
}

/// The 12-node, 3-level tree used by the check (ENTITY included).
pub fn gradcheck_tree() -> TypeTree {
    TypeTree::parse(["/a/x/p", "/a/x/q", "/a/y", "/b/z/r", "/b/w", "/c/v"])
    .expect("static ontology")
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn random_instance(rng: &mut ChaCha8Rng, tree: &TypeTree, d_w: usize) -> MentionInstance {
    let n = rng.random_range(3..=6);
    let vectors = (0..n)
        .map(|_| (0..d_w).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let l = rng.random_range(1..=n);
    let r = rng.random_range(l..=n);
    let leaves: Vec<NodeId> = tree
        .nodes()
        .filter(|&y| y != tree.root() && tree.children(y).is_empty())
        .collect();
    let mut picked = LabelSet::new();
    picked.insert(leaves[rng.random_range(0..leaves.len())]);
    if rng.random_bool(0.5) {
        picked.insert(leaves[rng.random_range(0..leaves.len())]);
    }
    let gold = tree.ancestor_closure(&picked);
    MentionInstance {
        sentence: EmbeddedSentence::new(vectors).expect("uniform dims"),
        span: Span::new(l, r),
        gold,
    }
}

/// Runs the check for one seed.
pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    if !cfg.d_t.is_multiple_of(2) {
        return Err(Error::Config(format!("d_t must be even, got {}", cfg.d_t)));
    }
    if cfg.d_w == 0 || cfg.d_h == 0 || cfg.d_t == 0 {
        return Err(Error::Config("dimensions must be positive".into()));
    }
    let tree = gradcheck_tree();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = ModelParams::init(
        ModelDims {
            d_w: cfg.d_w,
            d_h: cfg.d_h,
            d_t: cfg.d_t,
            num_types: tree.len(),
        },
        0.0,
        rng.random::<u64>(),
    )?;
    let instances: Vec<MentionInstance> =
        (0..2).map(|_| random_instance(&mut rng, &tree, cfg.d_w)).collect();
    let batch: Vec<&MentionInstance> = instances.iter().collect();
    let sched = MarginSchedule::for_depth(tree.depth(), rng.random_range(0.1..0.9))?;
    let weights = ObjectiveWeights {
        beta: 0.5,
        lambda: 0.0,
    };
    let objective = |p: &ModelParams| -> Result<f64> {
        Ok(total_objective(&batch, &tree, p, &weights, &sched, false, 0)?.0)
    };

    let (loss, mut grads) = total_objective(&batch, &tree, &params, &weights, &sched, false, 0)?;
    if let Some(name) = &cfg.corrupt {
        let block = grads
            .blocks_mut()
            .into_iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::Config(format!("unknown parameter block {name:?}")))?;
        block.data.iter_mut().for_each(|g| *g *= 1.5);
    }

    let mut blocks = Vec::new();
    for (bi, g) in grads.blocks().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for j in 0..g.data.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.blocks_mut()[bi].data[j] += cfg.step;
            minus.blocks_mut()[bi].data[j] -= cfg.step;
            let numeric = (objective(&plus)? - objective(&minus)?) / (2.0 * cfg.step);
            worst = worst.max(relative_error(g.data[j], numeric));
        }
        blocks.push(BlockReport {
            name: g.name.to_string(),
            entries: g.data.len(),
            max_rel_err: worst,
            passed: worst <= cfg.tolerance,
        });
    }
    let passed = blocks.iter().all(|b| b.passed);
    Ok(GradcheckReport {
        seed: cfg.seed,
        loss,
        blocks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_shape() {
        let t = gradcheck_tree();
        assert_eq!(t.len(), 12);
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn default_seed_passes() {
        let r = gradcheck(&GradcheckConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.blocks.len(), 8);
    }

    #[test]
    fn corrupted_block_fails() {
        let cfg = GradcheckConfig {
            corrupt: Some("Q".into()),
            ..GradcheckConfig::default()
        };
        let r = gradcheck(&cfg).unwrap();
        assert!(!r.passed);
        let q = r.blocks.iter().find(|b| b.name == "Q").unwrap();
        assert!(!q.passed);
        assert!(r.blocks.iter().filter(|b| b.name != "Q").all(|b| b.passed));
    }

    #[test]
    fn odd_type_dim() {
        let cfg = GradcheckConfig {
            d_t: 7,
            ..GradcheckConfig::default()
        };
        assert!(matches!(gradcheck(&cfg), Err(Error::Config(_))));
    }
}
