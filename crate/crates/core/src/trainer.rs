//! Minibatch training with early stopping on dev micro F1, and the
//! branching-factor sweep.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::MentionInstance;
use crate::decoder::{hier_type_dec, BranchingFactors};
use crate::error::{Error, Result};
use crate::hyper::Hyperparams;
use crate::metrics::{evaluate, EvalReport, LabelPair};
use crate::model::{predict_scores, ModelDims, ModelParams};
use crate::objective::total_objective;
use crate::ontology::TypeTree;
use crate::optim::{adamw_step, clip_global_norm, OptimizerState};
use crate::scorer::ScoreVector;

/// One line of the JSON-lines training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_strict: f64,
    pub dev_macro_f1: f64,
    pub dev_micro_f1: f64,
    /// Wall-clock milliseconds for the epoch; 0 unless timing is enabled, so
    /// that logs are reproducible byte for byte.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub record_timing: bool,
    /// Start from these parameters instead of a seeded initialization.
    pub init: Option<ModelParams>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev micro F1.
    pub best: ModelParams,
    /// 1-based; 0 means no epoch improved on the initialization.
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Decodes every instance with `k` and scores against gold.
pub fn evaluate_model(
    params: &ModelParams,
    tree: &TypeTree,
    data: &[MentionInstance],
    k: &BranchingFactors,
) -> Result<EvalReport> {
    let pairs = data
        .iter()
        .map(|inst| {
            let scores = predict_scores(params, inst)?;
            Ok((inst.gold.clone(), hier_type_dec(tree, &scores, k)?))
        })
        .collect::<Result<Vec<LabelPair>>>()?;
    evaluate(tree, &pairs)
}

pub fn train(
    train_set: &[MentionInstance],
    dev_set: &[MentionInstance],
    tree: &TypeTree,
    hyper: &Hyperparams,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    hyper.validate_for_depth(tree.depth())?;
    if train_set.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Domain("dev set is empty".into()));
    }
    let d_w = train_set[0].sentence.dim();
    if let Some(bad) = train_set.iter().chain(dev_set).find(|i| i.sentence.dim() != d_w) {
        return Err(Error::Shape(format!(
            "token vectors of dimension {} mixed with {d_w}",
            bad.sentence.dim()
        )));
    }

    let mut params = match &opts.init {
        Some(p) => p.clone(),
        None => ModelParams::init(
            ModelDims {
                d_w,
                d_h: hyper.hidden_dim(),
                d_t: hyper.d_t,
                num_types: tree.len(),
            },
            hyper.p_d,
            hyper.seed,
        )?,
    };
    params.encoder.dropout = hyper.p_d;
    let sched = hyper.margins(tree.depth())?;
    let weights = hyper.weights();
    let k = hyper.branching(tree.depth());
    let mut state = OptimizerState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    log::info!(
        "training on {} instances ({} dev); L2 realized as decoupled weight decay lambda = {}",
        train_set.len(),
        dev_set.len(),
        hyper.lambda
    );

    let mut best = params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut log = Vec::new();

    for epoch in 1..=hyper.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let batch: Vec<&MentionInstance> = chunk.iter().map(|&i| &train_set[i]).collect();
            let dropout_seed = rng.next_u64();
            let (loss, mut grads) =
                total_objective(&batch, tree, &params, &weights, &sched, true, dropout_seed)?;
            loss_sum += loss * batch.len() as f64;
            clip_global_norm(&mut grads, hyper.clip_norm);
            adamw_step(&mut params, &grads, &mut state, hyper.learning_rate, hyper.lambda)?;
        }

        let report = evaluate_model(&params, tree, dev_set, &k)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            dev_strict: report.strict_acc,
            dev_macro_f1: report.macro_f1,
            dev_micro_f1: report.micro_f1,
            wall_ms: if opts.record_timing {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        };
        log::info!(
            "epoch {epoch}: loss {:.5} dev acc {:.4} maf {:.4} mif {:.4}",
            record.train_loss,
            record.dev_strict,
            record.dev_macro_f1,
            record.dev_micro_f1
        );
        log.push(record);

        if report.micro_f1 > best_f1 {
            best_f1 = report.micro_f1;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= hyper.patience {
                log::info!("early stop after epoch {epoch}; best epoch {best_epoch}");
                break;
            }
        }
    }

    Ok(TrainOutcome {
        best,
        best_epoch,
        log,
    })
}

/// Dev micro F1 for every candidate; returns the best candidate and the full
/// table. Ties go to the lexicographically smallest candidate.
pub fn sweep_branching(
    dev_set: &[MentionInstance],
    tree: &TypeTree,
    params: &ModelParams,
    grid: &[BranchingFactors],
) -> Result<(BranchingFactors, Vec<(BranchingFactors, f64)>)> {
    if grid.is_empty() {
        return Err(Error::Domain("branching-factor grid is empty".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Domain("dev set is empty".into()));
    }
    let scores: Vec<ScoreVector> = dev_set
        .iter()
        .map(|inst| predict_scores(params, inst))
        .collect::<Result<_>>()?;
    let mut table = Vec::with_capacity(grid.len());
    for k in grid {
        let pairs = dev_set
            .iter()
            .zip(&scores)
            .map(|(inst, s)| Ok((inst.gold.clone(), hier_type_dec(tree, s, k)?)))
            .collect::<Result<Vec<LabelPair>>>()?;
        table.push((k.clone(), evaluate(tree, &pairs)?.micro_f1));
    }
    let best = table
        .iter()
        .fold(None::<&(BranchingFactors, f64)>, |acc, cand| match acc {
            None => Some(cand),
            Some(b) if cand.1 > b.1 || (cand.1 == b.1 && cand.0 < b.0) => Some(cand),
            keep => keep,
        })
        .map(|(k, _)| k.clone())
        .expect("grid is non-empty");
    Ok((best, table))
}
