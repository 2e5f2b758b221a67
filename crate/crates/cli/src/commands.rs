use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hiertype::data::{read_records, to_instances, VectorTable};
use hiertype::gradcheck::{gradcheck, GradcheckConfig};
use hiertype::metrics::LabelPair;
use hiertype::model::predict_scores;
use hiertype::{
    evaluate, hier_type_dec, sweep_branching, train, BranchingFactors, Checkpoint, DatasetRecord, Hyperparams,
    PartialPathMode, TrainOptions, TypeTree, VectorSource,
};
use serde::{Deserialize, Serialize};

use crate::{CliError, EvaluateArgs, GradcheckArgs, PredictArgs, TrainArgs};

type CmdResult = Result<i32, CliError>;

/// One output line of `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub labels: Vec<String>,
    /// Score of every emitted type.
    pub scores: BTreeMap<String, f64>,
}

fn load_tree(path: &Path, mode: PartialPathMode) -> Result<TypeTree, CliError> {
    let tree = TypeTree::from_file(path).map_err(|e| match e {
        hiertype::Error::Domain(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other.into(),
    })?;
    Ok(match mode {
        PartialPathMode::Exclusive => tree.augment_other()?,
        PartialPathMode::Undefined => tree,
    })
}

fn vector_source(
    table: Option<&Path>,
    hashed_dim: Option<usize>,
    hash_seed: u64,
) -> Result<VectorSource, CliError> {
    let source = match (table, hashed_dim) {
        (Some(p), _) => VectorSource::Table(VectorTable::from_file(p)?),
        (None, Some(dim)) => VectorSource::Hashed { dim, seed: hash_seed },
        (None, None) => VectorSource::InlineOnly,
    };
    log::info!("token vectors: inline where present, otherwise {}", source.describe());
    Ok(source)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn cmd_train(args: &TrainArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let mut hyper = Hyperparams::from_json(&text)?;
    if let Some(m) = args.mode {
        hyper.mode = m.into();
    }
    if let Some(s) = args.seed {
        hyper.seed = s;
    }
    if args.hashed_dim.is_some() {
        hyper.hashed_dim = args.hashed_dim;
    }
    hyper.validate()?;

    let tree = load_tree(&args.ontology, hyper.mode)?;
    hyper.validate_for_depth(tree.depth())?;
    let source = vector_source(args.vectors.as_deref(), hyper.hashed_dim, hyper.hash_seed)?;
    let train_records = read_records(&args.train, true)?;
    let dev_records = read_records(&args.dev, true)?;
    let train_set = to_instances(&train_records, &tree, hyper.mode, &source, &args.train)?;
    let dev_set = to_instances(&dev_records, &tree, hyper.mode, &source, &args.dev)?;

    let opts = TrainOptions {
        record_timing: args.timing,
        init: None,
    };
    let outcome = train(&train_set, &dev_set, &tree, &hyper, &opts)?;

    if let Some(grid) = hyper.k_grid.clone() {
        let grid: Vec<BranchingFactors> = grid.into_iter().map(BranchingFactors).collect();
        let (best, table) = sweep_branching(&dev_set, &tree, &outcome.best, &grid)?;
        for (k, f1) in &table {
            log::info!("k = {k}: dev micro F1 {f1:.4}");
        }
        log::info!("selected k = {best}");
        hyper.k = Some(best.0);
    } else if hyper.k.is_none() {
        hyper.k = Some(hyper.branching(tree.depth()).0);
    }

    let checkpoint = Checkpoint::new(outcome.best, &tree, hyper, outcome.best_epoch);
    write_file(&args.checkpoint, &checkpoint.to_bytes()?)?;
    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| args.checkpoint.with_extension("log.jsonl"));
    let mut log_text = String::new();
    for rec in &outcome.log {
        log_text.push_str(&serde_json::to_string(rec).map_err(hiertype::Error::from)?);
        log_text.push('\n');
    }
    write_file(&log_path, log_text.as_bytes())?;
    println!(
        "trained {} epochs; best epoch {}; checkpoint {}",
        outcome.log.len(),
        outcome.best_epoch,
        args.checkpoint.display()
    );
    Ok(0)
}

pub fn cmd_predict(args: &PredictArgs) -> CmdResult {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let hyper = &checkpoint.header.hyperparams;
    let tree = load_tree(&args.ontology, hyper.mode)?;
    checkpoint.check_tree(&tree)?;
    let k = match &args.k {
        Some(k) => BranchingFactors::new(k.clone()).map_err(|e| CliError::Config(e.to_string()))?,
        None => hyper.branching(tree.depth()),
    };
    if k.levels() < tree.depth() {
        return Err(CliError::Config(format!("k needs {} levels", tree.depth())));
    }
    let hashed_dim = args.hashed_dim.or(hyper.hashed_dim);
    let source = vector_source(args.vectors.as_deref(), hashed_dim, hyper.hash_seed)?;
    let records = read_records(&args.input, false)?;
    // gold labels, if any, are irrelevant to decoding
    let unlabeled: Vec<DatasetRecord> = records
        .into_iter()
        .map(|r| DatasetRecord { labels: Vec::new(), ..r })
        .collect();
    let instances = to_instances(&unlabeled, &tree, PartialPathMode::Undefined, &source, &args.input)?;

    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    for inst in &instances {
        let scores = predict_scores(&checkpoint.params, inst)?;
        let mut decoded = hier_type_dec(&tree, &scores, &k)?;
        if !args.keep_synthetic {
            decoded = tree.strip_synthetic(&decoded);
        }
        let rec = PredictionRecord {
            labels: tree.label_names(&decoded),
            scores: decoded.iter().map(|y| (tree.name(y).to_string(), scores[y])).collect(),
        };
        let line = serde_json::to_string(&rec).map_err(hiertype::Error::from)?;
        writeln!(out, "{line}").map_err(|e| CliError::Input(format!("writing predictions: {e}")))?;
    }
    out.flush().map_err(|e| CliError::Input(format!("writing predictions: {e}")))?;
    Ok(0)
}

#[derive(Deserialize)]
struct Labels {
    #[serde(default)]
    labels: Vec<String>,
}

fn read_label_lists(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Labels = serde_json::from_str(&line)
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec.labels);
    }
    Ok(out)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    let mode: PartialPathMode = args.mode.into();
    let tree = load_tree(&args.ontology, mode)?;
    let gold = read_label_lists(&args.gold)?;
    let pred = read_label_lists(&args.pred)?;
    if gold.len() != pred.len() {
        return Err(CliError::Input(format!(
            "{} has {} records but {} has {}",
            args.gold.display(),
            gold.len(),
            args.pred.display(),
            pred.len()
        )));
    }
    let normalize = |labels: &[String], file: &Path, i: usize| {
        tree.normalize_labels(labels, mode)
            .map_err(|e| CliError::Input(format!("{}: record {}: {e}", file.display(), i + 1)))
    };
    let pairs = gold
        .iter()
        .zip(&pred)
        .enumerate()
        .map(|(i, (g, p))| Ok((normalize(g, &args.gold, i)?, normalize(p, &args.pred, i)?)))
        .collect::<Result<Vec<LabelPair>, CliError>>()?;
    let report = evaluate(&tree, &pairs)?;
    let json = serde_json::to_string_pretty(&report).map_err(hiertype::Error::from)?;
    println!("{json}");
    print!("{}", report.to_table());
    if let Some(p) = &args.out {
        write_file(p, json.as_bytes())?;
    }
    Ok(0)
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> CmdResult {
    let [d_w, d_h, d_t] = args.dims[..] else {
        return Err(CliError::Config(format!(
            "--dims takes d_w,d_h,d_t; got {} values",
            args.dims.len()
        )));
    };
    let cfg = GradcheckConfig {
        seed: args.seed,
        d_w,
        d_h,
        d_t,
        tolerance: args.tolerance,
        corrupt: args.corrupt.clone(),
        ..GradcheckConfig::default()
    };
    let report = gradcheck(&cfg)?;
    for b in &report.blocks {
        println!(
            "{:<9} entries {:>4}  max rel err {:.3e}  {}",
            b.name,
            b.entries,
            b.max_rel_err,
            if b.passed { "ok" } else { "FAIL" }
        );
    }
    println!("seed {} loss {:.6}: {}", report.seed, report.loss, if report.passed { "passed" } else { "failed" });
    Ok(if report.passed { 0 } else { 1 })
}
