//! Strict accuracy, macro/micro F1 and per-level accuracy over
//! `(gold, predicted)` label-set pairs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{LabelSet, NodeId, TypeTree, OTHER};

pub type LabelPair = (LabelSet, LabelSet);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strict_acc: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub per_level_acc: Vec<f64>,
    pub instances: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("Acc".into(), format!("{:.4}", self.strict_acc)),
            ("MaF".into(), format!("{:.4}", self.macro_f1)),
            ("MiF".into(), format!("{:.4}", self.micro_f1)),
        ];
        for (l, acc) in self.per_level_acc.iter().enumerate() {
            rows.push((format!("Acc@L{}", l + 1), format!("{acc:.4}")));
        }
        rows.push(("instances".into(), self.instances.to_string()));
        rows.push(("TP/FP/FN".into(), format!("{}/{}/{}", self.tp, self.fp, self.fn_)));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>10}");
        }
        out
    }
}

fn non_empty(pairs: &[LabelPair]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Domain("no instances to evaluate".into()));
    }
    Ok(())
}

pub fn strict_accuracy(pairs: &[LabelPair]) -> Result<f64> {
    non_empty(pairs)?;
    let hits = pairs.iter().filter(|(g, p)| g == p).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// F1 between two sets; two empty sets agree perfectly.
pub fn instance_f1(gold: &LabelSet, pred: &LabelSet) -> f64 {
    if gold.is_empty() && pred.is_empty() {
        return 1.0;
    }
    2.0 * gold.intersection_len(pred) as f64 / (gold.len() + pred.len()) as f64
}

/// Global `(tp, fp, fn)` counts.
pub fn counts(pairs: &[LabelPair]) -> (usize, usize, usize) {
    pairs.iter().fold((0, 0, 0), |(tp, fp, fn_), (g, p)| {
        let hit = g.intersection_len(p);
        (tp + hit, fp + p.len() - hit, fn_ + g.len() - hit)
    })
}

/// `(macro, micro)` F1.
pub fn macro_micro_f1(pairs: &[LabelPair]) -> Result<(f64, f64)> {
    non_empty(pairs)?;
    let macro_f1 = pairs.iter().map(|(g, p)| instance_f1(g, p)).sum::<f64>() / pairs.len() as f64;
    let (tp, fp, fn_) = counts(pairs);
    let denom = 2 * tp + fp + fn_;
    let micro_f1 = if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    Ok((macro_f1, micro_f1))
}

/// The set's chains truncated at `level`, each padded with OTHER segments
/// down to exactly `level` segments.
fn padded_chains(tree: &TypeTree, labels: &LabelSet, level: usize) -> BTreeSet<Vec<String>> {
    let kept: Vec<NodeId> = labels.iter().filter(|&y| tree.level(y) <= level).collect();
    let mut leaves: Vec<NodeId> = kept
        .iter()
        .copied()
        .filter(|&y| !tree.children(y).iter().any(|c| kept.contains(c)))
        .collect();
    if leaves.is_empty() {
        leaves.push(tree.root());
    }
    leaves
        .into_iter()
        .map(|y| {
            let mut segs = tree.path(y).segments().to_vec();
            segs.resize(level, OTHER.to_string());
            segs
        })
        .collect()
}

/// Accuracy at each level `1..=depth`, comparing OTHER-padded chains.
pub fn per_level_accuracy(tree: &TypeTree, pairs: &[LabelPair], depth: usize) -> Result<Vec<f64>> {
    non_empty(pairs)?;
    if depth > tree.depth() {
        return Err(Error::Domain(format!(
            "requested {depth} levels from a tree of depth {}",
            tree.depth()
        )));
    }
    Ok((1..=depth)
        .map(|l| {
            let hits = pairs
                .iter()
                .filter(|(g, p)| padded_chains(tree, g, l) == padded_chains(tree, p, l))
                .count();
            hits as f64 / pairs.len() as f64
        })
        .collect())
}

/// Full report. OTHER nodes are stripped for Acc/MaF/MiF and kept for the
/// per-level padding.
pub fn evaluate(tree: &TypeTree, pairs: &[LabelPair]) -> Result<EvalReport> {
    non_empty(pairs)?;
    let stripped: Vec<LabelPair> = pairs
        .iter()
        .map(|(g, p)| (tree.strip_synthetic(g), tree.strip_synthetic(p)))
        .collect();
    let strict_acc = strict_accuracy(&stripped)?;
    let (macro_f1, micro_f1) = macro_micro_f1(&stripped)?;
    let (tp, fp, fn_) = counts(&stripped);
    let per_level_acc = per_level_accuracy(tree, pairs, tree.depth())?;
    Ok(EvalReport {
        strict_acc,
        macro_f1,
        micro_f1,
        per_level_acc,
        instances: pairs.len(),
        tp,
        fp,
        fn_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::PartialPathMode;

    fn tree() -> TypeTree {
        TypeTree::parse(["/per/police/officer", "/per/artist", "/org/gov", "/loc"]).unwrap()
    }

    fn set(t: &TypeTree, names: &[&str]) -> LabelSet {
        t.normalize_labels(names, PartialPathMode::Undefined).unwrap()
    }

    #[test]
    fn perfect_predictions() {
        let t = tree();
        let pairs: Vec<LabelPair> = [&["/loc"][..], &["/per/artist"], &["/org", "/per"]]
            .iter()
            .map(|n| (set(&t, n), set(&t, n)))
            .collect();
        assert_eq!(strict_accuracy(&pairs).unwrap(), 1.0);
        assert_eq!(macro_micro_f1(&pairs).unwrap(), (1.0, 1.0));
        assert_eq!(per_level_accuracy(&t, &pairs, 3).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn over_prediction_halves_strict() {
        let t = tree();
        let pairs = vec![
            (set(&t, &["/loc"]), set(&t, &["/loc", "/org"])),
            (set(&t, &["/loc"]), set(&t, &["/loc"])),
        ];
        assert_eq!(strict_accuracy(&pairs).unwrap(), 0.5);
    }

    #[test]
    fn single_partial_match() {
        let t = tree();
        let pairs = vec![(set(&t, &["/loc", "/org"]), set(&t, &["/loc"]))];
        let (ma, mi) = macro_micro_f1(&pairs).unwrap();
        assert!((ma - 2.0 / 3.0).abs() < 1e-15);
        assert!((mi - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_sets() {
        let t = tree();
        assert_eq!(instance_f1(&LabelSet::new(), &LabelSet::new()), 1.0);
        assert_eq!(instance_f1(&set(&t, &["/loc"]), &LabelSet::new()), 0.0);
        assert!(strict_accuracy(&[]).is_err());
        assert!(macro_micro_f1(&[]).is_err());
    }

    #[test]
    fn per_level_stops_early() {
        let t = tree();
        let pairs = vec![(set(&t, &["/per/police/officer"]), set(&t, &["/per"]))];
        assert_eq!(per_level_accuracy(&t, &pairs, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(per_level_accuracy(&t, &pairs, 4).is_err());
    }

    #[test]
    fn other_padding_matches_explicit_other() {
        let t = tree().augment_other().unwrap();
        let g = t.normalize_labels(&["/per"], PartialPathMode::Exclusive).unwrap();
        let p = t.normalize_labels(&["/per"], PartialPathMode::Undefined).unwrap();
        assert_ne!(g, p);
        let r = evaluate(&t, &[(g, p)]).unwrap();
        assert_eq!(r.strict_acc, 1.0);
        assert_eq!(r.per_level_acc, vec![1.0; 3]);
    }

    #[test]
    fn report_table_mentions_every_metric() {
        let t = tree();
        let r = evaluate(&t, &[(set(&t, &["/loc"]), set(&t, &["/loc"]))]).unwrap();
        let table = r.to_table();
        for key in ["Acc", "MaF", "MiF", "Acc@L3", "TP/FP/FN"] {
            assert!(table.contains(key));
        }
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["fn"], 0);
    }
}
