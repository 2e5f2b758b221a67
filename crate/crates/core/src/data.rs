//! Dataset records, token-vector providers and conversion to model instances.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{EmbeddedSentence, Span};
use crate::error::{Error, Result};
use crate::ontology::{LabelSet, PartialPathMode, TypeTree};

/// One JSONL line of a dataset. Spans are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub tokens: Vec<String>,
    pub span: [usize; 2],
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
}

impl DatasetRecord {
    pub fn span(&self) -> Span {
        Span::new(self.span[0], self.span[1])
    }

    fn check(&self, require_labels: bool) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        let [l, r] = self.span;
        if !(1 <= l && l <= r && r <= n) {
            return Err(format!("span [{l}, {r}] outside 1..={n}"));
        }
        if require_labels && self.labels.is_empty() {
            return Err("record has no labels".into());
        }
        if let Some(v) = &self.vectors {
            if v.len() != n {
                return Err(format!("{} inline vectors for {n} tokens", v.len()));
            }
        }
        Ok(())
    }
}

/// A mention ready for the model: token vectors, span and normalized gold.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionInstance {
    pub sentence: EmbeddedSentence,
    pub span: Span,
    pub gold: LabelSet,
}

/// Reads a JSONL dataset. Blank lines are skipped; errors name file and line.
pub fn read_records(path: &Path, require_labels: bool) -> Result<Vec<DatasetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Input {
            file: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let rec: DatasetRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        rec.check(require_labels).map_err(bad)?;
        out.push(rec);
    }
    Ok(out)
}

/// Deterministic pseudo-embedding of a token: entries uniform in `[-1, 1]`,
/// drawn from a generator seeded by an FNV-1a hash of the token and `seed`.
pub fn hashed_vector_provider(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h ^ seed.rotate_left(32));
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Token → vector table loaded from a TSV file.
#[derive(Debug, Clone, Default)]
pub struct VectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl VectorTable {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = VectorTable::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Input {
                file: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default().to_string();
            let vec = cols
                .map(|c| c.trim().parse::<f64>().map_err(|e| bad(format!("{c:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if table.vectors.is_empty() {
                table.dim = vec.len();
            } else if vec.len() != table.dim {
                return Err(bad(format!("{} values, expected {}", vec.len(), table.dim)));
            }
            table.vectors.insert(token, vec);
        }
        if table.vectors.is_empty() {
            return Err(Error::Input {
                file: path.to_path_buf(),
                line: 0,
                reason: "vector table is empty".into(),
            });
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }
}

/// Where token vectors come from when a record carries none inline.
#[derive(Debug, Clone)]
pub enum VectorSource {
    /// Only inline vectors are accepted.
    InlineOnly,
    /// TSV table; unknown tokens map to the zero vector.
    Table(VectorTable),
    /// Hashed pseudo-embeddings of the given dimension.
    Hashed { dim: usize, seed: u64 },
}

impl VectorSource {
    pub fn describe(&self) -> String {
        match self {
            VectorSource::InlineOnly => "inline vectors".into(),
            VectorSource::Table(t) => format!("vector table (d_w = {})", t.dim()),
            VectorSource::Hashed { dim, seed } => format!("hashed vectors (d_w = {dim}, seed {seed})"),
        }
    }

    fn embed(&self, rec: &DatasetRecord) -> std::result::Result<Vec<Vec<f64>>, String> {
        if let Some(v) = &rec.vectors {
            return Ok(v.clone());
        }
        match self {
            VectorSource::InlineOnly => Err("record has no inline vectors and no vector source is configured".into()),
            VectorSource::Table(t) => Ok(rec
                .tokens
                .iter()
                .map(|tok| t.get(tok).map_or_else(|| vec![0.0; t.dim()], <[f64]>::to_vec))
                .collect()),
            VectorSource::Hashed { dim, seed } => Ok(rec
                .tokens
                .iter()
                .map(|tok| hashed_vector_provider(tok, *dim, *seed))
                .collect()),
        }
    }
}

/// Converts records into instances, normalizing gold labels under `mode`.
/// `file` is used only for error messages.
pub fn to_instances(
    records: &[DatasetRecord],
    tree: &TypeTree,
    mode: PartialPathMode,
    source: &VectorSource,
    file: &Path,
) -> Result<Vec<MentionInstance>> {
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let bad = |reason: String| Error::Input {
                file: PathBuf::from(file),
                line: i + 1,
                reason,
            };
            let vectors = source.embed(rec).map_err(bad)?;
            let sentence = EmbeddedSentence::new(vectors).map_err(|e| bad(e.to_string()))?;
            let gold = tree
                .normalize_labels(&rec.labels, mode)
                .map_err(|e| bad(e.to_string()))?;
            Ok(MentionInstance {
                sentence,
                span: rec.span(),
                gold,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn hashed_vectors_are_deterministic() {
        let a = hashed_vector_provider("cat", 8, 7);
        assert_eq!(a, hashed_vector_provider("cat", 8, 7));
        assert_ne!(a, hashed_vector_provider("dog", 8, 7));
        assert_ne!(a, hashed_vector_provider("cat", 8, 8));
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(hashed_vector_provider("cat", 0, 7).is_empty());
    }

    #[test]
    fn record_validation() {
        let rec: DatasetRecord =
            serde_json::from_str(r#"{"tokens":["a","b"],"span":[2,3],"labels":["/x"]}"#).unwrap();
        assert!(rec.check(true).is_err());
        let rec: DatasetRecord = serde_json::from_str(r#"{"tokens":["a","b"],"span":[1,2]}"#).unwrap();
        assert!(rec.check(false).is_ok());
        assert!(rec.check(true).is_err());
        let rec: DatasetRecord =
            serde_json::from_str(r#"{"tokens":["a"],"span":[1,1],"labels":["/x"],"vectors":[[1.0],[2.0]]}"#)
                .unwrap();
        assert!(rec.check(true).is_err());
    }

    #[test]
    fn read_records_reports_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"tokens":["a"],"span":[1,1],"labels":["/x"]}}"#).unwrap();
        writeln!(f).unwrap();
        writeln!(f, "not json").unwrap();
        match read_records(f.path(), true).unwrap_err() {
            Error::Input { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn vector_resolution_order() {
        let tree = TypeTree::parse(["/x"]).unwrap();
        let inline = DatasetRecord {
            tokens: vec!["a".into()],
            span: [1, 1],
            labels: vec!["/x".into()],
            vectors: Some(vec![vec![9.0, 9.0]]),
        };
        let plain = DatasetRecord { vectors: None, ..inline.clone() };
        let hashed = VectorSource::Hashed { dim: 2, seed: 1 };
        let insts = to_instances(
            &[inline, plain.clone()],
            &tree,
            PartialPathMode::Undefined,
            &hashed,
            Path::new("mem"),
        )
        .unwrap();
        assert_eq!(insts[0].sentence.vectors()[0], vec![9.0, 9.0]);
        assert_eq!(insts[1].sentence.vectors()[0], hashed_vector_provider("a", 2, 1));
        assert!(to_instances(&[plain], &tree, PartialPathMode::Undefined, &VectorSource::InlineOnly, Path::new("mem")).is_err());
    }

    #[test]
    fn vector_table_parsing() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "cat\t0.5\t-1").unwrap();
        writeln!(f, "dog\t1\t2").unwrap();
        let t = VectorTable::from_file(f.path()).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.get("cat"), Some(&[0.5, -1.0][..]));
        assert_eq!(t.get("eel"), None);

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "cat\t0.5\t-1").unwrap();
        writeln!(g, "dog\t1").unwrap();
        assert!(matches!(VectorTable::from_file(g.path()), Err(Error::Input { line: 2, .. })));
    }
}
