//! Binary model checkpoints.
//!
//! Layout: the 8-byte magic `HIERTYPE`, a little-endian `u32` format version,
//! a little-endian `u64` header length, the JSON header, then every parameter
//! block in header order as little-endian `f32`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::hyper::Hyperparams;
use crate::linalg::Matrix;
use crate::model::{ModelDims, ModelParams, BLOCK_NAMES};
use crate::objective::RelationEmbedding;
use crate::ontology::TypeTree;
use crate::scorer::ScorerParams;

const MAGIC: &[u8; 8] = b"HIERTYPE";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dims: ModelDims,
    /// [`TypeTree::fingerprint`] of the tree the model was trained on.
    pub ontology_hash: String,
    /// Hyperparameters, with `k` set to the branching factors to decode with.
    pub hyperparams: Hyperparams,
    pub best_epoch: usize,
    pub blocks: Vec<BlockInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(params: ModelParams, tree: &TypeTree, hyperparams: Hyperparams, best_epoch: usize) -> Self {
        let blocks = params
            .blocks()
            .iter()
            .map(|b| BlockInfo {
                name: b.name.to_string(),
                shape: b.shape.clone(),
            })
            .collect();
        Checkpoint {
            header: CheckpointHeader {
                dims: params.dims(),
                ontology_hash: tree.fingerprint(),
                hyperparams,
                best_epoch,
                blocks,
            },
            params,
        }
    }

    /// Fails with [`Error::OntologyMismatch`] unless `tree` indexes its nodes
    /// exactly like the training tree.
    pub fn check_tree(&self, tree: &TypeTree) -> Result<()> {
        let found = tree.fingerprint();
        if found != self.header.ontology_hash {
            return Err(Error::OntologyMismatch {
                expected: self.header.ontology_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let mut out = Vec::with_capacity(20 + header.len() + 4 * self.params.num_scalars());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for b in self.params.blocks() {
            for &v in b.data {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a hiertype checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body_start = 20usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(&bytes[20..body_start])?;

        let names: Vec<&str> = header.blocks.iter().map(|b| b.name.as_str()).collect();
        if names != BLOCK_NAMES {
            return Err(Error::Checkpoint(format!("unexpected block list {names:?}")));
        }
        let mut floats = bytes[body_start..]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))));
        let expected: usize = header.blocks.iter().map(|b| b.shape.iter().product::<usize>()).sum();
        if bytes.len() - body_start != 4 * expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} floats, found {} bytes of data",
                bytes.len() - body_start
            )));
        }
        let mut take = |info: &BlockInfo| -> Vec<f64> {
            let n = info.shape.iter().product();
            floats.by_ref().take(n).collect()
        };
        let matrix = |info: &BlockInfo, data: Vec<f64>| -> Result<Matrix> {
            match info.shape[..] {
                [r, c] => Ok(Matrix::from_vec(r, c, data)),
                _ => Err(Error::Checkpoint(format!("block {} is not a matrix", info.name))),
            }
        };
        let b = &header.blocks;
        let t = matrix(&b[0], take(&b[0]))?;
        let q = matrix(&b[1], take(&b[1]))?;
        let w1 = matrix(&b[2], take(&b[2]))?;
        let b1 = take(&b[3]);
        let w2 = matrix(&b[4], take(&b[4]))?;
        let b2 = take(&b[5]);
        let type_emb = matrix(&b[6], take(&b[6]))?;
        let rel = take(&b[7]);
        let params = ModelParams {
            encoder: EncoderParams {
                t,
                q,
                dropout: header.hyperparams.p_d,
            },
            scorer: ScorerParams {
                w1,
                b1,
                w2,
                b2,
                type_emb,
            },
            relation: RelationEmbedding(rel),
            version: 0,
        };
        params.validate()?;
        if params.dims() != header.dims {
            return Err(Error::Checkpoint("block shapes disagree with header dims".into()));
        }
        Ok(Checkpoint { header, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}
