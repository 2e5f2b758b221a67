//! The full parameter set Θ and the composed forward/backward pass
//! (encoder → scorer).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::MentionInstance;
use crate::encoder::{encode, encode_backward, EncoderCache, EncoderParams};
use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::objective::RelationEmbedding;
use crate::scorer::{score_all, score_backward, ScoreVector, ScorerCache, ScorerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub d_w: usize,
    pub d_h: usize,
    pub d_t: usize,
    pub num_types: usize,
}

/// Named view of one parameter block.
pub struct Block<'a> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
    /// Whether decoupled weight decay applies (everything except biases).
    pub decay: bool,
}

pub struct BlockMut<'a> {
    pub name: &'static str,
    pub data: &'a mut [f64],
    pub decay: bool,
}

pub const BLOCK_NAMES: [&str; 8] = ["T", "Q", "W1", "b1", "W2", "b2", "type_emb", "rel"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub scorer: ScorerParams,
    pub relation: RelationEmbedding,
    /// Bumped on every optimizer update; forward caches remember it.
    pub version: u64,
}

impl ModelParams {
    /// Seeded initialization: Glorot-uniform matrices, zero biases, and
    /// `N(0, 0.1)` type and relation embeddings.
    pub fn init(dims: ModelDims, dropout: f64, seed: u64) -> Result<Self> {
        if !dims.d_t.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "type dimension must be even for complex relation scoring, got {}",
                dims.d_t
            )));
        }
        if dims.d_w == 0 || dims.d_h == 0 || dims.d_t == 0 || dims.num_types == 0 {
            return Err(Error::Domain(format!("all model dimensions must be positive: {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let s = (6.0 / (rows + cols) as f64).sqrt();
            let u = Uniform::new_inclusive(-s, s).expect("finite bound");
            Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| u.sample(&mut rng)).collect())
        };
        let t = glorot(dims.d_w, dims.d_w);
        let q = glorot(dims.d_w, dims.d_w);
        let w1 = glorot(dims.d_h, 2 * dims.d_w);
        let w2 = glorot(dims.d_t, dims.d_h);
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        let type_emb = Matrix::from_vec(
            dims.num_types,
            dims.d_t,
            (0..dims.num_types * dims.d_t).map(|_| normal.sample(&mut rng)).collect(),
        );
        let relation = RelationEmbedding((0..dims.d_t).map(|_| normal.sample(&mut rng)).collect());
        let params = ModelParams {
            encoder: EncoderParams { t, q, dropout },
            scorer: ScorerParams {
                w1,
                b1: vec![0.0; dims.d_h],
                w2,
                b2: vec![0.0; dims.d_t],
                type_emb,
            },
            relation,
            version: 0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            d_w: self.encoder.dim(),
            d_h: self.scorer.hidden_dim(),
            d_t: self.scorer.type_dim(),
            num_types: self.scorer.num_types(),
        }
    }

    pub fn num_types(&self) -> usize {
        self.scorer.num_types()
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.scorer.validate()?;
        if self.scorer.feature_dim() != 2 * self.encoder.dim() {
            return Err(Error::Shape(format!(
                "W1 takes {} inputs but the encoder emits {}",
                self.scorer.feature_dim(),
                2 * self.encoder.dim()
            )));
        }
        if self.relation.dim() != self.scorer.type_dim() {
            return Err(Error::Shape("relation and type embeddings disagree".into()));
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for b in z.blocks_mut() {
            b.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn blocks(&self) -> [Block<'_>; 8] {
        fn m<'a>(name: &'static str, mat: &'a Matrix, decay: bool) -> Block<'a> {
            Block {
                name,
                shape: vec![mat.rows(), mat.cols()],
                data: mat.as_slice(),
                decay,
            }
        }
        fn v<'a>(name: &'static str, vec: &'a [f64], decay: bool) -> Block<'a> {
            Block {
                name,
                shape: vec![vec.len()],
                data: vec,
                decay,
            }
        }
        [
            m("T", &self.encoder.t, true),
            m("Q", &self.encoder.q, true),
            m("W1", &self.scorer.w1, true),
            v("b1", &self.scorer.b1, false),
            m("W2", &self.scorer.w2, true),
            v("b2", &self.scorer.b2, false),
            m("type_emb", &self.scorer.type_emb, true),
            v("rel", &self.relation.0, true),
        ]
    }

    pub fn blocks_mut(&mut self) -> [BlockMut<'_>; 8] {
        let b = |name, data, decay| BlockMut { name, data, decay };
        [
            b("T", self.encoder.t.as_mut_slice(), true),
            b("Q", self.encoder.q.as_mut_slice(), true),
            b("W1", self.scorer.w1.as_mut_slice(), true),
            b("b1", self.scorer.b1.as_mut_slice(), false),
            b("W2", self.scorer.w2.as_mut_slice(), true),
            b("b2", self.scorer.b2.as_mut_slice(), false),
            b("type_emb", self.scorer.type_emb.as_mut_slice(), true),
            b("rel", self.relation.0.as_mut_slice(), true),
        ]
    }

    /// `self += other`, block by block.
    pub fn accumulate(&mut self, other: &ModelParams) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            axpy(dst.data, 1.0, src.data);
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }
}

/// Everything needed to backpropagate one instance.
pub struct ForwardCache {
    encoder: EncoderCache,
    scorer: ScorerCache,
    version: u64,
}

/// Scores every type for one instance.
pub fn forward(
    params: &ModelParams,
    inst: &MentionInstance,
    train_mode: bool,
    seed: u64,
) -> Result<(ScoreVector, ForwardCache)> {
    let (feature, enc) = encode(&params.encoder, &inst.sentence, inst.span, train_mode, seed)?;
    let (scores, sc) = score_all(&params.scorer, &feature)?;
    Ok((
        scores,
        ForwardCache {
            encoder: enc,
            scorer: sc,
            version: params.version,
        },
    ))
}

/// Scores without keeping a cache; dropout off.
pub fn predict_scores(params: &ModelParams, inst: &MentionInstance) -> Result<ScoreVector> {
    forward(params, inst, false, 0).map(|(s, _)| s)
}

impl ForwardCache {
    /// Gradients of `Σ_y upstream[y]·F(x, y)` on every block. The relation
    /// block is always zero here.
    pub fn backward(&self, params: &ModelParams, upstream: &[f64]) -> Result<ModelParams> {
        if self.version != params.version {
            return Err(Error::State(format!(
                "stale forward cache: built at parameter version {}, now {}",
                self.version, params.version
            )));
        }
        let sg = score_backward(&params.scorer, &self.scorer, upstream)?;
        let eg = encode_backward(&params.encoder, &self.encoder, &sg.feature)?;
        Ok(ModelParams {
            encoder: EncoderParams {
                t: eg.t,
                q: eg.q,
                dropout: params.encoder.dropout,
            },
            scorer: ScorerParams {
                w1: sg.w1,
                b1: sg.b1,
                w2: sg.w2,
                b2: sg.b2,
                type_emb: sg.type_emb,
            },
            relation: RelationEmbedding(vec![0.0; params.relation.dim()]),
            version: params.version,
        })
    }
}
