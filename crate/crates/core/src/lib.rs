//! Hierarchical entity typing as multi-level learning-to-rank over a type
//! tree.
//!
//! A mention is encoded from its token vectors ([`encoder`]), every type in
//! the ontology is scored ([`scorer`]), and types are decoded top-down with
//! each parent's score acting as the threshold for its children
//! ([`decoder`]). Training minimizes a hierarchical ranking hinge loss plus a
//! ComplEx subtyping constraint on the type embeddings ([`objective`]) with
//! AdamW ([`optim`], [`trainer`]).

pub mod checkpoint;
pub mod data;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod hyper;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod ontology;
pub mod optim;
pub mod scorer;
pub mod synthetic;
pub mod trainer;

pub use checkpoint::Checkpoint;
pub use data::{hashed_vector_provider, DatasetRecord, MentionInstance, VectorSource};
pub use decoder::{hier_type_dec, BranchingFactors};
pub use encoder::{encode, encode_backward, EmbeddedSentence, EncoderParams, Span};
pub use error::{Error, Result};
pub use hyper::Hyperparams;
pub use linalg::Matrix;
pub use metrics::{evaluate, EvalReport};
pub use model::{ModelDims, ModelParams};
pub use objective::{
    complex_subtype_score, default_margins, flat_rank_loss, hier_rank_loss, subtype_rel_loss,
    total_objective, MarginSchedule, ObjectiveWeights, RelationEmbedding,
};
pub use ontology::{LabelSet, NodeId, PartialPathMode, TypePath, TypeTree, OTHER};
pub use optim::{adamw_step, OptimizerState};
pub use scorer::{score_all, score_backward, ScoreVector, ScorerParams};
pub use trainer::{evaluate_model, sweep_branching, train, EpochRecord, TrainOptions, TrainOutcome};
