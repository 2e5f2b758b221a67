use serde::{Deserialize, Serialize};

use crate::decoder::BranchingFactors;
use crate::error::{Error, Result};
use crate::objective::{default_margins, MarginSchedule, ObjectiveWeights};
use crate::ontology::PartialPathMode;

/// Training configuration. JSON config files use these field names as keys;
/// every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Share of each level margin placed between a positive type and its parent.
    pub alpha: f64,
    /// Weight of the subtyping relation loss.
    pub beta: f64,
    /// Decoupled weight decay coefficient.
    pub lambda: f64,
    /// Dropout on input token vectors.
    #[serde(rename = "p_D")]
    pub p_d: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub mode: PartialPathMode,
    /// Per-level branching factors; defaults to all ones.
    pub k: Option<Vec<usize>>,
    /// Candidate branching factors tried on dev after training.
    pub k_grid: Option<Vec<Vec<usize>>>,
    /// Per-level margins; defaults to `ξ_l = L − l + 1`.
    pub xi: Option<Vec<f64>>,
    pub d_t: usize,
    /// Hidden width of the scorer; defaults to `d_t`.
    pub d_h: Option<usize>,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Dimension of hashed token vectors when records carry no vectors and no
    /// table is given.
    pub hashed_dim: Option<usize>,
    pub hash_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.15,
            beta: 0.1,
            lambda: 0.001,
            p_d: 0.5,
            learning_rate: 1e-5,
            batch_size: 256,
            max_epochs: 100,
            patience: 5,
            seed: 0,
            mode: PartialPathMode::Exclusive,
            k: None,
            k_grid: None,
            xi: None,
            d_t: 1024,
            d_h: None,
            clip_norm: 5.0,
            hashed_dim: None,
            hash_seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn from_json(text: &str) -> Result<Self> {
        let h: Hyperparams =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail("alpha must be in [0,1]".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail("beta must be >= 0".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.p_d) {
            return fail("p_D must be in [0,1)".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be >= 0".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1".into());
        }
        if self.patience < 1 {
            return fail("patience must be >= 1".into());
        }
        if self.max_epochs < 1 {
            return fail("max_epochs must be >= 1".into());
        }
        if self.d_t == 0 || !self.d_t.is_multiple_of(2) {
            return fail(format!("d_t must be a positive even number, got {}", self.d_t));
        }
        if self.d_h == Some(0) {
            return fail("d_h must be >= 1".into());
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return fail("clip_norm must be > 0".into());
        }
        if let Some(k) = &self.k {
            BranchingFactors::new(k.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(grid) = &self.k_grid {
            if grid.is_empty() {
                return fail("k_grid must not be empty".into());
            }
            for k in grid {
                BranchingFactors::new(k.clone()).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        if let Some(xi) = &self.xi {
            if xi.is_empty() || xi.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return fail("xi entries must be positive".into());
            }
        }
        Ok(())
    }

    /// Checks the settings that depend on the tree depth.
    pub fn validate_for_depth(&self, depth: usize) -> Result<()> {
        if let Some(k) = &self.k {
            if k.len() < depth {
                return Err(Error::Config(format!("k has {} levels, tree has {depth}", k.len())));
            }
        }
        if let Some(grid) = &self.k_grid {
            if grid.iter().any(|k| k.len() < depth) {
                return Err(Error::Config(format!("every k_grid entry needs {depth} levels")));
            }
        }
        if let Some(xi) = &self.xi {
            if xi.len() < depth {
                return Err(Error::Config(format!("xi has {} levels, tree has {depth}", xi.len())));
            }
        }
        Ok(())
    }

    pub fn hidden_dim(&self) -> usize {
        self.d_h.unwrap_or(self.d_t)
    }

    pub fn branching(&self, depth: usize) -> BranchingFactors {
        match &self.k {
            Some(k) => BranchingFactors(k.clone()),
            None => BranchingFactors::single_path(depth),
        }
    }

    pub fn margins(&self, depth: usize) -> Result<MarginSchedule> {
        let xi = match &self.xi {
            Some(xi) => xi.clone(),
            None => default_margins(depth)?,
        };
        MarginSchedule::new(xi, self.alpha)
    }

    pub fn weights(&self) -> ObjectiveWeights {
        ObjectiveWeights {
            beta: self.beta,
            lambda: self.lambda,
        }
    }
}
