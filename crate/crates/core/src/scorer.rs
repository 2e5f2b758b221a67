//! Type scorer: a two-layer tanh network maps the mention feature into type
//! space, and each type is scored by inner product with its embedding.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::ontology::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    /// `d_h × 2·d_w`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `d_t × d_h`
    pub w2: Matrix,
    pub b2: Vec<f64>,
    /// One `d_t` row per tree node, ENTITY and OTHER included.
    pub type_emb: Matrix,
}

impl ScorerParams {
    pub fn feature_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn type_dim(&self) -> usize {
        self.w2.rows()
    }

    pub fn num_types(&self) -> usize {
        self.type_emb.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, t) = (self.hidden_dim(), self.type_dim());
        if self.b1.len() != h
            || self.w2.cols() != h
            || self.b2.len() != t
            || self.type_emb.cols() != t
        {
            return Err(Error::Shape(format!(
                "scorer blocks disagree: W1 {:?}, b1 {}, W2 {:?}, b2 {}, type_emb {:?}",
                self.w1.shape(),
                self.b1.len(),
                self.w2.shape(),
                self.b2.len(),
                self.type_emb.shape()
            )));
        }
        Ok(())
    }
}

/// `F(x, ·)` for one instance, indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn get(&self, id: NodeId) -> f64 {
        self.0[id.0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<NodeId> for ScoreVector {
    type Output = f64;

    fn index(&self, id: NodeId) -> &f64 {
        &self.0[id.0]
    }
}

#[derive(Debug, Clone)]
pub struct ScorerCache {
    feature: Vec<f64>,
    hidden: Vec<f64>,
    /// The transformed feature `FFNN([m ; c])`.
    out: Vec<f64>,
    num_types: usize,
}

impl ScorerCache {
    pub fn transformed(&self) -> &[f64] {
        &self.out
    }
}

pub struct ScorerGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub type_emb: Matrix,
    pub feature: Vec<f64>,
}

pub fn score_all(params: &ScorerParams, feature: &[f64]) -> Result<(ScoreVector, ScorerCache)> {
    if feature.len() != params.feature_dim() {
        return Err(Error::Shape(format!(
            "feature has length {}, scorer expects {}",
            feature.len(),
            params.feature_dim()
        )));
    }
    let mut hidden = params.w1.matvec(feature);
    for (z, b) in hidden.iter_mut().zip(&params.b1) {
        *z = (*z + b).tanh();
    }
    let mut out = params.w2.matvec(&hidden);
    for (z, b) in out.iter_mut().zip(&params.b2) {
        *z = (*z + b).tanh();
    }
    let scores = params.type_emb.matvec(&out);
    let cache = ScorerCache {
        feature: feature.to_vec(),
        hidden,
        out,
        num_types: params.num_types(),
    };
    Ok((ScoreVector(scores), cache))
}

pub fn score_backward(
    params: &ScorerParams,
    cache: &ScorerCache,
    upstream: &[f64],
) -> Result<ScorerGrads> {
    if cache.num_types != params.num_types()
        || cache.feature.len() != params.feature_dim()
        || cache.out.len() != params.type_dim()
    {
        return Err(Error::State("scorer cache does not match parameters".into()));
    }
    if upstream.len() != params.num_types() {
        return Err(Error::Shape(format!(
            "upstream gradient has {} entries, expected {}",
            upstream.len(),
            params.num_types()
        )));
    }

    let mut g_emb = Matrix::zeros(params.num_types(), params.type_dim());
    let mut g_out = vec![0.0; params.type_dim()];
    for (y, &g) in upstream.iter().enumerate() {
        if g != 0.0 {
            axpy(g_emb.row_mut(y), g, &cache.out);
            axpy(&mut g_out, g, params.type_emb.row(y));
        }
    }

    let g_z2: Vec<f64> = g_out
        .iter()
        .zip(&cache.out)
        .map(|(g, h)| g * (1.0 - h * h))
        .collect();
    let mut g_w2 = Matrix::zeros(params.type_dim(), params.hidden_dim());
    g_w2.add_outer(1.0, &g_z2, &cache.hidden);
    let g_hidden = params.w2.t_matvec(&g_z2);

    let g_z1: Vec<f64> = g_hidden
        .iter()
        .zip(&cache.hidden)
        .map(|(g, h)| g * (1.0 - h * h))
        .collect();
    let mut g_w1 = Matrix::zeros(params.hidden_dim(), params.feature_dim());
    g_w1.add_outer(1.0, &g_z1, &cache.feature);
    let g_feature = params.w1.t_matvec(&g_z1);

    Ok(ScorerGrads {
        w1: g_w1,
        b1: g_z1,
        w2: g_w2,
        b2: g_z2,
        type_emb: g_emb,
        feature: g_feature,
    })
}

/// Cauchy–Schwarz bound used in tests: `|F(x,y)| ≤ ‖h‖·‖y‖`.
pub fn score_bound(cache: &ScorerCache, params: &ScorerParams, y: NodeId) -> f64 {
    dot(&cache.out, &cache.out).sqrt() * dot(params.type_emb.row(y.0), params.type_emb.row(y.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn random_params(rng: &mut ChaCha8Rng, f: usize, h: usize, t: usize, n: usize) -> ScorerParams {
        ScorerParams {
            w1: random(rng, h, f),
            b1: (0..h).map(|_| rng.random_range(-0.5..0.5)).collect(),
            w2: random(rng, t, h),
            b2: (0..t).map(|_| rng.random_range(-0.5..0.5)).collect(),
            type_emb: random(rng, n, t),
        }
    }

    fn reference(p: &ScorerParams, x: &[f64]) -> Vec<f64> {
        let mut h1 = vec![0.0; p.b1.len()];
        for i in 0..h1.len() {
            let mut z = p.b1[i];
            for (j, xj) in x.iter().enumerate() {
                z += p.w1.get(i, j) * xj;
            }
            h1[i] = z.tanh();
        }
        let mut h2 = vec![0.0; p.b2.len()];
        for i in 0..h2.len() {
            let mut z = p.b2[i];
            for (j, hj) in h1.iter().enumerate() {
                z += p.w2.get(i, j) * hj;
            }
            h2[i] = z.tanh();
        }
        (0..p.type_emb.rows())
            .map(|y| (0..h2.len()).map(|k| p.type_emb.get(y, k) * h2[k]).sum())
            .collect()
    }

    #[test]
    fn zero_weights_score_zero() {
        let p = ScorerParams {
            w1: Matrix::zeros(3, 4),
            b1: vec![0.0; 3],
            w2: Matrix::zeros(2, 3),
            b2: vec![0.0; 2],
            type_emb: Matrix::zeros(5, 2),
        };
        let (s, _) = score_all(&p, &[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(s.0, vec![0.0; 5]);
    }

    #[test]
    fn embedding_equal_to_transformed_feature_scores_squared_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = random_params(&mut rng, 4, 5, 6, 3);
        let x = [0.3, -0.1, 0.7, 0.2];
        let (_, cache) = score_all(&p, &x).unwrap();
        let h = cache.transformed().to_vec();
        p.type_emb.row_mut(1).copy_from_slice(&h);
        let (s, _) = score_all(&p, &x).unwrap();
        assert!((s.0[1] - dot(&h, &h)).abs() < 1e-15);
    }

    #[test]
    fn matches_reference_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&mut rng, 4, 5, 6, 7);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (s, cache) = score_all(&p, &x).unwrap();
        for (a, b) in s.0.iter().zip(reference(&p, &x)) {
            assert!((a - b).abs() < 1e-12);
        }
        for y in 0..7 {
            assert!(s.0[y].abs() <= score_bound(&cache, &p, NodeId(y)) + 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_params(&mut rng, 4, 5, 6, 7);
        assert!(matches!(score_all(&p, &[0.0; 3]), Err(Error::Shape(_))));
        let (_, cache) = score_all(&p, &[0.0; 4]).unwrap();
        assert!(matches!(score_backward(&p, &cache, &[0.0; 6]), Err(Error::Shape(_))));
        let other = random_params(&mut rng, 4, 5, 6, 9);
        assert!(matches!(score_backward(&other, &cache, &[0.0; 9]), Err(Error::State(_))));
    }

    #[test]
    fn zero_upstream_and_embedding_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_params(&mut rng, 4, 5, 6, 7);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, cache) = score_all(&p, &x).unwrap();
        let g = score_backward(&p, &cache, &[0.0; 7]).unwrap();
        assert!(g.w1.as_slice().iter().chain(g.feature.iter()).all(|&v| v == 0.0));

        let up: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = score_backward(&p, &cache, &up).unwrap();
        for y in 0..7 {
            for k in 0..6 {
                assert!((g.type_emb.get(y, k) - up[y] * cache.transformed()[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn finite_difference_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng, 4, 5, 6, 7);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let up: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, cache) = score_all(&p, &x).unwrap();
        let g = score_backward(&p, &cache, &up).unwrap();
        let f = |p: &ScorerParams, x: &[f64]| dot(&reference(p, x), &up);
        let h = 1e-5;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
        let mut worst: f64 = 0.0;

        macro_rules! check_block {
            ($field:ident, $grad:expr) => {
                let n = p.$field.clone().as_slice().len();
                for i in 0..n {
                    let mut a = p.clone();
                    let mut b = p.clone();
                    a.$field.as_mut_slice()[i] += h;
                    b.$field.as_mut_slice()[i] -= h;
                    let num = (f(&a, &x) - f(&b, &x)) / (2.0 * h);
                    worst = worst.max(rel($grad[i], num));
                }
            };
        }
        check_block!(w1, g.w1.as_slice());
        check_block!(b1, g.b1);
        check_block!(w2, g.w2.as_slice());
        check_block!(b2, g.b2);
        check_block!(type_emb, g.type_emb.as_slice());
        for i in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            let num = (f(&p, &a) - f(&p, &b)) / (2.0 * h);
            worst = worst.max(rel(g.feature[i], num));
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }
}
