//! Mention encoder: projected max-pool over the mention span followed by
//! multiplicative mention-to-context attention over the whole sentence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};

/// Token vectors of one sentence, all of dimension `d_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSentence {
    vectors: Vec<Vec<f64>>,
}

impl EmbeddedSentence {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::Domain("sentence has no tokens".into()));
        };
        let d = first.len();
        if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
            return Err(Error::Shape(format!(
                "token {} has dimension {}, expected {d}",
                bad + 1,
                vectors[bad].len()
            )));
        }
        Ok(EmbeddedSentence { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.vectors
    }
}

/// Mention span `[l, r]`, 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub l: usize,
    pub r: usize,
}

impl Span {
    pub fn new(l: usize, r: usize) -> Self {
        Span { l, r }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.l >= 1 && self.l <= self.r && self.r <= n {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "span [{}, {}] outside sentence of {n} tokens",
                self.l, self.r
            )))
        }
    }

    fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.l - 1..=self.r - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// Mention projection, `d_w × d_w`.
    pub t: Matrix,
    /// Attention bilinear form, `d_w × d_w`.
    pub q: Matrix,
    /// Dropout rate on input token vectors during training.
    pub dropout: f64,
}

impl EncoderParams {
    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.t.rows();
        if self.t.shape() != (d, d) || self.q.shape() != (d, d) {
            return Err(Error::Shape(format!(
                "encoder matrices must be square and equal: T {:?}, Q {:?}",
                self.t.shape(),
                self.q.shape()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Domain(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Intermediates kept by [`encode`] for [`encode_backward`].
#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// Token vectors after dropout.
    inputs: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers per token coordinate (`None` without dropout).
    mask: Option<Vec<Vec<f64>>>,
    span: Span,
    /// Per coordinate of `m`, the sentence index that won the max-pool.
    argmax: Vec<usize>,
    m: Vec<f64>,
    /// `Q w_i` for every token.
    qw: Vec<Vec<f64>>,
    attention: Vec<f64>,
    dim: usize,
}

impl EncoderCache {
    pub fn attention(&self) -> &[f64] {
        &self.attention
    }

    pub fn mention(&self) -> &[f64] {
        &self.m
    }
}

pub struct EncoderGrads {
    pub t: Matrix,
    pub q: Matrix,
    /// Gradient with respect to the original (pre-dropout) token vectors.
    pub tokens: Vec<Vec<f64>>,
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Computes the mention feature `[m ; c]` of length `2·d_w`.
///
/// With `train_mode`, each input coordinate is zeroed with probability
/// `params.dropout` (inverted scaling) using a generator seeded by `rng_seed`.
pub fn encode(
    params: &EncoderParams,
    sentence: &EmbeddedSentence,
    span: Span,
    train_mode: bool,
    rng_seed: u64,
) -> Result<(Vec<f64>, EncoderCache)> {
    let d = params.dim();
    if sentence.dim() != d {
        return Err(Error::Shape(format!(
            "token vectors have dimension {}, encoder expects {d}",
            sentence.dim()
        )));
    }
    span.check(sentence.len())?;

    let (inputs, mask) = if train_mode && params.dropout > 0.0 {
        let keep = 1.0 - params.dropout;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mask: Vec<Vec<f64>> = sentence
            .vectors()
            .iter()
            .map(|w| {
                w.iter()
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect()
            })
            .collect();
        let inputs = sentence
            .vectors()
            .iter()
            .zip(&mask)
            .map(|(w, mk)| w.iter().zip(mk).map(|(a, b)| a * b).collect())
            .collect();
        (inputs, Some(mask))
    } else {
        (sentence.vectors().to_vec(), None)
    };

    let mut m = vec![f64::NEG_INFINITY; d];
    let mut argmax = vec![0; d];
    for i in span.range() {
        let u = params.t.matvec(&inputs[i]);
        for j in 0..d {
            // strict '>' keeps the first index on ties
            if u[j] > m[j] {
                m[j] = u[j];
                argmax[j] = i;
            }
        }
    }

    let qw: Vec<Vec<f64>> = inputs.iter().map(|w| params.q.matvec(w)).collect();
    let logits: Vec<f64> = qw.iter().map(|v| dot(&m, v)).collect();
    let attention = softmax(&logits);
    let mut c = vec![0.0; d];
    for (a, w) in attention.iter().zip(&inputs) {
        axpy(&mut c, *a, w);
    }

    let mut feature = m.clone();
    feature.extend_from_slice(&c);
    let cache = EncoderCache {
        inputs,
        mask,
        span,
        argmax,
        m,
        qw,
        attention,
        dim: d,
    };
    Ok((feature, cache))
}

/// Backpropagates `upstream` (gradient on `[m ; c]`) through [`encode`].
pub fn encode_backward(
    params: &EncoderParams,
    cache: &EncoderCache,
    upstream: &[f64],
) -> Result<EncoderGrads> {
    let d = cache.dim;
    if params.dim() != d {
        return Err(Error::State(format!(
            "encoder cache was built for d_w = {d}, params have {}",
            params.dim()
        )));
    }
    if upstream.len() != 2 * d {
        return Err(Error::Shape(format!(
            "upstream gradient has length {}, expected {}",
            upstream.len(),
            2 * d
        )));
    }
    let (g_m_direct, g_c) = upstream.split_at(d);
    let n = cache.inputs.len();
    let mut g_t = Matrix::zeros(d, d);
    let mut g_q = Matrix::zeros(d, d);
    let mut g_w = vec![vec![0.0; d]; n];
    let mut g_m = g_m_direct.to_vec();

    // c = Σ a_i w_i
    let g_a: Vec<f64> = cache.inputs.iter().map(|w| dot(g_c, w)).collect();
    for (gw, a) in g_w.iter_mut().zip(&cache.attention) {
        axpy(gw, *a, g_c);
    }

    // softmax Jacobian
    let mean: f64 = cache.attention.iter().zip(&g_a).map(|(a, g)| a * g).sum();
    let g_logit: Vec<f64> = cache
        .attention
        .iter()
        .zip(&g_a)
        .map(|(a, g)| a * (g - mean))
        .collect();

    // logit_i = mᵀ Q w_i
    let qt_m = params.q.t_matvec(&cache.m);
    for i in 0..n {
        let s = g_logit[i];
        if s == 0.0 {
            continue;
        }
        axpy(&mut g_m, s, &cache.qw[i]);
        g_q.add_outer(s, &cache.m, &cache.inputs[i]);
        axpy(&mut g_w[i], s, &qt_m);
    }

    // m_j = (T w_{argmax_j})_j
    for i in cache.span.range() {
        let g_u: Vec<f64> = (0..d)
            .map(|j| if cache.argmax[j] == i { g_m[j] } else { 0.0 })
            .collect();
        if g_u.iter().all(|&g| g == 0.0) {
            continue;
        }
        g_t.add_outer(1.0, &g_u, &cache.inputs[i]);
        let back = params.t.t_matvec(&g_u);
        axpy(&mut g_w[i], 1.0, &back);
    }

    if let Some(mask) = &cache.mask {
        for (gw, mk) in g_w.iter_mut().zip(mask) {
            for (g, k) in gw.iter_mut().zip(mk) {
                *g *= k;
            }
        }
    }

    Ok(EncoderGrads {
        t: g_t,
        q: g_q,
        tokens: g_w,
    })
}
