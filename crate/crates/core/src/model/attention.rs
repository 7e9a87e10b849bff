//! Scaled dot-product attention, multi-head attention and the sinusoidal
//! positional table, each with the backward pass the encoder needs.

use super::tensor::{softmax_in_place, Matrix};
use crate::error::{Error, Result};

/// Query, key and value matrices for one attention call.
#[derive(Debug, Clone)]
pub struct AttentionInputs {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
}

impl AttentionInputs {
    pub fn new(q: Matrix, k: Matrix, v: Matrix) -> Result<Self> {
        let inputs = Self { q, k, v };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.cols() == 0 {
            return Err(Error::validation(
                "attention key dimension must be positive",
            ));
        }
        if self.q.cols() != self.k.cols() {
            return Err(Error::validation(format!(
                "query width {} differs from key width {}",
                self.q.cols(),
                self.k.cols()
            )));
        }
        if self.k.rows() != self.v.rows() {
            return Err(Error::validation(format!(
                "{} keys but {} values",
                self.k.rows(),
                self.v.rows()
            )));
        }
        if self.q.rows() != self.k.rows() {
            return Err(Error::validation(format!(
                "{} queries but {} keys",
                self.q.rows(),
                self.k.rows()
            )));
        }
        Ok(())
    }
}

/// `softmax(Q Kᵀ / √d_k) V`, returning the output and the attention map.
pub fn scaled_dot_attention_with_weights(inputs: &AttentionInputs) -> Result<(Matrix, Matrix)> {
    inputs.validate()?;
    let scale = 1.0 / (inputs.q.cols() as f64).sqrt();
    let mut weights = inputs.q.matmul_t(&inputs.k);
    weights.scale(scale);
    for r in 0..weights.rows() {
        softmax_in_place(weights.row_mut(r));
    }
    let out = weights.matmul(&inputs.v);
    Ok((out, weights))
}

/// `softmax(Q Kᵀ / √d_k) V` with a max-subtracted row softmax.
pub fn scaled_dot_attention(inputs: &AttentionInputs) -> Result<Matrix> {
    scaled_dot_attention_with_weights(inputs).map(|(out, _)| out)
}

/// Gradients of scaled dot-product attention with respect to Q, K and V.
pub(crate) fn scaled_dot_attention_backward(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    weights: &Matrix,
    d_out: &Matrix,
) -> (Matrix, Matrix, Matrix) {
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let d_v = weights.t_matmul(d_out);
    let d_weights = d_out.matmul_t(v);
    // Row-wise softmax Jacobian: dS = A ⊙ (dA − rowsum(dA ⊙ A)).
    let mut d_scores = Matrix::zeros(weights.rows(), weights.cols());
    for r in 0..weights.rows() {
        let a = weights.row(r);
        let da = d_weights.row(r);
        let inner: f64 = a.iter().zip(da).map(|(x, y)| x * y).sum();
        for (c, out) in d_scores.row_mut(r).iter_mut().enumerate() {
            *out = a[c] * (da[c] - inner) * scale;
        }
    }
    let d_q = d_scores.matmul(k);
    let d_k = d_scores.t_matmul(q);
    (d_q, d_k, d_v)
}

/// Projections of one attention head: `X W + b` for queries, keys, values.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w_q: Matrix,
    pub b_q: Matrix,
    pub w_k: Matrix,
    pub b_k: Matrix,
    pub w_v: Matrix,
    pub b_v: Matrix,
}

impl HeadParams {
    pub fn zeros(d_model: usize, d_head: usize) -> Self {
        Self {
            w_q: Matrix::zeros(d_model, d_head),
            b_q: Matrix::zeros(1, d_head),
            w_k: Matrix::zeros(d_model, d_head),
            b_k: Matrix::zeros(1, d_head),
            w_v: Matrix::zeros(d_model, d_head),
            b_v: Matrix::zeros(1, d_head),
        }
    }
}

/// Per-head projections plus the output projection `W_O`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadParams {
    pub heads: Vec<HeadParams>,
    pub w_o: Matrix,
    pub b_o: Matrix,
}

impl MultiHeadParams {
    /// All-zero parameters; `d_model` must be divisible by `h`.
    pub fn zeros(d_model: usize, h: usize) -> Result<Self> {
        check_heads(d_model, h)?;
        let d_head = d_model / h;
        Ok(Self {
            heads: (0..h).map(|_| HeadParams::zeros(d_model, d_head)).collect(),
            w_o: Matrix::zeros(d_model, d_model),
            b_o: Matrix::zeros(1, d_model),
        })
    }

    /// Identity-like projections: head `i` reads columns `i·d_head..` of the
    /// input, and `W_O` is the identity.
    pub fn identity(d_model: usize, h: usize) -> Result<Self> {
        let mut params = Self::zeros(d_model, h)?;
        let d_head = d_model / h;
        for (i, head) in params.heads.iter_mut().enumerate() {
            for j in 0..d_head {
                head.w_q.set(i * d_head + j, j, 1.0);
                head.w_k.set(i * d_head + j, j, 1.0);
                head.w_v.set(i * d_head + j, j, 1.0);
            }
        }
        for j in 0..d_model {
            params.w_o.set(j, j, 1.0);
        }
        Ok(params)
    }

    pub fn h(&self) -> usize {
        self.heads.len()
    }

    pub fn d_model(&self) -> usize {
        self.w_o.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let d_model = self.d_model();
        check_heads(d_model, self.h())?;
        let d_head = d_model / self.h();
        for head in &self.heads {
            for (w, b) in [
                (&head.w_q, &head.b_q),
                (&head.w_k, &head.b_k),
                (&head.w_v, &head.b_v),
            ] {
                if w.shape() != (d_model, d_head) || b.shape() != (1, d_head) {
                    return Err(Error::config("head projection has the wrong shape"));
                }
            }
        }
        if self.w_o.shape() != (d_model, d_model) || self.b_o.shape() != (1, d_model) {
            return Err(Error::config("output projection has the wrong shape"));
        }
        Ok(())
    }
}

fn check_heads(d_model: usize, h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::config("head count must be at least 1"));
    }
    if !d_model.is_multiple_of(h) {
        return Err(Error::config(format!(
            "d_model {d_model} is not divisible by {h} heads"
        )));
    }
    Ok(())
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct MultiHeadCache {
    pub x: Matrix,
    pub heads: Vec<HeadCache>,
    pub concat: Matrix,
}

#[derive(Debug, Clone)]
pub(crate) struct HeadCache {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    pub weights: Matrix,
}

fn project(x: &Matrix, w: &Matrix, b: &Matrix) -> Matrix {
    let mut out = x.matmul(w);
    out.add_row(b);
    out
}

pub(crate) fn multi_head_forward(x: &Matrix, params: &MultiHeadParams) -> (Matrix, MultiHeadCache) {
    let d_head = params.d_model() / params.h();
    let mut concat = Matrix::zeros(x.rows(), params.d_model());
    let mut heads = Vec::with_capacity(params.h());
    for (i, head) in params.heads.iter().enumerate() {
        let inputs = AttentionInputs {
            q: project(x, &head.w_q, &head.b_q),
            k: project(x, &head.w_k, &head.b_k),
            v: project(x, &head.w_v, &head.b_v),
        };
        let (out, weights) =
            scaled_dot_attention_with_weights(&inputs).expect("projection shapes are consistent");
        concat.set_column_block(i * d_head, &out);
        heads.push(HeadCache {
            q: inputs.q,
            k: inputs.k,
            v: inputs.v,
            weights,
        });
    }
    let out = project(&concat, &params.w_o, &params.b_o);
    (
        out,
        MultiHeadCache {
            x: x.clone(),
            heads,
            concat,
        },
    )
}

/// `Concat(head_1, …, head_h) W_O` where `head_i = Attention(X W_Qi, X W_Ki, X W_Vi)`.
pub fn multi_head_attention(x: &Matrix, params: &MultiHeadParams) -> Result<Matrix> {
    params.validate()?;
    if x.cols() != params.d_model() {
        return Err(Error::validation(format!(
            "input width {} differs from d_model {}",
            x.cols(),
            params.d_model()
        )));
    }
    Ok(multi_head_forward(x, params).0)
}

/// Accumulates parameter gradients into `grads` and returns `dL/dX`.
pub(crate) fn multi_head_backward(
    params: &MultiHeadParams,
    cache: &MultiHeadCache,
    d_out: &Matrix,
    grads: &mut MultiHeadParams,
) -> Matrix {
    let d_head = params.d_model() / params.h();
    grads.w_o.add_assign(&cache.concat.t_matmul(d_out));
    grads.b_o.add_assign(&d_out.column_sums());
    let d_concat = d_out.matmul_t(&params.w_o);
    let mut d_x = Matrix::zeros(cache.x.rows(), cache.x.cols());
    for (i, (head, hc)) in params.heads.iter().zip(&cache.heads).enumerate() {
        let d_head_out = d_concat.column_block(i * d_head, d_head);
        let (d_q, d_k, d_v) =
            scaled_dot_attention_backward(&hc.q, &hc.k, &hc.v, &hc.weights, &d_head_out);
        let g = &mut grads.heads[i];
        for (w, gw, gb, d) in [
            (&head.w_q, &mut g.w_q, &mut g.b_q, &d_q),
            (&head.w_k, &mut g.w_k, &mut g.b_k, &d_k),
            (&head.w_v, &mut g.w_v, &mut g.b_v, &d_v),
        ] {
            gw.add_assign(&cache.x.t_matmul(d));
            gb.add_assign(&d.column_sums());
            d_x.add_assign(&d.matmul_t(w));
        }
    }
    d_x
}

/// Fixed sinusoidal position table `PE[p][2i] = sin(p / 10000^(2i/d))`,
/// `PE[p][2i+1] = cos(p / 10000^(2i/d))`, positions counted from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalEncodingTable {
    pub table: Matrix,
}

impl PositionalEncodingTable {
    pub fn max_positions(&self) -> usize {
        self.table.rows()
    }

    pub fn d(&self) -> usize {
        self.table.cols()
    }

    pub fn get(&self, p: usize, dim: usize) -> f64 {
        self.table.get(p, dim)
    }

    pub fn row(&self, p: usize) -> &[f64] {
        self.table.row(p)
    }
}

pub fn positional_encoding(max_positions: usize, d: usize) -> Result<PositionalEncodingTable> {
    if max_positions == 0 {
        return Err(Error::config(
            "positional table needs at least one position",
        ));
    }
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::config(format!(
            "positional encoding dimension must be even, got {d}"
        )));
    }
    let mut table = Matrix::zeros(max_positions, d);
    for p in 0..max_positions {
        for i in 0..d / 2 {
            let angle = p as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            table.set(p, 2 * i, angle.sin());
            table.set(p, 2 * i + 1, angle.cos());
        }
    }
    Ok(PositionalEncodingTable { table })
}
