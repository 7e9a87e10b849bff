//! Encoder forward pass, the MLM and classification heads, and their
//! hand-written backward passes.

use super::attention::{
    multi_head_backward, multi_head_forward, positional_encoding, MultiHeadCache,
};
use super::params::EncoderParams;
use super::tensor::{log_sum_exp, softmax_in_place, Matrix};
use crate::error::{Error, Result};

/// Variance epsilon of every layer norm.
pub const LAYER_NORM_EPS: f64 = 1e-12;

const GELU_C: f64 = 0.797_884_560_802_865_4; // √(2/π)
const GELU_A: f64 = 0.044_715;

/// GELU in its tanh form.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_derivative(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

#[derive(Debug, Clone)]
pub(crate) struct LayerNormCache {
    x_hat: Matrix,
    inv_std: Vec<f64>,
}

pub(crate) fn layer_norm(x: &Matrix, gamma: &Matrix, beta: &Matrix) -> (Matrix, LayerNormCache) {
    let n = x.cols() as f64;
    let mut x_hat = Matrix::zeros(x.rows(), x.cols());
    let mut inv_std = Vec::with_capacity(x.rows());
    let mut y = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(inv);
        for (c, &v) in row.iter().enumerate() {
            let h = (v - mean) * inv;
            x_hat.set(r, c, h);
            y.set(r, c, gamma.get(0, c) * h + beta.get(0, c));
        }
    }
    (y, LayerNormCache { x_hat, inv_std })
}

pub(crate) fn layer_norm_backward(
    d_y: &Matrix,
    gamma: &Matrix,
    cache: &LayerNormCache,
    d_gamma: &mut Matrix,
    d_beta: &mut Matrix,
) -> Matrix {
    let n = d_y.cols() as f64;
    let mut d_x = Matrix::zeros(d_y.rows(), d_y.cols());
    let mut d_hat = vec![0.0; d_y.cols()];
    for r in 0..d_y.rows() {
        let dy = d_y.row(r);
        let xh = cache.x_hat.row(r);
        for c in 0..d_y.cols() {
            d_gamma.data_mut()[c] += dy[c] * xh[c];
            d_beta.data_mut()[c] += dy[c];
            d_hat[c] = dy[c] * gamma.get(0, c);
        }
        let mean_d = d_hat.iter().sum::<f64>() / n;
        let mean_dx = d_hat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n;
        let inv = cache.inv_std[r];
        for (c, out) in d_x.row_mut(r).iter_mut().enumerate() {
            *out = inv * (d_hat[c] - mean_d - xh[c] * mean_dx);
        }
    }
    d_x
}

#[derive(Debug, Clone)]
pub(crate) struct BlockCache {
    attn: MultiHeadCache,
    ln1: LayerNormCache,
    y1: Matrix,
    ff_pre: Matrix,
    ff_act: Matrix,
    ln2: LayerNormCache,
}

#[derive(Debug, Clone)]
pub(crate) struct EncoderCache {
    ids: Vec<usize>,
    blocks: Vec<BlockCache>,
}

fn check_ids(ids: &[u32], params: &EncoderParams) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::validation("cannot encode an empty sequence"));
    }
    if let Some(&bad) = ids
        .iter()
        .find(|&&id| id as usize >= params.config.vocab_size)
    {
        return Err(Error::validation(format!(
            "token id {bad} is outside the vocabulary of {}",
            params.config.vocab_size
        )));
    }
    Ok(())
}

/// Drops the tail of an overlong sequence, logging a warning.
pub fn truncate(ids: &[u32], max_seq_len: usize) -> &[u32] {
    if ids.len() > max_seq_len {
        log::warn!(
            "sequence of {} tokens truncated to {max_seq_len}",
            ids.len()
        );
        &ids[..max_seq_len]
    } else {
        ids
    }
}

pub(crate) fn forward_cached(
    ids: &[u32],
    params: &EncoderParams,
) -> Result<(Matrix, EncoderCache)> {
    check_ids(ids, params)?;
    let ids: Vec<usize> = truncate(ids, params.config.max_seq_len)
        .iter()
        .map(|&i| i as usize)
        .collect();
    let pe = positional_encoding(ids.len(), params.config.d_model)?;
    let mut x = params.token_embeddings.gather_rows(&ids);
    x.add_assign(&pe.table);
    let mut blocks = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (attn_out, attn) = multi_head_forward(&x, &layer.attn);
        let (y1, ln1) = layer_norm(&x.add(&attn_out), &layer.ln1_gamma, &layer.ln1_beta);
        let mut ff_pre = y1.matmul(&layer.w_ff1);
        ff_pre.add_row(&layer.b_ff1);
        let ff_act = ff_pre.map(gelu);
        let mut ff_out = ff_act.matmul(&layer.w_ff2);
        ff_out.add_row(&layer.b_ff2);
        let (y2, ln2) = layer_norm(&y1.add(&ff_out), &layer.ln2_gamma, &layer.ln2_beta);
        blocks.push(BlockCache {
            attn,
            ln1,
            y1,
            ff_pre,
            ff_act,
            ln2,
        });
        x = y2;
    }
    Ok((x, EncoderCache { ids, blocks }))
}

/// Hidden states `[seq × d_model]` of the post-norm encoder stack.
///
/// Sequences longer than `max_seq_len` lose their tail.
pub fn encoder_forward(token_ids: &[u32], params: &EncoderParams) -> Result<Matrix> {
    forward_cached(token_ids, params).map(|(h, _)| h)
}

pub(crate) fn encoder_backward(
    params: &EncoderParams,
    cache: &EncoderCache,
    d_hidden: Matrix,
    grads: &mut EncoderParams,
) {
    let mut d = d_hidden;
    for (l, (layer, bc)) in params.layers.iter().zip(&cache.blocks).enumerate().rev() {
        let g = &mut grads.layers[l];
        let d_h2 = layer_norm_backward(
            &d,
            &layer.ln2_gamma,
            &bc.ln2,
            &mut g.ln2_gamma,
            &mut g.ln2_beta,
        );
        // h2 = y1 + ff_out
        g.w_ff2.add_assign(&bc.ff_act.t_matmul(&d_h2));
        g.b_ff2.add_assign(&d_h2.column_sums());
        let d_act = d_h2.matmul_t(&layer.w_ff2);
        let mut d_pre = d_act;
        for (dp, &x) in d_pre.data_mut().iter_mut().zip(bc.ff_pre.data()) {
            *dp *= gelu_derivative(x);
        }
        g.w_ff1.add_assign(&bc.y1.t_matmul(&d_pre));
        g.b_ff1.add_assign(&d_pre.column_sums());
        let mut d_y1 = d_pre.matmul_t(&layer.w_ff1);
        d_y1.add_assign(&d_h2);
        let d_h1 = layer_norm_backward(
            &d_y1,
            &layer.ln1_gamma,
            &bc.ln1,
            &mut g.ln1_gamma,
            &mut g.ln1_beta,
        );
        // h1 = x + attention(x)
        let mut d_x = multi_head_backward(&layer.attn, &bc.attn, &d_h1, &mut g.attn);
        d_x.add_assign(&d_h1);
        d = d_x;
    }
    for (p, &id) in cache.ids.iter().enumerate() {
        for (e, &v) in grads.token_embeddings.row_mut(id).iter_mut().zip(d.row(p)) {
            *e += v;
        }
    }
}

struct MlmHeadCache {
    rows: Matrix,
    pre: Matrix,
    act: Matrix,
    ln: LayerNormCache,
    transformed: Matrix,
}

fn mlm_head_forward(
    hidden: &Matrix,
    positions: &[usize],
    params: &EncoderParams,
) -> (Matrix, MlmHeadCache) {
    let rows = hidden.gather_rows(positions);
    let mut pre = rows.matmul(&params.w_mlm);
    pre.add_row(&params.b_mlm);
    let act = pre.map(gelu);
    let (transformed, ln) = layer_norm(&act, &params.mlm_ln_gamma, &params.mlm_ln_beta);
    let mut logits = transformed.matmul_t(&params.token_embeddings);
    logits.add_row(&params.b_mlm_out);
    (
        logits,
        MlmHeadCache {
            rows,
            pre,
            act,
            ln,
            transformed,
        },
    )
}

/// Vocabulary logits `[positions × vocab]` of the MLM head.
pub fn mlm_logits(hidden: &Matrix, positions: &[usize], params: &EncoderParams) -> Matrix {
    mlm_head_forward(hidden, positions, params).0
}

fn labeled_positions(labels: &[Option<u32>], hidden_rows: usize) -> (Vec<usize>, Vec<usize>) {
    labels
        .iter()
        .take(hidden_rows)
        .enumerate()
        .filter_map(|(p, l)| l.map(|t| (p, t as usize)))
        .unzip()
}

/// Mean cross-entropy of the MLM head over the labeled positions.
pub fn mlm_loss(hidden: &Matrix, labels: &[Option<u32>], params: &EncoderParams) -> Result<f64> {
    let (positions, targets) = labeled_positions(labels, hidden.rows());
    if positions.is_empty() {
        return Err(Error::validation(
            "MLM loss needs at least one labeled position",
        ));
    }
    let logits = mlm_logits(hidden, &positions, params);
    let total = cross_entropy_sum(&logits, &targets)?;
    Ok(total / positions.len() as f64)
}

fn cross_entropy_sum(logits: &Matrix, targets: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        if t >= logits.cols() {
            return Err(Error::validation(format!(
                "label {t} is outside {} classes",
                logits.cols()
            )));
        }
        total += log_sum_exp(logits.row(r)) - logits.get(r, t);
    }
    Ok(total)
}

/// `softmax(logits) − onehot(targets)`, scaled.
fn cross_entropy_grad(logits: &Matrix, targets: &[usize], scale: f64) -> Matrix {
    let mut d = logits.clone();
    for (r, &t) in targets.iter().enumerate() {
        let row = d.row_mut(r);
        softmax_in_place(row);
        row[t] -= 1.0;
        for x in row.iter_mut() {
            *x *= scale;
        }
    }
    d
}

/// Summed MLM cross-entropy of one sequence; accumulates `scale ×` its
/// gradient into `grads` and returns the hidden-state gradient.
pub(crate) fn mlm_head_backward(
    hidden: &Matrix,
    labels: &[Option<u32>],
    params: &EncoderParams,
    scale: f64,
    grads: &mut EncoderParams,
) -> Result<(f64, Matrix)> {
    let mut d_hidden = Matrix::zeros(hidden.rows(), hidden.cols());
    let (positions, targets) = labeled_positions(labels, hidden.rows());
    if positions.is_empty() {
        return Ok((0.0, d_hidden));
    }
    let (logits, cache) = mlm_head_forward(hidden, &positions, params);
    let loss = cross_entropy_sum(&logits, &targets)?;
    let d_logits = cross_entropy_grad(&logits, &targets, scale);
    grads.b_mlm_out.add_assign(&d_logits.column_sums());
    grads
        .token_embeddings
        .add_assign(&d_logits.t_matmul(&cache.transformed));
    let d_transformed = d_logits.matmul(&params.token_embeddings);
    let mut d_pre = layer_norm_backward(
        &d_transformed,
        &params.mlm_ln_gamma,
        &cache.ln,
        &mut grads.mlm_ln_gamma,
        &mut grads.mlm_ln_beta,
    );
    for (dp, &x) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
        *dp *= gelu_derivative(x);
    }
    debug_assert_eq!(cache.act.shape(), d_pre.shape());
    grads.w_mlm.add_assign(&cache.rows.t_matmul(&d_pre));
    grads.b_mlm.add_assign(&d_pre.column_sums());
    let d_rows = d_pre.matmul_t(&params.w_mlm);
    for (i, &p) in positions.iter().enumerate() {
        for (o, &v) in d_hidden.row_mut(p).iter_mut().zip(d_rows.row(i)) {
            *o += v;
        }
    }
    Ok((loss, d_hidden))
}

/// Class logits read from the hidden state at the CLS position.
pub fn classifier_logits(hidden: &Matrix, params: &EncoderParams) -> Vec<f64> {
    let mut logits = hidden.gather_rows(&[0]).matmul(&params.w_cls);
    logits.add_row(&params.b_cls);
    logits.into_vec()
}

pub(crate) fn classifier_backward(
    hidden: &Matrix,
    label: usize,
    params: &EncoderParams,
    scale: f64,
    grads: &mut EncoderParams,
) -> Result<(f64, Matrix)> {
    let logits = Matrix::from_vec(
        1,
        params.config.num_labels,
        classifier_logits(hidden, params),
    );
    let loss = cross_entropy_sum(&logits, &[label])?;
    let d_logits = cross_entropy_grad(&logits, &[label], scale);
    let cls = hidden.gather_rows(&[0]);
    grads.w_cls.add_assign(&cls.t_matmul(&d_logits));
    grads.b_cls.add_assign(&d_logits);
    let mut d_hidden = Matrix::zeros(hidden.rows(), hidden.cols());
    d_hidden
        .row_mut(0)
        .copy_from_slice(d_logits.matmul_t(&params.w_cls).data());
    Ok((loss, d_hidden))
}
