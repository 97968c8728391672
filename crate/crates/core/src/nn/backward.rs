//! Hand-derived reverse-mode gradients for the fixed architecture.
//!
//! The chain runs: heads (sigmoid/BCE, softmax/CE) -> dropout -> attention
//! (weighted sum, softmax, selu projection) -> both GRU directions unrolled
//! across time. Gradients of the mean batch loss are accumulated in
//! item-index order so reductions are deterministic.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, hadamard};

use super::forward::{forward, item_loss, selu_derivative, ForwardCache};
use super::params::{GruDirectionParams, ModelParams};

/// One training example as the gradient computation sees it.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub seq: &'a [Vec<f64>],
    /// 1.0 for Successful, 0.0 for Unsuccessful.
    pub success_target: f64,
    pub genre: Option<usize>,
    pub mask: Option<&'a [f64]>,
}

/// Gradient of one item's loss with respect to every parameter.
pub fn item_gradients(
    params: &ModelParams,
    seq: &[Vec<f64>],
    cache: &ForwardCache,
    success_target: f64,
    genre: Option<usize>,
) -> Result<ModelParams> {
    let n = cache.annotations.len();
    let hidden = params.dims.hidden;
    let annotation = params.annotation_dim();
    let mut g = params.zeros_like();

    // Success head: d(loss)/d(logit) = p - y for sigmoid + BCE.
    let dlogit = cache.success_prob - success_target;
    axpy(dlogit, &cache.dropped, &mut g.success_weight);
    g.success_bias += dlogit;
    let mut d_dropped = vec![0.0; annotation];
    axpy(dlogit, &params.success_weight, &mut d_dropped);

    // Genre head: d(loss)/d(logits) = probs - onehot for softmax + CE.
    if let Some(probs) = &cache.genre_probs {
        let genre = genre.ok_or_else(|| Error::Data("multitask item is missing its genre label".into()))?;
        let head = params.genre_head.as_ref().expect("genre probs imply genre head");
        let g_head = g.genre_head.as_mut().expect("gradient mirrors params");
        let mut dlogits = probs.clone();
        dlogits[genre] -= 1.0;
        g_head.weight.add_outer(&dlogits, &cache.dropped);
        axpy(1.0, &dlogits, &mut g_head.bias);
        let back = head.weight.matvec_t(&dlogits);
        axpy(1.0, &back, &mut d_dropped);
    }

    // Dropout is elementwise multiplication by the mask.
    let d_book = match &cache.mask {
        Some(mask) => hadamard(&d_dropped, mask),
        None => d_dropped,
    };

    // Attention: r = sum_i alpha_i h_i with alpha = softmax(score).
    let mut d_ann: Vec<Vec<f64>> = vec![vec![0.0; annotation]; n];
    let d_alpha: Vec<f64> = (0..n).map(|i| dot(&d_book, &cache.annotations[i])).collect();
    for i in 0..n {
        axpy(cache.alpha[i], &d_book, &mut d_ann[i]);
    }
    let weighted: f64 = cache.alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    for i in 0..n {
        let d_score = cache.alpha[i] * (d_alpha[i] - weighted);
        // score_i = score_weight . selu(proj h_i + proj_bias)
        axpy(d_score, &cache.attn_act[i], &mut g.attention.score_weight);
        let du: Vec<f64> = params
            .attention
            .score_weight
            .iter()
            .zip(&cache.attn_pre[i])
            .map(|(&v, &u)| d_score * v * selu_derivative(u))
            .collect();
        g.attention.proj.add_outer(&du, &cache.annotations[i]);
        axpy(1.0, &du, &mut g.attention.proj_bias);
        let back = params.attention.proj.matvec_t(&du);
        axpy(1.0, &back, &mut d_ann[i]);
    }

    // Split annotation gradients into the two directions. The backward
    // direction's step t read input n-1-t.
    let mut d_fwd = vec![vec![0.0; hidden]; n];
    let mut d_bwd = vec![vec![0.0; hidden]; n];
    for i in 0..n {
        d_fwd[i].copy_from_slice(&d_ann[i][..hidden]);
        d_bwd[n - 1 - i].copy_from_slice(&d_ann[i][hidden..]);
    }

    let inputs_fwd: Vec<&Vec<f64>> = seq.iter().collect();
    let inputs_bwd: Vec<&Vec<f64>> = seq.iter().rev().collect();
    backprop_direction(&params.gru_fwd, &mut g.gru_fwd, &cache.fwd.steps, &inputs_fwd, d_fwd);
    backprop_direction(&params.gru_bwd, &mut g.gru_bwd, &cache.bwd.steps, &inputs_bwd, d_bwd);

    Ok(g)
}

/// Backpropagation through time for one direction, in its reading order.
fn backprop_direction(
    p: &GruDirectionParams,
    g: &mut GruDirectionParams,
    steps: &[super::forward::GruStepCache],
    inputs: &[&Vec<f64>],
    d_h: Vec<Vec<f64>>,
) {
    let n = steps.len();
    let hidden = p.b_update.len();
    let zero = vec![0.0; hidden];
    let mut carry = vec![0.0; hidden];

    for t in (0..n).rev() {
        let step = &steps[t];
        let h_prev: &[f64] = if t == 0 { &zero } else { &steps[t - 1].h };
        let x = inputs[t];

        let mut dh = d_h[t].clone();
        axpy(1.0, &carry, &mut dh);

        // h = (1 - z) . h_prev + z . c
        let dz: Vec<f64> = (0..hidden).map(|i| dh[i] * (step.cand[i] - h_prev[i])).collect();
        let dc: Vec<f64> = (0..hidden).map(|i| dh[i] * step.update[i]).collect();
        let mut dh_prev: Vec<f64> = (0..hidden).map(|i| dh[i] * (1.0 - step.update[i])).collect();

        // c = tanh(Wc x + Uc (r . h_prev) + bc)
        let dc_pre: Vec<f64> = (0..hidden).map(|i| dc[i] * (1.0 - step.cand[i] * step.cand[i])).collect();
        g.w_cand.add_outer(&dc_pre, x);
        axpy(1.0, &dc_pre, &mut g.b_cand);
        let gated: Vec<f64> = (0..hidden).map(|i| step.reset[i] * h_prev[i]).collect();
        g.u_cand.add_outer(&dc_pre, &gated);
        let d_gated = p.u_cand.matvec_t(&dc_pre);
        let dr: Vec<f64> = (0..hidden).map(|i| d_gated[i] * h_prev[i]).collect();
        for i in 0..hidden {
            dh_prev[i] += d_gated[i] * step.reset[i];
        }

        // z = sig(Wz x + Uz h_prev + bz)
        let dz_pre: Vec<f64> = (0..hidden)
            .map(|i| dz[i] * step.update[i] * (1.0 - step.update[i]))
            .collect();
        g.w_update.add_outer(&dz_pre, x);
        g.u_update.add_outer(&dz_pre, h_prev);
        axpy(1.0, &dz_pre, &mut g.b_update);
        axpy(1.0, &p.u_update.matvec_t(&dz_pre), &mut dh_prev);

        // r = sig(Wr x + Ur h_prev + br)
        let dr_pre: Vec<f64> = (0..hidden)
            .map(|i| dr[i] * step.reset[i] * (1.0 - step.reset[i]))
            .collect();
        g.w_reset.add_outer(&dr_pre, x);
        g.u_reset.add_outer(&dr_pre, h_prev);
        axpy(1.0, &dr_pre, &mut g.b_reset);
        axpy(1.0, &p.u_reset.matvec_t(&dr_pre), &mut dh_prev);

        carry = dh_prev;
    }
}

/// Mean loss and mean gradients over a batch, items reduced in index order.
/// Non-finite results are reported with the offending tensor's name.
pub fn batch_gradients(params: &ModelParams, items: &[BatchItem]) -> Result<(f64, ModelParams)> {
    if items.is_empty() {
        return Err(Error::Data("gradient batch is empty".into()));
    }
    let mut total_loss = 0.0;
    let mut grads = params.zeros_like();
    for item in items {
        let (_, cache) = forward(params, item.seq, item.mask);
        total_loss += item_loss(params, &cache, item.success_target, item.genre)?;
        let g = item_gradients(params, item.seq, &cache, item.success_target, item.genre)?;
        grads.add_assign(&g);
    }
    let scale = 1.0 / items.len() as f64;
    grads.scale(scale);
    total_loss *= scale;

    if !total_loss.is_finite() {
        return Err(Error::Numerical("non-finite batch loss".into()));
    }
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::Numerical(format!("non-finite gradient in {name}")));
    }
    Ok((total_loss, grads))
}
