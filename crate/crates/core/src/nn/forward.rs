//! Forward pass: GRU steps, bidirectional encoding, additive attention,
//! task heads, and losses. Every intermediate the backward pass needs is
//! kept in `ForwardCache`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::dot;

use super::params::{AttentionParams, GruDirectionParams, ModelParams};

pub const SELU_LAMBDA: f64 = 1.0507009873554805;
pub const SELU_ALPHA: f64 = 1.6732632423543772;

/// Probability clamp applied before logarithms in the losses.
pub const PROB_EPS: f64 = 1e-12;

#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
    }
}

#[inline]
pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax; always a strictly positive simplex vector.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// log(sum(exp(scores))), max-subtracted.
pub fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln()
}

/// Intermediates of one GRU step, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct GruStepCache {
    pub update: Vec<f64>,
    pub reset: Vec<f64>,
    pub cand: Vec<f64>,
    pub h: Vec<f64>,
}

/// z = sig(Wz x + Uz h + bz); r = sig(Wr x + Ur h + br);
/// c = tanh(Wc x + Uc (r . h) + bc); h' = (1 - z) . h + z . c
pub fn gru_step_cached(p: &GruDirectionParams, h_prev: &[f64], x: &[f64]) -> GruStepCache {
    let hidden = h_prev.len();
    let mut update = p.w_update.matvec(x);
    let uz = p.u_update.matvec(h_prev);
    let mut reset = p.w_reset.matvec(x);
    let ur = p.u_reset.matvec(h_prev);
    for i in 0..hidden {
        update[i] = sigmoid(update[i] + uz[i] + p.b_update[i]);
        reset[i] = sigmoid(reset[i] + ur[i] + p.b_reset[i]);
    }
    let gated: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    let mut cand = p.w_cand.matvec(x);
    let uc = p.u_cand.matvec(&gated);
    for i in 0..hidden {
        cand[i] = (cand[i] + uc[i] + p.b_cand[i]).tanh();
    }
    let h = (0..hidden)
        .map(|i| (1.0 - update[i]) * h_prev[i] + update[i] * cand[i])
        .collect();
    GruStepCache { update, reset, cand, h }
}

/// One GRU step without the cache.
pub fn gru_step(p: &GruDirectionParams, h_prev: &[f64], x: &[f64]) -> Vec<f64> {
    gru_step_cached(p, h_prev, x).h
}

/// Steps of one direction in its reading order.
#[derive(Debug, Clone)]
pub struct DirectionCache {
    pub steps: Vec<GruStepCache>,
}

fn run_direction<'a, I>(p: &GruDirectionParams, hidden: usize, inputs: I) -> DirectionCache
where
    I: Iterator<Item = &'a Vec<f64>>,
{
    let mut steps = Vec::new();
    let mut h_prev = vec![0.0; hidden];
    for x in inputs {
        let step = gru_step_cached(p, &h_prev, x);
        h_prev = step.h.clone();
        steps.push(step);
    }
    DirectionCache { steps }
}

/// Annotations h_i = [forward h_i ; backward h_i], both directions starting
/// from the zero state.
pub fn bigru(fwd: &GruDirectionParams, bwd: &GruDirectionParams, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let hidden = fwd.b_update.len();
    let f = run_direction(fwd, hidden, seq.iter());
    let b = run_direction(bwd, hidden, seq.iter().rev());
    concat_annotations(&f, &b, seq.len())
}

fn concat_annotations(f: &DirectionCache, b: &DirectionCache, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut ann = f.steps[i].h.clone();
            ann.extend_from_slice(&b.steps[n - 1 - i].h);
            ann
        })
        .collect()
}

/// Attention over annotations: returns the book vector r and the weights.
pub fn attention(a: &AttentionParams, annotations: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let (r, alpha, _, _) = attention_cached(a, annotations);
    (r, alpha)
}

fn attention_cached(
    a: &AttentionParams,
    annotations: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut pre = Vec::with_capacity(annotations.len());
    let mut act = Vec::with_capacity(annotations.len());
    let mut scores = Vec::with_capacity(annotations.len());
    for ann in annotations {
        let mut u = a.proj.matvec(ann);
        for (ui, b) in u.iter_mut().zip(&a.proj_bias) {
            *ui += b;
        }
        let s: Vec<f64> = u.iter().map(|&x| selu(x)).collect();
        scores.push(dot(&a.score_weight, &s));
        pre.push(u);
        act.push(s);
    }
    let alpha = softmax(&scores);
    let dim = annotations[0].len();
    let mut r = vec![0.0; dim];
    for (w, ann) in alpha.iter().zip(annotations) {
        for (ri, &ai) in r.iter_mut().zip(ann) {
            *ri += w * ai;
        }
    }
    (r, alpha, pre, act)
}

/// Model outputs for one sequence.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub success_prob: f64,
    pub genre_probs: Option<Vec<f64>>,
    pub attention: Vec<f64>,
}

impl Prediction {
    pub fn success_label_is_successful(&self) -> bool {
        self.success_prob >= 0.5
    }
}

/// Every intermediate needed by the backward pass for one item.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub fwd: DirectionCache,
    pub bwd: DirectionCache,
    pub annotations: Vec<Vec<f64>>,
    pub attn_pre: Vec<Vec<f64>>,
    pub attn_act: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub book_vec: Vec<f64>,
    pub dropped: Vec<f64>,
    pub mask: Option<Vec<f64>>,
    pub success_prob: f64,
    pub genre_probs: Option<Vec<f64>>,
}

/// Full forward pass. `mask` is the inverted-dropout mask over the book
/// vector; pass `None` at inference, which makes the pass deterministic.
pub fn forward(params: &ModelParams, seq: &[Vec<f64>], mask: Option<&[f64]>) -> (Prediction, ForwardCache) {
    assert!(!seq.is_empty(), "sequence must have at least one chunk");
    let hidden = params.dims.hidden;
    let fwd = run_direction(&params.gru_fwd, hidden, seq.iter());
    let bwd = run_direction(&params.gru_bwd, hidden, seq.iter().rev());
    let annotations = concat_annotations(&fwd, &bwd, seq.len());
    let (book_vec, alpha, attn_pre, attn_act) = attention_cached(&params.attention, &annotations);

    let dropped: Vec<f64> = match mask {
        Some(m) => {
            debug_assert_eq!(m.len(), book_vec.len());
            book_vec.iter().zip(m).map(|(v, k)| v * k).collect()
        }
        None => book_vec.clone(),
    };

    let success_prob = sigmoid(dot(&params.success_weight, &dropped) + params.success_bias);
    let genre_probs = params.genre_head.as_ref().map(|head| {
        let mut logits = head.weight.matvec(&dropped);
        for (l, b) in logits.iter_mut().zip(&head.bias) {
            *l += b;
        }
        softmax(&logits)
    });

    let prediction = Prediction {
        success_prob,
        genre_probs: genre_probs.clone(),
        attention: alpha.clone(),
    };
    let cache = ForwardCache {
        fwd,
        bwd,
        annotations,
        attn_pre,
        attn_act,
        alpha,
        book_vec,
        dropped,
        mask: mask.map(<[f64]>::to_vec),
        success_prob,
        genre_probs,
    };
    (prediction, cache)
}

/// Binary cross entropy with the probability clamped away from 0 and 1.
pub fn binary_cross_entropy(prob: f64, target: f64) -> f64 {
    let p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Cross entropy of a softmax distribution at the true class, computed from
/// the clamped probability.
pub fn categorical_cross_entropy(probs: &[f64], true_class: usize) -> f64 {
    -probs[true_class].clamp(PROB_EPS, 1.0 - PROB_EPS).ln()
}

/// Per-item loss: success BCE, plus genre cross entropy when the model has a
/// genre head. Multitask items must carry a genre label.
pub fn item_loss(params: &ModelParams, cache: &ForwardCache, success_target: f64, genre: Option<usize>) -> Result<f64> {
    let mut loss = binary_cross_entropy(cache.success_prob, success_target);
    if let Some(probs) = &cache.genre_probs {
        let genre = genre.ok_or_else(|| Error::Data("multitask item is missing its genre label".into()))?;
        if genre >= params.dims.genres {
            return Err(Error::Data(format!(
                "genre index {genre} out of range for {} classes",
                params.dims.genres
            )));
        }
        loss += categorical_cross_entropy(probs, genre);
    }
    Ok(loss)
}

/// Inverted-scaling dropout mask: each component is 0 with probability
/// `rate`, else 1/(1 - rate), so the mask has unit expectation.
pub fn dropout_mask<R: Rng>(dim: usize, rate: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if rate == 0.0 {
        return Ok(vec![1.0; dim]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..dim)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ContentMode;
    use crate::nn::params::{init_params, HyperConfig, InitScheme, ModelDims, TaskKind};
    use crate::rng::{RngFactory, StreamPurpose};

    #[test]
    fn selu_reference_points() {
        assert_eq!(selu(0.0), 0.0);
        assert!((selu(1.0) - 1.0507009873554805).abs() < 1e-12);
        // large negative input approaches -lambda * alpha
        assert!((selu(-20.0) - (-1.7580993408473766)).abs() < 1e-6);
        assert!(selu(-20.0) > -SELU_LAMBDA * SELU_ALPHA);
    }

    #[test]
    fn gru_step_zero_fixed_point() {
        let p = GruDirectionParams::zeros(3, 2);
        let h = gru_step(&p, &[0.0, 0.0], &[0.0, 0.0, 0.0]);
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn gru_step_scalar_hand_value() {
        // H = D = 1, all weights 1, biases 0, h_prev = 0, x = 1:
        // z = sig(1), c = tanh(1), h = z * c ~ 0.556768
        let mut p = GruDirectionParams::zeros(1, 1);
        for m in [&mut p.w_update, &mut p.u_update, &mut p.w_reset, &mut p.u_reset, &mut p.w_cand, &mut p.u_cand] {
            m.data[0] = 1.0;
        }
        let h = gru_step(&p, &[0.0], &[1.0]);
        let z = sigmoid(1.0);
        let expected = z * 1.0f64.tanh();
        assert!((h[0] - expected).abs() < 1e-12);
        assert!((h[0] - 0.5567699411459397).abs() < 1e-12);
    }

    fn random_direction(seed: u64, input: usize, hidden: usize) -> GruDirectionParams {
        use rand::Rng;
        let mut rng = RngFactory::new(seed).stream(StreamPurpose::Init, 9);
        let mut p = GruDirectionParams::zeros(input, hidden);
        for m in [&mut p.w_update, &mut p.u_update, &mut p.w_reset, &mut p.u_reset, &mut p.w_cand, &mut p.u_cand] {
            for v in m.data.iter_mut() {
                *v = rng.gen_range(-0.9..0.9);
            }
        }
        for b in [&mut p.b_update, &mut p.b_reset, &mut p.b_cand] {
            for v in b.iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        p
    }

    #[test]
    fn gru_state_stays_in_open_unit_interval() {
        use rand::Rng;
        let p = random_direction(5, 4, 3);
        let mut rng = RngFactory::new(6).stream(StreamPurpose::Init, 1);
        let mut h = vec![0.0; 3];
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            h = gru_step(&p, &h, &x);
            assert!(h.iter().all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn bigru_single_step_matches_gru_step() {
        let fwd = random_direction(1, 4, 3);
        let bwd = random_direction(2, 4, 3);
        let x = vec![vec![0.3, -0.2, 0.9, 0.1]];
        let ann = bigru(&fwd, &bwd, &x);
        assert_eq!(ann.len(), 1);
        let zero = vec![0.0; 3];
        let expect_f = gru_step(&fwd, &zero, &x[0]);
        let expect_b = gru_step(&bwd, &zero, &x[0]);
        assert_eq!(&ann[0][..3], expect_f.as_slice());
        assert_eq!(&ann[0][3..], expect_b.as_slice());
    }

    #[test]
    fn bigru_palindrome_symmetry() {
        // With shared direction params, a palindromic sequence yields
        // annotations that are their own reverse with halves swapped.
        let dir = random_direction(3, 4, 3);
        let a = vec![0.5, -0.1, 0.2, 0.8];
        let b = vec![-0.4, 0.9, 0.0, 0.3];
        let seq = vec![a.clone(), b.clone(), a.clone()];
        let ann = bigru(&dir, &dir, &seq);
        for i in 0..seq.len() {
            let j = seq.len() - 1 - i;
            let (fi, bi) = ann[i].split_at(3);
            let (fj, bj) = ann[j].split_at(3);
            for k in 0..3 {
                assert!((fi[k] - bj[k]).abs() < 1e-12);
                assert!((bi[k] - fj[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bigru_zero_sequence_zero_biases_gives_zero() {
        let p = GruDirectionParams::zeros(2, 3);
        let seq = vec![vec![0.0, 0.0]; 4];
        let ann = bigru(&p, &p, &seq);
        assert!(ann.iter().all(|a| a.iter().all(|&v| v == 0.0)));
    }

    fn random_attention(seed: u64, attn: usize, annotation: usize) -> AttentionParams {
        use rand::Rng;
        let mut rng = RngFactory::new(seed).stream(StreamPurpose::Init, 2);
        let mut a = AttentionParams::zeros(attn, annotation);
        for v in a.proj.data.iter_mut() {
            *v = rng.gen_range(-0.7..0.7);
        }
        for v in a.proj_bias.iter_mut().chain(a.score_weight.iter_mut()) {
            *v = rng.gen_range(-0.7..0.7);
        }
        a
    }

    #[test]
    fn attention_singleton_is_identity() {
        let a = random_attention(4, 3, 6);
        let ann = vec![vec![0.1, 0.4, -0.3, 0.2, 0.0, -0.9]];
        let (r, alpha) = attention(&a, &ann);
        assert_eq!(alpha, vec![1.0]);
        assert_eq!(r, ann[0]);
    }

    #[test]
    fn attention_identical_annotations_split_evenly() {
        let a = random_attention(4, 3, 4);
        let ann = vec![vec![0.1, 0.4, -0.3, 0.2]; 2];
        let (r, alpha) = attention(&a, &ann);
        assert!((alpha[0] - 0.5).abs() < 1e-15);
        assert!((alpha[1] - 0.5).abs() < 1e-15);
        for (ri, ai) in r.iter().zip(&ann[0]) {
            assert!((ri - ai).abs() < 1e-15);
        }
    }

    #[test]
    fn attention_weights_form_a_simplex() {
        use rand::Rng;
        let a = random_attention(8, 4, 6);
        let mut rng = RngFactory::new(12).stream(StreamPurpose::Init, 3);
        for _ in 0..200 {
            let n = rng.gen_range(1..8);
            let ann: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..6).map(|_| rng.gen_range(-30.0..30.0)).collect())
                .collect();
            let (_, alpha) = attention(&a, &ann);
            assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(alpha.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let scores = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.456).collect();
        let a = softmax(&scores);
        let b = softmax(&shifted);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_weights_ignore_constant_score_offsets() {
        // An extra attention unit with a zero projection row contributes
        // score_weight * selu(bias) to every score equally, so the weights
        // must not move.
        let base = random_attention(9, 3, 4);
        let mut augmented = AttentionParams::zeros(4, 4);
        for row in 0..3 {
            for col in 0..4 {
                augmented.proj.data[row * 4 + col] = base.proj.data[row * 4 + col];
            }
        }
        augmented.proj_bias[..3].copy_from_slice(&base.proj_bias);
        augmented.score_weight[..3].copy_from_slice(&base.score_weight);
        augmented.proj_bias[3] = 2.75; // zero projection row: constant offset
        augmented.score_weight[3] = -4.0;

        let mut rng = RngFactory::new(14).stream(StreamPurpose::Init, 4);
        use rand::Rng;
        let ann: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let (_, alpha_base) = attention(&base, &ann);
        let (_, alpha_aug) = attention(&augmented, &ann);
        for (a, b) in alpha_base.iter().zip(&alpha_aug) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_and_multi_task_agree_on_success_probability() {
        let mt = mt_params(23);
        let mut st = mt.clone();
        st.genre_head = None;
        st.dims.genres = 0;
        let seq = vec![vec![0.4, -1.0, 2.2, 0.7, 1.3]; 5];
        let (pred_mt, _) = forward(&mt, &seq, None);
        let (pred_st, _) = forward(&st, &seq, None);
        assert_eq!(pred_mt.success_prob, pred_st.success_prob);
        assert!(pred_st.genre_probs.is_none());
        assert!(pred_mt.genre_probs.is_some());
    }

    fn mt_params(seed: u64) -> ModelParams {
        let config = HyperConfig {
            init: InitScheme::GlorotUniform,
            learning_rate: 1e-3,
            dropout: 0.0,
            hidden_units: 3,
            attention_units: 3,
            batch_size: 1,
            n_chunks: 4,
            task: TaskKind::Mt,
            content: ContentMode::All,
            seed,
        };
        let dims = ModelDims { input: 5, hidden: 3, attention: 3, genres: 4 };
        init_params(&config, dims).unwrap()
    }

    #[test]
    fn zero_weights_give_chance_outputs() {
        let params = ModelParams::zeros(ModelDims { input: 5, hidden: 3, attention: 3, genres: 4 });
        let seq = vec![vec![1.0, -2.0, 0.5, 0.0, 3.0]; 4];
        let (pred, _) = forward(&params, &seq, None);
        assert_eq!(pred.success_prob, 0.5);
        let genre = pred.genre_probs.unwrap();
        assert!(genre.iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn inference_is_deterministic_and_probability_in_open_interval() {
        let params = mt_params(5);
        let seq = vec![vec![0.5, 1.5, -0.5, 2.0, 0.0]; 4];
        let (a, _) = forward(&params, &seq, None);
        let (b, _) = forward(&params, &seq, None);
        assert_eq!(a.success_prob, b.success_prob);
        assert!(a.success_prob > 0.0 && a.success_prob < 1.0);
    }

    #[test]
    fn bce_reference_values() {
        assert!((binary_cross_entropy(0.5, 1.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((binary_cross_entropy(0.5, 0.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(binary_cross_entropy(1.0, 1.0) < 1e-10);
        assert!(binary_cross_entropy(0.0, 1.0).is_finite());
    }

    #[test]
    fn multitask_loss_is_sum_of_task_losses() {
        let params = mt_params(11);
        let seq = vec![vec![0.5, 1.5, -0.5, 2.0, 0.0]; 4];
        let (pred, cache) = forward(&params, &seq, None);
        let total = item_loss(&params, &cache, 1.0, Some(2)).unwrap();
        let suc = binary_cross_entropy(pred.success_prob, 1.0);
        let gen = categorical_cross_entropy(pred.genre_probs.as_ref().unwrap(), 2);
        assert!((total - (suc + gen)).abs() < 1e-12);
    }

    #[test]
    fn multitask_item_requires_genre() {
        let params = mt_params(11);
        let seq = vec![vec![0.0; 5]; 4];
        let (_, cache) = forward(&params, &seq, None);
        assert!(item_loss(&params, &cache, 1.0, None).is_err());
    }

    #[test]
    fn dropout_mask_properties() {
        let mut rng = RngFactory::new(1).stream(StreamPurpose::Dropout, 0);
        assert_eq!(dropout_mask(4, 0.0, &mut rng).unwrap(), vec![1.0; 4]);
        assert!(dropout_mask(4, 1.0, &mut rng).is_err());
        assert!(dropout_mask(4, -0.1, &mut rng).is_err());

        // empirical zero fraction within +-0.01 of the rate over 1e5 draws
        let rate = 0.4;
        let n = 100_000;
        let mask = dropout_mask(n, rate, &mut rng).unwrap();
        let zeros = mask.iter().filter(|&&v| v == 0.0).count() as f64 / n as f64;
        assert!((zeros - rate).abs() < 0.01, "zero fraction {zeros}");
        // unit expectation
        let mean: f64 = mask.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mask mean {mean}");
    }
}
