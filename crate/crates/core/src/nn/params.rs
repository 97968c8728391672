//! Model parameters, hyperparameter configuration, and initialization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ContentMode;
use crate::linalg::Mat;
use crate::rng::{RngFactory, StreamPurpose};

/// Single task predicts success only; multitask adds the genre head and sums
/// both losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    St,
    Mt,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::St => "st",
            TaskKind::Mt => "mt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "st" => Some(TaskKind::St),
            "mt" => Some(TaskKind::Mt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    GlorotUniform,
    LecunUniform,
}

impl InitScheme {
    pub fn name(self) -> &'static str {
        match self {
            InitScheme::GlorotUniform => "glorot_uniform",
            InitScheme::LecunUniform => "lecun_uniform",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "glorot_uniform" => Some(InitScheme::GlorotUniform),
            "lecun_uniform" => Some(InitScheme::LecunUniform),
            _ => None,
        }
    }

    /// Half-width of the uniform interval for a tensor with the given fans.
    pub fn bound(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            InitScheme::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            InitScheme::LecunUniform => (3.0 / fan_in as f64).sqrt(),
        }
    }
}

/// Everything the random search tunes, plus the fixed experiment knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    pub init: InitScheme,
    pub learning_rate: f64,
    pub dropout: f64,
    pub hidden_units: usize,
    pub attention_units: usize,
    pub batch_size: usize,
    pub n_chunks: usize,
    pub task: TaskKind,
    pub content: ContentMode,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub attention: usize,
    /// Number of genre classes; 0 in single-task mode.
    pub genres: usize,
}

/// One GRU direction: update gate, reset gate, candidate state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruDirectionParams {
    pub w_update: Mat,
    pub u_update: Mat,
    pub b_update: Vec<f64>,
    pub w_reset: Mat,
    pub u_reset: Mat,
    pub b_reset: Vec<f64>,
    pub w_cand: Mat,
    pub u_cand: Mat,
    pub b_cand: Vec<f64>,
}

impl GruDirectionParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_update: Mat::zeros(hidden, input),
            u_update: Mat::zeros(hidden, hidden),
            b_update: vec![0.0; hidden],
            w_reset: Mat::zeros(hidden, input),
            u_reset: Mat::zeros(hidden, hidden),
            b_reset: vec![0.0; hidden],
            w_cand: Mat::zeros(hidden, input),
            u_cand: Mat::zeros(hidden, hidden),
            b_cand: vec![0.0; hidden],
        }
    }
}

/// Additive attention: score_i = score_weight . selu(proj h_i + proj_bias).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    pub proj: Mat,
    pub proj_bias: Vec<f64>,
    pub score_weight: Vec<f64>,
}

impl AttentionParams {
    pub fn zeros(attention: usize, annotation: usize) -> Self {
        Self {
            proj: Mat::zeros(attention, annotation),
            proj_bias: vec![0.0; attention],
            score_weight: vec![0.0; attention],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreHeadParams {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

/// All learnable tensors. The genre head is present exactly in multitask
/// mode; gradient containers mirror this struct shape for shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub gru_fwd: GruDirectionParams,
    pub gru_bwd: GruDirectionParams,
    pub attention: AttentionParams,
    pub success_weight: Vec<f64>,
    pub success_bias: f64,
    pub genre_head: Option<GenreHeadParams>,
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let annotation = 2 * dims.hidden;
        Self {
            dims,
            gru_fwd: GruDirectionParams::zeros(dims.input, dims.hidden),
            gru_bwd: GruDirectionParams::zeros(dims.input, dims.hidden),
            attention: AttentionParams::zeros(dims.attention, annotation),
            success_weight: vec![0.0; annotation],
            success_bias: 0.0,
            genre_head: (dims.genres > 0).then(|| GenreHeadParams {
                weight: Mat::zeros(dims.genres, annotation),
                bias: vec![0.0; dims.genres],
            }),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims)
    }

    pub fn annotation_dim(&self) -> usize {
        2 * self.dims.hidden
    }

    /// All tensors with stable names, in canonical order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = vec![
            ("gru_fwd.w_update", &self.gru_fwd.w_update.data),
            ("gru_fwd.u_update", &self.gru_fwd.u_update.data),
            ("gru_fwd.b_update", &self.gru_fwd.b_update),
            ("gru_fwd.w_reset", &self.gru_fwd.w_reset.data),
            ("gru_fwd.u_reset", &self.gru_fwd.u_reset.data),
            ("gru_fwd.b_reset", &self.gru_fwd.b_reset),
            ("gru_fwd.w_cand", &self.gru_fwd.w_cand.data),
            ("gru_fwd.u_cand", &self.gru_fwd.u_cand.data),
            ("gru_fwd.b_cand", &self.gru_fwd.b_cand),
            ("gru_bwd.w_update", &self.gru_bwd.w_update.data),
            ("gru_bwd.u_update", &self.gru_bwd.u_update.data),
            ("gru_bwd.b_update", &self.gru_bwd.b_update),
            ("gru_bwd.w_reset", &self.gru_bwd.w_reset.data),
            ("gru_bwd.u_reset", &self.gru_bwd.u_reset.data),
            ("gru_bwd.b_reset", &self.gru_bwd.b_reset),
            ("gru_bwd.w_cand", &self.gru_bwd.w_cand.data),
            ("gru_bwd.u_cand", &self.gru_bwd.u_cand.data),
            ("gru_bwd.b_cand", &self.gru_bwd.b_cand),
            ("attention.proj", &self.attention.proj.data),
            ("attention.proj_bias", &self.attention.proj_bias),
            ("attention.score_weight", &self.attention.score_weight),
            ("success_weight", &self.success_weight),
            ("success_bias", std::slice::from_ref(&self.success_bias)),
        ];
        if let Some(head) = &self.genre_head {
            out.push(("genre_head.weight", &head.weight.data));
            out.push(("genre_head.bias", &head.bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> = vec![
            ("gru_fwd.w_update", self.gru_fwd.w_update.data.as_mut_slice()),
            ("gru_fwd.u_update", self.gru_fwd.u_update.data.as_mut_slice()),
            ("gru_fwd.b_update", self.gru_fwd.b_update.as_mut_slice()),
            ("gru_fwd.w_reset", self.gru_fwd.w_reset.data.as_mut_slice()),
            ("gru_fwd.u_reset", self.gru_fwd.u_reset.data.as_mut_slice()),
            ("gru_fwd.b_reset", self.gru_fwd.b_reset.as_mut_slice()),
            ("gru_fwd.w_cand", self.gru_fwd.w_cand.data.as_mut_slice()),
            ("gru_fwd.u_cand", self.gru_fwd.u_cand.data.as_mut_slice()),
            ("gru_fwd.b_cand", self.gru_fwd.b_cand.as_mut_slice()),
            ("gru_bwd.w_update", self.gru_bwd.w_update.data.as_mut_slice()),
            ("gru_bwd.u_update", self.gru_bwd.u_update.data.as_mut_slice()),
            ("gru_bwd.b_update", self.gru_bwd.b_update.as_mut_slice()),
            ("gru_bwd.w_reset", self.gru_bwd.w_reset.data.as_mut_slice()),
            ("gru_bwd.u_reset", self.gru_bwd.u_reset.data.as_mut_slice()),
            ("gru_bwd.b_reset", self.gru_bwd.b_reset.as_mut_slice()),
            ("gru_bwd.w_cand", self.gru_bwd.w_cand.data.as_mut_slice()),
            ("gru_bwd.u_cand", self.gru_bwd.u_cand.data.as_mut_slice()),
            ("gru_bwd.b_cand", self.gru_bwd.b_cand.as_mut_slice()),
            ("attention.proj", self.attention.proj.data.as_mut_slice()),
            ("attention.proj_bias", self.attention.proj_bias.as_mut_slice()),
            ("attention.score_weight", self.attention.score_weight.as_mut_slice()),
            ("success_weight", self.success_weight.as_mut_slice()),
            ("success_bias", std::slice::from_mut(&mut self.success_bias)),
        ];
        if let Some(head) = self.genre_head.as_mut() {
            out.push(("genre_head.weight", head.weight.data.as_mut_slice()));
            out.push(("genre_head.bias", head.bias.as_mut_slice()));
        }
        out
    }

    /// Name of the first non-finite tensor, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.tensors()
            .into_iter()
            .find(|(_, data)| data.iter().any(|v| !v.is_finite()))
            .map(|(name, _)| name)
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, data) in self.tensors_mut() {
            for v in data {
                *v *= factor;
            }
        }
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        let theirs = other.tensors();
        for ((_, mine), (_, others)) in self.tensors_mut().into_iter().zip(theirs) {
            debug_assert_eq!(mine.len(), others.len());
            for (m, o) in mine.iter_mut().zip(others) {
                *m += o;
            }
        }
    }
}

/// Weight matrices drawn uniform within the scheme's fan-based bound, biases
/// zero. Deterministic given the config seed (dedicated init stream).
pub fn init_params(config: &HyperConfig, dims: ModelDims) -> Result<ModelParams> {
    if dims.input == 0 || dims.hidden == 0 || dims.attention == 0 {
        return Err(Error::Config(format!("degenerate model dims {dims:?}")));
    }
    if config.task == TaskKind::Mt && dims.genres == 0 {
        return Err(Error::Config("multitask model needs at least one genre".into()));
    }
    if config.task == TaskKind::St && dims.genres != 0 {
        return Err(Error::Config("single-task model must not have genre classes".into()));
    }

    use rand::Rng;
    let mut rng = RngFactory::new(config.seed).stream(StreamPurpose::Init, 0);
    let mut params = ModelParams::zeros(dims);
    let scheme = config.init;

    fn fill(
        scheme: InitScheme,
        mat: &mut Mat,
        fan_in: usize,
        fan_out: usize,
        rng: &mut rand_chacha::ChaCha20Rng,
    ) {
        use rand::Rng;
        let bound = scheme.bound(fan_in, fan_out);
        for v in mat.data.iter_mut() {
            *v = rng.gen_range(-bound..bound);
        }
    }

    let (d, h, a) = (dims.input, dims.hidden, dims.attention);
    let ann = 2 * h;
    for dir in [&mut params.gru_fwd, &mut params.gru_bwd] {
        fill(scheme, &mut dir.w_update, d, h, &mut rng);
        fill(scheme, &mut dir.u_update, h, h, &mut rng);
        fill(scheme, &mut dir.w_reset, d, h, &mut rng);
        fill(scheme, &mut dir.u_reset, h, h, &mut rng);
        fill(scheme, &mut dir.w_cand, d, h, &mut rng);
        fill(scheme, &mut dir.u_cand, h, h, &mut rng);
    }
    fill(scheme, &mut params.attention.proj, ann, a, &mut rng);
    let bound = scheme.bound(a, 1);
    for v in params.attention.score_weight.iter_mut() {
        *v = rng.gen_range(-bound..bound);
    }
    let bound = scheme.bound(ann, 1);
    for v in params.success_weight.iter_mut() {
        *v = rng.gen_range(-bound..bound);
    }
    if let Some(head) = params.genre_head.as_mut() {
        fill(scheme, &mut head.weight, ann, dims.genres, &mut rng);
    }
    Ok(params)
}
