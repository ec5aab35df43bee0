use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::linalg::Scalar;
use crate::error::{Error, Result};
use crate::prompt::VOCAB_SIZE;

/// Hidden width of the MLP relative to the embedding width.
pub const MLP_RATIO: usize = 4;

/// Standard deviation of the normal initialisation of weights and embeddings.
pub const INIT_STD: f64 = 0.02;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub embed_dim: usize,
    pub context_length: usize,
    /// Reuse the token embedding as the output projection.
    pub tied_embeddings: bool,
}

impl ModelConfig {
    /// 12 layers, 8 heads, width 256: about 9.56M parameters at context 256.
    pub fn paper() -> Self {
        ModelConfig {
            layers: 12,
            heads: 8,
            embed_dim: 256,
            context_length: 256,
            tied_embeddings: false,
        }
    }

    /// Two layers, width 64, context 128: trains on one CPU core in minutes.
    pub fn desk() -> Self {
        ModelConfig {
            layers: 2,
            heads: 8,
            embed_dim: 64,
            context_length: 128,
            tied_embeddings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.heads == 0 || self.embed_dim == 0 {
            return Err(Error::invalid("layers, heads and embed_dim must be positive"));
        }
        if !self.embed_dim.is_multiple_of(self.heads) {
            return Err(Error::invalid(format!(
                "embed_dim {} not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        if self.context_length < 2 {
            return Err(Error::invalid("context_length must be at least 2"));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }

    pub fn hidden_dim(&self) -> usize {
        self.embed_dim * MLP_RATIO
    }

    /// Closed-form parameter count.
    pub fn parameter_count(&self) -> usize {
        let d = self.embed_dim;
        let v = VOCAB_SIZE;
        let per_layer = 4 * (d * d + d) + 2 * (2 * d) + (d * 4 * d + 4 * d) + (4 * d * d + d);
        let head = if self.tied_embeddings { v } else { d * v + v };
        v * d + self.context_length * d + self.layers * per_layer + 2 * d + head
    }

    /// Names, shapes and weight-decay flags of every tensor, in canonical order.
    pub fn tensor_specs(&self) -> Vec<TensorSpec> {
        let d = self.embed_dim;
        let h = self.hidden_dim();
        let v = VOCAB_SIZE;
        let mut out = vec![
            TensorSpec::new("wte", &[v, d], Init::Normal),
            TensorSpec::new("wpe", &[self.context_length, d], Init::Normal),
        ];
        for l in 0..self.layers {
            let p = |s: &str| format!("h{l}.{s}");
            out.extend([
                TensorSpec::new(&p("ln1.g"), &[d], Init::One),
                TensorSpec::new(&p("ln1.b"), &[d], Init::Zero),
                TensorSpec::new(&p("attn.wq"), &[d, d], Init::Normal),
                TensorSpec::new(&p("attn.bq"), &[d], Init::Zero),
                TensorSpec::new(&p("attn.wk"), &[d, d], Init::Normal),
                TensorSpec::new(&p("attn.bk"), &[d], Init::Zero),
                TensorSpec::new(&p("attn.wv"), &[d, d], Init::Normal),
                TensorSpec::new(&p("attn.bv"), &[d], Init::Zero),
                TensorSpec::new(&p("attn.wo"), &[d, d], Init::Normal),
                TensorSpec::new(&p("attn.bo"), &[d], Init::Zero),
                TensorSpec::new(&p("ln2.g"), &[d], Init::One),
                TensorSpec::new(&p("ln2.b"), &[d], Init::Zero),
                TensorSpec::new(&p("mlp.w_fc"), &[d, h], Init::Normal),
                TensorSpec::new(&p("mlp.b_fc"), &[h], Init::Zero),
                TensorSpec::new(&p("mlp.w_proj"), &[h, d], Init::Normal),
                TensorSpec::new(&p("mlp.b_proj"), &[d], Init::Zero),
            ]);
        }
        out.push(TensorSpec::new("lnf.g", &[d], Init::One));
        out.push(TensorSpec::new("lnf.b", &[d], Init::Zero));
        if !self.tied_embeddings {
            out.push(TensorSpec::new("head.w", &[d, v], Init::Normal));
        }
        out.push(TensorSpec::new("head.b", &[v], Init::Zero));
        out
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "layers={} heads={} dim={} context={} tied={}",
            self.layers, self.heads, self.embed_dim, self.context_length, self.tied_embeddings
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Normal,
    One,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl TensorSpec {
    fn new(name: &str, shape: &[usize], init: Init) -> Self {
        TensorSpec {
            name: name.to_string(),
            shape: shape.to_vec(),
            init,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Matrices and embeddings decay; norm scales and biases do not.
    pub fn decays(&self) -> bool {
        self.init == Init::Normal
    }
}

/// Index of each per-layer tensor within a layer's block of 16.
#[derive(Debug, Clone, Copy)]
#[repr(usize)]
pub(crate) enum LayerTensor {
    Ln1G = 0,
    Ln1B,
    Wq,
    Bq,
    Wk,
    Bk,
    Wv,
    Bv,
    Wo,
    Bo,
    Ln2G,
    Ln2B,
    WFc,
    BFc,
    WProj,
    BProj,
}

pub(crate) const TENSORS_PER_LAYER: usize = 16;
pub(crate) const WTE: usize = 0;
pub(crate) const WPE: usize = 1;

/// Tensor positions for a given config.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    layers: usize,
    tied: bool,
}

impl Layout {
    pub fn new(c: &ModelConfig) -> Self {
        Layout {
            layers: c.layers,
            tied: c.tied_embeddings,
        }
    }

    pub fn layer(&self, l: usize, t: LayerTensor) -> usize {
        2 + l * TENSORS_PER_LAYER + t as usize
    }

    pub fn lnf_g(&self) -> usize {
        2 + self.layers * TENSORS_PER_LAYER
    }

    pub fn lnf_b(&self) -> usize {
        self.lnf_g() + 1
    }

    /// Output projection; `None` when tied to the token embedding.
    pub fn head_w(&self) -> Option<usize> {
        (!self.tied).then(|| self.lnf_g() + 2)
    }

    pub fn head_b(&self) -> usize {
        self.lnf_g() + if self.tied { 2 } else { 3 }
    }
}

/// All model tensors as flat row-major buffers, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    config: ModelConfig,
    tensors: Vec<Vec<T>>,
}

impl<T: Scalar> ModelParams<T> {
    /// All-zero parameters of the right shapes.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let tensors = config
            .tensor_specs()
            .iter()
            .map(|s| vec![T::zero(); s.numel()])
            .collect();
        Ok(ModelParams { config, tensors })
    }

    /// Weights and embeddings ~ N(0, 0.02²), norm scales 1, biases 0.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let normal = Normal::new(0.0, INIT_STD).unwrap();
        let tensors = config
            .tensor_specs()
            .iter()
            .map(|s| match s.init {
                Init::Normal => (0..s.numel()).map(|_| T::from_f64(normal.sample(rng))).collect(),
                Init::One => vec![T::one(); s.numel()],
                Init::Zero => vec![T::zero(); s.numel()],
            })
            .collect();
        Ok(ModelParams { config, tensors })
    }

    /// Builds parameters from tensors in canonical order, checking every shape.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<Vec<T>>) -> Result<Self> {
        config.validate()?;
        let specs = config.tensor_specs();
        if specs.len() != tensors.len() {
            return Err(Error::invalid(format!(
                "expected {} tensors, got {}",
                specs.len(),
                tensors.len()
            )));
        }
        for (s, t) in specs.iter().zip(&tensors) {
            if s.numel() != t.len() {
                return Err(Error::invalid(format!(
                    "tensor {} has {} elements, expected {}",
                    s.name,
                    t.len(),
                    s.numel()
                )));
            }
        }
        Ok(ModelParams { config, tensors })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[Vec<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.tensors
    }

    pub fn tensor(&self, i: usize) -> &[T] {
        &self.tensors[i]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|x| x.is_finite())
    }

    /// Elementwise conversion to another precision.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config,
            tensors: self
                .tensors
                .iter()
                .map(|t| t.iter().map(|&x| U::from_f64(x.to_f64())).collect())
                .collect(),
        }
    }

    /// `self += other`, elementwise.
    pub(crate) fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + y;
            }
        }
    }
}

/// Gradients share the parameter layout.
pub type Gradients<T> = ModelParams<T>;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paper_config_size() {
        let n = ModelConfig::paper().parameter_count();
        assert!((9_400_000..=9_600_000).contains(&n), "{n}");
        let p = ModelParams::<f32>::zeros(ModelConfig::paper()).unwrap();
        assert_eq!(p.parameter_count(), n);
    }

    #[test]
    fn tiny_config_count_matches_shapes() {
        let c = ModelConfig { layers: 2, heads: 2, embed_dim: 32, context_length: 32, tied_embeddings: false };
        let p = ModelParams::<f64>::init(c, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        // 26*32 + 32*32 + 2 * (12*32*32 + 13*32) + 2*32 + 32*26 + 26
        assert_eq!(p.parameter_count(), 832 + 1024 + 2 * (12288 + 416) + 64 + 832 + 26);
        assert_eq!(c.parameter_count(), p.parameter_count());
        let tied = ModelConfig { tied_embeddings: true, ..c };
        assert_eq!(tied.parameter_count(), c.parameter_count() - 32 * 26);
    }

    #[test]
    fn init_is_deterministic_and_well_formed() {
        let c = ModelConfig::desk();
        let a = ModelParams::<f32>::init(c, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = ModelParams::<f32>::init(c, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite());
        let lay = Layout::new(&c);
        assert!(a.tensor(lay.layer(1, LayerTensor::Ln2G)).iter().all(|&x| x == 1.0));
        assert!(a.tensor(lay.head_b()).iter().all(|&x| x == 0.0));
        let wte = a.tensor(WTE);
        let var = wte.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / wte.len() as f64;
        assert!((var.sqrt() - INIT_STD).abs() < 0.003);
    }

    #[test]
    fn invalid_configs_rejected() {
        let c = ModelConfig { heads: 3, ..ModelConfig::desk() };
        assert!(ModelParams::<f32>::init(c, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let c = ModelConfig { context_length: 1, ..ModelConfig::desk() };
        assert!(c.validate().is_err());
    }
}
