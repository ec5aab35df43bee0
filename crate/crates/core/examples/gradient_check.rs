//! Compare the hand-written backward pass with central finite differences on
//! a small double-precision model.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use cipher_icl::model::{backward, forward, masked_loss, ModelConfig, ModelParams};
use cipher_icl::prompt::{build_training_item, sample_prompt, MessageSource, SchemeConfig};
use cipher_icl::rng::substream;
use rand::Rng;

fn main() -> cipher_icl::Result<()> {
    let config = ModelConfig { layers: 2, heads: 2, embed_dim: 32, context_length: 16, tied_embeddings: false };
    let mut rng = substream(1, &[]);
    let mut params = ModelParams::<f64>::init(config, &mut rng)?;
    // move away from the symmetric init so every tensor gets a nonzero gradient
    for t in params.tensors_mut() {
        for x in t.iter_mut() {
            *x += rng.random_range(-0.3..0.3);
        }
    }
    let p = sample_prompt(&SchemeConfig::Mono, &MessageSource::Uniform, 8, &mut rng)?;
    let item = build_training_item(&p)?;
    let (tok, tgt, mask) = (item.tokens.as_slice(), &item.targets, &item.loss_mask);
    let (_, grads) = backward(&params, tok, tgt, mask)?;
    let loss_at = |p: &ModelParams<f64>| -> cipher_icl::Result<f64> { masked_loss(&forward(p, tok)?, tgt, mask) };

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (i, spec) in config.tensor_specs().iter().enumerate() {
        let mut tensor_worst: f64 = 0.0;
        for _ in 0..8 {
            let k = rng.random_range(0..spec.numel());
            let orig = params.tensor(i)[k];
            params.tensors_mut()[i][k] = orig + h;
            let up = loss_at(&params)?;
            params.tensors_mut()[i][k] = orig - h;
            let down = loss_at(&params)?;
            params.tensors_mut()[i][k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.tensor(i)[k];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            tensor_worst = tensor_worst.max(rel);
        }
        println!("{:18} {:?}  max rel err {tensor_worst:.2e}", spec.name, spec.shape);
        worst = worst.max(tensor_worst);
    }
    println!("worst {worst:.2e}");
    Ok(())
}
