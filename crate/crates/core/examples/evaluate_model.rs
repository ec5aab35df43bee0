//! Evaluate a saved checkpoint in and out of distribution: corpus messages,
//! uniform random messages, and (for Vigenère models) other key lengths.
//!
//! ```text
//! cargo run --release --example evaluate_model -- runs/desk-mono/model.ckpt [scheme]
//! ```

use std::sync::Arc;

use cipher_icl::eval::{accuracy_curve, curves_csv, Decoder, EvalSetting, MessageDist};
use cipher_icl::model::load_checkpoint;
use cipher_icl::prompt::SchemeConfig;

fn main() -> cipher_icl::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "runs/desk-mono/model.ckpt".into());
    let trained: SchemeConfig = args.next().as_deref().unwrap_or("mono").parse()?;

    let ck = load_checkpoint(&path)?;
    let max_examples = (ck.config().context_length - 1) / 2;
    println!("{path}: {:?}, {} parameters", ck.config(), ck.params.parameter_count());
    let model = Arc::new(ck.params);
    let corpus = cipher_icl::load_bundled_corpus()?;

    // a model trained on one key length is probed on others through the setting alone
    let mut schemes = vec![trained];
    if let SchemeConfig::VigenereFixed(l) = trained {
        schemes.extend([l / 2, l * 5 / 8].map(SchemeConfig::VigenereFixed));
    }
    let mut curves = Vec::new();
    for scheme in schemes {
        for dist in [MessageDist::Corpus, MessageDist::Uniform] {
            let s = EvalSetting {
                scheme,
                dist,
                decoder: Decoder::Model(model.clone()),
                n_prompts: 300,
                max_examples,
                seed: 2,
            };
            curves.push((s.labels(), accuracy_curve(&s, Some(&corpus))?));
        }
    }
    print!("{}", curves_csv(&curves)?);
    Ok(())
}
