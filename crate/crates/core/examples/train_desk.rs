//! Train the two-layer model on substitution-cipher prompts and report its
//! accuracy next to the lookup baselines.
//!
//! ```text
//! cargo run --release --example train_desk -- [steps] [run-dir]
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use cipher_icl::baselines::Baseline;
use cipher_icl::corpus::letter_frequency_order;
use cipher_icl::eval::{accuracy_curve, Decoder, EvalSetting, MessageDist};
use cipher_icl::training::{TrainConfig, Trainer};

fn main() -> cipher_icl::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args.next().map_or(Ok(2000), |s| s.parse()).expect("steps must be an integer");
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "runs/desk-mono".into()));

    let config = TrainConfig { steps, ..TrainConfig::desk() };
    println!("{config}");
    let corpus = cipher_icl::load_bundled_corpus()?;
    let mut trainer = Trainer::new(config.clone(), &corpus)?;
    trainer.run(Some(&dir), |r| {
        if r.val_loss.is_some() {
            println!("{r}");
        }
    })?;

    let model = Arc::new(trainer.into_params());
    let order = letter_frequency_order(corpus.letters());
    for decoder in [
        Decoder::Model(model),
        Decoder::Baseline(Baseline::MonoNaive),
        Decoder::Baseline(Baseline::MonoFreq(order)),
    ] {
        let s = EvalSetting {
            scheme: config.scheme,
            dist: MessageDist::Corpus,
            decoder,
            n_prompts: 500,
            max_examples: 63,
            seed: 1,
        };
        let c = accuracy_curve(&s, Some(&corpus))?;
        println!(
            "{:10} j=10 {:.3}  j=30 {:.3}  j=60 {:.3}",
            s.decoder.label(),
            c.accuracy(10),
            c.accuracy(30),
            c.accuracy(60)
        );
    }
    Ok(())
}
