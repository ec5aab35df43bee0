//! Accuracy curves of every classical decoder, written as CSV.
//!
//! ```text
//! cargo run --release --example baseline_curves -- [out.csv]
//! ```

use cipher_icl::baselines::Baseline;
use cipher_icl::corpus::letter_frequency_order;
use cipher_icl::eval::{accuracy_curve, write_curves_csv, Decoder, EvalSetting, MessageDist};
use cipher_icl::prompt::SchemeConfig;

fn main() -> cipher_icl::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "baselines.csv".into());
    let corpus = cipher_icl::load_bundled_corpus()?;
    let order = letter_frequency_order(corpus.letters());

    let runs = [
        (SchemeConfig::Mono, Baseline::MonoNaive, 100),
        (SchemeConfig::Mono, Baseline::MonoFreq(order), 100),
        (SchemeConfig::VigenereFixed(8), Baseline::VigNaive, 40),
        (SchemeConfig::VigenereFixed(8), Baseline::VigFreq, 40),
        (SchemeConfig::VigenereFixed(32), Baseline::VigNaive, 40),
        (SchemeConfig::VigenereFixed(32), Baseline::VigFreq, 40),
        (SchemeConfig::VigenereVariable { min: 4, max: 32 }, Baseline::VigSearch(4..=32), 64),
    ];
    let mut curves = Vec::new();
    for dist in [MessageDist::Corpus, MessageDist::Uniform] {
        for (scheme, b, j) in runs.iter().cloned() {
            let s = EvalSetting {
                scheme,
                dist,
                decoder: Decoder::Baseline(b),
                n_prompts: 500,
                max_examples: j,
                seed: 0,
            };
            let c = accuracy_curve(&s, Some(&corpus))?;
            let l = s.labels();
            let at = |j: usize| c.accuracy(j.min(c.max_examples()));
            println!(
                "{:8} {:4} {:7} {:10}  j=0 {:.3}  j=8 {:.3}  j=32 {:.3}  j={} {:.3}",
                l.scheme, l.key_len, l.message_dist, l.decoder, at(0), at(8), at(32), j, at(j)
            );
            curves.push((l, c));
        }
    }
    write_curves_csv(&curves, &out)?;
    println!("wrote {out}");
    Ok(())
}
