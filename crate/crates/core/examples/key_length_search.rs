//! Watch the key-length search narrow its candidate periods as examples
//! arrive, on a prompt with an unknown Vigenère key length.
//!
//! ```text
//! cargo run --example key_length_search -- [key length]
//! ```

use cipher_icl::baselines::{KeyLengthSearch, Prediction};
use cipher_icl::cipher::{CipherKey, VigenereKey};
use cipher_icl::prompt::{MessageSource, Prompt};
use cipher_icl::rng::substream;

fn main() -> cipher_icl::Result<()> {
    let len: usize = std::env::args().nth(1).map_or(Ok(12), |s| s.parse()).expect("key length");
    let mut rng = substream(3, &[]);
    let key = VigenereKey::sample(&mut rng, len)?;
    let m = MessageSource::Uniform.sample(48, &mut rng)?;
    let p = Prompt::new(CipherKey::Vigenere(key), m);
    let (c, pl) = (p.ciphertext().letters(), p.plaintext().letters());

    let mut search = KeyLengthSearch::new(4..=32)?;
    for j in 0..p.len() {
        let pred = match search.predict(c[j], j) {
            Prediction::Letter(l) => l.to_char(),
            Prediction::Abstain => '.',
        };
        let alive: Vec<usize> = search.surviving().collect();
        let shown: Vec<String> = alive.iter().take(8).map(|l| l.to_string()).collect();
        println!(
            "j={j:2}  predict {pred} (truth {})  {} candidates: {}{}",
            pl[j].to_char(),
            alive.len(),
            shown.join(","),
            if alive.len() > 8 { ",..." } else { "" }
        );
        search.observe(j, c[j], pl[j]);
    }
    Ok(())
}
