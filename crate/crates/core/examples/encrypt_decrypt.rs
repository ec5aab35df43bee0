//! Encrypt and decrypt a sentence under both ciphers, then show how one
//! training prompt is laid out.
//!
//! ```text
//! cargo run --example encrypt_decrypt -- "attack at dawn"
//! ```

use cipher_icl::cipher::{CipherKey, Message, MonoKey, VigenereKey};
use cipher_icl::prompt::{build_eval_prefix, build_training_item, decode, Prompt};
use cipher_icl::rng::substream;

fn main() -> cipher_icl::Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "Meet me by the old mill at midnight".into());
    let letters = cipher_icl::corpus::preprocess_text(text.as_bytes());
    let m = Message::new(letters);
    let mut rng = substream(7, &[]);

    let mono = MonoKey::sample(&mut rng);
    let c = mono.encrypt(&m);
    println!("plaintext   {m}");
    println!("substitution key  {}", Message::new(mono.table().to_vec()));
    println!("ciphertext  {c}");
    assert_eq!(mono.decrypt(&c), m);

    let vig = VigenereKey::from_keyword("lemon")?;
    let c = vig.encrypt(&m);
    println!("vigenere(lemon)   {c}");
    assert_eq!(vig.decrypt(&c), m);

    // tokens alternate c[0], m[0], c[1], m[1], ...; loss is taken where the
    // next token is plaintext
    let p = Prompt::new(CipherKey::Vigenere(vig), m);
    let item = build_training_item(&p)?;
    println!("prompt      {}", decode(item.tokens.as_slice())?);
    let mask: String = item.loss_mask.iter().map(|&b| if b { '^' } else { ' ' }).collect();
    println!("loss mask   {mask}");
    let (prefix, answer) = build_eval_prefix(&p, 3)?;
    println!("3 examples  {} -> {}", decode(prefix.as_slice())?, answer.to_char());
    Ok(())
}
