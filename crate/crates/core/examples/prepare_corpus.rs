//! Clean the bundled texts (or files given as arguments), print letter
//! statistics and write a cache file.
//!
//! ```text
//! cargo run --release --example prepare_corpus -- [out.bin] [text files...]
//! ```

use std::path::PathBuf;

use cipher_icl::corpus::{letter_frequency_order, LetterStream, Split};

fn main() -> cipher_icl::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "corpus.bin".into()));
    let inputs: Vec<PathBuf> = args.map(PathBuf::from).collect();
    let files = if inputs.is_empty() { cipher_icl::bundled_corpus_files()? } else { inputs };

    let stream = LetterStream::from_text_files(&files)?;
    for f in &files {
        println!("input {}", f.display());
    }
    println!("{} letters", stream.len());
    println!(
        "train {:?}, validation {:?}",
        stream.split_range(Split::Train),
        stream.split_range(Split::Validation)
    );

    let order = letter_frequency_order(stream.letters());
    let total = stream.len().max(1) as f64;
    for l in order.ranking().iter().take(10) {
        println!("  {}  {:6.3}%", l.to_char(), 100.0 * order.count(*l) as f64 / total);
    }

    stream.save_cache(&out)?;
    let back = LetterStream::load(&out)?;
    assert_eq!(back.letters(), stream.letters());
    println!("wrote {}", out.display());
    Ok(())
}
