//! In-context learning of classical ciphers.
//!
//! A small decoder-only transformer is trained from scratch on prompts of
//! interleaved `(ciphertext, plaintext)` letters, each prompt under a fresh
//! random key, and learns to decrypt the next ciphertext letter from the
//! examples in its context. Its accuracy is compared with exact classical
//! decoders as the number of in-context examples grows.
//!
//! Modules, bottom-up:
//!
//! - [`cipher`]: letters, substitution and Vigenère keys, encryption.
//! - [`corpus`]: text preprocessing, the corpus cache, message samplers.
//! - [`prompt`]: prompt layout, loss masks, evaluation prefixes.
//! - [`baselines`]: lookup, frequency and key-length-search decoders.
//! - [`model`]: the transformer, its gradients, AdamW, checkpoints.
//! - [`training`]: the training loop, validation, ablation grids.
//! - [`eval`]: accuracy-versus-examples curves and their CSV output.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod baselines;
pub mod cipher;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod prompt;
pub mod rng;
pub mod training;

pub use error::{Error, Result};

/// Directory of the bundled public-domain corpus.
pub fn bundled_corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("corpus")
}

/// The bundled corpus text files, in the order they are concatenated.
pub fn bundled_corpus_files() -> Result<Vec<std::path::PathBuf>> {
    let dir = bundled_corpus_dir();
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

/// Preprocessed bundled corpus.
pub fn load_bundled_corpus() -> Result<corpus::LetterStream> {
    corpus::LetterStream::from_text_files(&bundled_corpus_files()?)
}
