//! Prompt construction and the 26-token vocabulary.
//!
//! A prompt of `l` pairs is laid out as
//! `c[0], m[0], c[1], m[1], ..., c[l-1], m[l-1]` (0-based). During training
//! the whole sequence is fed at once and only the predictions made at
//! ciphertext positions (whose next token is plaintext) are scored.
//! Evaluation prefixes stop on a ciphertext token: the prefix with `j`
//! examples is `c[0], m[0], ..., c[j-1], m[j-1], c[j]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::cipher::{CipherKey, Letter, Message, MonoKey, VigenereKey, ALPHABET_SIZE, MAX_VIGENERE_KEY_LEN};
use crate::corpus::{sample_uniform_message, LetterStream, Split};
use crate::error::{Error, Result};

/// Vocabulary size: one token per letter, nothing else.
pub const VOCAB_SIZE: usize = ALPHABET_SIZE;

/// Token ids in `0..26`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<u8>);

impl TokenSequence {
    pub fn new(tokens: Vec<u8>) -> Result<Self> {
        if let Some(t) = tokens.iter().find(|&&t| t as usize >= VOCAB_SIZE) {
            return Err(Error::invalid(format!("token {t} outside vocabulary")));
        }
        Ok(TokenSequence(tokens))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn encode(m: &Message) -> TokenSequence {
    TokenSequence(m.letters().iter().map(|l| l.index()).collect())
}

pub fn decode(tokens: &[u8]) -> Result<Message> {
    tokens
        .iter()
        .map(|&t| Letter::new(t))
        .collect::<Result<Vec<_>>>()
        .map(Message::new)
}

/// Key distribution of a prompt family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeConfig {
    Mono,
    /// Vigenère with a fixed keyword length.
    VigenereFixed(usize),
    /// Vigenère whose keyword length is drawn uniformly from `min..=max` per prompt.
    VigenereVariable { min: usize, max: usize },
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |l: usize| (1..=MAX_VIGENERE_KEY_LEN).contains(&l);
        match *self {
            SchemeConfig::Mono => Ok(()),
            SchemeConfig::VigenereFixed(l) if ok(l) => Ok(()),
            SchemeConfig::VigenereVariable { min, max } if ok(min) && ok(max) && min <= max => Ok(()),
            other => Err(Error::invalid(format!("invalid scheme {other}"))),
        }
    }

    pub fn sample_key<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CipherKey> {
        self.validate()?;
        Ok(match *self {
            SchemeConfig::Mono => CipherKey::Mono(MonoKey::sample(rng)),
            SchemeConfig::VigenereFixed(l) => CipherKey::Vigenere(VigenereKey::sample(rng, l)?),
            SchemeConfig::VigenereVariable { min, max } => {
                let l = rng.random_range(min..=max);
                CipherKey::Vigenere(VigenereKey::sample(rng, l)?)
            }
        })
    }

    /// Short scheme name used in CSV output: `mono`, `vig` or `vig_var`.
    pub fn name(&self) -> &'static str {
        match self {
            SchemeConfig::Mono => "mono",
            SchemeConfig::VigenereFixed(_) => "vig",
            SchemeConfig::VigenereVariable { .. } => "vig_var",
        }
    }

    /// Key-length column for CSV output: `-`, `8`, or `4-32`.
    pub fn key_len_label(&self) -> String {
        match self {
            SchemeConfig::Mono => "-".into(),
            SchemeConfig::VigenereFixed(l) => l.to_string(),
            SchemeConfig::VigenereVariable { min, max } => format!("{min}-{max}"),
        }
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeConfig::Mono => write!(f, "mono"),
            SchemeConfig::VigenereFixed(l) => write!(f, "vig:{l}"),
            SchemeConfig::VigenereVariable { min, max } => write!(f, "vig_var:{min}-{max}"),
        }
    }
}

impl FromStr for SchemeConfig {
    type Err = Error;

    /// Accepts `mono`, `vig:<len>`, `vig_var` (4..=32) and `vig_var:<min>-<max>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognised scheme {s:?}"));
        let parse_len = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let scheme = match s.split_once(':') {
            None if s == "mono" => SchemeConfig::Mono,
            None if s == "vig_var" => SchemeConfig::VigenereVariable { min: 4, max: 32 },
            Some(("vig", l)) => SchemeConfig::VigenereFixed(parse_len(l)?),
            Some(("vig_var", range)) => {
                let (a, b) = range.split_once('-').ok_or_else(bad)?;
                SchemeConfig::VigenereVariable {
                    min: parse_len(a)?,
                    max: parse_len(b)?,
                }
            }
            _ => return Err(bad()),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

/// Where plaintext messages come from.
#[derive(Debug, Clone, Copy)]
pub enum MessageSource<'a> {
    /// Contiguous windows of one split of a corpus.
    Corpus(&'a LetterStream, Split),
    /// I.i.d. uniform letters.
    Uniform,
}

impl MessageSource<'_> {
    pub fn sample<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Result<Message> {
        match self {
            MessageSource::Corpus(stream, split) => stream.sample_message(length, *split, rng),
            MessageSource::Uniform => Ok(sample_uniform_message(length, rng)),
        }
    }
}

/// Paired ciphertext and plaintext under one key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    ciphertext: Message,
    plaintext: Message,
    key: CipherKey,
}

impl Prompt {
    pub fn new(key: CipherKey, plaintext: Message) -> Self {
        let ciphertext = key.encrypt(&plaintext);
        Prompt {
            ciphertext,
            plaintext,
            key,
        }
    }

    pub fn ciphertext(&self) -> &Message {
        &self.ciphertext
    }

    pub fn plaintext(&self) -> &Message {
        &self.plaintext
    }

    /// The key is kept for scoring and for decoders that are told the key length.
    pub fn key(&self) -> &CipherKey {
        &self.key
    }

    pub fn len(&self) -> usize {
        self.plaintext.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plaintext.is_empty()
    }

    /// `c[0], m[0], c[1], m[1], ...` for all pairs.
    pub fn interleaved_tokens(&self) -> Vec<u8> {
        self.ciphertext
            .letters()
            .iter()
            .zip(self.plaintext.letters())
            .flat_map(|(c, m)| [c.index(), m.index()])
            .collect()
    }
}

/// One training sequence with next-token targets and the plaintext-only loss mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingItem {
    pub tokens: TokenSequence,
    /// `targets[t]` is `tokens[t + 1]`; the last entry is unused (masked out, set to 0).
    pub targets: Vec<u8>,
    /// True exactly at ciphertext positions (even indices).
    pub loss_mask: Vec<bool>,
}

impl TrainingItem {
    pub fn masked_count(&self) -> usize {
        self.loss_mask.iter().filter(|&&m| m).count()
    }
}

pub fn build_training_item(p: &Prompt) -> Result<TrainingItem> {
    if p.is_empty() {
        return Err(Error::invalid("cannot build a training item from an empty prompt"));
    }
    let tokens = p.interleaved_tokens();
    let n = tokens.len();
    let mut targets: Vec<u8> = tokens[1..].to_vec();
    targets.push(0);
    let loss_mask = (0..n).map(|t| t % 2 == 0).collect();
    Ok(TrainingItem {
        tokens: TokenSequence(tokens),
        targets,
        loss_mask,
    })
}

/// Prefix with `j` examples plus the next ciphertext letter, and the answer `m[j]`.
pub fn build_eval_prefix(p: &Prompt, j: usize) -> Result<(TokenSequence, Letter)> {
    if j >= p.len() {
        return Err(Error::invalid(format!(
            "prefix with {j} examples needs a prompt longer than {}",
            p.len()
        )));
    }
    let mut tokens = p.interleaved_tokens();
    tokens.truncate(2 * j + 1);
    Ok((TokenSequence(tokens), p.plaintext.letters()[j]))
}

/// Fresh key and fresh message of `message_len` letters.
pub fn sample_prompt<R: Rng + ?Sized>(
    scheme: &SchemeConfig,
    source: &MessageSource<'_>,
    message_len: usize,
    rng: &mut R,
) -> Result<Prompt> {
    let key = scheme.sample_key(rng)?;
    let plaintext = source.sample(message_len, rng)?;
    Ok(Prompt::new(key, plaintext))
}

/// Training prompt filling a context of `context_length` tokens
/// (`context_length / 2` pairs) from the training split.
pub fn sample_training_prompt<R: Rng + ?Sized>(
    scheme: &SchemeConfig,
    stream: &LetterStream,
    context_length: usize,
    rng: &mut R,
) -> Result<Prompt> {
    sample_prompt(
        scheme,
        &MessageSource::Corpus(stream, Split::Train),
        context_length / 2,
        rng,
    )
}
