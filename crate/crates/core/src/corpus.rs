//! Plain-text ingestion and the message distributions.
//!
//! Raw text is reduced to its ASCII letters, lowercased, and stored as one
//! contiguous [`LetterStream`]. The final 5% of the stream is held out for
//! validation. Messages are contiguous windows of the stream.
//!
//! Input is read as bytes; any ASCII-compatible encoding works (UTF-8,
//! Latin-1, ...). Bytes outside ASCII, including every byte of a multi-byte
//! UTF-8 sequence, are dropped, so accented letters disappear rather than
//! being transliterated.
//!
//! # Cache format
//!
//! ```text
//! offset  size  field
//! 0       8     magic "CICLCORP"
//! 8       4     version, u32 little-endian (= 1)
//! 12      8     letter count, u64 little-endian
//! 20      8     split boundary, u64 little-endian
//! 28      n     one byte per letter, values 0..=25
//! ```

use std::fs;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::cipher::{Letter, Message, ALPHABET_SIZE};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"CICLCORP";
pub const CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 8;

/// Which part of the stream a sampler may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

/// Preprocessed corpus: letters only, with a train/validation boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetterStream {
    data: Vec<Letter>,
    source: String,
    split: usize,
}

/// Keeps exactly the ASCII letters of `raw`, lowercased, in order.
pub fn preprocess_text(raw: &[u8]) -> Vec<Letter> {
    raw.iter()
        .filter(|b| b.is_ascii_alphabetic())
        .map(|b| Letter::from_index_unchecked(b.to_ascii_lowercase() - b'a'))
        .collect()
}

/// Default split boundary: the last 5% of the letters are validation.
pub fn default_split(len: usize) -> usize {
    len - len / 20
}

impl LetterStream {
    /// Wraps already-clean letters. `split` must be within `0..=data.len()`.
    pub fn new(data: Vec<Letter>, source: impl Into<String>, split: usize) -> Result<Self> {
        if split > data.len() {
            return Err(Error::invalid(format!(
                "split boundary {split} beyond stream length {}",
                data.len()
            )));
        }
        Ok(LetterStream {
            data,
            source: source.into(),
            split,
        })
    }

    /// Preprocesses raw text and applies the default split.
    pub fn from_text(raw: &[u8], source: impl Into<String>) -> Self {
        let data = preprocess_text(raw);
        let split = default_split(data.len());
        LetterStream {
            data,
            source: source.into(),
            split,
        }
    }

    /// Reads and preprocesses text files, concatenated in argument order.
    pub fn from_text_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut data = Vec::new();
        let mut names = Vec::new();
        for p in paths {
            let p = p.as_ref();
            let raw = fs::read(p).map_err(|e| Error::io(p, e))?;
            data.extend(preprocess_text(&raw));
            names.push(p.display().to_string());
        }
        let split = default_split(data.len());
        Ok(LetterStream {
            data,
            source: names.join(","),
            split,
        })
    }

    /// Loads a cache file if `path` starts with the cache magic, otherwise
    /// treats it as plain text.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut head = [0u8; 8];
        let is_cache = {
            let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            matches!(f.read_exact(&mut head), Ok(())) && &head == CACHE_MAGIC
        };
        if is_cache {
            Self::load_cache(path)
        } else {
            Self::from_text_files(&[path])
        }
    }

    pub fn save_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(HEADER_LEN + self.data.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.data.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.split as u64).to_le_bytes());
        buf.extend(self.data.iter().map(|l| l.index()));
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    pub fn load_cache(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_cache(&bytes, path.to_path_buf())
    }

    fn decode_cache(bytes: &[u8], path: PathBuf) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("corpus cache shorter than its header".into()));
        }
        if &bytes[0..8] != CACHE_MAGIC {
            return Err(Error::Format("corpus cache has wrong magic".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::Format(format!(
                "corpus cache version {version}, expected {CACHE_VERSION}"
            )));
        }
        let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let split = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != count {
            return Err(Error::Format(format!(
                "corpus cache declares {count} letters but holds {}",
                body.len()
            )));
        }
        if split > count {
            return Err(Error::Format(format!(
                "corpus cache split {split} beyond {count} letters"
            )));
        }
        let data = body
            .iter()
            .map(|&b| Letter::new(b).map_err(|_| Error::Format(format!("letter byte {b} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(LetterStream {
            data,
            source: path.display().to_string(),
            split,
        })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn split_boundary(&self) -> usize {
        self.split
    }

    pub fn split_range(&self, split: Split) -> Range<usize> {
        match split {
            Split::Train => 0..self.split,
            Split::Validation => self.split..self.data.len(),
        }
    }

    /// Start offset of a uniformly random window of `length` letters that
    /// lies entirely inside `split`.
    pub fn sample_offset<R: Rng + ?Sized>(
        &self,
        length: usize,
        split: Split,
        rng: &mut R,
    ) -> Result<usize> {
        let range = self.split_range(split);
        if length > range.len() {
            return Err(Error::invalid(format!(
                "message length {length} exceeds {:?} split of {} letters",
                split,
                range.len()
            )));
        }
        Ok(rng.random_range(range.start..=range.end - length))
    }

    /// Contiguous window of `length` letters from `split`.
    pub fn sample_message<R: Rng + ?Sized>(
        &self,
        length: usize,
        split: Split,
        rng: &mut R,
    ) -> Result<Message> {
        let start = self.sample_offset(length, split, rng)?;
        Ok(Message::new(self.data[start..start + length].to_vec()))
    }
}

/// `length` letters drawn i.i.d. uniform over the alphabet.
pub fn sample_uniform_message<R: Rng + ?Sized>(length: usize, rng: &mut R) -> Message {
    Message::new(
        (0..length)
            .map(|_| Letter::from_index_unchecked(rng.random_range(0..26u8)))
            .collect(),
    )
}

/// Letters ranked by corpus frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyOrder {
    ranking: [Letter; ALPHABET_SIZE],
    counts: [u64; ALPHABET_SIZE],
}

impl FrequencyOrder {
    /// Ranks letters by descending count; ties (including zero counts) go alphabetically.
    pub fn from_counts(counts: [u64; ALPHABET_SIZE]) -> Self {
        let mut ranking: [Letter; ALPHABET_SIZE] =
            std::array::from_fn(|i| Letter::from_index_unchecked(i as u8));
        // stable sort keeps alphabetical order among ties
        ranking.sort_by_key(|l| std::cmp::Reverse(counts[l.index() as usize]));
        FrequencyOrder { ranking, counts }
    }

    /// Most frequent first.
    pub fn ranking(&self) -> &[Letter; ALPHABET_SIZE] {
        &self.ranking
    }

    pub fn count(&self, l: Letter) -> u64 {
        self.counts[l.index() as usize]
    }

    pub fn counts(&self) -> &[u64; ALPHABET_SIZE] {
        &self.counts
    }
}

pub fn letter_frequency_order(letters: &[Letter]) -> FrequencyOrder {
    let mut counts = [0u64; ALPHABET_SIZE];
    for l in letters {
        counts[l.index() as usize] += 1;
    }
    FrequencyOrder::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn text(letters: &[Letter]) -> String {
        Message::new(letters.to_vec()).to_string()
    }

    #[test]
    fn preprocessing_examples() {
        assert_eq!(text(&preprocess_text(b"Hello, World! 123")), "helloworld");
        assert_eq!(text(&preprocess_text(b"")), "");
        assert_eq!(text(&preprocess_text(b"ABC\ndef")), "abcdef");
        assert_eq!(text(&preprocess_text("caf\u{e9} na\u{ef}ve".as_bytes())), "cafnave");
        assert_eq!(text(&preprocess_text(&[0xff, b'Q', 0xfe, 0x80])), "q");
    }

    #[test]
    fn single_window_covers_everything() {
        let s = LetterStream::new(preprocess_text(b"abcdef"), "t", 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = s.sample_message(6, Split::Train, &mut rng).unwrap();
        assert_eq!(m.to_string(), "abcdef");
        assert!(s.sample_message(0, Split::Train, &mut rng).unwrap().is_empty());
        assert!(s.sample_message(7, Split::Train, &mut rng).is_err());
        assert!(s.sample_message(1, Split::Validation, &mut rng).is_err());
    }

    #[test]
    fn samplers_respect_split() {
        let data: Vec<Letter> = (0..1000).map(|i| Letter::from_index_unchecked((i % 26) as u8)).collect();
        let s = LetterStream::new(data, "t", 950).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let t = s.sample_offset(20, Split::Train, &mut rng).unwrap();
            assert!(t + 20 <= 950);
            let v = s.sample_offset(20, Split::Validation, &mut rng).unwrap();
            assert!(v >= 950 && v + 20 <= 1000);
        }
    }

    #[test]
    fn window_offsets_are_uniform() {
        let n = 1_000_000;
        let data = vec![Letter::A; n];
        let s = LetterStream::new(data, "t", n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut buckets = [0f64; 10];
        let span = (n - 100 + 1) as f64;
        for _ in 0..draws {
            let off = s.sample_offset(100, Split::Train, &mut rng).unwrap();
            buckets[((off as f64 / span) * 10.0) as usize] += 1.0;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = buckets.iter().map(|o| (o - expected).powi(2) / expected).sum();
        // chi-square, 9 degrees of freedom, upper 0.001 quantile
        assert!(chi2 < 27.877, "chi2 = {chi2}");
    }

    #[test]
    fn uniform_messages() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(sample_uniform_message(0, &mut rng).is_empty());
        let a = sample_uniform_message(50, &mut ChaCha8Rng::seed_from_u64(1));
        let b = sample_uniform_message(50, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        let m = sample_uniform_message(260_000, &mut rng);
        let order = letter_frequency_order(m.letters());
        for l in Letter::all() {
            let f = order.count(l) as f64 / 260_000.0;
            assert!((f - 1.0 / 26.0).abs() < 0.003, "{l}: {f}");
        }
    }

    #[test]
    fn frequency_order_examples() {
        let o = letter_frequency_order(&preprocess_text(b"aab"));
        let head: String = o.ranking()[..4].iter().map(|l| l.to_char()).collect();
        assert_eq!(head, "abcd");
        let empty = letter_frequency_order(&[]);
        let all: String = empty.ranking().iter().map(|l| l.to_char()).collect();
        assert_eq!(all, "abcdefghijklmnopqrstuvwxyz");
        let o = letter_frequency_order(&preprocess_text(b"zzyyyx"));
        let head: String = o.ranking()[..4].iter().map(|l| l.to_char()).collect();
        assert_eq!(head, "yzxa");
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let s = LetterStream::from_text(b"The quick brown fox jumps over the lazy dog", "t");
        s.save_cache(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"CICLCORP");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 35);
        assert_eq!(bytes.len(), 28 + 35);
        let back = LetterStream::load(&path).unwrap();
        assert_eq!(back.letters(), s.letters());
        assert_eq!(back.split_boundary(), s.split_boundary());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(LetterStream::load_cache(&path), Err(Error::Format(_))));
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(LetterStream::load_cache(&path), Err(Error::Format(_))));
        assert!(matches!(
            LetterStream::load(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn preprocessing_is_idempotent(raw in prop::collection::vec(any::<u8>(), 0..300)) {
            let once = preprocess_text(&raw);
            let bytes: Vec<u8> = once.iter().map(|l| l.to_char() as u8).collect();
            prop_assert_eq!(preprocess_text(&bytes), once.clone());
            let expected: Vec<u8> = raw.iter().filter(|b| b.is_ascii_alphabetic()).map(|b| b.to_ascii_lowercase()).collect();
            prop_assert_eq!(bytes, expected);
        }

        #[test]
        fn ranking_is_a_permutation(raw in prop::collection::vec(any::<u8>(), 0..300)) {
            let o = letter_frequency_order(&preprocess_text(&raw));
            let mut seen = [false; 26];
            for l in o.ranking() { seen[l.index() as usize] = true; }
            prop_assert!(seen.iter().all(|&s| s));
            for w in o.ranking().windows(2) {
                let (a, b) = (o.count(w[0]), o.count(w[1]));
                prop_assert!(a > b || (a == b && w[0] < w[1]));
            }
        }
    }
}
