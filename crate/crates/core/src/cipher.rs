//! Alphabet, keys, and the two cipher schemes.
//!
//! All positions are 0-based. The key position used for message position `j`
//! is `j % key_len`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Number of letters in the alphabet.
pub const ALPHABET_SIZE: usize = 26;

/// Longest supported Vigenère keyword.
pub const MAX_VIGENERE_KEY_LEN: usize = 32;

/// A lowercase English letter, stored as its index (`a` = 0, `z` = 25).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub const A: Letter = Letter(0);
    pub const E: Letter = Letter(4);
    pub const Z: Letter = Letter(25);

    pub fn new(index: u8) -> Result<Self> {
        if (index as usize) < ALPHABET_SIZE {
            Ok(Letter(index))
        } else {
            Err(Error::invalid(format!("letter index {index} outside 0..26")))
        }
    }

    /// Builds a letter from an index already known to be in range.
    ///
    /// Panics in debug builds if the index is out of range.
    #[inline]
    pub(crate) fn from_index_unchecked(index: u8) -> Self {
        debug_assert!((index as usize) < ALPHABET_SIZE);
        Letter(index)
    }

    pub fn from_char(c: char) -> Option<Self> {
        if c.is_ascii_lowercase() {
            Some(Letter(c as u8 - b'a'))
        } else {
            None
        }
    }

    #[inline]
    pub fn index(self) -> u8 {
        self.0
    }

    pub fn to_char(self) -> char {
        (b'a' + self.0) as char
    }

    /// Adds `shift` modulo 26.
    #[inline]
    pub fn shifted(self, shift: u8) -> Self {
        Letter((self.0 + shift % 26) % 26)
    }

    /// Subtracts `shift` modulo 26.
    #[inline]
    pub fn unshifted(self, shift: u8) -> Self {
        Letter((self.0 + 26 - shift % 26) % 26)
    }

    /// `(self - other) mod 26`, the Vigenère offset that maps `other` to `self`.
    #[inline]
    pub fn offset_from(self, other: Letter) -> u8 {
        (self.0 + 26 - other.0) % 26
    }

    pub fn all() -> impl Iterator<Item = Letter> {
        (0..ALPHABET_SIZE as u8).map(Letter)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A sequence of letters with no spaces, digits or punctuation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Message(Vec<Letter>);

impl Message {
    pub fn new(letters: Vec<Letter>) -> Self {
        Message(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }
}

impl FromStr for Message {
    type Err = Error;

    /// Parses a string of lowercase ASCII letters. Anything else is rejected.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                Letter::from_char(c)
                    .ok_or_else(|| Error::invalid(format!("{c:?} is not a lowercase letter")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Message)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl From<Vec<Letter>> for Message {
    fn from(v: Vec<Letter>) -> Self {
        Message(v)
    }
}

/// Substitution key: `table[p]` is the ciphertext letter for plaintext `p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonoKey {
    table: [Letter; ALPHABET_SIZE],
    inverse: [Letter; ALPHABET_SIZE],
}

impl MonoKey {
    /// Builds a key from its forward table. Fails unless the table is a permutation.
    pub fn from_table(table: [Letter; ALPHABET_SIZE]) -> Result<Self> {
        let mut inverse = [None; ALPHABET_SIZE];
        for (plain, &cipher) in table.iter().enumerate() {
            let slot = &mut inverse[cipher.index() as usize];
            if slot.is_some() {
                return Err(Error::invalid(format!(
                    "substitution table maps two letters to {cipher}"
                )));
            }
            *slot = Some(Letter(plain as u8));
        }
        let inverse = inverse.map(|l| l.expect("26 distinct images cover the alphabet"));
        Ok(MonoKey { table, inverse })
    }

    pub fn identity() -> Self {
        let table = std::array::from_fn(|i| Letter(i as u8));
        MonoKey::from_table(table).unwrap()
    }

    /// The a<->z, b<->y, ... key.
    pub fn reversal() -> Self {
        let table = std::array::from_fn(|i| Letter(25 - i as u8));
        MonoKey::from_table(table).unwrap()
    }

    /// Uniformly random permutation (Fisher-Yates).
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut table: [Letter; ALPHABET_SIZE] = std::array::from_fn(|i| Letter(i as u8));
        table.shuffle(rng);
        MonoKey::from_table(table).unwrap()
    }

    pub fn table(&self) -> &[Letter; ALPHABET_SIZE] {
        &self.table
    }

    #[inline]
    pub fn encrypt_letter(&self, plain: Letter) -> Letter {
        self.table[plain.index() as usize]
    }

    #[inline]
    pub fn decrypt_letter(&self, cipher: Letter) -> Letter {
        self.inverse[cipher.index() as usize]
    }

    pub fn encrypt(&self, m: &Message) -> Message {
        Message(m.0.iter().map(|&l| self.encrypt_letter(l)).collect())
    }

    pub fn decrypt(&self, c: &Message) -> Message {
        Message(c.0.iter().map(|&l| self.decrypt_letter(l)).collect())
    }
}

/// Vigenère key: one shift in `0..26` per keyword position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VigenereKey {
    shifts: Vec<u8>,
}

impl VigenereKey {
    pub fn new(shifts: Vec<u8>) -> Result<Self> {
        check_vigenere_len(shifts.len())?;
        if let Some(s) = shifts.iter().find(|&&s| s as usize >= ALPHABET_SIZE) {
            return Err(Error::invalid(format!("shift {s} outside 0..26")));
        }
        Ok(VigenereKey { shifts })
    }

    /// Parses a keyword such as `"lemon"`; each letter contributes its index as a shift.
    pub fn from_keyword(keyword: &str) -> Result<Self> {
        let m: Message = keyword.parse()?;
        VigenereKey::new(m.letters().iter().map(|l| l.index()).collect())
    }

    /// `length` shifts drawn i.i.d. uniform over `0..26`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, length: usize) -> Result<Self> {
        check_vigenere_len(length)?;
        let shifts = (0..length).map(|_| rng.random_range(0..26u8)).collect();
        Ok(VigenereKey { shifts })
    }

    pub fn shifts(&self) -> &[u8] {
        &self.shifts
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    #[inline]
    pub fn shift_at(&self, pos: usize) -> u8 {
        self.shifts[pos % self.shifts.len()]
    }

    pub fn encrypt(&self, m: &Message) -> Message {
        Message(
            m.0.iter()
                .enumerate()
                .map(|(j, &l)| l.shifted(self.shift_at(j)))
                .collect(),
        )
    }

    pub fn decrypt(&self, c: &Message) -> Message {
        Message(
            c.0.iter()
                .enumerate()
                .map(|(j, &l)| l.unshifted(self.shift_at(j)))
                .collect(),
        )
    }
}

fn check_vigenere_len(len: usize) -> Result<()> {
    if (1..=MAX_VIGENERE_KEY_LEN).contains(&len) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "vigenere key length {len} outside 1..={MAX_VIGENERE_KEY_LEN}"
        )))
    }
}

/// A key for either scheme.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CipherKey {
    Mono(MonoKey),
    Vigenere(VigenereKey),
}

impl CipherKey {
    pub fn encrypt(&self, m: &Message) -> Message {
        match self {
            CipherKey::Mono(k) => k.encrypt(m),
            CipherKey::Vigenere(k) => k.encrypt(m),
        }
    }

    pub fn decrypt(&self, c: &Message) -> Message {
        match self {
            CipherKey::Mono(k) => k.decrypt(c),
            CipherKey::Vigenere(k) => k.decrypt(c),
        }
    }

    /// Keyword length for Vigenère keys, `None` for substitution keys.
    pub fn period(&self) -> Option<usize> {
        match self {
            CipherKey::Mono(_) => None,
            CipherKey::Vigenere(k) => Some(k.len()),
        }
    }
}

pub fn sample_mono_key<R: Rng + ?Sized>(rng: &mut R) -> MonoKey {
    MonoKey::sample(rng)
}

pub fn mono_encrypt(key: &MonoKey, m: &Message) -> Message {
    key.encrypt(m)
}

pub fn mono_decrypt(key: &MonoKey, c: &Message) -> Message {
    key.decrypt(c)
}

pub fn sample_vigenere_key<R: Rng + ?Sized>(rng: &mut R, length: usize) -> Result<VigenereKey> {
    VigenereKey::sample(rng, length)
}

pub fn vigenere_encrypt(key: &VigenereKey, m: &Message) -> Message {
    key.encrypt(m)
}

pub fn vigenere_decrypt(key: &VigenereKey, c: &Message) -> Message {
    key.decrypt(c)
}
