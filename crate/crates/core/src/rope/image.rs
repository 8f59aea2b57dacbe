//! The `.rope` container: banked fixed-memory contents.
//!
//! Layout, all integers big-endian:
//!
//! ```text
//! magic       8 bytes   "AGCROPE1"
//! bank_count  u16       <= 36
//! per bank:
//!   bank_id   u16       strictly increasing, < 36
//!   words     1024 x u16  data in bits 15..1, odd parity in bit 0
//! ```

use std::collections::BTreeMap;

use super::RopeError;
use crate::word::Word;

pub const MAGIC: &[u8; 8] = b"AGCROPE1";
pub const BANK_WORDS: usize = 1024;
pub const MAX_BANKS: usize = 36;

const BANK_BYTES: usize = 2 + BANK_WORDS * 2;

/// Fixed-memory contents keyed by bank number.
///
/// Words are held as stored, so an image may carry corrupt parity until it is
/// validated; [`RopeImage::from_bytes`] and the memory loader both validate.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RopeImage {
    banks: BTreeMap<u8, Box<[Word]>>,
}

impl std::fmt::Debug for RopeImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RopeImage")
            .field("banks", &self.banks.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl RopeImage {
    pub fn new() -> RopeImage {
        RopeImage::default()
    }

    /// Inserts or replaces a bank. `words` must hold exactly 1024 entries.
    pub fn insert_bank(&mut self, bank: u8, words: Vec<Word>) -> Result<(), RopeError> {
        if bank as usize >= MAX_BANKS {
            return Err(RopeError::BadImage(format!("bank {bank:o} out of range")));
        }
        if words.len() != BANK_WORDS {
            return Err(RopeError::BadImage(format!(
                "bank {bank:o} has {} words, expected {BANK_WORDS}",
                words.len()
            )));
        }
        self.banks.insert(bank, words.into_boxed_slice());
        Ok(())
    }

    /// Returns the bank's words, creating it zero-filled if absent.
    pub fn bank_mut(&mut self, bank: u8) -> Result<&mut [Word], RopeError> {
        if bank as usize >= MAX_BANKS {
            return Err(RopeError::BadImage(format!("bank {bank:o} out of range")));
        }
        Ok(self
            .banks
            .entry(bank)
            .or_insert_with(|| vec![Word::ZERO; BANK_WORDS].into_boxed_slice()))
    }

    pub fn bank(&self, bank: u8) -> Option<&[Word]> {
        self.banks.get(&bank).map(|b| &b[..])
    }

    pub fn banks(&self) -> impl Iterator<Item = (u8, &[Word])> + '_ {
        self.banks.iter().map(|(&id, words)| (id, &words[..]))
    }

    pub fn bank_count(&self) -> usize {
        self.banks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.banks.is_empty()
    }

    /// Checks the parity of every word, naming the first bad location.
    pub fn validate(&self) -> Result<(), RopeError> {
        for (bank, words) in self.banks() {
            if let Some(offset) = words.iter().position(|w| !w.is_valid()) {
                return Err(RopeError::CorruptWord {
                    bank,
                    offset: offset as u16,
                    raw: words[offset].raw(),
                });
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MAGIC.len() + 2 + self.banks.len() * BANK_BYTES);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.banks.len() as u16).to_be_bytes());
        for (bank, words) in self.banks() {
            out.extend_from_slice(&u16::from(bank).to_be_bytes());
            for w in words {
                out.extend_from_slice(&w.raw().to_be_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RopeImage, RopeError> {
        let bad = |msg: String| RopeError::BadImage(msg);
        let rest = bytes
            .strip_prefix(MAGIC.as_slice())
            .ok_or_else(|| bad("missing AGCROPE1 magic".into()))?;
        if rest.len() < 2 {
            return Err(bad("truncated header".into()));
        }
        let count = u16::from_be_bytes([rest[0], rest[1]]) as usize;
        if count > MAX_BANKS {
            return Err(bad(format!(
                "{count} banks exceeds the {MAX_BANKS}-bank limit"
            )));
        }
        let body = &rest[2..];
        if body.len() != count * BANK_BYTES {
            return Err(bad(format!(
                "expected {} bytes of bank data for {count} banks, found {}",
                count * BANK_BYTES,
                body.len()
            )));
        }
        let mut image = RopeImage::new();
        let mut previous: Option<u16> = None;
        for chunk in body.chunks_exact(BANK_BYTES) {
            let id = u16::from_be_bytes([chunk[0], chunk[1]]);
            if previous.is_some_and(|p| id <= p) {
                return Err(bad(format!("bank ids not strictly increasing at {id:o}")));
            }
            if id as usize >= MAX_BANKS {
                return Err(bad(format!("bank id {id:o} out of range")));
            }
            previous = Some(id);
            let words = chunk[2..]
                .chunks_exact(2)
                .map(|b| Word::from_raw(u16::from_be_bytes([b[0], b[1]])))
                .collect();
            image.insert_bank(id as u8, words)?;
        }
        image.validate().map_err(|e| bad(e.to_string()))?;
        Ok(image)
    }
}

/// Encodes banks into `.rope` bytes.
pub fn image_from_banks(image: &RopeImage) -> Vec<u8> {
    image.to_bytes()
}

/// Decodes `.rope` bytes.
pub fn banks_from_image(bytes: &[u8]) -> Result<RopeImage, RopeError> {
    RopeImage::from_bytes(bytes)
}
