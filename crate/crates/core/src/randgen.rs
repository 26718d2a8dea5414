//! Seeded SHA-256 counter-mode byte stream and the number shapes drawn
//! from it.
//!
//! Block `k` of the stream is `SHA-256(seed || k as u64 little-endian)`.
//! Equal seeds produce equal streams on every platform, which makes every
//! key, matrix and transcript downstream reproducible.

use sha2::{Digest, Sha256};

const BLOCK_LEN: usize = 32;
const TWO_POW_NEG_31: f64 = 1.0 / 2_147_483_648.0;
const TWO_POW_NEG_62: f64 = TWO_POW_NEG_31 * TWO_POW_NEG_31;

#[derive(Clone, Debug)]
pub struct SeededStream {
    seed: [u8; 32],
    counter: u64,
    block: [u8; BLOCK_LEN],
    pos: usize,
}

impl SeededStream {
    pub fn new(seed: [u8; 32]) -> Self {
        Self {
            seed,
            counter: 0,
            block: [0; BLOCK_LEN],
            pos: BLOCK_LEN,
        }
    }

    /// Seeds from the operating system entropy source.
    pub fn from_entropy() -> std::io::Result<Self> {
        let mut seed = [0u8; 32];
        getrandom::fill(&mut seed).map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(Self::new(seed))
    }

    /// Parses a 64-character hex seed.
    pub fn from_hex(text: &str) -> Option<Self> {
        let mut seed = [0u8; 32];
        hex::decode_to_slice(text.trim(), &mut seed).ok()?;
        Some(Self::new(seed))
    }

    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    /// Independent stream whose seed is `SHA-256(seed || label)`.
    pub fn derive(&self, label: &[u8]) -> SeededStream {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update(label);
        SeededStream::new(h.finalize().into())
    }

    fn refill(&mut self) {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update(self.counter.to_le_bytes());
        self.block = h.finalize().into();
        self.counter += 1;
        self.pos = 0;
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        for b in out {
            if self.pos == BLOCK_LEN {
                self.refill();
            }
            *b = self.block[self.pos];
            self.pos += 1;
        }
    }

    /// Integer in `[0, 2^31 - 1]`, the range of a 31-bit `rand()`.
    pub fn next_u31(&mut self) -> u32 {
        let mut word = [0u8; 4];
        self.fill_bytes(&mut word);
        u31_from_bytes(word)
    }

    /// Double in `[0, 1)` with two 31-bit draws worth of mantissa.
    pub fn dense_unit_double(&mut self) -> f64 {
        let hi = self.next_u31();
        let lo = self.next_u31();
        dense_from_draws(hi, lo)
    }

    /// Double in `[-1, 1)`.
    pub fn symmetric_double(&mut self) -> f64 {
        symmetric_from_unit(self.dense_unit_double())
    }

    /// Integer in `[n2, 2*n2 - 1]`.
    pub fn length_in_range(&mut self, n2: usize) -> usize {
        length_from_draw(self.next_u31(), n2)
    }
}

pub(crate) fn u31_from_bytes(word: [u8; 4]) -> u32 {
    u32::from_le_bytes(word) & 0x7fff_ffff
}

pub(crate) fn dense_from_draws(hi: u32, lo: u32) -> f64 {
    let d = hi as f64 * TWO_POW_NEG_31 + lo as f64 * TWO_POW_NEG_62;
    // hi = 2^31-1 with a large lo rounds the sum up to exactly 1.0.
    if d < 1.0 {
        d
    } else {
        1.0 - f64::EPSILON / 2.0
    }
}

pub(crate) fn symmetric_from_unit(d: f64) -> f64 {
    d * 2.0 - 1.0
}

pub(crate) fn length_from_draw(draw: u32, n2: usize) -> usize {
    assert!(n2 >= 1, "length range needs n2 >= 1");
    n2 + draw as usize % n2
}
