//! Packed vectors over GF(2).
//!
//! Coordinate `j` is stored at bit `j % 64` of word `j / 64`. Serialized
//! through [`BitVec::to_bytes`], that is bit `j % 8` of byte `j / 8`,
//! least-significant bit first. The "last `b` coordinates" of a vector of
//! dimension `n` are `n - b .. n`. Storage past coordinate `n - 1` is always
//! zero, so equality and hashing work on the raw words.

use std::cmp::Ordering;
use std::fmt;

use rand::RngCore;
use smallvec::SmallVec;

use crate::error::{LpnError, Result};

type Words = SmallVec<[u64; 2]>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    n: usize,
    words: Words,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

/// Mask of valid bits in the last word of a dimension-`n` vector.
fn tail_mask(n: usize) -> u64 {
    match n % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl BitVec {
    pub fn zeros(n: usize) -> Self {
        BitVec {
            n,
            words: SmallVec::from_elem(0, word_count(n)),
        }
    }

    /// Builds a vector from a `0`/`1` string listing coordinates `0..n` in order.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let mut v = BitVec::zeros(s.len());
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(j, true),
                other => return Err(LpnError::invalid(format!("bad bit character {other:?}"))),
            }
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b {
                v.set(j, true);
            }
        }
        v
    }

    /// Low `n` bits of `value` as coordinates `0..n` (`n <= 64`).
    pub fn from_u64(n: usize, value: u64) -> Self {
        assert!(n <= 64, "from_u64 supports at most 64 coordinates");
        let mut v = BitVec::zeros(n);
        if n > 0 {
            v.words[0] = value & tail_mask(n);
        }
        v
    }

    /// Uniform vector: one `next_u64` per storage word, padding masked off.
    pub fn random<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v = BitVec::zeros(n);
        for w in v.words.iter_mut() {
            *w = rng.next_u64();
        }
        v.clear_padding();
        v
    }

    fn clear_padding(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.n);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, j: usize) -> bool {
        assert!(
            j < self.n,
            "coordinate {j} out of range for dimension {}",
            self.n
        );
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn set(&mut self, j: usize, value: bool) {
        assert!(
            j < self.n,
            "coordinate {j} out of range for dimension {}",
            self.n
        );
        let bit = 1u64 << (j % 64);
        if value {
            self.words[j / 64] |= bit;
        } else {
            self.words[j / 64] &= !bit;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn check_dim(&self, other: &BitVec) -> Result<()> {
        if self.n != other.n {
            return Err(LpnError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitVec) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a ^= *b;
        }
        Ok(())
    }

    pub(crate) fn xor_assign_unchecked(&mut self, other: &BitVec) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a ^= *b;
        }
    }

    /// Parity of the coordinate-wise AND.
    pub fn inner_product(&self, other: &BitVec) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.dot_unchecked(other))
    }

    pub(crate) fn dot_unchecked(&self, other: &BitVec) -> bool {
        let ones: u32 = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    /// Coordinates `0..m` packed into an integer (`m <= 64`).
    pub fn low_bits(&self, m: usize) -> u64 {
        assert!(m <= 64 && m <= self.n);
        match self.words.first() {
            Some(&w) if m > 0 => w & tail_mask_full(m),
            _ => 0,
        }
    }

    /// True when every coordinate at index `>= m` is zero.
    pub fn is_zero_from(&self, m: usize) -> bool {
        if m >= self.n {
            return true;
        }
        let first = m / 64;
        let keep = m % 64;
        if self.words[first] >> keep != 0 {
            return false;
        }
        self.words[first + 1..].iter().all(|&w| w == 0)
    }

    /// Coordinates `start .. start + len` as a new vector of dimension `len`.
    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        assert!(start + len <= self.n, "slice out of range");
        let mut out = BitVec::zeros(len);
        let shift = start % 64;
        let base = start / 64;
        for (i, w) in out.words.iter_mut().enumerate() {
            let lo = self.words.get(base + i).copied().unwrap_or(0) >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(base + i + 1).copied().unwrap_or(0) << (64 - shift)
            };
            *w = lo | hi;
        }
        out.clear_padding();
        out
    }

    /// The last `b` coordinates, re-indexed from zero.
    pub fn suffix(&self, b: usize) -> BitVec {
        assert!(b <= self.n);
        self.slice(self.n - b, b)
    }

    /// Concatenation `self || tail`.
    pub fn concat(&self, tail: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.n + tail.n);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        for j in 0..tail.n {
            if tail.get(j) {
                out.set(self.n + j, true);
            }
        }
        out
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + t)
            })
        })
    }

    /// `ceil(n / 8)` bytes, bit `j % 8` of byte `j / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let len = self.n.div_ceil(8);
        self.words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(len)
            .collect()
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). Rejects nonzero padding bits.
    pub fn from_bytes(n: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != n.div_ceil(8) {
            return Err(LpnError::invalid(format!(
                "expected {} bytes for dimension {n}, got {}",
                n.div_ceil(8),
                bytes.len()
            )));
        }
        let mut v = BitVec::zeros(n);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            v.words[i] = u64::from_le_bytes(buf);
        }
        let canonical = {
            let mut c = v.clone();
            c.clear_padding();
            c
        };
        if canonical != v {
            return Err(LpnError::invalid("nonzero padding bits"));
        }
        Ok(v)
    }

    /// Lowercase hex of [`to_bytes`](Self::to_bytes).
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.n.div_ceil(8) * 2);
        for b in self.to_bytes() {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        if !hex.len().is_multiple_of(2) || !hex.bytes().all(|c| matches!(c, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(LpnError::invalid(format!(
                "malformed lowercase hex {hex:?}"
            )));
        }
        let bytes: Vec<u8> = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).expect("validated hex"))
            .collect();
        BitVec::from_bytes(n, &bytes)
    }
}

fn tail_mask_full(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Lexicographic order on the serialized bytes; dimension breaks ties first.
impl Ord for BitVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            for (a, b) in self.words.iter().zip(other.words.iter()) {
                match a.swap_bytes().cmp(&b.swap_bytes()) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for BitVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}
