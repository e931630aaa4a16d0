//! Text format for LPN instances.
//!
//! ```text
//! LPN1
//! n = 20
//! eps = 1/10
//! samples = 3
//! seed = 7            (optional)
//! key = 5a0c03        (optional, planted key)
//! ---
//! 1f0a02 1
//! 00c409 0
//! 730b0e 1
//! ```
//!
//! Each record is the coefficient vector as `ceil(n/8)` lowercase hex bytes
//! (bit `j` at bit `j % 8` of byte `j / 8`) and the right-hand-side bit.

use std::fmt::Write as _;

use crate::bias::Bias;
use crate::bitvec::BitVec;
use crate::error::{LpnError, Result};
use crate::oracle::{LpnInstance, Sample};

pub const MAGIC: &str = "LPN1";
const SEPARATOR: &str = "---";

pub fn serialize(instance: &LpnInstance) -> String {
    let width = instance.n.div_ceil(8) * 2 + 3;
    let mut s = String::with_capacity(64 + instance.samples.len() * width);
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "n = {}", instance.n);
    let _ = writeln!(s, "eps = {}", instance.eps);
    let _ = writeln!(s, "samples = {}", instance.samples.len());
    if let Some(seed) = instance.seed {
        let _ = writeln!(s, "seed = {seed}");
    }
    if let Some(key) = &instance.key {
        let _ = writeln!(s, "key = {}", key.to_hex());
    }
    let _ = writeln!(s, "{SEPARATOR}");
    for sample in &instance.samples {
        let _ = writeln!(s, "{} {}", sample.coeffs.to_hex(), u8::from(sample.rhs));
    }
    s
}

fn header_value<'a>(line: Option<(usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, text) =
        line.ok_or_else(|| LpnError::parse(0, format!("missing header field {key}")))?;
    let value = text
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(" = "))
        .ok_or_else(|| LpnError::parse(no, format!("expected `{key} = ...`, got {text:?}")))?;
    Ok((no, value))
}

pub fn parse(text: &str) -> Result<LpnInstance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((no, other)) => {
            return Err(LpnError::parse(
                no,
                format!("bad magic {other:?}, expected {MAGIC}"),
            ));
        }
        None => return Err(LpnError::parse(1, "empty file")),
    }
    let (no, v) = header_value(lines.next(), "n")?;
    let n: usize = v
        .parse()
        .map_err(|_| LpnError::parse(no, format!("bad dimension {v:?}")))?;
    if n == 0 {
        return Err(LpnError::parse(no, "dimension must be positive"));
    }
    let (no, v) = header_value(lines.next(), "eps")?;
    let eps: Bias = v.parse().map_err(|e| LpnError::parse(no, format!("{e}")))?;
    let (no, v) = header_value(lines.next(), "samples")?;
    let count: usize = v
        .parse()
        .map_err(|_| LpnError::parse(no, format!("bad sample count {v:?}")))?;

    let mut seed = None;
    let mut key = None;
    if lines.peek().is_some_and(|(_, l)| l.starts_with("seed = ")) {
        let (no, v) = header_value(lines.next(), "seed")?;
        seed = Some(
            v.parse::<u64>()
                .map_err(|_| LpnError::parse(no, format!("bad seed {v:?}")))?,
        );
    }
    if lines.peek().is_some_and(|(_, l)| l.starts_with("key = ")) {
        let (no, v) = header_value(lines.next(), "key")?;
        key = Some(BitVec::from_hex(n, v).map_err(|e| LpnError::parse(no, format!("{e}")))?);
    }
    match lines.next() {
        Some((_, SEPARATOR)) => {}
        Some((no, other)) => {
            return Err(LpnError::parse(
                no,
                format!("expected {SEPARATOR:?}, got {other:?}"),
            ));
        }
        None => return Err(LpnError::parse(0, "truncated header")),
    }

    let mut samples = Vec::with_capacity(count.min(1 << 24));
    for (no, line) in lines {
        let (hex, bit) = line
            .split_once(' ')
            .ok_or_else(|| LpnError::parse(no, format!("malformed record {line:?}")))?;
        let coeffs = BitVec::from_hex(n, hex).map_err(|e| LpnError::parse(no, format!("{e}")))?;
        let rhs = match bit {
            "0" => false,
            "1" => true,
            other => return Err(LpnError::parse(no, format!("bad rhs bit {other:?}"))),
        };
        samples.push(Sample::new(coeffs, rhs));
    }
    if samples.len() != count {
        return Err(LpnError::parse(
            0,
            format!(
                "header declares {count} samples, body has {}",
                samples.len()
            ),
        ));
    }
    LpnInstance::new(n, eps, key, samples, seed)
}

/// Side file holding only a planted key.
pub fn serialize_key(key: &BitVec) -> String {
    format!("n = {}\nkey = {}\n", key.dim(), key.to_hex())
}

pub fn parse_key(text: &str) -> Result<BitVec> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (no, v) = header_value(lines.next(), "n")?;
    let n: usize = v
        .parse()
        .map_err(|_| LpnError::parse(no, format!("bad dimension {v:?}")))?;
    let (no, v) = header_value(lines.next(), "key")?;
    BitVec::from_hex(n, v).map_err(|e| LpnError::parse(no, format!("{e}")))
}
