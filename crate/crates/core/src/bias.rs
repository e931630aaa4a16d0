//! Exact bias arithmetic.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{LpnError, Result};

/// An equation bias `eps` in `(0, 1/2]`, kept as a reduced fraction.
///
/// A sample is noise-free with probability `1/2 + eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bias {
    num: u64,
    den: u64,
}

impl Bias {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(LpnError::invalid("bias denominator is zero"));
        }
        if num == 0 || num.checked_mul(2).is_none_or(|twice| twice > den) {
            return Err(LpnError::invalid(format!(
                "bias {num}/{den} outside (0, 1/2]"
            )));
        }
        let g = num.gcd(&den);
        Ok(Bias {
            num: num / g,
            den: den / g,
        })
    }

    pub const HALF: Bias = Bias { num: 1, den: 2 };

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn log2(&self) -> f64 {
        (self.num as f64).log2() - (self.den as f64).log2()
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    /// Noise probability `1/2 - eps` as the pair `(den - 2 num, 2 den)`.
    pub(crate) fn noise_fraction(&self) -> (u64, u64) {
        (self.den - 2 * self.num, 2 * self.den)
    }

    pub fn noise_rate(&self) -> f64 {
        0.5 - self.as_f64()
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Parses `NUM/DEN`; decimals are not accepted.
impl FromStr for Bias {
    type Err = LpnError;

    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| LpnError::invalid(format!("bias must be NUM/DEN, got {s:?}")))?;
        let parse = |part: &str| {
            part.parse::<u64>()
                .map_err(|_| LpnError::invalid(format!("bad fraction component {part:?}")))
        };
        Bias::new(parse(num)?, parse(den)?)
    }
}

/// Bias of the XOR of `w` independent samples of bias `eps`: `2^(w-1) eps^w`.
pub fn piling_up_bias(eps: &BigRational, w: u32) -> Result<BigRational> {
    if w == 0 {
        return Err(LpnError::invalid("combination weight must be at least 1"));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if *eps <= BigRational::zero() || *eps > half {
        return Err(LpnError::invalid(format!("bias {eps} outside (0, 1/2]")));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(num_traits::pow(two, (w - 1) as usize) * num_traits::pow(eps.clone(), w as usize))
}

/// `ceil(c / eps_tilde^2)`: the number of equations needed to separate a
/// bias-`eps_tilde` source from a fair coin. `c` scales the success margin.
pub fn required_samples(eps_tilde: &BigRational, c: u64) -> Result<u128> {
    if *eps_tilde <= BigRational::zero() {
        return Err(LpnError::invalid(
            "zero bias: no number of samples distinguishes it",
        ));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if *eps_tilde > half {
        return Err(LpnError::invalid(format!(
            "bias {eps_tilde} outside (0, 1/2]"
        )));
    }
    let sq = eps_tilde * eps_tilde;
    let q = BigRational::from_integer(BigInt::from(c)) / sq;
    let ceil: BigInt = q.ceil().to_integer();
    let ceil: BigUint = ceil
        .to_biguint()
        .ok_or_else(|| LpnError::Overflow("negative sample count".into()))?;
    ceil.to_u128()
        .ok_or_else(|| LpnError::Overflow(format!("sample requirement {ceil} exceeds u128")))
}
