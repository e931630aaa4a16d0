//! Simulated LPN oracle and planted instances.
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! with [`SeedableRng::seed_from_u64`]. An instance draws, in order: the key
//! (one `next_u64` per 64-bit word, low coordinates first, padding masked),
//! then for every sample its coefficient words the same way followed by one
//! noise draw. A noise draw takes `next_u64` values until one falls below
//! the largest multiple of `2 den` that fits in 2^64, reduces it modulo
//! `2 den` and sets the noise bit when the result is below `den - 2 num`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bias::Bias;
use crate::bitvec::BitVec;
use crate::error::{LpnError, Result};

/// One oracle output: coefficient vector `g` and `<g, x> + e`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sample {
    pub coeffs: BitVec,
    pub rhs: bool,
}

impl Sample {
    pub fn new(coeffs: BitVec, rhs: bool) -> Self {
        Sample { coeffs, rhs }
    }
}

/// Anything usable as a linear equation `<coeffs, x> = rhs`.
pub trait Equation {
    fn coeffs(&self) -> &BitVec;
    fn rhs(&self) -> bool;
}

impl Equation for Sample {
    fn coeffs(&self) -> &BitVec {
        &self.coeffs
    }
    fn rhs(&self) -> bool {
        self.rhs
    }
}

/// The named generator behind every seeded instance.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Uniform integer in `0..bound` by rejection.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0);
    // Largest multiple of `bound` not exceeding 2^64, expressed as a limit on x.
    let rem = ((u64::MAX % bound) + 1) % bound;
    loop {
        let x = rng.next_u64();
        if rem == 0 || x < u64::MAX - rem + 1 {
            return x % bound;
        }
    }
}

/// Bernoulli noise bit with `Pr(1) = 1/2 - eps`, exact.
pub fn noise_bit<R: RngCore + ?Sized>(eps: Bias, rng: &mut R) -> bool {
    let (p_num, p_den) = eps.noise_fraction();
    uniform_below(rng, p_den) < p_num
}

/// One call to the oracle for `key` at bias `eps`.
pub fn oracle_sample<R: RngCore + ?Sized>(key: &BitVec, eps: Bias, rng: &mut R) -> Sample {
    let coeffs = BitVec::random(key.dim(), rng);
    let e = noise_bit(eps, rng);
    let rhs = coeffs.dot_unchecked(key) ^ e;
    Sample { coeffs, rhs }
}

/// A collection of samples in dimension `n` at bias `eps`, optionally with
/// the planted key that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpnInstance {
    pub n: usize,
    pub eps: Bias,
    pub key: Option<BitVec>,
    pub samples: Vec<Sample>,
    pub seed: Option<u64>,
}

impl LpnInstance {
    /// Checks dimensions and, for a noiseless instance with a key, that
    /// every sample is consistent.
    pub fn new(
        n: usize,
        eps: Bias,
        key: Option<BitVec>,
        samples: Vec<Sample>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(LpnError::invalid("dimension must be positive"));
        }
        if let Some(k) = &key {
            if k.dim() != n {
                return Err(LpnError::DimensionMismatch {
                    left: n,
                    right: k.dim(),
                });
            }
        }
        if let Some(bad) = samples.iter().find(|s| s.coeffs.dim() != n) {
            return Err(LpnError::DimensionMismatch {
                left: n,
                right: bad.coeffs.dim(),
            });
        }
        if let (Some(k), true) = (&key, eps == Bias::HALF) {
            if samples.iter().any(|s| s.coeffs.dot_unchecked(k) != s.rhs) {
                return Err(LpnError::invalid(
                    "noiseless instance has a sample inconsistent with its key",
                ));
            }
        }
        Ok(LpnInstance {
            n,
            eps,
            key,
            samples,
            seed,
        })
    }

    /// Planted instance: key then `count` samples from the seeded generator.
    pub fn generate(n: usize, eps: Bias, count: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(LpnError::invalid("dimension must be positive"));
        }
        let mut rng = seeded_rng(seed);
        let key = BitVec::random(n, &mut rng);
        let samples = (0..count)
            .map(|_| oracle_sample(&key, eps, &mut rng))
            .collect();
        Ok(LpnInstance {
            n,
            eps,
            key: Some(key),
            samples,
            seed: Some(seed),
        })
    }

    /// Same instance with a fixed key instead of a random one.
    pub fn generate_with_key(key: BitVec, eps: Bias, count: usize, seed: u64) -> Result<Self> {
        if key.dim() == 0 {
            return Err(LpnError::invalid("dimension must be positive"));
        }
        let mut rng = seeded_rng(seed);
        let samples = (0..count)
            .map(|_| oracle_sample(&key, eps, &mut rng))
            .collect();
        Ok(LpnInstance {
            n: key.dim(),
            eps,
            key: Some(key),
            samples,
            seed: Some(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Copy without the planted key.
    pub fn attack_only(&self) -> Self {
        LpnInstance {
            key: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_samples_are_consistent() {
        let inst = LpnInstance::generate(37, Bias::HALF, 500, 3).unwrap();
        let key = inst.key.as_ref().unwrap();
        for s in &inst.samples {
            assert_eq!(s.rhs, s.coeffs.inner_product(key).unwrap());
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = LpnInstance::generate(20, Bias::new(1, 10).unwrap(), 1000, 7).unwrap();
        let b = LpnInstance::generate(20, Bias::new(1, 10).unwrap(), 1000, 7).unwrap();
        let c = LpnInstance::generate(20, Bias::new(1, 10).unwrap(), 1000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn noise_rate_matches_bias() {
        // 1e6 draws at eps = 1/8: noise rate within 4 sigma of 0.375.
        let eps = Bias::new(1, 8).unwrap();
        let mut rng = seeded_rng(11);
        let trials = 1_000_000u32;
        let ones = (0..trials).filter(|_| noise_bit(eps, &mut rng)).count() as f64;
        let p = 0.375;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((ones / trials as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn one_dimensional_coefficients_are_fair() {
        let key = BitVec::from_u64(1, 1);
        let eps = Bias::new(1, 8).unwrap();
        let mut rng = seeded_rng(5);
        let trials = 100_000;
        let ones = (0..trials)
            .filter(|_| oracle_sample(&key, eps, &mut rng).coeffs.get(0))
            .count() as f64;
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((ones / trials as f64 - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn uniform_below_edge_bounds() {
        let mut rng = seeded_rng(1);
        assert_eq!(uniform_below(&mut rng, 1), 0);
        for _ in 0..1000 {
            assert!(uniform_below(&mut rng, 3) < 3);
            assert!(uniform_below(&mut rng, 1 << 63) < 1 << 63);
        }
    }

    #[test]
    fn instance_validation() {
        let eps = Bias::HALF;
        let key = BitVec::from_u64(4, 0b1010);
        let bad = Sample::new(BitVec::from_u64(4, 0b0010), false);
        assert!(LpnInstance::new(4, eps, Some(key.clone()), vec![bad], None).is_err());
        let wrong_dim = Sample::new(BitVec::zeros(5), false);
        assert!(LpnInstance::new(4, eps, None, vec![wrong_dim], None).is_err());
        assert!(LpnInstance::new(0, eps, None, vec![], None).is_err());
    }
}
