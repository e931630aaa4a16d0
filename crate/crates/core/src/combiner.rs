//! `w`-ary combination of samples by birthday bucketing.
//!
//! Every `w/2`-subset of the samples is XOR-ed into a half-combination.
//! Halves are sorted by their last `b` coordinates; two halves in the same
//! run cancel those coordinates, so each unordered pair of index-disjoint
//! halves in a run yields an equation that only involves coordinates
//! `0..n - b`.

use std::cmp::Ordering;
use std::ops::Range;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use smallvec::SmallVec;

use crate::bias::{piling_up_bias, required_samples, Bias};
use crate::bitvec::BitVec;
use crate::error::{LpnError, Result};
use crate::oracle::{Equation, Sample};

pub const MAX_HALF_WEIGHT: usize = 3;

/// Default cap on the number of half-combinations held in memory.
pub const DEFAULT_MAX_HALVES: u64 = 1 << 26;

pub type IndexSet = SmallVec<[u32; 2 * MAX_HALF_WEIGHT]>;

/// XOR of `half_weight` distinct samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfCombination {
    pub coeffs: BitVec,
    pub rhs: bool,
    /// Strictly increasing sample indices.
    pub indices: SmallVec<[u32; MAX_HALF_WEIGHT]>,
}

/// XOR of `w'` distinct samples whose last `b'` coordinates cancel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CombinedEquation {
    pub coeffs: BitVec,
    pub rhs: bool,
    /// Strictly increasing sample indices.
    pub indices: IndexSet,
}

impl Equation for HalfCombination {
    fn coeffs(&self) -> &BitVec {
        &self.coeffs
    }
    fn rhs(&self) -> bool {
        self.rhs
    }
}

impl Equation for CombinedEquation {
    fn coeffs(&self) -> &BitVec {
        &self.coeffs
    }
    fn rhs(&self) -> bool {
        self.rhs
    }
}

impl Ord for CombinedEquation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coeffs
            .cmp(&other.coeffs)
            .then(self.rhs.cmp(&other.rhs))
            .then_with(|| self.indices.as_slice().cmp(other.indices.as_slice()))
    }
}

impl PartialOrd for CombinedEquation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `C(n, k)` as `f64`, exact while it fits in 53 bits.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `C(N, half_weight)` half-combinations in lexicographic index order.
pub fn enumerate_halves(
    samples: &[Sample],
    half_weight: usize,
    max_halves: u64,
) -> Result<Vec<HalfCombination>> {
    if !(1..=MAX_HALF_WEIGHT).contains(&half_weight) {
        return Err(LpnError::invalid(format!(
            "half weight must be in 1..={MAX_HALF_WEIGHT}, got {half_weight}"
        )));
    }
    if samples.len() > u32::MAX as usize {
        return Err(LpnError::invalid("more than 2^32 samples"));
    }
    let estimate = binomial(samples.len() as u64, half_weight as u64);
    if estimate > max_halves as f64 {
        return Err(LpnError::Resource {
            stage: "combine",
            detail: format!(
                "C({}, {half_weight}) = {estimate:.3e} half-combinations exceeds budget {max_halves}",
                samples.len()
            ),
        });
    }
    let mut out = Vec::with_capacity(estimate as usize);
    let mut idx: Vec<usize> = (0..half_weight).collect();
    let n = samples.len();
    if n < half_weight {
        return Ok(out);
    }
    loop {
        let mut coeffs = samples[idx[0]].coeffs.clone();
        let mut rhs = samples[idx[0]].rhs;
        for &i in &idx[1..] {
            coeffs.xor_assign(&samples[i].coeffs)?;
            rhs ^= samples[i].rhs;
        }
        out.push(HalfCombination {
            coeffs,
            rhs,
            indices: idx.iter().map(|&i| i as u32).collect(),
        });
        // Next k-subset in lexicographic order.
        let mut pos = half_weight;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if idx[pos] < n - half_weight + pos {
                break;
            }
        }
        idx[pos] += 1;
        for j in pos + 1..half_weight {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn merge_disjoint(a: &[u32], b: &[u32]) -> Option<IndexSet> {
    let mut out = IndexSet::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => return None,
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some(out)
}

fn pair_run(halves: &[HalfCombination], order: &[u32], run: Range<usize>) -> Vec<CombinedEquation> {
    let members = &order[run];
    let mut out = Vec::new();
    for (pos, &i) in members.iter().enumerate() {
        let a = &halves[i as usize];
        for &j in &members[pos + 1..] {
            let b = &halves[j as usize];
            let Some(indices) = merge_disjoint(&a.indices, &b.indices) else {
                continue;
            };
            let mut coeffs = a.coeffs.clone();
            coeffs.xor_assign_unchecked(&b.coeffs);
            if coeffs.is_zero() {
                continue;
            }
            out.push(CombinedEquation {
                coeffs,
                rhs: a.rhs ^ b.rhs,
                indices,
            });
        }
    }
    out
}

/// Groups halves by their last `b` coordinates and pairs within groups.
///
/// Output is sorted by `(coeffs bytes, rhs, indices)` with exact
/// duplicates (same index set reached through different pairings) removed.
pub fn bucket_and_pair(halves: &[HalfCombination], b: usize) -> Result<Vec<CombinedEquation>> {
    let Some(first) = halves.first() else {
        return Ok(Vec::new());
    };
    let n = first.coeffs.dim();
    if b > n {
        return Err(LpnError::invalid(format!("b' = {b} exceeds dimension {n}")));
    }
    if let Some(bad) = halves.iter().find(|h| h.coeffs.dim() != n) {
        return Err(LpnError::DimensionMismatch {
            left: n,
            right: bad.coeffs.dim(),
        });
    }
    let keys: Vec<BitVec> = halves.par_iter().map(|h| h.coeffs.suffix(b)).collect();
    let mut order: Vec<u32> = (0..halves.len() as u32).collect();
    order.par_sort_unstable_by(|&x, &y| keys[x as usize].cmp(&keys[y as usize]).then(x.cmp(&y)));

    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=order.len() {
        if i == order.len() || keys[order[i] as usize] != keys[order[start] as usize] {
            if i - start >= 2 {
                runs.push(start..i);
            }
            start = i;
        }
    }
    let mut out: Vec<CombinedEquation> = runs
        .into_par_iter()
        .flat_map_iter(|run| pair_run(halves, &order, run))
        .collect();
    out.par_sort_unstable();
    out.dedup();
    Ok(out)
}

/// Result of one combination pass.
#[derive(Clone, Debug)]
pub struct Combination {
    pub equations: Vec<CombinedEquation>,
    /// Bias of every output equation, `2^(w'-1) eps^w'`.
    pub bias: BigRational,
    pub w_int: u32,
    pub b_int: u32,
    pub halves: usize,
    /// `C(N, w') / 2^b'`: distinct index sets expected to cancel.
    pub expected: f64,
    /// `ceil(1 / bias^2)`.
    pub threshold: u128,
}

impl Combination {
    pub fn shortfall(&self) -> Option<String> {
        if (self.equations.len() as u128) < self.threshold {
            Some(format!(
                "combine produced {} equations, below the {} needed at bias {}",
                self.equations.len(),
                self.threshold,
                self.bias
            ))
        } else {
            None
        }
    }

    pub fn bias_f64(&self) -> f64 {
        self.bias.to_f64().unwrap_or(0.0)
    }
}

/// `enumerate_halves(samples, w/2)` followed by `bucket_and_pair(., b)`.
pub fn combine(
    samples: &[Sample],
    eps: Bias,
    w_int: u32,
    b_int: u32,
    max_halves: u64,
) -> Result<Combination> {
    if w_int < 2 || !w_int.is_multiple_of(2) {
        return Err(LpnError::invalid(format!(
            "w' must be even and >= 2, got {w_int}"
        )));
    }
    let halves = enumerate_halves(samples, (w_int / 2) as usize, max_halves)?;
    let equations = bucket_and_pair(&halves, b_int as usize)?;
    let bias = piling_up_bias(&eps.to_rational(), w_int)?;
    let threshold = required_samples(&bias, 1)?;
    Ok(Combination {
        equations,
        bias,
        w_int,
        b_int,
        halves: halves.len(),
        expected: binomial(samples.len() as u64, w_int as u64) / (b_int as f64).exp2(),
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::LpnInstance;

    fn bv(s: &str) -> BitVec {
        BitVec::parse_bits(s).unwrap()
    }

    #[test]
    fn half_counts() {
        let inst = LpnInstance::generate(8, Bias::new(1, 4).unwrap(), 5, 1).unwrap();
        let h1 = enumerate_halves(&inst.samples[..4], 1, 1 << 20).unwrap();
        assert_eq!(h1.len(), 4);
        for (i, h) in h1.iter().enumerate() {
            assert_eq!(h.coeffs, inst.samples[i].coeffs);
            assert_eq!(h.indices.as_slice(), &[i as u32]);
        }
        assert_eq!(
            enumerate_halves(&inst.samples, 2, 1 << 20).unwrap().len(),
            10
        );
        assert_eq!(
            enumerate_halves(&inst.samples, 3, 1 << 20).unwrap().len(),
            10
        );
        assert!(enumerate_halves(&inst.samples, 4, 1 << 20).is_err());
        assert!(enumerate_halves(&inst.samples, 0, 1 << 20).is_err());
    }

    #[test]
    fn halves_recompute_from_indices() {
        let inst = LpnInstance::generate(16, Bias::new(1, 4).unwrap(), 10, 2).unwrap();
        let halves = enumerate_halves(&inst.samples, 2, 1 << 20).unwrap();
        assert_eq!(halves.len(), 45);
        for h in &halves {
            assert!(h.indices.windows(2).all(|w| w[0] < w[1]));
            let mut c = BitVec::zeros(16);
            let mut r = false;
            for &i in &h.indices {
                c.xor_assign(&inst.samples[i as usize].coeffs).unwrap();
                r ^= inst.samples[i as usize].rhs;
            }
            assert_eq!((c, r), (h.coeffs.clone(), h.rhs));
        }
    }

    #[test]
    fn half_budget_is_enforced() {
        let inst = LpnInstance::generate(8, Bias::HALF, 100, 1).unwrap();
        let err = enumerate_halves(&inst.samples, 2, 1000).unwrap_err();
        assert!(matches!(
            err,
            LpnError::Resource {
                stage: "combine",
                ..
            }
        ));
    }

    #[test]
    fn hand_worked_pair() {
        let s = vec![
            Sample::new(bv("1011"), true),
            Sample::new(bv("0111"), false),
        ];
        let halves = enumerate_halves(&s, 1, 16).unwrap();
        let out = bucket_and_pair(&halves, 2).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].coeffs, bv("1100"));
        assert!(out[0].rhs);
        assert_eq!(out[0].indices.as_slice(), &[0, 1]);
    }

    #[test]
    fn zero_b_pairs_everything() {
        let s = vec![
            Sample::new(bv("1000"), false),
            Sample::new(bv("0100"), false),
            Sample::new(bv("0010"), true),
        ];
        let c = combine(&s, Bias::HALF, 2, 0, 16).unwrap();
        assert_eq!(c.equations.len(), 3);
        assert_eq!(c.halves, 3);
    }

    #[test]
    fn zero_sums_and_shared_indices_are_dropped() {
        // Samples 0 and 1 are identical, so their pair XORs to zero.
        let s = vec![
            Sample::new(bv("1100"), false),
            Sample::new(bv("1100"), true),
            Sample::new(bv("0011"), true),
        ];
        let out = combine(&s, Bias::HALF, 2, 0, 16).unwrap().equations;
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|e| !e.coeffs.is_zero()));
        // w' = 4 from three samples is impossible without reusing an index.
        assert!(combine(&s, Bias::HALF, 4, 0, 16)
            .unwrap()
            .equations
            .is_empty());
    }

    #[test]
    fn four_way_sets_are_reported_once() {
        let inst = LpnInstance::generate(6, Bias::new(1, 4).unwrap(), 12, 9).unwrap();
        let out = combine(&inst.samples, inst.eps, 4, 3, 1 << 20)
            .unwrap()
            .equations;
        let mut sets: Vec<_> = out.iter().map(|e| e.indices.clone()).collect();
        sets.sort();
        let before = sets.len();
        sets.dedup();
        assert_eq!(before, sets.len());
    }

    #[test]
    fn output_is_sorted() {
        let inst = LpnInstance::generate(12, Bias::new(1, 4).unwrap(), 40, 4).unwrap();
        let out = combine(&inst.samples, inst.eps, 2, 4, 1 << 20)
            .unwrap()
            .equations;
        assert!(out.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn odd_weight_rejected() {
        assert!(combine(&[], Bias::HALF, 3, 0, 16).is_err());
        assert!(combine(&[], Bias::HALF, 0, 0, 16).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(32, 4), 35960.0);
        assert_eq!(binomial(3, 5), 0.0);
    }
}
