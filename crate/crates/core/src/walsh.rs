//! Walsh–Hadamard hypothesis testing.
//!
//! For equations `<g, x> = rhs` supported on coordinates `0..m`, the score
//! of a candidate `x` is `sum (-1)^(<g, x> + rhs)`, i.e. agreements minus
//! disagreements. Accumulating `(-1)^rhs` at index `g` and applying the
//! unnormalized transform yields every score at once in `m 2^m` additions.

use crate::error::{LpnError, Result};
use crate::oracle::Equation;

/// Default cap on the spectrum dimension (`2^26` counters).
pub const DEFAULT_MAX_SPECTRUM_DIM: usize = 26;

/// Cap for the direct per-candidate evaluator.
pub const BRUTE_FORCE_MAX_DIM: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalshSpectrum {
    pub m: usize,
    pub values: Vec<i64>,
    /// Number of equations accumulated.
    pub total: usize,
}

/// In-place unnormalized Walsh–Hadamard transform (`+-1` kernel).
pub fn fwht_in_place(values: &mut [i64]) -> Result<()> {
    let len = values.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(LpnError::invalid(format!(
            "transform length {len} is not a power of two"
        )));
    }
    // Stages with span below the tile size run tile by tile while the tile
    // is cache resident; the rest are fused two at a time.
    let tile = len.min(CACHE_TILE);
    for chunk in values.chunks_exact_mut(tile) {
        let mut h = 1;
        while h < tile {
            radix2_pass(chunk, h);
            h *= 2;
        }
    }
    let mut h = tile;
    while h < len {
        if 4 * h <= len {
            radix4_pass(values, h);
            h *= 4;
        } else {
            radix2_pass(values, h);
            h *= 2;
        }
    }
    Ok(())
}

/// 2^15 counters (256 KiB).
const CACHE_TILE: usize = 1 << 15;

fn radix2_pass(values: &mut [i64], h: usize) {
    for block in values.chunks_exact_mut(2 * h) {
        let (lo, hi) = block.split_at_mut(h);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = x + y;
            *b = x - y;
        }
    }
}

/// Stages `h` and `2h` in one sweep.
fn radix4_pass(values: &mut [i64], h: usize) {
    for block in values.chunks_exact_mut(4 * h) {
        let (q01, q23) = block.split_at_mut(2 * h);
        let (q0, q1) = q01.split_at_mut(h);
        let (q2, q3) = q23.split_at_mut(h);
        for (((a, b), c), d) in q0
            .iter_mut()
            .zip(q1.iter_mut())
            .zip(q2.iter_mut())
            .zip(q3.iter_mut())
        {
            let (s0, d0) = (*a + *b, *a - *b);
            let (s1, d1) = (*c + *d, *c - *d);
            *a = s0 + s1;
            *b = d0 + d1;
            *c = s0 - s1;
            *d = d0 - d1;
        }
    }
}

fn check_support<E: Equation>(eq: &E, m: usize) -> Result<u64> {
    let g = eq.coeffs();
    if m > g.dim() {
        return Err(LpnError::invalid(format!(
            "spectrum dimension {m} exceeds equation dimension {}",
            g.dim()
        )));
    }
    if !g.is_zero_from(m) {
        return Err(LpnError::invalid(format!(
            "equation has a nonzero coordinate at index >= {m}"
        )));
    }
    Ok(g.low_bits(m))
}

/// Scores of all `2^m` candidates via the fast transform.
pub fn build_spectrum<E: Equation>(
    equations: &[E],
    m: usize,
    max_dim: usize,
) -> Result<WalshSpectrum> {
    if m > max_dim || m > 62 {
        return Err(LpnError::Resource {
            stage: "walsh",
            detail: format!("2^{m} counters exceeds the 2^{max_dim} budget"),
        });
    }
    let mut values = vec![0i64; 1usize << m];
    for eq in equations {
        let g = check_support(eq, m)?;
        values[g as usize] += if eq.rhs() { -1 } else { 1 };
    }
    fwht_in_place(&mut values)?;
    Ok(WalshSpectrum {
        m,
        values,
        total: equations.len(),
    })
}

/// Same contract as [`build_spectrum`], evaluating every candidate directly.
pub fn brute_force_spectrum<E: Equation>(equations: &[E], m: usize) -> Result<WalshSpectrum> {
    if m > BRUTE_FORCE_MAX_DIM {
        return Err(LpnError::invalid(format!(
            "brute-force spectrum limited to m <= {BRUTE_FORCE_MAX_DIM}, got {m}"
        )));
    }
    let gs: Vec<(u64, bool)> = equations
        .iter()
        .map(|eq| check_support(eq, m).map(|g| (g, eq.rhs())))
        .collect::<Result<_>>()?;
    let values = (0..1u64 << m)
        .map(|x| {
            gs.iter()
                .map(|&(g, rhs)| {
                    let bit = ((g & x).count_ones() & 1 == 1) ^ rhs;
                    if bit {
                        -1
                    } else {
                        1
                    }
                })
                .sum()
        })
        .collect();
    Ok(WalshSpectrum {
        m,
        values,
        total: equations.len(),
    })
}

/// Highest-scoring candidate and the runner-up score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub index: u64,
    pub score: i64,
    pub second_score: i64,
}

impl WalshSpectrum {
    /// Argmax with ties going to the smallest index.
    pub fn best_candidate(&self) -> Candidate {
        let mut best = (0usize, i64::MIN);
        let mut second = i64::MIN;
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                second = best.1;
                best = (i, v);
            } else if v > second {
                second = v;
            }
        }
        Candidate {
            index: best.0 as u64,
            score: best.1,
            second_score: if self.values.len() > 1 {
                second
            } else {
                best.1
            },
        }
    }

    /// The `k` best candidates, highest score first, ties by index.
    pub fn top_candidates(&self, k: usize) -> Vec<(u64, i64)> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        let k = k.min(idx.len());
        if k == 0 {
            return Vec::new();
        }
        let by = |a: &usize, b: &usize| self.values[*b].cmp(&self.values[*a]).then(a.cmp(b));
        idx.select_nth_unstable_by(k - 1, by);
        idx.truncate(k);
        idx.sort_by(by);
        idx.into_iter()
            .map(|i| (i as u64, self.values[i]))
            .collect()
    }

    pub fn sum_of_squares(&self) -> i128 {
        self.values.iter().map(|&v| v as i128 * v as i128).sum()
    }
}

pub fn best_candidate(spectrum: &WalshSpectrum) -> Candidate {
    spectrum.best_candidate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::BitVec;
    use crate::oracle::Sample;

    fn naive_transform(input: &[i64]) -> Vec<i64> {
        (0..input.len())
            .map(|x| {
                input
                    .iter()
                    .enumerate()
                    .map(|(g, &v)| if (g & x).count_ones() % 2 == 0 { v } else { -v })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn delta_and_butterfly() {
        let mut v = vec![1, 0, 0, 0];
        fwht_in_place(&mut v).unwrap();
        assert_eq!(v, vec![1, 1, 1, 1]);
        let mut v = vec![5, 3];
        fwht_in_place(&mut v).unwrap();
        assert_eq!(v, vec![8, 2]);
        assert!(fwht_in_place(&mut [1, 2, 3]).is_err());
        assert!(fwht_in_place(&mut []).is_err());
    }

    #[test]
    fn matches_naive_transform() {
        use rand::Rng;
        let mut rng = crate::oracle::seeded_rng(17);
        let input: Vec<i64> = (0..256).map(|_| rng.random_range(-1000..1000)).collect();
        let mut fast = input.clone();
        fwht_in_place(&mut fast).unwrap();
        assert_eq!(fast, naive_transform(&input));
    }

    #[test]
    fn constant_equation_scores_everywhere() {
        let eq = [Sample::new(BitVec::zeros(3), false)];
        let s = build_spectrum(&eq, 3, 26).unwrap();
        assert_eq!(s.values, vec![1; 8]);
        assert_eq!(s.best_candidate().index, 0);
    }

    #[test]
    fn single_equation_pattern() {
        // g = (1, 1), rhs = 1: satisfied exactly when x0 + x1 = 1.
        let eq = [Sample::new(BitVec::parse_bits("11").unwrap(), true)];
        let s = brute_force_spectrum(&eq, 2).unwrap();
        assert_eq!(s.values, vec![-1, 1, 1, -1]);
        assert_eq!(build_spectrum(&eq, 2, 26).unwrap(), s);
    }

    #[test]
    fn empty_input_gives_zero_spectrum() {
        let s = brute_force_spectrum::<Sample>(&[], 4).unwrap();
        assert!(s.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn noiseless_equations_peak_at_key() {
        let key = BitVec::from_u64(10, 0b1011001110);
        let mut rng = crate::oracle::seeded_rng(4);
        let eqs: Vec<Sample> = (0..200)
            .map(|_| crate::oracle::oracle_sample(&key, crate::bias::Bias::HALF, &mut rng))
            .collect();
        let s = build_spectrum(&eqs, 10, 26).unwrap();
        let c = s.best_candidate();
        assert_eq!(c.index, key.low_bits(10));
        assert_eq!(c.score, 200);
        assert!(c.second_score < 200);
    }

    #[test]
    fn support_outside_prefix_rejected() {
        let eq = [Sample::new(BitVec::parse_bits("0001").unwrap(), false)];
        assert!(build_spectrum(&eq, 3, 26).is_err());
        assert!(build_spectrum(&eq, 4, 3).is_err());
        assert!(brute_force_spectrum(&eq, 17).is_err());
    }

    #[test]
    fn ties_break_to_smallest_index() {
        let s = WalshSpectrum {
            m: 2,
            values: vec![3, 7, 7, 1],
            total: 7,
        };
        let c = s.best_candidate();
        assert_eq!((c.index, c.score, c.second_score), (1, 7, 7));
        assert_eq!(s.top_candidates(3), vec![(1, 7), (2, 7), (0, 3)]);
    }
}
