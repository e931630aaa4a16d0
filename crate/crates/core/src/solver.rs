//! End-to-end key recovery.
//!
//! `decimate -> combine -> Walsh search -> recover the cancelled bits ->
//! recover the decimated bits -> verify`. Bits that the Walsh search does
//! not cover are found by substituting the known part of the key into the
//! original weight-1 samples and solving the smaller instance at the
//! original bias: directly by a Walsh search when it has at most
//! `fwt_cap` unknowns, otherwise by running the whole pipeline again.

use std::fmt::Write as _;
use std::ops::Range;
use std::time::Instant;

use crate::bias::{required_samples, Bias};
use crate::bitvec::BitVec;
use crate::combiner::{combine, DEFAULT_MAX_HALVES};
use crate::error::{LpnError, Result};
use crate::oracle::{LpnInstance, Sample};
use crate::planner::{desk_plan, fmt_real, Plan, PlanOverrides};
use crate::walsh::{build_spectrum, DEFAULT_MAX_SPECTRUM_DIM};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Largest number of unknowns solved by a direct Walsh search.
    pub fwt_cap: usize,
    pub max_halves: u64,
    pub max_spectrum_dim: usize,
    /// Multiplier `c` in the `c / eps^2` sample requirement.
    pub sample_constant: u64,
    pub max_depth: usize,
    /// Number of top Walsh candidates to complete and verify.
    pub list_size: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            fwt_cap: 20,
            max_halves: DEFAULT_MAX_HALVES,
            max_spectrum_dim: DEFAULT_MAX_SPECTRUM_DIM,
            sample_constant: 1,
            max_depth: 4,
            list_size: 1,
        }
    }
}

/// Per-stage counts and wall-clock timings of one solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageReport {
    pub samples_used: usize,
    pub retained: usize,
    pub retained_expected: f64,
    pub halves: usize,
    pub equations: usize,
    pub equations_expected: f64,
    pub eq_threshold: u128,
    pub spectrum_dim: usize,
    pub best_score: i64,
    pub second_score: i64,
    pub candidates_tried: usize,
    pub recursion_depth: usize,
    pub decimate_ms: f64,
    pub combine_ms: f64,
    pub walsh_ms: f64,
    pub suffix_ms: f64,
    pub verify_ms: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub key_hat: BitVec,
    pub agreement: f64,
    pub success: bool,
    pub report: StageReport,
}

/// Agreement needed to accept a key: midway between a random key (1/2)
/// and the true key (1/2 + eps).
pub fn acceptance_threshold(eps: Bias) -> f64 {
    0.5 + eps.as_f64() / 2.0
}

/// Fraction of samples satisfied by `key`.
pub fn verify_key(samples: &[Sample], key: &BitVec) -> Result<f64> {
    if samples.is_empty() {
        return Err(LpnError::invalid(
            "agreement of an empty sample set is undefined",
        ));
    }
    let mut hits = 0usize;
    for s in samples {
        if s.coeffs.inner_product(key)? == s.rhs {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Samples that vanish on coordinates `0..l_prime`, with those coordinates
/// dropped.
#[derive(Clone, Debug)]
pub struct Decimation {
    pub samples: Vec<Sample>,
    pub dim: usize,
    /// `N 2^-l'`.
    pub expected: f64,
}

pub fn decimate(samples: &[Sample], n: usize, l_prime: usize) -> Result<Decimation> {
    if l_prime > 0 && l_prime + 3 > n {
        return Err(LpnError::invalid(format!(
            "decimation l' = {l_prime} exceeds n - 3 for n = {n}"
        )));
    }
    if let Some(bad) = samples.iter().find(|s| s.coeffs.dim() != n) {
        return Err(LpnError::DimensionMismatch {
            left: n,
            right: bad.coeffs.dim(),
        });
    }
    let dim = n - l_prime;
    let kept = samples
        .iter()
        .filter(|s| s.coeffs.slice(0, l_prime).is_zero())
        .map(|s| Sample::new(s.coeffs.slice(l_prime, dim), s.rhs))
        .collect();
    Ok(Decimation {
        samples: kept,
        dim,
        expected: samples.len() as f64 / (l_prime as f64).exp2(),
    })
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Substitutes `known` (zero on `unknown`) into every sample and keeps the
/// coordinates in `unknown`.
fn substitute(samples: &[Sample], known: &BitVec, unknown: Range<usize>) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| {
            let rhs = s.rhs ^ s.coeffs.dot_unchecked(known);
            Sample::new(s.coeffs.slice(unknown.start, unknown.len()), rhs)
        })
        .collect()
}

struct Ctx<'a> {
    eps: Bias,
    cfg: &'a SolverConfig,
}

impl Ctx<'_> {
    fn shortfall_warning(&self, have: usize, what: &str, warnings: &mut Vec<String>) {
        let need = required_samples(&self.eps.to_rational(), self.cfg.sample_constant)
            .unwrap_or(u128::MAX);
        if (have as u128) < need {
            warnings.push(format!(
                "{what}: {have} samples, below the {need} needed at bias {}",
                self.eps
            ));
        }
    }

    /// Solves an LPN instance on all of its coordinates.
    fn solve_dense(
        &self,
        samples: &[Sample],
        dim: usize,
        depth: usize,
        report: &mut StageReport,
    ) -> Result<BitVec> {
        report.recursion_depth = report.recursion_depth.max(depth);
        if dim <= self.cfg.fwt_cap {
            let spectrum = build_spectrum(samples, dim, self.cfg.max_spectrum_dim)?;
            return Ok(BitVec::from_u64(dim, spectrum.best_candidate().index));
        }
        if depth >= self.cfg.max_depth {
            return Err(LpnError::Resource {
                stage: "suffix",
                detail: format!("recursion depth {depth} reached with {dim} unknowns left"),
            });
        }
        if samples.is_empty() {
            return Err(LpnError::infeasible(format!(
                "no samples left for {dim} unknowns"
            )));
        }
        let log_n = (samples.len() as f64).log2();
        let plan = desk_plan(dim, self.eps, log_n, PlanOverrides::default())?;
        if !plan.feasible {
            return Err(LpnError::infeasible(format!(
                "no feasible plan for {dim} unknowns from {} samples",
                samples.len()
            )));
        }
        let mut inner = StageReport::default();
        let key = self.pipeline(samples, &plan, depth + 1, &mut inner)?;
        report.recursion_depth = report.recursion_depth.max(inner.recursion_depth);
        report.warnings.extend(inner.warnings);
        Ok(key)
    }

    /// Recovers coordinates `unknown` of a dimension-`n` key given the rest.
    fn recover_range(
        &self,
        samples: &[Sample],
        known: &BitVec,
        unknown: Range<usize>,
        depth: usize,
        report: &mut StageReport,
    ) -> Result<BitVec> {
        if unknown.is_empty() {
            return Ok(known.clone());
        }
        self.shortfall_warning(samples.len(), "back-substitution", &mut report.warnings);
        let reduced = substitute(samples, known, unknown.clone());
        let part = self.solve_dense(&reduced, unknown.len(), depth, report)?;
        let n = known.dim();
        let head = known.slice(0, unknown.start);
        let tail = known.slice(unknown.end, n - unknown.end);
        Ok(head.concat(&part).concat(&tail))
    }

    fn pipeline(
        &self,
        samples: &[Sample],
        plan: &Plan,
        depth: usize,
        report: &mut StageReport,
    ) -> Result<BitVec> {
        let n = plan.n;
        let l_prime = plan.l_prime as usize;
        report.recursion_depth = report.recursion_depth.max(depth);
        report.samples_used = samples.len();

        let t = Instant::now();
        let dec = decimate(samples, n, l_prime)?;
        report.retained = dec.samples.len();
        report.retained_expected = dec.expected;
        if l_prime > 0 && dec.samples.is_empty() {
            report
                .warnings
                .push("decimation retained no samples".into());
        }
        report.decimate_ms = elapsed_ms(t);

        let t = Instant::now();
        let comb = combine(
            &dec.samples,
            self.eps,
            plan.w_int,
            plan.b_int,
            self.cfg.max_halves,
        )?;
        report.halves = comb.halves;
        report.equations = comb.equations.len();
        report.equations_expected = comb.expected;
        report.eq_threshold = comb.threshold;
        if let Some(w) = comb.shortfall() {
            report.warnings.push(w);
        }
        report.combine_ms = elapsed_ms(t);

        let t = Instant::now();
        let m = dec.dim - plan.b_int as usize;
        report.spectrum_dim = m;
        let spectrum = build_spectrum(&comb.equations, m, self.cfg.max_spectrum_dim)?;
        drop(comb);
        let best = spectrum.best_candidate();
        report.best_score = best.score;
        report.second_score = best.second_score;
        let candidates = spectrum.top_candidates(self.cfg.list_size.max(1));
        drop(spectrum);
        report.walsh_ms = elapsed_ms(t);

        let t = Instant::now();
        let mut fallback: Option<(f64, BitVec)> = None;
        for (tried, &(index, _)) in candidates.iter().enumerate() {
            report.candidates_tried = tried + 1;
            let prefix = BitVec::from_u64(m, index).concat(&BitVec::zeros(dec.dim - m));
            let reduced_key =
                self.recover_range(&dec.samples, &prefix, m..dec.dim, depth, report)?;
            let full_known = BitVec::zeros(l_prime).concat(&reduced_key);
            let key = self.recover_range(samples, &full_known, 0..l_prime, depth, report)?;
            if candidates.len() == 1 {
                report.suffix_ms = elapsed_ms(t);
                return Ok(key);
            }
            let agreement = verify_key(samples, &key)?;
            if agreement >= acceptance_threshold(self.eps) {
                report.suffix_ms = elapsed_ms(t);
                return Ok(key);
            }
            if fallback.as_ref().is_none_or(|(a, _)| agreement > *a) {
                fallback = Some((agreement, key));
            }
        }
        report.suffix_ms = elapsed_ms(t);
        Ok(fallback.expect("at least one candidate").1)
    }
}

/// Completes a key whose coordinates `0..m` are known, using weight-1
/// samples at their original bias. Returns the key and any warnings.
pub fn recover_suffix(
    samples: &[Sample],
    known_prefix: &BitVec,
    n: usize,
    eps: Bias,
    cfg: &SolverConfig,
) -> Result<(BitVec, Vec<String>)> {
    let m = known_prefix.dim();
    if m >= n {
        return Err(LpnError::invalid(format!(
            "prefix of {m} bits leaves nothing to recover in dimension {n}"
        )));
    }
    if let Some(bad) = samples.iter().find(|s| s.coeffs.dim() != n) {
        return Err(LpnError::DimensionMismatch {
            left: n,
            right: bad.coeffs.dim(),
        });
    }
    let ctx = Ctx { eps, cfg };
    let mut report = StageReport::default();
    let known = known_prefix.concat(&BitVec::zeros(n - m));
    let key = ctx.recover_range(samples, &known, m..n, 0, &mut report)?;
    Ok((key, report.warnings))
}

/// Number of leading samples a plan uses.
pub fn samples_for_plan(plan: &Plan) -> usize {
    plan.log_n.exp2().round() as usize
}

pub fn solve(instance: &LpnInstance, plan: &Plan, cfg: &SolverConfig) -> Result<SolveResult> {
    if plan.n != instance.n {
        return Err(LpnError::DimensionMismatch {
            left: instance.n,
            right: plan.n,
        });
    }
    if plan.eps != instance.eps {
        return Err(LpnError::invalid(format!(
            "plan bias {} differs from instance bias {}",
            plan.eps, instance.eps
        )));
    }
    if !plan.feasible {
        return Err(LpnError::infeasible("plan is marked infeasible"));
    }
    let wanted = samples_for_plan(plan);
    if wanted > instance.samples.len() {
        return Err(LpnError::invalid(format!(
            "plan uses 2^{} = {wanted} samples but the instance has {}",
            plan.log_n,
            instance.samples.len()
        )));
    }
    let samples = &instance.samples[..wanted];
    let ctx = Ctx {
        eps: instance.eps,
        cfg,
    };
    let mut report = StageReport::default();
    let key_hat = ctx.pipeline(samples, plan, 0, &mut report)?;

    let t = Instant::now();
    let agreement = verify_key(samples, &key_hat)?;
    report.verify_ms = elapsed_ms(t);
    Ok(SolveResult {
        key_hat,
        agreement,
        success: agreement >= acceptance_threshold(instance.eps),
        report,
    })
}

impl SolveResult {
    /// Flat `key = value` document followed by a `[stage_report]` block.
    pub fn to_kv(&self, eps: Bias, exact_match: Option<bool>) -> String {
        let r = &self.report;
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.key_hat.dim());
        let _ = writeln!(s, "eps_num = {}", eps.num());
        let _ = writeln!(s, "eps_den = {}", eps.den());
        let _ = writeln!(s, "key_hat = {}", self.key_hat.to_hex());
        let _ = writeln!(s, "agreement = {}", fmt_real(self.agreement));
        let _ = writeln!(s, "threshold = {}", fmt_real(acceptance_threshold(eps)));
        let _ = writeln!(s, "success = {}", self.success);
        if let Some(m) = exact_match {
            let _ = writeln!(s, "exact_match = {m}");
        }
        let _ = writeln!(s, "[stage_report]");
        let _ = writeln!(s, "samples_used = {}", r.samples_used);
        let _ = writeln!(s, "retained = {}", r.retained);
        let _ = writeln!(s, "halves = {}", r.halves);
        let _ = writeln!(s, "equations = {}", r.equations);
        let _ = writeln!(s, "equations_expected = {}", fmt_real(r.equations_expected));
        let _ = writeln!(s, "eq_threshold = {}", r.eq_threshold);
        let _ = writeln!(s, "spectrum_dim = {}", r.spectrum_dim);
        let _ = writeln!(s, "best_score = {}", r.best_score);
        let _ = writeln!(s, "second_score = {}", r.second_score);
        let _ = writeln!(s, "candidates_tried = {}", r.candidates_tried);
        let _ = writeln!(s, "recursion_depth = {}", r.recursion_depth);
        let _ = writeln!(s, "decimate_ms = {:.3}", r.decimate_ms);
        let _ = writeln!(s, "combine_ms = {:.3}", r.combine_ms);
        let _ = writeln!(s, "walsh_ms = {:.3}", r.walsh_ms);
        let _ = writeln!(s, "suffix_ms = {:.3}", r.suffix_ms);
        let _ = writeln!(s, "verify_ms = {:.3}", r.verify_ms);
        let _ = writeln!(s, "warnings = {}", r.warnings.len());
        for (i, w) in r.warnings.iter().enumerate() {
            let _ = writeln!(s, "warning_{i} = {w}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::LpnInstance;
    use crate::planner::make_plan;

    #[test]
    fn decimation_identity_and_exclusion() {
        let inst = LpnInstance::generate(10, Bias::new(1, 4).unwrap(), 50, 1).unwrap();
        let d = decimate(&inst.samples, 10, 0).unwrap();
        assert_eq!(d.samples, inst.samples);
        let s = vec![Sample::new(BitVec::parse_bits("1000000").unwrap(), true)];
        assert!(decimate(&s, 7, 1).unwrap().samples.is_empty());
        let s = vec![Sample::new(BitVec::parse_bits("0100001").unwrap(), true)];
        let d = decimate(&s, 7, 1).unwrap();
        assert_eq!(d.samples[0].coeffs, BitVec::parse_bits("100001").unwrap());
        assert!(decimate(&s, 7, 5).is_err());
    }

    #[test]
    fn verify_known_and_empty() {
        let inst = LpnInstance::generate(12, Bias::HALF, 100, 2).unwrap();
        assert_eq!(
            verify_key(&inst.samples, inst.key.as_ref().unwrap()).unwrap(),
            1.0
        );
        assert!(verify_key(&[], &BitVec::zeros(3)).is_err());
    }

    #[test]
    fn one_bit_suffix_noiseless() {
        for seed in 0..20 {
            let inst = LpnInstance::generate(6, Bias::HALF, 24, seed).unwrap();
            let key = inst.key.clone().unwrap();
            let prefix = key.slice(0, 5);
            let (got, _) = recover_suffix(
                &inst.samples,
                &prefix,
                6,
                inst.eps,
                &SolverConfig::default(),
            )
            .unwrap();
            assert_eq!(got, key);
        }
    }

    #[test]
    fn recursion_above_fwt_cap() {
        let cfg = SolverConfig {
            fwt_cap: 6,
            ..Default::default()
        };
        let inst = LpnInstance::generate(14, Bias::HALF, 64, 3).unwrap();
        let key = inst.key.clone().unwrap();
        let (got, _) = recover_suffix(&inst.samples, &key.slice(0, 2), 14, inst.eps, &cfg).unwrap();
        assert_eq!(got, key);
    }

    #[test]
    fn shortfall_warning_is_attached() {
        let inst = LpnInstance::generate(8, Bias::new(1, 8).unwrap(), 20, 3).unwrap();
        let key = inst.key.clone().unwrap();
        let (_, warnings) = recover_suffix(
            &inst.samples,
            &key.slice(0, 4),
            8,
            inst.eps,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn infeasible_or_mismatched_plans_are_refused() {
        let inst = LpnInstance::generate(4, Bias::HALF, 16, 1).unwrap();
        let plan = make_plan(4, Bias::HALF, 4.0, PlanOverrides::default()).unwrap();
        assert!(!plan.feasible);
        assert!(matches!(
            solve(&inst, &plan, &SolverConfig::default()),
            Err(LpnError::InfeasiblePlan(_))
        ));
        let big = make_plan(
            4,
            Bias::HALF,
            6.0,
            PlanOverrides {
                w_int: Some(2),
                b_int: Some(1),
                l_prime: Some(0),
            },
        )
        .unwrap();
        assert!(solve(&inst, &big, &SolverConfig::default()).is_err());
    }

    #[test]
    fn resource_errors_name_their_stage() {
        let inst = LpnInstance::generate(30, Bias::HALF, 1 << 10, 1).unwrap();
        let plan = make_plan(
            30,
            Bias::HALF,
            10.0,
            PlanOverrides {
                w_int: Some(2),
                b_int: Some(2),
                l_prime: Some(0),
            },
        )
        .unwrap();
        let cfg = SolverConfig {
            max_spectrum_dim: 20,
            ..Default::default()
        };
        assert!(matches!(
            solve(&inst, &plan, &cfg),
            Err(LpnError::Resource { stage: "walsh", .. })
        ));
        let cfg = SolverConfig {
            max_halves: 100,
            ..Default::default()
        };
        assert!(matches!(
            solve(&inst, &plan, &cfg),
            Err(LpnError::Resource {
                stage: "combine",
                ..
            })
        ));
    }
}
