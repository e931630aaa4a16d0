use lpn_core::solver::acceptance_threshold;
use lpn_core::{
    build_spectrum, combine, desk_plan, make_plan, recover_suffix, seeded_rng, solve, verify_key,
    Bias, BitVec, LpnInstance, PlanOverrides, Sample, SolverConfig,
};

const HALVES: u64 = 1 << 26;

fn pinned(w: u32, b: u32, l: u32) -> PlanOverrides {
    PlanOverrides {
        w_int: Some(w),
        b_int: Some(b),
        l_prime: Some(l),
    }
}

fn rank(samples: &[Sample], n: usize) -> usize {
    let mut rows: Vec<u64> = samples.iter().map(|s| s.coeffs.low_bits(n)).collect();
    let mut r = 0;
    for bit in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && *row >> bit & 1 == 1 {
                *row ^= pivot;
            }
        }
        r += 1;
    }
    r
}

#[test]
fn combined_equations_carry_piled_up_noise() {
    let eps = Bias::new(1, 4).unwrap();
    let inst = LpnInstance::generate(20, eps, 1 << 13, 5).unwrap();
    let key = inst.key.clone().unwrap();
    let comb = combine(&inst.samples, eps, 2, 11, HALVES).unwrap();
    let m = comb.equations.len() as f64;
    assert!(m >= 1e4, "only {m} equations");
    let noisy = comb
        .equations
        .iter()
        .filter(|e| e.coeffs.inner_product(&key).unwrap() != e.rhs)
        .count() as f64;
    let p = 0.5 - comb.bias_f64();
    assert_eq!(comb.bias_f64(), 0.125);
    let sigma = (p * (1.0 - p) / m).sqrt();
    assert!(
        (noisy / m - p).abs() <= 4.0 * sigma,
        "rate {} vs {p}",
        noisy / m
    );
    for e in &comb.equations {
        assert!(e.coeffs.is_zero_from(9));
        assert_eq!(e.indices.len(), 2);
    }
}

#[test]
fn combine_count_tracks_expectation() {
    let eps = Bias::new(1, 8).unwrap();
    let expected = (1u64 << 14) as f64 * ((1u64 << 14) - 1) as f64 / 2.0 / (1u64 << 16) as f64;
    for seed in 0..20 {
        let inst = LpnInstance::generate(20, eps, 1 << 14, 40 + seed).unwrap();
        let comb = combine(&inst.samples, eps, 2, 16, HALVES).unwrap();
        let got = comb.equations.len() as f64;
        assert!(
            (0.5 * expected..=2.0 * expected).contains(&got),
            "seed {seed}: {got} vs {expected}"
        );
        assert!((comb.expected - expected).abs() < 1e-6);
    }
}

#[test]
fn walsh_stage_finds_reduced_key() {
    let eps = Bias::new(1, 4).unwrap();
    let mut hits = 0;
    for seed in 0..20 {
        let inst = LpnInstance::generate(16, eps, 1 << 11, 300 + seed).unwrap();
        let key = inst.key.clone().unwrap();
        let comb = combine(&inst.samples, eps, 2, 8, HALVES).unwrap();
        let spectrum = build_spectrum(&comb.equations, 8, 26).unwrap();
        if spectrum.best_candidate().index == key.low_bits(8) {
            hits += 1;
        }
    }
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn suffix_recovery_from_known_prefix() {
    let eps = Bias::new(1, 8).unwrap();
    let cfg = SolverConfig::default();
    let (mut ok, mut wrong_rejected) = (0, 0);
    for seed in 0..20 {
        let inst = LpnInstance::generate(24, eps, 1 << 12, 900 + seed).unwrap();
        let key = inst.key.clone().unwrap();
        let prefix = key.slice(0, 8);
        let (got, _) = recover_suffix(&inst.samples, &prefix, 24, eps, &cfg).unwrap();
        if got == key {
            ok += 1;
        }
        let mut bad = prefix.clone();
        bad.set(seed as usize % 8, !bad.get(seed as usize % 8));
        let (got, _) = recover_suffix(&inst.samples, &bad, 24, eps, &cfg).unwrap();
        let agreement = verify_key(&inst.samples, &got).unwrap();
        if got != key && agreement < acceptance_threshold(eps) {
            wrong_rejected += 1;
        }
    }
    assert!(ok >= 18, "{ok}/20");
    assert_eq!(wrong_rejected, 20);
}

#[test]
fn agreement_statistics() {
    let eps = Bias::new(1, 8).unwrap();
    let inst = LpnInstance::generate(32, eps, 10_000, 12).unwrap();
    let key = inst.key.clone().unwrap();
    let m = 10_000.0;
    let good = verify_key(&inst.samples, &key).unwrap();
    let p = 0.5 + eps.as_f64();
    assert!((good - p).abs() <= 4.0 * (p * (1.0 - p) / m).sqrt());
    let mut rng = seeded_rng(77);
    let other = BitVec::random(32, &mut rng);
    let bad = verify_key(&inst.samples, &other).unwrap();
    assert!((bad - 0.5).abs() <= 4.0 * (0.25 / m).sqrt());
    assert!(verify_key(&[], &key).is_err());
}

#[test]
fn more_samples_never_hurt() {
    let eps = Bias::new(1, 8).unwrap();
    let cfg = SolverConfig::default();
    let mut counts = Vec::new();
    for log_n in [10u32, 11, 13] {
        let plan = make_plan(16, eps, log_n as f64, pinned(2, 8, 0)).unwrap();
        let mut ok = 0;
        for seed in 0..10 {
            let inst = LpnInstance::generate(16, eps, 1 << log_n, 60 + seed).unwrap();
            let res = solve(&inst, &plan, &cfg).unwrap();
            if Some(&res.key_hat) == inst.key.as_ref() {
                ok += 1;
            }
        }
        counts.push(ok);
    }
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    assert!(counts[2] >= 9, "{counts:?}");
}

#[test]
fn repeated_solves_agree() {
    let eps = Bias::new(1, 8).unwrap();
    let plan = make_plan(20, eps, 14.0, pinned(2, 12, 0)).unwrap();
    let inst = LpnInstance::generate(20, eps, 1 << 14, 3).unwrap();
    let cfg = SolverConfig::default();
    let a = solve(&inst, &plan, &cfg).unwrap();
    let b = solve(&inst, &plan, &cfg).unwrap();
    assert_eq!(a.key_hat, b.key_hat);
    assert_eq!(a.agreement, b.agreement);
    assert_eq!(a.success, b.success);
    assert_eq!(
        (
            a.report.equations,
            a.report.halves,
            a.report.best_score,
            a.report.second_score
        ),
        (
            b.report.equations,
            b.report.halves,
            b.report.best_score,
            b.report.second_score
        )
    );
    assert_eq!(inst, LpnInstance::generate(20, eps, 1 << 14, 3).unwrap());
}

#[test]
fn noiseless_full_rank_is_always_solved() {
    let cfg = SolverConfig::default();
    for n in 4..=24usize {
        let count = 4 * n;
        let log_n = (count as f64).log2();
        let plan = desk_plan(
            n,
            Bias::HALF,
            log_n,
            PlanOverrides {
                l_prime: Some(0),
                ..Default::default()
            },
        )
        .unwrap();
        for seed in 0..5 {
            let inst = LpnInstance::generate(n, Bias::HALF, count, 1000 * n as u64 + seed).unwrap();
            if rank(&inst.samples, n) < n {
                continue;
            }
            let res = solve(&inst, &plan, &cfg).unwrap();
            assert_eq!(
                Some(&res.key_hat),
                inst.key.as_ref(),
                "n = {n}, seed {seed}"
            );
            assert_eq!(res.agreement, 1.0);
            assert!(res.success);
        }
    }
}

#[test]
fn wider_combinations_pile_up() {
    // w' = 4 at eps = 1/2 per sample: combined equations stay noiseless.
    let inst = LpnInstance::generate(14, Bias::HALF, 64, 8).unwrap();
    let key = inst.key.clone().unwrap();
    let comb = combine(&inst.samples, Bias::HALF, 4, 6, HALVES).unwrap();
    assert!(!comb.equations.is_empty());
    assert_eq!(comb.bias_f64(), 0.5);
    assert!(comb
        .equations
        .iter()
        .all(|e| e.coeffs.inner_product(&key).unwrap() == e.rhs && e.indices.len() == 4));

    let eps = Bias::new(1, 4).unwrap();
    let mut rng = seeded_rng(21);
    let key = BitVec::random(12, &mut rng);
    let inst = LpnInstance::generate_with_key(key.clone(), eps, 160, 22).unwrap();
    let comb = combine(&inst.samples, eps, 4, 4, HALVES).unwrap();
    let m = comb.equations.len() as f64;
    let noisy = comb
        .equations
        .iter()
        .filter(|e| e.coeffs.inner_product(&key).unwrap() != e.rhs)
        .count() as f64;
    let p = 0.5 - comb.bias_f64();
    assert_eq!(comb.bias_f64(), 8.0 / 256.0);
    // Combinations share samples, so allow a wider band than 4 sigma.
    assert!(m > 1e4);
    assert!((noisy / m - p).abs() <= 0.02, "rate {} vs {p}", noisy / m);
}
